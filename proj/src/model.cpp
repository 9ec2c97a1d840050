#include "pjx/model.hpp"

#include <algorithm>

#include "pjx/errors.hpp"
#include "pjx/ops.hpp"

namespace pjx {

ModelBatch make_batch(const std::vector<const SpatialFeatures*>& features,
                      const std::vector<TokenSequence>& questions) {
  if (features.empty() || features.size() != questions.size()) {
    throw ContractError("make_batch: need one question per feature grid");
  }
  const auto C = features[0]->channels;
  const auto L = features[0]->locations();
  std::vector<double> values;
  values.reserve(features.size() * L * C);
  for (const auto* f : features) {
    if (f->channels != C || f->locations() != L) throw DimensionError("make_batch: feature grids differ in shape");
    auto lm = f->location_major();
    values.insert(values.end(), lm.begin(), lm.end());
  }
  return {Tensor::from({features.size() * L, C}, std::move(values)), questions};
}

PjxModel::PjxModel(const ModelConfig& config, std::uint64_t seed)
    : config_(config), init_rng_(seed), answer_(config, params_, init_rng_), explain_(config, params_, init_rng_) {}

bool PjxModel::is_answer_parameter(const std::string& name) { return name.rfind("answer.", 0) == 0; }

ForwardResult PjxModel::forward_answer(const ModelBatch& batch, const ForwardContext& ctx) const {
  ForwardResult r;
  r.question = answer_.encode_question(batch.questions);
  r.pooled = answer_.pool_multimodal(batch.features, r.question, ctx);
  r.answer_attention = answer_.compute_answer_attention(r.pooled);
  r.answer_probs = answer_.predict_answer(r.pooled.embedded, r.question, r.answer_attention);
  return r;
}

ForwardResult PjxModel::forward(const ModelBatch& batch, const std::vector<std::size_t>& condition_on,
                                const ForwardContext& ctx) const {
  if (condition_on.size() != batch.size()) throw ContractError("forward: one conditioning answer per example");
  auto r = forward_answer(batch, ctx);
  r.answer_embedding = explain_.embed_answer(explain_.one_hot_answers(condition_on));
  r.explain_attention = explain_.compute_explanation_attention(r.pooled, r.answer_embedding, ctx);
  r.fused = explain_.fuse_features(batch.features, r.explain_attention, r.question, r.answer_embedding);
  return r;
}

ExplainResult PjxModel::explain(const SpatialFeatures& features, const TokenSequence& question,
                                const DecodeOptions& options, std::optional<std::size_t> forced_answer) const {
  validate_features(features);
  if (features.channels != config_.feature_channels || features.rows != config_.grid_rows ||
      features.cols != config_.grid_cols) {
    throw DimensionError("explain: features " + std::to_string(features.channels) + "x" +
                         std::to_string(features.rows) + "x" + std::to_string(features.cols) +
                         " do not match the model configuration");
  }
  NoGradGuard no_grad;
  const auto batch = make_batch({&features}, {question});
  const auto ctx = ForwardContext::eval();
  auto r = forward_answer(batch, ctx);

  ExplainResult out;
  out.answer = make_answer_distribution({r.answer_probs.values().begin(), r.answer_probs.values().end()});
  out.answer_attention = attention_row(r.answer_attention, 0, config_.grid_rows, config_.grid_cols);

  const auto condition = forced_answer.value_or(out.answer.best);
  r.answer_embedding = explain_.embed_answer(explain_.one_hot_answers({condition}));
  r.explain_attention = explain_.compute_explanation_attention(r.pooled, r.answer_embedding, ctx);
  r.fused = explain_.fuse_features(batch.features, r.explain_attention, r.question, r.answer_embedding);

  out.explanation = explain_.decode(r.fused, options);
  out.explanation.attention = attention_row(r.explain_attention, 0, config_.grid_rows, config_.grid_cols);
  return out;
}

AttentionMap attention_row(const Tensor& attention, std::size_t row, std::size_t grid_rows, std::size_t grid_cols) {
  const auto L = grid_rows * grid_cols;
  if (attention.cols() != L) throw DimensionError("attention_row: width does not match grid");
  AttentionMap map{grid_rows, grid_cols, {}};
  map.cells.assign(attention.values().begin() + static_cast<std::ptrdiff_t>(row * L),
                   attention.values().begin() + static_cast<std::ptrdiff_t>((row + 1) * L));
  return map;
}

}  // namespace pjx
