#include "pjx/answer_path.hpp"

#include <algorithm>

#include "pjx/errors.hpp"
#include "pjx/ops.hpp"

namespace pjx {

AnswerPath::AnswerPath(const ModelConfig& config, ParameterSet& params, Rng& rng) : config_(config) {
  config_.validate();
  const auto H = config_.question_hidden;
  word_embedding_ = make_embedding(params, "answer.question_embedding", config_.question_vocab, config_.word_embed, rng);
  for (std::size_t layer = 0; layer < config_.question_layers; ++layer) {
    const auto in = layer == 0 ? config_.word_embed : H;
    encoder_.push_back(make_lstm(params, "answer.encoder" + std::to_string(layer), in, H, rng));
  }
  image_embed_ = make_linear(params, "answer.w1", config_.feature_channels, H, rng);
  att_hidden_ = make_linear(params, "answer.w2", H, config_.attention_hidden, rng);
  att_logit_ = make_linear(params, "answer.w3", config_.attention_hidden, 1, rng);
  classifier_ = make_linear(params, "answer.w4", H, config_.answer_count, rng);
}

Tensor AnswerPath::encode_question(const std::vector<TokenSequence>& questions) const {
  const auto B = questions.size();
  const auto H = config_.question_hidden;
  if (B == 0) throw InputError("encode_question: empty batch");
  if (config_.activity_mode) return Tensor::full({B, H}, 1.0);

  std::size_t T = 0;
  bool ragged = false;
  for (const auto& q : questions) {
    if (q.empty()) throw InputError("encode_question: empty question in question mode");
    if (T != 0 && q.size() != T) ragged = true;
    T = std::max(T, q.size());
  }
  std::vector<LstmState> states(encoder_.size(), LstmState{Tensor::zeros({B, H}), Tensor::zeros({B, H})});
  std::vector<std::size_t> ids(B);
  for (std::size_t t = 0; t < T; ++t) {
    for (std::size_t b = 0; b < B; ++b) {
      const auto id = t < questions[b].size() ? questions[b][t] : kPadId;
      ids[b] = id < config_.question_vocab ? id : kUnkId;
    }
    Tensor input = gather_rows(word_embedding_, ids);
    // Examples whose question has ended keep their previous state.
    Tensor keep;
    if (ragged) {
      std::vector<double> mask(B);
      for (std::size_t b = 0; b < B; ++b) mask[b] = t < questions[b].size() ? 1.0 : 0.0;
      keep = Tensor::from({B, 1}, std::move(mask));
    }
    for (std::size_t layer = 0; layer < encoder_.size(); ++layer) {
      auto next = lstm_step(input, states[layer], encoder_[layer]);
      if (keep.defined()) {
        next.h = add(states[layer].h, ewise_mul(sub(next.h, states[layer].h), keep));
        next.c = add(states[layer].c, ewise_mul(sub(next.c, states[layer].c), keep));
      }
      states[layer] = next;
      input = next.h;
    }
  }
  return states.back().h;
}

PooledGrid AnswerPath::pool_multimodal(const Tensor& features, const Tensor& question,
                                       const ForwardContext& ctx) const {
  const auto L = config_.locations();
  if (features.rank() != 2 || features.cols() != config_.feature_channels || features.rows() % L != 0) {
    throw DimensionError("pool_multimodal: features " + shape_string(features.shape()) + " do not match " +
                         std::to_string(L) + " locations x " + std::to_string(config_.feature_channels) +
                         " channels");
  }
  const auto B = features.rows() / L;
  if (question.rank() != 2 || question.rows() != B || question.cols() != config_.question_hidden) {
    throw DimensionError("pool_multimodal: question encoding " + shape_string(question.shape()) +
                         " does not match batch " + std::to_string(B) + " x " +
                         std::to_string(config_.question_hidden));
  }
  PooledGrid out;
  out.batch = B;
  out.locations = L;
  out.embedded = image_embed_(features);
  out.product = ewise_mul(out.embedded, question);
  auto normalized = l2_normalize(signed_sqrt(out.product));
  if (ctx.training && ctx.dropout > 0.0) {
    if (!ctx.rng) throw ContractError("pool_multimodal: training dropout needs an rng");
    normalized = dropout(normalized, ctx.dropout, true, *ctx.rng);
  }
  out.normalized = normalized;
  return out;
}

Tensor AnswerPath::answer_attention_logits(const PooledGrid& pooled) const {
  auto logits = att_logit_(relu(att_hidden_(pooled.normalized)));
  return reshape(logits, {pooled.batch, pooled.locations});
}

Tensor AnswerPath::compute_answer_attention(const PooledGrid& pooled) const {
  return softmax(answer_attention_logits(pooled), 1);
}

Tensor AnswerPath::predict_answer(const Tensor& embedded, const Tensor& question, const Tensor& attention) const {
  auto attended = attend(attention, embedded);
  return softmax(classifier_(ewise_mul(attended, question)), 1);
}

}  // namespace pjx
