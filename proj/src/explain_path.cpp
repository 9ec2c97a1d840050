#include "pjx/explain_path.hpp"

#include <algorithm>
#include <limits>
#include <numeric>

#include "pjx/errors.hpp"
#include "pjx/ops.hpp"

namespace pjx {

ExplainPath::ExplainPath(const ModelConfig& config, ParameterSet& params, Rng& rng) : config_(config) {
  config_.validate();
  const auto d = config_.answer_embed;
  answer_hidden_ = make_linear(params, "explain.w5", config_.answer_count, d, rng);
  answer_out_ = make_linear(params, "explain.w6", d, d, rng);
  pool_project_ = make_linear(params, "explain.w7", config_.question_hidden, d, rng);
  att_hidden_ = make_linear(params, "explain.w8", d, config_.attention_hidden, rng);
  att_logit_ = make_linear(params, "explain.w9", config_.attention_hidden, 1, rng);
  visual_fuse_ = make_linear(params, "explain.w10", config_.feature_channels, d, rng);
  question_fuse_ = make_linear(params, "explain.w11", config_.question_hidden, d, rng);
  word_embedding_ =
      make_embedding(params, "explain.word_embedding", config_.explanation_vocab, config_.decoder_embed, rng);
  decoder_ = make_lstm(params, "explain.decoder", d + config_.decoder_embed, config_.decoder_hidden, rng);
  word_out_ = make_linear(params, "explain.w_pred", config_.decoder_hidden, config_.explanation_vocab, rng);
}

Tensor ExplainPath::one_hot_answers(const std::vector<std::size_t>& labels) const {
  const auto Y = config_.answer_count;
  std::vector<double> v(labels.size() * Y, 0.0);
  for (std::size_t b = 0; b < labels.size(); ++b) {
    if (labels[b] >= Y) throw InputError("answer label " + std::to_string(labels[b]) + " out of range");
    v[b * Y + labels[b]] = 1.0;
  }
  return Tensor::from({labels.size(), Y}, std::move(v));
}

Tensor ExplainPath::embed_answer(const Tensor& answers) const {
  if (answers.rank() != 2 || answers.cols() != config_.answer_count) {
    throw DimensionError("embed_answer: expected [B, " + std::to_string(config_.answer_count) + "], got " +
                         shape_string(answers.shape()));
  }
  const auto B = answers.rows(), Y = answers.cols();
  for (std::size_t b = 0; b < B; ++b) {
    bool any = false;
    for (std::size_t y = 0; y < Y; ++y) any = any || answers.values()[b * Y + y] != 0.0;
    if (!any) throw ContractError("embed_answer: answer row " + std::to_string(b) + " is all zero");
  }
  if (!config_.answer_conditioned) return Tensor::full({B, config_.answer_embed}, 1.0);
  return answer_out_(tanh(answer_hidden_(answers)));
}

Tensor ExplainPath::compute_explanation_attention(const PooledGrid& pooled, const Tensor& answer_embedding,
                                                  const ForwardContext& ctx) const {
  if (answer_embedding.rank() != 2 || answer_embedding.rows() != pooled.batch ||
      answer_embedding.cols() != config_.answer_embed) {
    throw DimensionError("compute_explanation_attention: answer embedding " + shape_string(answer_embedding.shape()));
  }
  auto joint = ewise_mul(pool_project_(pooled.product), answer_embedding);
  auto normalized = l2_normalize(signed_sqrt(joint));
  if (ctx.training && ctx.dropout > 0.0) {
    if (!ctx.rng) throw ContractError("compute_explanation_attention: training dropout needs an rng");
    normalized = dropout(normalized, ctx.dropout, true, *ctx.rng);
  }
  auto logits = att_logit_(relu(att_hidden_(normalized)));
  return softmax(reshape(logits, {pooled.batch, pooled.locations}), 1);
}

Tensor ExplainPath::fuse_features(const Tensor& features, const Tensor& attention, const Tensor& question,
                                  const Tensor& answer_embedding) const {
  auto visual = visual_fuse_(attend(attention, features));
  auto textual = question_fuse_(question);
  return ewise_mul(ewise_mul(visual, textual), answer_embedding);
}

ExplainPath::StepOutput ExplainPath::step(const Tensor& fused, const std::vector<std::size_t>& prev_words,
                                          const LstmState& state) const {
  std::vector<std::size_t> ids(prev_words.size());
  for (std::size_t i = 0; i < ids.size(); ++i) {
    ids[i] = prev_words[i] < config_.explanation_vocab ? prev_words[i] : kUnkId;
  }
  auto input = concat_cols(fused, gather_rows(word_embedding_, ids));
  auto next = lstm_step(input, state, decoder_);
  return {log_softmax(word_out_(next.h)), next};
}

std::vector<Tensor> ExplainPath::teacher_forced(const Tensor& fused,
                                                const std::vector<std::vector<std::size_t>>& inputs) const {
  const auto B = fused.rows();
  const auto H = config_.decoder_hidden;
  LstmState state{Tensor::zeros({B, H}), Tensor::zeros({B, H})};
  std::vector<Tensor> out;
  out.reserve(inputs.size());
  for (const auto& words : inputs) {
    if (words.size() != B) throw DimensionError("teacher_forced: step width does not match batch");
    auto s = step(fused, words, state);
    out.push_back(s.logprobs);
    state = s.state;
  }
  return out;
}

ExplanationOutput ExplainPath::decode(const Tensor& fused, const DecodeOptions& options) const {
  if (options.max_len < 1) throw ParameterError("decode: max_len must be >= 1");
  if (fused.rank() != 2 || fused.rows() != 1 || fused.cols() != config_.answer_embed) {
    throw DimensionError("decode: fused feature must be [1, " + std::to_string(config_.answer_embed) + "], got " +
                         shape_string(fused.shape()));
  }
  if (options.mode == DecodeMode::kGreedy) return decode_greedy(fused, options.max_len);
  if (options.beam_size < 1) throw ParameterError("decode: beam size must be >= 1");
  return decode_beam(fused, options.beam_size, options.max_len);
}

ExplanationOutput ExplainPath::decode_greedy(const Tensor& fused, std::size_t max_len) const {
  NoGradGuard no_grad;
  const auto H = config_.decoder_hidden;
  LstmState state{Tensor::zeros({1, H}), Tensor::zeros({1, H})};
  ExplanationOutput out;
  std::size_t prev = kBosId;
  for (std::size_t t = 0; t < max_len; ++t) {
    auto s = step(fused, {prev}, state);
    state = s.state;
    std::vector<double> row(s.logprobs.values().begin(), s.logprobs.values().end());
    const auto word = argmax_index(row);
    out.step_logprobs.push_back(row[word]);
    out.logprob += row[word];
    if (word == kEosId) {
      out.terminated_by_eos = true;
      break;
    }
    out.tokens.push_back(word);
    prev = word;
  }
  return out;
}

ExplanationOutput ExplainPath::decode_beam(const Tensor& fused, std::size_t beam_size, std::size_t max_len) const {
  NoGradGuard no_grad;
  const auto H = config_.decoder_hidden;
  const auto V = config_.explanation_vocab;

  struct Hypothesis {
    TokenSequence tokens;
    std::vector<double> step_logprobs;
    double score = 0.0;
    std::size_t state_row = 0;  // row in the batched state of the previous step
    bool eos = false;
  };
  // The greedy decode is the starting incumbent, so widening the beam can
  // never return a lower-scoring explanation than beam size 1.
  const auto greedy = decode_greedy(fused, max_len);
  std::vector<Hypothesis> finished{{greedy.tokens, greedy.step_logprobs, greedy.logprob, 0, greedy.terminated_by_eos}};
  std::vector<Hypothesis> active(1);
  LstmState state{Tensor::zeros({1, H}), Tensor::zeros({1, H})};

  auto best_finished = [&] {
    double s = -std::numeric_limits<double>::infinity();
    for (const auto& h : finished) s = std::max(s, h.score);
    return s;
  };

  for (std::size_t t = 0; t < max_len && !active.empty(); ++t) {
    // Scores only fall as hypotheses grow, so no active one can overtake.
    double best_active = -std::numeric_limits<double>::infinity();
    for (const auto& h : active) best_active = std::max(best_active, h.score);
    if (best_finished() >= best_active) break;

    // Advance all active hypotheses as one batch.
    const auto A = active.size();
    std::vector<double> h(A * H), c(A * H), f(A * fused.cols());
    std::vector<std::size_t> prev(A);
    for (std::size_t a = 0; a < A; ++a) {
      const auto& hyp = active[a];
      std::copy_n(state.h.values().data() + hyp.state_row * H, H, h.data() + a * H);
      std::copy_n(state.c.values().data() + hyp.state_row * H, H, c.data() + a * H);
      std::copy_n(fused.values().data(), fused.cols(), f.data() + a * fused.cols());
      prev[a] = hyp.tokens.empty() ? kBosId : hyp.tokens.back();
    }
    auto s = step(Tensor::from({A, fused.cols()}, std::move(f)), prev,
                  {Tensor::from({A, H}, std::move(h)), Tensor::from({A, H}, std::move(c))});

    struct Candidate {
      double score;
      std::size_t order;  // deterministic tie-break: (hypothesis, word)
      std::size_t row;
      std::size_t word;
    };
    // Each hypothesis proposes its `beam_size` best next words. A proposed
    // EOS finishes that hypothesis without taking a beam slot; the other
    // proposals compete for the `beam_size` active slots.
    std::vector<Candidate> candidates;
    std::vector<std::size_t> words(V);
    const auto per_hyp = std::min(beam_size, V);
    for (std::size_t a = 0; a < A; ++a) {
      const double* row = s.logprobs.values().data() + a * V;
      std::iota(words.begin(), words.end(), std::size_t{0});
      std::partial_sort(words.begin(), words.begin() + static_cast<std::ptrdiff_t>(per_hyp), words.end(),
                        [&](std::size_t x, std::size_t y) { return row[x] != row[y] ? row[x] > row[y] : x < y; });
      for (std::size_t k = 0; k < per_hyp; ++k) {
        candidates.push_back({active[a].score + row[words[k]], a * V + words[k], a, words[k]});
      }
    }
    std::sort(candidates.begin(), candidates.end(), [](const Candidate& x, const Candidate& y) {
      if (x.score != y.score) return x.score > y.score;
      return x.order < y.order;
    });

    std::vector<Hypothesis> next;
    for (const auto& cand : candidates) {
      if (cand.word != kEosId && next.size() == beam_size) continue;
      Hypothesis hyp = active[cand.row];
      hyp.step_logprobs.push_back(s.logprobs.values()[cand.row * V + cand.word]);
      hyp.score = cand.score;
      hyp.state_row = cand.row;
      if (cand.word == kEosId) {
        hyp.eos = true;
        finished.push_back(std::move(hyp));
      } else {
        hyp.tokens.push_back(cand.word);
        next.push_back(std::move(hyp));
      }
    }
    active = std::move(next);
    state = s.state;
  }

  // Highest summed log-probability, earliest found on ties; hypotheses still
  // active end at max_len.
  const Hypothesis* best = &finished.front();
  for (const auto* pool : {&finished, &active}) {
    for (const auto& h : *pool) {
      if (h.score > best->score) best = &h;
    }
  }
  ExplanationOutput out;
  out.tokens = best->tokens;
  out.step_logprobs = best->step_logprobs;
  out.logprob = best->score;
  out.terminated_by_eos = best->eos;
  return out;
}

}  // namespace pjx
