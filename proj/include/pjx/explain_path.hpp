#pragma once

#include <cstddef>
#include <random>
#include <vector>

#include "pjx/answer_path.hpp"
#include "pjx/model_config.hpp"
#include "pjx/nn.hpp"
#include "pjx/types.hpp"

namespace pjx {

struct ExplanationOutput {
  TokenSequence tokens;              // BOS and EOS excluded
  AttentionMap attention;            // pointX map that conditioned the decode
  std::vector<double> step_logprobs; // one per decoding step, EOS step included
  double logprob = 0.0;              // sum of step_logprobs
  bool terminated_by_eos = false;
};

enum class DecodeMode { kGreedy, kBeam };

struct DecodeOptions {
  DecodeMode mode = DecodeMode::kGreedy;
  std::size_t beam_size = 1;
  std::size_t max_len = 20;
};

// Answer-conditioned explanatory attention (pointX) and the justification
// decoder. Parameters are registered under "explain.*" and never shared with
// the answer path.
class ExplainPath {
 public:
  ExplainPath(const ModelConfig& config, ParameterSet& params, Rng& rng);

  // W6 tanh(W5 y + b5) + b6 for one-hot rows y of [B, |Y|], giving [B, d].
  // Throws ContractError for an all-zero row. When the model is built
  // without answer conditioning this returns ones instead.
  Tensor embed_answer(const Tensor& answers) const;
  Tensor one_hot_answers(const std::vector<std::size_t>& labels) const;

  // Per-location (W7 product + b7) (.) answer embedding, signed sqrt, L2,
  // dropout, W9 relu(W8 . + b8) + b9, softmax over locations: [B, L].
  Tensor compute_explanation_attention(const PooledGrid& pooled, const Tensor& answer_embedding,
                                       const ForwardContext& ctx) const;

  // (W10 sum_l alpha_l f^I_l + b10) (.) (W11 f^Q + b11) (.) answer embedding, [B, d].
  Tensor fuse_features(const Tensor& features, const Tensor& attention, const Tensor& question,
                       const Tensor& answer_embedding) const;

  // Teacher-forced decoding. `inputs[t][b]` is the word fed at step t (BOS
  // first); returns per-step log-probabilities [B, V].
  std::vector<Tensor> teacher_forced(const Tensor& fused, const std::vector<std::vector<std::size_t>>& inputs) const;

  // Free-running decode of a single example (fused is [1, d]). Throws
  // ParameterError when beam_size < 1 or max_len < 1.
  ExplanationOutput decode(const Tensor& fused, const DecodeOptions& options) const;

  const ModelConfig& config() const { return config_; }

 private:
  struct StepOutput {
    Tensor logprobs;
    LstmState state;
  };
  StepOutput step(const Tensor& fused, const std::vector<std::size_t>& prev_words, const LstmState& state) const;
  ExplanationOutput decode_greedy(const Tensor& fused, std::size_t max_len) const;
  ExplanationOutput decode_beam(const Tensor& fused, std::size_t beam_size, std::size_t max_len) const;

  ModelConfig config_;
  Linear answer_hidden_;  // W5
  Linear answer_out_;     // W6
  Linear pool_project_;   // W7
  Linear att_hidden_;     // W8
  Linear att_logit_;      // W9
  Linear visual_fuse_;    // W10
  Linear question_fuse_;  // W11
  Tensor word_embedding_;
  LstmParams decoder_;
  Linear word_out_;       // W_pred
};

}  // namespace pjx
