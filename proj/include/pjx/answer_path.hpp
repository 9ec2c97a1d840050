#pragma once

#include <cstddef>
#include <random>
#include <vector>

#include "pjx/model_config.hpp"
#include "pjx/nn.hpp"
#include "pjx/tensor.hpp"

namespace pjx {

using TokenSequence = std::vector<std::size_t>;

// Intermediate grids of the multimodal pooling step. Rows are
// example-major spatial locations: row b * L + l.
struct PooledGrid {
  Tensor embedded;    // W1 f^I + b1,                  [B*L, H]
  Tensor product;     // embedded (.) f^Q,             [B*L, H]
  Tensor normalized;  // dropout(L2(signed_sqrt(.))),  [B*L, H]
  std::size_t batch = 0;
  std::size_t locations = 0;
};

// Question-conditioned answering with spatial attention (pointA).
//
// Parameters are registered under "answer.*". All batched entry points take
// features as a [B*L, C] location-major tensor.
class AnswerPath {
 public:
  AnswerPath(const ModelConfig& config, ParameterSet& params, Rng& rng);

  // Final top-layer hidden state of a 2-layer LSTM over the embedded tokens,
  // [B, H]. Ids outside the vocabulary read as UNK. In activity mode returns
  // ones and ignores the tokens. Throws InputError on an empty question in
  // question mode.
  Tensor encode_question(const std::vector<TokenSequence>& questions) const;

  PooledGrid pool_multimodal(const Tensor& features, const Tensor& question, const ForwardContext& ctx) const;

  // Per-location logits W3 relu(W2 f^IQ + b2) + b3, as [B, L].
  Tensor answer_attention_logits(const PooledGrid& pooled) const;
  // Softmax of the logits over all L locations of each example, [B, L].
  Tensor compute_answer_attention(const PooledGrid& pooled) const;

  // softmax(W4 ((sum_l alpha_l * embedded_l) (.) f^Q) + b4), [B, |Y|].
  Tensor predict_answer(const Tensor& embedded, const Tensor& question, const Tensor& attention) const;

  const ModelConfig& config() const { return config_; }

 private:
  ModelConfig config_;
  Tensor word_embedding_;
  std::vector<LstmParams> encoder_;
  Linear image_embed_;   // W1
  Linear att_hidden_;    // W2
  Linear att_logit_;     // W3
  Linear classifier_;    // W4
};

}  // namespace pjx
