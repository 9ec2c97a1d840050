#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "pjx/answer_path.hpp"
#include "pjx/explain_path.hpp"
#include "pjx/model_config.hpp"
#include "pjx/nn.hpp"
#include "pjx/types.hpp"

namespace pjx {

// One batch of model inputs. Features are [B*L, C] location-major.
struct ModelBatch {
  Tensor features;
  std::vector<TokenSequence> questions;
  std::size_t size() const { return questions.size(); }
};

ModelBatch make_batch(const std::vector<const SpatialFeatures*>& features,
                      const std::vector<TokenSequence>& questions);

// Everything a batched forward pass produces.
struct ForwardResult {
  Tensor question;            // [B, H]
  PooledGrid pooled;
  Tensor answer_attention;    // [B, L]
  Tensor answer_probs;        // [B, |Y|]
  Tensor answer_embedding;    // [B, d]
  Tensor explain_attention;   // [B, L]
  Tensor fused;               // [B, d]
};

struct ExplainResult {
  AnswerDistribution answer;
  ExplanationOutput explanation;  // carries the pointX map
  AttentionMap answer_attention;  // pointA
};

// The full pointing-and-justification model: both paths plus the shared
// parameter registry. Non-copyable because paths hold handles into `params`.
class PjxModel {
 public:
  PjxModel(const ModelConfig& config, std::uint64_t seed);
  PjxModel(const PjxModel&) = delete;
  PjxModel& operator=(const PjxModel&) = delete;

  const ModelConfig& config() const { return config_; }
  ParameterSet& params() { return params_; }
  const ParameterSet& params() const { return params_; }
  const AnswerPath& answer_path() const { return answer_; }
  const ExplainPath& explain_path() const { return explain_; }

  static bool is_answer_parameter(const std::string& name);

  // Answer path only.
  ForwardResult forward_answer(const ModelBatch& batch, const ForwardContext& ctx) const;
  // Full pass; the explanation branch is conditioned on `condition_on`
  // (gold labels in training, predictions at inference).
  ForwardResult forward(const ModelBatch& batch, const std::vector<std::size_t>& condition_on,
                        const ForwardContext& ctx) const;

  // Inference on one example: answer, then an explanation conditioned on the
  // predicted answer, or on `forced_answer` when given.
  ExplainResult explain(const SpatialFeatures& features, const TokenSequence& question,
                        const DecodeOptions& options = {},
                        std::optional<std::size_t> forced_answer = std::nullopt) const;

 private:
  ModelConfig config_;
  ParameterSet params_;
  Rng init_rng_;  // only consumed during construction
  AnswerPath answer_;
  ExplainPath explain_;
};

AttentionMap attention_row(const Tensor& attention, std::size_t row, std::size_t grid_rows, std::size_t grid_cols);

}  // namespace pjx
