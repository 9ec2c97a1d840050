#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "pjx/data/dataset.hpp"
#include "pjx/eval/text_metrics.hpp"
#include "pjx/model.hpp"

namespace pjx {

struct ModelMaps {
  std::string id;
  AttentionMap answer_att;   // pointA
  AttentionMap explain_att;  // pointX
};

struct GroundTruthMap {
  std::string id;
  AttentionMap gt;
};

struct PointingStats {
  double mean_emd = 0.0;
  double mean_rank_correlation = 0.0;
  std::size_t degenerate = 0;  // pairs whose rank correlation was forced to 0
  double mean_mass_on_gt = 0.0;   // attention mass on cells where the GT is positive
  double hottest_on_gt = 0.0;     // percent of maps whose hottest cell is GT-positive
};

struct PointingReport {
  std::size_t count = 0;
  std::size_t baseline_grid = 20;
  PointingStats answer_att;
  PointingStats explain_att;
  PointingStats random_point;
  PointingStats uniform;
  PointingStats answer_vs_explain;  // pointA against pointX; GT-mass fields unused
};

// Compares both model maps and the random-point / uniform baselines (drawn on
// a `baseline_grid` square grid) against the ground truth. EMD is measured in
// cells of the ground-truth grid. Every model id must have exactly one
// ground-truth map and vice versa; otherwise ContractError.
PointingReport evaluate_pointing(const std::vector<ModelMaps>& model, const std::vector<GroundTruthMap>& gt,
                                 std::uint64_t seed, std::size_t baseline_grid = 20);

struct TextReport {
  std::size_t count = 0;
  double bleu4 = 0.0;  // corpus level
  double rouge_l = 0.0;
  double cider = 0.0;
  double exact_match = 0.0;     // percent of candidates equal to one of their references
  double duplicate_rate = 0.0;  // percent copied verbatim from training explanations
};

TextReport evaluate_text(const std::vector<Tokens>& candidates, const std::vector<std::vector<Tokens>>& references,
                         const std::vector<Tokens>& training_sentences);

// Model output for one example.
struct Prediction {
  std::string id;
  std::string answer;
  double answer_prob = 0.0;
  Tokens explanation;
  double logprob = 0.0;
  AttentionMap answer_att;
  AttentionMap explain_att;
};

nlohmann::json prediction_to_json(const Prediction& p);

// Runs the model on every example. With `condition_on_gold` the explanation is
// conditioned on the gold label instead of the predicted one (examples
// without a known label fall back to the prediction).
std::vector<Prediction> predict(const PjxModel& model, const std::vector<EncodedExample>& examples,
                                const Vocabularies& vocabs, const DecodeOptions& options,
                                bool condition_on_gold = false);

struct EvalReport {
  std::string split;
  std::size_t examples = 0;
  double accuracy = 0.0;
  TextReport text;
  std::optional<PointingReport> pointing;  // present when every example has a GT map
};

EvalReport evaluate_predictions(const std::vector<Prediction>& predictions,
                                const std::vector<EncodedExample>& examples,
                                const std::vector<Tokens>& training_sentences, std::uint64_t seed,
                                const std::string& split = "test");

nlohmann::json report_to_json(const EvalReport& report);
// Aligned plain-text tables: text metrics, then pointing metrics.
std::string format_report(const EvalReport& report);

}  // namespace pjx
