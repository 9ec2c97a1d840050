#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "json.hpp"
#include "pjx/data/dataset.hpp"
#include "pjx/model.hpp"
#include "pjx/random.hpp"

namespace pjx {

// freeze-answer: the answer path is held fixed and only the explanation branch
//   learns; finetune: both paths learn the summed loss; joint: same update as
//   finetune, intended for training from scratch (activity mode). Any regime
//   may start with `pretrain_epochs` of answer-only training.
enum class Regime { kFreezeAnswer, kFinetune, kJoint };

std::string regime_name(Regime r);
Regime parse_regime(const std::string& name);

struct TrainConfig {
  double learning_rate = 1e-3;
  std::size_t batch_size = 32;
  std::size_t epochs = 10;
  std::size_t pretrain_epochs = 0;
  std::uint64_t seed = 1;
  Regime regime = Regime::kJoint;
  double dropout = 0.0;
  double clip_norm = 5.0;  // 0 disables clipping
  double answer_weight = 1.0;
  double explanation_weight = 1.0;

  // Throws ConfigError naming the offending key.
  void validate() const;
  // Sets one key from its textual value. Throws ConfigError for unknown keys
  // or unparsable values.
  void set(const std::string& key, const std::string& value);
};

void to_json(nlohmann::json& j, const TrainConfig& c);

// One `key = value` line of a config file.
struct ConfigEntry {
  std::string key;
  std::string value;
  std::size_t line = 0;
};

// Plain `key = value` lines; '#' starts a comment, blank lines are skipped.
// Throws ConfigError for a line without '='.
std::vector<ConfigEntry> parse_key_values(std::istream& in);
std::vector<ConfigEntry> read_key_values(const std::filesystem::path& path);

bool is_train_config_key(const std::string& key);

// Adaptive moment estimation with per-parameter step counts, so parameters
// that sit out some updates still get correct bias correction.
class Adam {
 public:
  explicit Adam(double learning_rate, double beta1 = 0.9, double beta2 = 0.999, double epsilon = 1e-8);

  // Updates every parameter for which `selected(name)` holds, reading its
  // current gradient.
  void step(ParameterSet& params, const std::function<bool(const std::string&)>& selected);

  double learning_rate() const { return lr_; }

 private:
  struct Moments {
    std::vector<double> m, v;
    std::size_t t = 0;
  };
  double lr_, beta1_, beta2_, eps_;
  std::map<std::string, Moments> state_;
};

// Mean over the batch of -log max(p[gold], 1e-12). Throws InputError when a
// label is outside [0, |Y|).
Tensor answer_loss(const Tensor& probs, const std::vector<std::size_t>& gold);
double answer_loss(const AnswerDistribution& pred, std::size_t gold);

// Teacher-forced decoder inputs and targets for a batch of word sequences.
struct TeacherForcing {
  std::vector<std::vector<std::size_t>> inputs;  // [T][B]: BOS, w1, ..., padded with PAD
  std::vector<std::vector<std::size_t>> gold;    // [B][T]: w1, ..., EOS, padded with PAD
};
TeacherForcing make_teacher_forcing(const std::vector<TokenSequence>& words);

// Batch mean of the per-sequence summed negative log-likelihood of the gold
// words; PAD positions do not count. `step_logprobs` holds T tensors [B, V].
// Throws ContractError when a gold row's length differs from T or lacks EOS.
Tensor explanation_loss(const std::vector<Tensor>& step_logprobs, const std::vector<std::vector<std::size_t>>& gold);

// Global L2 norm of the gradients of the selected parameters.
double gradient_norm(const ParameterSet& params, const std::function<bool(const std::string&)>& selected);

struct StepLosses {
  double answer = 0.0;       // unweighted
  double explanation = 0.0;  // unweighted
  double total = 0.0;        // weighted objective actually optimized
  double grad_norm = 0.0;    // before clipping
};

enum class Phase { kPretrain, kMain };

// Per-step knobs derived from the config and phase.
struct StepPlan {
  bool use_answer_loss = true;
  bool use_explanation_loss = true;
  bool update_answer = true;
  bool update_explain = true;
};
StepPlan plan_for(const TrainConfig& config, Phase phase);

// One optimizer update on a non-empty batch. Examples must carry a label and
// at least one explanation; `explanation_choice[b]` picks the reference used.
// Throws NumericalError on a non-finite loss or gradient.
StepLosses train_step(PjxModel& model, Adam& optimizer, const std::vector<const EncodedExample*>& batch,
                      const std::vector<std::size_t>& explanation_choice, const TrainConfig& config,
                      const StepPlan& plan, std::mt19937_64& dropout_rng);

// Losses and accuracy of the model on a split, eval mode, conditioned on gold
// answers for the explanation loss.
struct SplitMetrics {
  double answer_loss = 0.0;
  double explanation_loss = 0.0;
  double accuracy = 0.0;  // percent
};
SplitMetrics evaluate_split(const PjxModel& model, const std::vector<EncodedExample>& examples,
                            std::size_t batch_size = 64);

struct EpochRecord {
  std::size_t epoch = 0;  // 1-based across both phases
  Phase phase = Phase::kMain;
  double answer_loss = 0.0;
  double explanation_loss = 0.0;
  double val_answer_loss = 0.0;
  double val_explanation_loss = 0.0;
  double val_accuracy = 0.0;
  double wall_seconds = 0.0;
};

struct TrainReport {
  TrainConfig config;
  std::vector<EpochRecord> epochs;
  std::size_t steps = 0;
  std::size_t best_epoch = 0;
  double best_val_loss = 0.0;
  double wall_seconds = 0.0;
};

// `include_timing` false drops wall-clock fields, leaving a report that is a
// pure function of the inputs.
nlohmann::json report_to_json(const TrainReport& report, bool include_timing = true);

struct FitOptions {
  std::filesystem::path checkpoint;  // best-validation parameters; empty to skip writing
  std::function<void(const EpochRecord&)> on_epoch;
};

// Trains `model` in place and leaves it holding the best-validation
// parameters (lowest weighted validation loss over main-phase epochs).
// Throws InputError on an empty split or unlabeled training examples.
TrainReport fit(PjxModel& model, const std::vector<EncodedExample>& train, const std::vector<EncodedExample>& val,
                const TrainConfig& config, const FitOptions& options = {});

}  // namespace pjx
