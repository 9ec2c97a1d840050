#include "pjx/training.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <sstream>

#include "pjx/checkpoint.hpp"
#include "pjx/errors.hpp"
#include "pjx/ops.hpp"

namespace pjx {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double parse_double(const std::string& key, const std::string& v) {
  try {
    std::size_t idx = 0;
    const double d = std::stod(v, &idx);
    if (idx == v.size()) return d;
  } catch (const std::exception&) {
  }
  throw ConfigError(key, "expected a number, got \"" + v + "\"");
}

std::uint64_t parse_unsigned(const std::string& key, const std::string& v) {
  try {
    std::size_t idx = 0;
    if (!v.empty() && v[0] != '-') {
      const auto n = std::stoull(v, &idx);
      if (idx == v.size()) return n;
    }
  } catch (const std::exception&) {
  }
  throw ConfigError(key, "expected a non-negative integer, got \"" + v + "\"");
}

const std::vector<std::string>& train_keys() {
  static const std::vector<std::string> keys{"learning_rate", "batch_size", "epochs",
                                             "pretrain_epochs", "seed", "regime",
                                             "dropout", "clip_norm", "answer_weight",
                                             "explanation_weight"};
  return keys;
}

bool all_finite(std::span<const double> xs) {
  return std::all_of(xs.begin(), xs.end(), [](double x) { return std::isfinite(x); });
}

std::vector<std::size_t> labels_of(const std::vector<const EncodedExample*>& batch) {
  std::vector<std::size_t> out;
  out.reserve(batch.size());
  for (const auto* ex : batch) out.push_back(*ex->label);
  return out;
}

ModelBatch to_model_batch(const std::vector<const EncodedExample*>& batch) {
  std::vector<const SpatialFeatures*> feats;
  std::vector<TokenSequence> questions;
  for (const auto* ex : batch) {
    feats.push_back(&ex->features);
    questions.push_back(ex->question);
  }
  return make_batch(feats, questions);
}

}  // namespace

std::string regime_name(Regime r) {
  switch (r) {
    case Regime::kFreezeAnswer:
      return "freeze-answer";
    case Regime::kFinetune:
      return "finetune";
    case Regime::kJoint:
      return "joint";
  }
  return "joint";
}

Regime parse_regime(const std::string& name) {
  if (name == "freeze-answer") return Regime::kFreezeAnswer;
  if (name == "finetune") return Regime::kFinetune;
  if (name == "joint") return Regime::kJoint;
  throw ConfigError("regime", "expected freeze-answer, finetune or joint, got \"" + name + "\"");
}

void TrainConfig::validate() const {
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) {
    throw ConfigError("learning_rate", "must be a finite number > 0");
  }
  if (batch_size < 1) throw ConfigError("batch_size", "must be >= 1");
  if (epochs < 1) throw ConfigError("epochs", "must be >= 1");
  if (!(dropout >= 0.0 && dropout < 1.0)) throw ConfigError("dropout", "must be in [0, 1)");
  if (!(clip_norm >= 0.0)) throw ConfigError("clip_norm", "must be >= 0");
  if (!(answer_weight >= 0.0)) throw ConfigError("answer_weight", "must be >= 0");
  if (!(explanation_weight >= 0.0)) throw ConfigError("explanation_weight", "must be >= 0");
}

void TrainConfig::set(const std::string& key, const std::string& value) {
  if (key == "learning_rate") {
    learning_rate = parse_double(key, value);
  } else if (key == "batch_size") {
    batch_size = parse_unsigned(key, value);
  } else if (key == "epochs") {
    epochs = parse_unsigned(key, value);
  } else if (key == "pretrain_epochs") {
    pretrain_epochs = parse_unsigned(key, value);
  } else if (key == "seed") {
    seed = parse_unsigned(key, value);
  } else if (key == "regime") {
    regime = parse_regime(value);
  } else if (key == "dropout") {
    dropout = parse_double(key, value);
  } else if (key == "clip_norm") {
    clip_norm = parse_double(key, value);
  } else if (key == "answer_weight") {
    answer_weight = parse_double(key, value);
  } else if (key == "explanation_weight") {
    explanation_weight = parse_double(key, value);
  } else {
    throw ConfigError(key, "unknown training key");
  }
}

bool is_train_config_key(const std::string& key) {
  const auto& keys = train_keys();
  return std::find(keys.begin(), keys.end(), key) != keys.end();
}

void to_json(nlohmann::json& j, const TrainConfig& c) {
  j = nlohmann::json{{"learning_rate", c.learning_rate},
                     {"batch_size", c.batch_size},
                     {"epochs", c.epochs},
                     {"pretrain_epochs", c.pretrain_epochs},
                     {"seed", c.seed},
                     {"regime", regime_name(c.regime)},
                     {"dropout", c.dropout},
                     {"clip_norm", c.clip_norm},
                     {"answer_weight", c.answer_weight},
                     {"explanation_weight", c.explanation_weight}};
}

std::vector<ConfigEntry> parse_key_values(std::istream& in) {
  std::vector<ConfigEntry> out;
  std::string text;
  std::size_t line = 0;
  while (std::getline(in, text)) {
    ++line;
    if (const auto hash = text.find('#'); hash != std::string::npos) text.erase(hash);
    if (trim(text).empty()) continue;
    const auto eq = text.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("line " + std::to_string(line), "expected key = value, got \"" + trim(text) + "\"");
    }
    auto key = trim(text.substr(0, eq));
    if (key.empty()) throw ConfigError("line " + std::to_string(line), "empty key");
    out.push_back({std::move(key), trim(text.substr(eq + 1)), line});
  }
  return out;
}

std::vector<ConfigEntry> read_key_values(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config", "cannot open " + path.string());
  return parse_key_values(in);
}

Adam::Adam(double learning_rate, double beta1, double beta2, double epsilon)
    : lr_(learning_rate), beta1_(beta1), beta2_(beta2), eps_(epsilon) {}

void Adam::step(ParameterSet& params, const std::function<bool(const std::string&)>& selected) {
  for (auto& [name, tensor] : params) {
    if (!selected(name)) continue;
    const auto g = tensor.grad();
    auto& st = state_[name];
    if (st.m.empty()) {
      st.m.assign(g.size(), 0.0);
      st.v.assign(g.size(), 0.0);
    }
    ++st.t;
    const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(st.t));
    const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(st.t));
    auto w = tensor.mutable_values();
    for (std::size_t i = 0; i < g.size(); ++i) {
      st.m[i] = beta1_ * st.m[i] + (1.0 - beta1_) * g[i];
      st.v[i] = beta2_ * st.v[i] + (1.0 - beta2_) * g[i] * g[i];
      w[i] -= lr_ * (st.m[i] / c1) / (std::sqrt(st.v[i] / c2) + eps_);
    }
  }
}

Tensor answer_loss(const Tensor& probs, const std::vector<std::size_t>& gold) {
  for (auto y : gold) {
    if (y >= probs.cols()) {
      throw InputError("answer label " + std::to_string(y) + " outside [0, " + std::to_string(probs.cols()) + ")");
    }
  }
  return neg_log_prob(probs, gold, 1e-12);
}

double answer_loss(const AnswerDistribution& pred, std::size_t gold) {
  if (gold >= pred.probs.size()) {
    throw InputError("answer label " + std::to_string(gold) + " outside [0, " + std::to_string(pred.probs.size()) +
                     ")");
  }
  return -std::log(std::max(pred.probs[gold], 1e-12));
}

TeacherForcing make_teacher_forcing(const std::vector<TokenSequence>& words) {
  std::size_t longest = 0;
  for (const auto& w : words) longest = std::max(longest, w.size());
  const auto T = longest + 1;
  TeacherForcing tf;
  tf.inputs.assign(T, std::vector<std::size_t>(words.size(), kPadId));
  tf.gold.assign(words.size(), std::vector<std::size_t>(T, kPadId));
  for (std::size_t b = 0; b < words.size(); ++b) {
    tf.inputs[0][b] = kBosId;
    for (std::size_t t = 0; t < words[b].size(); ++t) {
      tf.inputs[t + 1][b] = words[b][t];
      tf.gold[b][t] = words[b][t];
    }
    tf.gold[b][words[b].size()] = kEosId;
  }
  return tf;
}

Tensor explanation_loss(const std::vector<Tensor>& step_logprobs, const std::vector<std::vector<std::size_t>>& gold) {
  const auto T = step_logprobs.size();
  if (T == 0 || gold.empty()) throw ContractError("explanation_loss: need at least one step and one sequence");
  const auto B = gold.size();
  for (std::size_t b = 0; b < B; ++b) {
    if (gold[b].size() != T) {
      throw ContractError("explanation_loss: gold sequence " + std::to_string(b) + " has " +
                          std::to_string(gold[b].size()) + " steps, decoder ran " + std::to_string(T));
    }
    if (std::find(gold[b].begin(), gold[b].end(), kEosId) == gold[b].end()) {
      throw ContractError("explanation_loss: gold sequence " + std::to_string(b) + " has no EOS");
    }
  }
  const double weight = 1.0 / static_cast<double>(B);
  Tensor total;
  for (std::size_t t = 0; t < T; ++t) {
    if (step_logprobs[t].rows() != B) throw ContractError("explanation_loss: step width does not match batch");
    std::vector<int> targets(B);
    for (std::size_t b = 0; b < B; ++b) targets[b] = gold[b][t] == kPadId ? -1 : static_cast<int>(gold[b][t]);
    auto term = pick_neg_sum(step_logprobs[t], targets, weight);
    total = total.defined() ? add(total, term) : term;
  }
  return total;
}

double gradient_norm(const ParameterSet& params, const std::function<bool(const std::string&)>& selected) {
  double sq = 0.0;
  for (const auto& [name, tensor] : params) {
    if (!selected(name)) continue;
    for (double g : tensor.grad()) sq += g * g;
  }
  return std::sqrt(sq);
}

StepPlan plan_for(const TrainConfig& config, Phase phase) {
  if (phase == Phase::kPretrain) return {true, false, true, false};
  if (config.regime == Regime::kFreezeAnswer) return {false, true, false, true};
  return {config.answer_weight > 0.0, config.explanation_weight > 0.0, true, true};
}

StepLosses train_step(PjxModel& model, Adam& optimizer, const std::vector<const EncodedExample*>& batch,
                      const std::vector<std::size_t>& explanation_choice, const TrainConfig& config,
                      const StepPlan& plan, std::mt19937_64& dropout_rng) {
  if (batch.empty()) throw ContractError("train_step: empty batch");
  if (explanation_choice.size() != batch.size()) throw ContractError("train_step: one explanation choice per example");
  for (const auto* ex : batch) {
    if (!ex->label) throw InputError(ex->id + ": answer \"" + ex->answer + "\" is not a known label");
  }
  const auto labels = labels_of(batch);
  const auto mb = to_model_batch(batch);
  const ForwardContext ctx{true, config.dropout, &dropout_rng};

  model.params().zero_grad();
  StepLosses out;
  Tensor objective;
  ForwardResult r = plan.use_explanation_loss ? model.forward(mb, labels, ctx) : model.forward_answer(mb, ctx);

  const auto a_loss = answer_loss(r.answer_probs, labels);
  out.answer = a_loss.item();
  if (plan.use_answer_loss) objective = scale(a_loss, config.answer_weight);

  if (plan.use_explanation_loss) {
    std::vector<TokenSequence> words;
    for (std::size_t b = 0; b < batch.size(); ++b) {
      const auto& refs = batch[b]->explanations;
      if (refs.empty()) throw InputError(batch[b]->id + ": no reference explanation to train on");
      words.push_back(refs[explanation_choice[b] % refs.size()]);
    }
    const auto tf = make_teacher_forcing(words);
    const auto steps = model.explain_path().teacher_forced(r.fused, tf.inputs);
    const auto e_loss = explanation_loss(steps, tf.gold);
    out.explanation = e_loss.item();
    auto weighted = scale(e_loss, config.explanation_weight);
    objective = objective.defined() ? add(objective, weighted) : weighted;
  }
  if (!objective.defined()) throw ContractError("train_step: the step plan selects no loss");
  out.total = objective.item();
  if (!std::isfinite(out.total)) {
    throw NumericalError("non-finite loss (answer " + std::to_string(out.answer) + ", explanation " +
                         std::to_string(out.explanation) + ")");
  }

  backward(objective);
  auto selected = [&plan](const std::string& name) {
    return PjxModel::is_answer_parameter(name) ? plan.update_answer : plan.update_explain;
  };
  out.grad_norm = gradient_norm(model.params(), selected);
  if (!std::isfinite(out.grad_norm)) throw NumericalError("non-finite gradient norm");
  if (config.clip_norm > 0.0 && out.grad_norm > config.clip_norm) {
    const double factor = config.clip_norm / out.grad_norm;
    for (auto& [name, tensor] : model.params()) {
      if (!selected(name) || !tensor.has_grad()) continue;
      for (auto& g : tensor.node()->grad) g *= factor;
    }
  }
  optimizer.step(model.params(), selected);
  for (auto& [name, tensor] : model.params()) {
    if (selected(name) && !all_finite(tensor.values())) throw NumericalError("parameter " + name + " became non-finite");
  }
  return out;
}

SplitMetrics evaluate_split(const PjxModel& model, const std::vector<EncodedExample>& examples,
                            std::size_t batch_size) {
  NoGradGuard no_grad;
  SplitMetrics m;
  std::size_t labeled = 0, correct = 0;
  double a_sum = 0.0, e_sum = 0.0;
  std::size_t e_count = 0;
  for (std::size_t start = 0; start < examples.size(); start += batch_size) {
    std::vector<const EncodedExample*> batch;
    for (std::size_t i = start; i < std::min(examples.size(), start + batch_size); ++i) {
      if (examples[i].label) batch.push_back(&examples[i]);
    }
    // Unlabeled examples count as wrong answers and are excluded from losses.
    if (batch.empty()) continue;
    const auto labels = labels_of(batch);
    const auto r = model.forward(to_model_batch(batch), labels, ForwardContext::eval());
    const auto Y = r.answer_probs.cols();
    for (std::size_t b = 0; b < batch.size(); ++b) {
      std::vector<double> row(r.answer_probs.values().begin() + b * Y, r.answer_probs.values().begin() + (b + 1) * Y);
      correct += argmax_index(row) == labels[b] ? 1 : 0;
    }
    a_sum += answer_loss(r.answer_probs, labels).item() * static_cast<double>(batch.size());
    labeled += batch.size();

    std::vector<TokenSequence> words;
    for (std::size_t b = 0; b < batch.size(); ++b) {
      if (!batch[b]->explanations.empty()) words.push_back(batch[b]->explanations.front());
    }
    if (words.size() == batch.size()) {
      const auto tf = make_teacher_forcing(words);
      const auto steps = model.explain_path().teacher_forced(r.fused, tf.inputs);
      e_sum += explanation_loss(steps, tf.gold).item() * static_cast<double>(batch.size());
      e_count += batch.size();
    }
  }
  if (labeled > 0) m.answer_loss = a_sum / static_cast<double>(labeled);
  if (e_count > 0) m.explanation_loss = e_sum / static_cast<double>(e_count);
  if (!examples.empty()) m.accuracy = 100.0 * static_cast<double>(correct) / static_cast<double>(examples.size());
  return m;
}

nlohmann::json report_to_json(const TrainReport& report, bool include_timing) {
  nlohmann::json epochs = nlohmann::json::array();
  for (const auto& e : report.epochs) {
    nlohmann::json j{{"epoch", e.epoch},
                     {"phase", e.phase == Phase::kPretrain ? "pretrain" : "main"},
                     {"answer_loss", e.answer_loss},
                     {"explanation_loss", e.explanation_loss},
                     {"val_answer_loss", e.val_answer_loss},
                     {"val_explanation_loss", e.val_explanation_loss},
                     {"val_accuracy", e.val_accuracy}};
    if (include_timing) j["wall_seconds"] = e.wall_seconds;
    epochs.push_back(std::move(j));
  }
  nlohmann::json j{{"config", report.config},
                   {"epochs", std::move(epochs)},
                   {"steps", report.steps},
                   {"best_epoch", report.best_epoch},
                   {"best_val_loss", report.best_val_loss}};
  if (include_timing) j["wall_seconds"] = report.wall_seconds;
  return j;
}

TrainReport fit(PjxModel& model, const std::vector<EncodedExample>& train, const std::vector<EncodedExample>& val,
                const TrainConfig& config, const FitOptions& options) {
  config.validate();
  if (train.empty()) throw InputError("training split is empty");
  if (val.empty()) throw InputError("validation split is empty");
  for (const auto& ex : train) {
    if (!ex.label) throw InputError(ex.id + ": training answer \"" + ex.answer + "\" is not a known label");
    if (ex.explanations.empty()) throw InputError(ex.id + ": training example has no explanation");
  }

  using Clock = std::chrono::steady_clock;
  const auto t0 = Clock::now();
  Rng order_rng(config.seed);
  std::mt19937_64 dropout_rng(config.seed ^ 0x9E3779B97F4A7C15ULL);
  Adam optimizer(config.learning_rate);

  TrainReport report;
  report.config = config;
  std::vector<char> best_bytes;

  std::vector<std::size_t> order(train.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  const auto total_epochs = config.pretrain_epochs + config.epochs;
  for (std::size_t epoch = 1; epoch <= total_epochs; ++epoch) {
    const auto e0 = Clock::now();
    const auto phase = epoch <= config.pretrain_epochs ? Phase::kPretrain : Phase::kMain;
    const auto plan = plan_for(config, phase);
    order_rng.shuffle(order);

    EpochRecord rec;
    rec.epoch = epoch;
    rec.phase = phase;
    double a_sum = 0.0, e_sum = 0.0;
    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      std::vector<const EncodedExample*> batch;
      std::vector<std::size_t> choice;
      for (std::size_t i = start; i < std::min(order.size(), start + config.batch_size); ++i) {
        const auto& ex = train[order[i]];
        batch.push_back(&ex);
        choice.push_back(ex.explanations.size() > 1 ? order_rng.index(ex.explanations.size()) : 0);
      }
      StepLosses losses;
      try {
        losses = train_step(model, optimizer, batch, choice, config, plan, dropout_rng);
      } catch (const NumericalError& e) {
        throw NumericalError("epoch " + std::to_string(epoch) + ", step " + std::to_string(report.steps + 1) + ": " +
                             e.what());
      }
      ++report.steps;
      a_sum += losses.answer * static_cast<double>(batch.size());
      e_sum += losses.explanation * static_cast<double>(batch.size());
    }
    rec.answer_loss = a_sum / static_cast<double>(train.size());
    rec.explanation_loss = e_sum / static_cast<double>(train.size());

    const auto vm = evaluate_split(model, val);
    rec.val_answer_loss = vm.answer_loss;
    rec.val_explanation_loss = vm.explanation_loss;
    rec.val_accuracy = vm.accuracy;
    rec.wall_seconds = std::chrono::duration<double>(Clock::now() - e0).count();
    report.epochs.push_back(rec);

    if (phase == Phase::kMain) {
      const auto main_plan = plan_for(config, Phase::kMain);
      double val_loss = 0.0;
      if (main_plan.use_answer_loss) val_loss += config.answer_weight * vm.answer_loss;
      if (main_plan.use_explanation_loss) val_loss += config.explanation_weight * vm.explanation_loss;
      if (best_bytes.empty() || val_loss < report.best_val_loss) {
        report.best_val_loss = val_loss;
        report.best_epoch = epoch;
        best_bytes = encode_checkpoint(model.params());
      }
    }
    if (options.on_epoch) options.on_epoch(rec);
  }

  assign_parameters(decode_checkpoint(best_bytes), model.params());
  if (!options.checkpoint.empty()) save_checkpoint(options.checkpoint, model.params());
  report.wall_seconds = std::chrono::duration<double>(Clock::now() - t0).count();
  return report;
}

}  // namespace pjx
