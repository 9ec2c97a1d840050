#include "pjx/cli.hpp"

#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "pjx/checkpoint.hpp"
#include "pjx/data/io.hpp"
#include "pjx/data/synthetic.hpp"
#include "pjx/errors.hpp"
#include "pjx/eval/evaluate.hpp"

#ifndef PJX_VERSION
#define PJX_VERSION "0.1.0"
#endif

namespace pjx::cli {

namespace fs = std::filesystem;

namespace {

// Flag overrides are collected as key/value pairs in the order CLI11 defines
// them; they are applied after the config file so flags win.
using Overrides = std::vector<std::pair<std::string, std::optional<std::string>>>;

std::size_t parse_count(const std::string& key, const std::string& value) {
  try {
    std::size_t idx = 0;
    if (!value.empty() && value[0] != '-') {
      const auto n = std::stoull(value, &idx);
      if (idx == value.size()) return static_cast<std::size_t>(n);
    }
  } catch (const std::exception&) {
  }
  throw ConfigError(key, "expected a non-negative integer, got \"" + value + "\"");
}

bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1" || value == "yes") return true;
  if (value == "false" || value == "0" || value == "no") return false;
  throw ConfigError(key, "expected true or false, got \"" + value + "\"");
}

std::uint64_t default_seed() {
  if (const char* env = std::getenv("PJX_SEED"); env != nullptr && *env != '\0') {
    try {
      return parse_count("PJX_SEED", env);
    } catch (const ConfigError&) {
      throw ConfigError("PJX_SEED", std::string("expected a non-negative integer, got \"") + env + "\"");
    }
  }
  return 1;
}

void ensure_directory(const fs::path& dir, const char* flag) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw ConfigError(flag, "cannot create output directory " + dir.string());
  const auto probe = dir / ".pjx-write-probe";
  std::ofstream os(probe);
  if (!os) throw ConfigError(flag, "output directory " + dir.string() + " is not writable");
  os.close();
  fs::remove(probe, ec);
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Run manifest, rewritten atomically when the command starts and finishes.
class Manifest {
 public:
  Manifest(fs::path path, std::string command, std::uint64_t seed, nlohmann::json config)
      : path_(std::move(path)) {
    doc_ = {{"command", std::move(command)},
            {"version", version()},
            {"seed", seed},
            {"config", std::move(config)},
            {"started_at", utc_now()},
            {"finished_at", nullptr},
            {"status", "running"},
            {"outputs", nlohmann::json::array()}};
    flush();
  }

  void output(const fs::path& p) { doc_["outputs"].push_back(p.string()); }

  void finish() {
    doc_["status"] = "ok";
    doc_["finished_at"] = utc_now();
    flush();
  }

 private:
  void flush() const { write_file_atomic(path_, doc_.dump(2) + "\n"); }

  fs::path path_;
  nlohmann::json doc_;
};

std::vector<Tokens> training_sentences(const fs::path& data_dir) {
  std::vector<Tokens> out;
  if (!fs::exists(split_path(data_dir, "train"))) return out;
  for (const auto& r : load_dataset(data_dir, "train"))
    for (const auto& e : r.explanations) out.push_back(tokenize(e));
  return out;
}

DecodeOptions decode_options(std::size_t beam, std::size_t max_len) {
  DecodeOptions o;
  o.mode = beam > 1 ? DecodeMode::kBeam : DecodeMode::kGreedy;
  o.beam_size = beam;
  o.max_len = max_len;
  return o;
}

void write_heatmaps(const fs::path& out_dir, const std::string& id, const AttentionMap& answer_att,
                    const AttentionMap& explain_att, Manifest& manifest) {
  ensure_directory(out_dir / "x8", "--out");
  const std::pair<const char*, const AttentionMap*> maps[] = {{"_vqa_att.pgm", &answer_att},
                                                              {"_exp_att.pgm", &explain_att}};
  for (const auto& [suffix, map] : maps) {
    const auto native = out_dir / (id + suffix);
    write_pgm(native, attention_heatmap(*map, 1));
    write_pgm(out_dir / "x8" / (id + suffix), attention_heatmap(*map, 8));
    manifest.output(native);
  }
}

// ---------------------------------------------------------------- gen-synth

struct GenSynthArgs {
  std::string out;
  std::string config;
  std::optional<std::uint64_t> seed;
  Overrides overrides{{"task", {}}, {"rows", {}}, {"cols", {}}, {"channels", {}}, {"train", {}},
                      {"val", {}}, {"test", {}}, {"objects_per_image", {}}, {"noise", {}}, {"mask_scale", {}}};
};

void set_synth_key(SynthConfig& c, const std::string& key, const std::string& value) {
  nlohmann::json j = c;
  if (key == "task") {
    j["task"] = value;
  } else if (key == "noise") {
    try {
      std::size_t idx = 0;
      j["noise"] = std::stod(value, &idx);
      if (idx != value.size()) throw ConfigError(key, "expected a number, got \"" + value + "\"");
    } catch (const std::logic_error&) {
      throw ConfigError(key, "expected a number, got \"" + value + "\"");
    }
  } else if (j.contains(key)) {
    j[key] = parse_count(key, value);
  } else {
    throw ConfigError(key, "unknown gen-synth key");
  }
  c = j.get<SynthConfig>();
}

int cmd_gen_synth(const GenSynthArgs& args, std::ostream& out) {
  SynthConfig cfg;
  std::optional<std::uint64_t> seed;
  if (!args.config.empty()) {
    for (const auto& e : read_key_values(args.config)) {
      if (e.key == "seed") {
        seed = parse_count("seed", e.value);
      } else {
        set_synth_key(cfg, e.key, e.value);
      }
    }
  }
  for (const auto& [key, value] : args.overrides) {
    if (value) set_synth_key(cfg, key, *value);
  }
  if (args.seed) seed = args.seed;
  const auto run_seed = seed.value_or(default_seed());
  cfg.validate();

  const fs::path out_dir = args.out;
  ensure_directory(out_dir, "--out");
  Manifest manifest(out_dir / "manifest.json", "gen-synth", run_seed, cfg);

  const auto ds = generate_synthetic(cfg, run_seed);
  for (const auto* split : {&ds.train, &ds.val, &ds.test})
    for (const auto& ex : *split) validate_synthetic(ex, cfg);
  write_synthetic(ds, out_dir);
  for (const char* s : {"train", "val", "test"}) manifest.output(split_path(out_dir, s));
  manifest.finish();
  out << "wrote " << ds.train.size() << "/" << ds.val.size() << "/" << ds.test.size()
      << " train/val/test examples to " << out_dir.string() << '\n';
  return kExitOk;
}

// -------------------------------------------------------------------- train

struct TrainArgs {
  std::string data;
  std::string out;
  std::string config;
  std::optional<std::uint64_t> seed;
  bool activity = false;
  bool answer_blind = false;
  std::vector<std::string> sets;
  Overrides overrides{{"learning_rate", {}}, {"batch_size", {}},   {"epochs", {}},
                      {"pretrain_epochs", {}}, {"regime", {}},     {"dropout", {}},
                      {"clip_norm", {}},     {"answer_weight", {}}, {"explanation_weight", {}}};
};

struct TrainSettings {
  TrainConfig train;
  ModelConfig model;
  std::size_t min_freq = 1;
  std::size_t max_answers = 3000;
};

void apply_train_key(TrainSettings& s, const std::string& key, const std::string& value) {
  if (is_train_config_key(key)) {
    s.train.set(key, value);
  } else if (key == "min_freq") {
    s.min_freq = parse_count(key, value);
  } else if (key == "max_answers") {
    s.max_answers = parse_count(key, value);
  } else if (!set_model_key(s.model, key, value)) {
    throw ConfigError(key, "unknown training key");
  }
}

int cmd_train(const TrainArgs& args, std::ostream& out) {
  TrainSettings s;
  std::optional<std::uint64_t> seed;
  if (!args.config.empty()) {
    for (const auto& e : read_key_values(args.config)) {
      if (e.key == "seed") {
        seed = parse_count("seed", e.value);
      } else {
        apply_train_key(s, e.key, e.value);
      }
    }
  }
  for (const auto& [key, value] : args.overrides) {
    if (value) apply_train_key(s, key, *value);
  }
  for (const auto& kv : args.sets) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw ConfigError("--set", "expected key=value, got \"" + kv + "\"");
    apply_train_key(s, kv.substr(0, eq), kv.substr(eq + 1));
  }
  if (args.activity) s.model.activity_mode = true;
  if (args.answer_blind) s.model.answer_conditioned = false;
  if (args.seed) seed = args.seed;
  s.train.seed = seed.value_or(default_seed());
  s.train.validate();
  if (s.min_freq < 1) throw ConfigError("min_freq", "must be >= 1");
  if (s.max_answers < 1) throw ConfigError("max_answers", "must be >= 1");

  const fs::path data_dir = args.data;
  if (!fs::is_directory(data_dir)) throw ConfigError("--data", "dataset directory " + data_dir.string() + " not found");
  const auto train_records = load_dataset(data_dir, "train");
  if (train_records.empty()) throw InputError("training split is empty");
  const auto val_records = load_dataset(data_dir, "val");

  const fs::path out_dir = args.out;
  ensure_directory(out_dir, "--out");
  nlohmann::json effective{{"train", s.train},
                           {"model", s.model},
                           {"min_freq", s.min_freq},
                           {"max_answers", s.max_answers},
                           {"data", data_dir.string()}};
  Manifest manifest(out_dir / "manifest.json", "train", s.train.seed, effective);

  const auto vocabs = build_vocabularies(train_records, s.min_freq, s.max_answers);
  auto train = encode_records(train_records, data_dir, vocabs);
  // Examples whose answer fell outside the label set cannot be trained on.
  const auto dropped = std::erase_if(train, [](const EncodedExample& ex) { return !ex.label; });
  if (train.empty()) throw InputError("no training example has an answer inside the label set");
  if (dropped > 0) out << "skipped " << dropped << " training examples with answers outside the label set\n";
  const auto val = encode_records(val_records, data_dir, vocabs);

  auto mc = s.model;
  mc.feature_channels = train.front().features.channels;
  mc.grid_rows = train.front().features.rows;
  mc.grid_cols = train.front().features.cols;
  mc.question_vocab = vocabs.question.size();
  mc.explanation_vocab = vocabs.explanation.size();
  mc.answer_count = vocabs.answers.size();
  mc.validate();
  effective["model"] = mc;

  PjxModel model(mc, s.train.seed);
  FitOptions fo;
  fo.on_epoch = [&out](const EpochRecord& e) {
    out << "epoch " << e.epoch << (e.phase == Phase::kPretrain ? " (pretrain)" : "") << ": answer loss "
        << e.answer_loss << ", explanation loss " << e.explanation_loss << ", val accuracy " << e.val_accuracy
        << "%, " << e.wall_seconds << " s\n";
  };
  const auto report = fit(model, train, val, s.train, fo);

  const auto ckpt = out_dir / "model.pjxt";
  save_bundle(ckpt, model, vocabs, effective);
  const auto report_path = out_dir / "train_report.json";
  auto report_json = report_to_json(report);
  report_json["effective_config"] = effective;
  write_file_atomic(report_path, report_json.dump(2) + "\n");
  manifest.output(ckpt);
  manifest.output(metadata_path(ckpt));
  manifest.output(report_path);
  manifest.finish();
  out << "best epoch " << report.best_epoch << " (validation loss " << report.best_val_loss << "), checkpoint "
      << ckpt.string() << '\n';
  return kExitOk;
}

// --------------------------------------------------------------------- eval

struct EvalArgs {
  std::string checkpoint;
  std::string data;
  std::string split = "test";
  std::string out;
  std::size_t beam = 1;
  std::optional<std::uint64_t> seed;
  bool gold_answers = false;
};

int cmd_eval(const EvalArgs& args, std::ostream& out) {
  const auto seed = args.seed.value_or(default_seed());
  if (args.beam < 1) throw ConfigError("--beam", "must be >= 1");
  const fs::path data_dir = args.data;
  if (!fs::is_directory(data_dir)) throw ConfigError("--data", "dataset directory " + data_dir.string() + " not found");
  const fs::path out_dir = args.out;
  ensure_directory(out_dir, "--out");
  Manifest manifest(out_dir / "manifest.json", "eval", seed,
                    {{"checkpoint", args.checkpoint},
                     {"data", args.data},
                     {"split", args.split},
                     {"beam", args.beam},
                     {"gold_answers", args.gold_answers}});

  const auto bundle = load_bundle(args.checkpoint);
  const auto examples = load_encoded(data_dir, args.split, bundle.vocabs);
  const auto options = decode_options(args.beam, bundle.model->config().max_len);
  const auto predictions = predict(*bundle.model, examples, bundle.vocabs, options, args.gold_answers);
  const auto report = evaluate_predictions(predictions, examples, training_sentences(data_dir), seed, args.split);

  std::string lines;
  for (const auto& p : predictions) lines += prediction_to_json(p).dump() + "\n";
  const auto json_path = out_dir / "eval_report.json";
  const auto text_path = out_dir / "eval_report.txt";
  const auto pred_path = out_dir / "predictions.jsonl";
  write_file_atomic(json_path, report_to_json(report).dump(2) + "\n");
  write_file_atomic(text_path, format_report(report));
  write_file_atomic(pred_path, lines);
  for (const auto& p : {json_path, text_path, pred_path}) manifest.output(p);
  manifest.finish();
  out << format_report(report);
  return kExitOk;
}

// ------------------------------------------------------------------ explain

struct ExplainArgs {
  std::string checkpoint;
  std::string out;
  std::string data;
  std::string split = "test";
  std::string id;
  std::string features;
  std::string question;
  std::string answer;
  std::size_t beam = 1;
};

int cmd_explain(const ExplainArgs& args, std::ostream& out) {
  if (args.beam < 1) throw ConfigError("--beam", "must be >= 1");
  const bool by_id = !args.id.empty();
  if (by_id == !args.features.empty()) {
    throw ConfigError("--id/--features", "give either --data with --id, or --features");
  }
  if (by_id && args.data.empty()) throw ConfigError("--data", "--id needs --data");
  const fs::path out_dir = args.out;
  ensure_directory(out_dir, "--out");
  Manifest manifest(out_dir / "manifest.json", "explain", 0,
                    {{"checkpoint", args.checkpoint},
                     {"data", args.data},
                     {"split", args.split},
                     {"id", args.id},
                     {"features", args.features},
                     {"question", args.question},
                     {"answer", args.answer},
                     {"beam", args.beam}});

  const auto bundle = load_bundle(args.checkpoint);
  EncodedExample ex;
  if (by_id) {
    const auto records = load_dataset(args.data, args.split);
    const auto it = std::find_if(records.begin(), records.end(), [&](const ExampleRecord& r) { return r.id == args.id; });
    if (it == records.end()) throw InputError("unknown example id \"" + args.id + "\" in split " + args.split);
    ex = encode_records({*it}, args.data, bundle.vocabs).front();
  } else {
    ex.id = fs::path(args.features).stem().string();
    ex.features = read_features(args.features);
    ex.question = bundle.vocabs.question.encode(tokenize(args.question));
  }
  std::optional<std::size_t> forced;
  if (!args.answer.empty()) forced = bundle.vocabs.answers.index(args.answer);

  const auto r = bundle.model->explain(ex.features, ex.question,
                                       decode_options(args.beam, bundle.model->config().max_len), forced);
  Prediction p;
  p.id = ex.id;
  p.answer = bundle.vocabs.answers.label(r.answer.best);
  p.answer_prob = r.answer.probs[r.answer.best];
  p.explanation = bundle.vocabs.explanation.decode(r.explanation.tokens);
  p.logprob = r.explanation.logprob;
  p.answer_att = r.answer_attention;
  p.explain_att = r.explanation.attention;

  const auto record_path = out_dir / (p.id + ".json");
  write_file_atomic(record_path, prediction_to_json(p).dump(2) + "\n");
  manifest.output(record_path);
  write_heatmaps(out_dir, p.id, p.answer_att, p.explain_att, manifest);
  manifest.finish();

  out << "id: " << p.id << '\n' << "answer: " << p.answer << " (p = " << p.answer_prob << ")\n";
  if (forced) out << "explanation conditioned on: " << args.answer << '\n';
  out << "because " << join_tokens(p.explanation) << '\n';
  return kExitOk;
}

}  // namespace

const char* version() { return PJX_VERSION; }

void write_file_atomic(const fs::path& path, const std::string& text) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
    if (!os) throw IoError("cannot write " + tmp.string());
    os << text;
    if (!os) throw IoError("write failed for " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) throw IoError("cannot move " + tmp.string() + " to " + path.string() + ": " + ec.message());
}

std::string utc_now() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

fs::path metadata_path(const fs::path& checkpoint) {
  auto p = checkpoint;
  p += ".meta.json";
  return p;
}

void save_bundle(const fs::path& checkpoint, const PjxModel& model, const Vocabularies& vocabs,
                 const nlohmann::json& train_config) {
  save_checkpoint(checkpoint, model.params());
  const nlohmann::json meta{{"metadata_version", kMetadataVersion},
                            {"model", model.config()},
                            {"vocabularies", vocabularies_to_json(vocabs)},
                            {"training", train_config}};
  write_file_atomic(metadata_path(checkpoint), meta.dump(2) + "\n");
}

ModelBundle load_bundle(const fs::path& checkpoint) {
  const auto meta_path = metadata_path(checkpoint);
  if (!fs::exists(checkpoint)) throw CheckpointError("checkpoint " + checkpoint.string() + " not found");
  if (!fs::exists(meta_path)) throw CheckpointError("checkpoint metadata " + meta_path.string() + " not found");
  nlohmann::json meta;
  try {
    meta = nlohmann::json::parse(read_file(meta_path));
  } catch (const nlohmann::json::exception& e) {
    throw CheckpointError("unreadable checkpoint metadata: " + std::string(e.what()));
  }
  if (meta.value("metadata_version", -1) != kMetadataVersion) {
    throw CheckpointError("checkpoint metadata version " + meta.value("metadata_version", nlohmann::json()).dump() +
                          " is not supported (expected " + std::to_string(kMetadataVersion) + ")");
  }
  ModelBundle b;
  ModelConfig mc;
  try {
    mc = meta.at("model").get<ModelConfig>();
    b.vocabs = vocabularies_from_json(meta.at("vocabularies"));
  } catch (const std::exception& e) {
    throw CheckpointError("malformed checkpoint metadata: " + std::string(e.what()));
  }
  if (b.vocabs.question.size() != mc.question_vocab || b.vocabs.explanation.size() != mc.explanation_vocab ||
      b.vocabs.answers.size() != mc.answer_count) {
    throw CheckpointError("checkpoint metadata vocabularies disagree with the model configuration");
  }
  try {
    mc.validate();
  } catch (const ConfigError& e) {
    throw CheckpointError("checkpoint metadata describes an invalid model: " + std::string(e.what()));
  }
  b.model = std::make_unique<PjxModel>(mc, 0);
  load_checkpoint(checkpoint, b.model->params());
  return b;
}

bool set_model_key(ModelConfig& c, const std::string& key, const std::string& value) {
  std::size_t* field = nullptr;
  if (key == "word_embed") field = &c.word_embed;
  if (key == "question_hidden") field = &c.question_hidden;
  if (key == "question_layers") field = &c.question_layers;
  if (key == "attention_hidden") field = &c.attention_hidden;
  if (key == "answer_embed") field = &c.answer_embed;
  if (key == "decoder_embed") field = &c.decoder_embed;
  if (key == "decoder_hidden") field = &c.decoder_hidden;
  if (key == "max_len") field = &c.max_len;
  if (field != nullptr) {
    *field = parse_count(key, value);
    return true;
  }
  if (key == "activity_mode") {
    c.activity_mode = parse_bool(key, value);
    return true;
  }
  if (key == "answer_conditioned") {
    c.answer_conditioned = parse_bool(key, value);
    return true;
  }
  return false;
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Pointing and justification: answer visual questions, explain the answer, point at the evidence."};
  app.set_version_flag("--version", std::string(version()));
  app.require_subcommand(1);

  GenSynthArgs gs;
  auto* gen = app.add_subcommand("gen-synth", "Generate a synthetic grid-world dataset");
  gen->add_option("--out", gs.out, "Output directory")->required();
  gen->add_option("--config", gs.config, "key = value config file");
  gen->add_option("--seed", gs.seed, "Random seed (default: $PJX_SEED, else 1)");
  auto& go = gs.overrides;
  gen->add_option("--task", go[0].second, "vqa or activity_ambiguous");
  gen->add_option("--rows", go[1].second, "Grid rows");
  gen->add_option("--cols", go[2].second, "Grid columns");
  gen->add_option("--channels", go[3].second, "Feature channels");
  gen->add_option("--train", go[4].second, "Training examples");
  gen->add_option("--val", go[5].second, "Validation examples");
  gen->add_option("--test", go[6].second, "Test examples");
  gen->add_option("--objects", go[7].second, "Objects per image (vqa task)");
  gen->add_option("--noise", go[8].second, "Feature noise standard deviation");
  gen->add_option("--mask-scale", go[9].second, "Mask pixels per grid cell");

  TrainArgs ta;
  auto* train = app.add_subcommand("train", "Train a model");
  train->add_option("--data", ta.data, "Dataset directory with train/val JSONL splits")->required();
  train->add_option("--out", ta.out, "Output directory")->required();
  train->add_option("--config", ta.config, "key = value config file");
  train->add_option("--seed", ta.seed, "Random seed (default: $PJX_SEED, else 1)");
  auto& to = ta.overrides;
  train->add_option("--lr", to[0].second, "Learning rate");
  train->add_option("--batch-size", to[1].second, "Batch size");
  train->add_option("--epochs", to[2].second, "Main-phase epochs");
  train->add_option("--pretrain-epochs", to[3].second, "Answer-only epochs before the main phase");
  train->add_option("--regime", to[4].second, "freeze-answer, finetune or joint");
  train->add_option("--dropout", to[5].second, "Dropout rate");
  train->add_option("--clip-norm", to[6].second, "Global gradient-norm clip (0 disables)");
  train->add_option("--answer-weight", to[7].second, "Answer loss weight");
  train->add_option("--explanation-weight", to[8].second, "Explanation loss weight");
  train->add_flag("--activity", ta.activity, "Activity mode: the question representation is all ones");
  train->add_flag("--answer-blind", ta.answer_blind, "Ablation: explanation branch ignores the answer");
  train->add_option("--set", ta.sets, "Any config key as key=value (repeatable)");

  EvalArgs ea;
  auto* eval = app.add_subcommand("eval", "Evaluate a checkpoint on a dataset split");
  eval->add_option("--checkpoint", ea.checkpoint, "Checkpoint file (.pjxt)")->required();
  eval->add_option("--data", ea.data, "Dataset directory")->required();
  eval->add_option("--split", ea.split, "Split name")->capture_default_str();
  eval->add_option("--out", ea.out, "Output directory for reports")->required();
  eval->add_option("--beam", ea.beam, "Beam size (1 = greedy)")->capture_default_str();
  eval->add_option("--seed", ea.seed, "Seed for the random-point baseline");
  eval->add_flag("--gold-answers", ea.gold_answers, "Condition explanations on gold answers");

  ExplainArgs xa;
  auto* explain = app.add_subcommand("explain", "Answer, justify and export both attention maps for one example");
  explain->add_option("--checkpoint", xa.checkpoint, "Checkpoint file (.pjxt)")->required();
  explain->add_option("--out", xa.out, "Output directory")->required();
  explain->add_option("--data", xa.data, "Dataset directory (with --id)");
  explain->add_option("--split", xa.split, "Split holding --id")->capture_default_str();
  explain->add_option("--id", xa.id, "Example id");
  explain->add_option("--features", xa.features, "PJXF feature file (instead of --id)");
  explain->add_option("--question", xa.question, "Question text (with --features)");
  explain->add_option("--answer", xa.answer, "Condition the explanation on this answer label");
  explain->add_option("--beam", xa.beam, "Beam size (1 = greedy)")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*gen) return cmd_gen_synth(gs, out);
    if (*train) return cmd_train(ta, out);
    if (*eval) return cmd_eval(ea, out);
    if (*explain) return cmd_explain(xa, out);
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const NumericalError& e) {
    err << "numerical failure: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const CheckpointError& e) {
    err << "checkpoint error: " << e.what() << '\n';
    return kExitCheckpoint;
  } catch (const InputError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const IoError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const ParameterError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << '\n';
    return kExitFailure;
  }
  return kExitUsage;
}

}  // namespace pjx::cli
