#pragma once

#include <filesystem>
#include <vector>

#include "pjx/data/dataset.hpp"
#include "pjx/data/synthetic.hpp"
#include "pjx/model.hpp"

namespace pjx::fixtures {

// A synthetic dataset written to `dir` and read back through the normal
// loading path.
struct LoadedSynthetic {
  Vocabularies vocabs;
  std::vector<EncodedExample> train, val, test;
};

inline LoadedSynthetic load_synthetic(const SynthConfig& config, std::uint64_t seed, const std::filesystem::path& dir) {
  write_synthetic(generate_synthetic(config, seed), dir);
  LoadedSynthetic out;
  const auto train_records = load_dataset(dir, "train");
  out.vocabs = build_vocabularies(train_records);
  out.train = encode_records(train_records, dir, out.vocabs);
  out.val = load_encoded(dir, "val", out.vocabs);
  out.test = load_encoded(dir, "test", out.vocabs);
  return out;
}

inline ModelConfig model_config_for(const LoadedSynthetic& data, const SynthConfig& synth) {
  ModelConfig c;
  c.feature_channels = synth.channels;
  c.grid_rows = synth.rows;
  c.grid_cols = synth.cols;
  c.question_vocab = data.vocabs.question.size();
  c.explanation_vocab = data.vocabs.explanation.size();
  c.answer_count = data.vocabs.answers.size();
  c.activity_mode = synth.task == SynthTask::kActivityAmbiguous;
  return c;
}

}  // namespace pjx::fixtures
