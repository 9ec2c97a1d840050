#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "pjx/answer_path.hpp"
#include "pjx/data/records.hpp"
#include "pjx/data/vocab.hpp"
#include "pjx/types.hpp"

namespace pjx {

// The three symbol tables a model is trained against.
struct Vocabularies {
  Vocabulary question;
  Vocabulary explanation;
  LabelSet answers;
};

// Built from training records only.
Vocabularies build_vocabularies(const std::vector<ExampleRecord>& train, std::size_t min_freq = 1,
                                std::size_t max_answers = 3000);

nlohmann::json vocabularies_to_json(const Vocabularies& v);
Vocabularies vocabularies_from_json(const nlohmann::json& j);

// A record resolved against its files and vocabularies.
struct EncodedExample {
  std::string id;
  SpatialFeatures features;
  TokenSequence question;
  std::string answer;
  std::optional<std::size_t> label;                   // unset when the answer is outside the label set
  std::vector<TokenSequence> explanations;            // word ids, no BOS/EOS
  std::vector<std::vector<std::string>> references;   // tokenized reference explanations
  std::optional<AttentionMap> attention_gt;           // resampled to the feature grid
};

// Reads features and masks relative to `dataset_dir`. Throws InputError when
// grids disagree in shape.
std::vector<EncodedExample> encode_records(const std::vector<ExampleRecord>& records,
                                           const std::filesystem::path& dataset_dir, const Vocabularies& vocabs);

std::vector<EncodedExample> load_encoded(const std::filesystem::path& dataset_dir, const std::string& split,
                                         const Vocabularies& vocabs);

}  // namespace pjx
