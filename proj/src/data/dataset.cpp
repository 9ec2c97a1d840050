#include "pjx/data/dataset.hpp"

#include "pjx/data/io.hpp"
#include "pjx/errors.hpp"

namespace pjx {

Vocabularies build_vocabularies(const std::vector<ExampleRecord>& train, std::size_t min_freq,
                                std::size_t max_answers) {
  std::vector<std::vector<std::string>> questions, explanations;
  std::vector<std::string> answers;
  for (const auto& r : train) {
    questions.push_back(r.question);
    for (const auto& e : r.explanations) explanations.push_back(tokenize(e));
    answers.push_back(r.answer);
  }
  return {build_vocab(questions, min_freq), build_vocab(explanations, min_freq),
          LabelSet::build(answers, max_answers)};
}

nlohmann::json vocabularies_to_json(const Vocabularies& v) {
  return {{"question", v.question.tokens()},
          {"explanation", v.explanation.tokens()},
          {"answers", v.answers.labels()}};
}

Vocabularies vocabularies_from_json(const nlohmann::json& j) {
  try {
    return {Vocabulary(j.at("question").get<std::vector<std::string>>()),
            Vocabulary(j.at("explanation").get<std::vector<std::string>>()),
            LabelSet(j.at("answers").get<std::vector<std::string>>())};
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("malformed vocabulary metadata: ") + e.what());
  }
}

std::vector<EncodedExample> encode_records(const std::vector<ExampleRecord>& records,
                                           const std::filesystem::path& dataset_dir, const Vocabularies& vocabs) {
  std::vector<EncodedExample> out;
  out.reserve(records.size());
  for (const auto& r : records) {
    EncodedExample ex;
    ex.id = r.id;
    ex.features = read_features(dataset_dir / r.features_path);
    if (!out.empty() && (ex.features.channels != out.front().features.channels ||
                         ex.features.rows != out.front().features.rows ||
                         ex.features.cols != out.front().features.cols)) {
      throw InputError(r.id + ": feature grid shape differs from the rest of the split");
    }
    ex.question = vocabs.question.encode(r.question);
    ex.answer = r.answer;
    if (vocabs.answers.contains(r.answer)) ex.label = vocabs.answers.index(r.answer);
    for (const auto& e : r.explanations) {
      ex.references.push_back(tokenize(e));
      ex.explanations.push_back(vocabs.explanation.encode(ex.references.back()));
    }
    if (r.att_gt_path) {
      ex.attention_gt = load_attention_gt(dataset_dir / *r.att_gt_path, ex.features.rows, ex.features.cols);
    }
    out.push_back(std::move(ex));
  }
  return out;
}

std::vector<EncodedExample> load_encoded(const std::filesystem::path& dataset_dir, const std::string& split,
                                         const Vocabularies& vocabs) {
  return encode_records(load_dataset(dataset_dir, split), dataset_dir, vocabs);
}

}  // namespace pjx
