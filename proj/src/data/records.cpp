#include "pjx/data/records.hpp"

#include <fstream>

#include "pjx/errors.hpp"

namespace pjx {

namespace {

std::string require_string(const nlohmann::json& j, const char* field, std::size_t line, bool non_empty) {
  if (!j.contains(field)) throw ParseError(field, line, "missing");
  const auto& v = j.at(field);
  if (!v.is_string()) throw ParseError(field, line, "expected a string");
  auto s = v.get<std::string>();
  if (non_empty && s.empty()) throw ParseError(field, line, "must not be empty");
  return s;
}

std::vector<std::string> require_string_list(const nlohmann::json& j, const char* field, std::size_t line) {
  if (!j.contains(field)) throw ParseError(field, line, "missing");
  const auto& v = j.at(field);
  if (!v.is_array()) throw ParseError(field, line, "expected a list of strings");
  std::vector<std::string> out;
  for (const auto& item : v) {
    if (!item.is_string()) throw ParseError(field, line, "expected a list of strings");
    out.push_back(item.get<std::string>());
  }
  return out;
}

}  // namespace

nlohmann::json record_to_json(const ExampleRecord& r) {
  nlohmann::json j{{"id", r.id},
                   {"features_path", r.features_path},
                   {"question", r.question},
                   {"answer", r.answer},
                   {"explanations", r.explanations}};
  if (r.att_gt_path) j["att_gt_path"] = *r.att_gt_path;
  return j;
}

ExampleRecord record_from_json(const nlohmann::json& j, std::size_t line, bool require_explanations) {
  if (!j.is_object()) throw ParseError("<record>", line, "expected a JSON object");
  ExampleRecord r;
  r.id = require_string(j, "id", line, true);
  r.features_path = require_string(j, "features_path", line, true);
  r.question = require_string_list(j, "question", line);
  r.answer = require_string(j, "answer", line, true);
  r.explanations = require_string_list(j, "explanations", line);
  if (require_explanations && r.explanations.empty()) throw ParseError("explanations", line, "must not be empty");
  if (j.contains("att_gt_path") && !j.at("att_gt_path").is_null()) {
    r.att_gt_path = require_string(j, "att_gt_path", line, true);
  }
  return r;
}

std::vector<ExampleRecord> load_jsonl(const std::filesystem::path& path, bool require_explanations) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot open " + path.string());
  std::vector<ExampleRecord> records;
  std::string text;
  std::size_t line = 0;
  while (std::getline(is, text)) {
    ++line;
    if (text.find_first_not_of(" \t\r") == std::string::npos) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
      throw ParseError("<json>", line, e.what());
    }
    records.push_back(record_from_json(j, line, require_explanations));
  }
  return records;
}

void save_jsonl(const std::filesystem::path& path, const std::vector<ExampleRecord>& records) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw IoError("cannot write " + path.string());
  for (const auto& r : records) os << record_to_json(r).dump() << '\n';
  if (!os) throw IoError("write failed for " + path.string());
}

std::filesystem::path split_path(const std::filesystem::path& dataset_dir, const std::string& split) {
  return dataset_dir / (split + ".jsonl");
}

std::vector<ExampleRecord> load_dataset(const std::filesystem::path& dataset_dir, const std::string& split) {
  return load_jsonl(split_path(dataset_dir, split), split == "train");
}

}  // namespace pjx
