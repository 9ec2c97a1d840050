#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

namespace pjx {

// One JSON-lines record:
//   {"id": str, "features_path": str, "question": [str], "answer": str,
//    "explanations": [str], "att_gt_path": str (optional)}
// Paths are relative to the directory holding the split file.
struct ExampleRecord {
  std::string id;
  std::string features_path;
  std::vector<std::string> question;  // empty in activity mode
  std::string answer;
  std::vector<std::string> explanations;
  std::optional<std::string> att_gt_path;

  bool operator==(const ExampleRecord&) const = default;
};

nlohmann::json record_to_json(const ExampleRecord& record);
// Throws ParseError naming the offending field and `line`.
ExampleRecord record_from_json(const nlohmann::json& j, std::size_t line, bool require_explanations);

std::vector<ExampleRecord> load_jsonl(const std::filesystem::path& path, bool require_explanations);
void save_jsonl(const std::filesystem::path& path, const std::vector<ExampleRecord>& records);

std::filesystem::path split_path(const std::filesystem::path& dataset_dir, const std::string& split);

// Reads <dataset_dir>/<split>.jsonl. Training records must carry at least one
// explanation. Blank lines are ignored. Throws IoError if the file is missing.
std::vector<ExampleRecord> load_dataset(const std::filesystem::path& dataset_dir, const std::string& split);

}  // namespace pjx
