#pragma once

#include <filesystem>
#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

#include "json.hpp"
#include "pjx/data/dataset.hpp"
#include "pjx/model.hpp"
#include "pjx/training.hpp"

namespace pjx::cli {

// Process exit codes; stable across releases.
enum ExitCode : int {
  kExitOk = 0,
  kExitFailure = 1,
  kExitUsage = 2,       // bad flags, config, input data or output location
  kExitNumerical = 3,   // training hit a non-finite loss or gradient
  kExitCheckpoint = 4,  // checkpoint unreadable or incompatible with its metadata
};

// Version string baked in at build time (git describe).
const char* version();

// Entry point shared by the `pjx` binary and the tests.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

// Writes `text` to a temporary sibling and renames it over `path`.
void write_file_atomic(const std::filesystem::path& path, const std::string& text);

// UTC timestamp, ISO 8601 with seconds.
std::string utc_now();

// A trained model together with everything needed to feed it.
struct ModelBundle {
  Vocabularies vocabs;
  std::unique_ptr<PjxModel> model;
};

inline constexpr int kMetadataVersion = 1;

std::filesystem::path metadata_path(const std::filesystem::path& checkpoint);

// Writes the parameter checkpoint and its `<checkpoint>.meta.json` sidecar
// (model config, vocabularies, label set, training config).
void save_bundle(const std::filesystem::path& checkpoint, const PjxModel& model, const Vocabularies& vocabs,
                 const nlohmann::json& train_config);

// Throws CheckpointError when the sidecar is missing, has another version, or
// does not describe the parameters in the checkpoint.
ModelBundle load_bundle(const std::filesystem::path& checkpoint);

// Sets a model hyperparameter from a config key; returns false for keys that
// are not model keys. Throws ConfigError on a bad value.
bool set_model_key(ModelConfig& config, const std::string& key, const std::string& value);

}  // namespace pjx::cli
