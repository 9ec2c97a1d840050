#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"
#include "pjx/data/io.hpp"
#include "pjx/data/records.hpp"
#include "pjx/types.hpp"

namespace pjx {

// Grid-world tasks with a known evidence cell.
//
// kVqa: several objects, each with a colour, sit in distinct quadrants of the
// grid. Questions are "what is in the <quadrant>" (answer: object) or
// "where is the <object>" (answer: quadrant). The evidence cell holds the
// queried object.
//
// kActivityAmbiguous: no question; two objects are placed and the label is
// one of them, chosen at random. The image alone supports both answers, so an
// explanation can only name the right object and colour if it knows the answer.
//
// Reference explanation in both tasks: "there is a <colour> <object> in the
// <quadrant>" describing the evidence cell.
enum class SynthTask { kVqa, kActivityAmbiguous };

struct SynthConfig {
  SynthTask task = SynthTask::kVqa;
  std::size_t rows = 4;
  std::size_t cols = 4;
  std::size_t channels = 32;
  std::size_t train = 2000;
  std::size_t val = 200;
  std::size_t test = 200;
  std::size_t objects_per_image = 3;  // kActivityAmbiguous always uses 2
  double noise = 0.1;                 // sd of additive Gaussian noise
  std::size_t mask_scale = 8;         // mask pixels per grid cell

  // Throws ConfigError naming the offending field.
  void validate() const;
};

void to_json(nlohmann::json& j, const SynthConfig& c);
void from_json(const nlohmann::json& j, SynthConfig& c);

const std::vector<std::string>& synth_objects();
const std::vector<std::string>& synth_colors();
const std::vector<std::string>& synth_quadrants();

// Channel layout of synthetic features: row one-hot, column one-hot, object
// one-hot, colour one-hot, then pure-noise channels.
struct SynthLayout {
  std::size_t rows, cols;
  std::size_t row_offset() const { return 0; }
  std::size_t col_offset() const { return rows; }
  std::size_t object_offset() const { return rows + cols; }
  std::size_t color_offset() const { return object_offset() + synth_objects().size(); }
  std::size_t used_channels() const { return color_offset() + synth_colors().size(); }
};

std::size_t quadrant_of(std::size_t row, std::size_t col, std::size_t rows, std::size_t cols);

struct SynthExample {
  ExampleRecord record;
  SpatialFeatures features;
  std::size_t evidence_cell = 0;  // row-major
  std::vector<bool> mask_cells;   // one flag per grid cell
};

struct SynthDataset {
  SynthConfig config;
  std::uint64_t seed = 0;
  std::vector<SynthExample> train, val, test;
};

// Fully determined by (config, seed).
SynthDataset generate_synthetic(const SynthConfig& config, std::uint64_t seed);

// Checks that the record's answer and explanation agree with the objects
// actually encoded in the features and that the mask marks the evidence cell.
// Throws InputError describing the first inconsistency.
void validate_synthetic(const SynthExample& example, const SynthConfig& config);

// Writes train/val/test.jsonl, features/<id>.pjxf, masks/<id>.pgm and
// synth.json (config + seed) under `out_dir`, creating it if needed.
void write_synthetic(const SynthDataset& dataset, const std::filesystem::path& out_dir);

}  // namespace pjx
