#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace pjx {

// Normalized non-negative N x M spatial distribution, row-major.
struct AttentionMap {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> cells;

  double at(std::size_t r, std::size_t c) const { return cells[r * cols + c]; }
  std::size_t size() const { return cells.size(); }
  // Row-major index of the largest cell, lowest index on ties.
  std::size_t hottest() const;
};

// Throws ContractError unless the map is well-shaped, non-negative and sums to
// 1 within `tolerance`.
void validate_attention(const AttentionMap& map, double tolerance = 1e-6);
bool is_normalized(const AttentionMap& map, double tolerance = 1e-6);

AttentionMap uniform_attention(std::size_t rows, std::size_t cols);
AttentionMap one_hot_attention(std::size_t rows, std::size_t cols, std::size_t index);

// Index of the maximal value, lowest index on ties.
std::size_t argmax_index(const std::vector<double>& values);

struct AnswerDistribution {
  std::vector<double> probs;
  std::size_t best = 0;
};

AnswerDistribution make_answer_distribution(std::vector<double> probs);

enum class FeatureSource { kIngested, kSynthetic };

// C x N x M feature grid, stored channel-major as in the PJXF file layout.
struct SpatialFeatures {
  std::size_t channels = 0;
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> values;  // index (c * rows + n) * cols + m
  FeatureSource source = FeatureSource::kIngested;

  double at(std::size_t c, std::size_t n, std::size_t m) const { return values[(c * rows + n) * cols + m]; }
  double& at(std::size_t c, std::size_t n, std::size_t m) { return values[(c * rows + n) * cols + m]; }
  std::size_t locations() const { return rows * cols; }
  // Location-major [N*M, C] layout used by the model (row = location).
  std::vector<double> location_major() const;
};

// Throws InputError for empty dimensions, wrong value count or non-finite values.
void validate_features(const SpatialFeatures& features);

}  // namespace pjx
