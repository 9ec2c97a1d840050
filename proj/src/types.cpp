#include "pjx/types.hpp"

#include <cmath>

#include "pjx/errors.hpp"

namespace pjx {

std::size_t argmax_index(const std::vector<double>& values) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < values.size(); ++i) {
    if (values[i] > values[best]) best = i;
  }
  return best;
}

std::size_t AttentionMap::hottest() const { return argmax_index(cells); }

bool is_normalized(const AttentionMap& map, double tolerance) {
  if (map.rows == 0 || map.cols == 0 || map.cells.size() != map.rows * map.cols) return false;
  double total = 0.0;
  for (double v : map.cells) {
    if (!(v >= 0.0) || !std::isfinite(v)) return false;
    total += v;
  }
  return std::abs(total - 1.0) <= tolerance;
}

void validate_attention(const AttentionMap& map, double tolerance) {
  if (!is_normalized(map, tolerance)) {
    throw ContractError("attention map " + std::to_string(map.rows) + "x" + std::to_string(map.cols) +
                        " is not a normalized non-negative distribution");
  }
}

AttentionMap uniform_attention(std::size_t rows, std::size_t cols) {
  return {rows, cols, std::vector<double>(rows * cols, 1.0 / static_cast<double>(rows * cols))};
}

AttentionMap one_hot_attention(std::size_t rows, std::size_t cols, std::size_t index) {
  AttentionMap map{rows, cols, std::vector<double>(rows * cols, 0.0)};
  map.cells.at(index) = 1.0;
  return map;
}

AnswerDistribution make_answer_distribution(std::vector<double> probs) {
  AnswerDistribution d;
  d.best = argmax_index(probs);
  d.probs = std::move(probs);
  return d;
}

std::vector<double> SpatialFeatures::location_major() const {
  std::vector<double> out(values.size());
  const auto L = locations();
  for (std::size_t c = 0; c < channels; ++c)
    for (std::size_t l = 0; l < L; ++l) out[l * channels + c] = values[c * L + l];
  return out;
}

void validate_features(const SpatialFeatures& f) {
  if (f.channels == 0 || f.rows == 0 || f.cols == 0) throw InputError("spatial features need C, N, M >= 1");
  if (f.values.size() != f.channels * f.rows * f.cols) throw InputError("spatial feature value count mismatch");
  for (double v : f.values) {
    if (!std::isfinite(v)) throw InputError("spatial features contain non-finite values");
  }
}

}  // namespace pjx
