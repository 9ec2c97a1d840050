#pragma once

#include <cstddef>
#include <vector>

#include "pjx/types.hpp"

namespace pjx {

// How cell centres of the two maps are placed in the plane.
//   kAuto: raw cell units when both grids have the same shape, the unit square
//          otherwise.
//   kUnitSquare: centre of cell (n, m) at ((m + 0.5) / M, (n + 0.5) / N).
//   kSecondGrid: coordinates measured in cells of the second map's grid, so a
//          map of any resolution is compared on the reference grid's scale.
enum class GroundFrame { kAuto, kUnitSquare, kSecondGrid };

// Optimal flow between the non-zero cells of a source and a sink map.
struct TransportPlan {
  std::vector<std::size_t> sources;  // row-major cell indices of the first map
  std::vector<std::size_t> sinks;    // row-major cell indices of the second map
  std::vector<double> flow;          // sources.size() x sinks.size(), row-major
  double cost = 0.0;

  double at(std::size_t i, std::size_t j) const { return flow[i * sinks.size() + j]; }
};

// Planar coordinates (x, y) = (column, row) of every cell of `map` in `frame`.
std::vector<std::pair<double, double>> cell_centres(const AttentionMap& map, const AttentionMap& other,
                                                    GroundFrame frame, bool is_second);

// Exact earth mover's distance under Euclidean ground distance, solved as a
// min-cost flow by successive shortest augmenting paths with node potentials.
// Throws ContractError when either map is not a normalized distribution.
TransportPlan emd_plan(const AttentionMap& a, const AttentionMap& b, GroundFrame frame = GroundFrame::kAuto);
double emd(const AttentionMap& a, const AttentionMap& b, GroundFrame frame = GroundFrame::kAuto);

}  // namespace pjx
