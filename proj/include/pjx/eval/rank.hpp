#pragma once

#include <cstddef>
#include <vector>

#include "pjx/types.hpp"

namespace pjx {

// 1-based ranks; tied values share the mean of the ranks they span.
std::vector<double> average_ranks(const std::vector<double>& values);

double pearson(const std::vector<double>& x, const std::vector<double>& y);

struct RankCorrelation {
  double value = 0.0;       // in [-1, 1]
  bool degenerate = false;  // a map was constant, value forced to 0
};

// Both maps are area-resampled to `size` x `size`, ranked with ties averaged,
// and the rank vectors correlated.
RankCorrelation rank_correlation(const AttentionMap& a, const AttentionMap& b, std::size_t size = 14);

}  // namespace pjx
