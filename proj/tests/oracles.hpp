#pragma once

// Reference implementations that share no code with the library, used to
// cross-check the transport solver and the rank statistics.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <vector>

#include "pjx/random.hpp"
#include "pjx/types.hpp"

namespace pjx::oracle {

// Integer masses on a rows x cols grid; every map carries the same total.
struct UnitMap {
  std::size_t rows = 0, cols = 0;
  std::vector<int> units;

  AttentionMap distribution() const {
    int total = 0;
    for (int u : units) total += u;
    AttentionMap m{rows, cols, std::vector<double>(units.size())};
    for (std::size_t i = 0; i < units.size(); ++i) m.cells[i] = static_cast<double>(units[i]) / total;
    return m;
  }
};

inline UnitMap random_unit_map(std::size_t rows, std::size_t cols, int total, Rng& rng) {
  UnitMap m{rows, cols, std::vector<int>(rows * cols, 0)};
  for (int k = 0; k < total; ++k) ++m.units[rng.index(rows * cols)];
  return m;
}

// With integer masses some optimal plan is integral, and an integral plan
// between two maps of `total` unit masses is a pairing of the units. The
// minimum over every pairing is therefore the transport cost. Distances are
// in cell units.
inline double exhaustive_unit_emd(const UnitMap& a, const UnitMap& b) {
  std::vector<std::size_t> src, dst;
  for (std::size_t i = 0; i < a.units.size(); ++i)
    for (int k = 0; k < a.units[i]; ++k) src.push_back(i);
  for (std::size_t j = 0; j < b.units.size(); ++j)
    for (int k = 0; k < b.units[j]; ++k) dst.push_back(j);
  auto dist = [&](std::size_t i, std::size_t j) {
    const double dr = static_cast<double>(i / a.cols) - static_cast<double>(j / b.cols);
    const double dc = static_cast<double>(i % a.cols) - static_cast<double>(j % b.cols);
    return std::sqrt(dr * dr + dc * dc);
  };
  std::sort(dst.begin(), dst.end());
  double best = std::numeric_limits<double>::infinity();
  do {
    double cost = 0.0;
    for (std::size_t k = 0; k < src.size(); ++k) cost += dist(src[k], dst[k]);
    best = std::min(best, cost);
  } while (std::next_permutation(dst.begin(), dst.end()));
  return best / static_cast<double>(src.size());
}

// Mid-ranks by counting: 1 + #smaller + (#equal - 1) / 2.
inline std::vector<double> counting_ranks(const std::vector<double>& x) {
  std::vector<double> r(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    std::size_t less = 0, equal = 0;
    for (double v : x) {
      less += v < x[i] ? 1 : 0;
      equal += v == x[i] ? 1 : 0;
    }
    r[i] = 1.0 + static_cast<double>(less) + (static_cast<double>(equal) - 1.0) / 2.0;
  }
  return r;
}

// Spearman's rho with the tie correction of the rank-statistics literature:
//   rho = (Sx + Sy - sum d^2) / (2 sqrt(Sx Sy)),
//   Sx = (n^3 - n) / 12 - sum over tie groups (t^3 - t) / 12.
inline double spearman_with_ties(const std::vector<double>& x, const std::vector<double>& y) {
  const auto rx = counting_ranks(x);
  const auto ry = counting_ranks(y);
  const double n = static_cast<double>(x.size());
  auto tie_sum = [](std::vector<double> v) {
    std::sort(v.begin(), v.end());
    double s = 0.0;
    for (std::size_t i = 0; i < v.size();) {
      std::size_t j = i;
      while (j < v.size() && v[j] == v[i]) ++j;
      const double t = static_cast<double>(j - i);
      s += (t * t * t - t) / 12.0;
      i = j;
    }
    return s;
  };
  const double sx = (n * n * n - n) / 12.0 - tie_sum(x);
  const double sy = (n * n * n - n) / 12.0 - tie_sum(y);
  double d2 = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) d2 += (rx[i] - ry[i]) * (rx[i] - ry[i]);
  return (sx + sy - d2) / (2.0 * std::sqrt(sx * sy));
}

}  // namespace pjx::oracle
