#include "pjx/eval/rank.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "pjx/data/io.hpp"
#include "pjx/errors.hpp"

namespace pjx {

std::vector<double> average_ranks(const std::vector<double>& values) {
  std::vector<std::size_t> order(values.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) { return values[i] < values[j]; });
  std::vector<double> ranks(values.size());
  for (std::size_t start = 0; start < order.size();) {
    std::size_t end = start + 1;
    while (end < order.size() && values[order[end]] == values[order[start]]) ++end;
    const double mean_rank = 0.5 * static_cast<double>(start + 1 + end);
    for (std::size_t k = start; k < end; ++k) ranks[order[k]] = mean_rank;
    start = end;
  }
  return ranks;
}

double pearson(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.empty()) throw ContractError("pearson: vectors must be non-empty and equally long");
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0) return 0.0;
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

namespace {

// Resampling leaves rounding noise on cells that are equal in exact
// arithmetic; snapping to 12 significant digits of the map's peak keeps such
// cells tied.
std::vector<double> resampled_for_ranking(const AttentionMap& m, std::size_t size) {
  auto v = area_resample(m.cells, m.rows, m.cols, size, size);
  double peak = 0.0;
  for (double x : v) peak = std::max(peak, std::abs(x));
  if (peak == 0.0) return v;
  for (auto& x : v) x = std::round(x / peak * 1e12);
  return v;
}

}  // namespace

RankCorrelation rank_correlation(const AttentionMap& a, const AttentionMap& b, std::size_t size) {
  const auto ra = average_ranks(resampled_for_ranking(a, size));
  const auto rb = average_ranks(resampled_for_ranking(b, size));
  auto constant = [](const std::vector<double>& r) {
    return std::all_of(r.begin(), r.end(), [&](double v) { return v == r.front(); });
  };
  if (constant(ra) || constant(rb)) return {0.0, true};
  return {pearson(ra, rb), false};
}

}  // namespace pjx
