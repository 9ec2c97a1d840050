#include "pjx/eval/emd.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "pjx/errors.hpp"

namespace pjx {

namespace {

// Masses, flows and residual capacities at or below this are treated as zero.
constexpr double kMassTolerance = 1e-14;

void require_distribution(const AttentionMap& m, const char* which) {
  if (!is_normalized(m, 1e-6)) throw ContractError(std::string("emd: ") + which + " map is not a normalized distribution");
}

}  // namespace

std::vector<std::pair<double, double>> cell_centres(const AttentionMap& map, const AttentionMap& other,
                                                    GroundFrame frame, bool is_second) {
  const bool same = map.rows == other.rows && map.cols == other.cols;
  if (frame == GroundFrame::kAuto) frame = same ? GroundFrame::kSecondGrid : GroundFrame::kUnitSquare;
  double sx = 1.0, sy = 1.0;
  if (frame == GroundFrame::kUnitSquare) {
    sx = 1.0 / static_cast<double>(map.cols);
    sy = 1.0 / static_cast<double>(map.rows);
  } else if (!is_second) {
    sx = static_cast<double>(other.cols) / static_cast<double>(map.cols);
    sy = static_cast<double>(other.rows) / static_cast<double>(map.rows);
  }
  std::vector<std::pair<double, double>> out;
  out.reserve(map.size());
  for (std::size_t n = 0; n < map.rows; ++n)
    for (std::size_t m = 0; m < map.cols; ++m) {
      out.emplace_back((static_cast<double>(m) + 0.5) * sx, (static_cast<double>(n) + 0.5) * sy);
    }
  return out;
}

TransportPlan emd_plan(const AttentionMap& a, const AttentionMap& b, GroundFrame frame) {
  require_distribution(a, "first");
  require_distribution(b, "second");
  const auto pa = cell_centres(a, b, frame, false);
  const auto pb = cell_centres(b, a, frame, true);

  TransportPlan plan;
  std::vector<double> supply, demand;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a.cells[i] > 0.0) {
      plan.sources.push_back(i);
      supply.push_back(a.cells[i]);
    }
  }
  for (std::size_t j = 0; j < b.size(); ++j) {
    if (b.cells[j] > 0.0) {
      plan.sinks.push_back(j);
      demand.push_back(b.cells[j]);
    }
  }
  const auto S = plan.sources.size(), T = plan.sinks.size(), V = S + T;
  std::vector<double> dist_ij(S * T);
  for (std::size_t i = 0; i < S; ++i)
    for (std::size_t j = 0; j < T; ++j) {
      const auto& [x1, y1] = pa[plan.sources[i]];
      const auto& [x2, y2] = pb[plan.sinks[j]];
      dist_ij[i * T + j] = std::hypot(x1 - x2, y1 - y2);
    }
  plan.flow.assign(S * T, 0.0);

  // Nodes 0..S-1 are sources, S..V-1 sinks. Residual arcs: source -> sink with
  // unbounded capacity, sink -> source wherever flow is positive.
  constexpr double kInf = std::numeric_limits<double>::infinity();
  std::vector<double> potential(V, 0.0), dist(V);
  std::vector<std::ptrdiff_t> prev(V);
  std::vector<char> done(V);
  while (true) {
    std::fill(dist.begin(), dist.end(), kInf);
    std::fill(prev.begin(), prev.end(), -1);
    std::fill(done.begin(), done.end(), 0);
    for (std::size_t i = 0; i < S; ++i) {
      if (supply[i] > kMassTolerance) dist[i] = 0.0;
    }
    std::ptrdiff_t target = -1;
    while (true) {
      std::ptrdiff_t u = -1;
      for (std::size_t v = 0; v < V; ++v) {
        if (!done[v] && dist[v] < kInf && (u < 0 || dist[v] < dist[static_cast<std::size_t>(u)])) {
          u = static_cast<std::ptrdiff_t>(v);
        }
      }
      if (u < 0) break;
      const auto uu = static_cast<std::size_t>(u);
      done[uu] = 1;
      if (uu >= S && demand[uu - S] > kMassTolerance) {
        target = u;
        break;
      }
      if (uu < S) {
        for (std::size_t j = 0; j < T; ++j) {
          const auto v = S + j;
          if (done[v]) continue;
          const double nd = dist[uu] + dist_ij[uu * T + j] + potential[uu] - potential[v];
          if (nd < dist[v]) {
            dist[v] = nd;
            prev[v] = u;
          }
        }
      } else {
        const auto j = uu - S;
        for (std::size_t i = 0; i < S; ++i) {
          if (done[i] || plan.flow[i * T + j] <= kMassTolerance) continue;
          const double nd = dist[uu] - dist_ij[i * T + j] + potential[uu] - potential[i];
          if (nd < dist[i]) {
            dist[i] = nd;
            prev[i] = u;
          }
        }
      }
    }
    if (target < 0) break;

    const double reach = dist[static_cast<std::size_t>(target)];
    for (std::size_t v = 0; v < V; ++v) potential[v] += std::min(dist[v], reach);

    // Bottleneck along the path, then augment.
    const auto t = static_cast<std::size_t>(target);
    double amount = demand[t - S];
    auto v = t;
    while (prev[v] >= 0) {
      const auto u = static_cast<std::size_t>(prev[v]);
      if (u >= S) amount = std::min(amount, plan.flow[v * T + (u - S)]);
      v = u;
    }
    const auto origin = v;
    amount = std::min(amount, supply[origin]);
    v = t;
    while (prev[v] >= 0) {
      const auto u = static_cast<std::size_t>(prev[v]);
      if (u < S) {
        plan.flow[u * T + (v - S)] += amount;
      } else {
        auto& f = plan.flow[v * T + (u - S)];
        f -= amount;
        if (f <= kMassTolerance) f = 0.0;
      }
      v = u;
    }
    supply[origin] -= amount;
    demand[t - S] -= amount;
  }

  plan.cost = 0.0;
  for (std::size_t k = 0; k < plan.flow.size(); ++k) plan.cost += plan.flow[k] * dist_ij[k];
  return plan;
}

double emd(const AttentionMap& a, const AttentionMap& b, GroundFrame frame) { return emd_plan(a, b, frame).cost; }

}  // namespace pjx
