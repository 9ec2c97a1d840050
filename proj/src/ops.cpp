#include "pjx/ops.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "pjx/errors.hpp"

namespace pjx {

namespace {

using detail::Node;

enum class BroadcastKind { kSame, kRowGroups, kColumn };

struct Broadcast {
  BroadcastKind kind;
  std::size_t group = 1;  // rows of the large operand per row of the small one
  bool swapped = false;   // true when the first argument is the small operand
};

Broadcast resolve_broadcast(const Tensor& a, const Tensor& b, const char* op) {
  if (a.shape() == b.shape()) return {BroadcastKind::kSame};
  auto fail = [&] {
    throw DimensionError(std::string(op) + ": cannot broadcast " + shape_string(a.shape()) + " with " +
                         shape_string(b.shape()));
  };
  if (a.rank() != 2 || b.rank() != 2) fail();
  auto try_pair = [](const Tensor& big, const Tensor& small, Broadcast& out) {
    const auto R = big.shape()[0], C = big.shape()[1];
    const auto r = small.shape()[0], c = small.shape()[1];
    if (c == C && r <= R && R % r == 0) {
      out = {BroadcastKind::kRowGroups, R / r};
      return true;
    }
    if (c == 1 && r == R) {
      out = {BroadcastKind::kColumn};
      return true;
    }
    return false;
  };
  Broadcast bc{BroadcastKind::kSame};
  if (try_pair(a, b, bc)) return bc;
  if (try_pair(b, a, bc)) {
    bc.swapped = true;
    return bc;
  }
  fail();
  return bc;
}

// Index into the small operand for flat index i of the large one.
inline std::size_t small_index(const Broadcast& bc, std::size_t i, std::size_t cols) {
  switch (bc.kind) {
    case BroadcastKind::kSame:
      return i;
    case BroadcastKind::kRowGroups:
      return (i / cols / bc.group) * cols + i % cols;
    case BroadcastKind::kColumn:
      return i / cols;
  }
  return i;
}

enum class BinaryOp { kAdd, kSub, kMul };

Tensor binary(const Tensor& a_in, const Tensor& b_in, BinaryOp op, const char* name) {
  const auto bc = resolve_broadcast(a_in, b_in, name);
  // Work in terms of (big, small); `sign_small` handles sub with swapped roles.
  const Tensor& big = bc.swapped ? b_in : a_in;
  const Tensor& small = bc.swapped ? a_in : b_in;
  const auto n = big.size();
  const auto cols = big.cols();
  auto bv = big.values();
  auto sv = small.values();
  std::vector<double> out(n);
  const double big_sign = (op == BinaryOp::kSub && bc.swapped) ? -1.0 : 1.0;
  const double small_sign = (op == BinaryOp::kSub && !bc.swapped) ? -1.0 : 1.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double s = sv[small_index(bc, i, cols)];
    out[i] = op == BinaryOp::kMul ? bv[i] * s : big_sign * bv[i] + small_sign * s;
  }
  return make_result(big.shape(), std::move(out), {big, small}, [bc, op, big_sign, small_sign, cols](Node& self) {
    Node& big_node = *self.parents[0];
    Node& small_node = *self.parents[1];
    const auto& g = self.grad;
    if (big_node.requires_grad) {
      auto& gb = big_node.grad_buffer();
      for (std::size_t i = 0; i < g.size(); ++i) {
        gb[i] += op == BinaryOp::kMul ? g[i] * small_node.value[small_index(bc, i, cols)] : big_sign * g[i];
      }
    }
    if (small_node.requires_grad) {
      auto& gs = small_node.grad_buffer();
      for (std::size_t i = 0; i < g.size(); ++i) {
        gs[small_index(bc, i, cols)] += op == BinaryOp::kMul ? g[i] * big_node.value[i] : small_sign * g[i];
      }
    }
  });
}

template <typename Fwd, typename Deriv>
Tensor unary(const Tensor& x, Fwd fwd, Deriv deriv) {
  auto xv = x.values();
  std::vector<double> out(xv.size());
  for (std::size_t i = 0; i < xv.size(); ++i) out[i] = fwd(xv[i]);
  return make_result(x.shape(), std::move(out), {x}, [deriv](Node& self) {
    Node& in = *self.parents[0];
    auto& gi = in.grad_buffer();
    for (std::size_t i = 0; i < self.grad.size(); ++i) gi[i] += self.grad[i] * deriv(in.value[i], self.value[i]);
  });
}

void require_rank2(const Tensor& x, const char* op) {
  if (x.rank() != 2) throw DimensionError(std::string(op) + ": expected rank-2 tensor, got " + shape_string(x.shape()));
}

}  // namespace

Tensor add(const Tensor& a, const Tensor& b) { return binary(a, b, BinaryOp::kAdd, "add"); }
Tensor sub(const Tensor& a, const Tensor& b) { return binary(a, b, BinaryOp::kSub, "sub"); }
Tensor ewise_mul(const Tensor& a, const Tensor& b) { return binary(a, b, BinaryOp::kMul, "ewise_mul"); }

Tensor matmul(const Tensor& a, const Tensor& b) {
  if (a.rank() != 2 || b.rank() != 2 || a.shape()[1] != b.shape()[0]) {
    throw DimensionError("matmul: incompatible shapes " + shape_string(a.shape()) + " and " +
                         shape_string(b.shape()));
  }
  const auto R = a.shape()[0], K = a.shape()[1], C = b.shape()[1];
  std::vector<double> out(R * C, 0.0);
  auto av = a.values();
  auto bv = b.values();
  for (std::size_t i = 0; i < R; ++i) {
    double* orow = out.data() + i * C;
    for (std::size_t k = 0; k < K; ++k) {
      const double aik = av[i * K + k];
      if (aik == 0.0) continue;
      const double* brow = bv.data() + k * C;
      for (std::size_t j = 0; j < C; ++j) orow[j] += aik * brow[j];
    }
  }
  return make_result({R, C}, std::move(out), {a, b}, [R, K, C](Node& self) {
    Node& an = *self.parents[0];
    Node& bn = *self.parents[1];
    const double* g = self.grad.data();
    if (an.requires_grad) {
      // dA = G * B^T
      auto& ga = an.grad_buffer();
      for (std::size_t i = 0; i < R; ++i) {
        const double* grow = g + i * C;
        for (std::size_t k = 0; k < K; ++k) {
          const double* brow = bn.value.data() + k * C;
          double acc = 0.0;
          for (std::size_t j = 0; j < C; ++j) acc += grow[j] * brow[j];
          ga[i * K + k] += acc;
        }
      }
    }
    if (bn.requires_grad) {
      // dB = A^T * G
      auto& gb = bn.grad_buffer();
      for (std::size_t i = 0; i < R; ++i) {
        const double* grow = g + i * C;
        for (std::size_t k = 0; k < K; ++k) {
          const double aik = an.value[i * K + k];
          if (aik == 0.0) continue;
          double* gbrow = gb.data() + k * C;
          for (std::size_t j = 0; j < C; ++j) gbrow[j] += aik * grow[j];
        }
      }
    }
  });
}

Tensor scale(const Tensor& x, double factor) {
  return unary(x, [factor](double v) { return v * factor; }, [factor](double, double) { return factor; });
}

Tensor signed_sqrt(const Tensor& x) {
  return unary(
      x,
      [](double v) { return v < 0.0 ? -std::sqrt(-v) : std::sqrt(v); },
      [](double v, double) { return 1.0 / (2.0 * std::max(std::sqrt(std::abs(v)), kSignedSqrtEps)); });
}

Tensor l2_normalize(const Tensor& x) {
  const auto R = x.rows(), C = x.cols();
  auto xv = x.values();
  std::vector<double> out(xv.size());
  std::vector<double> norms(R);
  for (std::size_t r = 0; r < R; ++r) {
    double ss = 0.0;
    for (std::size_t c = 0; c < C; ++c) ss += xv[r * C + c] * xv[r * C + c];
    norms[r] = std::sqrt(ss);
    const double denom = std::max(norms[r], kL2NormEps);
    for (std::size_t c = 0; c < C; ++c) out[r * C + c] = xv[r * C + c] / denom;
  }
  return make_result(x.shape(), std::move(out), {x}, [R, C, norms = std::move(norms)](Node& self) {
    Node& in = *self.parents[0];
    auto& gi = in.grad_buffer();
    for (std::size_t r = 0; r < R; ++r) {
      const double* g = self.grad.data() + r * C;
      const double* y = self.value.data() + r * C;
      if (norms[r] > kL2NormEps) {
        // d(x/|x|) = (g - y (y . g)) / |x|
        double dot = 0.0;
        for (std::size_t c = 0; c < C; ++c) dot += y[c] * g[c];
        for (std::size_t c = 0; c < C; ++c) gi[r * C + c] += (g[c] - y[c] * dot) / norms[r];
      } else {
        for (std::size_t c = 0; c < C; ++c) gi[r * C + c] += g[c] / kL2NormEps;
      }
    }
  });
}

Tensor softmax(const Tensor& x, std::size_t axis) {
  if (axis >= std::max<std::size_t>(x.rank(), 1) || x.rank() > 2) {
    throw DimensionError("softmax: invalid axis " + std::to_string(axis) + " for shape " + shape_string(x.shape()));
  }
  const auto R = x.rows(), C = x.cols();
  // Reduce along columns (axis 1 / rank 1) or rows (axis 0 of rank 2).
  const bool along_rows = x.rank() == 2 && axis == 0;
  const auto lanes = along_rows ? C : R;
  const auto len = along_rows ? R : C;
  const auto stride = along_rows ? C : 1;
  auto lane_start = [=](std::size_t lane) { return along_rows ? lane : lane * C; };
  auto xv = x.values();
  std::vector<double> out(xv.size());
  for (std::size_t l = 0; l < lanes; ++l) {
    const auto s = lane_start(l);
    double mx = -std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < len; ++k) mx = std::max(mx, xv[s + k * stride]);
    double total = 0.0;
    for (std::size_t k = 0; k < len; ++k) {
      out[s + k * stride] = std::exp(xv[s + k * stride] - mx);
      total += out[s + k * stride];
    }
    for (std::size_t k = 0; k < len; ++k) out[s + k * stride] /= total;
  }
  return make_result(x.shape(), std::move(out), {x}, [=](Node& self) {
    Node& in = *self.parents[0];
    auto& gi = in.grad_buffer();
    for (std::size_t l = 0; l < lanes; ++l) {
      const auto s = lane_start(l);
      double dot = 0.0;
      for (std::size_t k = 0; k < len; ++k) dot += self.value[s + k * stride] * self.grad[s + k * stride];
      for (std::size_t k = 0; k < len; ++k) {
        const auto i = s + k * stride;
        gi[i] += self.value[i] * (self.grad[i] - dot);
      }
    }
  });
}

Tensor log_softmax(const Tensor& x) {
  const auto R = x.rows(), C = x.cols();
  auto xv = x.values();
  std::vector<double> out(xv.size());
  for (std::size_t r = 0; r < R; ++r) {
    const double* row = xv.data() + r * C;
    const double mx = *std::max_element(row, row + C);
    double total = 0.0;
    for (std::size_t c = 0; c < C; ++c) total += std::exp(row[c] - mx);
    const double lse = mx + std::log(total);
    for (std::size_t c = 0; c < C; ++c) out[r * C + c] = row[c] - lse;
  }
  return make_result(x.shape(), std::move(out), {x}, [R, C](Node& self) {
    Node& in = *self.parents[0];
    auto& gi = in.grad_buffer();
    for (std::size_t r = 0; r < R; ++r) {
      double gsum = 0.0;
      for (std::size_t c = 0; c < C; ++c) gsum += self.grad[r * C + c];
      for (std::size_t c = 0; c < C; ++c) {
        const auto i = r * C + c;
        gi[i] += self.grad[i] - std::exp(self.value[i]) * gsum;
      }
    }
  });
}

Tensor relu(const Tensor& x) {
  return unary(x, [](double v) { return v > 0.0 ? v : 0.0; }, [](double v, double) { return v > 0.0 ? 1.0 : 0.0; });
}

Tensor tanh(const Tensor& x) {
  return unary(x, [](double v) { return std::tanh(v); }, [](double, double y) { return 1.0 - y * y; });
}

Tensor sigmoid(const Tensor& x) {
  return unary(
      x, [](double v) { return 1.0 / (1.0 + std::exp(-v)); }, [](double, double y) { return y * (1.0 - y); });
}

Tensor dropout(const Tensor& x, double rate, bool training, std::mt19937_64& rng) {
  if (!(rate >= 0.0 && rate < 1.0)) throw ParameterError("dropout rate must lie in [0, 1), got " + std::to_string(rate));
  if (!training || rate == 0.0) return x;
  const double keep_scale = 1.0 / (1.0 - rate);
  std::vector<double> mask(x.size());
  for (auto& m : mask) {
    // 53-bit uniform in [0, 1); independent of the standard library's distributions.
    const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
    m = u < rate ? 0.0 : keep_scale;
  }
  auto xv = x.values();
  std::vector<double> out(xv.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = xv[i] * mask[i];
  return make_result(x.shape(), std::move(out), {x}, [mask = std::move(mask)](Node& self) {
    auto& gi = self.parents[0]->grad_buffer();
    for (std::size_t i = 0; i < mask.size(); ++i) gi[i] += self.grad[i] * mask[i];
  });
}

Tensor concat_cols(const Tensor& a, const Tensor& b) {
  require_rank2(a, "concat_cols");
  require_rank2(b, "concat_cols");
  if (a.rows() != b.rows()) {
    throw DimensionError("concat_cols: row mismatch " + shape_string(a.shape()) + " vs " + shape_string(b.shape()));
  }
  const auto R = a.rows(), Ca = a.cols(), Cb = b.cols(), C = Ca + Cb;
  std::vector<double> out(R * C);
  for (std::size_t r = 0; r < R; ++r) {
    std::copy_n(a.values().data() + r * Ca, Ca, out.data() + r * C);
    std::copy_n(b.values().data() + r * Cb, Cb, out.data() + r * C + Ca);
  }
  return make_result({R, C}, std::move(out), {a, b}, [R, Ca, Cb, C](Node& self) {
    Node& an = *self.parents[0];
    Node& bn = *self.parents[1];
    if (an.requires_grad) {
      auto& ga = an.grad_buffer();
      for (std::size_t r = 0; r < R; ++r)
        for (std::size_t c = 0; c < Ca; ++c) ga[r * Ca + c] += self.grad[r * C + c];
    }
    if (bn.requires_grad) {
      auto& gb = bn.grad_buffer();
      for (std::size_t r = 0; r < R; ++r)
        for (std::size_t c = 0; c < Cb; ++c) gb[r * Cb + c] += self.grad[r * C + Ca + c];
    }
  });
}

Tensor slice_cols(const Tensor& x, std::size_t start, std::size_t count) {
  require_rank2(x, "slice_cols");
  if (count == 0 || start + count > x.cols()) {
    throw DimensionError("slice_cols: [" + std::to_string(start) + ", " + std::to_string(start + count) +
                         ") out of range for " + shape_string(x.shape()));
  }
  const auto R = x.rows(), C = x.cols();
  std::vector<double> out(R * count);
  for (std::size_t r = 0; r < R; ++r) std::copy_n(x.values().data() + r * C + start, count, out.data() + r * count);
  return make_result({R, count}, std::move(out), {x}, [R, C, start, count](Node& self) {
    auto& gi = self.parents[0]->grad_buffer();
    for (std::size_t r = 0; r < R; ++r)
      for (std::size_t c = 0; c < count; ++c) gi[r * C + start + c] += self.grad[r * count + c];
  });
}

Tensor reshape(const Tensor& x, Shape shape) {
  if (shape_size(shape) != x.size()) {
    throw DimensionError("reshape: " + shape_string(x.shape()) + " -> " + shape_string(shape));
  }
  std::vector<double> out(x.values().begin(), x.values().end());
  return make_result(std::move(shape), std::move(out), {x}, [](Node& self) {
    auto& gi = self.parents[0]->grad_buffer();
    for (std::size_t i = 0; i < gi.size(); ++i) gi[i] += self.grad[i];
  });
}

Tensor sum(const Tensor& x) {
  double total = 0.0;
  for (double v : x.values()) total += v;
  return make_result({1}, {total}, {x}, [](Node& self) {
    auto& gi = self.parents[0]->grad_buffer();
    for (auto& g : gi) g += self.grad[0];
  });
}

Tensor attend(const Tensor& weights, const Tensor& grid) {
  require_rank2(weights, "attend");
  require_rank2(grid, "attend");
  const auto B = weights.rows(), L = weights.cols(), D = grid.cols();
  if (grid.rows() != B * L) {
    throw DimensionError("attend: weights " + shape_string(weights.shape()) + " incompatible with grid " +
                         shape_string(grid.shape()));
  }
  std::vector<double> out(B * D, 0.0);
  auto wv = weights.values();
  auto gv = grid.values();
  for (std::size_t b = 0; b < B; ++b)
    for (std::size_t l = 0; l < L; ++l) {
      const double w = wv[b * L + l];
      const double* row = gv.data() + (b * L + l) * D;
      for (std::size_t d = 0; d < D; ++d) out[b * D + d] += w * row[d];
    }
  return make_result({B, D}, std::move(out), {weights, grid}, [B, L, D](Node& self) {
    Node& wn = *self.parents[0];
    Node& gn = *self.parents[1];
    if (wn.requires_grad) {
      auto& gw = wn.grad_buffer();
      for (std::size_t b = 0; b < B; ++b)
        for (std::size_t l = 0; l < L; ++l) {
          const double* row = gn.value.data() + (b * L + l) * D;
          double acc = 0.0;
          for (std::size_t d = 0; d < D; ++d) acc += self.grad[b * D + d] * row[d];
          gw[b * L + l] += acc;
        }
    }
    if (gn.requires_grad) {
      auto& gg = gn.grad_buffer();
      for (std::size_t b = 0; b < B; ++b)
        for (std::size_t l = 0; l < L; ++l) {
          const double w = wn.value[b * L + l];
          for (std::size_t d = 0; d < D; ++d) gg[(b * L + l) * D + d] += w * self.grad[b * D + d];
        }
    }
  });
}

Tensor gather_rows(const Tensor& table, std::span<const std::size_t> ids) {
  require_rank2(table, "gather_rows");
  if (ids.empty()) throw DimensionError("gather_rows: empty id list");
  const auto V = table.rows(), E = table.cols();
  std::vector<std::size_t> idx(ids.begin(), ids.end());
  std::vector<double> out(idx.size() * E);
  for (std::size_t i = 0; i < idx.size(); ++i) {
    if (idx[i] >= V) {
      throw DimensionError("gather_rows: id " + std::to_string(idx[i]) + " out of range for table " +
                           shape_string(table.shape()));
    }
    std::copy_n(table.values().data() + idx[i] * E, E, out.data() + i * E);
  }
  const auto n = idx.size();
  return make_result({n, E}, std::move(out), {table}, [E, idx = std::move(idx)](Node& self) {
    auto& gt = self.parents[0]->grad_buffer();
    for (std::size_t i = 0; i < idx.size(); ++i)
      for (std::size_t e = 0; e < E; ++e) gt[idx[i] * E + e] += self.grad[i * E + e];
  });
}

Tensor neg_log_prob(const Tensor& probs, std::span<const std::size_t> labels, double floor) {
  require_rank2(probs, "neg_log_prob");
  const auto R = probs.rows(), C = probs.cols();
  if (labels.size() != R) {
    throw DimensionError("neg_log_prob: " + std::to_string(labels.size()) + " labels for " + std::to_string(R) +
                         " rows");
  }
  std::vector<std::size_t> lab(labels.begin(), labels.end());
  double total = 0.0;
  for (std::size_t r = 0; r < R; ++r) {
    if (lab[r] >= C) throw DimensionError("neg_log_prob: label " + std::to_string(lab[r]) + " out of range");
    total -= std::log(std::max(probs.values()[r * C + lab[r]], floor));
  }
  return make_result({1}, {total / static_cast<double>(R)}, {probs}, [R, C, floor, lab = std::move(lab)](Node& self) {
    Node& in = *self.parents[0];
    auto& gi = in.grad_buffer();
    for (std::size_t r = 0; r < R; ++r) {
      const double p = in.value[r * C + lab[r]];
      if (p > floor) gi[r * C + lab[r]] -= self.grad[0] / (p * static_cast<double>(R));
    }
  });
}

Tensor pick_neg_sum(const Tensor& logprobs, std::span<const int> targets, double weight) {
  require_rank2(logprobs, "pick_neg_sum");
  const auto R = logprobs.rows(), C = logprobs.cols();
  if (targets.size() != R) {
    throw DimensionError("pick_neg_sum: " + std::to_string(targets.size()) + " targets for " + std::to_string(R) +
                         " rows");
  }
  std::vector<int> tgt(targets.begin(), targets.end());
  double total = 0.0;
  for (std::size_t r = 0; r < R; ++r) {
    if (tgt[r] < 0) continue;
    if (static_cast<std::size_t>(tgt[r]) >= C) throw DimensionError("pick_neg_sum: target out of range");
    total -= weight * logprobs.values()[r * C + static_cast<std::size_t>(tgt[r])];
  }
  return make_result({1}, {total}, {logprobs}, [C, weight, tgt = std::move(tgt)](Node& self) {
    auto& gi = self.parents[0]->grad_buffer();
    for (std::size_t r = 0; r < tgt.size(); ++r) {
      if (tgt[r] >= 0) gi[r * C + static_cast<std::size_t>(tgt[r])] -= weight * self.grad[0];
    }
  });
}

}  // namespace pjx
