#pragma once

#include <cstddef>
#include <random>
#include <span>
#include <vector>

#include "pjx/tensor.hpp"

namespace pjx {

// Broadcasting for binary elementwise ops (add, sub, ewise_mul).
//
// Let `a` be [R, C]. The second operand `b` may be
//   * the same shape as `a`;
//   * [G, C] with R % G == 0: row r of `a` pairs with row r / (R / G) of `b`.
//     [1, C] is the bias case. With G = batch size and R = batch * locations
//     this pairs every spatial location of an example with that example's
//     vector;
//   * [R, 1]: column r of `b` scales the whole row r of `a`.
// If `a` is the smaller operand the roles are swapped. Rank-1 operands must
// match exactly. Anything else throws DimensionError.
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor ewise_mul(const Tensor& a, const Tensor& b);

Tensor matmul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& x, double factor);

inline constexpr double kSignedSqrtEps = 1e-8;
inline constexpr double kL2NormEps = 1e-12;

// sign(x) * sqrt(|x|); derivative 1 / (2 * max(sqrt|x|, 1e-8)).
Tensor signed_sqrt(const Tensor& x);
// Divides each row (rank 2) or the whole vector (rank 1) by max(||.||_2, 1e-12).
Tensor l2_normalize(const Tensor& x);

// Max-subtracted softmax along `axis` (0 or 1 for rank 2, 0 for rank 1).
Tensor softmax(const Tensor& x, std::size_t axis);
// Row-wise log-softmax of a rank-2 tensor.
Tensor log_softmax(const Tensor& x);

// ReLU with derivative 0 at 0.
Tensor relu(const Tensor& x);
Tensor tanh(const Tensor& x);
Tensor sigmoid(const Tensor& x);

// Inverted dropout. In training mode each element is zeroed with probability
// `rate` and survivors are scaled by 1 / (1 - rate); otherwise identity.
// Throws ParameterError unless 0 <= rate < 1.
Tensor dropout(const Tensor& x, double rate, bool training, std::mt19937_64& rng);

Tensor concat_cols(const Tensor& a, const Tensor& b);
Tensor slice_cols(const Tensor& x, std::size_t start, std::size_t count);
Tensor reshape(const Tensor& x, Shape shape);
Tensor sum(const Tensor& x);

// weights [B, L] and grid [B * L, D] -> [B, D], out[b] = sum_l w[b, l] * grid[b * L + l].
Tensor attend(const Tensor& weights, const Tensor& grid);

// Rows of `table` selected by `ids` -> [ids.size(), table.cols()].
Tensor gather_rows(const Tensor& table, std::span<const std::size_t> ids);

// Mean over rows of -log(max(probs[r, labels[r]], floor)).
Tensor neg_log_prob(const Tensor& probs, std::span<const std::size_t> labels, double floor = 1e-12);

// -weight * sum over rows with targets[r] >= 0 of logprobs[r, targets[r]].
Tensor pick_neg_sum(const Tensor& logprobs, std::span<const int> targets, double weight = 1.0);

}  // namespace pjx
