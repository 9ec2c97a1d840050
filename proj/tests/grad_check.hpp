#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "pjx/tensor.hpp"

namespace pjx::gradcheck {

inline double relative_error(double analytic, double numeric) {
  return std::abs(analytic - numeric) / std::max({std::abs(analytic), std::abs(numeric), 1e-6});
}

struct GradCheckResult {
  double max_rel_err = 0.0;
  std::string worst;  // "<name>[<index>]"
  std::size_t checked = 0;
};

// Compares the reverse-mode gradient of `loss()` with central differences
// for every element of every tensor in `wrt`. `loss` must rebuild its graph
// on each call.
inline GradCheckResult check_gradients(const std::function<Tensor()>& loss,
                                       std::vector<std::pair<std::string, Tensor>> wrt, double h = 1e-5) {
  for (auto& [name, t] : wrt) t.zero_grad();
  backward(loss());
  GradCheckResult result;
  for (auto& [name, t] : wrt) {
    const auto analytic = t.grad();
    auto values = t.mutable_values();
    for (std::size_t i = 0; i < values.size(); ++i) {
      const double saved = values[i];
      values[i] = saved + h;
      const double up = loss().item();
      values[i] = saved - h;
      const double down = loss().item();
      values[i] = saved;
      const double err = relative_error(analytic[i], (up - down) / (2.0 * h));
      ++result.checked;
      if (err > result.max_rel_err) {
        result.max_rel_err = err;
        result.worst = name + "[" + std::to_string(i) + "]";
      }
    }
  }
  return result;
}

}  // namespace pjx::gradcheck
