#pragma once

#include <cstddef>
#include <map>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "pjx/random.hpp"
#include "pjx/tensor.hpp"

namespace pjx {

// Ordered name -> parameter registry. Iteration order is lexicographic by
// name, which fixes the checkpoint layout and optimizer update order.
class ParameterSet {
 public:
  void add(const std::string& name, Tensor tensor);
  const Tensor& get(const std::string& name) const;
  Tensor& get(const std::string& name);
  bool contains(const std::string& name) const { return params_.count(name) != 0; }
  std::size_t size() const { return params_.size(); }

  auto begin() const { return params_.begin(); }
  auto end() const { return params_.end(); }
  auto begin() { return params_.begin(); }
  auto end() { return params_.end(); }

  void zero_grad();
  std::size_t value_count() const;

 private:
  std::map<std::string, Tensor> params_;
};

// Per-row affine map x W + b. W is [in, out], b is [1, out].
struct Linear {
  Tensor weight;
  Tensor bias;

  Tensor operator()(const Tensor& x) const;
  std::size_t in_features() const { return weight.rows(); }
  std::size_t out_features() const { return weight.cols(); }
};

// Fan-in scaled normal weights, zero bias; registered as <name>.weight / <name>.bias.
Linear make_linear(ParameterSet& params, const std::string& name, std::size_t in, std::size_t out,
                   Rng& rng);

// Table of `count` row vectors of width `dim`.
Tensor make_embedding(ParameterSet& params, const std::string& name, std::size_t count, std::size_t dim,
                      Rng& rng);

// Gate pre-activations are laid out as [input | forget | candidate | output].
struct LstmParams {
  Tensor w_input;   // [in, 4H]
  Tensor w_hidden;  // [H, 4H]
  Tensor bias;      // [1, 4H]

  std::size_t input_size() const { return w_input.rows(); }
  std::size_t hidden_size() const { return w_hidden.rows(); }
};

// Recurrent weights uniform in [-0.08, 0.08], zero bias.
LstmParams make_lstm(ParameterSet& params, const std::string& name, std::size_t in, std::size_t hidden,
                     Rng& rng);

struct LstmState {
  Tensor h;
  Tensor c;
};

// One gated recurrent update on a batch of rows:
//   i, f, o = sigmoid(.), g = tanh(.), c' = f*c + i*g, h' = o*tanh(c').
LstmState lstm_step(const Tensor& x, const LstmState& prev, const LstmParams& params);

}  // namespace pjx
