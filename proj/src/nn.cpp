#include "pjx/nn.hpp"

#include <cmath>

#include "pjx/errors.hpp"
#include "pjx/ops.hpp"

namespace pjx {

void ParameterSet::add(const std::string& name, Tensor tensor) {
  if (!params_.emplace(name, std::move(tensor)).second) throw ContractError("duplicate parameter " + name);
}

const Tensor& ParameterSet::get(const std::string& name) const {
  auto it = params_.find(name);
  if (it == params_.end()) throw ContractError("unknown parameter " + name);
  return it->second;
}

Tensor& ParameterSet::get(const std::string& name) {
  auto it = params_.find(name);
  if (it == params_.end()) throw ContractError("unknown parameter " + name);
  return it->second;
}

void ParameterSet::zero_grad() {
  for (auto& [name, t] : params_) t.zero_grad();
}

std::size_t ParameterSet::value_count() const {
  std::size_t n = 0;
  for (const auto& [name, t] : params_) n += t.size();
  return n;
}

Tensor Linear::operator()(const Tensor& x) const { return add(matmul(x, weight), bias); }

Linear make_linear(ParameterSet& params, const std::string& name, std::size_t in, std::size_t out,
                   Rng& rng) {
  const double stddev = 1.0 / std::sqrt(static_cast<double>(in));
  std::vector<double> w(in * out);
  for (auto& v : w) v = rng.normal(0.0, stddev);
  Linear layer{Tensor::from({in, out}, std::move(w), true), Tensor::zeros({1, out}, true)};
  params.add(name + ".weight", layer.weight);
  params.add(name + ".bias", layer.bias);
  return layer;
}

Tensor make_embedding(ParameterSet& params, const std::string& name, std::size_t count, std::size_t dim,
                      Rng& rng) {
  const double stddev = 1.0 / std::sqrt(static_cast<double>(dim));
  std::vector<double> w(count * dim);
  for (auto& v : w) v = rng.normal(0.0, stddev);
  auto table = Tensor::from({count, dim}, std::move(w), true);
  params.add(name, table);
  return table;
}

LstmParams make_lstm(ParameterSet& params, const std::string& name, std::size_t in, std::size_t hidden,
                     Rng& rng) {
  auto fill = [&](std::size_t n) {
    std::vector<double> v(n);
    for (auto& x : v) x = rng.uniform(-0.08, 0.08);
    return v;
  };
  LstmParams lstm{Tensor::from({in, 4 * hidden}, fill(in * 4 * hidden), true),
                  Tensor::from({hidden, 4 * hidden}, fill(hidden * 4 * hidden), true),
                  Tensor::zeros({1, 4 * hidden}, true)};
  params.add(name + ".w_input", lstm.w_input);
  params.add(name + ".w_hidden", lstm.w_hidden);
  params.add(name + ".bias", lstm.bias);
  return lstm;
}

LstmState lstm_step(const Tensor& x, const LstmState& prev, const LstmParams& params) {
  const auto H = params.hidden_size();
  if (x.rank() != 2 || x.cols() != params.input_size()) {
    throw DimensionError("lstm_step: input " + shape_string(x.shape()) + " vs expected width " +
                         std::to_string(params.input_size()));
  }
  if (prev.h.rank() != 2 || prev.h.cols() != H || prev.c.shape() != prev.h.shape() || prev.h.rows() != x.rows()) {
    throw DimensionError("lstm_step: state " + shape_string(prev.h.shape()) + "/" + shape_string(prev.c.shape()) +
                         " inconsistent with input " + shape_string(x.shape()) + " and hidden size " +
                         std::to_string(H));
  }
  auto gates = add(add(matmul(x, params.w_input), matmul(prev.h, params.w_hidden)), params.bias);
  auto i = sigmoid(slice_cols(gates, 0, H));
  auto f = sigmoid(slice_cols(gates, H, H));
  auto g = tanh(slice_cols(gates, 2 * H, H));
  auto o = sigmoid(slice_cols(gates, 3 * H, H));
  auto c = add(ewise_mul(f, prev.c), ewise_mul(i, g));
  auto h = ewise_mul(o, tanh(c));
  return {h, c};
}

}  // namespace pjx
