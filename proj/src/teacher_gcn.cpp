#include "dtf/teacher_gcn.hpp"

#include <cmath>

#include "dtf/errors.hpp"
#include "dtf/log.hpp"

namespace dtf {

Matrix normalize_adjacency(const Matrix& adjacency) {
  if (adjacency.rows != adjacency.cols) {
    throw DimensionError("adjacency must be square, got " + std::to_string(adjacency.rows) + "x" +
                         std::to_string(adjacency.cols));
  }
  const std::size_t n = adjacency.rows;
  for (double v : adjacency.values) {
    if (!std::isfinite(v) || v < 0.0) throw DataError("adjacency entries must be finite and nonnegative");
  }
  Matrix with_loops = adjacency;
  for (std::size_t i = 0; i < n; ++i) with_loops(i, i) += 1.0;
  std::vector<double> inv_sqrt_degree(n);
  for (std::size_t i = 0; i < n; ++i) {
    double deg = 0.0;
    for (std::size_t j = 0; j < n; ++j) deg += with_loops(i, j);
    inv_sqrt_degree[i] = 1.0 / std::sqrt(deg);
  }
  Matrix out(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) out(i, j) = inv_sqrt_degree[i] * with_loops(i, j) * inv_sqrt_degree[j];
  return out;
}

RoadNetwork RoadNetwork::from_adjacency(Matrix adjacency) {
  RoadNetwork net;
  net.normalized = normalize_adjacency(adjacency);
  net.adjacency = std::move(adjacency);
  return net;
}

Tensor gcn_step(const Tensor& a_hat, const Tensor& x_t, const Tensor& hidden, const Tensor& weight) {
  return ops::matmul(ops::matmul(a_hat, ops::concat_cols(x_t, hidden)), weight);
}

void TgcnConfig::validate() const {
  if (nodes == 0 || input_steps == 0 || horizon == 0) {
    throw ConfigError("teacher needs positive node count, input length and horizon");
  }
  if (hidden < 1) throw ConfigError("teacher hidden width must be >= 1");
}

TgcnTeacher::TgcnTeacher(RoadNetwork network, const TgcnConfig& config, std::uint64_t seed) {
  Rng rng(seed);
  *this = TgcnTeacher(std::move(network), config, &rng);
}

TgcnTeacher TgcnTeacher::zeros(RoadNetwork network, const TgcnConfig& config) {
  return TgcnTeacher(std::move(network), config, nullptr);
}

TgcnTeacher::TgcnTeacher(RoadNetwork network, const TgcnConfig& config, Rng* rng)
    : network_(std::move(network)), config_(config) {
  config_.validate();
  if (network_.nodes() != config_.nodes) {
    throw ConfigError("road network has " + std::to_string(network_.nodes()) + " nodes, teacher configured for " +
                      std::to_string(config_.nodes));
  }
  a_hat_ = Tensor::from(network_.normalized);
  const std::size_t h = config_.hidden;
  auto proj = [rng](std::size_t in, std::size_t out) {
    return rng ? init_projection(in, out, *rng) : init_constant({in, out}, 0.0);
  };
  weights_.gate_weight = proj(1 + h, 2 * h);
  // Gates start biased open, as in the reference TGCN cell.
  weights_.gate_bias = init_constant({2 * h}, rng ? 1.0 : 0.0);
  weights_.candidate_weight = proj(1 + h, h);
  weights_.candidate_bias = init_constant({h}, 0.0);
  weights_.readout = proj(h, config_.horizon);
  weights_.readout_bias = init_constant({config_.horizon}, 0.0);
}

Tensor TgcnTeacher::forward(const Matrix& window) const {
  if (window.rows != config_.input_steps || window.cols != config_.nodes) {
    throw ConfigError("window is " + std::to_string(window.rows) + "x" + std::to_string(window.cols) +
                      ", teacher expects " + std::to_string(config_.input_steps) + "x" +
                      std::to_string(config_.nodes));
  }
  const std::size_t n = config_.nodes, h = config_.hidden;
  const auto& w = weights_;
  Tensor state = Tensor::zeros({n, h});
  for (std::size_t t = 0; t < config_.input_steps; ++t) {
    std::vector<double> column(n);
    for (std::size_t i = 0; i < n; ++i) column[i] = window(t, i);
    Tensor x = Tensor::from({n, 1}, std::move(column));
    Tensor gates = ops::sigmoid(ops::add_row_bias(gcn_step(a_hat_, x, state, w.gate_weight), w.gate_bias));
    Tensor reset = ops::slice_cols(gates, 0, h);
    Tensor update = ops::slice_cols(gates, h, 2 * h);
    Tensor candidate = ops::tanh(
        ops::add_row_bias(gcn_step(a_hat_, x, ops::mul(reset, state), w.candidate_weight), w.candidate_bias));
    state = ops::add(candidate, ops::mul(update, ops::sub(state, candidate)));
  }
  return ops::add_row_bias(ops::matmul(state, w.readout), w.readout_bias);
}

ParameterList TgcnTeacher::parameters() const {
  return {{"tgcn.gate.weight", weights_.gate_weight},
          {"tgcn.gate.bias", weights_.gate_bias},
          {"tgcn.candidate.weight", weights_.candidate_weight},
          {"tgcn.candidate.bias", weights_.candidate_bias},
          {"tgcn.readout.weight", weights_.readout},
          {"tgcn.readout.bias", weights_.readout_bias}};
}

FrozenTeacher FrozenTeacher::freeze(std::shared_ptr<Forecaster> model, bool pretrained) {
  if (!model) throw ContractError("freeze: no model");
  if (!pretrained) log_warning("freezing a teacher that was never trained or loaded from a checkpoint");
  for (auto& p : model->parameters()) {
    Tensor t = p.tensor;
    t.set_requires_grad(false);
    t.zero_grad();
  }
  FrozenTeacher frozen;
  frozen.model_ = std::move(model);
  return frozen;
}

Tensor FrozenTeacher::forward(const Matrix& window) const {
  if (!model_) throw ContractError("frozen teacher is empty");
  NoTapeScope no_tape;
  return model_->forward(window);
}

std::size_t FrozenTeacher::parameter_hash() const { return checkpoint_hash(model_->parameters()); }

}  // namespace dtf
