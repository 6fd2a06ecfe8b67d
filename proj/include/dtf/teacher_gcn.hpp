#pragma once

#include <cstdint>
#include <memory>

#include "dtf/init.hpp"
#include "dtf/model.hpp"

namespace dtf {

// Â = D̃^{-1/2}(A + I)D̃^{-1/2}, D̃ the degree matrix of A + I.
// Throws DataError on negative or non-finite entries, DimensionError if A is not square.
Matrix normalize_adjacency(const Matrix& adjacency);

struct RoadNetwork {
  Matrix adjacency;
  Matrix normalized;

  static RoadNetwork from_adjacency(Matrix adjacency);
  std::size_t nodes() const { return adjacency.rows; }
};

// Â·[x_t ‖ hidden]·W, the spatially mixed GRU input.
Tensor gcn_step(const Tensor& a_hat, const Tensor& x_t, const Tensor& hidden, const Tensor& weight);

struct TgcnConfig {
  std::size_t nodes = 0;
  std::size_t input_steps = 12;
  std::size_t horizon = 12;
  std::size_t hidden = 64;

  void validate() const;
};

// Graph convolution feeding a GRU, unrolled over the input window:
//   [r ‖ u] = sigmoid(gcn_step(Â, x_t, h, W_g) + b_g)
//   c       = tanh(gcn_step(Â, x_t, r ⊙ h, W_c) + b_c)
//   h       = u ⊙ h + (1 − u) ⊙ c
// and a linear readout of the final hidden state to H steps per node.
class TgcnTeacher final : public Forecaster {
 public:
  struct Weights {
    Tensor gate_weight, gate_bias;            // (1+hidden)×2·hidden, 2·hidden
    Tensor candidate_weight, candidate_bias;  // (1+hidden)×hidden, hidden
    Tensor readout, readout_bias;             // hidden×H, H
  };

  TgcnTeacher(RoadNetwork network, const TgcnConfig& config, std::uint64_t seed);
  static TgcnTeacher zeros(RoadNetwork network, const TgcnConfig& config);

  Tensor forward(const Matrix& window) const override;
  ParameterList parameters() const override;
  std::size_t nodes() const override { return config_.nodes; }
  std::size_t input_steps() const override { return config_.input_steps; }
  std::size_t horizon() const override { return config_.horizon; }
  std::string kind() const override { return "tgcn"; }

  const TgcnConfig& config() const { return config_; }
  const Weights& weights() const { return weights_; }
  const RoadNetwork& network() const { return network_; }

 private:
  TgcnTeacher(RoadNetwork network, const TgcnConfig& config, Rng* rng);

  RoadNetwork network_;
  Tensor a_hat_;
  TgcnConfig config_;
  Weights weights_;
};

// A pretrained teacher whose parameters are excluded from every gradient
// tape. Forward passes never record, so distillation cannot touch them.
class FrozenTeacher {
 public:
  FrozenTeacher() = default;

  // Emits a warning when `pretrained` is false.
  static FrozenTeacher freeze(std::shared_ptr<Forecaster> model, bool pretrained);

  bool valid() const { return model_ != nullptr; }
  Tensor forward(const Matrix& window) const;
  const Forecaster& model() const { return *model_; }
  std::size_t parameter_hash() const;

 private:
  std::shared_ptr<const Forecaster> model_;
};

}  // namespace dtf
