#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "dtf/model.hpp"
#include "dtf/transformer.hpp"

namespace dtf {

enum class BranchMode { dual, spatial_only, temporal_only };
enum class Positional { none, learned };

std::string to_string(BranchMode mode);
BranchMode parse_branch_mode(const std::string& text);
std::string to_string(Positional p);
Positional parse_positional(const std::string& text);

struct DualTransformerConfig {
  std::size_t nodes = 0;
  std::size_t input_steps = 12;
  std::size_t horizon = 12;
  std::size_t d_model = 64;
  std::size_t heads = 4;
  std::size_t spatial_layers = 2;
  std::size_t temporal_layers = 2;
  std::size_t d_ff = 256;
  BranchMode branch = BranchMode::dual;
  Positional positional = Positional::none;

  bool has_spatial() const { return branch != BranchMode::temporal_only; }
  bool has_temporal() const { return branch != BranchMode::spatial_only; }
  EncoderShape spatial_shape() const { return {d_model, heads, spatial_layers, d_ff}; }
  EncoderShape temporal_shape() const { return {d_model, heads, temporal_layers, d_ff}; }
  void validate() const;
};

// Spatial branch tokens: one row per road segment holding its L-step history.
Matrix spatial_tokens(const Matrix& window);
// Temporal branch tokens: one row per time step holding all N segments.
Matrix temporal_tokens(const Matrix& window);

// Student model. The spatial encoder attends across road segments, the
// temporal encoder across time steps. The temporal output is mean-pooled to
// a context vector c, broadcast to every segment and concatenated with that
// segment's spatial representation before the output projection:
//
//   H_S = encode(spatial_tokens(X)·P_S + b_S)          N×d
//   H_T = encode(temporal_tokens(X)·P_T + b_T)         L×d
//   c   = mean_rows(H_T)                               1×d
//   Y   = [H_S ‖ 1·c]·W_H + b_H                        N×H
class DualTransformer final : public Forecaster {
 public:
  struct Weights {
    Tensor spatial_proj, spatial_proj_bias;    // L×d, d
    Tensor temporal_proj, temporal_proj_bias;  // N×d, d
    Tensor spatial_pos, temporal_pos;          // N×d, L×d when positional = learned
    std::optional<EncoderParams> spatial;
    std::optional<EncoderParams> temporal;
    Tensor head, head_bias;  // (2d or d)×H, H
  };

  DualTransformer(const DualTransformerConfig& config, std::uint64_t seed);
  // Every weight and bias zero, layer norms identity.
  static DualTransformer zeros(const DualTransformerConfig& config);

  Tensor forward(const Matrix& window) const override;
  ParameterList parameters() const override;
  std::size_t nodes() const override { return config_.nodes; }
  std::size_t input_steps() const override { return config_.input_steps; }
  std::size_t horizon() const override { return config_.horizon; }
  std::string kind() const override { return "dual_transformer"; }

  const DualTransformerConfig& config() const { return config_; }
  const Weights& weights() const { return weights_; }

  // Closed-form count of trainable scalars for a configuration.
  static std::size_t expected_parameter_count(const DualTransformerConfig& config);

 private:
  DualTransformer(const DualTransformerConfig& config, Rng* rng);

  DualTransformerConfig config_;
  Weights weights_;
};

}  // namespace dtf
