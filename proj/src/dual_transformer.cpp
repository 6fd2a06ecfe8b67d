#include "dtf/dual_transformer.hpp"

#include "dtf/errors.hpp"

namespace dtf {

std::size_t parameter_count(const Forecaster& model) { return total_scalars(model.parameters()); }

std::string to_string(BranchMode mode) {
  switch (mode) {
    case BranchMode::dual: return "dual";
    case BranchMode::spatial_only: return "spatial_only";
    case BranchMode::temporal_only: return "temporal_only";
  }
  return "dual";
}

BranchMode parse_branch_mode(const std::string& text) {
  if (text == "dual") return BranchMode::dual;
  if (text == "spatial_only") return BranchMode::spatial_only;
  if (text == "temporal_only") return BranchMode::temporal_only;
  throw ConfigError("branch mode must be dual, spatial_only or temporal_only, got '" + text + "'");
}

std::string to_string(Positional p) { return p == Positional::learned ? "learned" : "none"; }

Positional parse_positional(const std::string& text) {
  if (text == "none") return Positional::none;
  if (text == "learned") return Positional::learned;
  throw ConfigError("positional must be none or learned, got '" + text + "'");
}

void DualTransformerConfig::validate() const {
  if (nodes == 0 || input_steps == 0 || horizon == 0) {
    throw ConfigError("model needs positive node count, input length and horizon");
  }
  if (has_spatial()) spatial_shape().validate();
  if (has_temporal()) temporal_shape().validate();
}

Matrix spatial_tokens(const Matrix& window) { return window.transposed(); }

Matrix temporal_tokens(const Matrix& window) { return window; }

DualTransformer::DualTransformer(const DualTransformerConfig& config, std::uint64_t seed) : config_(config) {
  Rng rng(seed);
  *this = DualTransformer(config, &rng);
}

DualTransformer DualTransformer::zeros(const DualTransformerConfig& config) { return DualTransformer(config, nullptr); }

DualTransformer::DualTransformer(const DualTransformerConfig& config, Rng* rng) : config_(config) {
  config_.validate();
  const std::size_t d = config.d_model;
  auto proj = [rng](std::size_t in, std::size_t out) {
    return rng ? init_projection(in, out, *rng) : init_constant({in, out}, 0.0);
  };
  const bool learned = config.positional == Positional::learned;
  if (config.has_spatial()) {
    weights_.spatial_proj = proj(config.input_steps, d);
    weights_.spatial_proj_bias = init_constant({d}, 0.0);
    if (learned) weights_.spatial_pos = proj(config.nodes, d);
    weights_.spatial = rng ? make_encoder(config.spatial_shape(), *rng) : make_zero_encoder(config.spatial_shape());
  }
  if (config.has_temporal()) {
    weights_.temporal_proj = proj(config.nodes, d);
    weights_.temporal_proj_bias = init_constant({d}, 0.0);
    if (learned) weights_.temporal_pos = proj(config.input_steps, d);
    weights_.temporal = rng ? make_encoder(config.temporal_shape(), *rng) : make_zero_encoder(config.temporal_shape());
  }
  const std::size_t head_in = config.branch == BranchMode::dual ? 2 * d : d;
  weights_.head = proj(head_in, config.horizon);
  weights_.head_bias = init_constant({config.horizon}, 0.0);
}

Tensor DualTransformer::forward(const Matrix& window) const {
  if (window.rows != config_.input_steps || window.cols != config_.nodes) {
    throw ConfigError("window is " + std::to_string(window.rows) + "x" + std::to_string(window.cols) +
                      ", model expects " + std::to_string(config_.input_steps) + "x" +
                      std::to_string(config_.nodes));
  }
  const auto& w = weights_;
  Tensor spatial_out, context;
  if (config_.has_spatial()) {
    Tensor z = ops::add_row_bias(ops::matmul(Tensor::from(spatial_tokens(window)), w.spatial_proj),
                                 w.spatial_proj_bias);
    if (w.spatial_pos.defined()) z = ops::add(z, w.spatial_pos);
    spatial_out = encode(z, *w.spatial);
  }
  if (config_.has_temporal()) {
    Tensor z = ops::add_row_bias(ops::matmul(Tensor::from(temporal_tokens(window)), w.temporal_proj),
                                 w.temporal_proj_bias);
    if (w.temporal_pos.defined()) z = ops::add(z, w.temporal_pos);
    context = ops::repeat_rows(ops::mean_rows(encode(z, *w.temporal)), config_.nodes);
  }
  Tensor features;
  switch (config_.branch) {
    case BranchMode::dual: features = ops::concat_cols(spatial_out, context); break;
    case BranchMode::spatial_only: features = spatial_out; break;
    case BranchMode::temporal_only: features = context; break;
  }
  return ops::add_row_bias(ops::matmul(features, w.head), w.head_bias);
}

ParameterList DualTransformer::parameters() const {
  ParameterList out;
  const auto& w = weights_;
  if (config_.has_spatial()) {
    out.push_back({"spatial.proj", w.spatial_proj});
    out.push_back({"spatial.proj_bias", w.spatial_proj_bias});
    if (w.spatial_pos.defined()) out.push_back({"spatial.pos", w.spatial_pos});
    append_parameters(*w.spatial, "spatial.encoder", out);
  }
  if (config_.has_temporal()) {
    out.push_back({"temporal.proj", w.temporal_proj});
    out.push_back({"temporal.proj_bias", w.temporal_proj_bias});
    if (w.temporal_pos.defined()) out.push_back({"temporal.pos", w.temporal_pos});
    append_parameters(*w.temporal, "temporal.encoder", out);
  }
  out.push_back({"head.weight", w.head});
  out.push_back({"head.bias", w.head_bias});
  return out;
}

std::size_t DualTransformer::expected_parameter_count(const DualTransformerConfig& c) {
  const std::size_t d = c.d_model;
  const bool learned = c.positional == Positional::learned;
  std::size_t n = 0;
  if (c.has_spatial()) {
    n += c.input_steps * d + d + encoder_parameter_count(c.spatial_shape());
    if (learned) n += c.nodes * d;
  }
  if (c.has_temporal()) {
    n += c.nodes * d + d + encoder_parameter_count(c.temporal_shape());
    if (learned) n += c.input_steps * d;
  }
  const std::size_t head_in = c.branch == BranchMode::dual ? 2 * d : d;
  return n + head_in * c.horizon + c.horizon;
}

}  // namespace dtf
