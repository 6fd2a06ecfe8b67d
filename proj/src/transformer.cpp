#include "dtf/transformer.hpp"

#include <cmath>

#include "dtf/errors.hpp"

namespace dtf {

void EncoderShape::validate() const {
  if (d_model == 0 || heads == 0) throw ConfigError("encoder: d_model and heads must be positive");
  if (d_model % heads != 0) {
    throw ConfigError("encoder: heads (" + std::to_string(heads) + ") must divide d_model (" +
                      std::to_string(d_model) + ")");
  }
  if (layers < 1) throw ConfigError("encoder: at least one layer required");
  if (d_ff < d_model) throw ConfigError("encoder: d_ff must be >= d_model");
}

namespace {

EncoderParams build(const EncoderShape& shape, Rng* rng) {
  shape.validate();
  const std::size_t d = shape.d_model, dk = d / shape.heads, f = shape.d_ff;
  auto proj = [rng](std::size_t in, std::size_t out) {
    return rng ? init_projection(in, out, *rng) : init_constant({in, out}, 0.0);
  };
  EncoderParams enc;
  enc.shape = shape;
  for (std::size_t l = 0; l < shape.layers; ++l) {
    EncoderLayerParams layer;
    auto& att = layer.attention;
    att.heads = shape.heads;
    att.head_dim = dk;
    for (std::size_t h = 0; h < shape.heads; ++h) {
      att.query.push_back(proj(d, dk));
      att.key.push_back(proj(d, dk));
      att.value.push_back(proj(d, dk));
    }
    att.output = proj(shape.heads * dk, d);
    layer.mlp_in = proj(d, f);
    layer.mlp_in_bias = init_constant({f}, 0.0);
    layer.mlp_out = proj(f, d);
    layer.mlp_out_bias = init_constant({d}, 0.0);
    layer.norm1_gain = init_constant({d}, 1.0);
    layer.norm1_bias = init_constant({d}, 0.0);
    layer.norm2_gain = init_constant({d}, 1.0);
    layer.norm2_bias = init_constant({d}, 0.0);
    enc.layers.push_back(std::move(layer));
  }
  enc.final_gain = init_constant({d}, 1.0);
  enc.final_bias = init_constant({d}, 0.0);
  return enc;
}

}  // namespace

EncoderParams make_encoder(const EncoderShape& shape, Rng& rng) { return build(shape, &rng); }
EncoderParams make_zero_encoder(const EncoderShape& shape) { return build(shape, nullptr); }

void append_parameters(const EncoderParams& enc, const std::string& prefix, ParameterList& out) {
  for (std::size_t l = 0; l < enc.layers.size(); ++l) {
    const auto& layer = enc.layers[l];
    const std::string p = prefix + ".layer" + std::to_string(l);
    const auto& att = layer.attention;
    for (std::size_t h = 0; h < att.heads; ++h) {
      const std::string hp = p + ".attn.head" + std::to_string(h);
      out.push_back({hp + ".query", att.query[h]});
      out.push_back({hp + ".key", att.key[h]});
      out.push_back({hp + ".value", att.value[h]});
    }
    out.push_back({p + ".attn.output", att.output});
    out.push_back({p + ".mlp.in", layer.mlp_in});
    out.push_back({p + ".mlp.in_bias", layer.mlp_in_bias});
    out.push_back({p + ".mlp.out", layer.mlp_out});
    out.push_back({p + ".mlp.out_bias", layer.mlp_out_bias});
    out.push_back({p + ".norm1.gain", layer.norm1_gain});
    out.push_back({p + ".norm1.bias", layer.norm1_bias});
    out.push_back({p + ".norm2.gain", layer.norm2_gain});
    out.push_back({p + ".norm2.bias", layer.norm2_bias});
  }
  out.push_back({prefix + ".final_norm.gain", enc.final_gain});
  out.push_back({prefix + ".final_norm.bias", enc.final_bias});
}

std::size_t encoder_parameter_count(const EncoderShape& shape) {
  const std::size_t d = shape.d_model, f = shape.d_ff;
  const std::size_t per_layer = 4 * d * d + (d * f + f) + (f * d + d) + 4 * d;
  return shape.layers * per_layer + 2 * d;
}

Tensor attention_weights(const Tensor& tokens, const AttentionParams& params, std::size_t head) {
  const double inv_sqrt_dk = 1.0 / std::sqrt(static_cast<double>(params.head_dim));
  Tensor q = ops::matmul(tokens, params.query.at(head));
  Tensor k = ops::matmul(tokens, params.key.at(head));
  return ops::softmax_rows(ops::scale(ops::matmul(q, ops::transpose(k)), inv_sqrt_dk));
}

Tensor multi_head_self_attention(const Tensor& tokens, const AttentionParams& params) {
  if (tokens.rank() != 2 || tokens.rows() == 0) throw DimensionError("attention: tokens must be a non-empty matrix");
  if (params.query.empty() || tokens.cols() != params.query.front().rows()) {
    throw DimensionError("attention: token width " + std::to_string(tokens.cols()) +
                         " does not match the projection input width");
  }
  Tensor heads;
  for (std::size_t h = 0; h < params.heads; ++h) {
    Tensor v = ops::matmul(tokens, params.value[h]);
    Tensor head = ops::mix_rows(attention_weights(tokens, params, h), v);
    heads = h == 0 ? head : ops::concat_cols(heads, head);
  }
  return ops::matmul(heads, params.output);
}

Tensor encoder_layer(const Tensor& z, const EncoderLayerParams& params) {
  Tensor attended = multi_head_self_attention(ops::layer_norm(z, params.norm1_gain, params.norm1_bias), params.attention);
  Tensor mid = ops::add(attended, z);
  Tensor hidden = ops::relu(
      ops::add_row_bias(ops::matmul(ops::layer_norm(mid, params.norm2_gain, params.norm2_bias), params.mlp_in),
                        params.mlp_in_bias));
  Tensor mlp = ops::add_row_bias(ops::matmul(hidden, params.mlp_out), params.mlp_out_bias);
  return ops::add(mlp, mid);
}

Tensor encode(const Tensor& z0, const EncoderParams& params) {
  Tensor z = z0;
  for (const auto& layer : params.layers) z = encoder_layer(z, layer);
  return ops::layer_norm(z, params.final_gain, params.final_bias);
}

}  // namespace dtf
