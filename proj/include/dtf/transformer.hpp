#pragma once

#include <string>
#include <vector>

#include "dtf/checkpoint.hpp"
#include "dtf/init.hpp"
#include "dtf/tensor.hpp"

namespace dtf {

struct AttentionParams {
  std::vector<Tensor> query;  // per head, d_model×head_dim
  std::vector<Tensor> key;
  std::vector<Tensor> value;
  Tensor output;  // (heads·head_dim)×d_model
  std::size_t heads = 0;
  std::size_t head_dim = 0;
};

struct EncoderLayerParams {
  AttentionParams attention;
  Tensor mlp_in, mlp_in_bias;    // d_model×d_ff, d_ff
  Tensor mlp_out, mlp_out_bias;  // d_ff×d_model, d_model
  Tensor norm1_gain, norm1_bias;
  Tensor norm2_gain, norm2_bias;
};

struct EncoderShape {
  std::size_t d_model = 64;
  std::size_t heads = 4;
  std::size_t layers = 2;
  std::size_t d_ff = 256;

  // Throws ConfigError when heads∤d_model, layers < 1 or d_ff < d_model.
  void validate() const;
};

struct EncoderParams {
  EncoderShape shape;
  std::vector<EncoderLayerParams> layers;
  Tensor final_gain, final_bias;
};

EncoderParams make_encoder(const EncoderShape& shape, Rng& rng);
// All projections zero, layer norms affine identity (gain 1, bias 0).
EncoderParams make_zero_encoder(const EncoderShape& shape);

void append_parameters(const EncoderParams& enc, const std::string& prefix, ParameterList& out);
std::size_t encoder_parameter_count(const EncoderShape& shape);

// softmax(X·Wq_h (X·Wk_h)ᵀ / sqrt(head_dim)) for one head; rows sum to 1.
Tensor attention_weights(const Tensor& tokens, const AttentionParams& params, std::size_t head);

// Self-attention with Q = K = V = tokens. Per head i:
//   head_i = softmax(X·Wq_i (X·Wk_i)ᵀ / sqrt(head_dim)) · X·Wv_i
// then Concat(head_1..head_h)·Wo.
Tensor multi_head_self_attention(const Tensor& tokens, const AttentionParams& params);

// Pre-norm residual layer:
//   z' = MSA(LN1(z)) + z
//   out = MLP(LN2(z')) + z'
Tensor encoder_layer(const Tensor& z, const EncoderLayerParams& params);

// All layers in order followed by the final layer norm.
Tensor encode(const Tensor& z0, const EncoderParams& params);

}  // namespace dtf
