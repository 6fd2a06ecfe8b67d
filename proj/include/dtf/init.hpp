#pragma once

#include <cmath>
#include <random>

#include "dtf/tensor.hpp"

namespace dtf {

using Rng = std::mt19937_64;

// Uniform(-sqrt(1/fan_in), +sqrt(1/fan_in)) weights for a fan_in×fan_out projection.
inline Tensor init_projection(std::size_t fan_in, std::size_t fan_out, Rng& rng) {
  const double bound = std::sqrt(1.0 / static_cast<double>(fan_in));
  std::uniform_real_distribution<double> dist(-bound, bound);
  std::vector<double> v(fan_in * fan_out);
  for (double& x : v) x = dist(rng);
  return Tensor::parameter({fan_in, fan_out}, std::move(v));
}

inline Tensor init_constant(Shape shape, double value) {
  const auto n = shape_size(shape);
  return Tensor::parameter(std::move(shape), std::vector<double>(n, value));
}

}  // namespace dtf
