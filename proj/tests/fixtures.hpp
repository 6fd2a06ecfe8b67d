#pragma once

#include <cmath>
#include <memory>

#include "dtf/data.hpp"
#include "dtf/distillation.hpp"
#include "dtf/dual_transformer.hpp"
#include "dtf/teacher_gcn.hpp"

namespace dtf::testing {

// A few hundred steps of the synthetic generator at a coarse daily resolution.
inline SpeedDataset tiny_synthetic(std::uint64_t seed = 7, std::size_t nodes = 5, std::size_t steps = 300) {
  SynthParams p;
  p.nodes = nodes;
  p.steps = steps;
  p.classes = 2;
  p.steps_per_day = 48;
  p.graph_density = 0.4;
  p.seed = seed;
  return synth_generate(p);
}

inline DualTransformerConfig tiny_student(std::size_t nodes, std::size_t L, std::size_t H) {
  DualTransformerConfig c;
  c.nodes = nodes;
  c.input_steps = L;
  c.horizon = H;
  c.d_model = 4;
  c.heads = 2;
  c.spatial_layers = 1;
  c.temporal_layers = 1;
  c.d_ff = 8;
  return c;
}

inline DistillationConfig quick_training(std::size_t epochs, double alpha = 0.2) {
  DistillationConfig c;
  c.alpha = alpha;
  c.beta = 1.0 - alpha;
  c.max_epochs = epochs;
  c.batch_size = 32;
  c.adam.learning_rate = 5e-3;
  return c;
}

}  // namespace dtf::testing
