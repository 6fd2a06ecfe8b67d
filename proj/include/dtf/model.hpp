#pragma once

#include <string>

#include "dtf/checkpoint.hpp"
#include "dtf/tensor.hpp"

namespace dtf {

// Anything that maps an input window (L×N, rows = time) to an N×H forecast
// in normalized units.
class Forecaster {
 public:
  virtual ~Forecaster() = default;

  virtual Tensor forward(const Matrix& window) const = 0;
  virtual ParameterList parameters() const = 0;

  virtual std::size_t nodes() const = 0;
  virtual std::size_t input_steps() const = 0;
  virtual std::size_t horizon() const = 0;
  virtual std::string kind() const = 0;
};

std::size_t parameter_count(const Forecaster& model);

}  // namespace dtf
