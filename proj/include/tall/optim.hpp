#pragma once

#include <string_view>

#include "tall/matrix.hpp"

namespace tall {

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// Moment state for one parameter tensor.
struct AdamState {
  Matrix m;
  Matrix v;
  long t = 0;
  AdamConfig cfg;

  AdamState() = default;
  AdamState(int rows, int cols, AdamConfig c) : m(rows, cols), v(rows, cols), cfg(c) {}
};

// One bias-corrected Adam update in place. Throws NumericError naming the
// parameter when the gradient has gone non-finite.
void adam_step(Matrix& param, const Matrix& grad, AdamState& state,
               std::string_view name = "");

}  // namespace tall
