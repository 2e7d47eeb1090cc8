#include "tall/optim.hpp"

#include <cmath>

#include "tall/errors.hpp"

namespace tall {

void adam_step(Matrix& param, const Matrix& grad, AdamState& state,
               std::string_view name) {
  if (!param.same_shape(grad) || !param.same_shape(state.m)) {
    throw DimensionError("adam_step: shape mismatch for " + std::string(name));
  }
  if (!grad.all_finite()) {
    throw NumericError("training diverged: non-finite gradient for parameter '" +
                       std::string(name) + "'");
  }
  const AdamConfig& c = state.cfg;
  state.t += 1;
  const double bc1 = 1.0 - std::pow(c.beta1, static_cast<double>(state.t));
  const double bc2 = 1.0 - std::pow(c.beta2, static_cast<double>(state.t));
  for (std::size_t i = 0; i < param.size(); ++i) {
    const double g = grad.data[i];
    double& m = state.m.data[i];
    double& v = state.v.data[i];
    m = c.beta1 * m + (1.0 - c.beta1) * g;
    v = c.beta2 * v + (1.0 - c.beta2) * g * g;
    const double mhat = m / bc1;
    const double vhat = v / bc2;
    param.data[i] -= c.lr * mhat / (std::sqrt(vhat) + c.eps);
  }
}

}  // namespace tall
