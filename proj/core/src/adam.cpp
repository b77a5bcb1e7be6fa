#include <cmath>

#include "arable/error.hpp"
#include "arable/model.hpp"

namespace arable {

void adam_step(AdamState& s, std::span<double> params, std::span<const double> grads) {
  if (params.size() != grads.size()) throw DataError("adam_step: parameter/gradient size mismatch");
  if (s.m.size() != params.size()) {
    if (s.step != 0) throw DataError("adam_step: moment buffers do not match parameters");
    s.m.assign(params.size(), 0.0);
    s.v.assign(params.size(), 0.0);
  }
  ++s.step;
  const double t = static_cast<double>(s.step);
  const double c1 = 1.0 - std::pow(s.beta1, t);
  const double c2 = 1.0 - std::pow(s.beta2, t);
  for (std::size_t k = 0; k < params.size(); ++k) {
    const double g = grads[k];
    s.m[k] = s.beta1 * s.m[k] + (1.0 - s.beta1) * g;
    s.v[k] = s.beta2 * s.v[k] + (1.0 - s.beta2) * g * g;
    const double m_hat = s.m[k] / c1;
    const double v_hat = s.v[k] / c2;
    params[k] -= s.lr * m_hat / (std::sqrt(v_hat) + s.eps);
  }
}

}  // namespace arable
