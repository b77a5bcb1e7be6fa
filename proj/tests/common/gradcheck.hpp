#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "arable/model.hpp"

namespace arable::check {

struct GradCheck {
  double max_rel_error = 0;
  std::size_t coords = 0;
};

// Central differences of the mean batch loss at `samples` random parameter
// coordinates, compared with the analytic gradient.
inline GradCheck check_gradient(const Model& model, const Matrix& x, const std::vector<int>& y,
                                std::size_t samples, std::uint64_t seed, double h = 1e-5) {
  std::vector<double> grad(model.param_count());
  model.loss_and_gradient(x, y, grad);
  auto probe = model.clone();
  std::vector<double> scratch(model.param_count());
  std::mt19937_64 gen(seed);
  std::uniform_int_distribution<std::size_t> pick(0, model.param_count() - 1);
  GradCheck out;
  for (std::size_t s = 0; s < samples; ++s) {
    const std::size_t k = pick(gen);
    const double keep = probe->params()[k];
    probe->params()[k] = keep + h;
    const double up = probe->loss_and_gradient(x, y, scratch);
    probe->params()[k] = keep - h;
    const double down = probe->loss_and_gradient(x, y, scratch);
    probe->params()[k] = keep;
    const double fd = (up - down) / (2 * h);
    const double denom = std::max({std::abs(fd), std::abs(grad[k]), 1e-7});
    out.max_rel_error = std::max(out.max_rel_error, std::abs(fd - grad[k]) / denom);
    ++out.coords;
  }
  return out;
}

}  // namespace arable::check
