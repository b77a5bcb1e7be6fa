#pragma once

#include <cmath>
#include <span>

#include <Eigen/Core>

#include "arable/model.hpp"
#include "arable/random.hpp"

namespace arable::detail {

using MatMap = Eigen::Map<Matrix>;
using CMatMap = Eigen::Map<const Matrix>;
using VecMap = Eigen::Map<Eigen::RowVectorXd>;
using CVecMap = Eigen::Map<const Eigen::RowVectorXd>;

inline void init_uniform(std::span<double> w, std::size_t fan_in, Rng& rng) {
  const double bound = std::sqrt(1.0 / static_cast<double>(fan_in));
  for (double& v : w) v = uniform_real(rng, -bound, bound);
}

// Offsets of each block inside the flat parameter vector.
inline std::vector<std::size_t> block_offsets(const std::vector<ParamBlock>& blocks) {
  std::vector<std::size_t> off;
  std::size_t at = 0;
  for (const auto& b : blocks) {
    off.push_back(at);
    at += b.size();
  }
  off.push_back(at);
  return off;
}

}  // namespace arable::detail
