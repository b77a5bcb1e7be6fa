#pragma once

#include <array>
#include <span>
#include <vector>

#include "arable/dataset.hpp"
#include "arable/grid.hpp"
#include "json.hpp"

namespace arable::pipeline {

// The four quantities the planted labeling rule looks at, all taken from the
// computed feature set of a pixel.
struct RuleInputs {
  double t_summer = 0;   // mean of t2m_06..t2m_08
  double p_annual = 0;   // sum of tp_01..tp_12
  double steps = 0;      // sum of monTstep6_01..monTstep6_12
  double elevation = 0;  // DEM_1km
};

RuleInputs rule_inputs(const RasterSet& features, std::size_t pixel);
RuleInputs rule_inputs(const FeatureTable& t, std::size_t row);

// Class 0 when the summer is too cold, the terrain too high or the weather
// too unstable. Otherwise a moisture index M = z(P) - z(T) splits the rest:
// class 1 (driest, hottest) below m1, class 2 below m2, class 3 above.
struct LabelRule {
  double t_cold = 0, e_high = 0, s_unstable = 0;
  double p_mean = 0, p_sd = 1, t_mean = 0, t_sd = 1;
  double m1 = 0, m2 = 0;

  double moisture(const RuleInputs& x) const;
  int classify(const RuleInputs& x) const;

  nlohmann::ordered_json to_json() const;
  static LabelRule from_json(const nlohmann::json& j);
};

// Thresholds placed at quantiles of `pixels` so the class shares match
// `fractions`. Class 0 splits its share 2:1:1 between the cold, high and
// unstable conditions.
LabelRule fit_label_rule(std::span<const RuleInputs> pixels, const std::array<double, 4>& fractions);

// Class mask on the feature grid; nodata wherever any feature is nodata.
Raster apply_rule(const LabelRule& rule, const RasterSet& features);

}  // namespace arable::pipeline
