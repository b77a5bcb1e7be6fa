#include "pipeline/rule.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "arable/climate_features.hpp"
#include "arable/error.hpp"
#include "arable/terrain_features.hpp"

namespace arable::pipeline {

namespace {

template <typename Get>
RuleInputs collect(Get get) {
  RuleInputs x;
  for (int m = 5; m <= 7; ++m) x.t_summer += get(monthly_feature_name("t2m", m)) / 3.0;
  for (int m = 0; m < 12; ++m) {
    x.p_annual += get(monthly_feature_name("tp", m));
    x.steps += get(monthly_feature_name("monTstep6", m));
  }
  x.elevation = get(kDemFeatureName);
  return x;
}

double quantile_sorted(const std::vector<double>& v, double q) {
  q = std::clamp(q, 0.0, 1.0);
  const double h = (static_cast<double>(v.size()) - 1.0) * q;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (h - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

std::vector<double> sorted_field(std::span<const RuleInputs> px, double RuleInputs::*field) {
  std::vector<double> v;
  v.reserve(px.size());
  for (const auto& p : px) v.push_back(p.*field);
  std::sort(v.begin(), v.end());
  return v;
}

// Cut between order statistics k-1 and k of a sorted vector.
double cut_at(const std::vector<double>& sorted, std::size_t k) {
  if (k == 0) return sorted.front() - 1.0;
  if (k >= sorted.size()) return sorted.back() + 1.0;
  return 0.5 * (sorted[k - 1] + sorted[k]);
}

}  // namespace

RuleInputs rule_inputs(const RasterSet& features, std::size_t pixel) {
  return collect([&](const std::string& name) {
    const auto it = features.find(name);
    if (it == features.end()) throw DataError("feature '" + name + "' is missing");
    return it->second[pixel];
  });
}

RuleInputs rule_inputs(const FeatureTable& t, std::size_t row) {
  const auto r = t.row(row);
  return collect([&](const std::string& name) { return r[t.column_index(name)]; });
}

double LabelRule::moisture(const RuleInputs& x) const {
  return (x.p_annual - p_mean) / p_sd - (x.t_summer - t_mean) / t_sd;
}

int LabelRule::classify(const RuleInputs& x) const {
  if (x.t_summer < t_cold || x.elevation > e_high || x.steps > s_unstable) return 0;
  const double m = moisture(x);
  if (m < m1) return 1;
  if (m < m2) return 2;
  return 3;
}

nlohmann::ordered_json LabelRule::to_json() const {
  return {{"t_cold", t_cold},   {"e_high", e_high}, {"s_unstable", s_unstable},
          {"p_mean", p_mean},   {"p_sd", p_sd},     {"t_mean", t_mean},
          {"t_sd", t_sd},       {"m1", m1},         {"m2", m2}};
}

LabelRule LabelRule::from_json(const nlohmann::json& j) {
  LabelRule r;
  try {
    r.t_cold = j.at("t_cold");
    r.e_high = j.at("e_high");
    r.s_unstable = j.at("s_unstable");
    r.p_mean = j.at("p_mean");
    r.p_sd = j.at("p_sd");
    r.t_mean = j.at("t_mean");
    r.t_sd = j.at("t_sd");
    r.m1 = j.at("m1");
    r.m2 = j.at("m2");
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed labeling rule: ") + e.what());
  }
  return r;
}

LabelRule fit_label_rule(std::span<const RuleInputs> px, const std::array<double, 4>& fractions) {
  if (px.size() < 16) throw DataError("too few valid pixels to plant labels");
  const auto ts = sorted_field(px, &RuleInputs::t_summer);
  const auto es = sorted_field(px, &RuleInputs::elevation);
  const auto ss = sorted_field(px, &RuleInputs::steps);

  LabelRule rule;
  auto set_class0 = [&](double u) {
    rule.t_cold = quantile_sorted(ts, 0.5 * u);
    rule.e_high = quantile_sorted(es, 1.0 - 0.25 * u);
    rule.s_unstable = quantile_sorted(ss, 1.0 - 0.25 * u);
  };
  auto class0_share = [&] {
    std::size_t n0 = 0;
    for (const auto& p : px)
      if (p.t_summer < rule.t_cold || p.elevation > rule.e_high || p.steps > rule.s_unstable) ++n0;
    return static_cast<double>(n0) / static_cast<double>(px.size());
  };

  double lo = 0.0, hi = 2.0;
  for (int it = 0; it < 60; ++it) {
    const double mid = 0.5 * (lo + hi);
    set_class0(mid);
    (class0_share() < fractions[0] ? lo : hi) = mid;
  }
  set_class0(lo);
  const double share_lo = class0_share();
  set_class0(hi);
  if (std::abs(share_lo - fractions[0]) < std::abs(class0_share() - fractions[0])) set_class0(lo);

  std::vector<RuleInputs> arable;
  for (const auto& p : px)
    if (!(p.t_summer < rule.t_cold || p.elevation > rule.e_high || p.steps > rule.s_unstable))
      arable.push_back(p);
  if (arable.size() < 3) throw DataError("planted rule leaves fewer than 3 arable pixels");

  auto mean_sd = [&](double RuleInputs::*field) {
    double m = 0.0;
    for (const auto& p : arable) m += p.*field;
    m /= static_cast<double>(arable.size());
    double v = 0.0;
    for (const auto& p : arable) v += (p.*field - m) * (p.*field - m);
    const double sd = std::sqrt(v / static_cast<double>(arable.size()));
    return std::pair{m, sd > 0.0 ? sd : 1.0};
  };
  std::tie(rule.p_mean, rule.p_sd) = mean_sd(&RuleInputs::p_annual);
  std::tie(rule.t_mean, rule.t_sd) = mean_sd(&RuleInputs::t_summer);

  std::vector<double> ms;
  ms.reserve(arable.size());
  for (const auto& p : arable) ms.push_back(rule.moisture(p));
  std::sort(ms.begin(), ms.end());
  const double rest = fractions[1] + fractions[2] + fractions[3];
  const auto n = static_cast<double>(ms.size());
  rule.m1 = cut_at(ms, static_cast<std::size_t>(std::llround(n * fractions[1] / rest)));
  rule.m2 = cut_at(ms, static_cast<std::size_t>(std::llround(n * (fractions[1] + fractions[2]) / rest)));
  return rule;
}

Raster apply_rule(const LabelRule& rule, const RasterSet& features) {
  if (features.empty()) throw DataError("apply_rule: no features");
  const GridSpec& spec = features.begin()->second.spec();
  Raster mask(spec, kNaN);
  for (std::size_t k = 0; k < spec.size(); ++k) {
    bool ok = true;
    for (const auto& [name, r] : features)
      if (r.is_nodata(r[k])) {
        ok = false;
        break;
      }
    if (ok) mask[k] = rule.classify(rule_inputs(features, k));
  }
  return mask;
}

}  // namespace arable::pipeline
