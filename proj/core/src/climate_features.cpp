#include "arable/climate_features.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "arable/error.hpp"
#include "arable/parallel.hpp"

namespace arable {

namespace {

constexpr std::array<int, kDaysPerYear> make_month_table() {
  std::array<int, kDaysPerYear> t{};
  int d = 0;
  for (int m = 0; m < 12; ++m)
    for (int k = 0; k < kDaysInMonth[m]; ++k) t[d++] = m;
  return t;
}
constexpr auto kMonthOfDay = make_month_table();

constexpr double kJumpThreshold = 6.0;
constexpr double kNesterovThreshold = 4000.0;
constexpr double kNesterovRainReset = 3.0;

void require_same_length(const DailySeries& a, const DailySeries& b, const char* what) {
  if (a.values.size() != b.values.size())
    throw DataError(std::string(what) + ": series lengths differ");
}

Monthly per_year_mean(const Monthly& totals, int years) {
  Monthly out{};
  for (int m = 0; m < 12; ++m) out[m] = totals[m] / years;
  return out;
}

}  // namespace

int month_of_day(int day_of_year) { return kMonthOfDay.at(static_cast<std::size_t>(day_of_year)); }

std::string_view variable_name(Variable v) {
  switch (v) {
    case Variable::Tmax: return "tmax";
    case Variable::Tmin: return "tmin";
    case Variable::Tmean: return "tmean";
    case Variable::Precip: return "precip";
    case Variable::Dewpoint: return "dewpoint";
    case Variable::Windmax: return "windmax";
    case Variable::Swe: return "swe";
  }
  return "?";
}

Variable parse_variable(std::string_view name) {
  for (auto v : {Variable::Tmax, Variable::Tmin, Variable::Tmean, Variable::Precip,
                 Variable::Dewpoint, Variable::Windmax, Variable::Swe})
    if (variable_name(v) == name) return v;
  throw DataError("unknown climate variable '" + std::string(name) + "'");
}

DailySeries::DailySeries(Variable v, int start, std::vector<double> vals)
    : variable(v), start_year(start), values(std::move(vals)) {
  if (values.empty() || values.size() % kDaysPerYear != 0)
    throw DataError("daily series length " + std::to_string(values.size()) +
                    " is not a whole number of 365-day years");
}

double empirical_quantile(std::vector<double> values, double q) {
  if (values.empty()) throw DataError("quantile of an empty sample");
  if (!(q >= 0.0 && q <= 1.0)) throw DataError("quantile level outside [0,1]");
  const double h = static_cast<double>(values.size() - 1) * q;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  std::nth_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(lo), values.end());
  const double x_lo = values[lo];
  if (hi == lo) return x_lo;
  const double x_hi = *std::min_element(values.begin() + static_cast<std::ptrdiff_t>(lo) + 1,
                                        values.end());
  return x_lo + (h - static_cast<double>(lo)) * (x_hi - x_lo);
}

PercentileThresholds fit_percentiles(const DailySeries& baseline, double q) {
  if (!(q > 0.0 && q < 1.0)) throw DataError("percentile level must lie in (0,1)");
  if (baseline.years() < 1) throw DataError("percentile baseline needs at least one year");
  std::array<std::vector<double>, 12> buckets;
  for (std::size_t d = 0; d < baseline.values.size(); ++d)
    buckets[kMonthOfDay[d % kDaysPerYear]].push_back(baseline.values[d]);
  PercentileThresholds thr;
  thr.variable = baseline.variable;
  thr.q = q;
  for (int m = 0; m < 12; ++m) {
    if (buckets[m].empty()) throw DataError("empty month bucket in percentile baseline");
    thr.value[m] = empirical_quantile(std::move(buckets[m]), q);
  }
  return thr;
}

Monthly count_exceedance(const DailySeries& series, const PercentileThresholds& thr,
                         Direction direction) {
  if (series.variable != thr.variable)
    throw DataError("count_exceedance: series variable " +
                    std::string(variable_name(series.variable)) + " vs thresholds for " +
                    std::string(variable_name(thr.variable)));
  Monthly counts{};
  for (std::size_t d = 0; d < series.values.size(); ++d) {
    const int m = kMonthOfDay[d % kDaysPerYear];
    const double v = series.values[d];
    const bool hit = direction == Direction::Above ? v > thr.value[m] : v < thr.value[m];
    if (hit) counts[m] += 1.0;
  }
  return per_year_mean(counts, series.years());
}

Monthly monthly_mean(const DailySeries& series) {
  const bool summed = series.variable == Variable::Precip;
  Monthly acc{};
  for (std::size_t d = 0; d < series.values.size(); ++d)
    acc[kMonthOfDay[d % kDaysPerYear]] += series.values[d];
  const int years = series.years();
  Monthly out{};
  for (int m = 0; m < 12; ++m)
    out[m] = summed ? acc[m] / years : acc[m] / (static_cast<double>(years) * kDaysInMonth[m]);
  return out;
}

Monthly nesterov_fy(const DailySeries& tmax, const DailySeries& dewpoint,
                    const DailySeries& precip) {
  require_same_length(tmax, dewpoint, "nesterov_fy");
  require_same_length(tmax, precip, "nesterov_fy");
  Monthly counts{};
  double g = 0.0;
  for (std::size_t d = 0; d < tmax.values.size(); ++d) {
    const double t = tmax.values[d];
    if (precip.values[d] > kNesterovRainReset) {
      g = 0.0;
    } else if (t > 0.0) {
      g += t * std::max(t - dewpoint.values[d], 0.0);
    }
    if (g > kNesterovThreshold) counts[kMonthOfDay[d % kDaysPerYear]] += 1.0;
  }
  return per_year_mean(counts, tmax.years());
}

Monthly zero_crossings(const DailySeries& tmin, const DailySeries& tmax) {
  require_same_length(tmin, tmax, "zero_crossings");
  Monthly counts{};
  for (std::size_t d = 0; d < tmin.values.size(); ++d)
    if (tmin.values[d] < 0.0 && tmax.values[d] > 0.0) counts[kMonthOfDay[d % kDaysPerYear]] += 1.0;
  return per_year_mean(counts, tmin.years());
}

Monthly temp_jumps(const DailySeries& tmean) {
  Monthly counts{};
  for (std::size_t d = 1; d < tmean.values.size(); ++d)
    if (std::abs(tmean.values[d] - tmean.values[d - 1]) > kJumpThreshold)
      counts[kMonthOfDay[d % kDaysPerYear]] += 1.0;
  return per_year_mean(counts, tmean.years());
}

// ---------------------------------------------------------------------------

const std::array<std::string, kMonthlyVarCount>& monthly_feature_vars() {
  static const std::array<std::string, kMonthlyVarCount> vars = {
      "tasmax", "tasmin", "t2m", "pr_p95", "sfcWindmax",
      "fy", "monT0ud", "monTstep6", "tp", "snw"};
  return vars;
}

std::string monthly_feature_name(std::string_view var, int month0) {
  const int m = month0 + 1;
  return std::string(var) + "_" + static_cast<char>('0' + m / 10) + static_cast<char>('0' + m % 10);
}

const std::vector<std::string>& climate_feature_names() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> n;
    for (const auto& v : monthly_feature_vars())
      for (int m = 0; m < 12; ++m) n.push_back(monthly_feature_name(v, m));
    n.emplace_back(kSpiFeatureName);
    return n;
  }();
  return names;
}

double MonthlyFeatureSet::at(std::string_view name) const {
  const auto& names = climate_feature_names();
  const auto it = std::find(names.begin(), names.end(), name);
  if (it == names.end()) throw DataError("unknown climate feature '" + std::string(name) + "'");
  return values[static_cast<std::size_t>(it - names.begin())];
}

ClimateBaseline fit_climate_baseline(const ClimateInputs& h) {
  ClimateBaseline b;
  b.tmax_p95 = fit_percentiles(h.tmax, 0.95);
  b.tmin_p05 = fit_percentiles(h.tmin, 0.05);
  b.precip_p95 = fit_percentiles(h.precip, 0.95);
  b.wind_p95 = fit_percentiles(h.windmax, 0.95);
  b.spi = fit_spi(h.precip);
  return b;
}

MonthlyFeatureSet compute_climate_features(const ClimateInputs& t, const ClimateBaseline& b) {
  // Order mirrors monthly_feature_vars().
  const std::array<Monthly, kMonthlyVarCount> blocks = {
      count_exceedance(t.tmax, b.tmax_p95, Direction::Above),
      count_exceedance(t.tmin, b.tmin_p05, Direction::Below),
      monthly_mean(t.tmean),
      count_exceedance(t.precip, b.precip_p95, Direction::Above),
      count_exceedance(t.windmax, b.wind_p95, Direction::Above),
      nesterov_fy(t.tmax, t.dewpoint, t.precip),
      zero_crossings(t.tmin, t.tmax),
      temp_jumps(t.tmean),
      monthly_mean(t.precip),
      monthly_mean(t.swe),
  };
  MonthlyFeatureSet out;
  std::size_t k = 0;
  for (const auto& block : blocks)
    for (double v : block) out.values[k++] = v;
  out.values[k] = spi_12m(t.precip, b.spi);
  return out;
}

// ---------------------------------------------------------------------------

void ClimateStacks::validate() const {
  for (auto v : {Variable::Tmax, Variable::Tmin, Variable::Tmean, Variable::Precip,
                 Variable::Dewpoint, Variable::Windmax, Variable::Swe}) {
    const SeriesStack& s = by_variable(v);
    if (!(s.spec == tmax.spec)) throw DataError("climate stacks do not share a grid");
    if (s.years != tmax.years || s.start_year != tmax.start_year)
      throw DataError("climate stacks do not share a time span");
    if (s.values.size() != s.days() * s.spec.size())
      throw DataError("climate stack " + s.variable + " has wrong length");
  }
}

const SeriesStack& ClimateStacks::by_variable(Variable v) const {
  return const_cast<ClimateStacks*>(this)->by_variable(v);
}

SeriesStack& ClimateStacks::by_variable(Variable v) {
  switch (v) {
    case Variable::Tmax: return tmax;
    case Variable::Tmin: return tmin;
    case Variable::Tmean: return tmean;
    case Variable::Precip: return precip;
    case Variable::Dewpoint: return dewpoint;
    case Variable::Windmax: return windmax;
    case Variable::Swe: return swe;
  }
  throw DataError("bad variable");
}

ClimateInputs ClimateStacks::pixel(std::size_t i, std::size_t j) const {
  auto series = [&](Variable v) {
    const SeriesStack& s = by_variable(v);
    std::vector<double> vals;
    s.pixel_series(i, j, vals);
    return DailySeries(v, s.start_year, std::move(vals));
  };
  return ClimateInputs{series(Variable::Tmax),   series(Variable::Tmin),
                       series(Variable::Tmean),  series(Variable::Precip),
                       series(Variable::Dewpoint), series(Variable::Windmax),
                       series(Variable::Swe)};
}

namespace {
bool all_finite(const ClimateInputs& c) {
  for (const DailySeries* s : {&c.tmax, &c.tmin, &c.tmean, &c.precip, &c.dewpoint, &c.windmax,
                               &c.swe})
    for (double v : s->values)
      if (!std::isfinite(v)) return false;
  return true;
}
}  // namespace

RasterSet climate_feature_rasters(const ClimateStacks& historical, const ClimateStacks& target) {
  historical.validate();
  target.validate();
  if (!(historical.spec() == target.spec()))
    throw DataError("historical and target climate stacks use different grids");
  const GridSpec spec = target.spec();
  std::vector<std::array<double, kClimateFeatureCount>> per_pixel(spec.size());

  parallel_range(spec.size(), 16, [&](std::size_t begin, std::size_t end) {
    for (std::size_t p = begin; p < end; ++p) {
      const std::size_t i = p / spec.width;
      const std::size_t j = p % spec.width;
      const ClimateInputs h = historical.pixel(i, j);
      const ClimateInputs t = target.pixel(i, j);
      if (!all_finite(h) || !all_finite(t)) {
        per_pixel[p].fill(kNaN);
        continue;
      }
      per_pixel[p] = compute_climate_features(t, fit_climate_baseline(h)).values;
    }
  });

  RasterSet out;
  const auto& names = climate_feature_names();
  for (std::size_t f = 0; f < names.size(); ++f) {
    std::vector<double> vals(spec.size());
    for (std::size_t p = 0; p < spec.size(); ++p) vals[p] = per_pixel[p][f];
    out.emplace(names[f], Raster(spec, std::move(vals)));
  }
  return out;
}

}  // namespace arable
