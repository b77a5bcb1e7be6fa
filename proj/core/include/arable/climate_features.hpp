#pragma once

#include <array>
#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "arable/grid.hpp"

namespace arable {

// 365-day no-leap calendar.
inline constexpr int kDaysPerYear = 365;
inline constexpr std::array<int, 12> kDaysInMonth = {31, 28, 31, 30, 31, 30,
                                                      31, 31, 30, 31, 30, 31};
// Calendar month (0-based) of day-of-year 0..364.
int month_of_day(int day_of_year);

enum class Variable { Tmax, Tmin, Tmean, Precip, Dewpoint, Windmax, Swe };

std::string_view variable_name(Variable v);
Variable parse_variable(std::string_view name);

using Monthly = std::array<double, 12>;

struct DailySeries {
  Variable variable = Variable::Tmean;
  int start_year = 0;
  std::vector<double> values;  // length 365 * years

  DailySeries() = default;
  DailySeries(Variable v, int start, std::vector<double> vals);
  int years() const { return static_cast<int>(values.size() / kDaysPerYear); }
};

// Per-calendar-month quantile of one variable over a baseline period.
struct PercentileThresholds {
  Variable variable = Variable::Tmax;
  double q = 0.95;
  Monthly value{};
};

enum class Direction { Above, Below };

// Empirical quantile with linear interpolation between order statistics
// (h = (n-1) q). `values` is taken by value and partially sorted.
double empirical_quantile(std::vector<double> values, double q);

PercentileThresholds fit_percentiles(const DailySeries& baseline, double q);

// Mean over years of the per-month count of days strictly beyond `thr`.
Monthly count_exceedance(const DailySeries& series, const PercentileThresholds& thr,
                         Direction direction);

// Decade mean of per-month aggregates. Precipitation is summed within each
// month (mm/month); every other variable is averaged.
Monthly monthly_mean(const DailySeries& series);

// Days per month whose cumulative Nesterov index exceeds 4000.
Monthly nesterov_fy(const DailySeries& tmax, const DailySeries& dewpoint,
                    const DailySeries& precip);

// Days per month with tmin < 0 < tmax.
Monthly zero_crossings(const DailySeries& tmin, const DailySeries& tmax);

// Days per month whose mean temperature differs from the previous day's by
// more than 6 degrees.
Monthly temp_jumps(const DailySeries& tmean);

// ---------------------------------------------------------------------------
// Standardized precipitation index over 12-month accumulations.

// Rational approximation of the standard normal quantile, |error| < 4.5e-4.
double inverse_normal(double p);

// Two-parameter gamma distribution fitted per calendar month, mixed with the
// probability of a zero accumulation.
struct GammaFit {
  double alpha = 1.0;
  double theta = 1.0;
  double zero_prob = 0.0;
  bool degenerate = false;  // no nonzero baseline sums; SPI pinned to 0
};

struct SpiFit {
  std::array<GammaFit, 12> month{};
  double cdf(int month, double x) const;
};

// Monthly totals of a daily precipitation series, length 12 * years.
std::vector<double> monthly_totals(const DailySeries& precip);

// 12-month rolling sums; entry k covers months k-11..k, NaN for k < 11.
std::vector<double> rolling_12m(const std::vector<double>& monthly);

// Thom's closed-form gamma fit per calendar month. Needs >= 4 baseline years.
SpiFit fit_spi(const DailySeries& baseline_precip);

// SPI for every month with a complete 12-month window (NaN otherwise).
std::vector<double> spi_series(const DailySeries& precip, const SpiFit& fit);

// Single annual SPI feature: the average of every defined monthly SPI value
// of the target series.
double spi_12m(const DailySeries& precip, const SpiFit& fit);

// ---------------------------------------------------------------------------
// The 121-entry climate feature set.

inline constexpr std::size_t kMonthlyVarCount = 10;
inline constexpr std::size_t kClimateFeatureCount = kMonthlyVarCount * 12 + 1;

// Monthly feature variables in column order.
const std::array<std::string, kMonthlyVarCount>& monthly_feature_vars();
inline constexpr std::string_view kSpiFeatureName = "12m_SPI";
std::string monthly_feature_name(std::string_view var, int month0);
// The 121 climate feature names: var-major, month-minor, then 12m_SPI.
const std::vector<std::string>& climate_feature_names();

// Daily inputs for one pixel.
struct ClimateInputs {
  DailySeries tmax, tmin, tmean, precip, dewpoint, windmax, swe;
};

// Everything fitted once on the historical baseline and reused for every
// scenario period.
struct ClimateBaseline {
  PercentileThresholds tmax_p95, tmin_p05, precip_p95, wind_p95;
  SpiFit spi;
};

ClimateBaseline fit_climate_baseline(const ClimateInputs& historical);

struct MonthlyFeatureSet {
  std::array<double, kClimateFeatureCount> values{};
  double at(std::string_view name) const;
};

MonthlyFeatureSet compute_climate_features(const ClimateInputs& target,
                                           const ClimateBaseline& baseline);

// Series stacks for one period, one per variable, sharing a grid.
struct ClimateStacks {
  SeriesStack tmax, tmin, tmean, precip, dewpoint, windmax, swe;
  const GridSpec& spec() const { return tmax.spec; }
  void validate() const;
  ClimateInputs pixel(std::size_t i, std::size_t j) const;
  const SeriesStack& by_variable(Variable v) const;
  SeriesStack& by_variable(Variable v);
};

// Per-pixel features on the stacks' grid; baselines are fitted on
// `historical` pixel by pixel. Pixels with any non-finite input are nodata.
RasterSet climate_feature_rasters(const ClimateStacks& historical, const ClimateStacks& target);

}  // namespace arable
