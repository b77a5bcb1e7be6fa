#include <algorithm>
#include <cmath>

#include <boost/math/special_functions/gamma.hpp>
#include <spdlog/spdlog.h>

#include "arable/climate_features.hpp"
#include "arable/error.hpp"

namespace arable {

namespace {
constexpr int kMinBaselineYears = 4;
// Lower bound on Thom's A statistic; keeps alpha finite for near-constant
// baselines (alpha is then ~1/(3A)).
constexpr double kMinThomA = 1e-8;
constexpr double kProbClamp = 1e-12;
}  // namespace

double inverse_normal(double p) {
  // Abramowitz & Stegun 26.2.23.
  constexpr double c0 = 2.515517, c1 = 0.802853, c2 = 0.010328;
  constexpr double d1 = 1.432788, d2 = 0.189269, d3 = 0.001308;
  if (!(p > 0.0 && p < 1.0)) throw DataError("inverse_normal: probability outside (0,1)");
  const bool lower = p < 0.5;
  const double tail = lower ? p : 1.0 - p;
  const double t = std::sqrt(-2.0 * std::log(tail));
  const double x = t - (c0 + c1 * t + c2 * t * t) / (1.0 + d1 * t + d2 * t * t + d3 * t * t * t);
  return lower ? -x : x;
}

double SpiFit::cdf(int m, double x) const {
  const GammaFit& g = month.at(static_cast<std::size_t>(m));
  if (g.degenerate) return kNaN;
  if (x <= 0.0) return g.zero_prob;
  return g.zero_prob + (1.0 - g.zero_prob) * boost::math::gamma_p(g.alpha, x / g.theta);
}

std::vector<double> monthly_totals(const DailySeries& precip) {
  std::vector<double> totals(static_cast<std::size_t>(precip.years()) * 12, 0.0);
  for (std::size_t d = 0; d < precip.values.size(); ++d) {
    const std::size_t year = d / kDaysPerYear;
    totals[year * 12 + static_cast<std::size_t>(month_of_day(static_cast<int>(d % kDaysPerYear)))] +=
        precip.values[d];
  }
  return totals;
}

std::vector<double> rolling_12m(const std::vector<double>& monthly) {
  std::vector<double> out(monthly.size(), kNaN);
  for (std::size_t k = 11; k < monthly.size(); ++k) {
    double s = 0.0;
    for (std::size_t w = k - 11; w <= k; ++w) s += monthly[w];
    out[k] = s;
  }
  return out;
}

SpiFit fit_spi(const DailySeries& baseline_precip) {
  if (baseline_precip.years() < kMinBaselineYears)
    throw DataError("SPI baseline spans " + std::to_string(baseline_precip.years()) +
                    " years; at least 4 are required");
  const auto sums = rolling_12m(monthly_totals(baseline_precip));
  SpiFit fit;
  for (int m = 0; m < 12; ++m) {
    std::size_t total = 0;
    double sum = 0.0, log_sum = 0.0;
    std::size_t nonzero = 0;
    for (std::size_t k = static_cast<std::size_t>(m); k < sums.size(); k += 12) {
      if (std::isnan(sums[k])) continue;
      ++total;
      if (sums[k] > 0.0) {
        ++nonzero;
        sum += sums[k];
        log_sum += std::log(sums[k]);
      }
    }
    GammaFit& g = fit.month[static_cast<std::size_t>(m)];
    if (nonzero == 0) {
      spdlog::warn("SPI: month {} has an all-zero baseline; SPI fixed at 0", m + 1);
      g.degenerate = true;
      g.zero_prob = 1.0;
      continue;
    }
    const double mean = sum / static_cast<double>(nonzero);
    const double a = std::max(std::log(mean) - log_sum / static_cast<double>(nonzero), kMinThomA);
    g.alpha = (1.0 + std::sqrt(1.0 + 4.0 * a / 3.0)) / (4.0 * a);
    g.theta = mean / g.alpha;
    g.zero_prob = static_cast<double>(total - nonzero) / static_cast<double>(total);
  }
  return fit;
}

std::vector<double> spi_series(const DailySeries& precip, const SpiFit& fit) {
  const auto sums = rolling_12m(monthly_totals(precip));
  std::vector<double> out(sums.size(), kNaN);
  for (std::size_t k = 0; k < sums.size(); ++k) {
    if (std::isnan(sums[k])) continue;
    const double h = fit.cdf(static_cast<int>(k % 12), sums[k]);
    if (std::isnan(h)) {
      out[k] = 0.0;
      continue;
    }
    out[k] = inverse_normal(std::clamp(h, kProbClamp, 1.0 - kProbClamp));
  }
  return out;
}

double spi_12m(const DailySeries& precip, const SpiFit& fit) {
  const auto s = spi_series(precip, fit);
  double acc = 0.0;
  std::size_t n = 0;
  for (double v : s) {
    if (std::isnan(v)) continue;
    acc += v;
    ++n;
  }
  if (n == 0) throw DataError("SPI needs at least 12 months of data");
  return acc / static_cast<double>(n);
}

}  // namespace arable
