#include "arable/terrain_features.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include "arable/error.hpp"
#include "arable/parallel.hpp"

namespace arable {

namespace {
constexpr double kRadToDeg = 180.0 / std::numbers::pi;
constexpr double kDegToRad = std::numbers::pi / 180.0;
// Squared gradient below which a cell counts as flat.
constexpr double kFlatGradient2 = 1e-20;

std::string format_km(double km) {
  std::ostringstream os;
  os << km;
  return os.str();
}
}  // namespace

void ScaleSet::validate() const {
  if (km.empty()) throw ConfigError("scale set is empty");
  for (std::size_t k = 0; k < km.size(); ++k) {
    if (!(km[k] > 0.0)) throw ConfigError("scales must be positive");
    if (k > 0 && !(km[k] > km[k - 1])) throw ConfigError("scales must be strictly increasing");
  }
}

QuadraticPatch fit_patch(const std::array<double, 9>& w, double cell_m) {
  // Work relative to the centre so that adding a constant to the window
  // leaves every derivative coefficient unchanged.
  std::array<double, 9> z;
  for (std::size_t k = 0; k < 9; ++k) z[k] = w[k] - w[4];
  const double g = cell_m;
  const double g2 = g * g;
  QuadraticPatch p;
  p.a = (z[0] + z[2] + z[3] + z[5] + z[6] + z[8]) / (6.0 * g2) - (z[1] + z[4] + z[7]) / (3.0 * g2);
  p.b = (z[0] + z[1] + z[2] + z[6] + z[7] + z[8]) / (6.0 * g2) - (z[3] + z[4] + z[5]) / (3.0 * g2);
  p.c = (z[2] + z[6] - z[0] - z[8]) / (4.0 * g2);
  p.d = (z[2] + z[5] + z[8] - z[0] - z[3] - z[6]) / (6.0 * g);
  p.e = (z[0] + z[1] + z[2] - z[6] - z[7] - z[8]) / (6.0 * g);
  p.f = w[4] + (2.0 * (z[1] + z[3] + z[5] + z[7]) - (z[0] + z[2] + z[6] + z[8]) + 5.0 * z[4]) / 9.0;
  return p;
}

Raster smooth(const Raster& dem, double sigma_px) {
  if (!(sigma_px > 0.0) || !std::isfinite(sigma_px))
    throw DataError("smooth: sigma must be positive");
  const auto radius = static_cast<long>(std::ceil(3.0 * sigma_px));
  std::vector<double> kernel(static_cast<std::size_t>(2 * radius + 1));
  for (long k = -radius; k <= radius; ++k)
    kernel[static_cast<std::size_t>(k + radius)] =
        std::exp(-static_cast<double>(k * k) / (2.0 * sigma_px * sigma_px));

  const auto h = static_cast<long>(dem.height());
  const auto w = static_cast<long>(dem.width());

  auto pass = [&](const Raster& in, bool horizontal) {
    Raster out(in.spec(), kNaN);
    for (long i = 0; i < h; ++i) {
      for (long j = 0; j < w; ++j) {
        if (in.is_nodata(in.at(static_cast<std::size_t>(i), static_cast<std::size_t>(j))))
          continue;
        double acc = 0.0, wsum = 0.0;
        for (long k = -radius; k <= radius; ++k) {
          const long ii = horizontal ? i : i + k;
          const long jj = horizontal ? j + k : j;
          if (ii < 0 || ii >= h || jj < 0 || jj >= w) continue;
          const double v = in.at(static_cast<std::size_t>(ii), static_cast<std::size_t>(jj));
          if (in.is_nodata(v)) continue;
          const double wk = kernel[static_cast<std::size_t>(k + radius)];
          acc += wk * v;
          wsum += wk;
        }
        out.at(static_cast<std::size_t>(i), static_cast<std::size_t>(j)) = acc / wsum;
      }
    }
    return out;
  };
  return pass(pass(dem, true), false);
}

MorphometricValues morphometrics_at(const QuadraticPatch& q, double sun_altitude_deg) {
  const double a = q.a, b = q.b, c = q.c, d = q.d, e = q.e;
  const double p2 = d * d + e * e;
  const bool flat = p2 < kFlatGradient2;

  const double alt = sun_altitude_deg * kDegToRad;
  const double norm = std::sqrt(1.0 + p2);
  auto shade = [&](double azimuth_deg) {
    const double az = azimuth_deg * kDegToRad;
    const double sx = std::sin(az) * std::cos(alt);
    const double sy = std::cos(az) * std::cos(alt);
    const double sz = std::sin(alt);
    const double cosang = (-d * sx - e * sy + sz) / norm;
    return std::clamp(cosang, 0.0, 1.0);
  };

  MorphometricValues m;
  m.v[0] = std::atan(std::sqrt(p2)) * kRadToDeg;
  if (!flat) {
    double az = std::atan2(-d, -e) * kRadToDeg;
    if (az < 0.0) az += 360.0;
    if (az >= 360.0) az -= 360.0;
    m.v[1] = az;
  }
  m.v[2] = shade(90.0);
  if (!flat) {
    const double along = a * d * d + b * e * e + c * d * e;
    const double across = a * e * e + b * d * d - c * d * e;
    m.v[3] = -2.0 * along / (p2 * std::pow(1.0 + p2, 1.5));
    m.v[4] = 2.0 * across / std::pow(p2, 1.5);
    m.v[5] = -2.0 * along / p2;
    m.v[6] = -2.0 * across / p2;
  }
  const double root = std::sqrt((a - b) * (a - b) + c * c);
  m.v[7] = -a - b - root;
  m.v[8] = -a - b + root;
  m.v[9] = shade(180.0);
  return m;
}

std::array<Raster, kMorphometricCount> morphometrics(const Raster& surface, double cell_m,
                                                     double sun_altitude_deg) {
  if (surface.width() < 3 || surface.height() < 3)
    throw DataError("morphometrics need a raster of at least 3x3");
  if (!(cell_m > 0.0)) throw DataError("morphometrics: cell size must be positive");
  std::array<Raster, kMorphometricCount> out;
  for (auto& r : out) r = Raster(surface.spec(), kNaN);

  const std::size_t h = surface.height(), w = surface.width();
  parallel_range(h - 2, 8, [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin + 1; i < end + 1; ++i) {
      for (std::size_t j = 1; j + 1 < w; ++j) {
        std::array<double, 9> win;
        bool ok = true;
        for (std::size_t di = 0; di < 3 && ok; ++di)
          for (std::size_t dj = 0; dj < 3; ++dj) {
            const double v = surface.at(i + di - 1, j + dj - 1);
            if (surface.is_nodata(v)) {
              ok = false;
              break;
            }
            win[di * 3 + dj] = v;
          }
        if (!ok) continue;
        const auto m = morphometrics_at(fit_patch(win, cell_m), sun_altitude_deg);
        for (std::size_t k = 0; k < kMorphometricCount; ++k) out[k].at(i, j) = m.v[k];
      }
    }
  });
  return out;
}

std::vector<std::string> terrain_feature_names(const ScaleSet& scales) {
  scales.validate();
  std::vector<std::string> names{kDemFeatureName};
  for (std::size_t k = 1; k <= kMorphometricCount; ++k)
    for (double km : scales.km)
      names.push_back("morf_" + std::to_string(k) + "_" + format_km(km) + "km");
  return names;
}

RasterSet terrain_feature_stack(const Raster& dem, const ScaleSet& scales,
                                double sun_altitude_deg) {
  scales.validate();
  const double cell_m = dem.spec().cell * kMetersPerDegree;
  const double cell_km = cell_m / 1000.0;
  // Smooth heights above the lowest cell so that a constant offset cancels
  // before any weighted sum and every scale stays translation invariant.
  double lowest = std::numeric_limits<double>::infinity();
  for (double v : dem.values())
    if (!dem.is_nodata(v)) lowest = std::min(lowest, v);
  Raster relief = dem;
  if (std::isfinite(lowest))
    for (auto& v : relief.values())
      if (!relief.is_nodata(v)) v -= lowest;

  RasterSet out;
  out.emplace(kDemFeatureName, dem);
  for (std::size_t s = 0; s < scales.km.size(); ++s) {
    const Raster smoothed = smooth(relief, scales.sigma_px(s, cell_km));
    auto morph = morphometrics(smoothed, cell_m, sun_altitude_deg);
    for (std::size_t k = 0; k < kMorphometricCount; ++k)
      out.emplace("morf_" + std::to_string(k + 1) + "_" + format_km(scales.km[s]) + "km",
                  std::move(morph[k]));
  }
  return out;
}

}  // namespace arable
