#pragma once

#include <array>
#include <string>
#include <vector>

#include "arable/grid.hpp"

namespace arable {

// Meters per degree, used for both axes of the plate carrée grid.
inline constexpr double kMetersPerDegree = 111320.0;

// Hierarchical relief scales in km. Each scale L smooths the DEM with a
// Gaussian of sigma = (L / cell_km) / 6 pixels.
struct ScaleSet {
  std::vector<double> km = {3.0, 11.0, 33.0, 47.0};

  void validate() const;
  double sigma_px(std::size_t k, double cell_km) const { return km.at(k) / cell_km / 6.0; }
};

// z = a x^2 + b y^2 + c xy + d x + e y + f over a 3x3 window, x east and y
// north, in meters.
struct QuadraticPatch {
  double a = 0, b = 0, c = 0, d = 0, e = 0, f = 0;
};

// Exact least-squares fit on a 3x3 window given row-major (north row first).
QuadraticPatch fit_patch(const std::array<double, 9>& window, double cell_m);

// Separable, nodata-aware Gaussian smoothing. Kernel radius ceil(3 sigma),
// renormalized over valid in-bounds neighbours. Nodata cells stay nodata.
Raster smooth(const Raster& dem, double sigma_px);

inline constexpr std::size_t kMorphometricCount = 10;

// morf_1..morf_10: slope, aspect, east shade, profile convexity, plan
// convexity, longitudinal curvature, cross-sectional curvature, minimum
// curvature, maximum curvature, south shade.
struct MorphometricValues {
  std::array<double, kMorphometricCount> v{};
};

MorphometricValues morphometrics_at(const QuadraticPatch& p, double sun_altitude_deg);

// One raster per morphometric. Border pixels (and windows touching nodata)
// are nodata. Throws for rasters smaller than 3x3.
std::array<Raster, kMorphometricCount> morphometrics(const Raster& surface, double cell_m,
                                                     double sun_altitude_deg = 45.0);

inline constexpr const char* kDemFeatureName = "DEM_1km";
inline constexpr std::size_t kTerrainFeatureCount = 1 + kMorphometricCount * 4;

// DEM_1km, then morf_<k>_<L>km with k major and scale minor.
std::vector<std::string> terrain_feature_names(const ScaleSet& scales = {});

// DEM plus the ten morphometrics at every scale.
RasterSet terrain_feature_stack(const Raster& dem, const ScaleSet& scales = {},
                                double sun_altitude_deg = 45.0);

}  // namespace arable
