#include <cmath>
#include <cstring>
#include <random>

#include <gtest/gtest.h>

#include "arable/error.hpp"
#include "arable/terrain_features.hpp"

using namespace arable;

namespace {

enum Morph { kSlope, kAspect, kShadeE, kProfile, kPlan, kLong, kCross, kMin, kMax, kShadeS };

// Raster over a grid whose cell is `cell_m` meters, filled from z(x, y) with x
// east and y north, origin at the centre pixel.
template <class F>
Raster surface(std::size_t n, double cell_m, F z) {
  Raster r(GridSpec{n, n, 0.0, 1.0, cell_m / kMetersPerDegree});
  const double c = static_cast<double>(n / 2);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      r.at(i, j) = z((static_cast<double>(j) - c) * cell_m, (c - static_cast<double>(i)) * cell_m);
  return r;
}

std::array<double, 9> rotate90(const std::array<double, 9>& w) {
  // Clockwise: new(r, c) = old(2 - c, r).
  std::array<double, 9> out;
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c) out[static_cast<std::size_t>(r * 3 + c)] = w[static_cast<std::size_t>((2 - c) * 3 + r)];
  return out;
}

bool bit_equal(double a, double b) { return std::memcmp(&a, &b, sizeof a) == 0; }

}  // namespace

TEST(Patch, RecoversExactQuadratic) {
  const double g = 30.0;
  const QuadraticPatch truth{0.003, -0.002, 0.0015, 0.4, -0.25, 120.0};
  std::array<double, 9> w;
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c) {
      const double x = (c - 1) * g, y = (1 - r) * g;
      w[static_cast<std::size_t>(r * 3 + c)] =
          truth.a * x * x + truth.b * y * y + truth.c * x * y + truth.d * x + truth.e * y + truth.f;
    }
  const auto p = fit_patch(w, g);
  EXPECT_NEAR(p.a, truth.a, 1e-12);
  EXPECT_NEAR(p.b, truth.b, 1e-12);
  EXPECT_NEAR(p.c, truth.c, 1e-12);
  EXPECT_NEAR(p.d, truth.d, 1e-12);
  EXPECT_NEAR(p.e, truth.e, 1e-12);
  EXPECT_NEAR(p.f, truth.f, 1e-9);
}

TEST(Morphometrics, InclinedPlane) {
  const auto m = morphometrics(surface(5, 1.0, [](double x, double) { return x; }), 1.0);
  EXPECT_NEAR(m[kSlope].at(2, 2), 45.0, 1e-9);
  EXPECT_NEAR(m[kAspect].at(2, 2), 270.0, 1e-9);
  for (int k : {kProfile, kPlan, kLong, kCross, kMin, kMax}) EXPECT_NEAR(m[static_cast<std::size_t>(k)].at(2, 2), 0.0, 1e-9) << k;
  EXPECT_TRUE(std::isnan(m[kSlope].at(0, 2)));
  EXPECT_TRUE(std::isnan(m[kSlope].at(2, 4)));
}

TEST(Morphometrics, AspectPointsDownhill) {
  const auto north = morphometrics(surface(3, 10.0, [](double, double y) { return -0.5 * y; }), 10.0);
  EXPECT_NEAR(north[kAspect].at(1, 1), 0.0, 1e-9);
  const auto east = morphometrics(surface(3, 10.0, [](double x, double) { return -x; }), 10.0);
  EXPECT_NEAR(east[kAspect].at(1, 1), 90.0, 1e-9);
  const auto south = morphometrics(surface(3, 10.0, [](double, double y) { return y; }), 10.0);
  EXPECT_NEAR(south[kAspect].at(1, 1), 180.0, 1e-9);
}

TEST(Morphometrics, ParaboloidApex) {
  const auto m = morphometrics(surface(3, 1.0, [](double x, double y) { return -(x * x + y * y); }), 1.0);
  EXPECT_NEAR(m[kMin].at(1, 1), 2.0, 1e-9);
  EXPECT_NEAR(m[kMax].at(1, 1), 2.0, 1e-9);
  EXPECT_NEAR(m[kSlope].at(1, 1), 0.0, 1e-9);
  EXPECT_EQ(m[kAspect].at(1, 1), 0.0);
}

TEST(Morphometrics, SaddleSeparatesCurvatures) {
  // z = x^2 - y^2: a = 1, b = -1, so k = 0 -/+ 2.
  const auto m = morphometrics(surface(3, 1.0, [](double x, double y) { return x * x - y * y; }), 1.0);
  EXPECT_NEAR(m[kMin].at(1, 1), -2.0, 1e-9);
  EXPECT_NEAR(m[kMax].at(1, 1), 2.0, 1e-9);
}

TEST(Morphometrics, ClosedFormsOffApex) {
  const QuadraticPatch p{0.01, 0.02, -0.005, 0.3, 0.1, 0.0};
  const auto m = morphometrics_at(p, 45.0);
  const double p2 = 0.09 + 0.01;
  const double along = 0.01 * 0.09 + 0.02 * 0.01 - 0.005 * 0.03;
  const double across = 0.01 * 0.01 + 0.02 * 0.09 + 0.005 * 0.03;
  EXPECT_NEAR(m.v[kSlope], std::atan(std::sqrt(p2)) * 180.0 / M_PI, 1e-12);
  EXPECT_NEAR(m.v[kProfile], -2 * along / (p2 * std::pow(1 + p2, 1.5)), 1e-12);
  EXPECT_NEAR(m.v[kPlan], 2 * across / std::pow(p2, 1.5), 1e-12);
  EXPECT_NEAR(m.v[kLong], -2 * along / p2, 1e-12);
  EXPECT_NEAR(m.v[kCross], -2 * across / p2, 1e-12);
  // Downhill is towards -x, -y: south-west.
  EXPECT_NEAR(m.v[kAspect], 180.0 + std::atan2(0.3, 0.1) * 180.0 / M_PI, 1e-9);
}

TEST(Morphometrics, FlatShadeIsCosAltitude) {
  const auto m = morphometrics_at(QuadraticPatch{}, 45.0);
  EXPECT_NEAR(m.v[kShadeE], std::cos(M_PI / 4), 1e-12);
  EXPECT_NEAR(m.v[kShadeS], std::cos(M_PI / 4), 1e-12);
  EXPECT_NEAR(morphometrics_at(QuadraticPatch{}, 30.0).v[kShadeE], 0.5, 1e-12);
}

TEST(Morphometrics, ShadeFacesTheSun) {
  // A slope descending to the east is lit from the east better than a flat one.
  const auto east = morphometrics_at(QuadraticPatch{0, 0, 0, -0.5, 0, 0}, 45.0);
  const auto west = morphometrics_at(QuadraticPatch{0, 0, 0, 0.5, 0, 0}, 45.0);
  EXPECT_GT(east.v[kShadeE], std::cos(M_PI / 4));
  EXPECT_LT(west.v[kShadeE], std::cos(M_PI / 4));
  EXPECT_NEAR(east.v[kShadeS], west.v[kShadeS], 1e-12);
  // Steep enough away from the sun: fully shaded.
  EXPECT_EQ(morphometrics_at(QuadraticPatch{0, 0, 0, 5.0, 0, 0}, 45.0).v[kShadeE], 0.0);
}

TEST(Morphometrics, RangesOnRandomSurfaces) {
  std::mt19937_64 gen(4);
  std::normal_distribution<double> nd(0, 40);
  Raster r(GridSpec{24, 24, 0, 1, 0.01});
  for (auto& v : r.values()) v = nd(gen);
  const auto m = morphometrics(r, 25.0);
  for (std::size_t k = 0; k < r.size(); ++k) {
    if (std::isnan(m[kSlope][k])) continue;
    EXPECT_GE(m[kSlope][k], 0.0);
    EXPECT_LT(m[kSlope][k], 90.0);
    EXPECT_GE(m[kAspect][k], 0.0);
    EXPECT_LT(m[kAspect][k], 360.0);
    for (int s : {kShadeE, kShadeS}) {
      EXPECT_GE(m[static_cast<std::size_t>(s)][k], 0.0);
      EXPECT_LE(m[static_cast<std::size_t>(s)][k], 1.0);
    }
    EXPECT_LE(m[kMin][k], m[kMax][k]);
  }
}

TEST(Morphometrics, RotationInvariantCurvatures) {
  std::mt19937_64 gen(8);
  std::normal_distribution<double> nd(0, 5);
  for (int t = 0; t < 500; ++t) {
    std::array<double, 9> w;
    for (auto& v : w) v = nd(gen);
    const auto p = fit_patch(w, 10.0);
    const auto q = fit_patch(rotate90(w), 10.0);
    EXPECT_NEAR(q.a, p.b, 1e-12);
    EXPECT_NEAR(q.b, p.a, 1e-12);
    EXPECT_NEAR(q.c, -p.c, 1e-12);
    const auto mp = morphometrics_at(p, 45.0), mq = morphometrics_at(q, 45.0);
    EXPECT_NEAR(mp.v[kMin], mq.v[kMin], 1e-12);
    EXPECT_NEAR(mp.v[kMax], mq.v[kMax], 1e-12);
    EXPECT_NEAR(mp.v[kSlope], mq.v[kSlope], 1e-9);
  }
}

TEST(Morphometrics, TranslationInvarianceIsExact) {
  // Heights on a 1/128 m lattice: adding a whole number of metres is exact.
  std::mt19937_64 gen(12);
  std::uniform_int_distribution<int> cm(0, 300000);
  Raster r(GridSpec{20, 20, 0, 1, 0.01});
  for (auto& v : r.values()) v = cm(gen) / 128.0;
  Raster shifted = r;
  for (auto& v : shifted.values()) v += 1234.0;
  const auto a = morphometrics(r, 30.0), b = morphometrics(shifted, 30.0);
  for (std::size_t k = 0; k < kMorphometricCount; ++k)
    for (std::size_t p = 0; p < r.size(); ++p) EXPECT_TRUE(bit_equal(a[k][p], b[k][p])) << k << " " << p;
}

TEST(Morphometrics, ScalingSteepensWithoutTurning) {
  std::mt19937_64 gen(2);
  std::normal_distribution<double> nd(0, 3);
  for (int t = 0; t < 200; ++t) {
    std::array<double, 9> w;
    for (auto& v : w) v = nd(gen);
    std::array<double, 9> s = w;
    for (auto& v : s) v *= 2.5;
    const auto a = morphometrics_at(fit_patch(w, 5.0), 45.0);
    const auto b = morphometrics_at(fit_patch(s, 5.0), 45.0);
    EXPECT_GT(b.v[kSlope], a.v[kSlope]);
    EXPECT_NEAR(b.v[kAspect], a.v[kAspect], 1e-9);
  }
}

TEST(Morphometrics, TooSmallRejected) {
  EXPECT_THROW(morphometrics(Raster(GridSpec{2, 5, 0, 1, 0.01}, 1.0), 10.0), DataError);
}

TEST(Smooth, TinySigmaIsIdentity) {
  std::mt19937_64 gen(1);
  std::normal_distribution<double> nd(0, 100);
  Raster r(GridSpec{9, 7, 0, 1, 0.01});
  for (auto& v : r.values()) v = nd(gen);
  const Raster s = smooth(r, 0.1);
  for (std::size_t k = 0; k < r.size(); ++k) EXPECT_NEAR(s[k], r[k], 1e-6);
}

TEST(Smooth, ConstantUnchangedAndSigmaChecked) {
  const Raster r(GridSpec{6, 6, 0, 1, 0.01}, 42.0);
  const Raster s = smooth(r, 2.0);
  for (double v : s.values()) EXPECT_NEAR(v, 42.0, 1e-12);
  EXPECT_THROW(smooth(r, 0.0), DataError);
  EXPECT_THROW(smooth(r, -1.0), DataError);
}

TEST(Smooth, ImpulseGivesKernel) {
  const double sigma = 1.5;
  const int n = 21, c = 10, radius = 5;
  Raster r(GridSpec{n, n, 0, 1, 0.01}, 0.0);
  r.at(c, c) = 1.0;
  const Raster s = smooth(r, sigma);
  double z = 0;
  for (int k = -radius; k <= radius; ++k) z += std::exp(-k * k / (2 * sigma * sigma));
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      const int di = i - c, dj = j - c;
      const double expect = (std::abs(di) > radius || std::abs(dj) > radius)
                                ? 0.0
                                : std::exp(-(di * di + dj * dj) / (2 * sigma * sigma)) / (z * z);
      EXPECT_NEAR(s.at(static_cast<std::size_t>(i), static_cast<std::size_t>(j)), expect, 1e-15);
    }
}

TEST(Smooth, NodataStaysAndIsSkipped) {
  Raster r(GridSpec{5, 5, 0, 1, 0.01}, 3.0);
  r.at(2, 2) = kNaN;
  const Raster s = smooth(r, 1.0);
  EXPECT_TRUE(std::isnan(s.at(2, 2)));
  EXPECT_NEAR(s.at(2, 1), 3.0, 1e-12);
}

TEST(TerrainStack, NamesAndCount) {
  const auto names = terrain_feature_names();
  ASSERT_EQ(names.size(), kTerrainFeatureCount);
  EXPECT_EQ(names[0], "DEM_1km");
  EXPECT_EQ(names[1], "morf_1_3km");
  EXPECT_EQ(names[4], "morf_1_47km");
  EXPECT_EQ(names[40], "morf_10_47km");
  EXPECT_THROW(terrain_feature_names(ScaleSet{{3, 3}}), ConfigError);
}

TEST(TerrainStack, ConstantDem) {
  const Raster dem(GridSpec{40, 40, 0, 1, 0.01}, 250.0);
  const auto stack = terrain_feature_stack(dem);
  ASSERT_EQ(stack.size(), 41u);
  for (double v : stack.at("DEM_1km").values()) EXPECT_EQ(v, 250.0);
  for (const auto& [name, raster] : stack) {
    if (name == "DEM_1km") continue;
    const bool shade = name.rfind("morf_3_", 0) == 0 || name.rfind("morf_10_", 0) == 0;
    for (double v : raster.values())
      if (!std::isnan(v)) EXPECT_NEAR(v, shade ? std::cos(M_PI / 4) : 0.0, 1e-9) << name;
  }
}

TEST(TerrainStack, PlaneSlopeSameAtEveryScale) {
  // Interior pixels only: far enough from the edge that the kernel is untruncated
  // at the smallest scale, where the plane stays a plane.
  const double cell_m = 0.01 * kMetersPerDegree;
  Raster dem = surface(60, cell_m, [](double x, double y) { return 0.02 * x - 0.01 * y; });
  dem = Raster(GridSpec{60, 60, 0, 1, 0.01}, dem.values());
  ScaleSet scales{{3.0, 6.0, 9.0, 12.0}};
  const auto stack = terrain_feature_stack(dem, scales);
  const double expect = std::atan(std::sqrt(0.0005)) * 180.0 / M_PI;
  for (const char* n : {"morf_1_3km", "morf_1_6km", "morf_1_9km", "morf_1_12km"})
    EXPECT_NEAR(stack.at(n).at(30, 30), expect, 1e-9) << n;
}

TEST(TerrainStack, TranslationInvariantAtEveryScale) {
  std::mt19937_64 gen(31);
  std::uniform_int_distribution<int> cm(0, 200000);
  Raster dem(GridSpec{48, 48, 0, 1, 0.01});
  for (auto& v : dem.values()) v = cm(gen) / 128.0;
  dem.at(5, 5) = kNaN;
  Raster shifted = dem;
  for (auto& v : shifted.values()) v += 4096.0;
  const auto a = terrain_feature_stack(dem), b = terrain_feature_stack(shifted);
  for (const auto& [name, r] : a) {
    if (name == "DEM_1km") continue;
    for (std::size_t p = 0; p < r.size(); ++p) EXPECT_TRUE(bit_equal(r[p], b.at(name)[p])) << name << " " << p;
  }
}
