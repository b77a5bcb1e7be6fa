#include <cstring>
#include <fstream>
#include <random>
#include <set>

#include <gtest/gtest.h>

#include "arable/error.hpp"
#include "arable/grid.hpp"
#include "temp_dir.hpp"

using namespace arable;

namespace {

GridSpec spec(std::size_t w, std::size_t h, double lon = 0.0, double lat = 10.0, double cell = 1.0) {
  return {w, h, lon, lat, cell};
}

Raster random_raster(std::size_t w, std::size_t h, unsigned seed) {
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> nd(0.0, 100.0);
  Raster r(spec(w, h));
  for (auto& v : r.values()) v = nd(gen);
  return r;
}

bool bit_equal(double a, double b) { return std::memcmp(&a, &b, sizeof a) == 0; }

}  // namespace

TEST(GridSpec, PixelCenters) {
  const GridSpec g{4, 3, 19.0, 60.0, 0.5};
  EXPECT_DOUBLE_EQ(g.center_lon(0), 19.25);
  EXPECT_DOUBLE_EQ(g.center_lat(0), 59.75);
  EXPECT_DOUBLE_EQ(g.center_lat(2), 58.75);
  EXPECT_DOUBLE_EQ(g.lon_max(), 21.0);
  EXPECT_DOUBLE_EQ(g.lat_min(), 58.5);
}

TEST(GridSpec, RejectsDegenerate) {
  EXPECT_THROW(spec(0, 3).validate(), DataError);
  EXPECT_THROW((GridSpec{2, 2, 0.0, 1.0, 0.0}.validate()), DataError);
  EXPECT_THROW((GridSpec{2, 2, kNaN, 1.0, 1.0}.validate()), DataError);
}

TEST(RasterIo, TwoByTwoLayout) {
  TempDir dir;
  Raster r(spec(2, 2), std::vector<double>{1, 2, 3, 4});
  write_raster(r, dir / "a");
  const Raster back = read_raster(dir / "a.json");
  EXPECT_EQ(back.at(0, 0), 1);
  EXPECT_EQ(back.at(0, 1), 2);
  EXPECT_EQ(back.at(1, 0), 3);
  EXPECT_EQ(back.at(1, 1), 4);
}

TEST(RasterIo, ZeroRasterBlobIsSixteenZeros) {
  TempDir dir;
  write_raster(Raster(spec(4, 4), 0.0), dir / "z");
  std::ifstream f(dir / "z.f64", std::ios::binary);
  std::vector<char> bytes((std::istreambuf_iterator<char>(f)), {});
  ASSERT_EQ(bytes.size(), 16 * sizeof(double));
  for (char b : bytes) EXPECT_EQ(b, 0);
}

TEST(RasterIo, RoundTripIsBitIdentical) {
  TempDir dir;
  for (unsigned seed = 1; seed <= 5; ++seed) {
    Raster r = random_raster(16, 16, seed);
    r.at(3, 4) = kNaN;
    write_raster(r, dir / "r");
    const Raster back = read_raster(dir / "r");
    ASSERT_EQ(back.spec(), r.spec());
    for (std::size_t k = 0; k < r.size(); ++k) EXPECT_TRUE(bit_equal(back[k], r[k])) << k;
    EXPECT_TRUE(back.is_nodata(back.at(3, 4)));
  }
}

TEST(RasterIo, FiniteNodataSentinelSurvives) {
  TempDir dir;
  Raster r(spec(3, 1), std::vector<double>{0, -9999, 2}, -9999);
  write_raster(r, dir / "s", RasterDtype::F32);
  const Raster back = read_raster(dir / "s");
  EXPECT_EQ(back.nodata(), -9999);
  EXPECT_FALSE(back.valid(0, 1));
  EXPECT_TRUE(back.valid(0, 2));
}

TEST(RasterIo, DimensionMismatch) {
  TempDir dir;
  write_raster(Raster(spec(2, 2), 1.0), dir / "m");
  {
    std::ofstream f(dir / "m.f64", std::ios::binary | std::ios::trunc);
    const double three[3] = {1, 2, 3};
    f.write(reinterpret_cast<const char*>(three), sizeof three);
  }
  EXPECT_THROW(read_raster(dir / "m"), DataError);
}

TEST(RasterIo, MissingFiles) {
  TempDir dir;
  EXPECT_THROW(read_raster(dir / "nothing"), DataError);
  write_raster(Raster(spec(2, 2), 1.0), dir / "b");
  std::filesystem::remove(dir / "b.f64");
  EXPECT_THROW(read_raster(dir / "b"), DataError);
}

TEST(RasterIo, NonFiniteSpecRejected) {
  TempDir dir;
  write_raster(Raster(spec(2, 2), 1.0), dir / "c");
  std::ofstream(dir / "c.json") << R"({"width":2,"height":2,"lon_min":null,"lat_max":1,"cell":1,"dtype":"f64","nodata":"nan"})";
  EXPECT_THROW(read_raster(dir / "c"), DataError);
}

TEST(Regrid, IdentityBothMethods) {
  const Raster r = random_raster(7, 5, 3);
  for (auto m : {RegridMethod::Nearest, RegridMethod::Bilinear}) {
    const Raster out = regrid(r, r.spec(), m);
    for (std::size_t k = 0; k < r.size(); ++k) EXPECT_TRUE(bit_equal(out[k], r[k]));
  }
}

TEST(Regrid, BilinearCenterOfTwoByTwo) {
  const Raster src(spec(2, 2, 0.0, 2.0, 1.0), std::vector<double>{0, 0, 4, 4});
  const GridSpec target{1, 1, 0.0, 2.0, 2.0};  // one pixel centred on the 2x2 block
  EXPECT_DOUBLE_EQ(regrid(src, target, RegridMethod::Bilinear)[0], 2.0);
}

TEST(Regrid, NearestPropagatesNodata) {
  Raster src(spec(2, 2, 0.0, 2.0, 1.0), std::vector<double>{1, 2, 3, 4});
  src.at(0, 0) = kNaN;
  const GridSpec target{1, 1, 0.1, 1.9, 0.5};  // centre at (0.35, 1.65), inside cell (0,0)
  EXPECT_TRUE(std::isnan(regrid(src, target, RegridMethod::Nearest)[0]));
}

TEST(Regrid, BilinearRenormalizesAroundNodata) {
  Raster src(spec(2, 2, 0.0, 2.0, 1.0), std::vector<double>{kNaN, 2, 4, 6});
  const GridSpec target{1, 1, 0.0, 2.0, 2.0};
  EXPECT_DOUBLE_EQ(regrid(src, target, RegridMethod::Bilinear)[0], 4.0);
}

TEST(Regrid, OutsideExtentIsNodataAndNoOverlapThrows) {
  const Raster src(spec(2, 2, 0.0, 2.0, 1.0), 5.0);
  const Raster out = regrid(src, GridSpec{4, 1, 1.0, 2.0, 1.0}, RegridMethod::Bilinear);
  EXPECT_EQ(out[0], 5.0);
  EXPECT_TRUE(std::isnan(out[1]));
  EXPECT_THROW(regrid(src, GridSpec{1, 1, 50.0, 2.0, 1.0}, RegridMethod::Nearest), DataError);
  EXPECT_THROW(regrid(src, GridSpec{0, 1, 0.0, 2.0, 1.0}, RegridMethod::Nearest), DataError);
}

TEST(Regrid, BilinearStaysWithinNeighbourRange) {
  const Raster src = random_raster(9, 9, 11);
  const GridSpec target{31, 29, 0.13, 9.9, 0.27};
  const Raster out = regrid(src, target, RegridMethod::Bilinear);
  const auto& s = src.spec();
  for (std::size_t i = 0; i < target.height; ++i)
    for (std::size_t j = 0; j < target.width; ++j) {
      const double v = out.at(i, j);
      if (std::isnan(v)) continue;
      const double row = (s.lat_max - target.center_lat(i)) / s.cell - 0.5;
      const double col = (target.center_lon(j) - s.lon_min) / s.cell - 0.5;
      double lo = 1e300, hi = -1e300;
      for (double r : {std::floor(row), std::floor(row) + 1})
        for (double c : {std::floor(col), std::floor(col) + 1}) {
          const double rr = std::clamp(r, 0.0, 8.0), cc = std::clamp(c, 0.0, 8.0);
          const double x = src.at(static_cast<std::size_t>(rr), static_cast<std::size_t>(cc));
          lo = std::min(lo, x);
          hi = std::max(hi, x);
        }
      EXPECT_GE(v, lo - 1e-9);
      EXPECT_LE(v, hi + 1e-9);
    }
}

TEST(ClassMask, NearestKeepsLabels) {
  Raster mask(spec(8, 8, 0.0, 8.0, 1.0));
  for (std::size_t k = 0; k < mask.size(); ++k) mask[k] = static_cast<double>(k % 4);
  mask[5] = kNaN;
  const Raster out = regrid_mask(mask, GridSpec{13, 11, 0.2, 7.7, 0.6});
  std::set<double> seen;
  for (double v : out.values())
    if (!std::isnan(v)) seen.insert(v);
  for (double v : seen) EXPECT_TRUE(v == 0 || v == 1 || v == 2 || v == 3) << v;
  EXPECT_NO_THROW(validate_class_mask(out));
}

TEST(ClassMask, RejectsNonClassValues) {
  Raster mask(spec(2, 1), std::vector<double>{1, 2.5});
  EXPECT_THROW(validate_class_mask(mask), DataError);
  mask[1] = 4;
  EXPECT_THROW(validate_class_mask(mask), DataError);
}

TEST(SeriesStack, RoundTripAndPixelSeries) {
  TempDir dir;
  SeriesStack s;
  s.spec = spec(3, 2);
  s.start_year = 1990;
  s.years = 1;
  s.variable = "tmean";
  s.values.resize(s.days() * 6);
  for (std::size_t k = 0; k < s.values.size(); ++k) s.values[k] = static_cast<double>(k % 1000) * 0.5;
  write_series_stack(s, dir / "tmean", RasterDtype::F64);
  const SeriesStack back = read_series_stack(dir / "tmean");
  EXPECT_EQ(back.start_year, 1990);
  EXPECT_EQ(back.variable, "tmean");
  EXPECT_EQ(back.values, s.values);
  std::vector<double> px;
  back.pixel_series(1, 2, px);
  ASSERT_EQ(px.size(), 365u);
  for (std::size_t d = 0; d < 365; ++d) EXPECT_EQ(px[d], s.values[d * 6 + 5]);
}
