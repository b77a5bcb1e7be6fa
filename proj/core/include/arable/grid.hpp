#pragma once

#include <cmath>
#include <cstddef>
#include <filesystem>
#include <limits>
#include <map>
#include <string>
#include <vector>

namespace arable {

inline constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// Plate carrée grid: square cells in degrees, row 0 is the northernmost row.
struct GridSpec {
  std::size_t width = 0;
  std::size_t height = 0;
  double lon_min = 0.0;
  double lat_max = 0.0;
  double cell = 1.0;

  std::size_t size() const { return width * height; }
  double lon_max() const { return lon_min + static_cast<double>(width) * cell; }
  double lat_min() const { return lat_max - static_cast<double>(height) * cell; }
  double center_lon(std::size_t j) const { return lon_min + (static_cast<double>(j) + 0.5) * cell; }
  double center_lat(std::size_t i) const { return lat_max - (static_cast<double>(i) + 0.5) * cell; }

  // Throws DataError when width/height are zero or any field is non-finite.
  void validate() const;

  bool operator==(const GridSpec&) const = default;
};

class Raster {
 public:
  Raster() = default;
  explicit Raster(GridSpec spec, double fill = 0.0, double nodata = kNaN);
  Raster(GridSpec spec, std::vector<double> values, double nodata = kNaN);

  const GridSpec& spec() const { return spec_; }
  std::size_t width() const { return spec_.width; }
  std::size_t height() const { return spec_.height; }
  std::size_t size() const { return values_.size(); }

  double nodata() const { return nodata_; }
  bool is_nodata(double v) const {
    return std::isnan(v) || (!std::isnan(nodata_) && v == nodata_);
  }
  bool valid(std::size_t i, std::size_t j) const { return !is_nodata(at(i, j)); }

  double at(std::size_t i, std::size_t j) const { return values_[i * spec_.width + j]; }
  double& at(std::size_t i, std::size_t j) { return values_[i * spec_.width + j]; }
  double operator[](std::size_t k) const { return values_[k]; }
  double& operator[](std::size_t k) { return values_[k]; }

  const std::vector<double>& values() const { return values_; }
  std::vector<double>& values() { return values_; }

 private:
  GridSpec spec_{};
  std::vector<double> values_;
  double nodata_ = kNaN;
};

// Feature rasters keyed by feature name.
using RasterSet = std::map<std::string, Raster>;

enum class RasterDtype { F32, F64 };
enum class RegridMethod { Nearest, Bilinear };

RegridMethod parse_regrid_method(const std::string& name);

// Raster file pair: `<base>.json` manifest + `<base>.f32|.f64` little-endian
// row-major blob. `path` may name either file or the extensionless base.
Raster read_raster(const std::filesystem::path& path);
void write_raster(const Raster& r, const std::filesystem::path& path,
                  RasterDtype dtype = RasterDtype::F64);

// Samples `src` at every target pixel center. Pixels outside the source
// extent are nodata. Bilinear renormalizes over valid neighbours.
Raster regrid(const Raster& src, const GridSpec& target, RegridMethod method);

// Class masks hold labels {0,1,2,3} (nodata allowed) and always regrid with
// nearest neighbour.
inline constexpr int kNumClasses = 4;
void validate_class_mask(const Raster& mask);
Raster regrid_mask(const Raster& mask, const GridSpec& target);

// Daily per-pixel series stack: blob of days x height x width values.
struct SeriesStack {
  GridSpec spec;
  int start_year = 0;
  int years = 0;
  std::string variable;
  std::vector<double> values;  // day-major

  std::size_t days() const { return static_cast<std::size_t>(years) * 365; }
  // Copies the series of pixel (i, j) into out (length days()).
  void pixel_series(std::size_t i, std::size_t j, std::vector<double>& out) const;
};

SeriesStack read_series_stack(const std::filesystem::path& path);
void write_series_stack(const SeriesStack& s, const std::filesystem::path& path,
                        RasterDtype dtype = RasterDtype::F32);

}  // namespace arable
