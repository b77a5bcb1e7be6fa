#include "arable/grid.hpp"

#include <algorithm>
#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>

#include "arable/error.hpp"
#include "json.hpp"

namespace arable {

using json = nlohmann::json;
namespace fs = std::filesystem;

void GridSpec::validate() const {
  if (width == 0 || height == 0) throw DataError("grid has zero pixels");
  if (!std::isfinite(lon_min) || !std::isfinite(lat_max) || !std::isfinite(cell))
    throw DataError("grid spec has non-finite fields");
  if (!(cell > 0.0)) throw DataError("grid cell size must be positive");
}

Raster::Raster(GridSpec spec, double fill, double nodata)
    : spec_(spec), values_(spec.size(), fill), nodata_(nodata) {
  spec_.validate();
}

Raster::Raster(GridSpec spec, std::vector<double> values, double nodata)
    : spec_(spec), values_(std::move(values)), nodata_(nodata) {
  spec_.validate();
  if (values_.size() != spec_.size())
    throw DataError("raster values length " + std::to_string(values_.size()) +
                    " does not match grid " + std::to_string(spec_.width) + "x" +
                    std::to_string(spec_.height));
}

RegridMethod parse_regrid_method(const std::string& name) {
  if (name == "nearest") return RegridMethod::Nearest;
  if (name == "bilinear") return RegridMethod::Bilinear;
  throw ConfigError("unknown regrid method '" + name + "'");
}

namespace {

fs::path base_of(const fs::path& path) {
  const auto ext = path.extension().string();
  if (ext == ".json" || ext == ".f32" || ext == ".f64") return fs::path(path).replace_extension();
  return path;
}

fs::path with_ext(const fs::path& base, const char* ext) {
  return fs::path(base.string() + ext);
}

json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw DataError("malformed manifest " + path.string() + ": " + e.what());
  }
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out << text;
  if (!out) throw DataError("write failed for " + path.string());
}

template <typename T>
T to_little(T v) {
  if constexpr (std::endian::native == std::endian::little) {
    return v;
  } else {
    unsigned char b[sizeof(T)];
    std::memcpy(b, &v, sizeof(T));
    std::reverse(b, b + sizeof(T));
    std::memcpy(&v, b, sizeof(T));
    return v;
  }
}

std::vector<char> read_bytes(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  return std::vector<char>(std::istreambuf_iterator<char>(in), {});
}

std::vector<double> decode_blob(const std::vector<char>& bytes, RasterDtype dtype,
                                std::size_t expected, const fs::path& path) {
  const std::size_t width = dtype == RasterDtype::F32 ? 4 : 8;
  if (bytes.size() != expected * width)
    throw DataError("dimension mismatch: " + path.string() + " holds " +
                    std::to_string(bytes.size() / width) + " values, manifest expects " +
                    std::to_string(expected));
  std::vector<double> out(expected);
  for (std::size_t k = 0; k < expected; ++k) {
    if (dtype == RasterDtype::F32) {
      float f;
      std::memcpy(&f, bytes.data() + 4 * k, 4);
      out[k] = static_cast<double>(to_little(f));
    } else {
      double d;
      std::memcpy(&d, bytes.data() + 8 * k, 8);
      out[k] = to_little(d);
    }
  }
  return out;
}

void write_blob(const fs::path& path, const std::vector<double>& values, RasterDtype dtype) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::string buf;
  if (dtype == RasterDtype::F32) {
    buf.resize(values.size() * 4);
    for (std::size_t k = 0; k < values.size(); ++k) {
      const float f = to_little(static_cast<float>(values[k]));
      std::memcpy(buf.data() + 4 * k, &f, 4);
    }
  } else {
    buf.resize(values.size() * 8);
    for (std::size_t k = 0; k < values.size(); ++k) {
      const double d = to_little(values[k]);
      std::memcpy(buf.data() + 8 * k, &d, 8);
    }
  }
  write_text(path, buf);
}

GridSpec spec_from_json(const json& m, const fs::path& path) {
  GridSpec s;
  try {
    s.width = m.at("width").get<std::size_t>();
    s.height = m.at("height").get<std::size_t>();
    s.lon_min = m.at("lon_min").get<double>();
    s.lat_max = m.at("lat_max").get<double>();
    s.cell = m.at("cell").get<double>();
  } catch (const json::exception& e) {
    throw DataError("manifest " + path.string() + " lacks grid fields: " + e.what());
  }
  s.validate();
  return s;
}

void spec_to_json(const GridSpec& s, json& m) {
  m["width"] = s.width;
  m["height"] = s.height;
  m["lon_min"] = s.lon_min;
  m["lat_max"] = s.lat_max;
  m["cell"] = s.cell;
}

RasterDtype dtype_from_json(const json& m, const fs::path& path) {
  const std::string d = m.value("dtype", "f64");
  if (d == "f32") return RasterDtype::F32;
  if (d == "f64") return RasterDtype::F64;
  throw DataError("unsupported dtype '" + d + "' in " + path.string());
}

double nodata_from_json(const json& m) {
  if (!m.contains("nodata") || m["nodata"].is_null()) return kNaN;
  if (m["nodata"].is_string()) {
    if (m["nodata"].get<std::string>() == "nan") return kNaN;
    throw DataError("nodata must be a number or \"nan\"");
  }
  return m["nodata"].get<double>();
}

const char* ext_of(RasterDtype d) { return d == RasterDtype::F32 ? ".f32" : ".f64"; }

}  // namespace

Raster read_raster(const fs::path& path) {
  const fs::path base = base_of(path);
  const fs::path manifest = with_ext(base, ".json");
  if (!fs::exists(manifest)) throw DataError("missing raster manifest " + manifest.string());
  const json m = read_json(manifest);
  const GridSpec spec = spec_from_json(m, manifest);
  const RasterDtype dtype = dtype_from_json(m, manifest);
  const fs::path blob = with_ext(base, ext_of(dtype));
  if (!fs::exists(blob)) throw DataError("missing raster blob " + blob.string());
  auto values = decode_blob(read_bytes(blob), dtype, spec.size(), blob);
  return Raster(spec, std::move(values), nodata_from_json(m));
}

void write_raster(const Raster& r, const fs::path& path, RasterDtype dtype) {
  const fs::path base = base_of(path);
  json m;
  spec_to_json(r.spec(), m);
  m["dtype"] = dtype == RasterDtype::F32 ? "f32" : "f64";
  if (std::isnan(r.nodata()))
    m["nodata"] = "nan";
  else
    m["nodata"] = r.nodata();
  write_blob(with_ext(base, ext_of(dtype)), r.values(), dtype);
  write_text(with_ext(base, ".json"), m.dump(2) + "\n");
}

Raster regrid(const Raster& src, const GridSpec& target, RegridMethod method) {
  target.validate();
  if (src.spec() == target) return src;

  const GridSpec& s = src.spec();
  const bool overlap = target.lon_min < s.lon_max() && target.lon_max() > s.lon_min &&
                       target.lat_min() < s.lat_max && target.lat_max > s.lat_min();
  if (!overlap) throw DataError("regrid: target grid does not overlap source extent");

  Raster out(target, kNaN);
  const double h = static_cast<double>(s.height);
  const double w = static_cast<double>(s.width);
  auto snap = [](double v) {
    const double r = std::round(v);
    return std::abs(v - r) < 1e-9 ? r : v;
  };

  for (std::size_t i = 0; i < target.height; ++i) {
    const double lat = target.center_lat(i);
    const double row = snap((s.lat_max - lat) / s.cell - 0.5);
    for (std::size_t j = 0; j < target.width; ++j) {
      const double lon = target.center_lon(j);
      const double col = snap((lon - s.lon_min) / s.cell - 0.5);
      // Center outside the source extent.
      if (row < -0.5 || row >= h - 0.5 || col < -0.5 || col >= w - 0.5) continue;

      if (method == RegridMethod::Nearest) {
        const auto si = static_cast<std::size_t>(std::floor(row + 0.5));
        const auto sj = static_cast<std::size_t>(std::floor(col + 0.5));
        const double v = src.at(si, sj);
        if (!src.is_nodata(v)) out.at(i, j) = v;
        continue;
      }

      const double r0 = std::floor(row);
      const double c0 = std::floor(col);
      const double fr = row - r0;
      const double fc = col - c0;
      double acc = 0.0;
      double wsum = 0.0;
      for (int di = 0; di < 2; ++di) {
        const double wr = di == 0 ? 1.0 - fr : fr;
        if (wr == 0.0) continue;
        const double ri = std::clamp(r0 + di, 0.0, h - 1.0);
        for (int dj = 0; dj < 2; ++dj) {
          const double wc = dj == 0 ? 1.0 - fc : fc;
          if (wc == 0.0) continue;
          const double cj = std::clamp(c0 + dj, 0.0, w - 1.0);
          const double v = src.at(static_cast<std::size_t>(ri), static_cast<std::size_t>(cj));
          if (src.is_nodata(v)) continue;
          acc += wr * wc * v;
          wsum += wr * wc;
        }
      }
      if (wsum > 0.0) out.at(i, j) = acc / wsum;
    }
  }
  return out;
}

void validate_class_mask(const Raster& mask) {
  for (std::size_t k = 0; k < mask.size(); ++k) {
    const double v = mask[k];
    if (mask.is_nodata(v)) continue;
    if (v != 0.0 && v != 1.0 && v != 2.0 && v != 3.0)
      throw DataError("class mask holds non-class value " + std::to_string(v) + " at index " +
                      std::to_string(k));
  }
}

Raster regrid_mask(const Raster& mask, const GridSpec& target) {
  Raster out = regrid(mask, target, RegridMethod::Nearest);
  // Carry the integer sentinel through as NaN so downstream checks are uniform.
  for (auto& v : out.values())
    if (mask.is_nodata(v)) v = kNaN;
  return Raster(out.spec(), std::move(out.values()));
}

void SeriesStack::pixel_series(std::size_t i, std::size_t j, std::vector<double>& out) const {
  const std::size_t n = days();
  const std::size_t plane = spec.size();
  const std::size_t offset = i * spec.width + j;
  out.resize(n);
  for (std::size_t d = 0; d < n; ++d) out[d] = values[d * plane + offset];
}

SeriesStack read_series_stack(const fs::path& path) {
  const fs::path base = base_of(path);
  const fs::path manifest = with_ext(base, ".json");
  if (!fs::exists(manifest)) throw DataError("missing series manifest " + manifest.string());
  const json m = read_json(manifest);
  SeriesStack s;
  s.spec = spec_from_json(m, manifest);
  try {
    s.start_year = m.at("start_year").get<int>();
    s.years = m.at("years").get<int>();
    s.variable = m.at("variable").get<std::string>();
  } catch (const json::exception& e) {
    throw DataError("series manifest " + manifest.string() + " incomplete: " + e.what());
  }
  if (s.years < 1) throw DataError("series must span at least one year");
  const RasterDtype dtype = dtype_from_json(m, manifest);
  const fs::path blob = with_ext(base, ext_of(dtype));
  if (!fs::exists(blob)) throw DataError("missing series blob " + blob.string());
  s.values = decode_blob(read_bytes(blob), dtype, s.days() * s.spec.size(), blob);
  return s;
}

void write_series_stack(const SeriesStack& s, const fs::path& path, RasterDtype dtype) {
  if (s.values.size() != s.days() * s.spec.size())
    throw DataError("series stack length does not match days x pixels");
  const fs::path base = base_of(path);
  json m;
  spec_to_json(s.spec, m);
  m["dtype"] = dtype == RasterDtype::F32 ? "f32" : "f64";
  m["nodata"] = "nan";
  m["start_year"] = s.start_year;
  m["years"] = s.years;
  m["variable"] = s.variable;
  write_blob(with_ext(base, ext_of(dtype)), s.values, dtype);
  write_text(with_ext(base, ".json"), m.dump(2) + "\n");
}

}  // namespace arable
