#include "arable/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include "arable/error.hpp"
#include "arable/parallel.hpp"

namespace arable {

void ScenarioKey::validate() const {
  if (climate_model.empty() || ssp.empty() || period.empty())
    throw ConfigError("scenario key needs climate_model, ssp and period");
}

bool ProbabilityMaps::valid(std::size_t k) const {
  for (const auto& r : p)
    if (r.is_nodata(r[k])) return false;
  return true;
}

void ProbabilityMaps::validate(double tol) const {
  for (const auto& r : p) {
    if (!(r.spec() == spec())) throw DataError("probability maps do not share a grid");
    if (r.size() != spec().size()) throw DataError("probability raster has the wrong size");
  }
  for (std::size_t k = 0; k < spec().size(); ++k) {
    std::size_t missing = 0;
    double sum = 0.0;
    for (const auto& r : p) {
      if (r.is_nodata(r[k])) {
        ++missing;
        continue;
      }
      if (r[k] < -tol || r[k] > 1.0 + tol) throw DataError("probability outside [0, 1]");
      sum += r[k];
    }
    if (missing != 0 && missing != kNumClasses)
      throw DataError("probability maps disagree on nodata pixels");
    if (missing == 0 && std::abs(sum - 1.0) > tol)
      throw DataError("class probabilities do not sum to 1 at pixel " + std::to_string(k));
  }
}

ProbabilityMaps probability_maps(const GridSpec& grid, std::span<const std::uint32_t> pix_i,
                                 std::span<const std::uint32_t> pix_j, const Matrix& probs,
                                 std::string provenance) {
  grid.validate();
  if (pix_i.size() != pix_j.size() || static_cast<std::size_t>(probs.rows()) != pix_i.size() ||
      probs.cols() != kNumClasses)
    throw DataError("probability_maps: pixel list and probability matrix disagree");
  ProbabilityMaps out;
  out.provenance = std::move(provenance);
  for (auto& r : out.p) r = Raster(grid, kNaN);
  for (std::size_t n = 0; n < pix_i.size(); ++n) {
    if (pix_i[n] >= grid.height || pix_j[n] >= grid.width)
      throw DataError("probability_maps: pixel outside the grid");
    for (std::size_t c = 0; c < kNumClasses; ++c)
      out.p[c].at(pix_i[n], pix_j[n]) =
          probs(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(c));
  }
  return out;
}

ProbabilityMaps one_hot(const Raster& mask) {
  validate_class_mask(mask);
  ProbabilityMaps out;
  out.provenance = "mask";
  for (auto& r : out.p) r = Raster(mask.spec(), kNaN);
  for (std::size_t k = 0; k < mask.size(); ++k) {
    if (mask.is_nodata(mask[k])) continue;
    const auto cls = static_cast<std::size_t>(mask[k]);
    for (std::size_t c = 0; c < kNumClasses; ++c) out.p[c][k] = c == cls ? 1.0 : 0.0;
  }
  return out;
}

ProbabilityMaps ensemble_average(std::span<const ScenarioMaps> maps) {
  if (maps.empty()) throw DataError("ensemble_average needs at least one map");
  const auto& first = maps.front();
  for (const auto& m : maps) {
    if (!(m.maps.spec() == first.maps.spec()))
      throw DataError("ensemble_average: probability maps are on different grids");
    if (m.key.ssp != first.key.ssp || m.key.period != first.key.period)
      throw DataError("ensemble_average: inputs mix SSPs or periods (" + m.key.label() + " vs " +
                      first.key.label() + ")");
  }
  std::vector<const ScenarioMaps*> order;
  for (const auto& m : maps) order.push_back(&m);
  std::stable_sort(order.begin(), order.end(), [](const ScenarioMaps* a, const ScenarioMaps* b) {
    return a->key < b->key;
  });

  ProbabilityMaps out;
  out.provenance = "ensemble";
  const GridSpec& grid = first.maps.spec();
  const auto n = static_cast<double>(maps.size());
  for (std::size_t c = 0; c < kNumClasses; ++c) {
    Raster r(grid, kNaN);
    parallel_range(grid.size(), 4096, [&](std::size_t begin, std::size_t end) {
      for (std::size_t k = begin; k < end; ++k) {
        double sum = 0.0;
        bool ok = true;
        for (const ScenarioMaps* m : order) {
          const Raster& src = m->maps.p[c];
          if (src.is_nodata(src[k])) {
            ok = false;
            break;
          }
          sum += src[k];
        }
        r[k] = ok ? sum / n : kNaN;
      }
    });
    out.p[c] = std::move(r);
  }
  return out;
}

DeltaMap delta_heatmap(const ProbabilityMaps& p, const Raster& mask) {
  validate_class_mask(mask);
  if (!(mask.spec() == p.spec())) throw DataError("delta_heatmap: mask and maps are on different grids");
  DeltaMap out;
  for (std::size_t c = 0; c < kNumClasses; ++c) {
    Raster r(p.spec(), kNaN);
    const Raster& src = p.p[c];
    for (std::size_t k = 0; k < r.size(); ++k) {
      if (src.is_nodata(src[k]) || mask.is_nodata(mask[k])) continue;
      const double gfsad = static_cast<std::size_t>(mask[k]) == c ? 1.0 : 0.0;
      r[k] = std::clamp(src[k], 0.0, 1.0) - gfsad;
    }
    out.delta[c] = std::move(r);
  }
  return out;
}

Raster argmax_classes(const ProbabilityMaps& p) {
  Raster out(p.spec(), kNaN);
  for (std::size_t k = 0; k < out.size(); ++k) {
    if (!p.valid(k)) continue;
    std::size_t best = 0;
    for (std::size_t c = 1; c < kNumClasses; ++c)
      if (p.p[c][k] > p.p[best][k]) best = c;
    out[k] = static_cast<double>(best);
  }
  return out;
}

std::array<std::uint64_t, kNumClasses> class_counts(const Raster& mask) {
  validate_class_mask(mask);
  std::array<std::uint64_t, kNumClasses> counts{};
  for (double v : mask.values())
    if (!mask.is_nodata(v)) ++counts[static_cast<std::size_t>(v)];
  return counts;
}

std::array<std::uint64_t, kNumClasses> class_counts(const ProbabilityMaps& p) {
  return class_counts(argmax_classes(p));
}

std::vector<TrajectoryRow> trajectory_report(const Raster& baseline,
                                             std::span<const ScenarioMaps> projections) {
  const auto base = class_counts(baseline);
  std::map<std::string, std::map<std::string, const ScenarioMaps*>> by_ssp;
  for (const auto& m : projections) {
    auto& slot = by_ssp[m.key.ssp][m.key.period];
    if (slot) throw DataError("trajectory_report: duplicate projection for " + m.key.ssp + " " + m.key.period);
    slot = &m;
  }
  std::vector<TrajectoryRow> rows;
  for (const auto& [ssp, periods] : by_ssp) {
    for (std::size_t c = 0; c < kNumClasses; ++c)
      rows.push_back({ssp, kBaselinePeriod, static_cast<int>(c), base[c]});
    for (const auto& [period, m] : periods) {
      const auto counts = class_counts(m->maps);
      for (std::size_t c = 0; c < kNumClasses; ++c)
        rows.push_back({ssp, period, static_cast<int>(c), counts[c]});
    }
  }
  return rows;
}

void write_trajectory_csv(std::span<const TrajectoryRow> rows, const std::filesystem::path& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw DataError("cannot write " + path.string());
  f << "ssp,period,class,count\n";
  for (const auto& r : rows) f << r.ssp << ',' << r.period << ',' << r.cls << ',' << r.count << '\n';
}

std::vector<TrajectoryRow> read_trajectory_csv(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw DataError("cannot read " + path.string());
  std::string line;
  std::getline(f, line);
  if (line != "ssp,period,class,count") throw DataError(path.string() + ": unexpected header");
  std::vector<TrajectoryRow> rows;
  while (std::getline(f, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string ssp, period, cls, count;
    if (!std::getline(ss, ssp, ',') || !std::getline(ss, period, ',') ||
        !std::getline(ss, cls, ',') || !std::getline(ss, count))
      throw DataError(path.string() + ": malformed row '" + line + "'");
    rows.push_back({ssp, period, std::stoi(cls), std::stoull(count)});
  }
  return rows;
}

namespace {
std::filesystem::path class_path(const std::filesystem::path& dir, const std::string& prefix,
                                 std::size_t c) {
  return dir / (prefix + "_class" + std::to_string(c));
}
}  // namespace

void write_probability_maps(const ProbabilityMaps& p, const std::filesystem::path& dir,
                            const std::string& prefix) {
  std::filesystem::create_directories(dir);
  for (std::size_t c = 0; c < kNumClasses; ++c)
    write_raster(p.p[c], class_path(dir, prefix, c), RasterDtype::F64);
}

ProbabilityMaps read_probability_maps(const std::filesystem::path& dir, const std::string& prefix) {
  ProbabilityMaps p;
  p.provenance = prefix;
  for (std::size_t c = 0; c < kNumClasses; ++c) p.p[c] = read_raster(class_path(dir, prefix, c));
  p.validate();
  return p;
}

void write_delta_map(const DeltaMap& d, const std::filesystem::path& dir, const std::string& prefix) {
  std::filesystem::create_directories(dir);
  for (std::size_t c = 0; c < kNumClasses; ++c)
    write_raster(d.delta[c], class_path(dir, prefix, c), RasterDtype::F64);
}

DeltaMap read_delta_map(const std::filesystem::path& dir, const std::string& prefix) {
  DeltaMap d;
  for (std::size_t c = 0; c < kNumClasses; ++c) d.delta[c] = read_raster(class_path(dir, prefix, c));
  return d;
}

}  // namespace arable
