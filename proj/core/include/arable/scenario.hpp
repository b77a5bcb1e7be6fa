#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "arable/grid.hpp"
#include "arable/model.hpp"

namespace arable {

struct ScenarioKey {
  std::string climate_model, ssp, period;

  void validate() const;
  std::string label() const { return climate_model + "/" + ssp + "/" + period; }
  auto operator<=>(const ScenarioKey&) const = default;
};

// Per-class probability rasters on one grid. Provenance is a scenario label
// or "ensemble".
struct ProbabilityMaps {
  std::array<Raster, kNumClasses> p;
  std::string provenance;

  const GridSpec& spec() const { return p[0].spec(); }
  bool valid(std::size_t k) const;
  // Checks shared spec, shared nodata pattern, range and row sums.
  void validate(double tol = 1e-6) const;
};

// Scatters N x 4 model probabilities onto the grid; other pixels are nodata.
ProbabilityMaps probability_maps(const GridSpec& grid, std::span<const std::uint32_t> pix_i,
                                 std::span<const std::uint32_t> pix_j, const Matrix& probs,
                                 std::string provenance);

// One-hot maps of a class mask.
ProbabilityMaps one_hot(const Raster& mask);

struct ScenarioMaps {
  ScenarioKey key;
  ProbabilityMaps maps;
};

// Unweighted per-pixel mean over climate models. Inputs are summed in
// climate-model name order, so the result does not depend on input order.
ProbabilityMaps ensemble_average(std::span<const ScenarioMaps> maps);

struct DeltaMap {
  std::array<Raster, kNumClasses> delta;
};

// P^c minus the one-hot class-c raster of the mask.
DeltaMap delta_heatmap(const ProbabilityMaps& p, const Raster& mask);

// Pixel class is argmax_c P^c with ties going to the lowest class index.
Raster argmax_classes(const ProbabilityMaps& p);
std::array<std::uint64_t, kNumClasses> class_counts(const ProbabilityMaps& p);
std::array<std::uint64_t, kNumClasses> class_counts(const Raster& mask);

struct TrajectoryRow {
  std::string ssp, period;
  int cls = 0;
  std::uint64_t count = 0;
};

inline constexpr const char* kBaselinePeriod = "2010";

// Each SSP starts from the baseline mask (period "2010") followed by its
// projections in period order. `projections` are ensemble maps keyed by
// (ssp, period); climate_model is ignored.
std::vector<TrajectoryRow> trajectory_report(const Raster& baseline,
                                             std::span<const ScenarioMaps> projections);
void write_trajectory_csv(std::span<const TrajectoryRow> rows, const std::filesystem::path& path);
std::vector<TrajectoryRow> read_trajectory_csv(const std::filesystem::path& path);

// `<dir>/<prefix>_class<c>` raster pairs.
void write_probability_maps(const ProbabilityMaps& p, const std::filesystem::path& dir,
                            const std::string& prefix);
ProbabilityMaps read_probability_maps(const std::filesystem::path& dir, const std::string& prefix);
void write_delta_map(const DeltaMap& d, const std::filesystem::path& dir, const std::string& prefix);
DeltaMap read_delta_map(const std::filesystem::path& dir, const std::string& prefix);

}  // namespace arable
