#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "arable/grid.hpp"
#include "arable/model.hpp"

namespace arable {

// Input columns that are permuted together and reported under one name.
struct FeatureGroup {
  std::string name;
  std::vector<std::size_t> columns;
};

// The 52 sequence channels over the 12 x 52 LSTM input; monthly channels
// span all 12 timesteps, static channels too (they are repeated).
std::vector<FeatureGroup> sequence_channel_groups();
// Flat 162-column input grouped the same way: one group per monthly variable
// (its 12 month columns), plus 12m_SPI and each terrain feature.
std::vector<FeatureGroup> flat_variable_groups();
// One group per flat column (the per-month view).
std::vector<FeatureGroup> flat_column_groups();
// One group per canonical feature name (the per-month view) for a model kind.
// For the LSTM a monthly feature is one (timestep, channel) coordinate and a
// static feature spans all 12 timesteps of its channel.
std::vector<FeatureGroup> named_feature_groups(ModelKind kind);
// Named-feature groups for a model kind: sequence channels for the LSTM,
// variable groups for flat models.
std::vector<FeatureGroup> variable_groups_for(ModelKind kind);

using ScoreFn = std::function<double(std::span<const int> y_true, std::span<const int> y_pred)>;

struct FeatureImportance {
  std::string name;
  double importance = 0;       // I_j
  std::vector<double> scores;  // s_{k,j}, k = 0..K-1
};

struct ImportanceReport {
  double reference = 0;  // s
  int repeats = 0;       // K
  std::vector<FeatureImportance> features;

  // Feature indices by decreasing importance (stable on ties).
  std::vector<std::size_t> ranking() const;
  // I_j recomputed from the stored scores.
  static double importance_of(double reference, std::span<const double> scores);
};

// Each group's columns are permuted across rows with one permutation per
// repetition, applied to every column of the group. The RNG stream is
// consumed group by group, repetition by repetition.
ImportanceReport permutation_importance(const Model& model, const Matrix& x,
                                        std::span<const int> labels,
                                        const std::vector<FeatureGroup>& groups, int repeats,
                                        std::uint64_t seed, const ScoreFn& score = {});

struct AttributionVector {
  std::vector<double> attribution;
  std::vector<double> input, baseline;
  int target_class = 0;
  int steps = 0;
  double f_input = 0, f_baseline = 0;
  double residual = 0;  // |sum(a) - (F(x) - F(x'))|

  double sum() const;
};

// Midpoint Riemann sum of d logit_c / dx along the straight path from x' to x.
AttributionVector integrated_gradients(const Model& model, std::span<const double> x,
                                       std::span<const double> baseline, int cls,
                                       int steps = 256);

struct GeoRect {
  std::string name;
  double lat_north = 0, lon_west = 0, lat_south = 0, lon_east = 0;
  int target_class = 0;

  bool contains(double lat, double lon) const {
    return lat <= lat_north && lat >= lat_south && lon >= lon_west && lon <= lon_east;
  }
};

// Regions of significant class change studied for the real-world maps.
const std::vector<GeoRect>& reference_regions();

struct RegionAttribution {
  GeoRect region;
  std::size_t pixels = 0;
  int steps = 0;
  std::vector<double> mean_attribution;  // per input coordinate
  std::vector<std::pair<std::string, double>> features;  // per group, group order
  double max_residual = 0;

  // Features sorted by decreasing |attribution|.
  std::vector<std::pair<std::string, double>> top(std::size_t k) const;
};

// Rows of a model input matrix tied to their pixel coordinates.
struct PixelRows {
  const Matrix* x = nullptr;
  std::span<const std::uint32_t> pix_i, pix_j;
};

// IG per pixel in the rectangle with that pixel's historical row as baseline,
// averaged over pixels and folded to the named groups.
RegionAttribution region_attribution(const Model& model, const GeoRect& region,
                                     const GridSpec& grid, const PixelRows& scenario,
                                     const PixelRows& historical,
                                     const std::vector<FeatureGroup>& groups, int cls,
                                     int steps = 256);

// CSV `feature,importance,rank` (or `feature,attribution,rank`) and JSON.
void write_importance_csv(const ImportanceReport& r, const std::filesystem::path& path);
std::string importance_json(const ImportanceReport& r);
void write_region_csv(const RegionAttribution& r, const std::filesystem::path& path);
std::string region_json(const RegionAttribution& r, std::size_t top_k);

}  // namespace arable
