#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "arable/grid.hpp"

namespace arable {

inline constexpr std::size_t kFeatureCount = 162;
inline constexpr std::size_t kSeqLen = 12;
inline constexpr std::size_t kSeqChannels = 52;
inline constexpr int kNoLabel = -1;

// The canonical 162 columns: 121 climate features, then 41 terrain features.
const std::vector<std::string>& feature_names();

// N x C design matrix with pixel coordinates and (optionally) labels.
struct FeatureTable {
  std::vector<std::string> columns;
  std::vector<double> data;  // row-major N x C
  std::vector<int> labels;   // kNoLabel for inference rows
  std::vector<std::uint32_t> pix_i, pix_j;

  std::size_t rows() const { return pix_i.size(); }
  std::size_t cols() const { return columns.size(); }
  std::span<const double> row(std::size_t r) const { return {data.data() + r * cols(), cols()}; }
  std::span<double> row(std::size_t r) { return {data.data() + r * cols(), cols()}; }
  bool labeled() const;
  std::size_t column_index(const std::string& name) const;

  // Rows `idx` in the given order.
  FeatureTable select(std::span<const std::size_t> idx) const;
  void validate() const;
};

std::array<std::size_t, 4> class_counts(std::span<const int> labels);

// One row per pixel where every canonical feature (and the mask, when given)
// is valid. Row order is raster order.
FeatureTable assemble(const RasterSet& features, const Raster* mask);

// Class-0 rows are reduced, without replacement, to the largest count among
// classes 1..3. Returned indices are sorted.
std::vector<std::size_t> undersample_indices(std::span<const int> labels, std::uint64_t seed);
FeatureTable undersample(const FeatureTable& t, std::uint64_t seed);

struct SplitIndices {
  std::vector<std::size_t> train, test;
};

// Stratified shuffle split. Each present class contributes round(frac * n_c)
// rows to train; train is shuffled, test keeps table order.
SplitIndices split_indices(std::span<const int> labels, double train_frac, std::uint64_t seed);
std::pair<FeatureTable, FeatureTable> split(const FeatureTable& t, double train_frac,
                                            std::uint64_t seed);

struct ScalerParams {
  std::vector<std::string> columns;
  std::vector<double> min, max;
};

ScalerParams fit_scaler(const FeatureTable& train);
// (x - min) / (max - min); constant columns (range within 1e-12 of the
// magnitude, i.e. rounding noise) map to 0; no clipping.
FeatureTable apply_scaler(const FeatureTable& t, const ScalerParams& s);

// N x 12 x 52 view of a canonical table. Timestep t holds month t+1 of the
// ten monthly variables followed by 12m_SPI and the 41 terrain features.
struct SequenceBatch {
  std::size_t n = 0;
  std::vector<double> data;  // row-major N x (12 * 52), timestep-major

  double at(std::size_t sample, std::size_t t, std::size_t ch) const {
    return data[sample * kSeqLen * kSeqChannels + t * kSeqChannels + ch];
  }
};

// Channel names in sequence order (10 monthly variables, 12m_SPI, terrain).
const std::vector<std::string>& sequence_channel_names();
// Column of the canonical table feeding (timestep, channel).
std::size_t sequence_source_column(std::size_t t, std::size_t ch);

SequenceBatch to_sequences(const FeatureTable& t);
// Inverse of to_sequences: reconstructs the canonical columns.
std::vector<double> from_sequences(const SequenceBatch& s);

// CSV with header `<columns...>,label,pix_i,pix_j` plus a JSON manifest
// `<path>.json` holding {columns, seed, counts}.
void write_table_csv(const FeatureTable& t, const std::filesystem::path& path,
                     std::uint64_t seed);
FeatureTable read_table_csv(const std::filesystem::path& path);

void write_scaler_json(const ScalerParams& s, const std::filesystem::path& path);
ScalerParams read_scaler_json(const std::filesystem::path& path);

}  // namespace arable
