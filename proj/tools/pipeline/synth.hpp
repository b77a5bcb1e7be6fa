#pragma once

#include <array>
#include <cstdint>
#include <filesystem>

#include "arable/climate_features.hpp"
#include "arable/grid.hpp"
#include "pipeline/config.hpp"
#include "pipeline/rule.hpp"

namespace arable::pipeline {

// Smooth latent fields on the climate grid that parameterize each pixel's
// daily weather generator.
struct ClimateFields {
  GridSpec spec;
  std::vector<double> t_summer, t_winter, noise_sd, diurnal_range, dew_depression, wet_prob,
      annual_precip;
};

ClimateFields make_climate_fields(const SynthConfig& cfg, std::uint64_t seed);
Raster make_dem(const SynthConfig& cfg, std::uint64_t seed);

struct Drift {
  double warming = 0;  // degC before north amplification
  double precip = 0;   // relative change before the north-south sign
};

// Daily stacks for one period. `stream` selects the noise stream, so periods
// that share it differ only by their drift.
ClimateStacks generate_climate(const ClimateFields& fields, const SynthConfig& cfg, int start_year,
                               int years, const Drift& drift, std::uint64_t seed,
                               std::uint64_t stream);

struct SynthSummary {
  std::array<std::uint64_t, 4> counts{};
  LabelRule rule;
};

// Writes the planted world under `dir`: inputs.json, dem, mask, historical
// and scenario climate directories, and MANIFEST.json.
SynthSummary synthesize(const SynthConfig& cfg, std::uint64_t seed, const std::filesystem::path& dir);

}  // namespace arable::pipeline
