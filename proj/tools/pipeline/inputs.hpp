#pragma once

#include <filesystem>
#include <optional>
#include <vector>

#include "arable/climate_features.hpp"
#include "arable/grid.hpp"
#include "arable/scenario.hpp"
#include "arable/terrain_features.hpp"
#include "pipeline/rule.hpp"

namespace arable::pipeline {

struct ClimateSource {
  ScenarioKey key;
  std::filesystem::path dir;
};

// inputs.json: where the DEM, class mask and daily climate stacks live.
// Relative paths resolve against the manifest's directory. Percentiles and
// the SPI fit come from `baseline` when given, otherwise from `historical`.
struct InputsManifest {
  std::filesystem::path dem, mask, historical;
  std::optional<std::filesystem::path> baseline;
  std::vector<ClimateSource> scenarios;
  std::optional<LabelRule> rule;  // present for planted worlds
};

InputsManifest read_inputs(const std::filesystem::path& path);
void write_inputs(const InputsManifest& m, const std::filesystem::path& path);

// One series stack per variable, named after the variable, in `dir`.
ClimateStacks read_climate_dir(const std::filesystem::path& dir);
void write_climate_dir(const ClimateStacks& s, const std::filesystem::path& dir);

// The 162 features on the analysis grid: climate features computed on the
// climate grid and regridded, plus the terrain stack of the analysis DEM.
RasterSet analysis_features(const ClimateStacks& historical, const ClimateStacks& target,
                            const GridSpec& grid, RegridMethod method, const RasterSet& terrain);

// File-system safe name for a scenario, e.g. "PM-A_SSP5-8.5_2040-2050".
std::string scenario_slug(const ScenarioKey& k);

}  // namespace arable::pipeline
