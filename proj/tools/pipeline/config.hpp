#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "arable/attribution.hpp"
#include "arable/model.hpp"
#include "json.hpp"

namespace arable::pipeline {

using Json = nlohmann::json;

struct PseudoModel {
  std::string name;
  double factor = 1.0;  // scales every drift of this climate model
};

struct SspDrift {
  std::string name;
  double warming = 0.0;  // degC at the end of the horizon, before amplification
  double precip = 0.0;   // relative precipitation change, wetter north, drier south
};

struct PeriodSpec {
  std::string name;
  int start_year = 0;
  double fraction = 1.0;  // share of the full drift reached in this period
};

// Planted synthetic world: analysis grid, coarser climate grid, generators
// and the class proportions the labeling rule is tuned to.
struct SynthConfig {
  std::size_t width = 128, height = 128;
  double lon_min = 30.0, lat_max = 60.0, cell = 0.05;
  std::size_t climate_coarsen = 8;
  int start_year = 2000;
  int baseline_years = 20;  // reference period just before start_year
  int years = 10;
  int future_years = 10;
  std::array<double, 4> class_fractions = {0.40, 0.15, 0.20, 0.25};
  double north_amplification = 0.6;
  std::vector<PseudoModel> climate_models = {{"PM-A", 0.9}, {"PM-B", 1.1}};
  std::vector<SspDrift> ssps = {{"SSP1-2.6", 1.5, 0.03}, {"SSP5-8.5", 4.0, 0.08}};
  std::vector<PeriodSpec> periods = {{"2020-2030", 2020, 0.45}, {"2040-2050", 2040, 1.0}};

  void validate() const;
};

struct FeaturesConfig {
  std::string inputs;  // inputs.json; empty means the synth stage output
  std::string regrid = "bilinear";
  double sun_altitude = 45.0;

  void validate() const;
};

struct TrainSection {
  ModelSpec model;
  TrainConfig train;
  double train_fraction = 0.75;
  double val_fraction = 0.15;
  bool val_from_test = false;  // validation drawn from the test split
  bool undersample = true;

  void validate() const;
};

struct AttributeConfig {
  int repeats = 10;
  int per_month_repeats = 3;  // per-feature view, 0 disables it
  int steps = 256;
  std::size_t max_rows = 1000;  // rows used for permutation importance, 0 = all
  std::size_t top_k = 10;
  std::string scenario;      // "<model>/<ssp>/<period>", empty = last scenario
  std::vector<GeoRect> regions;  // empty = north and south bands of the grid
  double band_fraction = 0.1;

  void validate() const;
};

struct ProjectConfig {
  double band_fraction = 0.25;  // north/south bands summarized in the report

  void validate() const;
};

struct ReportConfig {
  int scale = 3;

  void validate() const;
};

struct RunConfig {
  std::uint64_t seed = 42;
  std::size_t threads = 0;
  std::filesystem::path out = "run";
  SynthConfig synth;
  FeaturesConfig features;
  TrainSection train;
  AttributeConfig attribute;
  ProjectConfig project;
  ReportConfig report;

  void validate() const;
};

// Missing keys keep their defaults; unknown keys are rejected.
RunConfig parse_config(const Json& j);
RunConfig load_config(const std::filesystem::path& path);
Json to_json(const RunConfig& c);

// Canonical JSON of the sections that determine one stage's artifacts.
Json stage_inputs(const RunConfig& c, const std::string& stage);

}  // namespace arable::pipeline
