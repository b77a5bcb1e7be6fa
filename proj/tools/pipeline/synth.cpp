#include "pipeline/synth.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>

#include <boost/random/gamma_distribution.hpp>
#include <boost/random/normal_distribution.hpp>
#include <boost/random/uniform_01.hpp>
#include <spdlog/spdlog.h>

#include "arable/error.hpp"
#include "arable/parallel.hpp"
#include "arable/random.hpp"
#include "arable/terrain_features.hpp"
#include "pipeline/inputs.hpp"

namespace arable::pipeline {

namespace {

std::uint64_t mix(std::uint64_t a, std::uint64_t b) {
  std::uint64_t z = a ^ (b + 0x9E3779B97F4A7C15ull + (a << 6) + (a >> 2));
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

// Smoothed white noise rescaled to zero mean and unit variance.
std::vector<double> latent_field(const GridSpec& spec, std::uint64_t seed, double sigma_px) {
  Rng rng(seed);
  boost::random::normal_distribution<double> normal;
  Raster r(spec);
  for (auto& v : r.values()) v = normal(rng);
  std::vector<double> out = smooth(r, sigma_px).values();
  double mean = 0.0;
  for (double v : out) mean += v;
  mean /= static_cast<double>(out.size());
  double var = 0.0;
  for (double v : out) var += (v - mean) * (v - mean);
  const double sd = std::sqrt(var / static_cast<double>(out.size()));
  for (double& v : out) v = (v - mean) / (sd > 0.0 ? sd : 1.0);
  return out;
}

GridSpec analysis_grid(const SynthConfig& c) {
  return {c.width, c.height, c.lon_min, c.lat_max, c.cell};
}

GridSpec climate_grid(const SynthConfig& c) {
  return {c.width / c.climate_coarsen, c.height / c.climate_coarsen, c.lon_min, c.lat_max,
          c.cell * static_cast<double>(c.climate_coarsen)};
}

// 1 on the northern edge, 0 on the southern edge.
double northness(const GridSpec& g, std::size_t i) {
  return 1.0 - (static_cast<double>(i) + 0.5) / static_cast<double>(g.height);
}

double f32(double v) { return static_cast<double>(static_cast<float>(v)); }

constexpr int kPeakDay = 196;  // mid July

}  // namespace

ClimateFields make_climate_fields(const SynthConfig& cfg, std::uint64_t seed) {
  ClimateFields f;
  f.spec = climate_grid(cfg);
  const double sigma = std::max(1.0, static_cast<double>(f.spec.width) / 10.0);
  auto field = [&](std::uint64_t id) { return latent_field(f.spec, mix(seed, id), sigma); };
  const auto z1 = field(1), z2 = field(2), z3 = field(3), z4 = field(4), z5 = field(5),
             z6 = field(6), z7 = field(7);
  const std::size_t n = f.spec.size();
  f.t_summer.resize(n);
  f.t_winter.resize(n);
  f.noise_sd.resize(n);
  f.diurnal_range.resize(n);
  f.dew_depression.resize(n);
  f.wet_prob.resize(n);
  f.annual_precip.resize(n);
  for (std::size_t k = 0; k < n; ++k) {
    const double north = northness(f.spec, k / f.spec.width);
    f.t_summer[k] = 20.0 - 9.0 * north + 2.0 * z1[k];
    f.t_winter[k] = -6.0 - 8.0 * north + 2.5 * z2[k];
    f.noise_sd[k] = std::clamp(2.8 + 0.9 * z3[k], 1.2, 5.0);
    f.diurnal_range[k] = 10.0 + 1.5 * z4[k];
    f.dew_depression[k] = std::max(1.0, 5.0 + 1.2 * z5[k]);
    f.wet_prob[k] = std::clamp(0.33 + 0.08 * z6[k], 0.15, 0.6);
    f.annual_precip[k] = std::max(250.0, 650.0 + 160.0 * z7[k]);
  }
  return f;
}

Raster make_dem(const SynthConfig& cfg, std::uint64_t seed) {
  const GridSpec g = analysis_grid(cfg);
  const double w = static_cast<double>(std::min(g.width, g.height));
  const auto broad = latent_field(g, mix(seed, 11), w / 12.0);
  const auto mid = latent_field(g, mix(seed, 12), w / 40.0);
  const auto fine = latent_field(g, mix(seed, 13), 1.0);
  Raster dem(g);
  for (std::size_t k = 0; k < g.size(); ++k)
    dem[k] = f32(std::max(0.0, 250.0 + 180.0 * broad[k] + 70.0 * mid[k] + 20.0 * fine[k]));
  return dem;
}

ClimateStacks generate_climate(const ClimateFields& fields, const SynthConfig& cfg, int start_year,
                               int years, const Drift& drift, std::uint64_t seed,
                               std::uint64_t stream) {
  const GridSpec& g = fields.spec;
  const std::size_t npx = g.size();
  const std::size_t days = static_cast<std::size_t>(years) * kDaysPerYear;
  ClimateStacks s;
  for (auto v : {Variable::Tmax, Variable::Tmin, Variable::Tmean, Variable::Precip,
                 Variable::Dewpoint, Variable::Windmax, Variable::Swe}) {
    SeriesStack& st = s.by_variable(v);
    st.spec = g;
    st.start_year = start_year;
    st.years = years;
    st.variable = std::string(variable_name(v));
    st.values.assign(days * npx, 0.0);
  }

  parallel_range(npx, 16, [&](std::size_t begin, std::size_t end) {
    for (std::size_t p = begin; p < end; ++p) {
      Rng rng(mix(mix(seed, stream), p));
      boost::random::normal_distribution<double> normal;
      boost::random::uniform_01<double> unif;
      const double north = northness(g, p / g.width);
      const double d_t = drift.warming * (1.0 + cfg.north_amplification * (2.0 * north - 1.0));
      const double p_mult = std::max(0.2, 1.0 + drift.precip * (2.0 * north - 1.0));
      const double ts = fields.t_summer[p], tw = fields.t_winter[p];
      const double wet = fields.wet_prob[p];
      const double shape = 0.7;
      const double mean_wet = fields.annual_precip[p] * p_mult / (kDaysPerYear * wet);
      boost::random::gamma_distribution<double> amount(shape, mean_wet / shape);
      double swe = 0.0;
      for (std::size_t d = 0; d < days; ++d) {
        const double season =
            std::cos(2.0 * std::numbers::pi * static_cast<double>(static_cast<int>(d % kDaysPerYear) - kPeakDay) /
                     kDaysPerYear);
        const double clim = 0.5 * (ts + tw) + 0.5 * (ts - tw) * season + d_t;
        const double tmean = clim + fields.noise_sd[p] * normal(rng);
        const double tmax = tmean + 0.5 * fields.diurnal_range[p] + 0.8 * normal(rng);
        const double tmin = tmean - 0.5 * fields.diurnal_range[p] + 0.8 * normal(rng);
        const double dew = tmean - std::max(0.5, fields.dew_depression[p] + 1.5 * normal(rng));
        const bool is_wet = unif(rng) < wet * (1.0 + 0.25 * season);
        const double rain = is_wet ? amount(rng) : 0.0;
        const double wind = std::max(0.0, 9.0 + 2.5 * normal(rng));
        if (tmean < 0.0)
          swe += rain;
        else
          swe = std::max(0.0, swe - 3.0 * tmean);

        const std::size_t k = d * npx + p;
        s.tmax.values[k] = f32(tmax);
        s.tmin.values[k] = f32(tmin);
        s.tmean.values[k] = f32(tmean);
        s.precip.values[k] = f32(rain);
        s.dewpoint.values[k] = f32(dew);
        s.windmax.values[k] = f32(wind);
        s.swe.values[k] = f32(swe);
      }
    }
  });
  return s;
}

SynthSummary synthesize(const SynthConfig& cfg, std::uint64_t seed, const std::filesystem::path& dir) {
  cfg.validate();
  std::filesystem::create_directories(dir / "climate");
  const GridSpec grid = analysis_grid(cfg);
  const ClimateFields fields = make_climate_fields(cfg, seed);
  const Raster dem = make_dem(cfg, seed);

  InputsManifest inputs;
  inputs.dem = dir / "dem";
  inputs.mask = dir / "mask";
  inputs.historical = dir / "climate" / "historical";
  inputs.baseline = dir / "climate" / "baseline";
  write_raster(dem, inputs.dem, RasterDtype::F32);

  spdlog::info("synth: climate {}x{} px, {} baseline and {} historical years", fields.spec.width,
               fields.spec.height, cfg.baseline_years, cfg.years);
  SynthSummary summary;
  {
    const ClimateStacks base = generate_climate(fields, cfg, cfg.start_year - cfg.baseline_years,
                                                cfg.baseline_years, {}, seed, 0);
    write_climate_dir(base, *inputs.baseline);
    const ClimateStacks hist = generate_climate(fields, cfg, cfg.start_year, cfg.years, {}, seed, 1);
    write_climate_dir(hist, inputs.historical);
    const RasterSet features =
        analysis_features(base, hist, grid, RegridMethod::Bilinear, terrain_feature_stack(dem));
    std::vector<RuleInputs> px;
    for (std::size_t k = 0; k < grid.size(); ++k) {
      bool ok = true;
      for (const auto& [name, r] : features) ok = ok && !r.is_nodata(r[k]);
      if (ok) px.push_back(rule_inputs(features, k));
    }
    summary.rule = fit_label_rule(px, cfg.class_fractions);
    const Raster mask = apply_rule(summary.rule, features);
    write_raster(mask, inputs.mask, RasterDtype::F32);
    summary.counts = class_counts(mask);
  }
  inputs.rule = summary.rule;

  nlohmann::ordered_json drifts = nlohmann::ordered_json::array();
  for (std::size_t pi = 0; pi < cfg.periods.size(); ++pi) {
    const auto& period = cfg.periods[pi];
    for (std::size_t mi = 0; mi < cfg.climate_models.size(); ++mi) {
      const auto& model = cfg.climate_models[mi];
      for (const auto& ssp : cfg.ssps) {
        const ScenarioKey key{model.name, ssp.name, period.name};
        const Drift drift{ssp.warming * period.fraction * model.factor,
                          ssp.precip * period.fraction * model.factor};
        spdlog::info("synth: {} (warming {:.2f} degC, precip {:+.1f}%)", key.label(), drift.warming,
                     100.0 * drift.precip);
        const ClimateStacks stacks =
            generate_climate(fields, cfg, period.start_year, cfg.future_years, drift, seed,
                             2 + 100 * pi + mi);
        const auto out = dir / "climate" / scenario_slug(key);
        write_climate_dir(stacks, out);
        inputs.scenarios.push_back({key, out});
        drifts.push_back({{"climate_model", key.climate_model},
                          {"ssp", key.ssp},
                          {"period", key.period},
                          {"warming_degC", drift.warming},
                          {"warming_north_degC", drift.warming * (1.0 + cfg.north_amplification)},
                          {"warming_south_degC", drift.warming * (1.0 - cfg.north_amplification)},
                          {"precip_change_north", drift.precip},
                          {"precip_change_south", -drift.precip}});
      }
    }
  }
  write_inputs(inputs, dir / "inputs.json");

  nlohmann::ordered_json m;
  m["seed"] = seed;
  m["analysis_grid"] = {{"width", grid.width},     {"height", grid.height},
                        {"lon_min", grid.lon_min}, {"lat_max", grid.lat_max},
                        {"cell", grid.cell}};
  m["climate_grid"] = {{"width", fields.spec.width},     {"height", fields.spec.height},
                       {"lon_min", fields.spec.lon_min}, {"lat_max", fields.spec.lat_max},
                       {"cell", fields.spec.cell}};
  m["labeling_rule"] = {
      {"description",
       "class 0 if T < t_cold or DEM_1km > e_high or S > s_unstable; otherwise "
       "M = (P - p_mean)/p_sd - (T - t_mean)/t_sd gives class 1 if M < m1, 2 if M < m2, else 3"},
      {"T", "mean(t2m_06, t2m_07, t2m_08)"},
      {"P", "sum(tp_01..tp_12)"},
      {"S", "sum(monTstep6_01..monTstep6_12)"},
      {"features", "historical features against the baseline period, bilinear regrid, default terrain scales"},
      {"thresholds", summary.rule.to_json()}};
  m["noise_feature"] = "sfcWindmax (daily wind is i.i.d. with no spatial structure)";
  m["class_fractions_target"] = cfg.class_fractions;
  m["class_counts"] = summary.counts;
  m["drifts"] = drifts;
  std::ofstream f(dir / "MANIFEST.json", std::ios::binary);
  if (!f) throw DataError("cannot write MANIFEST.json");
  f << m.dump(2) << "\n";
  return summary;
}

}  // namespace arable::pipeline
