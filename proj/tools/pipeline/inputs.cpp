#include "pipeline/inputs.hpp"

#include <fstream>

#include "arable/error.hpp"

namespace arable::pipeline {

namespace {

constexpr Variable kVariables[] = {Variable::Tmax,     Variable::Tmin,    Variable::Tmean,
                                   Variable::Precip,   Variable::Dewpoint, Variable::Windmax,
                                   Variable::Swe};

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
  const std::filesystem::path q(p);
  return q.is_absolute() ? q : base / q;
}

}  // namespace

InputsManifest read_inputs(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw DataError("cannot open inputs manifest " + path.string());
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(f);
  } catch (const nlohmann::json::parse_error& e) {
    throw DataError(path.string() + ": " + e.what());
  }
  const auto base = path.parent_path();
  InputsManifest m;
  try {
    m.dem = resolve(base, j.at("dem").get<std::string>());
    m.mask = resolve(base, j.at("mask").get<std::string>());
    m.historical = resolve(base, j.at("historical").get<std::string>());
    if (j.contains("baseline")) m.baseline = resolve(base, j.at("baseline").get<std::string>());
    for (const auto& s : j.at("scenarios")) {
      ClimateSource src{{s.at("climate_model"), s.at("ssp"), s.at("period")},
                        resolve(base, s.at("dir").get<std::string>())};
      src.key.validate();
      m.scenarios.push_back(std::move(src));
    }
  } catch (const nlohmann::json::exception& e) {
    throw DataError(path.string() + ": " + e.what());
  }
  if (j.contains("rule")) m.rule = LabelRule::from_json(j.at("rule"));
  return m;
}

void write_inputs(const InputsManifest& m, const std::filesystem::path& path) {
  const auto base = path.parent_path();
  auto rel = [&](const std::filesystem::path& p) { return p.lexically_relative(base).generic_string(); };
  nlohmann::ordered_json j;
  j["dem"] = rel(m.dem);
  j["mask"] = rel(m.mask);
  j["historical"] = rel(m.historical);
  if (m.baseline) j["baseline"] = rel(*m.baseline);
  j["scenarios"] = nlohmann::ordered_json::array();
  for (const auto& s : m.scenarios)
    j["scenarios"].push_back({{"climate_model", s.key.climate_model},
                              {"ssp", s.key.ssp},
                              {"period", s.key.period},
                              {"dir", rel(s.dir)}});
  if (m.rule) j["rule"] = m.rule->to_json();
  std::ofstream f(path, std::ios::binary);
  if (!f) throw DataError("cannot write " + path.string());
  f << j.dump(2) << "\n";
}

ClimateStacks read_climate_dir(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) throw DataError("climate directory " + dir.string() + " does not exist");
  ClimateStacks s;
  for (auto v : kVariables) {
    s.by_variable(v) = read_series_stack(dir / std::string(variable_name(v)));
    s.by_variable(v).variable = std::string(variable_name(v));
  }
  s.validate();
  return s;
}

void write_climate_dir(const ClimateStacks& s, const std::filesystem::path& dir) {
  s.validate();
  std::filesystem::create_directories(dir);
  for (auto v : kVariables)
    write_series_stack(s.by_variable(v), dir / std::string(variable_name(v)), RasterDtype::F32);
}

RasterSet analysis_features(const ClimateStacks& historical, const ClimateStacks& target,
                            const GridSpec& grid, RegridMethod method, const RasterSet& terrain) {
  RasterSet out = terrain;
  for (auto& [name, r] : climate_feature_rasters(historical, target))
    out.emplace(name, regrid(r, grid, method));
  for (const auto& [name, r] : out)
    if (!(r.spec() == grid)) throw DataError("feature '" + name + "' is not on the analysis grid");
  return out;
}

std::string scenario_slug(const ScenarioKey& k) {
  std::string s = k.climate_model + "_" + k.ssp + "_" + k.period;
  for (char& c : s)
    if (c == '/' || c == ' ' || c == '\\') c = '-';
  return s;
}

}  // namespace arable::pipeline
