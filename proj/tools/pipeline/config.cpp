#include "pipeline/config.hpp"

#include <cmath>
#include <fstream>
#include <set>

#include "arable/error.hpp"
#include "arable/terrain_features.hpp"

namespace arable::pipeline {

namespace {

void check_keys(const Json& j, const std::set<std::string>& allowed, const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + " must be a JSON object");
  for (const auto& [key, value] : j.items())
    if (!allowed.count(key)) throw ConfigError("unknown key '" + key + "' in " + where);
}

template <typename T>
void read(const Json& j, const char* key, T& out, const std::string& where) {
  const auto it = j.find(key);
  if (it == j.end()) return;
  try {
    out = it->template get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(where + "." + key + ": " + e.what());
  }
}

Json model_json(const ModelSpec& m) {
  return {{"kind", model_kind_name(m.kind)},
          {"mlp_hidden", m.mlp_hidden},
          {"lstm_hidden", m.lstm_hidden}};
}

GeoRect parse_region(const Json& j) {
  check_keys(j, {"name", "lat_north", "lon_west", "lat_south", "lon_east", "class"},
             "attribute.regions[]");
  GeoRect r;
  read(j, "name", r.name, "region");
  read(j, "lat_north", r.lat_north, "region");
  read(j, "lon_west", r.lon_west, "region");
  read(j, "lat_south", r.lat_south, "region");
  read(j, "lon_east", r.lon_east, "region");
  read(j, "class", r.target_class, "region");
  return r;
}

Json region_json(const GeoRect& r) {
  return {{"name", r.name},       {"lat_north", r.lat_north}, {"lon_west", r.lon_west},
          {"lat_south", r.lat_south}, {"lon_east", r.lon_east}, {"class", r.target_class}};
}

}  // namespace

void SynthConfig::validate() const {
  if (width < 8 || height < 8) throw ConfigError("synth grid must be at least 8x8");
  if (!(cell > 0.0) || !std::isfinite(lon_min) || !std::isfinite(lat_max))
    throw ConfigError("synth grid origin/cell must be finite with cell > 0");
  if (climate_coarsen < 1 || width % climate_coarsen || height % climate_coarsen)
    throw ConfigError("synth.climate_coarsen must divide the grid width and height");
  if (width / climate_coarsen < 2 || height / climate_coarsen < 2)
    throw ConfigError("synth climate grid must be at least 2x2");
  if (years < 4 || future_years < 4 || baseline_years < 4) throw ConfigError("synth needs at least 4 years per period");
  double sum = 0.0;
  for (double f : class_fractions) {
    if (!(f > 0.0)) throw ConfigError("every synth class fraction must be positive");
    sum += f;
  }
  if (std::abs(sum - 1.0) > 1e-6) throw ConfigError("synth class fractions must sum to 1");
  if (climate_models.empty() || ssps.empty() || periods.empty())
    throw ConfigError("synth needs at least one climate model, SSP and period");
  std::set<std::string> names;
  for (const auto& m : climate_models)
    if (m.name.empty() || !names.insert(m.name).second)
      throw ConfigError("synth climate model names must be unique and non-empty");
  names.clear();
  for (const auto& s : ssps)
    if (s.name.empty() || !names.insert(s.name).second)
      throw ConfigError("synth SSP names must be unique and non-empty");
  names.clear();
  for (const auto& p : periods)
    if (p.name.empty() || p.name == "2010" || !names.insert(p.name).second)
      throw ConfigError("synth period names must be unique, non-empty and not '2010'");
}

void FeaturesConfig::validate() const {
  parse_regrid_method(regrid);
  if (!(sun_altitude > 0.0 && sun_altitude <= 90.0))
    throw ConfigError("features.sun_altitude must be in (0, 90]");
}

void TrainSection::validate() const {
  if (!(train_fraction > 0.0 && train_fraction < 1.0))
    throw ConfigError("train.train_fraction must be in (0, 1)");
  if (!(val_fraction >= 0.0 && val_fraction < 1.0))
    throw ConfigError("train.val_fraction must be in [0, 1)");
  if (train.epochs < 1) throw ConfigError("train.epochs must be >= 1");
  if (train.batch_size < 1) throw ConfigError("train.batch_size must be >= 1");
  if (train.patience < 1) throw ConfigError("train.patience must be >= 1");
  if (!(train.lr > 0.0)) throw ConfigError("train.lr must be positive");
  if (model.lstm_hidden < 1) throw ConfigError("train.lstm_hidden must be >= 1");
  for (auto h : model.mlp_hidden)
    if (h < 1) throw ConfigError("train.mlp_hidden sizes must be >= 1");
}

void AttributeConfig::validate() const {
  if (repeats < 1) throw ConfigError("attribute.repeats must be >= 1");
  if (per_month_repeats < 0) throw ConfigError("attribute.per_month_repeats must be >= 0");
  if (steps < 1) throw ConfigError("attribute.steps must be >= 1");
  if (!(band_fraction > 0.0 && band_fraction <= 0.5))
    throw ConfigError("attribute.band_fraction must be in (0, 0.5]");
  for (const auto& r : regions) {
    if (!(r.lat_north > r.lat_south) || !(r.lon_east > r.lon_west))
      throw ConfigError("region '" + r.name + "' is empty");
    if (r.target_class < 0 || r.target_class >= kNumClasses)
      throw ConfigError("region '" + r.name + "' class must be 0..3");
  }
}

void ProjectConfig::validate() const {
  if (!(band_fraction > 0.0 && band_fraction <= 0.5))
    throw ConfigError("project.band_fraction must be in (0, 0.5]");
}

void ReportConfig::validate() const {
  if (scale < 1 || scale > 16) throw ConfigError("report.scale must be in 1..16");
}

void RunConfig::validate() const {
  synth.validate();
  features.validate();
  train.validate();
  attribute.validate();
  project.validate();
  report.validate();
}

RunConfig parse_config(const Json& j) {
  RunConfig c;
  check_keys(j, {"seed", "threads", "out", "synth", "features", "train", "eval", "attribute",
                 "project", "report"},
             "config");
  read(j, "seed", c.seed, "config");
  read(j, "threads", c.threads, "config");
  if (j.contains("out")) c.out = j.at("out").get<std::string>();

  if (const auto it = j.find("synth"); it != j.end()) {
    const Json& s = *it;
    check_keys(s, {"width", "height", "lon_min", "lat_max", "cell", "climate_coarsen",
                   "start_year", "baseline_years", "years", "future_years", "class_fractions",
                   "north_amplification", "climate_models", "ssps", "periods"},
               "synth");
    auto& o = c.synth;
    read(s, "width", o.width, "synth");
    read(s, "height", o.height, "synth");
    read(s, "lon_min", o.lon_min, "synth");
    read(s, "lat_max", o.lat_max, "synth");
    read(s, "cell", o.cell, "synth");
    read(s, "climate_coarsen", o.climate_coarsen, "synth");
    read(s, "start_year", o.start_year, "synth");
    read(s, "baseline_years", o.baseline_years, "synth");
    read(s, "years", o.years, "synth");
    read(s, "future_years", o.future_years, "synth");
    read(s, "class_fractions", o.class_fractions, "synth");
    read(s, "north_amplification", o.north_amplification, "synth");
    if (s.contains("climate_models")) {
      o.climate_models.clear();
      for (const auto& m : s.at("climate_models")) {
        check_keys(m, {"name", "factor"}, "synth.climate_models[]");
        PseudoModel pm;
        read(m, "name", pm.name, "synth.climate_models[]");
        read(m, "factor", pm.factor, "synth.climate_models[]");
        o.climate_models.push_back(pm);
      }
    }
    if (s.contains("ssps")) {
      o.ssps.clear();
      for (const auto& m : s.at("ssps")) {
        check_keys(m, {"name", "warming", "precip"}, "synth.ssps[]");
        SspDrift d;
        read(m, "name", d.name, "synth.ssps[]");
        read(m, "warming", d.warming, "synth.ssps[]");
        read(m, "precip", d.precip, "synth.ssps[]");
        o.ssps.push_back(d);
      }
    }
    if (s.contains("periods")) {
      o.periods.clear();
      for (const auto& m : s.at("periods")) {
        check_keys(m, {"name", "start_year", "fraction"}, "synth.periods[]");
        PeriodSpec p;
        read(m, "name", p.name, "synth.periods[]");
        read(m, "start_year", p.start_year, "synth.periods[]");
        read(m, "fraction", p.fraction, "synth.periods[]");
        o.periods.push_back(p);
      }
    }
  }

  if (const auto it = j.find("features"); it != j.end()) {
    check_keys(*it, {"inputs", "regrid", "sun_altitude"}, "features");
    read(*it, "inputs", c.features.inputs, "features");
    read(*it, "regrid", c.features.regrid, "features");
    read(*it, "sun_altitude", c.features.sun_altitude, "features");
  }

  if (const auto it = j.find("train"); it != j.end()) {
    const Json& s = *it;
    check_keys(s, {"model", "mlp_hidden", "lstm_hidden", "epochs", "batch_size", "patience", "lr",
                   "train_fraction", "val_fraction", "val_from_test", "undersample"},
               "train");
    auto& t = c.train;
    if (s.contains("model")) t.model.kind = parse_model_kind(s.at("model").get<std::string>());
    read(s, "mlp_hidden", t.model.mlp_hidden, "train");
    read(s, "lstm_hidden", t.model.lstm_hidden, "train");
    read(s, "epochs", t.train.epochs, "train");
    read(s, "batch_size", t.train.batch_size, "train");
    read(s, "patience", t.train.patience, "train");
    read(s, "lr", t.train.lr, "train");
    read(s, "train_fraction", t.train_fraction, "train");
    read(s, "val_fraction", t.val_fraction, "train");
    read(s, "val_from_test", t.val_from_test, "train");
    read(s, "undersample", t.undersample, "train");
  }

  if (const auto it = j.find("eval"); it != j.end()) check_keys(*it, {}, "eval");

  if (const auto it = j.find("attribute"); it != j.end()) {
    const Json& s = *it;
    check_keys(s,
               {"repeats", "per_month_repeats", "steps", "max_rows", "top_k", "scenario",
                "regions", "band_fraction"},
               "attribute");
    auto& a = c.attribute;
    read(s, "repeats", a.repeats, "attribute");
    read(s, "per_month_repeats", a.per_month_repeats, "attribute");
    read(s, "steps", a.steps, "attribute");
    read(s, "max_rows", a.max_rows, "attribute");
    read(s, "top_k", a.top_k, "attribute");
    read(s, "scenario", a.scenario, "attribute");
    read(s, "band_fraction", a.band_fraction, "attribute");
    if (s.contains("regions"))
      for (const auto& r : s.at("regions")) a.regions.push_back(parse_region(r));
  }

  if (const auto it = j.find("project"); it != j.end()) {
    check_keys(*it, {"band_fraction"}, "project");
    read(*it, "band_fraction", c.project.band_fraction, "project");
  }
  if (const auto it = j.find("report"); it != j.end()) {
    check_keys(*it, {"scale"}, "report");
    read(*it, "scale", c.report.scale, "report");
  }
  return c;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot open config file " + path.string());
  Json j;
  try {
    j = Json::parse(f);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  return parse_config(j);
}

namespace {

Json synth_json(const SynthConfig& s) {
  Json models = Json::array(), ssps = Json::array(), periods = Json::array();
  for (const auto& m : s.climate_models) models.push_back({{"name", m.name}, {"factor", m.factor}});
  for (const auto& d : s.ssps)
    ssps.push_back({{"name", d.name}, {"warming", d.warming}, {"precip", d.precip}});
  for (const auto& p : s.periods)
    periods.push_back({{"name", p.name}, {"start_year", p.start_year}, {"fraction", p.fraction}});
  return {{"width", s.width},
          {"height", s.height},
          {"lon_min", s.lon_min},
          {"lat_max", s.lat_max},
          {"cell", s.cell},
          {"climate_coarsen", s.climate_coarsen},
          {"start_year", s.start_year},
          {"baseline_years", s.baseline_years},
          {"years", s.years},
          {"future_years", s.future_years},
          {"class_fractions", s.class_fractions},
          {"north_amplification", s.north_amplification},
          {"climate_models", models},
          {"ssps", ssps},
          {"periods", periods}};
}

Json features_json(const FeaturesConfig& f) {
  return {{"inputs", f.inputs},
          {"regrid", f.regrid},
          {"sun_altitude", f.sun_altitude}};
}

Json train_json(const TrainSection& t) {
  Json j = model_json(t.model);
  j["model"] = j["kind"];
  j.erase("kind");
  j["epochs"] = t.train.epochs;
  j["batch_size"] = t.train.batch_size;
  j["patience"] = t.train.patience;
  j["lr"] = t.train.lr;
  j["train_fraction"] = t.train_fraction;
  j["val_fraction"] = t.val_fraction;
  j["val_from_test"] = t.val_from_test;
  j["undersample"] = t.undersample;
  return j;
}

Json attribute_json(const AttributeConfig& a) {
  Json regions = Json::array();
  for (const auto& r : a.regions) regions.push_back(region_json(r));
  return {{"repeats", a.repeats},
          {"per_month_repeats", a.per_month_repeats},
          {"steps", a.steps},
          {"max_rows", a.max_rows},
          {"top_k", a.top_k},
          {"scenario", a.scenario},
          {"regions", regions},
          {"band_fraction", a.band_fraction}};
}

}  // namespace

Json to_json(const RunConfig& c) {
  return {{"seed", c.seed},
          {"threads", c.threads},
          {"out", c.out.string()},
          {"synth", synth_json(c.synth)},
          {"features", features_json(c.features)},
          {"train", train_json(c.train)},
          {"eval", Json::object()},
          {"attribute", attribute_json(c.attribute)},
          {"project", {{"band_fraction", c.project.band_fraction}}},
          {"report", {{"scale", c.report.scale}}}};
}

Json stage_inputs(const RunConfig& c, const std::string& stage) {
  if (stage == "synth") return {{"seed", c.seed}, {"synth", synth_json(c.synth)}};
  if (stage == "features") return {{"features", features_json(c.features)}};
  if (stage == "train") return {{"seed", c.seed}, {"train", train_json(c.train)}};
  if (stage == "eval") return Json::object();
  if (stage == "attribute") return {{"seed", c.seed}, {"attribute", attribute_json(c.attribute)}};
  if (stage == "project") return {{"project", {{"band_fraction", c.project.band_fraction}}}};
  if (stage == "report") return {{"report", {{"scale", c.report.scale}}}};
  throw ConfigError("unknown stage '" + stage + "'");
}

}  // namespace arable::pipeline
