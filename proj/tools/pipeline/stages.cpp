#include "pipeline/stages.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include <spdlog/spdlog.h>

#include "arable/attribution.hpp"
#include "arable/dataset.hpp"
#include "arable/error.hpp"
#include "arable/metrics.hpp"
#include "arable/render.hpp"
#include "arable/scenario.hpp"
#include "arable/terrain_features.hpp"
#include "pipeline/inputs.hpp"
#include "pipeline/stamp.hpp"
#include "pipeline/synth.hpp"

namespace arable::pipeline {

namespace fs = std::filesystem;
using OJson = nlohmann::ordered_json;

namespace {

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw DataError("cannot write " + path.string());
  f << text;
}

Json read_json(const fs::path& path) {
  std::ifstream f(path);
  if (!f) throw DataError("cannot read " + path.string());
  try {
    return Json::parse(f);
  } catch (const Json::exception& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

fs::path begin_stage(const RunConfig& c, const std::string& stage) {
  require_upstream(c, stage);
  const auto dir = stage_dir(c, stage);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

void finish_stage(const RunConfig& c, const std::string& stage) {
  write_stamp(c, stage);
  spdlog::info("{}: done ({})", stage, stage_dir(c, stage).string());
}

fs::path inputs_path(const RunConfig& c) {
  return c.features.inputs.empty() ? stage_dir(c, "synth") / "inputs.json"
                                   : fs::path(c.features.inputs);
}

struct ScenarioEntry {
  ScenarioKey key;
  fs::path table;
  bool truth = false;
};

std::vector<ScenarioEntry> read_scenarios(const RunConfig& c) {
  const auto dir = stage_dir(c, "features");
  std::vector<ScenarioEntry> out;
  for (const auto& s : read_json(dir / "scenarios.json")) {
    ScenarioEntry e{{s.at("climate_model"), s.at("ssp"), s.at("period")},
                    dir / s.at("file").get<std::string>(),
                    s.value("truth", false)};
    out.push_back(std::move(e));
  }
  return out;
}

struct Trained {
  std::unique_ptr<Model> model;
  ScalerParams scaler;
};

Trained load_trained(const RunConfig& c) {
  const auto dir = stage_dir(c, "train");
  Trained t{load_model(dir / "model"), read_scaler_json(dir / "scaler.json")};
  return t;
}

Matrix model_input(const Trained& t, const FeatureTable& table) {
  return model_input_matrix(apply_scaler(table, t.scaler), t.model->kind());
}

std::size_t band_rows(const GridSpec& g, double fraction) {
  return std::max<std::size_t>(1, static_cast<std::size_t>(std::lround(fraction * static_cast<double>(g.height))));
}

double band_mean(const Raster& r, std::size_t row0, std::size_t row1) {
  double s = 0.0;
  std::size_t n = 0;
  for (std::size_t i = row0; i < row1; ++i)
    for (std::size_t j = 0; j < r.width(); ++j)
      if (r.valid(i, j)) {
        s += r.at(i, j);
        ++n;
      }
  return n ? s / static_cast<double>(n) : kNaN;
}

std::string ensemble_slug(const std::string& ssp, const std::string& period) {
  return scenario_slug({"ensemble", ssp, period});
}

template <typename T>
OJson counts_json(const std::array<T, kNumClasses>& counts) {
  OJson j = OJson::array();
  for (auto v : counts) j.push_back(v);
  return j;
}

}  // namespace

// ---------------------------------------------------------------------------

void run_synth(const RunConfig& c) {
  const auto dir = begin_stage(c, "synth");
  const auto summary = synthesize(c.synth, c.seed, dir);
  spdlog::info("synth: class counts {} / {} / {} / {}", summary.counts[0], summary.counts[1],
               summary.counts[2], summary.counts[3]);
  finish_stage(c, "synth");
}

void run_features(const RunConfig& c) {
  const auto dir = begin_stage(c, "features");
  const auto inputs = read_inputs(inputs_path(c));
  const Raster dem = read_raster(inputs.dem);
  const GridSpec grid = dem.spec();
  Raster mask = read_raster(inputs.mask);
  if (!(mask.spec() == grid)) mask = regrid_mask(mask, grid);
  validate_class_mask(mask);
  write_raster(mask, dir / "mask", RasterDtype::F32);

  const RegridMethod method = parse_regrid_method(c.features.regrid);
  spdlog::info("features: terrain stack on {}x{} px", grid.width, grid.height);
  const RasterSet terrain = terrain_feature_stack(dem, ScaleSet{}, c.features.sun_altitude);
  const ClimateStacks hist = read_climate_dir(inputs.historical);
  const ClimateStacks base = inputs.baseline ? read_climate_dir(*inputs.baseline) : hist;

  {
    const auto table = assemble(analysis_features(base, hist, grid, method, terrain), &mask);
    const auto n = class_counts(table.labels);
    spdlog::info("features: historical {} rows, classes {} / {} / {} / {}", table.rows(), n[0], n[1],
                 n[2], n[3]);
    write_table_csv(table, dir / "historical.csv", c.seed);
  }

  fs::create_directories(dir / "scenarios");
  OJson list = OJson::array();
  for (const auto& src : inputs.scenarios) {
    const ClimateStacks target = read_climate_dir(src.dir);
    auto table = assemble(analysis_features(base, target, grid, method, terrain), nullptr);
    if (inputs.rule)
      for (std::size_t r = 0; r < table.rows(); ++r)
        table.labels[r] = inputs.rule->classify(rule_inputs(table, r));
    const std::string file = "scenarios/" + scenario_slug(src.key) + ".csv";
    write_table_csv(table, dir / file, c.seed);
    spdlog::info("features: {} {} rows", src.key.label(), table.rows());
    list.push_back({{"climate_model", src.key.climate_model},
                    {"ssp", src.key.ssp},
                    {"period", src.key.period},
                    {"file", file},
                    {"truth", inputs.rule.has_value()}});
  }
  write_text(dir / "scenarios.json", list.dump(2) + "\n");
  finish_stage(c, "features");
}

void run_train(const RunConfig& c) {
  const auto dir = begin_stage(c, "train");
  const auto& t = c.train;
  FeatureTable table = read_table_csv(stage_dir(c, "features") / "historical.csv");
  if (!table.labeled()) throw DataError("historical table has unlabeled rows");
  if (t.undersample) table = undersample(table, c.seed);

  auto [train_t, test_t] = split(table, t.train_fraction, c.seed + 1);
  FeatureTable val_t;
  if (t.val_from_test) {
    val_t = split(test_t, t.val_fraction, c.seed + 2).first;
  } else {
    auto [v, rest] = split(train_t, t.val_fraction, c.seed + 2);
    val_t = std::move(v);
    train_t = std::move(rest);
  }
  spdlog::info("train: {} train, {} validation, {} test rows ({})", train_t.rows(), val_t.rows(),
               test_t.rows(), t.val_from_test ? "validation from test" : "validation from train");

  const ScalerParams scaler = fit_scaler(train_t);
  const auto kind = t.model.kind;
  LabeledData train_d{model_input_matrix(apply_scaler(train_t, scaler), kind), train_t.labels};
  LabeledData val_d{model_input_matrix(apply_scaler(val_t, scaler), kind), val_t.labels};

  TrainConfig tc = t.train;
  tc.seed = c.seed + 3;
  spdlog::info("train: {} model, {} epochs max", model_kind_name(kind), tc.epochs);
  const TrainResult res = train(t.model, train_d, val_d.y.empty() ? nullptr : &val_d, tc);
  spdlog::info("train: best epoch {} (validation macro-F1 {:.4f})", res.best_epoch, res.best_val_f1);

  OJson extra;
  extra["scaler"] = "scaler.json";
  extra["validation"] = t.val_from_test ? "test" : "train";
  extra["best_epoch"] = res.best_epoch;
  extra["best_val_macro_f1"] = res.best_val_f1;
  save_model(*res.model, dir / "model", tc.seed, extra.dump());
  write_scaler_json(scaler, dir / "scaler.json");
  write_table_csv(test_t, dir / "test.csv", c.seed + 1);

  OJson hist = OJson::array();
  for (const auto& e : res.history)
    hist.push_back({{"epoch", e.epoch}, {"train_loss", e.train_loss}, {"val_macro_f1", e.val_macro_f1}});
  write_text(dir / "history.json", hist.dump(2) + "\n");
  finish_stage(c, "train");
}

void run_eval(const RunConfig& c) {
  const auto dir = begin_stage(c, "eval");
  const Trained tr = load_trained(c);
  const FeatureTable test = read_table_csv(stage_dir(c, "train") / "test.csv");
  const Matrix probs = predict_proba(*tr.model, model_input(tr, test));
  const MetricsReport rep = evaluate(test.labels, {probs.data(), static_cast<std::size_t>(probs.size())});
  const std::string table = report_table(rep, model_kind_name(tr.model->kind()));
  write_text(dir / "metrics.json", report_json(rep));
  write_text(dir / "report.txt", table);
  std::fputs(table.c_str(), stdout);
  finish_stage(c, "eval");
}

void run_attribute(const RunConfig& c) {
  const auto dir = begin_stage(c, "attribute");
  const auto& a = c.attribute;
  const Trained tr = load_trained(c);
  const ModelKind kind = tr.model->kind();

  FeatureTable test = read_table_csv(stage_dir(c, "train") / "test.csv");
  if (a.max_rows > 0 && test.rows() > a.max_rows) {
    const double frac = static_cast<double>(a.max_rows) / static_cast<double>(test.rows());
    auto idx = split_indices(test.labels, frac, c.seed + 4).train;
    std::sort(idx.begin(), idx.end());
    test = test.select(idx);
  }
  const Matrix x = model_input(tr, test);
  spdlog::info("attribute: permutation importance on {} rows, K = {}", test.rows(), a.repeats);
  const auto imp = permutation_importance(*tr.model, x, test.labels, variable_groups_for(kind),
                                          a.repeats, c.seed + 5);
  write_importance_csv(imp, dir / "importance.csv");
  write_text(dir / "importance.json", importance_json(imp));
  if (a.per_month_repeats > 0) {
    spdlog::info("attribute: per-feature importance, K = {}", a.per_month_repeats);
    const auto fine = permutation_importance(*tr.model, x, test.labels, named_feature_groups(kind),
                                             a.per_month_repeats, c.seed + 6);
    write_importance_csv(fine, dir / "importance_features.csv");
    write_text(dir / "importance_features.json", importance_json(fine));
  }

  const auto scenarios = read_scenarios(c);
  if (scenarios.empty()) throw DataError("no scenarios to attribute");
  const ScenarioEntry* chosen = &scenarios.back();
  if (!a.scenario.empty()) {
    const auto it = std::find_if(scenarios.begin(), scenarios.end(),
                                 [&](const ScenarioEntry& e) { return e.key.label() == a.scenario; });
    if (it == scenarios.end()) throw ConfigError("attribute.scenario '" + a.scenario + "' is not a known scenario");
    chosen = &*it;
  }
  const GridSpec grid = read_raster(stage_dir(c, "features") / "mask").spec();
  std::vector<GeoRect> regions = a.regions;
  if (regions.empty()) {
    const std::size_t n = band_rows(grid, a.band_fraction);
    const std::size_t j0 = grid.width * 3 / 8, j1 = grid.width * 5 / 8;
    const double west = grid.lon_min + static_cast<double>(j0) * grid.cell;
    const double east = grid.lon_min + static_cast<double>(j1) * grid.cell;
    const double band = static_cast<double>(n) * grid.cell;
    regions.push_back({"north band", grid.lat_max, west, grid.lat_max - band, east, 3});
    regions.push_back({"south band", grid.lat_min() + band, west, grid.lat_min(), east, 1});
  }

  const FeatureTable hist = read_table_csv(stage_dir(c, "features") / "historical.csv");
  const FeatureTable scen = read_table_csv(chosen->table);
  const Matrix xh = model_input(tr, hist);
  const Matrix xs = model_input(tr, scen);
  const PixelRows hist_rows{&xh, hist.pix_i, hist.pix_j};
  const PixelRows scen_rows{&xs, scen.pix_i, scen.pix_j};

  OJson out;
  out["scenario"] = chosen->key.label();
  out["baseline"] = "historical";
  out["regions"] = OJson::array();
  for (std::size_t r = 0; r < regions.size(); ++r) {
    spdlog::info("attribute: integrated gradients over {} (class {}, m = {})", regions[r].name,
                 regions[r].target_class, a.steps);
    const auto ra = region_attribution(*tr.model, regions[r], grid, scen_rows, hist_rows,
                                       variable_groups_for(kind), regions[r].target_class, a.steps);
    write_region_csv(ra, dir / ("region_" + std::to_string(r) + ".csv"));
    out["regions"].push_back(OJson::parse(region_json(ra, a.top_k)));
  }
  write_text(dir / "regions.json", out.dump(2) + "\n");
  finish_stage(c, "attribute");
}

void run_project(const RunConfig& c) {
  const auto dir = begin_stage(c, "project");
  const Trained tr = load_trained(c);
  const Raster mask = read_raster(stage_dir(c, "features") / "mask");
  const GridSpec grid = mask.spec();
  fs::create_directories(dir / "maps");
  fs::create_directories(dir / "ensemble");
  fs::create_directories(dir / "delta");

  OJson summary;
  summary["baseline_counts"] = counts_json(class_counts(mask));
  summary["scenarios"] = OJson::array();
  std::map<std::pair<std::string, std::string>, std::vector<ScenarioMaps>> groups;
  for (const auto& s : read_scenarios(c)) {
    const FeatureTable table = read_table_csv(s.table);
    const Matrix probs = predict_proba(*tr.model, model_input(tr, table));
    auto maps = probability_maps(grid, table.pix_i, table.pix_j, probs, s.key.label());
    write_probability_maps(maps, dir / "maps", scenario_slug(s.key));
    OJson e{{"climate_model", s.key.climate_model}, {"ssp", s.key.ssp}, {"period", s.key.period},
            {"counts", counts_json(class_counts(maps))}};
    if (s.truth && table.rows() > 0) {
      const auto pred = predict_labels(*tr.model, model_input(tr, table));
      std::size_t hit = 0;
      for (std::size_t r = 0; r < table.rows(); ++r) hit += pred[r] == table.labels[r];
      e["truth_accuracy"] = static_cast<double>(hit) / static_cast<double>(table.rows());
      e["truth_counts"] = counts_json(class_counts(table.labels));
    }
    spdlog::info("project: {}", s.key.label());
    summary["scenarios"].push_back(std::move(e));
    groups[{s.key.ssp, s.key.period}].push_back({s.key, std::move(maps)});
  }

  const std::size_t n = band_rows(grid, c.project.band_fraction);
  std::vector<ScenarioMaps> ensembles;
  summary["ensembles"] = OJson::array();
  for (const auto& [key, members] : groups) {
    const auto& [ssp, period] = key;
    const ProbabilityMaps ens = ensemble_average(members);
    const DeltaMap delta = delta_heatmap(ens, mask);
    const std::string slug = ensemble_slug(ssp, period);
    write_probability_maps(ens, dir / "ensemble", slug);
    write_delta_map(delta, dir / "delta", slug);
    OJson north = OJson::array(), south = OJson::array();
    for (const auto& d : delta.delta) {
      north.push_back(band_mean(d, 0, n));
      south.push_back(band_mean(d, grid.height - n, grid.height));
    }
    summary["ensembles"].push_back({{"ssp", ssp},
                                    {"period", period},
                                    {"file", slug},
                                    {"members", members.size()},
                                    {"counts", counts_json(class_counts(ens))},
                                    {"north_mean_delta", north},
                                    {"south_mean_delta", south}});
    ensembles.push_back({{"ensemble", ssp, period}, ens});
  }
  summary["band_rows"] = n;
  write_trajectory_csv(trajectory_report(mask, ensembles), dir / "trajectory.csv");
  write_text(dir / "summary.json", summary.dump(2) + "\n");
  finish_stage(c, "project");
}

void run_report(const RunConfig& c) {
  const auto dir = begin_stage(c, "report");
  const int scale = c.report.scale;
  const auto proj = stage_dir(c, "project");
  const Raster mask = read_raster(stage_dir(c, "features") / "mask");
  write_png(render_classes(mask, scale), dir / "mask.png");
  std::vector<std::string> written = {"mask.png"};

  const Json summary = read_json(proj / "summary.json");
  for (const auto& e : summary.at("ensembles")) {
    const std::string slug = e.at("file");
    const auto ens = read_probability_maps(proj / "ensemble", slug);
    const auto delta = read_delta_map(proj / "delta", slug);
    write_png(render_classes(argmax_classes(ens), scale), dir / (slug + "_classes.png"));
    written.push_back(slug + "_classes.png");
    for (int k = 0; k < kNumClasses; ++k) {
      const auto cls = static_cast<std::size_t>(k);
      const std::string d = slug + "_delta_class" + std::to_string(k) + ".png";
      const std::string p = slug + "_prob_class" + std::to_string(k) + ".png";
      write_png(render_delta(delta.delta[cls], scale), dir / d);
      write_png(render_probability(ens.p[cls], scale), dir / p);
      written.push_back(d);
      written.push_back(p);
    }
  }

  const auto rows = read_trajectory_csv(proj / "trajectory.csv");
  std::vector<std::string> ssps;
  for (const auto& r : rows)
    if (std::find(ssps.begin(), ssps.end(), r.ssp) == ssps.end()) ssps.push_back(r.ssp);
  for (const auto& ssp : ssps) {
    std::vector<std::string> periods;
    std::vector<LineSeries> series(kNumClasses);
    for (int k = 0; k < kNumClasses; ++k) series[static_cast<std::size_t>(k)].name = "class " + std::to_string(k);
    for (const auto& r : rows) {
      if (r.ssp != ssp) continue;
      if (periods.empty() || periods.back() != r.period) periods.push_back(r.period);
      series[static_cast<std::size_t>(r.cls)].y.push_back(static_cast<double>(r.count));
    }
    std::string file = "trajectory_" + ssp + ".png";
    std::replace_if(file.begin(), file.end(), [](char ch) { return ch == '/' || ch == ' ' || ch == '\\'; }, '-');
    write_png(line_chart(periods, series, "pixels per class " + ssp), dir / file);
    written.push_back(file);
  }

  // Attribution outputs are optional here; they are plotted when present.
  const auto attr = stage_dir(c, "attribute");
  if (fs::exists(attr / "importance.json")) {
    const Json imp = read_json(attr / "importance.json");
    std::vector<std::pair<std::string, double>> bars;
    for (const auto& f : imp.at("features")) {
      if (bars.size() >= 15) break;
      bars.emplace_back(f.at("name"), f.at("importance"));
    }
    write_png(bar_chart(bars, "permutation importance"), dir / "importance.png");
    written.push_back("importance.png");
  }
  if (fs::exists(attr / "regions.json")) {
    const Json reg = read_json(attr / "regions.json");
    std::size_t k = 0;
    for (const auto& r : reg.at("regions")) {
      std::vector<std::pair<std::string, double>> bars;
      for (const auto& f : r.at("top")) bars.emplace_back(f.at("feature"), f.at("attribution"));
      const std::string file = "region_" + std::to_string(k++) + ".png";
      write_png(bar_chart(bars, r.at("region").at("name").get<std::string>() + " IG class " +
                                    std::to_string(r.at("region").at("class").get<int>())),
                dir / file);
      written.push_back(file);
    }
  }

  std::ostringstream idx;
  idx << "ensemble maps and deltas against the baseline mask\n";
  for (const auto& e : summary.at("ensembles")) {
    idx << e.at("ssp").get<std::string>() << " " << e.at("period").get<std::string>()
        << "  north mean delta class 3: " << e.at("north_mean_delta").at(3).dump()
        << "  south mean delta class 3: " << e.at("south_mean_delta").at(3).dump() << "\n";
  }
  idx << "\nfiles:\n";
  for (const auto& f : written) idx << "  " << f << "\n";
  write_text(dir / "index.txt", idx.str());
  finish_stage(c, "report");
}

void run_stage(const RunConfig& c, const std::string& stage) {
  if (stage == "synth") return run_synth(c);
  if (stage == "features") return run_features(c);
  if (stage == "train") return run_train(c);
  if (stage == "eval") return run_eval(c);
  if (stage == "attribute") return run_attribute(c);
  if (stage == "project") return run_project(c);
  if (stage == "report") return run_report(c);
  throw ConfigError("unknown stage '" + stage + "'");
}

}  // namespace arable::pipeline
