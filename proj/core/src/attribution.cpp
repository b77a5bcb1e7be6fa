#include "arable/attribution.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>

#include "arable/climate_features.hpp"
#include "arable/dataset.hpp"
#include "arable/error.hpp"
#include "arable/metrics.hpp"
#include "arable/random.hpp"
#include "json.hpp"

namespace arable {

std::vector<FeatureGroup> sequence_channel_groups() {
  const auto& names = sequence_channel_names();
  std::vector<FeatureGroup> out;
  out.reserve(kSeqChannels);
  for (std::size_t ch = 0; ch < kSeqChannels; ++ch) {
    FeatureGroup g{names[ch], {}};
    for (std::size_t t = 0; t < kSeqLen; ++t) g.columns.push_back(t * kSeqChannels + ch);
    out.push_back(std::move(g));
  }
  return out;
}

std::vector<FeatureGroup> flat_variable_groups() {
  const auto& names = sequence_channel_names();
  std::vector<FeatureGroup> out;
  out.reserve(kSeqChannels);
  for (std::size_t ch = 0; ch < kSeqChannels; ++ch) {
    FeatureGroup g{names[ch], {}};
    if (ch < kMonthlyVarCount) {
      for (std::size_t t = 0; t < kSeqLen; ++t) g.columns.push_back(sequence_source_column(t, ch));
    } else {
      g.columns.push_back(sequence_source_column(0, ch));
    }
    out.push_back(std::move(g));
  }
  return out;
}

std::vector<FeatureGroup> flat_column_groups() {
  const auto& names = feature_names();
  std::vector<FeatureGroup> out;
  out.reserve(names.size());
  for (std::size_t k = 0; k < names.size(); ++k) out.push_back({names[k], {k}});
  return out;
}

std::vector<FeatureGroup> named_feature_groups(ModelKind kind) {
  if (!is_sequence_model(kind)) return flat_column_groups();
  const auto& names = feature_names();
  std::vector<FeatureGroup> out;
  out.reserve(names.size());
  for (std::size_t ch = 0; ch < kSeqChannels; ++ch) {
    if (ch < kMonthlyVarCount) {
      for (std::size_t t = 0; t < kSeqLen; ++t)
        out.push_back({names[sequence_source_column(t, ch)], {t * kSeqChannels + ch}});
    } else {
      FeatureGroup g{names[sequence_source_column(0, ch)], {}};
      for (std::size_t t = 0; t < kSeqLen; ++t) g.columns.push_back(t * kSeqChannels + ch);
      out.push_back(std::move(g));
    }
  }
  return out;
}

std::vector<FeatureGroup> variable_groups_for(ModelKind kind) {
  return is_sequence_model(kind) ? sequence_channel_groups() : flat_variable_groups();
}

// ---------------------------------------------------------------------------

double ImportanceReport::importance_of(double reference, std::span<const double> scores) {
  double sum = 0.0;
  for (double s : scores) sum += s;
  return reference - sum / static_cast<double>(scores.size());
}

std::vector<std::size_t> ImportanceReport::ranking() const {
  std::vector<std::size_t> order(features.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return features[a].importance > features[b].importance;
  });
  return order;
}

ImportanceReport permutation_importance(const Model& model, const Matrix& x,
                                        std::span<const int> labels,
                                        const std::vector<FeatureGroup>& groups, int repeats,
                                        std::uint64_t seed, const ScoreFn& score) {
  if (repeats < 1) throw ConfigError("permutation importance needs at least one repetition");
  if (static_cast<std::size_t>(x.rows()) != labels.size())
    throw DataError("permutation importance: rows and labels differ");
  if (x.rows() < 2) throw DataError("permutation importance needs at least two rows");
  const ScoreFn& fn = score ? score : ScoreFn(macro_precision);
  const auto n = static_cast<std::size_t>(x.rows());

  auto evaluate = [&](const Matrix& m) {
    const double s = fn(labels, predict_labels(model, m));
    if (std::isnan(s)) throw DataError("permutation importance: score is NaN");
    return s;
  };

  ImportanceReport rep;
  rep.repeats = repeats;
  rep.reference = evaluate(x);

  Rng rng(seed);
  Matrix work = x;
  for (const auto& g : groups) {
    for (std::size_t c : g.columns)
      if (c >= static_cast<std::size_t>(x.cols()))
        throw DataError("feature group '" + g.name + "' references a column past the input");
    FeatureImportance fi{g.name, 0.0, {}};
    fi.scores.reserve(static_cast<std::size_t>(repeats));
    for (int k = 0; k < repeats; ++k) {
      const auto perm = random_permutation(n, rng);
      for (std::size_t c : g.columns) {
        const auto col = static_cast<Eigen::Index>(c);
        for (std::size_t r = 0; r < n; ++r)
          work(static_cast<Eigen::Index>(r), col) = x(static_cast<Eigen::Index>(perm[r]), col);
      }
      fi.scores.push_back(evaluate(work));
    }
    for (std::size_t c : g.columns) work.col(static_cast<Eigen::Index>(c)) = x.col(static_cast<Eigen::Index>(c));
    fi.importance = ImportanceReport::importance_of(rep.reference, fi.scores);
    rep.features.push_back(std::move(fi));
  }
  return rep;
}

// ---------------------------------------------------------------------------

double AttributionVector::sum() const {
  double s = 0.0;
  for (double a : attribution) s += a;
  return s;
}

AttributionVector integrated_gradients(const Model& model, std::span<const double> x,
                                       std::span<const double> baseline, int cls, int steps) {
  if (steps < 1) throw ConfigError("integrated gradients needs at least one step");
  if (x.size() != baseline.size()) throw DataError("input and baseline differ in length");
  if (x.size() != model.input_dim()) throw DataError("input width does not match the model");
  const auto d = static_cast<Eigen::Index>(x.size());
  const auto m = static_cast<Eigen::Index>(steps);

  Matrix path(m, d);
  for (Eigen::Index k = 0; k < m; ++k) {
    const double alpha = (static_cast<double>(k) + 0.5) / static_cast<double>(steps);
    for (Eigen::Index i = 0; i < d; ++i) {
      const auto u = static_cast<std::size_t>(i);
      path(k, i) = baseline[u] + alpha * (x[u] - baseline[u]);
    }
  }
  const Matrix grads = model.logit_input_gradient(path, cls);

  AttributionVector out;
  out.input.assign(x.begin(), x.end());
  out.baseline.assign(baseline.begin(), baseline.end());
  out.target_class = cls;
  out.steps = steps;
  out.attribution.assign(x.size(), 0.0);
  for (Eigen::Index i = 0; i < d; ++i) {
    const auto u = static_cast<std::size_t>(i);
    const double delta = x[u] - baseline[u];
    if (delta == 0.0) continue;
    double acc = 0.0;
    for (Eigen::Index k = 0; k < m; ++k) acc += grads(k, i);
    out.attribution[u] = delta * (acc / static_cast<double>(steps));
  }

  Matrix ends(2, d);
  for (Eigen::Index i = 0; i < d; ++i) {
    ends(0, i) = x[static_cast<std::size_t>(i)];
    ends(1, i) = baseline[static_cast<std::size_t>(i)];
  }
  const Matrix z = model.logits(ends);
  out.f_input = z(0, cls);
  out.f_baseline = z(1, cls);
  out.residual = std::abs(out.sum() - (out.f_input - out.f_baseline));
  return out;
}

// ---------------------------------------------------------------------------

const std::vector<GeoRect>& reference_regions() {
  static const std::vector<GeoRect> regions = {
      {"NE China", 45.0, 121.0, 42.5, 128.0, 1},
      {"Eastern Europe", 53.0, 21.0, 45.0, 45.0, 2},
      {"Northern Russia", 63.0, 61.0, 57.5, 80.0, 3},
  };
  return regions;
}

std::vector<std::pair<std::string, double>> RegionAttribution::top(std::size_t k) const {
  auto sorted = features;
  std::stable_sort(sorted.begin(), sorted.end(), [](const auto& a, const auto& b) {
    return std::abs(a.second) > std::abs(b.second);
  });
  if (sorted.size() > k) sorted.resize(k);
  return sorted;
}

RegionAttribution region_attribution(const Model& model, const GeoRect& region,
                                     const GridSpec& grid, const PixelRows& scenario,
                                     const PixelRows& historical,
                                     const std::vector<FeatureGroup>& groups, int cls,
                                     int steps) {
  if (!scenario.x || !historical.x) throw DataError("region attribution: missing input rows");
  const std::size_t d = model.input_dim();
  std::map<std::uint64_t, std::size_t> hist_row;
  for (std::size_t r = 0; r < historical.pix_i.size(); ++r)
    hist_row[(std::uint64_t{historical.pix_i[r]} << 32) | historical.pix_j[r]] = r;

  RegionAttribution out;
  out.region = region;
  out.steps = steps;
  out.mean_attribution.assign(d, 0.0);
  for (std::size_t r = 0; r < scenario.pix_i.size(); ++r) {
    const auto i = scenario.pix_i[r], j = scenario.pix_j[r];
    if (!region.contains(grid.center_lat(i), grid.center_lon(j))) continue;
    const auto it = hist_row.find((std::uint64_t{i} << 32) | j);
    if (it == hist_row.end())
      throw DataError("region attribution: pixel (" + std::to_string(i) + ", " +
                      std::to_string(j) + ") has no historical row");
    const auto xr = scenario.x->row(static_cast<Eigen::Index>(r));
    const auto br = historical.x->row(static_cast<Eigen::Index>(it->second));
    const auto ig = integrated_gradients(model, {xr.data(), d}, {br.data(), d}, cls, steps);
    for (std::size_t k = 0; k < d; ++k) out.mean_attribution[k] += ig.attribution[k];
    out.max_residual = std::max(out.max_residual, ig.residual);
    ++out.pixels;
  }
  if (out.pixels == 0) throw DataError("region '" + region.name + "' contains no pixels");
  for (auto& v : out.mean_attribution) v /= static_cast<double>(out.pixels);

  for (const auto& g : groups) {
    double s = 0.0;
    for (std::size_t c : g.columns) {
      if (c >= d) throw DataError("feature group '" + g.name + "' references a column past the input");
      s += out.mean_attribution[c];
    }
    out.features.emplace_back(g.name, s);
  }
  return out;
}

// ---------------------------------------------------------------------------

namespace {

std::string fmt(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw DataError("cannot write " + path.string());
  f << text;
}

}  // namespace

void write_importance_csv(const ImportanceReport& r, const std::filesystem::path& path) {
  std::string text = "feature,importance,rank\n";
  const auto order = r.ranking();
  std::vector<std::size_t> rank(order.size());
  for (std::size_t k = 0; k < order.size(); ++k) rank[order[k]] = k + 1;
  for (std::size_t k = 0; k < r.features.size(); ++k)
    text += r.features[k].name + "," + fmt(r.features[k].importance) + "," +
            std::to_string(rank[k]) + "\n";
  write_text(path, text);
}

std::string importance_json(const ImportanceReport& r) {
  nlohmann::ordered_json j;
  j["reference_score"] = r.reference;
  j["repeats"] = r.repeats;
  j["features"] = nlohmann::ordered_json::array();
  for (std::size_t k : r.ranking()) {
    const auto& f = r.features[k];
    j["features"].push_back({{"name", f.name}, {"importance", f.importance}, {"scores", f.scores}});
  }
  return j.dump(2) + "\n";
}

void write_region_csv(const RegionAttribution& r, const std::filesystem::path& path) {
  std::string text = "feature,attribution,rank\n";
  const auto sorted = r.top(r.features.size());
  for (std::size_t k = 0; k < sorted.size(); ++k)
    text += sorted[k].first + "," + fmt(sorted[k].second) + "," + std::to_string(k + 1) + "\n";
  write_text(path, text);
}

std::string region_json(const RegionAttribution& r, std::size_t top_k) {
  nlohmann::ordered_json j;
  j["region"] = {{"name", r.region.name},
                 {"lat_north", r.region.lat_north},
                 {"lon_west", r.region.lon_west},
                 {"lat_south", r.region.lat_south},
                 {"lon_east", r.region.lon_east},
                 {"class", r.region.target_class}};
  j["pixels"] = r.pixels;
  j["steps"] = r.steps;
  j["max_completeness_residual"] = r.max_residual;
  j["top"] = nlohmann::ordered_json::array();
  for (const auto& [name, v] : r.top(top_k)) j["top"].push_back({{"feature", name}, {"attribution", v}});
  return j.dump(2) + "\n";
}

}  // namespace arable
