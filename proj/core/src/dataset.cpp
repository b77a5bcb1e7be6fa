#include "arable/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <unordered_map>

#include "arable/climate_features.hpp"
#include "arable/error.hpp"
#include "arable/random.hpp"
#include "arable/terrain_features.hpp"
#include "json.hpp"

namespace arable {

namespace fs = std::filesystem;
using ojson = nlohmann::ordered_json;

const std::vector<std::string>& feature_names() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> n = climate_feature_names();
    const auto terrain = terrain_feature_names();
    n.insert(n.end(), terrain.begin(), terrain.end());
    return n;
  }();
  return names;
}

bool FeatureTable::labeled() const {
  return !labels.empty() && std::none_of(labels.begin(), labels.end(),
                                         [](int l) { return l == kNoLabel; });
}

std::size_t FeatureTable::column_index(const std::string& name) const {
  const auto it = std::find(columns.begin(), columns.end(), name);
  if (it == columns.end()) throw DataError("feature table has no column '" + name + "'");
  return static_cast<std::size_t>(it - columns.begin());
}

FeatureTable FeatureTable::select(std::span<const std::size_t> idx) const {
  FeatureTable out;
  out.columns = columns;
  out.data.reserve(idx.size() * cols());
  out.labels.reserve(idx.size());
  for (std::size_t r : idx) {
    const auto src = row(r);
    out.data.insert(out.data.end(), src.begin(), src.end());
    out.labels.push_back(labels[r]);
    out.pix_i.push_back(pix_i[r]);
    out.pix_j.push_back(pix_j[r]);
  }
  return out;
}

void FeatureTable::validate() const {
  const std::size_t n = rows();
  if (data.size() != n * cols() || labels.size() != n || pix_j.size() != n)
    throw DataError("feature table has inconsistent lengths");
  for (double v : data)
    if (!std::isfinite(v)) throw DataError("feature table contains non-finite cells");
  for (int l : labels)
    if (l != kNoLabel && (l < 0 || l >= kNumClasses))
      throw DataError("feature table label out of range");
}

std::array<std::size_t, 4> class_counts(std::span<const int> labels) {
  std::array<std::size_t, 4> c{};
  for (int l : labels)
    if (l >= 0 && l < kNumClasses) ++c[static_cast<std::size_t>(l)];
  return c;
}

FeatureTable assemble(const RasterSet& features, const Raster* mask) {
  const auto& names = feature_names();
  std::vector<const Raster*> cols;
  cols.reserve(names.size());
  for (const auto& n : names) {
    const auto it = features.find(n);
    if (it == features.end()) throw DataError("assemble: missing feature raster '" + n + "'");
    cols.push_back(&it->second);
  }
  if (cols.size() != kFeatureCount)
    throw DataError("assemble: expected 162 feature columns, got " + std::to_string(cols.size()));
  const GridSpec spec = cols.front()->spec();
  for (std::size_t c = 0; c < cols.size(); ++c)
    if (!(cols[c]->spec() == spec))
      throw DataError("assemble: raster '" + names[c] + "' is on a different grid");
  if (mask) {
    if (!(mask->spec() == spec)) throw DataError("assemble: class mask is on a different grid");
    validate_class_mask(*mask);
  }

  FeatureTable t;
  t.columns = names;
  for (std::size_t p = 0; p < spec.size(); ++p) {
    if (mask && mask->is_nodata((*mask)[p])) continue;
    bool ok = true;
    for (const Raster* r : cols)
      if (r->is_nodata((*r)[p]) || !std::isfinite((*r)[p])) {
        ok = false;
        break;
      }
    if (!ok) continue;
    for (const Raster* r : cols) t.data.push_back((*r)[p]);
    t.labels.push_back(mask ? static_cast<int>((*mask)[p]) : kNoLabel);
    t.pix_i.push_back(static_cast<std::uint32_t>(p / spec.width));
    t.pix_j.push_back(static_cast<std::uint32_t>(p % spec.width));
  }
  return t;
}

std::vector<std::size_t> undersample_indices(std::span<const int> labels, std::uint64_t seed) {
  const auto counts = class_counts(labels);
  const std::size_t target = std::max({counts[1], counts[2], counts[3]});
  std::vector<std::size_t> zeros, keep;
  for (std::size_t r = 0; r < labels.size(); ++r) {
    if (labels[r] == 0)
      zeros.push_back(r);
    else
      keep.push_back(r);
  }
  if (zeros.size() > target) {
    Rng rng(seed);
    shuffle(std::span<std::size_t>(zeros), rng);
    zeros.resize(target);
  }
  keep.insert(keep.end(), zeros.begin(), zeros.end());
  std::sort(keep.begin(), keep.end());
  return keep;
}

FeatureTable undersample(const FeatureTable& t, std::uint64_t seed) {
  const auto idx = undersample_indices(t.labels, seed);
  return t.select(idx);
}

SplitIndices split_indices(std::span<const int> labels, double train_frac, std::uint64_t seed) {
  if (!(train_frac > 0.0 && train_frac < 1.0)) throw ConfigError("train fraction must lie in (0,1)");
  std::array<std::vector<std::size_t>, 4> by_class;
  for (std::size_t r = 0; r < labels.size(); ++r) {
    if (labels[r] < 0 || labels[r] >= kNumClasses) throw DataError("split needs labeled rows");
    by_class[static_cast<std::size_t>(labels[r])].push_back(r);
  }
  Rng rng(seed);
  SplitIndices out;
  for (std::size_t c = 0; c < by_class.size(); ++c) {
    auto& rows = by_class[c];
    if (rows.empty()) continue;
    if (rows.size() < 4)
      throw DataError("split: class " + std::to_string(c) + " has only " +
                      std::to_string(rows.size()) + " rows (need at least 4)");
    shuffle(std::span<std::size_t>(rows), rng);
    const auto n_train = static_cast<std::size_t>(std::llround(train_frac * static_cast<double>(rows.size())));
    out.train.insert(out.train.end(), rows.begin(), rows.begin() + static_cast<std::ptrdiff_t>(n_train));
    out.test.insert(out.test.end(), rows.begin() + static_cast<std::ptrdiff_t>(n_train), rows.end());
  }
  shuffle(std::span<std::size_t>(out.train), rng);
  std::sort(out.test.begin(), out.test.end());
  return out;
}

std::pair<FeatureTable, FeatureTable> split(const FeatureTable& t, double train_frac,
                                            std::uint64_t seed) {
  const auto idx = split_indices(t.labels, train_frac, seed);
  return {t.select(idx.train), t.select(idx.test)};
}

ScalerParams fit_scaler(const FeatureTable& train) {
  if (train.rows() == 0) throw DataError("cannot fit a scaler on an empty table");
  ScalerParams s;
  s.columns = train.columns;
  s.min.assign(train.cols(), std::numeric_limits<double>::infinity());
  s.max.assign(train.cols(), -std::numeric_limits<double>::infinity());
  for (std::size_t r = 0; r < train.rows(); ++r) {
    const auto row = train.row(r);
    for (std::size_t c = 0; c < row.size(); ++c) {
      s.min[c] = std::min(s.min[c], row[c]);
      s.max[c] = std::max(s.max[c], row[c]);
    }
  }
  return s;
}

FeatureTable apply_scaler(const FeatureTable& t, const ScalerParams& s) {
  if (s.columns != t.columns) throw DataError("scaler columns do not match table columns");
  FeatureTable out = t;
  for (std::size_t r = 0; r < out.rows(); ++r) {
    auto row = out.row(r);
    for (std::size_t c = 0; c < row.size(); ++c) {
      const double range = s.max[c] - s.min[c];
      const double scale = std::max({1.0, std::abs(s.min[c]), std::abs(s.max[c])});
      row[c] = range > 1e-12 * scale ? (row[c] - s.min[c]) / range : 0.0;
    }
  }
  return out;
}

const std::vector<std::string>& sequence_channel_names() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> n(monthly_feature_vars().begin(), monthly_feature_vars().end());
    n.emplace_back(kSpiFeatureName);
    const auto terrain = terrain_feature_names();
    n.insert(n.end(), terrain.begin(), terrain.end());
    return n;
  }();
  return names;
}

std::size_t sequence_source_column(std::size_t t, std::size_t ch) {
  if (ch < kMonthlyVarCount) return ch * 12 + t;
  return kMonthlyVarCount * 12 + (ch - kMonthlyVarCount);
}

SequenceBatch to_sequences(const FeatureTable& t) {
  // Resolve by name so tables with reordered columns still map correctly.
  std::unordered_map<std::string, std::size_t> where;
  for (std::size_t c = 0; c < t.columns.size(); ++c) where.emplace(t.columns[c], c);
  const auto& canon = feature_names();
  std::vector<std::size_t> src(kFeatureCount);
  for (std::size_t k = 0; k < kFeatureCount; ++k) {
    const auto it = where.find(canon[k]);
    if (it == where.end()) throw DataError("to_sequences: missing column '" + canon[k] + "'");
    src[k] = it->second;
  }
  SequenceBatch s;
  s.n = t.rows();
  s.data.resize(s.n * kSeqLen * kSeqChannels);
  for (std::size_t r = 0; r < s.n; ++r) {
    const auto row = t.row(r);
    double* out = s.data.data() + r * kSeqLen * kSeqChannels;
    for (std::size_t step = 0; step < kSeqLen; ++step)
      for (std::size_t ch = 0; ch < kSeqChannels; ++ch)
        out[step * kSeqChannels + ch] = row[src[sequence_source_column(step, ch)]];
  }
  return s;
}

std::vector<double> from_sequences(const SequenceBatch& s) {
  std::vector<double> out(s.n * kFeatureCount);
  for (std::size_t r = 0; r < s.n; ++r)
    for (std::size_t step = 0; step < kSeqLen; ++step)
      for (std::size_t ch = 0; ch < kSeqChannels; ++ch) {
        if (ch >= kMonthlyVarCount && step > 0) continue;
        out[r * kFeatureCount + sequence_source_column(step, ch)] = s.at(r, step, ch);
      }
  return out;
}

// ---------------------------------------------------------------------------

namespace {

void append_double(std::string& out, double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  out.append(buf, res.ptr);
}

double parse_double(std::string_view s, const fs::path& path, std::size_t line) {
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size())
    throw DataError(path.string() + ":" + std::to_string(line) + ": bad number '" +
                    std::string(s) + "'");
  return v;
}

std::vector<std::string_view> split_csv(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(',', start);
    if (pos == std::string_view::npos) {
      out.push_back(line.substr(start));
      break;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
  return out;
}

void write_file(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out << text;
}

}  // namespace

void write_table_csv(const FeatureTable& t, const fs::path& path, std::uint64_t seed) {
  std::string out;
  out.reserve(t.data.size() * 20);
  for (const auto& c : t.columns) {
    out += c;
    out += ',';
  }
  out += "label,pix_i,pix_j\n";
  for (std::size_t r = 0; r < t.rows(); ++r) {
    for (double v : t.row(r)) {
      append_double(out, v);
      out += ',';
    }
    out += std::to_string(t.labels[r]);
    out += ',';
    out += std::to_string(t.pix_i[r]);
    out += ',';
    out += std::to_string(t.pix_j[r]);
    out += '\n';
  }
  write_file(path, out);

  ojson m;
  m["columns"] = t.columns;
  m["seed"] = seed;
  const auto counts = class_counts(t.labels);
  m["counts"] = ojson::object();
  for (std::size_t c = 0; c < counts.size(); ++c) m["counts"][std::to_string(c)] = counts[c];
  m["rows"] = t.rows();
  write_file(fs::path(path.string() + ".json"), m.dump(2) + "\n");
}

FeatureTable read_table_csv(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open feature table " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw DataError("empty feature table " + path.string());
  const auto header = split_csv(line);
  if (header.size() < 3 || header[header.size() - 3] != "label" ||
      header[header.size() - 2] != "pix_i" || header.back() != "pix_j")
    throw DataError(path.string() + ": header must end with label,pix_i,pix_j");
  FeatureTable t;
  for (std::size_t c = 0; c + 3 < header.size(); ++c) t.columns.emplace_back(header[c]);
  const std::size_t nc = t.columns.size();
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto fields = split_csv(line);
    if (fields.size() != nc + 3)
      throw DataError(path.string() + ":" + std::to_string(lineno) + ": wrong field count");
    for (std::size_t c = 0; c < nc; ++c) t.data.push_back(parse_double(fields[c], path, lineno));
    t.labels.push_back(static_cast<int>(parse_double(fields[nc], path, lineno)));
    t.pix_i.push_back(static_cast<std::uint32_t>(parse_double(fields[nc + 1], path, lineno)));
    t.pix_j.push_back(static_cast<std::uint32_t>(parse_double(fields[nc + 2], path, lineno)));
  }
  return t;
}

void write_scaler_json(const ScalerParams& s, const fs::path& path) {
  ojson m = ojson::object();
  for (std::size_t c = 0; c < s.columns.size(); ++c) m[s.columns[c]] = {s.min[c], s.max[c]};
  write_file(path, m.dump(2) + "\n");
}

ScalerParams read_scaler_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open scaler " + path.string());
  ScalerParams s;
  try {
    const ojson m = ojson::parse(in);
    for (const auto& [name, mm] : m.items()) {
      s.columns.push_back(name);
      s.min.push_back(mm.at(0).get<double>());
      s.max.push_back(mm.at(1).get<double>());
    }
  } catch (const ojson::exception& e) {
    throw DataError("malformed scaler " + path.string() + ": " + e.what());
  }
  return s;
}

}  // namespace arable
