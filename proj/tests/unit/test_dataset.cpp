#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <set>

#include <gtest/gtest.h>

#include "arable/climate_features.hpp"
#include "arable/dataset.hpp"
#include "arable/error.hpp"
#include "arable/terrain_features.hpp"
#include "temp_dir.hpp"

using namespace arable;

namespace {

// Every canonical feature on a w x h grid; value encodes (column, pixel).
RasterSet feature_rasters(std::size_t w, std::size_t h) {
  RasterSet set;
  const auto& names = feature_names();
  for (std::size_t c = 0; c < names.size(); ++c) {
    Raster r(GridSpec{w, h, 0, 1, 0.1});
    for (std::size_t k = 0; k < r.size(); ++k) r[k] = static_cast<double>(c) * 1000.0 + static_cast<double>(k);
    set.emplace(names[c], std::move(r));
  }
  return set;
}

FeatureTable random_table(std::size_t n, unsigned seed, bool with_labels = true) {
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> nd(0, 10);
  FeatureTable t;
  t.columns = feature_names();
  t.data.resize(n * t.cols());
  for (auto& v : t.data) v = nd(gen);
  for (std::size_t r = 0; r < n; ++r) {
    t.pix_i.push_back(static_cast<std::uint32_t>(r / 100));
    t.pix_j.push_back(static_cast<std::uint32_t>(r % 100));
    t.labels.push_back(with_labels ? static_cast<int>(r % 4) : kNoLabel);
  }
  return t;
}

std::vector<int> labels_with_counts(std::array<std::size_t, 4> counts) {
  std::vector<int> labels;
  for (int c = 0; c < 4; ++c) labels.insert(labels.end(), counts[static_cast<std::size_t>(c)], c);
  std::mt19937_64 gen(99);
  std::shuffle(labels.begin(), labels.end(), gen);
  return labels;
}

}  // namespace

TEST(FeatureNames, ClimateThenTerrain) {
  const auto& names = feature_names();
  ASSERT_EQ(names.size(), 162u);
  EXPECT_EQ(names[0], climate_feature_names()[0]);
  EXPECT_EQ(names[120], "12m_SPI");
  EXPECT_EQ(names[121], "DEM_1km");
  EXPECT_EQ(names[161], terrain_feature_names().back());
  EXPECT_EQ(std::set<std::string>(names.begin(), names.end()).size(), 162u);
}

TEST(Assemble, FullGridAndColumnOrder) {
  const auto set = feature_rasters(2, 2);
  const FeatureTable t = assemble(set, nullptr);
  ASSERT_EQ(t.rows(), 4u);
  ASSERT_EQ(t.cols(), 162u);
  EXPECT_FALSE(t.labeled());
  for (std::size_t r = 0; r < 4; ++r)
    for (std::size_t c = 0; c < 162; ++c) EXPECT_EQ(t.row(r)[c], static_cast<double>(c) * 1000.0 + static_cast<double>(r));
  EXPECT_EQ(t.pix_i[3], 1u);
  EXPECT_EQ(t.pix_j[3], 1u);
}

TEST(Assemble, NodataFeatureOrMaskDropsRow) {
  auto set = feature_rasters(3, 2);
  set.at("tp_05").at(0, 1) = kNaN;
  Raster mask(GridSpec{3, 2, 0, 1, 0.1}, std::vector<double>{0, 1, 2, 3, kNaN, 1});
  const FeatureTable t = assemble(set, &mask);
  ASSERT_EQ(t.rows(), 4u);
  EXPECT_EQ(t.labels, (std::vector<int>{0, 2, 3, 1}));
  EXPECT_EQ(t.pix_j, (std::vector<std::uint32_t>{0, 2, 0, 2}));
}

TEST(Assemble, MissingFeatureAndSpecMismatch) {
  auto missing = feature_rasters(2, 2);
  missing.erase("DEM_1km");
  EXPECT_THROW(assemble(missing, nullptr), DataError);
  auto mismatched = feature_rasters(2, 2);
  mismatched.at("t2m_01") = Raster(GridSpec{3, 2, 0, 1, 0.1}, 1.0);
  EXPECT_THROW(assemble(mismatched, nullptr), DataError);
}

TEST(FeatureTable, ValidateRejectsWrongShapeAndNaN) {
  FeatureTable t = random_table(8, 1);
  EXPECT_NO_THROW(t.validate());
  t.data[17] = kNaN;
  EXPECT_THROW(t.validate(), DataError);
  FeatureTable ragged = random_table(8, 1);
  ragged.data.pop_back();
  EXPECT_THROW(ragged.validate(), DataError);
  FeatureTable bad_label = random_table(8, 1);
  bad_label.labels[2] = 4;
  EXPECT_THROW(bad_label.validate(), DataError);
}

TEST(Undersample, TableTwoCounts) {
  const std::array<std::size_t, 4> counts = {11732309, 146699, 586141, 1173203};
  const auto labels = labels_with_counts(counts);
  const auto idx = undersample_indices(labels, 7);
  std::vector<int> kept;
  kept.reserve(idx.size());
  for (auto i : idx) kept.push_back(labels[i]);
  const auto after = class_counts(kept);
  EXPECT_EQ(after[0], 1173203u);
  EXPECT_EQ(after[1], counts[1]);
  EXPECT_EQ(after[2], counts[2]);
  EXPECT_EQ(after[3], counts[3]);
  EXPECT_TRUE(std::is_sorted(idx.begin(), idx.end()));
}

TEST(Undersample, IdentityWhenMajorityAlreadySmall) {
  const std::vector<int> labels = {3, 0, 3, 3, 0, 3, 3, 3, 0, 3, 3, 3, 3, 0, 0};
  std::vector<std::size_t> all(labels.size());
  std::iota(all.begin(), all.end(), 0);
  EXPECT_EQ(undersample_indices(labels, 1), all);
}

TEST(Undersample, SeedDeterminesSelection) {
  const auto labels = labels_with_counts({500, 20, 30, 40});
  EXPECT_EQ(undersample_indices(labels, 5), undersample_indices(labels, 5));
  EXPECT_NE(undersample_indices(labels, 5), undersample_indices(labels, 6));
  const FeatureTable t = random_table(400, 2);
  const FeatureTable u = undersample(t, 3);
  EXPECT_EQ(u.rows(), 400u);  // balanced already
}

TEST(Split, StratifiedDisjointAndSeeded) {
  const auto labels = labels_with_counts({100, 100, 100, 100});
  const auto s = split_indices(labels, 0.75, 11);
  ASSERT_EQ(s.train.size(), 300u);
  ASSERT_EQ(s.test.size(), 100u);
  std::array<std::size_t, 4> tr{}, te{};
  for (auto i : s.train) ++tr[static_cast<std::size_t>(labels[i])];
  for (auto i : s.test) ++te[static_cast<std::size_t>(labels[i])];
  for (int c = 0; c < 4; ++c) {
    EXPECT_EQ(tr[static_cast<std::size_t>(c)], 75u);
    EXPECT_EQ(te[static_cast<std::size_t>(c)], 25u);
  }
  std::set<std::size_t> a(s.train.begin(), s.train.end());
  for (auto i : s.test) EXPECT_EQ(a.count(i), 0u);
  EXPECT_EQ(a.size() + s.test.size(), labels.size());
  EXPECT_TRUE(std::is_sorted(s.test.begin(), s.test.end()));
  const auto again = split_indices(labels, 0.75, 11);
  EXPECT_EQ(again.train, s.train);
  EXPECT_EQ(again.test, s.test);
}

TEST(Split, FractionsWithinOneRow) {
  const std::array<std::size_t, 4> counts = {37, 13, 91, 5};
  const auto labels = labels_with_counts(counts);
  const auto s = split_indices(labels, 0.75, 3);
  std::array<std::size_t, 4> tr{};
  for (auto i : s.train) ++tr[static_cast<std::size_t>(labels[i])];
  for (std::size_t c = 0; c < 4; ++c)
    EXPECT_LE(std::abs(static_cast<double>(tr[c]) - 0.75 * static_cast<double>(counts[c])), 1.0) << c;
}

TEST(Split, TinyClassRejected) {
  const auto labels = labels_with_counts({10, 3, 10, 10});
  EXPECT_THROW(split_indices(labels, 0.75, 1), DataError);
}

TEST(Scaler, MinMaxNoClipAndConstant) {
  FeatureTable train = random_table(9, 4);
  const std::size_t c0 = 0, cconst = 5;
  for (std::size_t r = 0; r < 9; ++r) {
    train.row(r)[c0] = 2.0 + static_cast<double>(r);
    train.row(r)[cconst] = 7.25;
  }
  const ScalerParams s = fit_scaler(train);
  EXPECT_EQ(s.min[c0], 2.0);
  EXPECT_EQ(s.max[c0], 10.0);
  FeatureTable future = train.select(std::vector<std::size_t>{0, 1});
  future.row(0)[c0] = 6.0;
  future.row(1)[c0] = 14.0;
  future.row(1)[cconst] = 100.0;
  const FeatureTable out = apply_scaler(future, s);
  EXPECT_DOUBLE_EQ(out.row(0)[c0], 0.5);
  EXPECT_DOUBLE_EQ(out.row(1)[c0], 1.5);
  EXPECT_EQ(out.row(0)[cconst], 0.0);
  EXPECT_EQ(out.row(1)[cconst], 0.0);

  const FeatureTable scaled = apply_scaler(train, s);
  for (double v : scaled.data) {
    EXPECT_GE(v, 0.0);
    EXPECT_LE(v, 1.0);
  }
}

TEST(Scaler, RoundingNoiseCountsAsConstant) {
  FeatureTable t = random_table(4, 5);
  for (std::size_t r = 0; r < 4; ++r) t.row(r)[3] = 1.6 + (r == 2 ? 2e-16 : 0.0);
  const FeatureTable out = apply_scaler(t, fit_scaler(t));
  for (std::size_t r = 0; r < 4; ++r) EXPECT_EQ(out.row(r)[3], 0.0);
}

TEST(Scaler, JsonRoundTrip) {
  TempDir dir;
  const ScalerParams s = fit_scaler(random_table(20, 6));
  write_scaler_json(s, dir / "scaler.json");
  const ScalerParams back = read_scaler_json(dir / "scaler.json");
  EXPECT_EQ(back.columns, s.columns);
  EXPECT_EQ(back.min, s.min);
  EXPECT_EQ(back.max, s.max);
}

TEST(Sequences, LayoutAndBroadcast) {
  const FeatureTable t = random_table(5, 7);
  const SequenceBatch s = to_sequences(t);
  ASSERT_EQ(s.n, 5u);
  ASSERT_EQ(s.data.size(), 5u * 12 * 52);
  const auto& ch = sequence_channel_names();
  ASSERT_EQ(ch.size(), 52u);
  const auto t2m = static_cast<std::size_t>(std::find(ch.begin(), ch.end(), "t2m") - ch.begin());
  const std::size_t col = t.column_index("t2m_03");
  EXPECT_EQ(s.at(2, 2, t2m), t.row(2)[col]);
  const std::size_t dem = t.column_index("DEM_1km");
  const auto dem_ch = static_cast<std::size_t>(std::find(ch.begin(), ch.end(), "DEM_1km") - ch.begin());
  for (std::size_t step = 0; step < 12; ++step) EXPECT_EQ(s.at(4, step, dem_ch), t.row(4)[dem]);
  for (std::size_t step = 0; step < 12; ++step)
    for (std::size_t c = 0; c < 52; ++c) EXPECT_EQ(s.at(1, step, c), t.row(1)[sequence_source_column(step, c)]);
}

TEST(Sequences, RoundTripIsExact) {
  const FeatureTable t = random_table(33, 8);
  EXPECT_EQ(from_sequences(to_sequences(t)), t.data);
}

TEST(Sequences, ResolvesColumnsByName) {
  const FeatureTable t = random_table(3, 9);
  FeatureTable swapped = t;
  std::swap(swapped.columns[0], swapped.columns[1]);
  for (std::size_t r = 0; r < 3; ++r) std::swap(swapped.row(r)[0], swapped.row(r)[1]);
  EXPECT_EQ(to_sequences(swapped).data, to_sequences(t).data);
  swapped.columns[7] = "unknown";
  EXPECT_THROW(to_sequences(swapped), DataError);
}

TEST(TableCsv, RoundTripWithManifest) {
  TempDir dir;
  FeatureTable t = random_table(12, 10);
  t.labels[3] = kNoLabel;
  write_table_csv(t, dir / "t.csv", 42);
  const FeatureTable back = read_table_csv(dir / "t.csv");
  EXPECT_EQ(back.columns, t.columns);
  EXPECT_EQ(back.data, t.data);
  EXPECT_EQ(back.labels, t.labels);
  EXPECT_EQ(back.pix_i, t.pix_i);
  EXPECT_EQ(back.pix_j, t.pix_j);
  EXPECT_TRUE(std::filesystem::exists(dir / "t.csv.json"));
  EXPECT_THROW(read_table_csv(dir / "absent.csv"), DataError);
}
