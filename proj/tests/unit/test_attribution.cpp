#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <set>

#include <gtest/gtest.h>

#include "arable/attribution.hpp"
#include "arable/dataset.hpp"
#include "arable/error.hpp"
#include "arable/metrics.hpp"
#include "temp_dir.hpp"

using namespace arable;

namespace {

Matrix random_matrix(Eigen::Index rows, Eigen::Index cols, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> nd(0, 1);
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = nd(gen);
  return m;
}

std::vector<int> labels_of(const Model& m, const Matrix& x) { return predict_labels(m, x); }

void perturb(Model& m, std::uint64_t seed, double sd) {
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> nd(0, sd);
  for (auto& p : m.params()) p += nd(gen);
}

void check_partition(const std::vector<FeatureGroup>& groups, std::size_t width) {
  std::vector<int> seen(width, 0);
  for (const auto& g : groups)
    for (auto c : g.columns) {
      ASSERT_LT(c, width);
      ++seen[c];
    }
  for (std::size_t c = 0; c < width; ++c) EXPECT_EQ(seen[c], 1) << c;
}

}  // namespace

TEST(Groups, ShapesAndCoverage) {
  const auto seq = sequence_channel_groups();
  ASSERT_EQ(seq.size(), 52u);
  for (const auto& g : seq) EXPECT_EQ(g.columns.size(), 12u);
  check_partition(seq, 12 * 52);

  const auto flat = flat_variable_groups();
  ASSERT_EQ(flat.size(), 52u);
  check_partition(flat, 162);
  EXPECT_EQ(flat[2].name, "t2m");
  EXPECT_EQ(flat[2].columns.size(), 12u);

  const auto cols = flat_column_groups();
  ASSERT_EQ(cols.size(), 162u);
  check_partition(cols, 162);
  EXPECT_EQ(cols[5].name, feature_names()[5]);

  const auto named = named_feature_groups(ModelKind::Lstm);
  ASSERT_EQ(named.size(), 162u);
  check_partition(named, 12 * 52);
  std::set<std::string> names;
  for (const auto& g : named) names.insert(g.name);
  EXPECT_EQ(names, std::set<std::string>(feature_names().begin(), feature_names().end()));
  const std::set<std::string> monthly(feature_names().begin(), feature_names().begin() + 120);
  for (const auto& g : named) EXPECT_EQ(g.columns.size(), monthly.count(g.name) ? 1u : 12u) << g.name;

  EXPECT_EQ(variable_groups_for(ModelKind::Lstm).size(), 52u);
  EXPECT_EQ(variable_groups_for(ModelKind::Mlp)[0].columns.size(), 12u);
}

TEST(Importance, IgnoredFeatureIsExactlyZero) {
  auto m = make_logreg(6, 3);
  for (std::size_t c = 0; c < 4; ++c) m->params()[c * 6 + 2] = 0.0;
  const Matrix x = random_matrix(120, 6, 4);
  const auto y = labels_of(*m, random_matrix(120, 6, 5));
  std::vector<FeatureGroup> groups;
  for (std::size_t k = 0; k < 6; ++k) groups.push_back({"f" + std::to_string(k), {k}});
  const auto r = permutation_importance(*m, x, y, groups, 5, 11);
  EXPECT_EQ(r.features[2].importance, 0.0);
  for (double s : r.features[2].scores) EXPECT_EQ(s, r.reference);
}

TEST(Importance, IdentityAndDefaultScore) {
  auto m = make_mlp(5, {7}, 2);
  perturb(*m, 1, 0.5);
  const Matrix x = random_matrix(200, 5, 6);
  std::vector<int> y = labels_of(*m, x);
  for (std::size_t k = 0; k < y.size(); k += 5) y[k] = (y[k] + 1) % 4;
  std::vector<FeatureGroup> groups;
  for (std::size_t k = 0; k < 5; ++k) groups.push_back({"f" + std::to_string(k), {k}});
  const auto r = permutation_importance(*m, x, y, groups, 4, 3);
  EXPECT_EQ(r.repeats, 4);
  EXPECT_EQ(r.reference, macro_precision(y, labels_of(*m, x)));
  for (const auto& f : r.features) {
    ASSERT_EQ(f.scores.size(), 4u);
    EXPECT_EQ(f.importance, ImportanceReport::importance_of(r.reference, f.scores));
    const double mean = std::accumulate(f.scores.begin(), f.scores.end(), 0.0) / 4.0;
    EXPECT_NEAR(f.importance, r.reference - mean, 1e-15);
  }
  const auto rank = r.ranking();
  for (std::size_t k = 1; k < rank.size(); ++k)
    EXPECT_GE(r.features[rank[k - 1]].importance, r.features[rank[k]].importance);
}

TEST(Importance, SeededAndValidated) {
  auto m = make_mlp(4, {5}, 2);
  perturb(*m, 7, 0.5);
  const Matrix x = random_matrix(80, 4, 1);
  const auto y = labels_of(*m, random_matrix(80, 4, 2));
  std::vector<FeatureGroup> groups = {{"a", {0, 1}}, {"b", {2}}, {"c", {3}}};
  const auto a = permutation_importance(*m, x, y, groups, 1, 5);
  const auto b = permutation_importance(*m, x, y, groups, 1, 5);
  for (std::size_t k = 0; k < 3; ++k) EXPECT_EQ(a.features[k].scores, b.features[k].scores);
  EXPECT_THROW(permutation_importance(*m, x, y, groups, 0, 5), ConfigError);
  std::vector<FeatureGroup> bad = {{"z", {9}}};
  EXPECT_THROW(permutation_importance(*m, x, y, bad, 1, 5), DataError);
}

TEST(Importance, OnePermutationAcrossTimesteps) {
  // Logit 1 sees x[t=0] - x[t=11] of one channel; with a static channel the
  // two copies agree in every row, so only a shared permutation keeps the
  // difference at zero.
  const std::size_t width = 12 * 52, ch = 30;
  auto m = make_logreg(width, 1);
  std::fill(m->params().begin(), m->params().end(), 0.0);
  m->params()[1 * width + ch] = 5.0;
  m->params()[1 * width + 11 * 52 + ch] = -5.0;
  m->params()[width * 4 + 0] = 1.0;  // class 0 wins whenever logit 1 is 0
  Matrix x = random_matrix(100, static_cast<Eigen::Index>(width), 8);
  for (Eigen::Index r = 0; r < 100; ++r)
    for (std::size_t t = 1; t < 12; ++t) x(r, static_cast<Eigen::Index>(t * 52 + ch)) = x(r, static_cast<Eigen::Index>(ch));
  const std::vector<int> y(100, 0);
  const auto r = permutation_importance(*m, x, y, sequence_channel_groups(), 3, 2);
  EXPECT_EQ(r.features[ch].importance, 0.0);
}

TEST(IntegratedGradients, ZeroWhenInputIsBaseline) {
  auto m = make_mlp(6, {5}, 1);
  const std::vector<double> x = {0.1, -0.2, 0.3, 0.4, -0.5, 0.6};
  const auto ig = integrated_gradients(*m, x, x, 2, 32);
  for (double a : ig.attribution) EXPECT_EQ(a, 0.0);
  EXPECT_EQ(ig.residual, 0.0);
}

TEST(IntegratedGradients, ExactOnLinearModel) {
  auto m = make_logreg(8, 4);
  std::mt19937_64 gen(2);
  std::normal_distribution<double> nd(0, 2);
  std::vector<double> x(8), b(8);
  for (auto& v : x) v = nd(gen);
  for (auto& v : b) v = nd(gen);
  for (int steps : {1, 3, 256}) {
    const auto ig = integrated_gradients(*m, x, b, 3, steps);
    for (std::size_t k = 0; k < 8; ++k) EXPECT_NEAR(ig.attribution[k], m->params()[3 * 8 + k] * (x[k] - b[k]), 1e-12);
    EXPECT_LE(ig.residual, 1e-12);
  }
}

TEST(IntegratedGradients, CompletenessOnNonlinearModels) {
  std::vector<std::unique_ptr<Model>> models;
  models.push_back(make_mlp(24, {16, 8}, 1));
  models.push_back(make_lstm(2, 12, 5, 2));
  perturb(*models[1], 3, 0.3);
  for (auto& m : models) {
    const Matrix xs = random_matrix(2, 24, 9);
    const std::vector<double> x(xs.row(0).data(), xs.row(0).data() + 24), b(xs.row(1).data(), xs.row(1).data() + 24);
    const auto ig = integrated_gradients(*m, x, b, 1, 256);
    const double gap = ig.f_input - ig.f_baseline;
    EXPECT_LE(ig.residual, 1e-3 * std::max(1.0, std::abs(gap))) << model_kind_name(m->kind());
    EXPECT_NEAR(ig.residual, std::abs(ig.sum() - gap), 1e-12);
    const double r64 = integrated_gradients(*m, x, b, 1, 64).residual;
    const double r1024 = integrated_gradients(*m, x, b, 1, 1024).residual;
    EXPECT_LE(r1024, r64);
  }
}

TEST(IntegratedGradients, Validation) {
  auto m = make_logreg(3, 1);
  const std::vector<double> x = {1, 2, 3};
  EXPECT_THROW(integrated_gradients(*m, x, x, 0, 0), ConfigError);
  EXPECT_THROW(integrated_gradients(*m, x, std::vector<double>{1, 2}, 0, 4), DataError);
}

TEST(Regions, ReferenceRectangles) {
  const auto& r = reference_regions();
  ASSERT_EQ(r.size(), 3u);
  EXPECT_EQ(r[0].target_class, 1);
  EXPECT_EQ(r[1].target_class, 2);
  EXPECT_EQ(r[2].target_class, 3);
  EXPECT_TRUE(r[0].contains(44.0, 125.0));
  EXPECT_FALSE(r[0].contains(46.0, 125.0));
  EXPECT_TRUE(r[2].contains(60.0, 70.0));
}

class RegionTest : public ::testing::Test {
 protected:
  // 4 x 3 grid of 1-degree cells with its north-west corner at (10N, 0E).
  GridSpec grid{4, 3, 0.0, 10.0, 1.0};
  Matrix hist = random_matrix(12, 6, 1);
  Matrix scen = random_matrix(12, 6, 2);
  std::vector<std::uint32_t> pi, pj;
  std::unique_ptr<Model> model = make_mlp(6, {5}, 3);

  void SetUp() override {
    for (std::uint32_t i = 0; i < 3; ++i)
      for (std::uint32_t j = 0; j < 4; ++j) {
        pi.push_back(i);
        pj.push_back(j);
      }
  }
  PixelRows rows(const Matrix& m) { return {&m, pi, pj}; }
  std::vector<FeatureGroup> groups() { return {{"ab", {0, 1}}, {"c", {2}}, {"def", {3, 4, 5}}}; }
};

TEST_F(RegionTest, SinglePixelEqualsPlainIg) {
  const GeoRect one{"one", 8.9, 2.1, 8.1, 2.9, 2};  // pixel (1, 2) centred at (8.5N, 2.5E)
  const auto r = region_attribution(*model, one, grid, rows(scen), rows(hist), groups(), 2, 64);
  ASSERT_EQ(r.pixels, 1u);
  const std::size_t row = 1 * 4 + 2;
  const auto ig = integrated_gradients(*model, {scen.row(row).data(), 6}, {hist.row(row).data(), 6}, 2, 64);
  for (std::size_t k = 0; k < 6; ++k) EXPECT_EQ(r.mean_attribution[k], ig.attribution[k]);
  EXPECT_EQ(r.features[0].second, ig.attribution[0] + ig.attribution[1]);
  EXPECT_EQ(r.features[2].first, "def");
}

TEST_F(RegionTest, MeanOverPixelsAndTopK) {
  const GeoRect band{"band", 10.0, 0.0, 9.0, 4.0, 1};  // first row
  const auto r = region_attribution(*model, band, grid, rows(scen), rows(hist), groups(), 1, 32);
  ASSERT_EQ(r.pixels, 4u);
  std::vector<double> expect(6, 0.0);
  for (std::size_t row = 0; row < 4; ++row) {
    const auto ig = integrated_gradients(*model, {scen.row(static_cast<Eigen::Index>(row)).data(), 6},
                                         {hist.row(static_cast<Eigen::Index>(row)).data(), 6}, 1, 32);
    for (std::size_t k = 0; k < 6; ++k) expect[k] += ig.attribution[k];
  }
  for (std::size_t k = 0; k < 6; ++k) EXPECT_NEAR(r.mean_attribution[k], expect[k] / 4, 1e-15);
  const auto top = r.top(2);
  ASSERT_EQ(top.size(), 2u);
  EXPECT_GE(std::abs(top[0].second), std::abs(top[1].second));
}

TEST_F(RegionTest, ScenarioEqualToHistoryGivesZero) {
  const GeoRect all{"all", 10, 0, 7, 4, 3};
  const auto r = region_attribution(*model, all, grid, rows(hist), rows(hist), groups(), 3, 16);
  EXPECT_EQ(r.pixels, 12u);
  for (double v : r.mean_attribution) EXPECT_EQ(v, 0.0);
}

TEST_F(RegionTest, EmptyRegionRejected) {
  const GeoRect none{"none", 50, 50, 40, 60, 1};
  EXPECT_THROW(region_attribution(*model, none, grid, rows(scen), rows(hist), groups(), 1, 8), DataError);
}

TEST(Reports, CsvAndJson) {
  TempDir dir;
  ImportanceReport r;
  r.reference = 0.8;
  r.repeats = 2;
  r.features = {{"a", 0.1, {0.7, 0.7}}, {"b", 0.3, {0.5, 0.5}}};
  write_importance_csv(r, dir / "imp.csv");
  std::ifstream f(dir / "imp.csv");
  std::string header, first;
  std::getline(f, header);
  std::getline(f, first);
  EXPECT_EQ(header, "feature,importance,rank");
  EXPECT_EQ(first, "a,0.1,2");  // table order, rank by importance
  const std::string j = importance_json(r);
  EXPECT_NE(j.find("\"reference_score\""), std::string::npos);
  EXPECT_LT(j.find("\"b\""), j.find("\"a\""));
}
