#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "arable/error.hpp"
#include "arable/metrics.hpp"
#include "metric_oracle.hpp"

using namespace arable;

TEST(Confusion, DiagonalAndAntiDiagonal) {
  const std::vector<int> y = {0, 1, 2, 3, 3};
  const auto cm = confusion(y, y);
  for (std::size_t i = 0; i < 4; ++i)
    for (std::size_t j = 0; j < 4; ++j) EXPECT_EQ(cm.counts[i][j], i == j ? (i == 3 ? 2u : 1u) : 0u);
  const auto anti = confusion(std::vector<int>{0, 1}, std::vector<int>{1, 0});
  EXPECT_EQ(anti.counts[0][1], 1u);
  EXPECT_EQ(anti.counts[1][0], 1u);
  EXPECT_EQ(anti.counts[0][0] + anti.counts[1][1], 0u);
  EXPECT_EQ(cm.total(), 5u);
}

TEST(Confusion, RandomTallyMatchesCounting) {
  std::mt19937 gen(3);
  std::uniform_int_distribution<int> u(0, 3);
  std::vector<int> t(200), p(200);
  for (auto& v : t) v = u(gen);
  for (auto& v : p) v = u(gen);
  const auto cm = confusion(t, p);
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) {
      std::uint64_t n = 0;
      for (std::size_t k = 0; k < 200; ++k) n += t[k] == i && p[k] == j;
      EXPECT_EQ(cm.counts[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)], n);
    }
}

TEST(Confusion, RejectsBadInput) {
  EXPECT_THROW(confusion(std::vector<int>{0, 1}, std::vector<int>{0}), DataError);
  EXPECT_THROW(confusion(std::vector<int>{4}, std::vector<int>{0}), DataError);
}

TEST(Scores, AllCorrect) {
  const std::vector<int> y = {0, 1, 2, 3, 0, 1};
  const auto r = scores(confusion(y, y));
  EXPECT_EQ(r.accuracy, 1.0);
  EXPECT_EQ(r.macro_f1, 1.0);
  for (const auto& s : r.per_class) {
    EXPECT_EQ(s.precision, 1.0);
    EXPECT_EQ(s.recall, 1.0);
  }
}

TEST(Scores, AbsentClassCountsAsZero) {
  const std::vector<int> y = {0, 1, 2, 0};
  const auto r = scores(confusion(y, y));
  EXPECT_EQ(r.per_class[3].f1, 0.0);
  EXPECT_EQ(r.macro_f1, 0.75);
}

TEST(Scores, HandCase) {
  // Class 1: TP = 3, FP = 1, FN = 2.
  const std::vector<int> t = {1, 1, 1, 1, 1, 0};
  const std::vector<int> p = {1, 1, 1, 0, 0, 1};
  const auto s = scores(confusion(t, p)).per_class[1];
  EXPECT_DOUBLE_EQ(s.precision, 0.75);
  EXPECT_DOUBLE_EQ(s.recall, 0.6);
  EXPECT_NEAR(s.f1, 2.0 / (1 / 0.75 + 1 / 0.6), 1e-15);
  EXPECT_EQ(s.support, 5u);
}

TEST(Scores, MacroBoundedByBestClass) {
  std::mt19937 gen(5);
  std::uniform_int_distribution<int> u(0, 3);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<int> t(30), p(30);
    for (auto& v : t) v = u(gen);
    for (auto& v : p) v = u(gen);
    const auto r = scores(confusion(t, p));
    double best = 0;
    for (const auto& s : r.per_class) best = std::max(best, s.f1);
    EXPECT_LE(r.macro_f1, best);
  }
}

TEST(Scores, ExhaustiveSmallCases) {
  const auto res = check::exhaustive_label_check(4);
  EXPECT_GT(res.cases, 60000u);
  EXPECT_EQ(res.mismatches, 0u);
}

TEST(AveragePrecision, HandCases) {
  EXPECT_EQ(average_precision(std::vector<int>{1, 1, 0, 0}, std::vector<double>{0.9, 0.8, 0.3, 0.1}), 1.0);
  EXPECT_DOUBLE_EQ(average_precision(std::vector<int>{0, 1, 0}, std::vector<double>{0.9, 0.5, 0.1}), 0.5);
  EXPECT_EQ(average_precision(std::vector<int>{0, 0}, std::vector<double>{0.2, 0.1}), 0.0);
  // A tie between a positive and a negative is one threshold: P = 1/2.
  EXPECT_DOUBLE_EQ(average_precision(std::vector<int>{1, 0}, std::vector<double>{0.5, 0.5}), 0.5);
}

TEST(AveragePrecision, MonotoneTransformInvariant) {
  std::mt19937 gen(9);
  std::uniform_real_distribution<double> u(0, 1);
  std::bernoulli_distribution b(0.3);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<int> pos(40);
    std::vector<double> s(40), e(40);
    for (std::size_t k = 0; k < 40; ++k) {
      pos[k] = b(gen);
      s[k] = u(gen);
      e[k] = std::exp(3 * s[k]) - 7;
    }
    EXPECT_EQ(average_precision(pos, s), average_precision(pos, e));
  }
}

TEST(AveragePrecision, ExhaustiveSmallCases) {
  const auto res = check::exhaustive_ap_check(5);
  EXPECT_GT(res.cases, 100000u);
  EXPECT_EQ(res.mismatches, 0u);
}

TEST(Evaluate, ArgmaxAndPerClassAp) {
  const std::vector<int> y = {0, 1, 2, 3};
  const std::vector<double> probs = {0.7, 0.1, 0.1, 0.1,  //
                                     0.2, 0.5, 0.2, 0.1,  //
                                     0.1, 0.6, 0.2, 0.1,  //
                                     0.1, 0.1, 0.1, 0.7};
  const auto r = evaluate(y, probs);
  EXPECT_EQ(r.accuracy, 0.75);
  EXPECT_TRUE(r.has_average_precision);
  EXPECT_EQ(r.per_class[0].average_precision, 1.0);
  EXPECT_EQ(r.per_class[3].average_precision, 1.0);
  // Class 2's positive scores 0.2, tied with one negative: P = 1/2.
  EXPECT_DOUBLE_EQ(r.per_class[2].average_precision, 0.5);
  EXPECT_THROW(evaluate(y, std::vector<double>(15, 0.25)), DataError);
}

TEST(Report, JsonAndTable) {
  const std::vector<int> y = {0, 1, 2, 3};
  const auto r = evaluate(y, std::vector<double>(16, 0.25));
  const std::string j = report_json(r);
  EXPECT_NE(j.find("\"macro\""), std::string::npos);
  EXPECT_NE(j.find("\"average_precision\""), std::string::npos);
  const std::string t = report_table(r, "lstm");
  EXPECT_NE(t.find("lstm"), std::string::npos);
  EXPECT_NE(t.find("Support"), std::string::npos);
}
