#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>

#include "arable/grid.hpp"

namespace arable {

// Rows are true classes, columns predicted classes.
struct ConfusionMatrix {
  std::array<std::array<std::uint64_t, kNumClasses>, kNumClasses> counts{};
  std::uint64_t total() const;
};

struct ClassScores {
  double precision = 0, recall = 0, f1 = 0, average_precision = 0;
  std::uint64_t support = 0;
};

struct MetricsReport {
  double accuracy = 0;
  std::array<ClassScores, kNumClasses> per_class{};
  double macro_precision = 0, macro_recall = 0, macro_f1 = 0, macro_average_precision = 0;
  bool has_average_precision = false;
};

ConfusionMatrix confusion(std::span<const int> y_true, std::span<const int> y_pred);

// Precision, recall and F1 per class with 0/0 -> 0; macro is the plain mean
// over all four classes.
MetricsReport scores(const ConfusionMatrix& cm);

double macro_f1(std::span<const int> y_true, std::span<const int> y_pred);
double macro_precision(std::span<const int> y_true, std::span<const int> y_pred);

// Step-wise average precision, sum over distinct thresholds (descending, ties
// grouped) of (R_k - R_{k-1}) * P_k. Zero when there are no positives.
double average_precision(std::span<const int> is_positive, std::span<const double> score);

// Full report from labels and an N x 4 row-major probability matrix.
MetricsReport evaluate(std::span<const int> y_true, std::span<const double> probs);

std::string report_json(const MetricsReport& r);
// Aligned text: one summary row plus per-class rows with support.
std::string report_table(const MetricsReport& r, const std::string& model_name);

}  // namespace arable
