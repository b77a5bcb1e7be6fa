#include "arable/metrics.hpp"

#include <algorithm>
#include <cstdio>
#include <numeric>
#include <vector>

#include "arable/error.hpp"
#include "json.hpp"

namespace arable {

std::uint64_t ConfusionMatrix::total() const {
  std::uint64_t t = 0;
  for (const auto& row : counts)
    for (auto v : row) t += v;
  return t;
}

ConfusionMatrix confusion(std::span<const int> y_true, std::span<const int> y_pred) {
  if (y_true.size() != y_pred.size()) throw DataError("confusion: label vectors differ in length");
  ConfusionMatrix cm;
  for (std::size_t k = 0; k < y_true.size(); ++k) {
    const int t = y_true[k], p = y_pred[k];
    if (t < 0 || t >= kNumClasses || p < 0 || p >= kNumClasses)
      throw DataError("confusion: label outside 0..3");
    ++cm.counts[static_cast<std::size_t>(t)][static_cast<std::size_t>(p)];
  }
  return cm;
}

namespace {
double safe_ratio(double num, double den) { return den > 0.0 ? num / den : 0.0; }
}  // namespace

MetricsReport scores(const ConfusionMatrix& cm) {
  MetricsReport r;
  const auto n = static_cast<double>(cm.total());
  double diag = 0.0;
  for (std::size_t c = 0; c < kNumClasses; ++c) {
    double col = 0.0, row = 0.0;
    for (std::size_t k = 0; k < kNumClasses; ++k) {
      col += static_cast<double>(cm.counts[k][c]);
      row += static_cast<double>(cm.counts[c][k]);
    }
    const auto tp = static_cast<double>(cm.counts[c][c]);
    diag += tp;
    ClassScores& s = r.per_class[c];
    s.precision = safe_ratio(tp, col);
    s.recall = safe_ratio(tp, row);
    // Harmonic mean of P and R written over the counts: 2TP / (2TP + FP + FN).
    s.f1 = safe_ratio(2.0 * tp, col + row);
    s.support = static_cast<std::uint64_t>(row);
  }
  for (const auto& s : r.per_class) {
    r.macro_precision += s.precision;
    r.macro_recall += s.recall;
    r.macro_f1 += s.f1;
  }
  r.macro_precision /= kNumClasses;
  r.macro_recall /= kNumClasses;
  r.macro_f1 /= kNumClasses;
  r.accuracy = safe_ratio(diag, n);
  return r;
}

double macro_f1(std::span<const int> y_true, std::span<const int> y_pred) {
  return scores(confusion(y_true, y_pred)).macro_f1;
}

double macro_precision(std::span<const int> y_true, std::span<const int> y_pred) {
  return scores(confusion(y_true, y_pred)).macro_precision;
}

double average_precision(std::span<const int> is_positive, std::span<const double> score) {
  if (is_positive.size() != score.size())
    throw DataError("average_precision: labels and scores differ in length");
  const auto positives = static_cast<double>(
      std::count_if(is_positive.begin(), is_positive.end(), [](int v) { return v != 0; }));
  if (positives == 0.0) return 0.0;
  std::vector<std::size_t> order(score.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return score[a] > score[b]; });
  double ap = 0.0, tp = 0.0, seen = 0.0, prev_recall = 0.0;
  std::size_t k = 0;
  while (k < order.size()) {
    const double thr = score[order[k]];
    while (k < order.size() && score[order[k]] == thr) {
      tp += is_positive[order[k]] != 0 ? 1.0 : 0.0;
      seen += 1.0;
      ++k;
    }
    const double recall = tp / positives;
    ap += (recall - prev_recall) * (tp / seen);
    prev_recall = recall;
  }
  return ap;
}

MetricsReport evaluate(std::span<const int> y_true, std::span<const double> probs) {
  const std::size_t n = y_true.size();
  if (probs.size() != n * kNumClasses) throw DataError("evaluate: probability matrix shape mismatch");
  std::vector<int> pred(n);
  for (std::size_t r = 0; r < n; ++r) {
    const double* p = probs.data() + r * kNumClasses;
    pred[r] = static_cast<int>(std::max_element(p, p + kNumClasses) - p);
  }
  MetricsReport rep = scores(confusion(y_true, pred));
  std::vector<int> pos(n);
  std::vector<double> col(n);
  for (std::size_t c = 0; c < kNumClasses; ++c) {
    for (std::size_t r = 0; r < n; ++r) {
      pos[r] = y_true[r] == static_cast<int>(c);
      col[r] = probs[r * kNumClasses + c];
    }
    rep.per_class[c].average_precision = average_precision(pos, col);
    rep.macro_average_precision += rep.per_class[c].average_precision;
  }
  rep.macro_average_precision /= kNumClasses;
  rep.has_average_precision = true;
  return rep;
}

std::string report_json(const MetricsReport& r) {
  nlohmann::ordered_json j;
  j["accuracy"] = r.accuracy;
  j["macro"] = {{"precision", r.macro_precision},
                {"recall", r.macro_recall},
                {"f1", r.macro_f1}};
  if (r.has_average_precision) j["macro"]["average_precision"] = r.macro_average_precision;
  j["per_class"] = nlohmann::ordered_json::array();
  for (std::size_t c = 0; c < kNumClasses; ++c) {
    const auto& s = r.per_class[c];
    nlohmann::ordered_json e = {{"class", c},
                                {"precision", s.precision},
                                {"recall", s.recall},
                                {"f1", s.f1}};
    if (r.has_average_precision) e["average_precision"] = s.average_precision;
    e["support"] = s.support;
    j["per_class"].push_back(e);
  }
  return j.dump(2) + "\n";
}

std::string report_table(const MetricsReport& r, const std::string& model_name) {
  std::string out;
  char buf[256];
  std::snprintf(buf, sizeof buf, "%-8s %9s %11s %9s %9s %9s\n", "Model", "Accuracy",
                "Precision", "Recall", "F1", "AP");
  out += buf;
  std::snprintf(buf, sizeof buf, "%-8s %9.2f %11.2f %9.2f %9.2f %9.2f\n", model_name.c_str(),
                r.accuracy, r.macro_precision, r.macro_recall, r.macro_f1,
                r.macro_average_precision);
  out += buf;
  out += "\n";
  std::snprintf(buf, sizeof buf, "%-8s %9s %9s %9s %9s %9s\n", "Class", "Precision", "Recall",
                "F1", "AP", "Support");
  out += buf;
  for (std::size_t c = 0; c < kNumClasses; ++c) {
    const auto& s = r.per_class[c];
    std::snprintf(buf, sizeof buf, "%-8zu %9.2f %9.2f %9.2f %9.2f %9llu\n", c, s.precision,
                  s.recall, s.f1, s.average_precision,
                  static_cast<unsigned long long>(s.support));
    out += buf;
  }
  return out;
}

}  // namespace arable
