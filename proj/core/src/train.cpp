#include <algorithm>
#include <cmath>
#include <numeric>

#include <spdlog/spdlog.h>

#include "arable/error.hpp"
#include "arable/metrics.hpp"
#include "arable/model.hpp"
#include "arable/random.hpp"

namespace arable {

namespace {

void check_data(const LabeledData& d, const char* what) {
  if (d.x.rows() == 0) throw DataError(std::string(what) + " split is empty");
  if (static_cast<std::size_t>(d.x.rows()) != d.y.size())
    throw DataError(std::string(what) + " split: rows and labels differ");
}

// Seed streams derived from the run seed so init and shuffling are independent.
constexpr std::uint64_t kShuffleStream = 0x9E3779B97F4A7C15ull;

}  // namespace

TrainResult train(const ModelSpec& spec, const LabeledData& train_set, const LabeledData* val,
                  const TrainConfig& cfg) {
  check_data(train_set, "training");
  if (val) check_data(*val, "validation");
  if (cfg.epochs < 1) throw ConfigError("epochs must be >= 1");
  if (cfg.batch_size == 0) throw ConfigError("batch size must be >= 1");

  TrainResult result;
  auto model = make_model(spec, static_cast<std::size_t>(train_set.x.cols()), cfg.seed);
  AdamState adam(model->param_count());
  adam.lr = cfg.lr;
  Rng shuffler(cfg.seed ^ kShuffleStream);

  const auto n = static_cast<std::size_t>(train_set.x.rows());
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::vector<double> grad(model->param_count());
  Matrix xb;
  std::vector<int> yb;

  std::unique_ptr<Model> best;
  double best_f1 = -1.0;
  int since_best = 0;

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    shuffle(std::span<std::size_t>(order), shuffler);
    double loss_acc = 0.0;
    std::size_t batches = 0;
    for (std::size_t begin = 0; begin < n; begin += cfg.batch_size) {
      const std::size_t end = std::min(n, begin + cfg.batch_size);
      xb.resize(static_cast<Eigen::Index>(end - begin), train_set.x.cols());
      yb.resize(end - begin);
      for (std::size_t r = begin; r < end; ++r) {
        xb.row(static_cast<Eigen::Index>(r - begin)) =
            train_set.x.row(static_cast<Eigen::Index>(order[r]));
        yb[r - begin] = train_set.y[order[r]];
      }
      const double loss = model->loss_and_gradient(xb, yb, grad);
      if (!std::isfinite(loss))
        throw DataError("training diverged: non-finite loss at epoch " + std::to_string(epoch) +
                        ", batch " + std::to_string(batches) + " (check input scaling and lr)");
      adam_step(adam, model->params(), grad);
      loss_acc += loss;
      ++batches;
    }

    EpochRecord rec{epoch, loss_acc / static_cast<double>(batches), 0.0};
    if (val) {
      rec.val_macro_f1 = macro_f1(val->y, predict_labels(*model, val->x));
      if (rec.val_macro_f1 > best_f1) {
        best_f1 = rec.val_macro_f1;
        best = model->clone();
        result.best_epoch = epoch;
        since_best = 0;
      } else {
        ++since_best;
      }
    }
    spdlog::debug("{} epoch {} loss {:.5f} val macro-F1 {:.4f}", model_kind_name(spec.kind), epoch,
                  rec.train_loss, rec.val_macro_f1);
    result.history.push_back(rec);
    if (val && since_best >= cfg.patience) break;
  }

  if (val) {
    result.model = std::move(best);
    result.best_val_f1 = best_f1;
  } else {
    result.model = std::move(model);
    result.best_epoch = cfg.epochs;
  }
  return result;
}

std::vector<int> stratified_folds(std::span<const int> labels, int k, std::uint64_t seed) {
  if (k < 2) throw ConfigError("cross-validation needs k >= 2");
  if (static_cast<std::size_t>(k) > labels.size())
    throw ConfigError("cross-validation: more folds than rows");
  std::array<std::vector<std::size_t>, kNumClasses> by_class;
  for (std::size_t r = 0; r < labels.size(); ++r) {
    if (labels[r] < 0 || labels[r] >= kNumClasses) throw DataError("folds need labeled rows");
    by_class[static_cast<std::size_t>(labels[r])].push_back(r);
  }
  Rng rng(seed);
  std::vector<int> fold(labels.size(), 0);
  std::size_t next = 0;
  for (auto& rows : by_class) {
    shuffle(std::span<std::size_t>(rows), rng);
    for (std::size_t r : rows) fold[r] = static_cast<int>(next++ % static_cast<std::size_t>(k));
  }
  return fold;
}

CrossValResult crossval(const LabeledData& data, int k, std::span<const HyperParams> grid,
                        std::uint64_t seed) {
  check_data(data, "cross-validation");
  if (grid.empty()) throw ConfigError("hyperparameter grid is empty");
  const auto fold = stratified_folds(data.y, k, seed);

  CrossValResult res;
  std::vector<std::size_t> sizes;
  for (const auto& hp : grid) {
    std::vector<double> scores;
    std::size_t params = 0;
    for (int f = 0; f < k; ++f) {
      LabeledData tr, te;
      std::vector<Eigen::Index> tr_rows, te_rows;
      for (std::size_t r = 0; r < fold.size(); ++r)
        (fold[r] == f ? te_rows : tr_rows).push_back(static_cast<Eigen::Index>(r));
      tr.x = data.x(tr_rows, Eigen::all);
      te.x = data.x(te_rows, Eigen::all);
      for (auto r : tr_rows) tr.y.push_back(data.y[static_cast<std::size_t>(r)]);
      for (auto r : te_rows) te.y.push_back(data.y[static_cast<std::size_t>(r)]);
      TrainConfig cfg = hp.train;
      cfg.seed = hp.train.seed + static_cast<std::uint64_t>(f);
      const auto fit = train(hp.model, tr, nullptr, cfg);
      params = fit.model->param_count();
      scores.push_back(macro_f1(te.y, predict_labels(*fit.model, te.x)));
    }
    res.mean_scores.push_back(std::accumulate(scores.begin(), scores.end(), 0.0) /
                              static_cast<double>(k));
    res.fold_scores.push_back(std::move(scores));
    sizes.push_back(params);
  }
  for (std::size_t g = 1; g < grid.size(); ++g) {
    const double cur = res.mean_scores[g], best = res.mean_scores[res.best];
    if (cur > best || (cur == best && sizes[g] < sizes[res.best])) res.best = g;
  }
  return res;
}

}  // namespace arable
