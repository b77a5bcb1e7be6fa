#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "arable/grid.hpp"

namespace arable {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatrixCRef = Eigen::Ref<const Matrix>;

using Probs = std::array<double, kNumClasses>;

// Parameter storage. Eigen picks its vectorized code path from the buffer
// address, so a fixed alignment keeps results independent of the allocator.
using ParamVector = std::vector<double, Eigen::aligned_allocator<double>>;

// Max-subtracted softmax.
Probs softmax(std::span<const double, kNumClasses> logits);
// -ln(p_label) with p clamped to >= 1e-12.
double cross_entropy(const Probs& probs, int label);
// Row-wise softmax of an N x 4 logit matrix.
Matrix softmax_rows(const Matrix& logits);

enum class ModelKind { LogReg, Mlp, Lstm };
std::string model_kind_name(ModelKind k);
ModelKind parse_model_kind(const std::string& name);

struct ParamBlock {
  std::string name;
  std::size_t rows = 0, cols = 0;
  std::size_t size() const { return rows * cols; }
};

// Differentiable classifier over row-major N x D inputs producing N x 4
// logits. Parameters live in one flat vector laid out as blocks().
// Batch passes are split into fixed-size row chunks whose partial results
// are reduced in chunk order, so results do not depend on the thread count.
class Model {
 public:
  virtual ~Model() = default;

  virtual ModelKind kind() const = 0;
  virtual std::size_t input_dim() const = 0;
  virtual std::vector<ParamBlock> blocks() const = 0;
  virtual std::unique_ptr<Model> clone() const = 0;

  ParamVector& params() { return params_; }
  const ParamVector& params() const { return params_; }
  std::size_t param_count() const { return params_.size(); }

  Matrix logits(const MatrixCRef& x) const;

  // Mean cross-entropy over the batch; writes its exact gradient to `grad`.
  double loss_and_gradient(const MatrixCRef& x, std::span<const int> labels,
                           std::span<double> grad) const;

  // Gradient of logit `cls` with respect to each input row (N x D).
  Matrix logit_input_gradient(const MatrixCRef& x, int cls) const;

  static constexpr std::size_t kChunkRows = 64;

 protected:
  using LogitGrad = std::function<Matrix(const Matrix& logits, std::size_t row_offset)>;

  // Forward pass over a chunk, then backprop of dlogits = dlogits_of(logits).
  // Accumulates parameter gradients into param_grad (if non-empty) and writes
  // input gradients to input_grad (if non-null).
  virtual void pass(const MatrixCRef& x, const LogitGrad& dlogits_of,
                    std::span<double> param_grad, Matrix* input_grad) const = 0;
  virtual Matrix forward(const MatrixCRef& x) const = 0;

  ParamVector params_;
};

std::unique_ptr<Model> make_logreg(std::size_t input_dim, std::uint64_t seed);
std::unique_ptr<Model> make_mlp(std::size_t input_dim, std::vector<std::size_t> hidden,
                                std::uint64_t seed);
std::unique_ptr<Model> make_lstm(std::size_t channels, std::size_t seq_len, std::size_t hidden,
                                 std::uint64_t seed);

// Architecture choice plus the sizes that are not implied by the data.
struct ModelSpec {
  ModelKind kind = ModelKind::Lstm;
  std::vector<std::size_t> mlp_hidden = {128, 128};
  std::size_t lstm_hidden = 64;
};

// input_dim is the flat width (162, or 12 * 52 for the LSTM).
std::unique_ptr<Model> make_model(const ModelSpec& spec, std::size_t input_dim, std::uint64_t seed);

// ---------------------------------------------------------------------------

struct AdamState {
  double lr = 1e-3, beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
  std::uint64_t step = 0;
  std::vector<double> m, v;

  explicit AdamState(std::size_t n = 0) : m(n, 0.0), v(n, 0.0) {}
};

// Bias-corrected Adam update in place.
void adam_step(AdamState& state, std::span<double> params, std::span<const double> grads);

// ---------------------------------------------------------------------------

struct LabeledData {
  Matrix x;
  std::vector<int> y;
};

struct TrainConfig {
  int epochs = 50;
  std::size_t batch_size = 512;
  int patience = 10;
  double lr = 1e-3;
  std::uint64_t seed = 0;
};

struct EpochRecord {
  int epoch = 0;
  double train_loss = 0;
  double val_macro_f1 = 0;
};

struct TrainResult {
  std::unique_ptr<Model> model;
  std::vector<EpochRecord> history;
  int best_epoch = 0;
  double best_val_f1 = 0;
};

// Mini-batch Adam on mean cross-entropy. With `val`, evaluates macro-F1 after
// every epoch, keeps the best parameters and stops after `patience` epochs
// without improvement. Without `val`, runs all epochs.
TrainResult train(const ModelSpec& spec, const LabeledData& train_set, const LabeledData* val,
                  const TrainConfig& cfg);

// Row-wise class probabilities, N x 4.
Matrix predict_proba(const Model& model, const MatrixCRef& x);
std::vector<int> predict_labels(const Model& model, const MatrixCRef& x);

struct HyperParams {
  ModelSpec model;
  TrainConfig train;
};

struct CrossValResult {
  std::vector<std::vector<double>> fold_scores;  // [grid point][fold]
  std::vector<double> mean_scores;
  std::size_t best = 0;
};

// Stratified fold id per row: classes are shuffled and dealt round-robin.
std::vector<int> stratified_folds(std::span<const int> labels, int k, std::uint64_t seed);

// Fold f trains with seed grid[g].train.seed + f on every other fold (no early
// stopping) and is scored by macro-F1 on fold f. Ties on the mean score go to
// the grid point with fewer parameters.
CrossValResult crossval(const LabeledData& data, int k, std::span<const HyperParams> grid,
                        std::uint64_t seed);

// ---------------------------------------------------------------------------

// `<base>.json` manifest {kind, input_dim, blocks, seed, ...extra} and a
// little-endian f64 blob `<base>.f64` of the parameters in block order.
void save_model(const Model& model, const std::filesystem::path& base, std::uint64_t seed,
                const std::string& extra_json = "{}");
std::unique_ptr<Model> load_model(const std::filesystem::path& base);

bool is_sequence_model(ModelKind k);

struct FeatureTable;
// Flat model input for a feature table: the canonical 162 columns for
// logistic regression and MLP, 12 x 52 sequences for the LSTM.
Matrix model_input_matrix(const FeatureTable& table, ModelKind kind);

}  // namespace arable
