#include <cmath>

#include "arable/error.hpp"
#include "model_internal.hpp"

namespace arable {

namespace {

using namespace detail;

Matrix sigmoid(const Matrix& z) { return (1.0 / (1.0 + (-z.array()).exp())).matrix(); }

// Single-layer LSTM over a flattened (seq_len x channels) row, read out from
// the final hidden state. Gate blocks are stacked i, f, g, o.
class Lstm final : public Model {
 public:
  Lstm(std::size_t channels, std::size_t seq_len, std::size_t hidden, std::uint64_t seed)
      : c_(channels), t_(seq_len), h_(hidden) {
    offsets_ = block_offsets(blocks());
    params_.assign(offsets_.back(), 0.0);
    Rng rng(seed);
    init_uniform(block(0), c_, rng);
    init_uniform(block(1), h_, rng);
    init_uniform(block(3), h_, rng);
    auto bias = block(2);
    for (std::size_t k = h_; k < 2 * h_; ++k) bias[k] = 1.0;  // forget gate
  }

  ModelKind kind() const override { return ModelKind::Lstm; }
  std::size_t input_dim() const override { return c_ * t_; }
  std::vector<ParamBlock> blocks() const override {
    return {{"W", 4 * h_, c_}, {"U", 4 * h_, h_}, {"b", 1, 4 * h_},
            {"V", kNumClasses, h_}, {"c", 1, kNumClasses}};
  }
  std::unique_ptr<Model> clone() const override { return std::make_unique<Lstm>(*this); }

 protected:
  struct Trace {
    std::vector<Matrix> gates;  // post-activation [i f g o], B x 4H
    std::vector<Matrix> cell;   // c_t, index 0 is the zero initial state
    std::vector<Matrix> hid;    // h_t, index 0 is the zero initial state
  };

  Matrix forward(const MatrixCRef& x) const override {
    Trace tr;
    return run(x, tr, false);
  }

  void pass(const MatrixCRef& x, const LogitGrad& dlogits_of, std::span<double> param_grad,
            Matrix* input_grad) const override {
    Trace tr;
    const Matrix z = run(x, tr, true);
    const Matrix dz = dlogits_of(z, 0);
    const auto B = x.rows();
    const auto H = static_cast<Eigen::Index>(h_);
    const auto C = static_cast<Eigen::Index>(c_);

    const bool want_params = !param_grad.empty();
    if (want_params) {
      MatMap gv(param_grad.data() + offsets_[3], kNumClasses, H);
      VecMap gc(param_grad.data() + offsets_[4], kNumClasses);
      gv.noalias() += dz.transpose() * tr.hid[t_];
      gc += dz.colwise().sum();
    }
    if (input_grad) input_grad->resize(B, static_cast<Eigen::Index>(c_ * t_));

    Matrix dh = dz * V();
    Matrix dc = Matrix::Zero(B, H);
    Matrix da(B, 4 * H);
    for (std::size_t t = t_; t-- > 0;) {
      const Matrix& g = tr.gates[t];
      const auto gi = g.middleCols(0, H).array();
      const auto gf = g.middleCols(H, H).array();
      const auto gg = g.middleCols(2 * H, H).array();
      const auto go = g.middleCols(3 * H, H).array();
      const Eigen::ArrayXXd tc = tr.cell[t + 1].array().tanh();

      dc.array() += dh.array() * go * (1.0 - tc.square());
      da.middleCols(0, H) = (dc.array() * gg * gi * (1.0 - gi)).matrix();
      da.middleCols(H, H) = (dc.array() * tr.cell[t].array() * gf * (1.0 - gf)).matrix();
      da.middleCols(2 * H, H) = (dc.array() * gi * (1.0 - gg.square())).matrix();
      da.middleCols(3 * H, H) = (dh.array() * tc * go * (1.0 - go)).matrix();
      dc = (dc.array() * gf).matrix();

      const auto xt = x.middleCols(static_cast<Eigen::Index>(t * c_), C);
      if (want_params) {
        MatMap gw(param_grad.data() + offsets_[0], 4 * H, C);
        MatMap gu(param_grad.data() + offsets_[1], 4 * H, H);
        VecMap gb(param_grad.data() + offsets_[2], 4 * H);
        gw.noalias() += da.transpose() * xt;
        gu.noalias() += da.transpose() * tr.hid[t];
        gb += da.colwise().sum();
      }
      if (input_grad)
        input_grad->middleCols(static_cast<Eigen::Index>(t * c_), C).noalias() = da * W();
      dh.noalias() = da * U();
    }
  }

 private:
  Matrix run(const MatrixCRef& x, Trace& tr, bool keep) const {
    const auto B = x.rows();
    const auto H = static_cast<Eigen::Index>(h_);
    const auto C = static_cast<Eigen::Index>(c_);
    Matrix h = Matrix::Zero(B, H);
    Matrix c = Matrix::Zero(B, H);
    if (keep) {
      tr.cell.push_back(c);
      tr.hid.push_back(h);
    }
    Matrix a(B, 4 * H);
    for (std::size_t t = 0; t < t_; ++t) {
      a.noalias() = x.middleCols(static_cast<Eigen::Index>(t * c_), C) * W().transpose();
      a.noalias() += h * U().transpose();
      a.rowwise() += b();
      a.middleCols(0, 2 * H) = sigmoid(a.middleCols(0, 2 * H));
      a.middleCols(2 * H, H) = a.middleCols(2 * H, H).array().tanh().matrix();
      a.middleCols(3 * H, H) = sigmoid(a.middleCols(3 * H, H));
      c = (a.middleCols(H, H).array() * c.array() +
           a.middleCols(0, H).array() * a.middleCols(2 * H, H).array())
              .matrix();
      h = (a.middleCols(3 * H, H).array() * c.array().tanh()).matrix();
      if (keep) {
        tr.gates.push_back(a);
        tr.cell.push_back(c);
        tr.hid.push_back(h);
      }
    }
    Matrix z = h * V().transpose();
    z.rowwise() += cb();
    return z;
  }

  std::span<double> block(std::size_t k) {
    return {params_.data() + offsets_[k], offsets_[k + 1] - offsets_[k]};
  }
  CMatMap W() const { return {params_.data() + offsets_[0], 4 * H(), static_cast<Eigen::Index>(c_)}; }
  CMatMap U() const { return {params_.data() + offsets_[1], 4 * H(), H()}; }
  CVecMap b() const { return {params_.data() + offsets_[2], 4 * H()}; }
  CMatMap V() const { return {params_.data() + offsets_[3], kNumClasses, H()}; }
  CVecMap cb() const { return {params_.data() + offsets_[4], kNumClasses}; }
  Eigen::Index H() const { return static_cast<Eigen::Index>(h_); }

  std::size_t c_, t_, h_;
  std::vector<std::size_t> offsets_;
};

}  // namespace

std::unique_ptr<Model> make_lstm(std::size_t channels, std::size_t seq_len, std::size_t hidden,
                                 std::uint64_t seed) {
  if (channels == 0 || seq_len == 0 || hidden == 0)
    throw ConfigError("LSTM dimensions must be positive");
  return std::make_unique<Lstm>(channels, seq_len, hidden, seed);
}

}  // namespace arable
