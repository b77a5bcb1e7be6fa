#include "arable/error.hpp"
#include "model_internal.hpp"

namespace arable {

namespace {

using namespace detail;

// Multinomial logistic regression: logits = x W^T + b.
class LogReg final : public Model {
 public:
  LogReg(std::size_t input_dim, std::uint64_t seed) : dim_(input_dim) {
    params_.assign(kNumClasses * dim_ + kNumClasses, 0.0);
    Rng rng(seed);
    init_uniform(std::span<double>(params_.data(), kNumClasses * dim_), dim_, rng);
  }

  ModelKind kind() const override { return ModelKind::LogReg; }
  std::size_t input_dim() const override { return dim_; }
  std::vector<ParamBlock> blocks() const override {
    return {{"W", kNumClasses, dim_}, {"b", 1, kNumClasses}};
  }
  std::unique_ptr<Model> clone() const override { return std::make_unique<LogReg>(*this); }

 protected:
  Matrix forward(const MatrixCRef& x) const override {
    const CMatMap w(params_.data(), kNumClasses, static_cast<Eigen::Index>(dim_));
    const CVecMap b(params_.data() + kNumClasses * dim_, kNumClasses);
    Matrix z = x * w.transpose();
    z.rowwise() += b;
    return z;
  }

  void pass(const MatrixCRef& x, const LogitGrad& dlogits_of, std::span<double> param_grad,
            Matrix* input_grad) const override {
    const Matrix dz = dlogits_of(forward(x), 0);
    const CMatMap w(params_.data(), kNumClasses, static_cast<Eigen::Index>(dim_));
    if (!param_grad.empty()) {
      MatMap gw(param_grad.data(), kNumClasses, static_cast<Eigen::Index>(dim_));
      VecMap gb(param_grad.data() + kNumClasses * dim_, kNumClasses);
      gw.noalias() += dz.transpose() * x;
      gb += dz.colwise().sum();
    }
    if (input_grad) *input_grad = dz * w;
  }

 private:
  std::size_t dim_;
};

}  // namespace

std::unique_ptr<Model> make_logreg(std::size_t input_dim, std::uint64_t seed) {
  if (input_dim == 0) throw ConfigError("logistic regression needs at least one input");
  return std::make_unique<LogReg>(input_dim, seed);
}

}  // namespace arable
