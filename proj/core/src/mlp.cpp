#include "arable/error.hpp"
#include "model_internal.hpp"

namespace arable {

namespace {

using namespace detail;

// Fully connected ReLU network ending in a linear 4-way layer.
class Mlp final : public Model {
 public:
  Mlp(std::size_t input_dim, std::vector<std::size_t> hidden, std::uint64_t seed)
      : sizes_{input_dim} {
    sizes_.insert(sizes_.end(), hidden.begin(), hidden.end());
    sizes_.push_back(kNumClasses);
    offsets_ = block_offsets(blocks());
    params_.assign(offsets_.back(), 0.0);
    Rng rng(seed);
    for (std::size_t l = 0; l + 1 < sizes_.size(); ++l)
      init_uniform(std::span<double>(params_.data() + offsets_[2 * l], sizes_[l + 1] * sizes_[l]),
                   sizes_[l], rng);
  }

  ModelKind kind() const override { return ModelKind::Mlp; }
  std::size_t input_dim() const override { return sizes_.front(); }
  std::vector<ParamBlock> blocks() const override {
    std::vector<ParamBlock> b;
    for (std::size_t l = 0; l + 1 < sizes_.size(); ++l) {
      b.push_back({"W" + std::to_string(l + 1), sizes_[l + 1], sizes_[l]});
      b.push_back({"b" + std::to_string(l + 1), 1, sizes_[l + 1]});
    }
    return b;
  }
  std::unique_ptr<Model> clone() const override { return std::make_unique<Mlp>(*this); }

 protected:
  Matrix forward(const MatrixCRef& x) const override {
    Matrix h = x;
    for (std::size_t l = 0; l + 1 < sizes_.size(); ++l) {
      Matrix z = h * weight(l).transpose();
      z.rowwise() += bias(l);
      h = last(l) ? std::move(z) : Matrix(z.cwiseMax(0.0));
    }
    return h;
  }

  void pass(const MatrixCRef& x, const LogitGrad& dlogits_of, std::span<double> param_grad,
            Matrix* input_grad) const override {
    const std::size_t layers = sizes_.size() - 1;
    std::vector<Matrix> acts(layers);  // input to layer l
    std::vector<Matrix> pre(layers);
    Matrix h = x;
    for (std::size_t l = 0; l < layers; ++l) {
      acts[l] = h;
      pre[l] = h * weight(l).transpose();
      pre[l].rowwise() += bias(l);
      h = last(l) ? pre[l] : Matrix(pre[l].cwiseMax(0.0));
    }
    Matrix dz = dlogits_of(h, 0);
    for (std::size_t l = layers; l-- > 0;) {
      if (!param_grad.empty()) {
        MatMap gw(param_grad.data() + offsets_[2 * l], rows(l), cols(l));
        VecMap gb(param_grad.data() + offsets_[2 * l + 1], rows(l));
        gw.noalias() += dz.transpose() * acts[l];
        gb += dz.colwise().sum();
      }
      if (l == 0 && !input_grad) break;
      Matrix dh = dz * weight(l);
      if (l == 0) {
        *input_grad = std::move(dh);
        break;
      }
      dz = dh.cwiseProduct((pre[l - 1].array() > 0.0).cast<double>().matrix());
    }
  }

 private:
  bool last(std::size_t l) const { return l + 2 == sizes_.size(); }
  Eigen::Index rows(std::size_t l) const { return static_cast<Eigen::Index>(sizes_[l + 1]); }
  Eigen::Index cols(std::size_t l) const { return static_cast<Eigen::Index>(sizes_[l]); }
  CMatMap weight(std::size_t l) const { return {params_.data() + offsets_[2 * l], rows(l), cols(l)}; }
  CVecMap bias(std::size_t l) const { return {params_.data() + offsets_[2 * l + 1], rows(l)}; }

  std::vector<std::size_t> sizes_;
  std::vector<std::size_t> offsets_;
};

}  // namespace

std::unique_ptr<Model> make_mlp(std::size_t input_dim, std::vector<std::size_t> hidden,
                                std::uint64_t seed) {
  if (input_dim == 0) throw ConfigError("MLP needs at least one input");
  for (auto h : hidden)
    if (h == 0) throw ConfigError("MLP hidden layers must be non-empty");
  return std::make_unique<Mlp>(input_dim, std::move(hidden), seed);
}

}  // namespace arable
