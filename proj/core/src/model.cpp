#include "arable/model.hpp"

#include <algorithm>
#include <cmath>

#include "arable/dataset.hpp"
#include "arable/error.hpp"
#include "arable/parallel.hpp"

namespace arable {

Probs softmax(std::span<const double, kNumClasses> logits) {
  const double mx = *std::max_element(logits.begin(), logits.end());
  Probs p;
  double sum = 0.0;
  for (std::size_t c = 0; c < kNumClasses; ++c) {
    p[c] = std::exp(logits[c] - mx);
    sum += p[c];
  }
  for (auto& v : p) v /= sum;
  return p;
}

double cross_entropy(const Probs& probs, int label) {
  if (label < 0 || label >= kNumClasses) throw DataError("cross_entropy: label outside 0..3");
  return -std::log(std::max(probs[static_cast<std::size_t>(label)], 1e-12));
}

Matrix softmax_rows(const Matrix& logits) {
  Matrix p(logits.rows(), logits.cols());
  for (Eigen::Index r = 0; r < logits.rows(); ++r) {
    const auto s = softmax(std::span<const double, kNumClasses>(logits.row(r).data(), kNumClasses));
    for (std::size_t c = 0; c < kNumClasses; ++c) p(r, static_cast<Eigen::Index>(c)) = s[c];
  }
  return p;
}

std::string model_kind_name(ModelKind k) {
  switch (k) {
    case ModelKind::LogReg: return "logreg";
    case ModelKind::Mlp: return "mlp";
    case ModelKind::Lstm: return "lstm";
  }
  return "?";
}

ModelKind parse_model_kind(const std::string& name) {
  if (name == "logreg" || name == "lr") return ModelKind::LogReg;
  if (name == "mlp") return ModelKind::Mlp;
  if (name == "lstm") return ModelKind::Lstm;
  throw ConfigError("unknown model kind '" + name + "' (expected logreg, mlp or lstm)");
}

bool is_sequence_model(ModelKind k) { return k == ModelKind::Lstm; }

namespace {

std::size_t chunk_count(Eigen::Index rows) {
  return (static_cast<std::size_t>(rows) + Model::kChunkRows - 1) / Model::kChunkRows;
}

}  // namespace

Matrix Model::logits(const MatrixCRef& x) const {
  if (static_cast<std::size_t>(x.cols()) != input_dim())
    throw DataError("model expects " + std::to_string(input_dim()) + " input columns, got " +
                    std::to_string(x.cols()));
  Matrix out(x.rows(), kNumClasses);
  parallel_chunks(chunk_count(x.rows()), [&](std::size_t k) {
    const auto begin = static_cast<Eigen::Index>(k * kChunkRows);
    const auto n = std::min<Eigen::Index>(static_cast<Eigen::Index>(kChunkRows), x.rows() - begin);
    out.middleRows(begin, n) = forward(x.middleRows(begin, n));
  });
  return out;
}

double Model::loss_and_gradient(const MatrixCRef& x, std::span<const int> labels,
                                std::span<double> grad) const {
  if (static_cast<std::size_t>(x.rows()) != labels.size())
    throw DataError("loss_and_gradient: rows and labels differ");
  if (x.rows() == 0) throw DataError("loss_and_gradient: empty batch");
  if (grad.size() != params_.size()) throw DataError("gradient buffer has wrong size");
  const std::size_t chunks = chunk_count(x.rows());
  const double inv_n = 1.0 / static_cast<double>(x.rows());
  std::vector<ParamVector> partial(chunks, ParamVector(params_.size(), 0.0));
  std::vector<double> loss(chunks, 0.0);

  parallel_chunks(chunks, [&](std::size_t k) {
    const auto begin = static_cast<Eigen::Index>(k * kChunkRows);
    const auto n = std::min<Eigen::Index>(static_cast<Eigen::Index>(kChunkRows), x.rows() - begin);
    pass(
        x.middleRows(begin, n),
        [&](const Matrix& z, std::size_t) {
          Matrix dz(z.rows(), z.cols());
          double acc = 0.0;
          for (Eigen::Index r = 0; r < z.rows(); ++r) {
            const auto p = softmax(std::span<const double, kNumClasses>(z.row(r).data(), kNumClasses));
            const int y = labels[static_cast<std::size_t>(begin + r)];
            acc += cross_entropy(p, y);
            for (std::size_t c = 0; c < kNumClasses; ++c)
              dz(r, static_cast<Eigen::Index>(c)) =
                  (p[c] - (static_cast<int>(c) == y ? 1.0 : 0.0)) * inv_n;
          }
          loss[k] = acc;
          return dz;
        },
        partial[k], nullptr);
  });

  std::fill(grad.begin(), grad.end(), 0.0);
  double total = 0.0;
  for (std::size_t k = 0; k < chunks; ++k) {
    total += loss[k];
    for (std::size_t p = 0; p < grad.size(); ++p) grad[p] += partial[k][p];
  }
  return total * inv_n;
}

Matrix Model::logit_input_gradient(const MatrixCRef& x, int cls) const {
  if (cls < 0 || cls >= kNumClasses) throw DataError("logit_input_gradient: class outside 0..3");
  Matrix out(x.rows(), x.cols());
  parallel_chunks(chunk_count(x.rows()), [&](std::size_t k) {
    const auto begin = static_cast<Eigen::Index>(k * kChunkRows);
    const auto n = std::min<Eigen::Index>(static_cast<Eigen::Index>(kChunkRows), x.rows() - begin);
    Matrix g;
    pass(
        x.middleRows(begin, n),
        [&](const Matrix& z, std::size_t) {
          Matrix dz = Matrix::Zero(z.rows(), z.cols());
          dz.col(cls).setOnes();
          return dz;
        },
        {}, &g);
    out.middleRows(begin, n) = g;
  });
  return out;
}

std::unique_ptr<Model> make_model(const ModelSpec& spec, std::size_t input_dim, std::uint64_t seed) {
  switch (spec.kind) {
    case ModelKind::LogReg: return make_logreg(input_dim, seed);
    case ModelKind::Mlp: return make_mlp(input_dim, spec.mlp_hidden, seed);
    case ModelKind::Lstm:
      if (input_dim % kSeqChannels != 0)
        throw ConfigError("LSTM input width must be a multiple of 52");
      return make_lstm(kSeqChannels, input_dim / kSeqChannels, spec.lstm_hidden, seed);
  }
  throw ConfigError("bad model kind");
}

Matrix predict_proba(const Model& model, const MatrixCRef& x) {
  return softmax_rows(model.logits(x));
}

std::vector<int> predict_labels(const Model& model, const MatrixCRef& x) {
  const Matrix z = model.logits(x);
  std::vector<int> out(static_cast<std::size_t>(z.rows()));
  for (Eigen::Index r = 0; r < z.rows(); ++r) {
    Eigen::Index best;
    z.row(r).maxCoeff(&best);
    out[static_cast<std::size_t>(r)] = static_cast<int>(best);
  }
  return out;
}

Matrix model_input_matrix(const FeatureTable& table, ModelKind kind) {
  if (is_sequence_model(kind)) {
    const SequenceBatch s = to_sequences(table);
    Matrix x(static_cast<Eigen::Index>(s.n), static_cast<Eigen::Index>(kSeqLen * kSeqChannels));
    std::copy(s.data.begin(), s.data.end(), x.data());
    return x;
  }
  const auto& canon = feature_names();
  std::vector<std::size_t> src(canon.size());
  for (std::size_t k = 0; k < canon.size(); ++k) src[k] = table.column_index(canon[k]);
  Matrix x(static_cast<Eigen::Index>(table.rows()), static_cast<Eigen::Index>(canon.size()));
  for (std::size_t r = 0; r < table.rows(); ++r) {
    const auto row = table.row(r);
    for (std::size_t k = 0; k < canon.size(); ++k)
      x(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(k)) = row[src[k]];
  }
  return x;
}

}  // namespace arable
