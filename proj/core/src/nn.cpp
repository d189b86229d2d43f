#include "maecho/nn.hpp"

#include "maecho/rng.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace maecho::nn {
namespace {

constexpr Eigen::Index kEvalChunk = 2000;

// x W^T + b for a bias-folded layer, without materializing the augmented x.
Matrix affine(const Matrix& x, const Matrix& layer) {
  const Eigen::Index c_in = layer.cols() - 1;
  Matrix z(x.rows(), layer.rows());
  z.noalias() = x * layer.leftCols(c_in).transpose();
  z.rowwise() += layer.col(c_in).transpose();
  return z;
}

Matrix augment(const Matrix& x) {
  Matrix out(x.rows(), x.cols() + 1);
  out.leftCols(x.cols()) = x;
  out.col(x.cols()).setOnes();
  return out;
}

void check_input(const MlpParams& params, const Matrix& batch) {
  if (params.layers.empty()) throw Error(ErrorCode::kBadArch, "network has no layers");
  if (batch.cols() != params.input_dim()) {
    throw Error(ErrorCode::kShapeMismatch, "batch width " + std::to_string(batch.cols()) + " != network input " +
                                               std::to_string(params.input_dim()));
  }
}

Matrix gather_rows(const Matrix& src, std::span<const std::size_t> rows) {
  Matrix out(static_cast<Eigen::Index>(rows.size()), src.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    out.row(static_cast<Eigen::Index>(i)) = src.row(static_cast<Eigen::Index>(rows[i]));
  }
  return out;
}

template <typename Fn>
void for_each_chunk(const data::Dataset& dataset, Fn&& fn) {
  const Eigen::Index n = dataset.images.rows();
  for (Eigen::Index start = 0; start < n; start += kEvalChunk) {
    const Eigen::Index len = std::min(kEvalChunk, n - start);
    fn(start, len, Matrix(dataset.images.middleRows(start, len)));
  }
}

int argmax_row(const Matrix& m, Eigen::Index r) {
  Eigen::Index best = 0;
  for (Eigen::Index c = 1; c < m.cols(); ++c) {
    if (m(r, c) > m(r, best)) best = c;
  }
  return static_cast<int>(best);
}

}  // namespace

std::vector<int> MlpParams::arch() const {
  std::vector<int> out;
  if (layers.empty()) return out;
  out.push_back(static_cast<int>(layers.front().cols() - 1));
  for (const auto& l : layers) out.push_back(static_cast<int>(l.rows()));
  return out;
}

Eigen::Index MlpParams::parameter_count() const {
  Eigen::Index total = 0;
  for (const auto& l : layers) total += l.size();
  return total;
}

bool MlpParams::operator==(const MlpParams& other) const {
  if (layers.size() != other.layers.size()) return false;
  for (std::size_t l = 0; l < layers.size(); ++l) {
    if (layers[l].rows() != other.layers[l].rows() || layers[l].cols() != other.layers[l].cols()) return false;
    if (!std::equal(layers[l].data(), layers[l].data() + layers[l].size(), other.layers[l].data())) return false;
  }
  return true;
}

void validate(const MlpParams& params) {
  if (params.layers.empty()) throw Error(ErrorCode::kBadArch, "network has no layers");
  for (std::size_t l = 0; l + 1 < params.layers.size(); ++l) {
    if (params.layers[l].rows() + 1 != params.layers[l + 1].cols()) {
      throw Error(ErrorCode::kShapeMismatch, "layer " + std::to_string(l) + " outputs " +
                                                 std::to_string(params.layers[l].rows()) + " but layer " +
                                                 std::to_string(l + 1) + " expects " +
                                                 std::to_string(params.layers[l + 1].cols() - 1));
    }
  }
}

void require_same_arch(const MlpParams& a, const MlpParams& b) {
  bool same = a.layers.size() == b.layers.size();
  for (std::size_t l = 0; same && l < a.layers.size(); ++l) {
    same = a.layers[l].rows() == b.layers[l].rows() && a.layers[l].cols() == b.layers[l].cols();
  }
  if (!same) throw Error(ErrorCode::kArchMismatch, "models have different layer shapes");
}

MlpParams init_params(std::span<const int> arch, std::uint64_t seed, InitScheme scheme) {
  if (arch.size() < 2) throw Error(ErrorCode::kBadArch, "architecture needs at least an input and an output size");
  for (int d : arch) {
    if (d < 1) throw Error(ErrorCode::kBadArch, "layer sizes must be positive");
  }
  MlpParams params;
  for (std::size_t l = 0; l + 1 < arch.size(); ++l) {
    const int c_in = arch[l];
    const int c_out = arch[l + 1];
    Matrix w = Matrix::Zero(c_out, c_in + 1);
    if (scheme == InitScheme::kUniformFanIn) {
      auto rng = make_rng(seed, "init.layer", l);
      const double bound = 1.0 / std::sqrt(static_cast<double>(c_in));
      for (Eigen::Index r = 0; r < c_out; ++r) {
        for (Eigen::Index c = 0; c < c_in; ++c) w(r, c) = uniform_real(rng, -bound, bound);
      }
    }
    params.layers.push_back(std::move(w));
  }
  return params;
}

ForwardResult forward(const MlpParams& params, const Matrix& batch) {
  check_input(params, batch);
  ForwardResult result;
  Matrix x = batch;
  for (std::size_t l = 0; l < params.layers.size(); ++l) {
    result.trace.inputs.push_back(augment(x));
    Matrix z = affine(x, params.layers[l]);
    if (l + 1 < params.layers.size()) z = z.cwiseMax(0.0);
    x = std::move(z);
  }
  result.logits = std::move(x);
  return result;
}

Matrix logits(const MlpParams& params, const Matrix& batch) {
  check_input(params, batch);
  Matrix x = batch;
  for (std::size_t l = 0; l < params.layers.size(); ++l) {
    Matrix z = affine(x, params.layers[l]);
    if (l + 1 < params.layers.size()) z = z.cwiseMax(0.0);
    x = std::move(z);
  }
  return x;
}

Matrix softmax(const Matrix& logits) {
  Matrix p = logits;
  for (Eigen::Index r = 0; r < p.rows(); ++r) {
    const double peak = p.row(r).maxCoeff();
    p.row(r) = (p.row(r).array() - peak).exp();
    p.row(r) /= p.row(r).sum();
  }
  return p;
}

Gradients backward(const MlpParams& params, const Matrix& batch, std::span<const int> labels, Reduction reduction) {
  check_input(params, batch);
  if (static_cast<Eigen::Index>(labels.size()) != batch.rows()) {
    throw Error(ErrorCode::kShapeMismatch, "label count differs from batch rows");
  }
  const std::size_t depth = params.layers.size();
  const Eigen::Index n = batch.rows();

  // activations[l] is the (unaugmented) input of layer l.
  std::vector<Matrix> activations;
  activations.reserve(depth + 1);
  activations.push_back(batch);
  for (std::size_t l = 0; l < depth; ++l) {
    Matrix z = affine(activations.back(), params.layers[l]);
    if (l + 1 < depth) z = z.cwiseMax(0.0);
    activations.push_back(std::move(z));
  }

  Matrix delta = softmax(activations.back());
  double loss = 0.0;
  for (Eigen::Index r = 0; r < n; ++r) {
    const int y = labels[static_cast<std::size_t>(r)];
    if (y < 0 || y >= delta.cols()) throw Error(ErrorCode::kShapeMismatch, "label out of range");
    loss -= std::log(std::max(delta(r, y), 1e-300));
    delta(r, y) -= 1.0;
  }
  const double scale = reduction == Reduction::kMean && n > 0 ? 1.0 / static_cast<double>(n) : 1.0;

  Gradients grads;
  grads.loss = loss * scale;
  grads.layers.resize(depth);
  for (std::size_t l = depth; l-- > 0;) {
    const Matrix& x = activations[l];
    const Eigen::Index c_in = params.layers[l].cols() - 1;
    Matrix g(params.layers[l].rows(), c_in + 1);
    g.leftCols(c_in).noalias() = delta.transpose() * x;
    g.col(c_in) = delta.colwise().sum().transpose();
    if (scale != 1.0) g *= scale;
    grads.layers[l] = std::move(g);
    if (l > 0) {
      Matrix upstream(n, c_in);
      upstream.noalias() = delta * params.layers[l].leftCols(c_in);
      // ReLU gate: activations[l] > 0 exactly where the pre-activation was.
      delta = upstream.cwiseProduct((x.array() > 0.0).cast<double>().matrix());
    }
  }
  return grads;
}

TrainResult train_sgd(const MlpParams& init, const data::Dataset& dataset, std::span<const std::size_t> shard,
                      const TrainConfig& config) {
  if (shard.empty()) throw Error(ErrorCode::kEmptyShard, "cannot train on an empty shard");
  if (config.batch_size < 1) throw Error(ErrorCode::kInvalidConfig, "batch_size must be >= 1");
  validate(init);

  TrainResult result;
  result.params = init;
  auto& params = result.params;
  std::vector<Matrix> velocity;
  for (const auto& l : params.layers) velocity.push_back(Matrix::Zero(l.rows(), l.cols()));

  std::vector<std::size_t> order(shard.begin(), shard.end());
  std::vector<int> batch_labels;
  const auto batch_size = static_cast<std::size_t>(config.batch_size);
  bool budget_left = !config.max_steps || *config.max_steps > 0;

  for (int epoch = 0; epoch < config.epochs && budget_left; ++epoch) {
    auto rng = make_rng(config.seed, "train.epoch", static_cast<std::uint64_t>(epoch));
    shuffle(order, rng);
    double loss_sum = 0.0;
    long batches = 0;
    for (std::size_t start = 0; start < order.size(); start += batch_size) {
      const std::size_t len = std::min(batch_size, order.size() - start);
      const std::span<const std::size_t> rows(order.data() + start, len);
      batch_labels.resize(len);
      for (std::size_t i = 0; i < len; ++i) batch_labels[i] = dataset.labels[rows[i]];

      const auto grads = backward(params, gather_rows(dataset.images, rows), batch_labels);
      for (std::size_t l = 0; l < params.layers.size(); ++l) {
        velocity[l] = config.momentum * velocity[l] + grads.layers[l];
        params.layers[l] -= config.lr * velocity[l];
      }
      loss_sum += grads.loss;
      ++batches;
      ++result.steps;
      if (config.max_steps && result.steps >= *config.max_steps) {
        budget_left = false;
        break;
      }
    }
    result.epoch_losses.push_back(loss_sum / static_cast<double>(batches));
  }
  return result;
}

std::vector<int> predict(const MlpParams& params, const Matrix& batch) {
  const Matrix out = logits(params, batch);
  std::vector<int> labels(static_cast<std::size_t>(out.rows()));
  for (Eigen::Index r = 0; r < out.rows(); ++r) labels[static_cast<std::size_t>(r)] = argmax_row(out, r);
  return labels;
}

double evaluate(const MlpParams& params, const data::Dataset& dataset) {
  if (dataset.size() == 0) throw Error(ErrorCode::kEmptyDataset, "cannot evaluate on an empty dataset");
  std::size_t correct = 0;
  for_each_chunk(dataset, [&](Eigen::Index start, Eigen::Index len, const Matrix& chunk) {
    const auto pred = predict(params, chunk);
    for (Eigen::Index i = 0; i < len; ++i) {
      if (pred[static_cast<std::size_t>(i)] == dataset.labels[static_cast<std::size_t>(start + i)]) ++correct;
    }
  });
  return static_cast<double>(correct) / static_cast<double>(dataset.size());
}

double mean_loss(const MlpParams& params, const data::Dataset& dataset) {
  if (dataset.size() == 0) throw Error(ErrorCode::kEmptyDataset, "cannot evaluate on an empty dataset");
  double total = 0.0;
  for_each_chunk(dataset, [&](Eigen::Index start, Eigen::Index len, const Matrix& chunk) {
    const Matrix p = softmax(logits(params, chunk));
    for (Eigen::Index i = 0; i < len; ++i) {
      total -= std::log(std::max(p(i, dataset.labels[static_cast<std::size_t>(start + i)]), 1e-300));
    }
  });
  return total / static_cast<double>(dataset.size());
}

double ensemble_evaluate(std::span<const MlpParams> models, const data::Dataset& dataset) {
  if (models.empty()) throw Error(ErrorCode::kInvalidConfig, "ensemble needs at least one model");
  if (dataset.size() == 0) throw Error(ErrorCode::kEmptyDataset, "cannot evaluate on an empty dataset");
  std::size_t correct = 0;
  for_each_chunk(dataset, [&](Eigen::Index start, Eigen::Index len, const Matrix& chunk) {
    Matrix mean = softmax(logits(models.front(), chunk));
    for (std::size_t m = 1; m < models.size(); ++m) mean += softmax(logits(models[m], chunk));
    mean /= static_cast<double>(models.size());
    for (Eigen::Index i = 0; i < len; ++i) {
      if (argmax_row(mean, i) == dataset.labels[static_cast<std::size_t>(start + i)]) ++correct;
    }
  });
  return static_cast<double>(correct) / static_cast<double>(dataset.size());
}

Matrix reshape_conv(const Tensor4& kernel) {
  const Eigen::Index cols = static_cast<Eigen::Index>(kernel.in_channels) * kernel.height * kernel.width;
  if (static_cast<Eigen::Index>(kernel.values.size()) != kernel.out_channels * cols) {
    throw Error(ErrorCode::kShapeMismatch, "kernel value count does not match its dimensions");
  }
  return Eigen::Map<const Matrix>(kernel.values.data(), kernel.out_channels, cols);
}

Tensor4 unreshape_conv(const Matrix& flat, int in_channels, int height, int width) {
  if (flat.cols() != static_cast<Eigen::Index>(in_channels) * height * width) {
    throw Error(ErrorCode::kShapeMismatch, "matrix width does not factor as C_in x h x w");
  }
  Tensor4 t{static_cast<int>(flat.rows()), in_channels, height, width, {}};
  t.values.assign(flat.data(), flat.data() + flat.size());
  return t;
}

Vector flatten(const MlpParams& params) {
  Vector out(params.parameter_count());
  Eigen::Index offset = 0;
  for (const auto& l : params.layers) {
    out.segment(offset, l.size()) = Eigen::Map<const Vector>(l.data(), l.size());
    offset += l.size();
  }
  return out;
}

MlpParams unflatten(const Vector& flat, std::span<const int> arch) {
  MlpParams params = init_params(arch, 0, InitScheme::kZero);
  if (flat.size() != params.parameter_count()) {
    throw Error(ErrorCode::kShapeMismatch, "flat vector length does not match the architecture");
  }
  Eigen::Index offset = 0;
  for (auto& l : params.layers) {
    Eigen::Map<Vector>(l.data(), l.size()) = flat.segment(offset, l.size());
    offset += l.size();
  }
  return params;
}

}  // namespace maecho::nn
