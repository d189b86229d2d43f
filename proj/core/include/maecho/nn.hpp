#pragma once

#include "maecho/data.hpp"
#include "maecho/types.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace maecho::nn {

/// Fully connected ReLU network. Layer l is a C_out x (C_in + 1) matrix whose
/// last column holds the bias, so the layer acts on inputs augmented with a
/// trailing constant 1. The output layer is linear and feeds softmax
/// cross-entropy.
struct MlpParams {
  std::vector<Matrix> layers;

  std::size_t num_layers() const { return layers.size(); }
  /// Dimension chain, e.g. {784, 400, 200, 100, 10}.
  std::vector<int> arch() const;
  Eigen::Index input_dim() const { return layers.front().cols() - 1; }
  Eigen::Index output_dim() const { return layers.back().rows(); }
  /// Total parameter count including biases.
  Eigen::Index parameter_count() const;

  bool operator==(const MlpParams& other) const;
};

/// Throws ShapeMismatch unless adjacent layers chain.
void validate(const MlpParams& params);
/// Throws ArchMismatch unless both have identical layer shapes.
void require_same_arch(const MlpParams& a, const MlpParams& b);

enum class InitScheme {
  kUniformFanIn,  // U(-1/sqrt(C_in), 1/sqrt(C_in)), zero bias
  kZero,
};

MlpParams init_params(std::span<const int> arch, std::uint64_t seed, InitScheme scheme = InitScheme::kUniformFanIn);

/// Per-layer inputs seen during a forward pass, each augmented with a
/// trailing column of ones: inputs[0] is the raw batch, inputs[l] the ReLU
/// output of layer l - 1.
struct ForwardTrace {
  std::vector<Matrix> inputs;
};

struct ForwardResult {
  Matrix logits;
  ForwardTrace trace;
};

ForwardResult forward(const MlpParams& params, const Matrix& batch);
/// Same arithmetic as forward() without keeping the trace.
Matrix logits(const MlpParams& params, const Matrix& batch);

/// Row-wise softmax, stabilized by the row maximum.
Matrix softmax(const Matrix& logits);

enum class Reduction { kMean, kSum };

struct Gradients {
  double loss = 0.0;  // cross-entropy, reduced like the gradients
  std::vector<Matrix> layers;
};

Gradients backward(const MlpParams& params, const Matrix& batch, std::span<const int> labels,
                   Reduction reduction = Reduction::kMean);

struct TrainConfig {
  int epochs = 10;
  double lr = 0.01;
  double momentum = 0.5;
  int batch_size = 64;
  std::uint64_t seed = 0;
  std::optional<long> max_steps;
};

struct TrainResult {
  MlpParams params;
  std::vector<double> epoch_losses;  // mean mini-batch loss per (possibly partial) epoch
  long steps = 0;
};

/// Mini-batch SGD with a heavy-ball buffer (v <- m v + g, w <- w - lr v),
/// reshuffling the shard every epoch. Stops early after max_steps updates.
TrainResult train_sgd(const MlpParams& init, const data::Dataset& dataset, std::span<const std::size_t> shard,
                      const TrainConfig& config);

/// Argmax class per row, ties to the lowest index.
std::vector<int> predict(const MlpParams& params, const Matrix& batch);

double evaluate(const MlpParams& params, const data::Dataset& dataset);
double mean_loss(const MlpParams& params, const data::Dataset& dataset);
/// Accuracy of the mean softmax vector across models.
double ensemble_evaluate(std::span<const MlpParams> models, const data::Dataset& dataset);

/// 4-D convolution kernel, row-major over (out, in, h, w).
struct Tensor4 {
  int out_channels = 0;
  int in_channels = 0;
  int height = 0;
  int width = 0;
  std::vector<double> values;
};

/// C_out x C_in x h x w  ->  C_out x (C_in * h * w), row-major flatten.
Matrix reshape_conv(const Tensor4& kernel);
Tensor4 unreshape_conv(const Matrix& flat, int in_channels, int height, int width);

/// Concatenation of all layers, row-major, in layer order.
Vector flatten(const MlpParams& params);
MlpParams unflatten(const Vector& flat, std::span<const int> arch);

}  // namespace maecho::nn
