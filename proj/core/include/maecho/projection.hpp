#pragma once

#include "maecho/data.hpp"
#include "maecho/nn.hpp"
#include "maecho/types.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace maecho::proj {

inline constexpr double kDefaultRidge = 1000.0;
inline constexpr std::size_t kDefaultSampleCap = 2000;

/// One projector per layer; layers[l] is (C_in^l + 1) square and acts on the
/// right of the layer's weight matrix.
struct ProjectorSet {
  std::vector<Matrix> layers;
  double ridge = kDefaultRidge;
};

/// P = X^T (X X^T + z I)^{-1} X, evaluated through whichever of the n x n or
/// d x d systems is smaller (for n > d, P = X^T X (X^T X + z I)^{-1}).
/// Throws SingularSystem if the Cholesky factorization fails.
Matrix projector_batch(const Matrix& x, double ridge);

/// Streaming form of projector_batch. Keeps Q = I - P and folds each row in
/// with Q <- Q - (Q x)(Q x)^T / (z + x^T Q x). After any sequence of rows the
/// result equals the batch formula on the stacked rows, up to rounding.
class RlsProjector {
 public:
  RlsProjector(Eigen::Index dim, double ridge);

  void add_row(const Eigen::Ref<const Vector>& x);
  /// Folds in all rows of `x`, in order, as a sequence of rank-1 updates.
  void add_rows(const Matrix& x);
  /// Woodbury form of add_rows: absorbs `block` rows at a time with one
  /// block-sized solve. Same fixed point, far fewer passes over Q.
  void add_rows_blocked(const Matrix& x, Eigen::Index block = 64);

  Matrix projector() const;
  const Matrix& complement() const { return q_; }
  Eigen::Index dim() const { return q_.rows(); }
  std::size_t rows_seen() const { return rows_seen_; }

 private:
  Matrix q_;
  double ridge_;
  std::size_t rows_seen_ = 0;
};

/// Projector from a stream of rows via RlsProjector::add_rows.
Matrix projector_rls(const Matrix& rows, double ridge);

struct CaptureConfig {
  double ridge = kDefaultRidge;
  std::size_t sample_cap = kDefaultSampleCap;
  std::uint64_t seed = 0;  // picks the sample when the shard exceeds the cap
};

/// Runs the model over (at most sample_cap, seeded sample of) the shard rows
/// and builds each layer's projector from the bias-augmented layer inputs
/// (post-ReLU for hidden layers).
ProjectorSet capture_projectors(const nn::MlpParams& params, const data::Dataset& dataset,
                                std::span<const std::size_t> shard, const CaptureConfig& config = {});

/// ||P - P^T||_F.
double asymmetry(const Matrix& p);

}  // namespace maecho::proj
