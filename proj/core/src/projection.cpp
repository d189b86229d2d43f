#include "maecho/projection.hpp"

#include "maecho/rng.hpp"

#include <algorithm>
#include <numeric>

namespace maecho::proj {

Matrix projector_batch(const Matrix& x, double ridge) {
  if (!(ridge > 0.0)) throw Error(ErrorCode::kInvalidConfig, "projector ridge must be positive");
  const Eigen::Index n = x.rows();
  const Eigen::Index d = x.cols();
  Matrix p(d, d);
  if (n > d) {
    Matrix gram(d, d);
    gram.setZero();
    gram.selfadjointView<Eigen::Lower>().rankUpdate(x.transpose());
    gram.triangularView<Eigen::StrictlyUpper>() = gram.transpose();
    Matrix system = gram;
    system.diagonal().array() += ridge;
    Eigen::LLT<Matrix> llt(system);
    if (llt.info() != Eigen::Success) throw Error(ErrorCode::kSingularSystem, "X^T X + zI is not positive definite");
    // gram and (gram + zI) commute, so (gram + zI)^{-1} gram is the same matrix.
    p = llt.solve(gram);
  } else {
    Matrix system(n, n);
    system.noalias() = x * x.transpose();
    system.diagonal().array() += ridge;
    Eigen::LLT<Matrix> llt(system);
    if (llt.info() != Eigen::Success) throw Error(ErrorCode::kSingularSystem, "X X^T + zI is not positive definite");
    p.noalias() = x.transpose() * llt.solve(x);
  }
  return 0.5 * (p + p.transpose());
}

RlsProjector::RlsProjector(Eigen::Index dim, double ridge) : q_(Matrix::Identity(dim, dim)), ridge_(ridge) {
  if (!(ridge > 0.0)) throw Error(ErrorCode::kInvalidConfig, "projector ridge must be positive");
}

void RlsProjector::add_row(const Eigen::Ref<const Vector>& x) {
  if (x.size() != q_.rows()) throw Error(ErrorCode::kShapeMismatch, "row width differs from projector dimension");
  const Vector qx = q_ * x;
  const double denom = ridge_ + x.dot(qx);
  q_.selfadjointView<Eigen::Lower>().rankUpdate(qx, -1.0 / denom);
  q_.triangularView<Eigen::StrictlyUpper>() = q_.transpose();
  ++rows_seen_;
}

void RlsProjector::add_rows(const Matrix& x) {
  for (Eigen::Index r = 0; r < x.rows(); ++r) add_row(x.row(r).transpose());
}

void RlsProjector::add_rows_blocked(const Matrix& x, Eigen::Index block) {
  if (x.cols() != q_.rows()) throw Error(ErrorCode::kShapeMismatch, "row width differs from projector dimension");
  block = std::max<Eigen::Index>(block, 1);
  for (Eigen::Index start = 0; start < x.rows(); start += block) {
    const Eigen::Index len = std::min(block, x.rows() - start);
    const auto rows = x.middleRows(start, len);
    // Q <- Q - Q X^T (zI + X Q X^T)^{-1} X Q
    Matrix qxt(q_.rows(), len);
    qxt.noalias() = q_ * rows.transpose();
    Matrix inner(len, len);
    inner.noalias() = rows * qxt;
    inner = 0.5 * (inner + inner.transpose());
    inner.diagonal().array() += ridge_;
    Eigen::LLT<Matrix> llt(inner);
    if (llt.info() != Eigen::Success) throw Error(ErrorCode::kSingularSystem, "RLS block system is not positive definite");
    const Matrix solved = llt.solve(qxt.transpose());
    q_.noalias() -= qxt * solved;
    q_ = 0.5 * (q_ + q_.transpose());
    rows_seen_ += static_cast<std::size_t>(len);
  }
}

Matrix RlsProjector::projector() const {
  Matrix p = -q_;
  p.diagonal().array() += 1.0;
  return p;
}

Matrix projector_rls(const Matrix& rows, double ridge) {
  RlsProjector acc(rows.cols(), ridge);
  acc.add_rows(rows);
  return acc.projector();
}

ProjectorSet capture_projectors(const nn::MlpParams& params, const data::Dataset& dataset,
                                std::span<const std::size_t> shard, const CaptureConfig& config) {
  if (shard.empty()) throw Error(ErrorCode::kEmptyShard, "cannot build projectors from an empty shard");
  nn::validate(params);

  std::vector<std::size_t> rows(shard.begin(), shard.end());
  if (rows.size() > config.sample_cap) {
    auto rng = make_rng(config.seed, "projection.sample");
    shuffle(rows, rng);
    rows.resize(config.sample_cap);
    std::sort(rows.begin(), rows.end());
  }

  std::vector<RlsProjector> acc;
  for (const auto& layer : params.layers) acc.emplace_back(layer.cols(), config.ridge);

  constexpr std::size_t kChunk = 256;
  for (std::size_t start = 0; start < rows.size(); start += kChunk) {
    const std::size_t len = std::min(kChunk, rows.size() - start);
    Matrix batch(static_cast<Eigen::Index>(len), dataset.images.cols());
    for (std::size_t i = 0; i < len; ++i) {
      batch.row(static_cast<Eigen::Index>(i)) = dataset.images.row(static_cast<Eigen::Index>(rows[start + i]));
    }
    const auto fwd = nn::forward(params, batch);
    for (std::size_t l = 0; l < acc.size(); ++l) acc[l].add_rows_blocked(fwd.trace.inputs[l]);
  }

  ProjectorSet out;
  out.ridge = config.ridge;
  for (const auto& a : acc) out.layers.push_back(a.projector());
  return out;
}

double asymmetry(const Matrix& p) { return (p - p.transpose()).norm(); }

}  // namespace maecho::proj
