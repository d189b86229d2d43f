#include "maecho/matching.hpp"

#include <algorithm>
#include <limits>
#include <numeric>

namespace maecho::match {

Permutation Permutation::identity(std::size_t m) {
  Permutation p;
  p.perm.resize(m);
  std::iota(p.perm.begin(), p.perm.end(), 0);
  return p;
}

bool Permutation::is_bijection() const {
  std::vector<bool> seen(perm.size(), false);
  for (int v : perm) {
    if (v < 0 || static_cast<std::size_t>(v) >= perm.size() || seen[static_cast<std::size_t>(v)]) return false;
    seen[static_cast<std::size_t>(v)] = true;
  }
  return true;
}

Permutation Permutation::inverse() const {
  Permutation inv;
  inv.perm.resize(perm.size());
  for (std::size_t i = 0; i < perm.size(); ++i) inv.perm[static_cast<std::size_t>(perm[i])] = static_cast<int>(i);
  return inv;
}

Permutation hungarian(const Matrix& cost) {
  if (cost.rows() != cost.cols()) throw Error(ErrorCode::kNonSquare, "assignment cost matrix must be square");
  if (!cost.allFinite()) throw Error(ErrorCode::kInvalidConfig, "assignment cost must be finite");
  const auto m = static_cast<std::size_t>(cost.rows());
  constexpr double kInf = std::numeric_limits<double>::infinity();

  // 1-based potentials; column 0 is the virtual source.
  std::vector<double> u(m + 1, 0.0), v(m + 1, 0.0), min_to(m + 1);
  std::vector<std::size_t> row_of(m + 1, 0), way(m + 1, 0);
  std::vector<bool> used(m + 1);

  for (std::size_t row = 1; row <= m; ++row) {
    row_of[0] = row;
    std::size_t col = 0;
    std::fill(min_to.begin(), min_to.end(), kInf);
    std::fill(used.begin(), used.end(), false);
    do {
      used[col] = true;
      const std::size_t r = row_of[col];
      double delta = kInf;
      std::size_t next = 0;
      for (std::size_t j = 1; j <= m; ++j) {
        if (used[j]) continue;
        const double reduced = cost(static_cast<Eigen::Index>(r - 1), static_cast<Eigen::Index>(j - 1)) - u[r] - v[j];
        if (reduced < min_to[j]) {
          min_to[j] = reduced;
          way[j] = col;
        }
        if (min_to[j] < delta) {
          delta = min_to[j];
          next = j;
        }
      }
      for (std::size_t j = 0; j <= m; ++j) {
        if (used[j]) {
          u[row_of[j]] += delta;
          v[j] -= delta;
        } else {
          min_to[j] -= delta;
        }
      }
      col = next;
    } while (row_of[col] != 0);
    do {
      const std::size_t prev = way[col];
      row_of[col] = row_of[prev];
      col = prev;
    } while (col != 0);
  }

  Permutation p;
  p.perm.assign(m, 0);
  for (std::size_t j = 1; j <= m; ++j) p.perm[row_of[j] - 1] = static_cast<int>(j - 1);
  return p;
}

double assignment_cost(const Matrix& cost, const Permutation& p) {
  double total = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) total += cost(static_cast<Eigen::Index>(i), p.perm[i]);
  return total;
}

Matrix permute_rows(const Matrix& m, const Permutation& p) {
  if (static_cast<Eigen::Index>(p.size()) != m.rows()) throw Error(ErrorCode::kShapeMismatch, "permutation size differs from row count");
  Matrix out(m.rows(), m.cols());
  for (std::size_t i = 0; i < p.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = m.row(p.perm[i]);
  return out;
}

Matrix permute_leading_columns(const Matrix& m, const Permutation& p) {
  if (static_cast<Eigen::Index>(p.size()) > m.cols()) throw Error(ErrorCode::kShapeMismatch, "permutation larger than column count");
  Matrix out = m;
  for (std::size_t j = 0; j < p.size(); ++j) out.col(static_cast<Eigen::Index>(j)) = m.col(p.perm[j]);
  return out;
}

MatchResult match_models(const nn::MlpParams& reference, const nn::MlpParams& model) {
  nn::require_same_arch(reference, model);
  MatchResult result;
  result.realigned = model;
  auto& layers = result.realigned.layers;
  for (std::size_t l = 0; l + 1 < layers.size(); ++l) {
    const Matrix& ref = reference.layers[l];
    const Matrix& cur = layers[l];
    const Eigen::Index m = ref.rows();
    // cost(h, k) = ||ref_h||^2 + ||cur_k||^2 - 2 <ref_h, cur_k>
    Matrix cost(m, m);
    cost.noalias() = -2.0 * ref * cur.transpose();
    cost.colwise() += ref.rowwise().squaredNorm();
    cost.rowwise() += cur.rowwise().squaredNorm().transpose();
    cost = cost.cwiseMax(0.0);

    Permutation p = hungarian(cost);
    layers[l] = permute_rows(cur, p);
    layers[l + 1] = permute_leading_columns(layers[l + 1], p);
    result.permutations.push_back(std::move(p));
  }
  return result;
}

Matrix conjugate_projector(const Matrix& projector, const Permutation& perm) {
  if (projector.rows() != projector.cols()) throw Error(ErrorCode::kNonSquare, "projector must be square");
  if (static_cast<Eigen::Index>(perm.size()) > projector.rows()) {
    throw Error(ErrorCode::kShapeMismatch, "permutation larger than projector");
  }
  std::vector<Eigen::Index> index(static_cast<std::size_t>(projector.rows()));
  std::iota(index.begin(), index.end(), Eigen::Index{0});
  for (std::size_t j = 0; j < perm.size(); ++j) index[j] = perm.perm[j];
  Matrix out(projector.rows(), projector.cols());
  for (Eigen::Index a = 0; a < out.rows(); ++a) {
    for (Eigen::Index b = 0; b < out.cols(); ++b) {
      out(a, b) = projector(index[static_cast<std::size_t>(a)], index[static_cast<std::size_t>(b)]);
    }
  }
  return out;
}

proj::ProjectorSet conjugate_projectors(const proj::ProjectorSet& projectors, std::span<const Permutation> perms) {
  if (perms.size() + 1 != projectors.layers.size()) {
    throw Error(ErrorCode::kShapeMismatch, "need one permutation per hidden layer");
  }
  proj::ProjectorSet out = projectors;
  for (std::size_t l = 1; l < out.layers.size(); ++l) {
    out.layers[l] = conjugate_projector(projectors.layers[l], perms[l - 1]);
  }
  return out;
}

}  // namespace maecho::match
