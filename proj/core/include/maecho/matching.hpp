#pragma once

#include "maecho/nn.hpp"
#include "maecho/projection.hpp"
#include "maecho/types.hpp"

#include <span>
#include <vector>

namespace maecho::match {

/// Row i of a permuted matrix is row perm[i] of the original.
struct Permutation {
  std::vector<int> perm;

  static Permutation identity(std::size_t m);
  std::size_t size() const { return perm.size(); }
  bool is_bijection() const;
  Permutation inverse() const;
  bool operator==(const Permutation&) const = default;
};

/// Minimum-cost assignment on a square matrix: returns perm minimizing
/// sum_i cost(i, perm[i]). O(m^3) shortest augmenting paths with
/// potentials; ties go to the lowest column index.
Permutation hungarian(const Matrix& cost);
double assignment_cost(const Matrix& cost, const Permutation& p);

Matrix permute_rows(const Matrix& m, const Permutation& p);
/// Reorders the first p.size() columns; trailing columns (the bias) stay put.
Matrix permute_leading_columns(const Matrix& m, const Permutation& p);

struct MatchResult {
  nn::MlpParams realigned;
  std::vector<Permutation> permutations;  // one per hidden layer
};

/// Aligns the hidden units of `model` to `reference`, input side first. At
/// each hidden layer the cost is the squared distance between weight rows
/// (bias included), computed after the previous layer's permutation has been
/// applied to the model's input columns. Output rows are never permuted, so
/// the realigned model computes the same function as the input.
MatchResult match_models(const nn::MlpParams& reference, const nn::MlpParams& model);

/// T^T P T for a projector acting on a layer input whose leading block was
/// reordered by `perm`; the trailing bias coordinate is fixed.
Matrix conjugate_projector(const Matrix& projector, const Permutation& perm);

/// Applies match permutations to a per-layer projector set: projector l >= 1
/// is conjugated by the permutation of hidden layer l - 1.
proj::ProjectorSet conjugate_projectors(const proj::ProjectorSet& projectors, std::span<const Permutation> perms);

}  // namespace maecho::match
