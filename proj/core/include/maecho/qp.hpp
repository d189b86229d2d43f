#pragma once

#include "maecho/types.hpp"

#include <span>
#include <vector>

namespace maecho::qp {

// Descent-direction dual for N clients:
//
//   min_alpha  1/2 || sum_i 2 alpha_i G_i ||_F^2  =  1/2 alpha^T K alpha
//   s.t.       sum_i alpha_i = 1,  0 <= alpha_i <= C
//
// where G_i = (W - V_i) P_i and K_ij = 4 <G_i, G_j>.

struct DualProblem {
  Matrix gram;  // K, N x N
  double box = 1.0;  // C
};

struct KktReport {
  double v_star = 0.0;
  std::vector<double> eps_star;
  double max_violation = 0.0;      // max_i  2<G_i, D> - v* - eps_i
  double identity_residual = 0.0;  // | -||D||^2 - v* - C sum eps |
};

struct DualSolution {
  Vector alpha;
  double objective = 0.0;
  int iterations = 0;
  bool converged = false;
};

struct SolverOptions {
  double tol = 1e-13;
  int max_iter = 200000;
  /// When set, records the objective after every iteration.
  std::vector<double>* objective_trace = nullptr;
};

/// K_ij = 4 <G_i, G_j>_F, symmetrized.
Matrix gram(std::span<const Matrix> directions);

/// Euclidean projection of v onto {sum a = 1, 0 <= a <= C} by bisection on
/// the threshold theta in a_i = clamp(v_i - theta, 0, C).
Vector project_simplex_box(const Vector& v, double box);

/// Projected gradient on 1/2 a^T K a with step 1 / (lambda_max + delta),
/// starting from the uniform point. K is symmetrized and its spectrum floored
/// at zero first. C = 1/N returns the uniform point directly, as does K = 0.
/// Throws Infeasible when C < 1/N.
DualSolution solve_dual(const DualProblem& problem, const SolverOptions& options = {});

/// D = -sum_i 2 alpha_i G_i.
Matrix descent_direction(const Vector& alpha, std::span<const Matrix> directions);

/// Recovers v* and eps* of the primal from complementary slackness and
/// reports how far the primal constraints 2<G_i, D> <= v* + eps_i are from
/// holding.
KktReport certify_kkt(const DualProblem& problem, const DualSolution& solution, std::span<const Matrix> directions);

double dual_objective(const Matrix& gram, const Vector& alpha);

}  // namespace maecho::qp
