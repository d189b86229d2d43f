#include "maecho/qp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace maecho::qp {
namespace {

constexpr double kActiveTol = 1e-9;

double frobenius_dot(const Matrix& a, const Matrix& b) { return (a.array() * b.array()).sum(); }

void check_box(Eigen::Index n, double box) {
  if (n < 1) throw Error(ErrorCode::kInvalidConfig, "dual problem needs at least one client");
  // Allow rounding in C = 1/N passed through text configs.
  if (box * static_cast<double>(n) < 1.0 - 1e-12) {
    throw Error(ErrorCode::kInfeasible,
                "C = " + std::to_string(box) + " < 1/N leaves no alpha with sum 1 inside the box");
  }
}

bool is_uniform_box(Eigen::Index n, double box) { return box * static_cast<double>(n) <= 1.0 + 1e-12; }

}  // namespace

Matrix gram(std::span<const Matrix> directions) {
  const auto n = static_cast<Eigen::Index>(directions.size());
  Matrix k(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i; j < n; ++j) {
      const auto& gi = directions[static_cast<std::size_t>(i)];
      const auto& gj = directions[static_cast<std::size_t>(j)];
      if (gi.rows() != gj.rows() || gi.cols() != gj.cols()) {
        throw Error(ErrorCode::kShapeMismatch, "gradient directions differ in shape");
      }
      k(i, j) = k(j, i) = 4.0 * frobenius_dot(gi, gj);
    }
  }
  return 0.5 * (k + k.transpose());
}

Vector project_simplex_box(const Vector& v, double box) {
  const Eigen::Index n = v.size();
  check_box(n, box);
  if (is_uniform_box(n, box)) return Vector::Constant(n, 1.0 / static_cast<double>(n));

  auto mass = [&](double theta) { return (v.array() - theta).cwiseMax(0.0).cwiseMin(box).sum(); };
  // mass() is non-increasing in theta; bracket the root of mass(theta) = 1.
  double lo = v.minCoeff() - box;  // every coordinate clamps to C: mass = N C >= 1
  double hi = v.maxCoeff();        // every coordinate clamps to 0: mass = 0
  for (int it = 0; it < 200 && hi - lo > 1e-15 * std::max(1.0, std::abs(hi) + std::abs(lo)); ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mass(mid) > 1.0) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  Vector a = (v.array() - 0.5 * (lo + hi)).cwiseMax(0.0).cwiseMin(box);
  // Spread the last ulp-level mass error over the free coordinates.
  const double err = 1.0 - a.sum();
  Eigen::Index free = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (a(i) > 0.0 && a(i) < box) ++free;
  }
  if (free > 0) {
    for (Eigen::Index i = 0; i < n; ++i) {
      if (a(i) > 0.0 && a(i) < box) a(i) += err / static_cast<double>(free);
    }
  }
  return a;
}

double dual_objective(const Matrix& gram, const Vector& alpha) { return 0.5 * alpha.dot(gram * alpha); }

DualSolution solve_dual(const DualProblem& problem, const SolverOptions& options) {
  const Eigen::Index n = problem.gram.rows();
  if (problem.gram.cols() != n) throw Error(ErrorCode::kNonSquare, "Gram matrix must be square");
  check_box(n, problem.box);

  DualSolution sol;
  sol.alpha = Vector::Constant(n, 1.0 / static_cast<double>(n));

  // PSD repair.
  Matrix k = 0.5 * (problem.gram + problem.gram.transpose());
  Eigen::SelfAdjointEigenSolver<Matrix> eig(k);
  const Vector spectrum = eig.eigenvalues().cwiseMax(0.0);
  k = eig.eigenvectors() * spectrum.asDiagonal() * eig.eigenvectors().transpose();
  k = 0.5 * (k + k.transpose());

  const double lambda_max = spectrum.size() > 0 ? spectrum.maxCoeff() : 0.0;
  if (is_uniform_box(n, problem.box) || lambda_max <= 0.0) {
    sol.objective = dual_objective(k, sol.alpha);
    sol.converged = true;
    return sol;
  }

  const double step = 1.0 / (lambda_max * (1.0 + 1e-9) + std::numeric_limits<double>::min());
  double objective = dual_objective(k, sol.alpha);
  for (int it = 0; it < options.max_iter; ++it) {
    const Vector next = project_simplex_box(sol.alpha - step * (k * sol.alpha), problem.box);
    const double moved = (next - sol.alpha).lpNorm<Eigen::Infinity>();
    const double next_objective = dual_objective(k, next);
    sol.iterations = it + 1;
    // A 1/L step never increases the objective; anything else is rounding.
    if (next_objective <= objective) {
      sol.alpha = next;
      objective = next_objective;
    }
    if (options.objective_trace) options.objective_trace->push_back(objective);
    if (moved <= options.tol) {
      sol.converged = true;
      break;
    }
  }
  sol.objective = objective;
  return sol;
}

Matrix descent_direction(const Vector& alpha, std::span<const Matrix> directions) {
  if (directions.empty()) throw Error(ErrorCode::kInvalidConfig, "no gradient directions");
  if (alpha.size() != static_cast<Eigen::Index>(directions.size())) {
    throw Error(ErrorCode::kShapeMismatch, "alpha length differs from the number of directions");
  }
  Matrix d = Matrix::Zero(directions.front().rows(), directions.front().cols());
  for (std::size_t i = 0; i < directions.size(); ++i) {
    const double a = alpha(static_cast<Eigen::Index>(i));
    if (a != 0.0) d.noalias() -= (2.0 * a) * directions[i];
  }
  return d;
}

KktReport certify_kkt(const DualProblem& problem, const DualSolution& solution, std::span<const Matrix> directions) {
  const Matrix d = descent_direction(solution.alpha, directions);
  const double box = problem.box;
  const auto n = static_cast<Eigen::Index>(directions.size());

  std::vector<double> slope(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) slope[static_cast<std::size_t>(i)] = 2.0 * frobenius_dot(directions[static_cast<std::size_t>(i)], d);
  const double d_sq = d.squaredNorm();

  // Classify multipliers: at the upper bound, at zero, or strictly inside.
  std::vector<bool> at_box(static_cast<std::size_t>(n)), at_zero(static_cast<std::size_t>(n));
  double interior_sum = 0.0;
  int interior = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double a = solution.alpha(i);
    const auto u = static_cast<std::size_t>(i);
    at_box[u] = a >= box - kActiveTol;
    at_zero[u] = !at_box[u] && a <= kActiveTol;
    if (!at_box[u] && !at_zero[u]) {
      interior_sum += slope[u];
      ++interior;
    }
  }

  KktReport report;
  if (interior > 0) {
    report.v_star = interior_sum / interior;
  } else {
    // Only bound multipliers: v* is any value between the largest slope at
    // zero and the smallest slope at C. Take the latter so that eps* >= 0 with
    // at least one tight coordinate.
    double lowest_at_box = std::numeric_limits<double>::infinity();
    double highest_at_zero = -std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 0; i < n; ++i) {
      const auto u = static_cast<std::size_t>(i);
      if (at_box[u]) lowest_at_box = std::min(lowest_at_box, slope[u]);
      if (at_zero[u]) highest_at_zero = std::max(highest_at_zero, slope[u]);
    }
    report.v_star = std::isfinite(lowest_at_box) ? lowest_at_box : highest_at_zero;
    if (!std::isfinite(report.v_star)) report.v_star = -d_sq;
  }

  report.eps_star.assign(static_cast<std::size_t>(n), 0.0);
  double eps_sum = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto u = static_cast<std::size_t>(i);
    if (at_box[u]) report.eps_star[u] = std::max(0.0, slope[u] - report.v_star);
    eps_sum += report.eps_star[u];
  }

  report.max_violation = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto u = static_cast<std::size_t>(i);
    report.max_violation = std::max(report.max_violation, slope[u] - report.v_star - report.eps_star[u]);
  }
  report.identity_residual = std::abs(-d_sq - report.v_star - box * eps_sum);
  return report;
}

}  // namespace maecho::qp
