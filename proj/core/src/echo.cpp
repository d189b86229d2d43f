#include "maecho/echo.hpp"

#include "maecho/parallel.hpp"
#include "maecho/rng.hpp"

#include <cmath>

namespace maecho::echo {
namespace {

void require_locals(std::span<const nn::MlpParams> locals) {
  if (locals.empty()) throw Error(ErrorCode::kInvalidConfig, "aggregation needs at least one local model");
  nn::validate(locals.front());
  for (const auto& m : locals) nn::require_same_arch(locals.front(), m);
}

void require_projectors(const nn::MlpParams& model, std::span<const proj::ProjectorSet> projectors,
                        std::size_t clients) {
  if (projectors.size() != clients) {
    throw Error(ErrorCode::kShapeMismatch, std::to_string(projectors.size()) + " projector sets for " +
                                               std::to_string(clients) + " models");
  }
  for (const auto& set : projectors) {
    if (set.layers.size() != model.layers.size()) {
      throw Error(ErrorCode::kShapeMismatch, "projector set layer count differs from the model");
    }
    for (std::size_t l = 0; l < set.layers.size(); ++l) {
      const auto d = model.layers[l].cols();
      if (set.layers[l].rows() != d || set.layers[l].cols() != d) {
        throw Error(ErrorCode::kShapeMismatch, "projector " + std::to_string(l) + " is not " + std::to_string(d) +
                                                   " x " + std::to_string(d));
      }
    }
  }
}

Matrix average_layer(std::span<const nn::MlpParams> locals, std::size_t l) {
  const Matrix& base = locals.front().layers[l];
  Matrix offset = Matrix::Zero(base.rows(), base.cols());
  for (std::size_t i = 1; i < locals.size(); ++i) offset += locals[i].layers[l] - base;
  return base + offset / static_cast<double>(locals.size());
}

qp::SolverOptions echo_solver_options() {
  qp::SolverOptions options;
  options.tol = 1e-12;
  options.max_iter = 20000;
  return options;
}

}  // namespace

nn::MlpParams vanilla_average(std::span<const nn::MlpParams> locals) {
  require_locals(locals);
  nn::MlpParams out;
  for (std::size_t l = 0; l < locals.front().layers.size(); ++l) out.layers.push_back(average_layer(locals, l));
  return out;
}

nn::MlpParams init_global(std::span<const nn::MlpParams> locals, InitStrategy strategy, int init_client,
                          std::uint64_t seed) {
  require_locals(locals);
  nn::MlpParams out;
  switch (strategy) {
    case InitStrategy::kAverage:
      return vanilla_average(locals);
    case InitStrategy::kLocal:
      if (init_client < 0 || static_cast<std::size_t>(init_client) >= locals.size()) {
        throw Error(ErrorCode::kInvalidConfig, "init client " + std::to_string(init_client) + " out of range");
      }
      out = locals[static_cast<std::size_t>(init_client)];
      break;
    case InitStrategy::kRandom: {
      const auto arch = locals.front().arch();
      out = nn::init_params(arch, derive_seed(seed, "echo.random_init"));
      break;
    }
  }
  const std::size_t last = out.layers.size() - 1;
  out.layers[last] = average_layer(locals, last);
  return out;
}

AggState make_state(std::span<const nn::MlpParams> locals, std::span<const proj::ProjectorSet> projectors,
                    const AggConfig& config) {
  require_locals(locals);
  require_projectors(locals.front(), projectors, locals.size());
  AggState state;
  state.global = init_global(locals, config.init, config.init_client, config.seed);
  state.locals.assign(locals.begin(), locals.end());
  state.anchors = state.locals;
  state.projectors.assign(projectors.begin(), projectors.end());
  return state;
}

LayerStep echo_step_layer(AggState& state, std::size_t layer, double eta, double box, bool audit) {
  const std::size_t clients = state.anchors.size();
  Matrix& w = state.global.layers[layer];
  std::vector<Matrix> directions(clients);
  parallel_for(clients, [&](std::size_t i) {
    Matrix diff = w - state.anchors[i].layers[layer];
    directions[i].noalias() = diff * state.projectors[i].layers[layer];
  });

  qp::DualProblem problem{qp::gram(directions), box};
  auto solution = qp::solve_dual(problem, echo_solver_options());
  const Matrix d = qp::descent_direction(solution.alpha, directions);

  LayerStep step;
  step.alpha = solution.alpha;
  step.d_norm = d.norm();
  step.dual_objective = solution.objective;
  if (audit) step.kkt = qp::certify_kkt(problem, solution, directions);
  w.noalias() += eta * d;
  return step;
}

Matrix v_update(const Matrix& anchor, const Matrix& global, const Matrix& projector, double mu, bool normalize) {
  const Matrix diff = global - anchor;
  Matrix increment = diff;
  increment.noalias() -= (mu / (1.0 + mu)) * (diff * projector);
  if (normalize) {
    for (Eigen::Index r = 0; r < increment.rows(); ++r) {
      const double norm = increment.row(r).norm();
      if (norm < 1e-12) {
        increment.row(r).setZero();
      } else {
        increment.row(r) /= norm;
      }
    }
  }
  return anchor + increment;
}

double anchor_drift(const nn::MlpParams& anchor, const nn::MlpParams& local, const proj::ProjectorSet& projectors) {
  double total = 0.0;
  for (std::size_t l = 0; l < anchor.layers.size(); ++l) {
    const Matrix diff = anchor.layers[l] - local.layers[l];
    Matrix projected(diff.rows(), diff.cols());
    projected.noalias() = diff * projectors.layers[l];
    total += projected.squaredNorm();
  }
  return std::sqrt(total);
}

EchoResult ma_echo(std::span<const nn::MlpParams> locals, std::span<const proj::ProjectorSet> projectors,
                   const AggConfig& config, const EvalHook& eval_hook) {
  require_locals(locals);
  require_projectors(locals.front(), projectors, locals.size());
  if (config.tau < 0) throw Error(ErrorCode::kInvalidConfig, "tau must be non-negative");
  if (!(config.mu > 0.0)) throw Error(ErrorCode::kInvalidConfig, "mu must be positive");
  const double eta = config.eta;
  if (!(eta > 0.0)) throw Error(ErrorCode::kInvalidConfig, "eta must be positive");
  const std::size_t clients = locals.size();
  const double box = config.resolved_box(clients);
  if (box > 1.0 + 1e-12) throw Error(ErrorCode::kInvalidConfig, "C must not exceed 1");

  EchoResult result;
  std::vector<nn::MlpParams> aligned(locals.begin(), locals.end());
  std::vector<proj::ProjectorSet> aligned_proj(projectors.begin(), projectors.end());
  if (config.matching) {
    result.permutations.resize(clients);
    result.permutations[0].assign(locals.front().layers.size() - 1, match::Permutation{});
    for (std::size_t l = 0; l + 1 < locals.front().layers.size(); ++l) {
      result.permutations[0][l] = match::Permutation::identity(static_cast<std::size_t>(locals.front().layers[l].rows()));
    }
    for (std::size_t i = 1; i < clients; ++i) {
      auto matched = match::match_models(locals.front(), locals[i]);
      aligned[i] = std::move(matched.realigned);
      aligned_proj[i] = match::conjugate_projectors(projectors[i], matched.permutations);
      result.permutations[i] = std::move(matched.permutations);
    }
  }

  AggState state = make_state(aligned, aligned_proj, config);
  const std::size_t depth = state.global.layers.size();

  auto record = [&](int t, double mean_d_norm, std::optional<double> kkt_violation,
                    std::optional<double> kkt_residual) {
    IterationRecord rec;
    rec.t = t;
    rec.mean_d_norm = mean_d_norm;
    rec.kkt_max_violation = kkt_violation;
    rec.kkt_identity_residual = kkt_residual;
    const bool due = t == 0 || t == config.tau || (config.eval_every > 0 && t % config.eval_every == 0);
    if (due) {
      if (eval_hook) rec.accuracy = eval_hook(t, state.global);
      rec.anchor_drift.resize(clients);
      for (std::size_t i = 0; i < clients; ++i) {
        rec.anchor_drift[i] = anchor_drift(state.anchors[i], state.locals[i], state.projectors[i]);
      }
    }
    result.iterations.push_back(std::move(rec));
  };

  record(0, 0.0, std::nullopt, std::nullopt);
  if (config.snapshot_every > 0) result.snapshots.push_back(state.global);

  for (int t = 0; t < config.tau; ++t) {
    double d_norm_sum = 0.0;
    std::optional<double> worst_violation;
    std::optional<double> worst_residual;
    for (std::size_t l = 0; l < depth; ++l) {
      const LayerStep step = echo_step_layer(state, l, eta, box, config.kkt_audit);
      d_norm_sum += step.d_norm;
      if (step.kkt) {
        worst_violation = std::max(worst_violation.value_or(0.0), step.kkt->max_violation);
        worst_residual = std::max(worst_residual.value_or(0.0), step.kkt->identity_residual);
      }
      parallel_for(clients, [&](std::size_t i) {
        state.anchors[i].layers[l] = v_update(state.anchors[i].layers[l], state.global.layers[l],
                                              state.projectors[i].layers[l], config.mu, config.normalize);
      });
    }
    state.t = t + 1;
    record(state.t, d_norm_sum / static_cast<double>(depth), worst_violation, worst_residual);
    if (config.snapshot_every > 0 && state.t % config.snapshot_every == 0) result.snapshots.push_back(state.global);
  }

  result.global = std::move(state.global);
  result.anchors = std::move(state.anchors);
  return result;
}

nn::MlpParams matched_average(std::span<const nn::MlpParams> locals) {
  require_locals(locals);
  std::vector<nn::MlpParams> aligned{locals.front()};
  for (std::size_t i = 1; i < locals.size(); ++i) aligned.push_back(match::match_models(locals.front(), locals[i]).realigned);
  return vanilla_average(aligned);
}

}  // namespace maecho::echo
