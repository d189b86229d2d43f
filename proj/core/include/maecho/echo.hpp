#pragma once

#include "maecho/matching.hpp"
#include "maecho/nn.hpp"
#include "maecho/projection.hpp"
#include "maecho/qp.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

namespace maecho::echo {

enum class InitStrategy { kAverage, kLocal, kRandom };

struct AggConfig {
  int tau = 200;
  /// Step on W.
  double eta = 1.0;
  double mu = 1.0;
  /// Box bound on the dual multipliers. Unset means 1/N.
  std::optional<double> box;
  double ridge = proj::kDefaultRidge;
  bool normalize = false;
  InitStrategy init = InitStrategy::kAverage;
  int init_client = 0;  // kLocal
  bool matching = false;
  std::uint64_t seed = 0;
  int eval_every = 5;
  bool kkt_audit = false;
  int snapshot_every = 0;  // 0 disables snapshots

  double resolved_box(std::size_t clients) const { return box.value_or(1.0 / static_cast<double>(clients)); }
};

/// Uniform per-layer mean, computed as W_0 + mean_i (W_i - W_0) so that
/// identical inputs reproduce the input bit for bit.
nn::MlpParams vanilla_average(std::span<const nn::MlpParams> locals);

/// Starting point for the iteration. Every strategy averages the output
/// (classification) layer; the others come from the average, from client
/// `init_client`, or from a fresh random initialization.
nn::MlpParams init_global(std::span<const nn::MlpParams> locals, InitStrategy strategy, int init_client,
                          std::uint64_t seed);

struct AggState {
  nn::MlpParams global;                // W^(t)
  std::vector<nn::MlpParams> anchors;  // V_i
  std::vector<nn::MlpParams> locals;   // W_i (after optional realignment)
  std::vector<proj::ProjectorSet> projectors;
  int t = 0;
};

/// Builds the state for the given locals and projectors: W^(0) from
/// init_global and V_i = W_i.
AggState make_state(std::span<const nn::MlpParams> locals, std::span<const proj::ProjectorSet> projectors,
                    const AggConfig& config);

struct LayerStep {
  Vector alpha;
  double d_norm = 0.0;  // ||D||_F
  double dual_objective = 0.0;
  std::optional<qp::KktReport> kkt;
};

/// One descent step on layer l: G_i = (W - V_i) P_i, alpha from the dual QP,
/// W <- W + eta D with D = -sum 2 alpha_i G_i. Anchors are untouched.
LayerStep echo_step_layer(AggState& state, std::size_t layer, double eta, double box, bool audit = false);

/// V <- V + Norm((W - V)(I - mu/(1+mu) P)); Norm scales each row of the
/// increment to unit length (rows below 1e-12 stay zero) when enabled.
Matrix v_update(const Matrix& anchor, const Matrix& global, const Matrix& projector, double mu, bool normalize);

struct IterationRecord {
  int t = 0;
  double mean_d_norm = 0.0;  // averaged over layers
  std::optional<double> accuracy;
  std::vector<double> anchor_drift;  // per client: sqrt(sum_l ||(V_i - W_i) P_i||_F^2)
  std::optional<double> kkt_max_violation;
  std::optional<double> kkt_identity_residual;
};

struct EchoResult {
  nn::MlpParams global;
  std::vector<IterationRecord> iterations;
  std::vector<std::vector<match::Permutation>> permutations;  // per client, empty without matching
  std::vector<nn::MlpParams> snapshots;  // W^(0), then every snapshot_every iterations
  std::vector<nn::MlpParams> anchors;    // final V_i, in the realigned frame when matching
};

/// Called on t = 0, every eval_every iterations and after the last one.
using EvalHook = std::function<double(int t, const nn::MlpParams& global)>;

/// Full layer-wise loop. For t < tau and each layer in order: one descent
/// step, then every anchor's update against the new W of that layer. With
/// matching enabled every local is first realigned to client 0 and its
/// projectors conjugated accordingly.
EchoResult ma_echo(std::span<const nn::MlpParams> locals, std::span<const proj::ProjectorSet> projectors,
                   const AggConfig& config, const EvalHook& eval_hook = {});

/// Neuron-matching baseline: realign every model to client 0, then average.
nn::MlpParams matched_average(std::span<const nn::MlpParams> locals);

/// ||(V - W_i) P||_F summed in quadrature over layers.
double anchor_drift(const nn::MlpParams& anchor, const nn::MlpParams& local, const proj::ProjectorSet& projectors);

}  // namespace maecho::echo
