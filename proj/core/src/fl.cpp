#include "maecho/fl.hpp"

#include "maecho/parallel.hpp"
#include "maecho/rng.hpp"

#include <algorithm>
#include <numeric>
#include <sstream>

namespace maecho::fl {

std::vector<int> sample_clients(std::uint64_t seed, int round, int num_clients, int sample) {
  if (sample < 1 || sample > num_clients) {
    throw Error(ErrorCode::kInvalidConfig, "sample per round must lie in [1, " + std::to_string(num_clients) + "]");
  }
  std::vector<int> all(static_cast<std::size_t>(num_clients));
  std::iota(all.begin(), all.end(), 0);
  auto rng = make_rng(seed, "fl.sample", static_cast<std::uint64_t>(round));
  shuffle(all, rng);
  all.resize(static_cast<std::size_t>(sample));
  std::sort(all.begin(), all.end());
  return all;
}

RoundResult run_round(const nn::MlpParams& global, const data::Dataset& train, std::span<const data::ClientShard> shards,
                      std::span<const int> sampled, int round, const FlConfig& config) {
  if (sampled.empty()) throw Error(ErrorCode::kInvalidConfig, "no clients sampled");
  const std::size_t m = sampled.size();
  std::vector<nn::MlpParams> trained(m);
  std::vector<proj::ProjectorSet> projectors(m);
  std::vector<double> losses(m, 0.0);
  const bool need_projectors = config.aggregator == Aggregator::kMaEcho && m > 1;

  parallel_for(m, [&](std::size_t k) {
    const auto client = static_cast<std::size_t>(sampled[k]);
    const auto& shard = shards[client].indices;
    nn::TrainConfig tc = config.train;
    tc.seed = derive_seed(config.seed, "fl.train", static_cast<std::uint64_t>(round) * 1000003ULL + client);
    if (tc.epochs <= 0 || (tc.max_steps && *tc.max_steps <= 0) || shard.empty()) {
      trained[k] = global;
    } else {
      auto res = nn::train_sgd(global, train, shard, tc);
      trained[k] = std::move(res.params);
      losses[k] = res.epoch_losses.empty() ? 0.0 : res.epoch_losses.back();
    }
    if (need_projectors) {
      proj::CaptureConfig cc = config.capture;
      cc.seed = derive_seed(config.seed, "fl.capture", static_cast<std::uint64_t>(round) * 1000003ULL + client);
      projectors[k] = proj::capture_projectors(trained[k], train, shard, cc);
    }
  });

  RoundResult out;
  out.mean_train_loss = std::accumulate(losses.begin(), losses.end(), 0.0) / static_cast<double>(m);
  if (m == 1) {
    out.global = std::move(trained.front());
  } else if (config.aggregator == Aggregator::kFedAvg) {
    out.global = echo::vanilla_average(trained);
  } else {
    out.global = echo::ma_echo(trained, projectors, config.agg).global;
  }
  return out;
}

std::vector<RoundMetrics> run_fl(const FlConfig& config, const data::Dataset& train, const data::Dataset& test,
                                 nn::MlpParams* final_global) {
  if (config.rounds < 0) throw Error(ErrorCode::kInvalidConfig, "rounds must be non-negative");
  const auto shards = data::partition(train, config.partition);
  nn::MlpParams global = nn::init_params(config.arch, derive_seed(config.seed, "fl.init"));

  std::vector<RoundMetrics> metrics;
  metrics.push_back({0, nn::evaluate(global, test), nn::mean_loss(global, train), {}});
  for (int round = 1; round <= config.rounds; ++round) {
    const auto sampled = sample_clients(config.seed, round, config.partition.num_clients, config.sample_per_round);
    auto result = run_round(global, train, shards, sampled, round, config);
    global = std::move(result.global);
    metrics.push_back({round, nn::evaluate(global, test), result.mean_train_loss, sampled});
  }
  if (final_global) *final_global = std::move(global);
  return metrics;
}

std::string metrics_csv(std::span<const RoundMetrics> metrics) {
  std::ostringstream out;
  out.precision(10);
  out << "round,test_accuracy,mean_train_loss,sampled_clients\n";
  for (const auto& m : metrics) {
    out << m.round << ',' << m.test_accuracy << ',' << m.mean_train_loss << ',';
    for (std::size_t i = 0; i < m.sampled_clients.size(); ++i) out << (i ? ";" : "") << m.sampled_clients[i];
    out << '\n';
  }
  return out.str();
}

}  // namespace maecho::fl
