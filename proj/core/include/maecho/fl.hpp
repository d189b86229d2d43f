#pragma once

#include "maecho/data.hpp"
#include "maecho/echo.hpp"
#include "maecho/nn.hpp"
#include "maecho/projection.hpp"

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace maecho::fl {

enum class Aggregator { kFedAvg, kMaEcho };

struct FlConfig {
  int rounds = 10;
  int sample_per_round = 5;
  Aggregator aggregator = Aggregator::kFedAvg;
  std::vector<int> arch{784, 400, 200, 100, 10};
  nn::TrainConfig train;  // seed is overridden per round and client
  echo::AggConfig agg;
  proj::CaptureConfig capture;
  data::PartitionConfig partition;
  std::uint64_t seed = 0;
};

struct RoundMetrics {
  int round = 0;
  double test_accuracy = 0.0;
  double mean_train_loss = 0.0;
  std::vector<int> sampled_clients;
};

/// Clients drawn for a round. Depends only on (seed, round, N, m), so both
/// aggregators see the same sequence.
std::vector<int> sample_clients(std::uint64_t seed, int round, int num_clients, int sample);

struct RoundResult {
  nn::MlpParams global;
  double mean_train_loss = 0.0;
};

/// One communication round: every sampled client starts from `global`,
/// trains with fresh momentum, uploads (plus projectors under MA-Echo), and
/// the server aggregates. A single sampled client's model is returned as is.
RoundResult run_round(const nn::MlpParams& global, const data::Dataset& train, std::span<const data::ClientShard> shards,
                      std::span<const int> sampled, int round, const FlConfig& config);

/// Partitions once, then runs `rounds` rounds. Returns the initial model's
/// record followed by one record per round.
std::vector<RoundMetrics> run_fl(const FlConfig& config, const data::Dataset& train, const data::Dataset& test,
                                 nn::MlpParams* final_global = nullptr);

std::string metrics_csv(std::span<const RoundMetrics> metrics);

}  // namespace maecho::fl
