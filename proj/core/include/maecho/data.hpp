#pragma once

#include "maecho/types.hpp"

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace maecho::data {

inline constexpr std::uint32_t kImagesMagic = 2051;
inline constexpr std::uint32_t kLabelsMagic = 2049;

struct Dataset {
  Matrix images;            // n x (rows * cols), pixels in [0, 1]
  std::vector<int> labels;  // n entries in [0, num_classes)
  int image_rows = 28;
  int image_cols = 28;
  int num_classes = 10;

  std::size_t size() const { return labels.size(); }
  Eigen::Index feature_dim() const { return images.cols(); }
};

/// Parses an IDX image file (magic 2051) and label file (magic 2049).
/// Pixels are scaled by 1/255.
Dataset load_idx(const std::filesystem::path& images_path, const std::filesystem::path& labels_path);

/// In-memory variant of load_idx.
Dataset parse_idx(std::span<const std::uint8_t> image_bytes, std::span<const std::uint8_t> label_bytes);

/// Serializes to IDX bytes. Pixels are rounded to the nearest k/255.
std::vector<std::uint8_t> encode_idx_images(const Dataset& dataset);
std::vector<std::uint8_t> encode_idx_labels(const Dataset& dataset);
void save_idx(const Dataset& dataset, const std::filesystem::path& images_path,
              const std::filesystem::path& labels_path);

/// Rows of `dataset` selected by `indices`, in that order.
Dataset subset(const Dataset& dataset, std::span<const std::size_t> indices);

enum class PartitionMode { kDirichlet, kLabelCount };

struct PartitionConfig {
  int num_clients = 2;
  PartitionMode mode = PartitionMode::kDirichlet;
  double beta = 0.5;           // dirichlet mode
  int classes_per_client = 1;  // label_count mode
  std::uint64_t seed = 0;
};

struct ClientShard {
  int client_id = 0;
  std::vector<std::size_t> indices;  // ascending, unique
};

/// Splits the rows of `dataset` across clients. Shards are pairwise disjoint,
/// cover every row and depend only on (dataset labels, config).
///
/// Dirichlet mode draws p_c ~ Dir(beta * 1_N) per class and cuts that class's
/// (shuffled) rows at the cumulative proportions, flooring each client's count
/// and giving the remainder to the last client.
///
/// Label-count mode deals `classes_per_client` distinct labels to each client
/// from a shuffled deck (reshuffled when exhausted) and splits each label's
/// rows evenly among its owners. Every label present must end up owned.
std::vector<ClientShard> partition(const Dataset& dataset, const PartitionConfig& config);

std::string shards_to_json(std::span<const ClientShard> shards);
std::vector<ClientShard> shards_from_json(const std::string& text);
void save_shards(std::span<const ClientShard> shards, const std::filesystem::path& path);
std::vector<ClientShard> load_shards(const std::filesystem::path& path);

std::vector<std::uint8_t> read_file(const std::filesystem::path& path);

}  // namespace maecho::data
