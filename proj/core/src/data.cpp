#include "maecho/data.hpp"

#include "maecho/rng.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iterator>
#include <map>
#include <numeric>
#include <sstream>

namespace maecho::data {
namespace {

std::uint32_t read_be32(std::span<const std::uint8_t> bytes, std::size_t offset) {
  return (std::uint32_t{bytes[offset]} << 24) | (std::uint32_t{bytes[offset + 1]} << 16) |
         (std::uint32_t{bytes[offset + 2]} << 8) | std::uint32_t{bytes[offset + 3]};
}

void write_be32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  out.push_back(static_cast<std::uint8_t>(v >> 24));
  out.push_back(static_cast<std::uint8_t>(v >> 16));
  out.push_back(static_cast<std::uint8_t>(v >> 8));
  out.push_back(static_cast<std::uint8_t>(v));
}

void require_header(std::span<const std::uint8_t> bytes, std::size_t header_size, const char* what) {
  if (bytes.size() < header_size) {
    throw Error(ErrorCode::kTruncatedFile, std::string(what) + " file shorter than its IDX header");
  }
}

void check_magic(std::uint32_t magic, std::uint32_t expected, const char* what) {
  if (magic != expected) {
    throw Error(ErrorCode::kBadMagic, std::string(what) + " file has magic " + std::to_string(magic) +
                                          ", expected " + std::to_string(expected));
  }
}

void write_file(const std::filesystem::path& path, const std::vector<std::uint8_t>& bytes) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::kIo, "cannot open " + path.string() + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorCode::kIo, "short write to " + path.string());
}

// Splits `rows` into consecutive pieces of the given sizes.
void deal(const std::vector<std::size_t>& rows, const std::vector<std::size_t>& counts,
          const std::vector<int>& owners, std::vector<ClientShard>& shards) {
  std::size_t cursor = 0;
  for (std::size_t k = 0; k < owners.size(); ++k) {
    auto& dst = shards[static_cast<std::size_t>(owners[k])].indices;
    dst.insert(dst.end(), rows.begin() + static_cast<std::ptrdiff_t>(cursor),
               rows.begin() + static_cast<std::ptrdiff_t>(cursor + counts[k]));
    cursor += counts[k];
  }
}

}  // namespace

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kMissingInput, "cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

Dataset parse_idx(std::span<const std::uint8_t> image_bytes, std::span<const std::uint8_t> label_bytes) {
  require_header(image_bytes, 16, "images");
  require_header(label_bytes, 8, "labels");
  check_magic(read_be32(image_bytes, 0), kImagesMagic, "images");
  check_magic(read_be32(label_bytes, 0), kLabelsMagic, "labels");

  const std::size_t n_images = read_be32(image_bytes, 4);
  const std::size_t rows = read_be32(image_bytes, 8);
  const std::size_t cols = read_be32(image_bytes, 12);
  const std::size_t n_labels = read_be32(label_bytes, 4);

  const std::size_t pixels = rows * cols;
  if (image_bytes.size() - 16 < n_images * pixels) {
    throw Error(ErrorCode::kTruncatedFile, "images payload holds " + std::to_string(image_bytes.size() - 16) +
                                               " bytes, header promises " + std::to_string(n_images * pixels));
  }
  if (label_bytes.size() - 8 < n_labels) {
    throw Error(ErrorCode::kTruncatedFile, "labels payload holds " + std::to_string(label_bytes.size() - 8) +
                                               " bytes, header promises " + std::to_string(n_labels));
  }
  if (n_images != n_labels) {
    throw Error(ErrorCode::kCountMismatch,
                std::to_string(n_images) + " images vs " + std::to_string(n_labels) + " labels");
  }

  Dataset ds;
  ds.image_rows = static_cast<int>(rows);
  ds.image_cols = static_cast<int>(cols);
  ds.images.resize(static_cast<Eigen::Index>(n_images), static_cast<Eigen::Index>(pixels));
  const std::uint8_t* src = image_bytes.data() + 16;
  double* dst = ds.images.data();
  for (std::size_t i = 0; i < n_images * pixels; ++i) dst[i] = static_cast<double>(src[i]) / 255.0;

  ds.labels.resize(n_labels);
  int max_label = 0;
  for (std::size_t i = 0; i < n_labels; ++i) {
    ds.labels[i] = label_bytes[8 + i];
    max_label = std::max(max_label, ds.labels[i]);
  }
  ds.num_classes = std::max(10, max_label + 1);
  return ds;
}

Dataset load_idx(const std::filesystem::path& images_path, const std::filesystem::path& labels_path) {
  const auto images = read_file(images_path);
  const auto labels = read_file(labels_path);
  return parse_idx(images, labels);
}

std::vector<std::uint8_t> encode_idx_images(const Dataset& dataset) {
  std::vector<std::uint8_t> out;
  out.reserve(16 + static_cast<std::size_t>(dataset.images.size()));
  write_be32(out, kImagesMagic);
  write_be32(out, static_cast<std::uint32_t>(dataset.images.rows()));
  write_be32(out, static_cast<std::uint32_t>(dataset.image_rows));
  write_be32(out, static_cast<std::uint32_t>(dataset.image_cols));
  const double* src = dataset.images.data();
  for (Eigen::Index i = 0; i < dataset.images.size(); ++i) {
    const double v = std::clamp(src[i], 0.0, 1.0);
    out.push_back(static_cast<std::uint8_t>(std::lround(v * 255.0)));
  }
  return out;
}

std::vector<std::uint8_t> encode_idx_labels(const Dataset& dataset) {
  std::vector<std::uint8_t> out;
  out.reserve(8 + dataset.labels.size());
  write_be32(out, kLabelsMagic);
  write_be32(out, static_cast<std::uint32_t>(dataset.labels.size()));
  for (int label : dataset.labels) out.push_back(static_cast<std::uint8_t>(label));
  return out;
}

void save_idx(const Dataset& dataset, const std::filesystem::path& images_path,
              const std::filesystem::path& labels_path) {
  write_file(images_path, encode_idx_images(dataset));
  write_file(labels_path, encode_idx_labels(dataset));
}

Dataset subset(const Dataset& dataset, std::span<const std::size_t> indices) {
  Dataset out;
  out.image_rows = dataset.image_rows;
  out.image_cols = dataset.image_cols;
  out.num_classes = dataset.num_classes;
  out.images.resize(static_cast<Eigen::Index>(indices.size()), dataset.images.cols());
  out.labels.resize(indices.size());
  for (std::size_t i = 0; i < indices.size(); ++i) {
    out.images.row(static_cast<Eigen::Index>(i)) = dataset.images.row(static_cast<Eigen::Index>(indices[i]));
    out.labels[i] = dataset.labels[indices[i]];
  }
  return out;
}

std::vector<ClientShard> partition(const Dataset& dataset, const PartitionConfig& config) {
  if (dataset.size() == 0) throw Error(ErrorCode::kEmptyDataset, "cannot partition an empty dataset");
  if (config.num_clients < 1) throw Error(ErrorCode::kInvalidConfig, "num_clients must be >= 1");
  const auto num_clients = static_cast<std::size_t>(config.num_clients);

  std::map<int, std::vector<std::size_t>> by_class;
  for (std::size_t i = 0; i < dataset.size(); ++i) by_class[dataset.labels[i]].push_back(i);

  std::vector<ClientShard> shards(num_clients);
  for (std::size_t k = 0; k < num_clients; ++k) shards[k].client_id = static_cast<int>(k);

  if (config.mode == PartitionMode::kDirichlet) {
    if (!(config.beta > 0.0)) {
      throw Error(ErrorCode::kInvalidBeta, "beta must be positive, got " + std::to_string(config.beta));
    }
    std::vector<int> owners(num_clients);
    std::iota(owners.begin(), owners.end(), 0);
    for (auto& [label, rows] : by_class) {
      auto rng = make_rng(config.seed, "partition.dirichlet", static_cast<std::uint64_t>(label));
      const auto p = sample_symmetric_dirichlet(rng, config.beta, num_clients);
      shuffle(rows, rng);
      std::vector<std::size_t> counts(num_clients);
      std::size_t assigned = 0;
      for (std::size_t k = 0; k + 1 < num_clients; ++k) {
        counts[k] = std::min(rows.size() - assigned,
                             static_cast<std::size_t>(std::floor(p[k] * static_cast<double>(rows.size()))));
        assigned += counts[k];
      }
      counts[num_clients - 1] = rows.size() - assigned;
      deal(rows, counts, owners, shards);
    }
  } else {
    const auto num_labels = by_class.size();
    if (config.classes_per_client < 1 || static_cast<std::size_t>(config.classes_per_client) > num_labels) {
      throw Error(ErrorCode::kInvalidConfig, "classes_per_client must lie in [1, " + std::to_string(num_labels) + "]");
    }
    if (num_clients * static_cast<std::size_t>(config.classes_per_client) < num_labels) {
      throw Error(ErrorCode::kInvalidConfig, "clients x classes_per_client (" +
                                                 std::to_string(num_clients * config.classes_per_client) +
                                                 ") does not cover the " + std::to_string(num_labels) + " labels");
    }
    std::vector<int> all_labels;
    for (const auto& entry : by_class) all_labels.push_back(entry.first);

    auto rng = make_rng(config.seed, "partition.label_count");
    std::vector<int> deck;
    std::map<int, std::vector<int>> owners_of;
    for (std::size_t k = 0; k < num_clients; ++k) {
      std::vector<int> mine;
      while (mine.size() < static_cast<std::size_t>(config.classes_per_client)) {
        if (deck.empty()) {
          deck = all_labels;
          shuffle(deck, rng);
        }
        // Draw from the top of the deck, skipping labels this client holds.
        auto it = std::find_if(deck.rbegin(), deck.rend(), [&](int l) {
          return std::find(mine.begin(), mine.end(), l) == mine.end();
        });
        if (it == deck.rend()) {
          // Every remaining card is already held by this client.
          deck.clear();
          continue;
        }
        mine.push_back(*it);
        deck.erase(std::next(it).base());
      }
      for (int l : mine) owners_of[l].push_back(static_cast<int>(k));
    }
    for (auto& [label, rows] : by_class) {
      auto& owners = owners_of[label];
      auto label_rng = make_rng(config.seed, "partition.label_rows", static_cast<std::uint64_t>(label));
      shuffle(rows, label_rng);
      std::vector<std::size_t> counts(owners.size(), rows.size() / owners.size());
      counts.back() += rows.size() % owners.size();
      deal(rows, counts, owners, shards);
    }
  }

  for (auto& s : shards) std::sort(s.indices.begin(), s.indices.end());
  return shards;
}

std::string shards_to_json(std::span<const ClientShard> shards) {
  nlohmann::json doc = nlohmann::json::array();
  for (const auto& s : shards) doc.push_back({{"client_id", s.client_id}, {"indices", s.indices}});
  return doc.dump() + "\n";
}

std::vector<ClientShard> shards_from_json(const std::string& text) {
  std::vector<ClientShard> shards;
  try {
    const auto doc = nlohmann::json::parse(text);
    if (!doc.is_array()) throw Error(ErrorCode::kIo, "shard file must hold a JSON array");
    for (const auto& entry : doc) {
      ClientShard s;
      s.client_id = entry.at("client_id").get<int>();
      s.indices = entry.at("indices").get<std::vector<std::size_t>>();
      shards.push_back(std::move(s));
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kIo, std::string("malformed shard file: ") + e.what());
  }
  return shards;
}

void save_shards(std::span<const ClientShard> shards, const std::filesystem::path& path) {
  const auto text = shards_to_json(shards);
  write_file(path, std::vector<std::uint8_t>(text.begin(), text.end()));
}

std::vector<ClientShard> load_shards(const std::filesystem::path& path) {
  const auto bytes = read_file(path);
  return shards_from_json(std::string(bytes.begin(), bytes.end()));
}

}  // namespace maecho::data
