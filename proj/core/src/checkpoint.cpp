#include "maecho/checkpoint.hpp"

#include "maecho/data.hpp"

#include <bit>
#include <cstring>
#include <fstream>

namespace maecho::checkpoint {
namespace {

constexpr char kMagic[4] = {'M', 'A', 'E', '1'};

static_assert(std::endian::native == std::endian::little, "MAE1 I/O assumes a little-endian host");

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

std::uint32_t get_u32(std::span<const std::uint8_t> bytes, std::size_t& pos) {
  if (bytes.size() - pos < 4) throw Error(ErrorCode::kTruncatedFile, "MAE1 container ends inside a header");
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= std::uint32_t{bytes[pos + static_cast<std::size_t>(i)]} << (8 * i);
  pos += 4;
  return v;
}

}  // namespace

std::vector<std::uint8_t> encode(std::span<const Matrix> matrices) {
  std::size_t total = 8;
  for (const auto& m : matrices) total += 8 + sizeof(double) * static_cast<std::size_t>(m.size());
  std::vector<std::uint8_t> out;
  out.reserve(total);
  out.insert(out.end(), std::begin(kMagic), std::end(kMagic));
  put_u32(out, static_cast<std::uint32_t>(matrices.size()));
  for (const auto& m : matrices) {
    put_u32(out, static_cast<std::uint32_t>(m.rows()));
    put_u32(out, static_cast<std::uint32_t>(m.cols()));
    const auto* raw = reinterpret_cast<const std::uint8_t*>(m.data());
    out.insert(out.end(), raw, raw + sizeof(double) * static_cast<std::size_t>(m.size()));
  }
  return out;
}

std::vector<Matrix> decode(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 8) throw Error(ErrorCode::kTruncatedFile, "MAE1 container shorter than its header");
  if (std::memcmp(bytes.data(), kMagic, 4) != 0) throw Error(ErrorCode::kBadMagic, "not an MAE1 container");
  std::size_t pos = 4;
  const std::uint32_t count = get_u32(bytes, pos);
  std::vector<Matrix> out;
  out.reserve(count);
  for (std::uint32_t k = 0; k < count; ++k) {
    const std::uint32_t rows = get_u32(bytes, pos);
    const std::uint32_t cols = get_u32(bytes, pos);
    const std::size_t payload = sizeof(double) * std::size_t{rows} * cols;
    if (bytes.size() - pos < payload) {
      throw Error(ErrorCode::kTruncatedFile, "MAE1 matrix " + std::to_string(k) + " payload is truncated");
    }
    Matrix m(rows, cols);
    std::memcpy(m.data(), bytes.data() + pos, payload);
    pos += payload;
    out.push_back(std::move(m));
  }
  return out;
}

void save(std::span<const Matrix> matrices, const std::filesystem::path& path) {
  const auto bytes = encode(matrices);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::kIo, "cannot open " + path.string() + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorCode::kIo, "short write to " + path.string());
}

std::vector<Matrix> load(const std::filesystem::path& path) { return decode(data::read_file(path)); }

}  // namespace maecho::checkpoint
