#pragma once

#include "maecho/types.hpp"

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace maecho::checkpoint {

// "MAE1" container, all integers and floats little-endian:
//   char[4]  magic "MAE1"
//   u32      matrix count
//   per matrix: u32 rows, u32 cols, rows*cols f64 row-major
// Models store one matrix per layer; projector sets store one per layer input.

std::vector<std::uint8_t> encode(std::span<const Matrix> matrices);
std::vector<Matrix> decode(std::span<const std::uint8_t> bytes);

void save(std::span<const Matrix> matrices, const std::filesystem::path& path);
std::vector<Matrix> load(const std::filesystem::path& path);

}  // namespace maecho::checkpoint
