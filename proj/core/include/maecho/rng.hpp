#pragma once

#include <cstdint>
#include <random>
#include <string_view>
#include <utility>
#include <vector>

namespace maecho {

using Rng = std::mt19937_64;

/// Deterministically derives an independent child seed from a root seed, a
/// stage label and an index. All randomness in the library flows through this.
std::uint64_t derive_seed(std::uint64_t root, std::string_view stage, std::uint64_t index = 0);

inline Rng make_rng(std::uint64_t root, std::string_view stage, std::uint64_t index = 0) {
  return Rng(derive_seed(root, stage, index));
}

/// Uniform in [lo, hi) from the top 53 bits of one draw. The helpers here do
/// not use <random> distributions so streams agree across standard libraries.
double uniform_real(Rng& rng, double lo, double hi);

/// Uniform integer in [0, n), n > 0, by rejection.
std::uint64_t uniform_index(Rng& rng, std::uint64_t n);

/// Fisher-Yates shuffle driven by uniform_index.
template <typename T>
void shuffle(std::vector<T>& items, Rng& rng) {
  for (std::size_t i = items.size(); i > 1; --i) {
    const auto j = static_cast<std::size_t>(uniform_index(rng, i));
    std::swap(items[i - 1], items[j]);
  }
}

/// log of a Gamma(shape, 1) draw. Working in log space keeps tiny shapes
/// (Dirichlet concentration 0.01) from underflowing to exactly zero.
double sample_log_gamma(Rng& rng, double shape);

/// Dir(concentration * 1_k) draw, normalized through log-sum-exp.
std::vector<double> sample_symmetric_dirichlet(Rng& rng, double concentration, std::size_t k);

}  // namespace maecho
