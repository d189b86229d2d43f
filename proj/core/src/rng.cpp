#include "maecho/rng.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace maecho {
namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

// Uniform in (0, 1), never exactly zero.
double open_uniform(Rng& rng) {
  constexpr double kScale = 1.0 / 9007199254740992.0;  // 2^-53
  return (static_cast<double>(rng() >> 11) + 0.5) * kScale;
}

double standard_normal(Rng& rng) {
  // Box-Muller; one value per call keeps the stream position simple.
  const double u1 = open_uniform(rng);
  const double u2 = open_uniform(rng);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

// Marsaglia-Tsang for shape >= 1, returns log of the draw.
double log_gamma_ge1(Rng& rng, double shape) {
  const double d = shape - 1.0 / 3.0;
  const double c = 1.0 / std::sqrt(9.0 * d);
  for (;;) {
    double x = 0.0;
    double v = 0.0;
    do {
      x = standard_normal(rng);
      v = 1.0 + c * x;
    } while (v <= 0.0);
    v = v * v * v;
    const double u = open_uniform(rng);
    if (u < 1.0 - 0.0331 * x * x * x * x) return std::log(d) + std::log(v);
    if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return std::log(d) + std::log(v);
  }
}

}  // namespace

std::uint64_t derive_seed(std::uint64_t root, std::string_view stage, std::uint64_t index) {
  return splitmix64(splitmix64(root ^ fnv1a(stage)) + splitmix64(index + 0x632be59bd9b4e019ULL));
}

double uniform_real(Rng& rng, double lo, double hi) {
  constexpr double kScale = 1.0 / 9007199254740992.0;
  return lo + (hi - lo) * (static_cast<double>(rng() >> 11) * kScale);
}

std::uint64_t uniform_index(Rng& rng, std::uint64_t n) {
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() - std::numeric_limits<std::uint64_t>::max() % n;
  for (;;) {
    const std::uint64_t r = rng();
    if (r < limit) return r % n;
  }
}

double sample_log_gamma(Rng& rng, double shape) {
  if (shape >= 1.0) return log_gamma_ge1(rng, shape);
  // G(a) = G(a + 1) * U^(1/a)
  return log_gamma_ge1(rng, shape + 1.0) + std::log(open_uniform(rng)) / shape;
}

std::vector<double> sample_symmetric_dirichlet(Rng& rng, double concentration, std::size_t k) {
  std::vector<double> logs(k);
  for (auto& l : logs) l = sample_log_gamma(rng, concentration);
  const double peak = *std::max_element(logs.begin(), logs.end());
  double total = 0.0;
  for (auto& l : logs) {
    l = std::exp(l - peak);
    total += l;
  }
  for (auto& l : logs) l /= total;
  return logs;
}

}  // namespace maecho
