#pragma once

#include "maecho/nn.hpp"
#include "maecho/types.hpp"

#include <functional>
#include <span>
#include <vector>

namespace maecho::trajectory {

struct Point {
  double x = 0.0;
  double y = 0.0;
};

struct Lattice {
  double x_min = -1.0, x_max = 1.0;
  double y_min = -1.0, y_max = 1.0;
  int nx = 0, ny = 0;  // 0 points on either axis skips the loss grid
};

struct GridValue {
  double x = 0.0;
  double y = 0.0;
  double loss = 0.0;
};

struct Projection {
  Vector origin;  // g0
  Vector u_hat;
  Vector v_hat;
  std::vector<Point> coords;        // one per snapshot
  std::vector<double> residuals;    // distance of each snapshot from the plane
  std::vector<GridValue> grid;      // row-major over (y, x)
};

using LossFn = std::function<double(const nn::MlpParams&)>;

/// Flattens the snapshots, builds the orthonormal plane through g0 spanned by
/// g1 - g0 and g2 - g0 (Gram-Schmidt), maps every snapshot to its in-plane
/// coordinates and evaluates `loss` on the lattice points g0 + x u + y v.
/// Throws DegenerateBasis when the two directions are dependent.
Projection project(std::span<const nn::MlpParams> snapshots, const LossFn& loss, const Lattice& lattice);

}  // namespace maecho::trajectory
