#include "maecho/trajectory.hpp"

#include <algorithm>

namespace maecho::trajectory {

Projection project(std::span<const nn::MlpParams> snapshots, const LossFn& loss, const Lattice& lattice) {
  if (snapshots.size() < 3) throw Error(ErrorCode::kInvalidConfig, "trajectory needs at least three snapshots");
  for (const auto& s : snapshots) nn::require_same_arch(snapshots.front(), s);
  const auto arch = snapshots.front().arch();

  Projection out;
  out.origin = nn::flatten(snapshots[0]);
  const Vector u = nn::flatten(snapshots[1]) - out.origin;
  const Vector v = nn::flatten(snapshots[2]) - out.origin;
  const double u_norm = u.norm();
  if (u_norm <= 1e-10) throw Error(ErrorCode::kDegenerateBasis, "first two snapshots coincide");
  out.u_hat = u / u_norm;
  Vector v_perp = v - v.dot(out.u_hat) * out.u_hat;
  const double v_norm = v_perp.norm();
  if (v_norm <= 1e-10 * std::max(1.0, v.norm())) {
    throw Error(ErrorCode::kDegenerateBasis, "g2 - g0 is parallel to g1 - g0");
  }
  out.v_hat = v_perp / v_norm;

  for (const auto& s : snapshots) {
    const Vector offset = nn::flatten(s) - out.origin;
    const Point p{offset.dot(out.u_hat), offset.dot(out.v_hat)};
    out.coords.push_back(p);
    out.residuals.push_back((offset - p.x * out.u_hat - p.y * out.v_hat).norm());
  }

  if (lattice.nx > 0 && lattice.ny > 0 && loss) {
    auto axis = [](double lo, double hi, int n, int i) {
      return n == 1 ? lo : lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1);
    };
    for (int iy = 0; iy < lattice.ny; ++iy) {
      for (int ix = 0; ix < lattice.nx; ++ix) {
        const double x = axis(lattice.x_min, lattice.x_max, lattice.nx, ix);
        const double y = axis(lattice.y_min, lattice.y_max, lattice.ny, iy);
        const Vector point = out.origin + x * out.u_hat + y * out.v_hat;
        out.grid.push_back({x, y, loss(nn::unflatten(point, arch))});
      }
    }
  }
  return out;
}

}  // namespace maecho::trajectory
