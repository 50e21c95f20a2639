#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <vector>

#include "potensor/rng.hpp"

namespace potensor::nlslab {

/// A converged critical point of the hyperboloid projection objective.
/// datum = |s - t|: generically nonzero by the location result.
struct CriticalPoint2D {
  double s = 0.0, t = 0.0;
  double grad_norm = 0.0;
  double datum = 0.0;
};

/// A converged critical point of the LU projection objective.
/// datum = |xw - yz|: generically nonzero.
struct CriticalPoint4D {
  double x = 0.0, y = 0.0, z = 0.0, w = 0.0;
  double grad_norm = 0.0;
  double datum = 0.0;
};

namespace detail {

/// Damped Newton on an open domain: steps shrink until the objective's
/// gradient norm decreases and no barrier coordinate changes sign.
/// Returns true when ||grad|| drops below tol.
template <int N>
bool newton(const std::function<Eigen::Matrix<double, N, 1>(
                const Eigen::Matrix<double, N, 1>&)>& grad,
            const std::function<Eigen::Matrix<double, N, N>(
                const Eigen::Matrix<double, N, 1>&)>& hess,
            Eigen::Matrix<double, N, 1>& x,
            const std::vector<int>& barrier_coords, double tol = 1e-12,
            int max_iter = 200) {
  using Vec = Eigen::Matrix<double, N, 1>;
  using Mat = Eigen::Matrix<double, N, N>;
  double mu = 0.0;
  for (int it = 0; it < max_iter; ++it) {
    const Vec g = grad(x);
    const double gn = g.norm();
    if (!std::isfinite(gn)) return false;
    if (gn <= tol) return true;
    Mat H = hess(x);
    Vec d = (H + mu * Mat::Identity()).ldlt().solve(-g);
    if (!d.allFinite() || d.norm() > 1e8) {
      mu = std::max(1e-8, mu * 10.0);
      continue;
    }
    double step = 1.0;
    bool accepted = false;
    for (int bt = 0; bt < 40; ++bt) {
      Vec cand = x + step * d;
      bool crosses = false;
      for (int c : barrier_coords)
        if (cand[c] == 0.0 || (cand[c] > 0) != (x[c] > 0)) crosses = true;
      if (!crosses && grad(cand).norm() < gn) {
        x = cand;
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (accepted) {
      mu *= 0.25;
    } else {
      mu = std::max(1e-8, mu * 10.0);
      if (mu > 1e12) return false;
    }
  }
  return grad(x).norm() <= tol;
}

template <typename Point>
void dedup_sorted(std::vector<Point>& pts,
                  const std::function<double(const Point&, const Point&)>& dist,
                  double tol = 1e-6) {
  std::vector<Point> out;
  for (const Point& p : pts) {
    bool dup = false;
    for (const Point& q : out)
      if (dist(p, q) < tol) dup = true;
    if (!dup) out.push_back(p);
  }
  pts = std::move(out);
}

}  // namespace detail

/// f(s,t) = ½[(b1 - s²)² + (b2 - s³t)² + (b3 - s⁴t²)²], the projection onto
/// the parametrized hyperboloid xz = y². Multi-start damped Newton; returns
/// deduplicated critical points with |s| bounded away from zero.
inline std::vector<CriticalPoint2D> hyperboloid_criticals(
    const Eigen::Vector3d& b, int starts, Rng& rng,
    const std::vector<Eigen::Vector2d>& seeded_starts = {}) {
  using Vec2 = Eigen::Vector2d;
  using Mat2 = Eigen::Matrix2d;
  auto residual = [&b](const Vec2& p) {
    const double s = p[0], t = p[1];
    return Eigen::Vector3d(s * s - b[0], s * s * s * t - b[1],
                           s * s * s * s * t * t - b[2]);
  };
  auto jac = [](const Vec2& p) {
    const double s = p[0], t = p[1];
    Eigen::Matrix<double, 3, 2> J;
    J << 2 * s, 0.0,
        3 * s * s * t, s * s * s,
        4 * s * s * s * t * t, 2 * s * s * s * s * t;
    return J;
  };
  std::function<Vec2(const Vec2&)> grad = [&](const Vec2& p) -> Vec2 {
    return jac(p).transpose() * residual(p);
  };
  std::function<Mat2(const Vec2&)> hess = [&](const Vec2& p) -> Mat2 {
    const double s = p[0], t = p[1];
    const Eigen::Vector3d r = residual(p);
    const auto J = jac(p);
    Mat2 H = J.transpose() * J;
    Mat2 H1, H2, H3;
    H1 << 2, 0, 0, 0;
    H2 << 6 * s * t, 3 * s * s, 3 * s * s, 0;
    H3 << 12 * s * s * t * t, 8 * s * s * s * t, 8 * s * s * s * t,
        2 * s * s * s * s;
    return H + r[0] * H1 + r[1] * H2 + r[2] * H3;
  };

  const double box = 3.0 * (1.0 + b.norm());
  std::vector<CriticalPoint2D> found;
  const int total = starts + static_cast<int>(seeded_starts.size());
  for (int trial = 0; trial < total; ++trial) {
    Vec2 x = trial < starts
                 ? Vec2(rng.next_uniform(-box, box), rng.next_uniform(-box, box))
                 : seeded_starts[trial - starts];
    if (x[0] == 0.0) continue;
    if (!detail::newton<2>(grad, hess, x, {0})) continue;
    const double gn = grad(x).norm();
    if (gn > 1e-9 || std::abs(x[0]) <= 1e-8) continue;
    found.push_back({x[0], x[1], gn, std::abs(x[0] - x[1])});
  }
  std::sort(found.begin(), found.end(),
            [](const CriticalPoint2D& a, const CriticalPoint2D& b2) {
              return a.s != b2.s ? a.s < b2.s : a.t < b2.t;
            });
  detail::dedup_sorted<CriticalPoint2D>(
      found, [](const CriticalPoint2D& a, const CriticalPoint2D& b2) {
        return std::hypot(a.s - b2.s, a.t - b2.t);
      });
  return found;
}

/// f(x,y,z,w) = ½‖(x, z/x, y, w - yz/x) - b‖², the projection whose
/// parametrization encodes the LU factors of [[x,y],[z,w]].
inline std::vector<CriticalPoint4D> lu_criticals(
    const Eigen::Vector4d& b, int starts, Rng& rng,
    const std::vector<Eigen::Vector4d>& seeded_starts = {}) {
  using Vec4 = Eigen::Vector4d;
  using Mat4 = Eigen::Matrix4d;
  auto residual = [&b](const Vec4& p) {
    const double x = p[0], y = p[1], z = p[2], w = p[3];
    return Eigen::Vector4d(x - b[0], z / x - b[1], y - b[2],
                           w - y * z / x - b[3]);
  };
  auto jac = [](const Vec4& p) {
    const double x = p[0], y = p[1], z = p[2];
    Eigen::Matrix4d J;
    J << 1, 0, 0, 0,
        -z / (x * x), 0, 1 / x, 0,
        0, 1, 0, 0,
        y * z / (x * x), -z / x, -y / x, 1;
    return J;
  };
  std::function<Vec4(const Vec4&)> grad = [&](const Vec4& p) -> Vec4 {
    return jac(p).transpose() * residual(p);
  };
  std::function<Mat4(const Vec4&)> hess = [&](const Vec4& p) -> Mat4 {
    const double x = p[0], y = p[1], z = p[2];
    const Eigen::Vector4d r = residual(p);
    const auto J = jac(p);
    Mat4 H = J.transpose() * J;
    Mat4 H2 = Mat4::Zero(), H4 = Mat4::Zero();
    // second derivatives of z/x in (x,y,z,w) order
    H2(0, 0) = 2 * z / (x * x * x);
    H2(0, 2) = H2(2, 0) = -1 / (x * x);
    // second derivatives of w - yz/x
    H4(0, 0) = -2 * y * z / (x * x * x);
    H4(0, 1) = H4(1, 0) = z / (x * x);
    H4(0, 2) = H4(2, 0) = y / (x * x);
    H4(1, 2) = H4(2, 1) = -1 / x;
    return H + r[1] * H2 + r[3] * H4;
  };

  const double box = 3.0 * (1.0 + b.norm());
  std::vector<CriticalPoint4D> found;
  const int total = starts + static_cast<int>(seeded_starts.size());
  for (int trial = 0; trial < total; ++trial) {
    Vec4 x;
    if (trial < starts)
      for (int c = 0; c < 4; ++c) x[c] = rng.next_uniform(-box, box);
    else
      x = seeded_starts[trial - starts];
    if (x[0] == 0.0) continue;
    if (!detail::newton<4>(grad, hess, x, {0})) continue;
    const double gn = grad(x).norm();
    if (gn > 1e-9 || std::abs(x[0]) <= 1e-8) continue;
    found.push_back({x[0], x[1], x[2], x[3], gn,
                     std::abs(x[0] * x[3] - x[1] * x[2])});
  }
  std::sort(found.begin(), found.end(),
            [](const CriticalPoint4D& a, const CriticalPoint4D& b2) {
              if (a.x != b2.x) return a.x < b2.x;
              if (a.y != b2.y) return a.y < b2.y;
              if (a.z != b2.z) return a.z < b2.z;
              return a.w < b2.w;
            });
  detail::dedup_sorted<CriticalPoint4D>(
      found, [](const CriticalPoint4D& a, const CriticalPoint4D& b2) {
        return std::sqrt((a.x - b2.x) * (a.x - b2.x) +
                         (a.y - b2.y) * (a.y - b2.y) +
                         (a.z - b2.z) * (a.z - b2.z) +
                         (a.w - b2.w) * (a.w - b2.w));
      });
  return found;
}

enum class LocationKind { Hyperboloid, Lu };

struct LocationSummary {
  LocationKind kind = LocationKind::Hyperboloid;
  int num_targets = 0;
  int starts = 0;
  int violations = 0;          // targets with some |datum| <= 1e-6
  int empty_targets = 0;       // targets where no critical point was found
  std::vector<double> minima;  // min datum per target (NaN when empty)
};

/// Samples Gaussian targets and checks that every found critical point
/// stays off the degenerate locus (s = t, resp. det = 0).
inline LocationSummary location_experiment(LocationKind kind, int num_b,
                                           int starts, Rng& rng) {
  LocationSummary sum;
  sum.kind = kind;
  sum.num_targets = num_b;
  sum.starts = starts;
  for (int i = 0; i < num_b; ++i) {
    Rng sub = rng.split(static_cast<std::uint64_t>(i) + 1);
    double min_datum = std::numeric_limits<double>::quiet_NaN();
    if (kind == LocationKind::Hyperboloid) {
      Eigen::Vector3d b;
      for (int c = 0; c < 3; ++c) b[c] = sub.next_gaussian();
      const auto pts = hyperboloid_criticals(b, starts, sub);
      for (const auto& p : pts)
        if (std::isnan(min_datum) || p.datum < min_datum) min_datum = p.datum;
    } else {
      Eigen::Vector4d b;
      for (int c = 0; c < 4; ++c) b[c] = sub.next_gaussian();
      const auto pts = lu_criticals(b, starts, sub);
      for (const auto& p : pts)
        if (std::isnan(min_datum) || p.datum < min_datum) min_datum = p.datum;
    }
    sum.minima.push_back(min_datum);
    if (std::isnan(min_datum))
      ++sum.empty_targets;
    else if (min_datum <= 1e-6)
      ++sum.violations;
  }
  return sum;
}

}  // namespace potensor::nlslab
