#pragma once

// Space-time grid: uniform time steps on [t0, theta0], uniform per-axis space
// nodes on a box. Flat node indexing is row-major with axis 0 slowest.

#include <cstdint>

#include "dgnash/common.hpp"

namespace dgnash {

enum class BoundaryPolicy {
  clamp,   // project queries onto the box
  strict,  // out-of-box queries raise a domain error
};

struct Grid {
  double t0 = 0.0;
  double theta0 = 1.0;
  int time_steps = 1;  // number of intervals K; slices are 0..K
  Vec lo, hi;          // box corners, size = dim
  std::vector<int> res;  // nodes per axis, each >= 2

  int dim() const { return static_cast<int>(lo.size()); }
  double dt() const { return (theta0 - t0) / time_steps; }
  double dx(int axis) const { return (hi[axis] - lo[axis]) / (res[axis] - 1); }

  double max_dx() const {
    double m = 0.0;
    for (int a = 0; a < dim(); ++a) m = std::max(m, dx(a));
    return m;
  }

  // Euclidean diameter of one cell; the detection threshold and default
  // tolerances scale with it.
  double cell_diameter() const {
    double s = 0.0;
    for (int a = 0; a < dim(); ++a) s += dx(a) * dx(a);
    return std::sqrt(s);
  }

  int64_t node_count() const {
    int64_t n = 1;
    for (int r : res) n *= r;
    return n;
  }

  double time_at(int k) const { return (k == time_steps) ? theta0 : t0 + k * dt(); }
  double coord(int axis, int i) const {
    return (i == res[axis] - 1) ? hi[axis] : lo[axis] + i * dx(axis);
  }

  void multi_index(int64_t node, std::span<int> out) const {
    for (int a = dim() - 1; a >= 0; --a) {
      out[a] = static_cast<int>(node % res[a]);
      node /= res[a];
    }
  }

  int64_t flat_index(std::span<const int> mi) const {
    int64_t id = 0;
    for (int a = 0; a < dim(); ++a) id = id * res[a] + mi[a];
    return id;
  }

  void node_coords(int64_t node, std::span<double> out) const {
    for (int a = dim() - 1; a >= 0; --a) {
      out[a] = coord(a, static_cast<int>(node % res[a]));
      node /= res[a];
    }
  }

  Vec node_coords(int64_t node) const {
    Vec x(dim());
    node_coords(node, x);
    return x;
  }

  int64_t nearest_node(std::span<const double> x) const {
    int64_t id = 0;
    for (int a = 0; a < dim(); ++a) {
      double pos = (x[a] - lo[a]) / dx(a);
      int i = static_cast<int>(std::lround(pos));
      i = std::clamp(i, 0, res[a] - 1);
      id = id * res[a] + i;
    }
    return id;
  }

  bool contains(std::span<const double> x, double slack = 1e-12) const {
    for (int a = 0; a < dim(); ++a) {
      double pad = slack * std::max(1.0, std::abs(hi[a]) + std::abs(lo[a]));
      if (x[a] < lo[a] - pad || x[a] > hi[a] + pad) return false;
    }
    return true;
  }

  void validate() const {
    require(theta0 > t0, ErrorKind::config, "grid: theta0 must exceed t0");
    require(time_steps >= 1, ErrorKind::config, "grid: time_steps must be >= 1");
    require(!lo.empty() && lo.size() == hi.size() && lo.size() == res.size(),
            ErrorKind::config, "grid: lo/hi/res must share a positive dimension");
    for (int a = 0; a < dim(); ++a) {
      require(hi[a] > lo[a], ErrorKind::config, "grid: hi must exceed lo on every axis");
      require(res[a] >= 2, ErrorKind::config, "grid: need at least 2 nodes per axis");
    }
  }
};

// Multilinear cell weights for a spatial point: up to 2^dim corners.
// Coordinates within snap_eps of a node collapse to that node exactly, so
// lattice-aligned feet produce single-corner weights.
struct CellWeights {
  int count = 0;
  std::array<int64_t, 16> node{};  // supports dim <= 4
  std::array<double, 16> w{};
};

// Boundary handling for points outside the box: clamp projects onto the box,
// extend continues the edge cell's affine interpolant (capped at one cell of
// overshoot). Extension keeps piecewise-linear fields exact where clamping
// flattens them.
enum class OutsideRule { clamp, extend };

namespace detail_grid {

// Per-axis cell location shared by both interpolation bases.
inline void locate(const Grid& g, std::span<const double> x, BoundaryPolicy policy,
                   OutsideRule outside, double snap_eps, std::span<int> base,
                   std::span<double> frac) {
  for (int a = 0; a < g.dim(); ++a) {
    double xa = x[a];
    if (xa < g.lo[a] || xa > g.hi[a]) {
      if (policy == BoundaryPolicy::strict) {
        double pad = 1e-12 * std::max(1.0, std::abs(g.hi[a]) + std::abs(g.lo[a]));
        if (xa < g.lo[a] - pad || xa > g.hi[a] + pad)
          fail(ErrorKind::domain,
               "query outside grid box on axis " + std::to_string(a) + " at coordinate " + fmt(xa));
      }
      if (outside == OutsideRule::clamp) xa = std::clamp(xa, g.lo[a], g.hi[a]);
    }
    double pos = (xa - g.lo[a]) / g.dx(a);
    double r = std::round(pos);
    if (std::abs(pos - r) < snap_eps) pos = r;  // kill fp fuzz so exact feet hit nodes
    int i = static_cast<int>(std::floor(pos));
    i = std::clamp(i, 0, g.res[a] - 2);
    double f = pos - i;
    f = (outside == OutsideRule::extend) ? std::clamp(f, -1.0, 2.0) : std::clamp(f, 0.0, 1.0);
    base[a] = i;
    frac[a] = f;
  }
}

}  // namespace detail_grid

inline void cell_weights(const Grid& g, std::span<const double> x, BoundaryPolicy policy,
                         CellWeights& out, double snap_eps = 1e-9,
                         OutsideRule outside = OutsideRule::clamp) {
  const int n = g.dim();
  require(n <= 4, ErrorKind::config, "grid: interpolation supports at most 4 space dimensions");
  std::array<int, 4> base{};
  std::array<double, 4> frac{};
  detail_grid::locate(g, x, policy, outside, snap_eps, base, frac);
  out.count = 1 << n;
  for (int c = 0; c < out.count; ++c) {
    int64_t id = 0;
    double weight = 1.0;
    for (int a = 0; a < n; ++a) {
      int bit = (c >> (n - 1 - a)) & 1;
      id = id * g.res[a] + base[a] + bit;
      weight *= bit ? frac[a] : 1.0 - frac[a];
    }
    out.node[c] = id;
    out.w[c] = weight;
  }
}

// Kuhn simplex weights: each cell is split into dim! simplices along the
// increasing main diagonal. Exact for piecewise-linear functions whose kinks
// run along node diagonals (the value fields here do), where multilinear
// interpolation smears; same first-order accuracy otherwise.
inline void cell_weights_simplex(const Grid& g, std::span<const double> x, BoundaryPolicy policy,
                                 CellWeights& out, double snap_eps = 1e-9,
                                 OutsideRule outside = OutsideRule::clamp) {
  const int n = g.dim();
  require(n <= 4, ErrorKind::config, "grid: interpolation supports at most 4 space dimensions");
  std::array<int, 4> base{};
  std::array<double, 4> frac{};
  detail_grid::locate(g, x, policy, outside, snap_eps, base, frac);
  std::array<int, 4> ord{};
  for (int a = 0; a < n; ++a) ord[a] = a;
  std::sort(ord.begin(), ord.begin() + n, [&](int a, int b) { return frac[a] > frac[b]; });
  auto flat = [&](const std::array<int, 4>& mi) {
    int64_t id = 0;
    for (int a = 0; a < n; ++a) id = id * g.res[a] + mi[a];
    return id;
  };
  out.count = n + 1;
  std::array<int, 4> mi = base;
  out.node[0] = flat(mi);
  double prev = 1.0;
  for (int i = 0; i < n; ++i) {
    double f = frac[ord[i]];
    out.w[i] = prev - f;
    prev = f;
    mi[ord[i]] += 1;
    out.node[i + 1] = flat(mi);
  }
  out.w[n] = prev;
}

enum class InterpBasis { simplex, multilinear };

inline void cell_weights(const Grid& g, std::span<const double> x, BoundaryPolicy policy,
                         InterpBasis basis, CellWeights& out, double snap_eps = 1e-9,
                         OutsideRule outside = OutsideRule::clamp) {
  if (basis == InterpBasis::simplex)
    cell_weights_simplex(g, x, policy, out, snap_eps, outside);
  else
    cell_weights(g, x, policy, out, snap_eps, outside);
}

inline double interpolate(std::span<const double> values, const CellWeights& cw) {
  double s = 0.0;
  for (int c = 0; c < cw.count; ++c) s += cw.w[c] * values[cw.node[c]];
  return s;
}

inline double interp_at(const Grid& g, std::span<const double> slice_values,
                        std::span<const double> x, BoundaryPolicy policy) {
  CellWeights cw;
  cell_weights(g, x, policy, cw);
  return interpolate(slice_values, cw);
}

}  // namespace dgnash
