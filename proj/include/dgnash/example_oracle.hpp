#pragma once

// Closed forms for the built-in example game (dx = u, dy = v, u,v in [-1,1],
// sigma1 = -|x-y|, sigma2 = y): guaranteed levels, cooperative bounds, the
// exact equilibrium payoff sets, the candidate-pair family, its
// subdifferentials, and the transport direction used by equilibrium play.

#include "dgnash/nash_map.hpp"
#include "dgnash/smooth_verifier.hpp"

namespace dgnash::oracle {

// Player I can hold the gap |x-y| forever; player II can ride y upward at
// full speed whatever player I does.
inline double lower_value_exact(int which, double t, double x, double y) {
  require(which == 1 || which == 2, ErrorKind::config, "lower_value_exact: which must be 1 or 2");
  if (which == 1) return -std::abs(x - y);
  return y + (1.0 - t);
}

// Jointly the players can close the gap at rate 2 but never overshoot zero;
// player II's bound coincides with its guaranteed level.
inline double cooperative_bound_exact(int which, double t, double x, double y) {
  require(which == 1 || which == 2, ErrorKind::config,
          "cooperative_bound_exact: which must be 1 or 2");
  if (which == 1) return std::min(-std::abs(x - y) + 2.0 * (1.0 - t), 0.0);
  return y + (1.0 - t);
}

// Equilibrium payoff set at (t, x, y): J2 is pinned at y + (1-t); J1 spans
// [-|x-y|, coop bound] when x leads y (gap can be traded), else the single
// guaranteed value.
struct PayoffSegment {
  double j1_lo = 0.0, j1_hi = 0.0, j2 = 0.0;

  bool singleton() const { return j1_hi - j1_lo <= 1e-12; }

  // Exact endpoints plus interior points on the global lattice; interior
  // lattice points closer than quantum/2 to an endpoint are skipped so the
  // cloud spacing invariant holds.
  std::vector<PayoffPoint> sample(double quantum) const {
    std::vector<PayoffPoint> pts;
    pts.push_back({j1_lo, j2});
    if (!singleton()) {
      if (quantum > 0) {
        int64_t k0 = static_cast<int64_t>(std::ceil(j1_lo / quantum - 1e-9));
        int64_t k1 = static_cast<int64_t>(std::floor(j1_hi / quantum + 1e-9));
        for (int64_t k = k0; k <= k1; ++k) {
          double v = k * quantum;
          if (v - j1_lo < 0.5 * quantum || j1_hi - v < 0.5 * quantum) continue;
          pts.push_back({v, j2});
        }
      }
      pts.push_back({j1_hi, j2});
    }
    return pts;
  }
};

inline PayoffSegment equilibrium_payoffs_exact(double t, double x, double y) {
  PayoffSegment seg;
  seg.j2 = y + (1.0 - t);
  if (y >= x) {
    seg.j1_lo = seg.j1_hi = -(y - x);
    return seg;
  }
  seg.j1_lo = -(x - y);
  seg.j1_hi = std::min(-(x - y) + 2.0 * (1.0 - t), 0.0);
  return seg;
}

// Candidate pair family, rate gamma in [0, 2]: player I's candidate applies a
// gap transfer at rate gamma when x leads y; player II's is its guaranteed
// level. gamma = 0 reproduces the guaranteed levels, gamma = 2 the maximal
// equilibrium pair.
inline std::pair<double, double> candidate_pair_exact(double gamma, double t, double x,
                                                      double y) {
  double c2 = y + (1.0 - t);
  if (y >= x) return {-(y - x), c2};
  return {std::min(-(x - y) + gamma * (1.0 - t), 0.0), c2};
}

inline std::pair<double, double> max_equilibrium_pair_exact(double t, double x, double y) {
  return candidate_pair_exact(2.0, t, x, y);
}

// Closed-form candidate pair for the verifier; piecewise because of the kinks
// along x = y and x = y + gamma (1 - t).
inline CandidatePair example_candidate(double gamma) {
  require(gamma >= 0.0 && gamma <= 2.0, ErrorKind::config,
          "example_candidate: gamma must lie in [0, 2]");
  CandidatePair p;
  p.label = "example_gamma_" + fmt(gamma);
  p.hint = SmoothnessHint::piecewise;
  p.c1 = [gamma](double t, std::span<const double> x) {
    return candidate_pair_exact(gamma, t, x[0], x[1]).first;
  };
  p.c2 = [gamma](double t, std::span<const double> x) {
    return candidate_pair_exact(gamma, t, x[0], x[1]).second;
  };
  return p;
}

// Transfer rate actually applied at (t, x, y): the largest rate in [0, gamma]
// that keeps the transferred value nonpositive; at the horizon the constraint
// is vacuous.
inline double transfer_rate_exact(double gamma, double t, double x, double y) {
  if (y >= x) return 0.0;
  if (t >= 1.0) return gamma;
  return std::min(gamma, (x - y) / (1.0 - t));
}

// Velocity (dx, dy) of agreed play: player II rides upward; player I matches
// except for the transfer rate.
inline Vec transport_direction_exact(double gamma, double t, double x, double y) {
  return {1.0 - transfer_rate_exact(gamma, t, x, y), 1.0};
}

// A point or segment of (a, s_x, s_y) triples: the subdifferential of a
// candidate function, represented by its extreme points.
struct SubdiffSet {
  std::vector<std::array<double, 3>> verts;  // 1 = point, 2 = segment hull

  double dist(const std::array<double, 3>& p) const {
    auto d2 = [](const std::array<double, 3>& a, const std::array<double, 3>& b) {
      double s = 0;
      for (int i = 0; i < 3; ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
      return s;
    };
    if (verts.size() == 1) return std::sqrt(d2(p, verts[0]));
    // project onto the segment
    std::array<double, 3> d{}, r{};
    double dd = 0, rd = 0;
    for (int i = 0; i < 3; ++i) {
      d[i] = verts[1][i] - verts[0][i];
      r[i] = p[i] - verts[0][i];
      dd += d[i] * d[i];
      rd += r[i] * d[i];
    }
    double lam = (dd > 0) ? std::clamp(rd / dd, 0.0, 1.0) : 0.0;
    std::array<double, 3> proj{};
    for (int i = 0; i < 3; ++i) proj[i] = verts[0][i] + lam * d[i];
    return std::sqrt(d2(p, proj));
  }

  bool contains(const std::array<double, 3>& p, double tol) const { return dist(p) <= tol; }
};

// Subdifferential of player I's candidate at rate gamma. Region rows; on the
// two kink lines the set is the hull of the adjacent region gradients. When
// the middle region is empty (gamma (1-t) = 0) the x = y line takes the hull
// of the two outer gradients.
inline SubdiffSet subdifferential_c1_exact(double gamma, double t, double x, double y,
                                           double tol = 1e-9) {
  const double width = gamma * (1.0 - t);
  if (y - x > tol) return {{{0.0, 1.0, -1.0}}};
  if (x - y > tol && width - (x - y) > tol) return {{{0.0, 0.0, 0.0}}};
  if (x - y - width > tol) return {{{-gamma, -1.0, 1.0}}};
  if (std::abs(x - y) <= tol) {
    if (width <= tol) return {{{0.0, 1.0, -1.0}, {-gamma, -1.0, 1.0}}};
    return {{{0.0, 0.0, 0.0}, {0.0, 1.0, -1.0}}};  // {(0, lambda, -lambda)}
  }
  return {{{0.0, 0.0, 0.0}, {-gamma, -1.0, 1.0}}};  // {(-lambda gamma, -lambda, lambda)}
}

// Player II's candidate is smooth: gradient of y + (1 - t).
inline SubdiffSet subdifferential_c2_exact() { return {{{-1.0, 0.0, 1.0}}}; }

// Closed-form field sampled on a grid; label is one of lower1, lower2,
// coop1, coop2. Useful as a solver oracle and for seeding candidate pairs.
inline ValueField exact_field(const Grid& grid, const std::string& label) {
  grid.validate();
  require(grid.dim() == 2, ErrorKind::config, "exact_field: grid must be 2-D");
  int which = 0;
  bool coop = false;
  if (label == "lower1") which = 1;
  else if (label == "lower2") which = 2;
  else if (label == "coop1") { which = 1; coop = true; }
  else if (label == "coop2") { which = 2; coop = true; }
  else fail(ErrorKind::config, "exact_field: unknown label '" + label + "'");
  ValueField vf;
  vf.grid = grid;
  vf.label = label;
  const int64_t nodes = grid.node_count();
  vf.values.resize(static_cast<size_t>(nodes) * (grid.time_steps + 1));
  Vec x(2);
  for (int k = 0; k <= grid.time_steps; ++k) {
    const double t = grid.time_at(k);
    auto slice = vf.slice(k);
    for (int64_t node = 0; node < nodes; ++node) {
      grid.node_coords(node, x);
      slice[node] = coop ? cooperative_bound_exact(which, t, x[0], x[1])
                         : lower_value_exact(which, t, x[0], x[1]);
    }
  }
  return vf;
}

// The exact payoff map sampled onto a grid: terminal slices exact, earlier
// slices from the segment formula with interior points on the quantum lattice.
// The formulas describe the unconstrained plane; inside a box they are valid
// only where every escape and transport path fits before the horizon, so nodes
// outside that cone (per axis, position +- cone_speed * remaining time must
// stay in the box) are emitted empty. cone_speed 0 disables the restriction.
inline NashMap exact_nash_map(const Grid& grid, int stride, double quantum,
                              double cone_speed = 1.0) {
  grid.validate();
  require(grid.dim() == 2, ErrorKind::config, "exact_nash_map: grid must be 2-D");
  require(stride >= 1 && grid.time_steps % stride == 0, ErrorKind::config,
          "exact_nash_map: stride must divide time_steps");
  NashMap map;
  map.grid = grid;
  map.stride = stride;
  map.quantum = quantum;
  const int S = grid.time_steps / stride;
  map.slices.resize(S + 1);
  Vec x(2);
  for (int s = 0; s <= S; ++s) {
    double t = map.slice_time(s);
    const double room = cone_speed * (grid.theta0 - t);
    CloudSlice& cs = map.slices[s];
    cs.off.assign(grid.node_count() + 1, 0);
    for (int64_t node = 0; node < grid.node_count(); ++node) {
      grid.node_coords(node, x);
      bool inside = true;
      for (int a = 0; a < 2; ++a)
        if (x[a] + room > grid.hi[a] + 1e-9 || x[a] - room < grid.lo[a] - 1e-9) inside = false;
      if (!inside) {
        cs.off[node + 1] = cs.off[node];
        continue;
      }
      auto pts = equilibrium_payoffs_exact(t, x[0], x[1]).sample(s == S ? 0.0 : quantum);
      std::sort(pts.begin(), pts.end(), [](auto& a, auto& b) {
        return a.j1 < b.j1 || (a.j1 == b.j1 && a.j2 < b.j2);
      });
      cs.off[node + 1] = cs.off[node] + static_cast<uint32_t>(pts.size());
      cs.pts.insert(cs.pts.end(), pts.begin(), pts.end());
    }
  }
  return map;
}

}  // namespace dgnash::oracle
