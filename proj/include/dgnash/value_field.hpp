#pragma once

// Backward semi-Lagrangian solvers on the grid: guaranteed lower values for
// either player (max-min over control samples) and cooperative upper bounds
// (max over all pairs), plus space-time queries and CSV round-trips.

#include <iostream>
#include <memory>
#include <sstream>

#include "dgnash/common.hpp"
#include "dgnash/game.hpp"
#include "dgnash/grid.hpp"

namespace dgnash {

struct ValueField {
  Grid grid;
  std::string label;   // lower1 | lower2 | coop1 | coop2 | candidate
  Vec values;          // (time_steps+1) slices, node-major within a slice
  std::string warning; // nonempty when the saddle-gap precheck failed

  std::span<const double> slice(int k) const {
    return {values.data() + static_cast<size_t>(k) * grid.node_count(),
            static_cast<size_t>(grid.node_count())};
  }
  std::span<double> slice(int k) {
    return {values.data() + static_cast<size_t>(k) * grid.node_count(),
            static_cast<size_t>(grid.node_count())};
  }
  double at(int k, int64_t node) const {
    return values[static_cast<size_t>(k) * grid.node_count() + node];
  }
};

struct SolveOptions {
  BoundaryPolicy boundary = BoundaryPolicy::clamp;
  // Simplex interpolation keeps diagonal kinks sharp; multilinear is available
  // for comparison. Queries of the solved field stay multilinear either way.
  InterpBasis basis = InterpBasis::simplex;
  // Euler feet that land outside the box: extend continues the edge cell's
  // affine interpolant (exact for fields that stay piecewise linear through
  // the wall, removes the clamp's flattening bias), clamp projects back in.
  OutsideRule feet_outside = OutsideRule::extend;
  bool check_saddle = true;    // run the gap precheck and attach a warning
  bool strict_saddle = false;  // raise instead of warn
  double saddle_tol = 1e-9;
};

namespace detail {

// Corner indices and weights for every (node, control pair) foot; valid for
// time-invariant dynamics where feet do not move between slices.
struct FootTable {
  int corners_per_foot = 0;
  std::vector<int32_t> corner;  // [node * pairs + pair][c]
  std::vector<double> weight;
};

inline FootTable build_foot_table(const GameSpec& g, const Grid& grid, double t, double dt,
                                  InterpBasis basis, OutsideRule outside) {
  FootTable ft;
  const int n = grid.dim();
  ft.corners_per_foot = (basis == InterpBasis::simplex) ? n + 1 : (1 << n);
  const int64_t nodes = grid.node_count();
  const size_t pairs = g.p_samples.size() * g.q_samples.size();
  ft.corner.resize(static_cast<size_t>(nodes) * pairs * ft.corners_per_foot);
  ft.weight.resize(ft.corner.size());
  Vec x(n), f(n), foot(n);
  CellWeights cw;
  for (int64_t node = 0; node < nodes; ++node) {
    grid.node_coords(node, x);
    size_t slot = static_cast<size_t>(node) * pairs;
    for (const Vec& u : g.p_samples)
      for (const Vec& v : g.q_samples) {
        eval_dynamics(g, t, x, u, v, f);
        for (int a = 0; a < n; ++a) foot[a] = x[a] + dt * f[a];
        cell_weights(grid, foot, BoundaryPolicy::clamp, basis, cw, 1e-9, outside);
        size_t base = slot * ft.corners_per_foot;
        for (int c = 0; c < ft.corners_per_foot; ++c) {
          ft.corner[base + c] = static_cast<int32_t>(cw.node[c]);
          ft.weight[base + c] = cw.w[c];
        }
        ++slot;
      }
  }
  return ft;
}

inline double reduce_pairs(StepMode mode, int which, std::span<const double> vals, int np,
                           int nq) {
  // vals is p-major: vals[i*nq + j] for pair (u_i, v_j).
  if (mode == StepMode::max_max) {
    double best = -std::numeric_limits<double>::infinity();
    for (double v : vals) best = std::max(best, v);
    return best;
  }
  if (mode == StepMode::min_max) {
    double outer = std::numeric_limits<double>::infinity();
    for (int i = 0; i < np; ++i) {
      double inner = -std::numeric_limits<double>::infinity();
      for (int j = 0; j < nq; ++j) inner = std::max(inner, vals[i * nq + j]);
      outer = std::min(outer, inner);
    }
    return outer;
  }
  // max_min: which selects whose guarantee is being computed.
  double outer = -std::numeric_limits<double>::infinity();
  if (which == 1) {
    for (int i = 0; i < np; ++i) {
      double inner = std::numeric_limits<double>::infinity();
      for (int j = 0; j < nq; ++j) inner = std::min(inner, vals[i * nq + j]);
      outer = std::max(outer, inner);
    }
  } else {
    for (int j = 0; j < nq; ++j) {
      double inner = std::numeric_limits<double>::infinity();
      for (int i = 0; i < np; ++i) inner = std::min(inner, vals[i * nq + j]);
      outer = std::max(outer, inner);
    }
  }
  return outer;
}

}  // namespace detail

namespace detail {

// Multilinear extension weights reach magnitude 4 on diagonal overshoots, so
// the backward operator stops being a sup-norm contraction and iterating it
// diverges geometrically. Simplex extension stays mild; clamp is always safe.
inline void check_basis_outside(InterpBasis basis, OutsideRule outside) {
  require(!(basis == InterpBasis::multilinear && outside == OutsideRule::extend),
          ErrorKind::config,
          "solver: multilinear feet with boundary extension are expansive and can diverge;"
          " use the simplex basis with extension, or multilinear with clamp");
}

}  // namespace detail

// One backward step without caching; out[node] = reduce over pairs of the
// interpolated next-slice value at x + dt f(t, x, u, v). Exposed so tests can
// assert the solver loop equals its own single step.
inline void value_backward_step(const GameSpec& g, const Grid& grid, StepMode mode, int which,
                                double t, double dt, std::span<const double> next_slice,
                                std::span<double> out_slice,
                                InterpBasis basis = InterpBasis::simplex,
                                OutsideRule outside = OutsideRule::extend) {
  detail::check_basis_outside(basis, outside);
  const int n = grid.dim();
  const int np = static_cast<int>(g.p_samples.size());
  const int nq = static_cast<int>(g.q_samples.size());
  Vec x(n), f(n), foot(n), vals(static_cast<size_t>(np) * nq);
  CellWeights cw;
  for (int64_t node = 0; node < grid.node_count(); ++node) {
    grid.node_coords(node, x);
    size_t s = 0;
    for (const Vec& u : g.p_samples)
      for (const Vec& v : g.q_samples) {
        eval_dynamics(g, t, x, u, v, f);
        for (int a = 0; a < n; ++a) foot[a] = x[a] + dt * f[a];
        cell_weights(grid, foot, BoundaryPolicy::clamp, basis, cw, 1e-9, outside);
        vals[s++] = interpolate(next_slice, cw);
      }
    out_slice[node] = detail::reduce_pairs(mode, which, vals, np, nq);
  }
}

namespace detail {

inline ValueField solve_field(const GameSpec& g, const Grid& grid, StepMode mode, int which,
                              const std::string& label, const SolveOptions& opt) {
  g.validate();
  grid.validate();
  require(grid.dim() == g.state_dim, ErrorKind::config,
          "solver: grid dimension must equal game state_dim");
  check_basis_outside(opt.basis, opt.feet_outside);
  ValueField vf;
  vf.grid = grid;
  vf.label = label;
  const int64_t nodes = grid.node_count();
  const int K = grid.time_steps;
  vf.values.resize(static_cast<size_t>(nodes) * (K + 1));

  if (opt.check_saddle && mode == StepMode::max_min) {
    SaddleGapReport rep = isaacs_check_default(g, grid);
    if (rep.max_gap > opt.saddle_tol) {
      std::string msg = "saddle gap " + fmt(rep.max_gap) + " at t=" + fmt(rep.worst_t) +
                        " x=(" + fmt(rep.worst_x) + ") s=(" + fmt(rep.worst_s) +
                        "): minmax and maxmin differ, lower values are one-sided";
      if (opt.strict_saddle) fail(ErrorKind::domain, msg);
      vf.warning = msg;
    }
  }

  const PayoffSpec& sigma = (which == 1) ? g.sigma1 : g.sigma2;
  {
    auto terminal = vf.slice(K);
    Vec x(grid.dim());
    for (int64_t node = 0; node < nodes; ++node) {
      grid.node_coords(node, x);
      terminal[node] = eval_payoff(sigma, x);
    }
  }

  const double dt = grid.dt();
  const int np = static_cast<int>(g.p_samples.size());
  const int nq = static_cast<int>(g.q_samples.size());
  if (g.time_invariant()) {
    FootTable ft = build_foot_table(g, grid, grid.t0, dt, opt.basis, opt.feet_outside);
    const size_t pairs = static_cast<size_t>(np) * nq;
    Vec vals(pairs);
    for (int k = K - 1; k >= 0; --k) {
      auto next = vf.slice(k + 1);
      auto cur = vf.slice(k);
      for (int64_t node = 0; node < nodes; ++node) {
        size_t base = static_cast<size_t>(node) * pairs * ft.corners_per_foot;
        for (size_t p = 0; p < pairs; ++p) {
          double acc = 0.0;
          size_t off = base + p * ft.corners_per_foot;
          for (int c = 0; c < ft.corners_per_foot; ++c)
            acc += ft.weight[off + c] * next[ft.corner[off + c]];
          vals[p] = acc;
        }
        cur[node] = reduce_pairs(mode, which, vals, np, nq);
      }
    }
  } else {
    for (int k = K - 1; k >= 0; --k)
      value_backward_step(g, grid, mode, which, grid.time_at(k), dt, vf.slice(k + 1),
                          vf.slice(k), opt.basis, opt.feet_outside);
  }
  return vf;
}

}  // namespace detail

// Guaranteed level for player `which`: the value it can secure against a
// worst-case opponent under step-by-step play.
inline ValueField solve_lower_value(const GameSpec& g, const Grid& grid, int which,
                                    const SolveOptions& opt = {}) {
  require(which == 1 || which == 2, ErrorKind::config, "solve_lower_value: which must be 1 or 2");
  return detail::solve_field(g, grid, StepMode::max_min, which,
                             which == 1 ? "lower1" : "lower2", opt);
}

// Best jointly achievable payoff for player `which` when both players cooperate.
inline ValueField solve_cooperative_max(const GameSpec& g, const Grid& grid, int which,
                                        const SolveOptions& opt = {}) {
  require(which == 1 || which == 2, ErrorKind::config,
          "solve_cooperative_max: which must be 1 or 2");
  return detail::solve_field(g, grid, StepMode::max_max, which,
                             which == 1 ? "coop1" : "coop2", opt);
}

// Space-time multilinear query; time outside [t0, theta0] follows the policy.
inline double query_value(const ValueField& vf, double t, std::span<const double> x,
                          BoundaryPolicy policy = BoundaryPolicy::clamp) {
  const Grid& g = vf.grid;
  double pos = (t - g.t0) / g.dt();
  double r = std::round(pos);
  if (std::abs(pos - r) < 1e-9) pos = r;
  if (pos < 0.0 || pos > g.time_steps) {
    if (policy == BoundaryPolicy::strict)
      fail(ErrorKind::domain, "query_value: time " + fmt(t) + " outside [" + fmt(g.t0) + ", " +
                                  fmt(g.theta0) + "]");
    pos = std::clamp(pos, 0.0, static_cast<double>(g.time_steps));
  }
  int k0 = std::clamp(static_cast<int>(std::floor(pos)), 0, g.time_steps - 1);
  double tau = pos - k0;
  CellWeights cw;
  cell_weights(g, x, policy, cw);
  double v0 = interpolate(vf.slice(k0), cw);
  double v1 = interpolate(vf.slice(k0 + 1), cw);
  return (1.0 - tau) * v0 + tau * v1;
}

// ---- CSV round-trip ---------------------------------------------------------------

// Layout: "# field <label>" comment, "t,x1..xn,value" header, one row per
// (slice, node) in slice-major node-major order. Numbers are shortest
// round-trip, so read(write(f)) reproduces f bit-exactly.
inline void write_value_csv(const ValueField& vf, std::ostream& os) {
  const Grid& g = vf.grid;
  os << "# field " << vf.label << "\n";
  if (!vf.warning.empty()) os << "# warning " << vf.warning << "\n";
  os << "t";
  for (int a = 0; a < g.dim(); ++a) os << ",x" << (a + 1);
  os << ",value\n";
  std::string buf;
  buf.reserve(1 << 20);
  Vec x(g.dim());
  for (int k = 0; k <= g.time_steps; ++k) {
    const std::string ts = fmt(g.time_at(k));
    auto sl = vf.slice(k);
    for (int64_t node = 0; node < g.node_count(); ++node) {
      g.node_coords(node, x);
      buf += ts;
      for (int a = 0; a < g.dim(); ++a) {
        buf += ',';
        buf += fmt(x[a]);
      }
      buf += ',';
      buf += fmt(sl[node]);
      buf += '\n';
      if (buf.size() > (1 << 20)) {
        os << buf;
        buf.clear();
      }
    }
  }
  os << buf;
}

namespace detail {

inline int coord_index(const std::vector<double>& sorted, double v, const char* what) {
  auto it = std::lower_bound(sorted.begin(), sorted.end(), v - 1e-9);
  require(it != sorted.end() && std::abs(*it - v) < 1e-9, ErrorKind::io,
          std::string("value csv: ") + what + " coordinate " + fmt(v) + " off the inferred grid");
  return static_cast<int>(it - sorted.begin());
}

}  // namespace detail

// Reads a field CSV, inferring the grid from the row coordinates.
inline ValueField read_value_csv(std::istream& is) {
  std::string line;
  std::string label = "candidate";
  std::string warning;
  std::vector<Vec> rows;
  int dim = -1;
  size_t line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    std::string_view sv = trim(line);
    if (sv.empty()) continue;
    if (sv[0] == '#') {
      auto rest = trim(sv.substr(1));
      if (rest.rfind("field ", 0) == 0) label = std::string(trim(rest.substr(6)));
      if (rest.rfind("warning ", 0) == 0) warning = std::string(trim(rest.substr(8)));
      continue;
    }
    if (sv[0] == 't' || sv[0] == 'T') continue;  // column header
    auto parts = split(sv, ',');
    require(parts.size() >= 3, ErrorKind::io,
            "value csv line " + std::to_string(line_no) + ": need t,x...,value");
    if (dim < 0) dim = static_cast<int>(parts.size()) - 2;
    require(static_cast<int>(parts.size()) == dim + 2, ErrorKind::io,
            "value csv line " + std::to_string(line_no) + ": inconsistent column count");
    Vec row(parts.size());
    for (size_t i = 0; i < parts.size(); ++i)
      require(parse_double(trim(parts[i]), row[i]), ErrorKind::io,
              "value csv line " + std::to_string(line_no) + ": bad number '" +
                  std::string(parts[i]) + "'");
    rows.push_back(std::move(row));
  }
  require(!rows.empty(), ErrorKind::io, "value csv: no data rows");

  auto uniq = [](std::vector<double> v) {
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end(), [](double a, double b) { return std::abs(a - b) < 1e-9; }),
            v.end());
    return v;
  };
  std::vector<double> times;
  times.reserve(rows.size());
  for (const Vec& r : rows) times.push_back(r[0]);
  times = uniq(std::move(times));
  require(times.size() >= 2, ErrorKind::io, "value csv: need at least 2 time slices");

  ValueField vf;
  vf.label = label;
  vf.warning = warning;
  Grid& g = vf.grid;
  g.t0 = times.front();
  g.theta0 = times.back();
  g.time_steps = static_cast<int>(times.size()) - 1;
  g.lo.resize(dim);
  g.hi.resize(dim);
  g.res.resize(dim);
  std::vector<std::vector<double>> axis(dim);
  for (int a = 0; a < dim; ++a) {
    std::vector<double> c;
    c.reserve(rows.size());
    for (const Vec& r : rows) c.push_back(r[1 + a]);
    axis[a] = uniq(std::move(c));
    require(axis[a].size() >= 2, ErrorKind::io, "value csv: need at least 2 nodes per axis");
    g.lo[a] = axis[a].front();
    g.hi[a] = axis[a].back();
    g.res[a] = static_cast<int>(axis[a].size());
  }
  g.validate();
  require(static_cast<int64_t>(rows.size()) == g.node_count() * (g.time_steps + 1), ErrorKind::io,
          "value csv: row count does not fill the inferred grid");

  vf.values.assign(rows.size(), std::numeric_limits<double>::quiet_NaN());
  std::vector<int> mi(dim);
  for (const Vec& r : rows) {
    int k = detail::coord_index(times, r[0], "time");
    for (int a = 0; a < dim; ++a) mi[a] = detail::coord_index(axis[a], r[1 + a], "space");
    vf.values[static_cast<size_t>(k) * g.node_count() + g.flat_index(mi)] = r[dim + 1];
  }
  for (double v : vf.values)
    require(!std::isnan(v), ErrorKind::io, "value csv: grid has holes (missing rows)");
  return vf;
}

}  // namespace dgnash
