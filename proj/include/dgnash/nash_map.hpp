#pragma once

// Node-indexed payoff clouds over the grid: backward construction from the
// terminal payoffs (filtered by reachability and the guaranteed-level bound),
// transport residuals along hull velocities, whole-map verification, and a
// line-oriented text format.

#include <iostream>
#include <memory>

#include "dgnash/common.hpp"
#include "dgnash/game.hpp"
#include "dgnash/grid.hpp"
#include "dgnash/payoff_cloud.hpp"
#include "dgnash/value_field.hpp"

namespace dgnash {

struct CloudSlice {
  std::vector<uint32_t> off;     // size node_count + 1
  std::vector<PayoffPoint> pts;  // per-node runs, each sorted by (j1, j2)

  std::span<const PayoffPoint> cloud(int64_t node) const {
    return {pts.data() + off[node], pts.data() + off[node + 1]};
  }
};

struct NashMap {
  Grid grid;
  int stride = 1;       // map slices sit at base steps 0, stride, 2*stride, ...
  double quantum = 0.0;
  std::vector<CloudSlice> slices;  // size slice_count() + 1
  std::shared_ptr<const ValueField> lower1, lower2;  // guaranteed-level references

  int slice_count() const { return grid.time_steps / stride; }
  double slice_dt() const { return grid.dt() * stride; }
  double slice_time(int s) const { return grid.time_at(s * stride); }

  std::span<const PayoffPoint> cloud(int s, int64_t node) const {
    return slices[s].cloud(node);
  }

  // Nearest slice index for a time instant; must land within tol of a slice.
  int slice_at(double t, double tol = 1e-9) const {
    double pos = (t - grid.t0) / slice_dt();
    int s = static_cast<int>(std::lround(pos));
    s = std::clamp(s, 0, slice_count());
    require(std::abs(slice_time(s) - t) <= tol * std::max(1.0, std::abs(t)) + tol,
            ErrorKind::domain, "time " + fmt(t) + " is not a map slice instant");
    return s;
  }
};

inline bool grids_match(const Grid& a, const Grid& b) {
  if (a.time_steps != b.time_steps || a.res != b.res) return false;
  if (std::abs(a.t0 - b.t0) > 1e-12 || std::abs(a.theta0 - b.theta0) > 1e-12) return false;
  for (int i = 0; i < a.dim(); ++i)
    if (std::abs(a.lo[i] - b.lo[i]) > 1e-12 || std::abs(a.hi[i] - b.hi[i]) > 1e-12) return false;
  return true;
}

// ---- interpolated cloud distance -------------------------------------------------

namespace detail {

constexpr double kEmptyCloudDist = 1e6;  // an empty corner repels candidates
constexpr double kWeightFloor = 1e-9;    // corners lighter than this are ignored

// Min l1 distance from p to a (j1,j2)-sorted run, pruned by the j1 gap.
inline double dist_l1_sorted(std::span<const PayoffPoint> pts, const PayoffPoint& p) {
  if (pts.empty()) return kEmptyCloudDist;
  size_t lo = 0, hi = pts.size();
  while (lo < hi) {
    size_t mid = (lo + hi) / 2;
    if (pts[mid].j1 < p.j1)
      lo = mid + 1;
    else
      hi = mid;
  }
  double best = std::numeric_limits<double>::infinity();
  for (size_t i = lo; i < pts.size(); ++i) {  // j1 >= p.j1, ascending gap
    double d1 = pts[i].j1 - p.j1;
    if (d1 >= best) break;
    best = std::min(best, d1 + std::abs(pts[i].j2 - p.j2));
    if (best == 0.0) return 0.0;
  }
  for (size_t i = lo; i-- > 0;) {  // j1 < p.j1, descending
    double d1 = p.j1 - pts[i].j1;
    if (d1 >= best) break;
    best = std::min(best, d1 + std::abs(pts[i].j2 - p.j2));
    if (best == 0.0) return 0.0;
  }
  return best;
}

}  // namespace detail

// Distance from payoff p to the cloud field of slice s interpolated at x:
// multilinear corner weights applied to per-corner cloud distances. Returns a
// large constant where every significant corner is empty.
inline double cloud_distance(const NashMap& map, int s, std::span<const double> x,
                             const PayoffPoint& p,
                             BoundaryPolicy policy = BoundaryPolicy::clamp) {
  CellWeights cw;
  cell_weights(map.grid, x, policy, cw);
  const CloudSlice& slice = map.slices[s];
  double acc = 0.0;
  for (int c = 0; c < cw.count; ++c) {
    if (cw.w[c] < detail::kWeightFloor) continue;
    acc += cw.w[c] * detail::dist_l1_sorted(slice.cloud(cw.node[c]), p);
  }
  return acc;
}

// ---- construction --------------------------------------------------------------------

struct BuildOptions {
  double tol_inv = 0.5;     // reach tolerance = tol_inv * builder step
  double tol_val = -1.0;    // guaranteed-level slack; negative = 3*(dt + max dx)
  double quantum = -1.0;    // payoff lattice; negative = tol_val / 2
  // Admission floor during construction: candidate >= lower - floor_slack.
  // Snapping shifts stored points at most quantum/2 below their true value, so
  // quantum/2 admits every genuine point while blocking the drift chains that
  // a full tol_val floor lets creep in step over step. Negative = quantum/2.
  double floor_slack = -1.0;
  int hull_density = 16;    // extra convex-combination velocities
  uint64_t seed = 1;
  int stride = 0;           // base steps per builder step; 0 = auto from max dx / dt
  BoundaryPolicy boundary = BoundaryPolicy::clamp;
};

struct BuildReport {
  int stride = 1;
  double step = 0.0;      // stride * dt
  double tol_val = 0.0;
  double quantum = 0.0;
  int64_t empty_nodes = 0;  // nodes left with no admissible payoff
  std::vector<std::pair<int, int64_t>> flagged;  // first few (slice, node) empties
  int64_t total_points = 0;
  size_t max_cloud = 0;
};

namespace detail {

inline int auto_stride(const Grid& g) {
  int r = static_cast<int>(std::lround(g.max_dx() / g.dt()));
  r = std::clamp(r, 1, g.time_steps);
  for (int d = r; d >= 1; --d)
    if (g.time_steps % d == 0) return d;
  return 1;
}

}  // namespace detail

// One backward builder step: candidates are the payoff points of the successor
// slice at the corner nodes of every velocity foot; a candidate enters iff some
// hull velocity transports it within tol_inv*step of the interpolated successor
// cloud and it clears the guaranteed levels. Stored points are lattice-snapped.
inline CloudSlice nash_backward_step(const GameSpec& g, const Grid& grid, int stride, int s,
                                     const CloudSlice& next, const ValueField& lower1,
                                     const ValueField& lower2, const BuildOptions& opt,
                                     const std::vector<Vec>& hull_rows, double floor_slack,
                                     double quantum) {
  const int n = grid.dim();
  const double step = grid.dt() * stride;
  const double tau = opt.tol_inv * step;
  const double t = grid.time_at(s * stride);
  const int base_k = s * stride;
  const int64_t nodes = grid.node_count();

  CloudSlice out;
  out.off.assign(static_cast<size_t>(nodes) + 1, 0);

  Vec x(n), foot(n);
  std::vector<CellWeights> feet;
  std::vector<int64_t> cand_nodes;
  std::vector<PayoffPoint> cands;
  PayoffCloud admitted;
  admitted.quantum = quantum;
  std::vector<PayoffPoint> all_pts;
  all_pts.reserve(next.pts.size());

  const bool per_node_velocities = (g.dynamics_id != "example");
  VelocitySet vs;
  if (!per_node_velocities) {
    grid.node_coords(0, x);
    vs = velocity_set(g, t, x, 0, opt.seed);
  }
  size_t last_w = 0;

  for (int64_t node = 0; node < nodes; ++node) {
    grid.node_coords(node, x);
    if (per_node_velocities) vs = velocity_set(g, t, x, 0, opt.seed);
    const size_t raw = vs.velocities.size();
    const size_t total_w = raw + hull_rows.size();

    // feet weights for raw velocities and seeded hull combinations
    feet.clear();
    feet.resize(total_w);
    for (size_t w = 0; w < total_w; ++w) {
      const double* vel;
      Vec combo;
      if (w < raw) {
        vel = vs.velocities[w].data();
      } else {
        combo.assign(n, 0.0);
        const Vec& rows = hull_rows[w - raw];
        for (size_t i = 0; i < raw; ++i)
          for (int a = 0; a < n; ++a) combo[a] += rows[i] * vs.velocities[i][a];
        vel = combo.data();
      }
      for (int a = 0; a < n; ++a) foot[a] = x[a] + step * vel[a];
      cell_weights(grid, foot, opt.boundary, feet[w]);
    }

    // candidate pool: successor points at every significant foot corner
    cand_nodes.clear();
    for (const CellWeights& cw : feet)
      for (int c = 0; c < cw.count; ++c)
        if (cw.w[c] >= detail::kWeightFloor) cand_nodes.push_back(cw.node[c]);
    std::sort(cand_nodes.begin(), cand_nodes.end());
    cand_nodes.erase(std::unique(cand_nodes.begin(), cand_nodes.end()), cand_nodes.end());
    cands.clear();
    for (int64_t cn : cand_nodes) {
      auto run = next.cloud(cn);
      cands.insert(cands.end(), run.begin(), run.end());
    }
    std::sort(cands.begin(), cands.end(), [](auto& a, auto& b) {
      return a.j1 < b.j1 || (a.j1 == b.j1 && a.j2 < b.j2);
    });
    cands.erase(std::unique(cands.begin(), cands.end()), cands.end());

    const double floor1 = lower1.at(base_k, node) - floor_slack;
    const double floor2 = lower2.at(base_k, node) - floor_slack;

    admitted.points.clear();
    for (const PayoffPoint& p : cands) {
      PayoffPoint ps = snap_to_lattice(p, quantum);
      if (ps.j1 < floor1 || ps.j2 < floor2) continue;
      bool ok = false;
      for (size_t wi = 0; wi < total_w && !ok; ++wi) {
        size_t w = (wi == 0) ? last_w : (wi - 1 == last_w ? 0 : wi - 1);
        const CellWeights& cw = feet[w];
        double acc = 0.0;
        for (int c = 0; c < cw.count; ++c) {
          if (cw.w[c] < detail::kWeightFloor) continue;
          acc += cw.w[c] * detail::dist_l1_sorted(next.cloud(cw.node[c]), p);
          if (acc > tau) break;
        }
        if (acc <= tau) {
          ok = true;
          last_w = w;
        }
      }
      if (ok) admitted.add(ps);
    }

    out.off[node + 1] = out.off[node] + static_cast<uint32_t>(admitted.points.size());
    all_pts.insert(all_pts.end(), admitted.points.begin(), admitted.points.end());
  }
  out.pts = std::move(all_pts);
  return out;
}

inline NashMap build_nash_map(const GameSpec& g, const Grid& grid,
                              std::shared_ptr<const ValueField> lower1,
                              std::shared_ptr<const ValueField> lower2,
                              const BuildOptions& opt = {}, BuildReport* report = nullptr) {
  g.validate();
  grid.validate();
  require(lower1 && lower2, ErrorKind::config, "build_nash_map: guaranteed-level fields required");
  require(grids_match(lower1->grid, grid) && grids_match(lower2->grid, grid), ErrorKind::config,
          "build_nash_map: field grids must match the build grid");

  NashMap map;
  map.grid = grid;
  map.stride = (opt.stride > 0) ? opt.stride : detail::auto_stride(grid);
  require(grid.time_steps % map.stride == 0, ErrorKind::config,
          "build_nash_map: stride must divide the number of time steps");
  const double tol_val = (opt.tol_val >= 0) ? opt.tol_val : 3.0 * (grid.dt() + grid.max_dx());
  map.quantum = (opt.quantum > 0) ? opt.quantum : 0.5 * tol_val;
  const double floor_slack =
      (opt.floor_slack >= 0) ? opt.floor_slack : 0.5 * map.quantum + 1e-9;
  map.lower1 = lower1;
  map.lower2 = lower2;
  const int S = map.slice_count();
  map.slices.resize(S + 1);

  // terminal slice: the exact payoff pair at every node
  {
    CloudSlice& term = map.slices[S];
    const int64_t nodes = grid.node_count();
    term.off.resize(nodes + 1);
    term.pts.resize(nodes);
    Vec x(grid.dim());
    for (int64_t node = 0; node < nodes; ++node) {
      grid.node_coords(node, x);
      term.off[node] = static_cast<uint32_t>(node);
      term.pts[node] = {eval_payoff(g.sigma1, x), eval_payoff(g.sigma2, x)};
    }
    term.off[nodes] = static_cast<uint32_t>(nodes);
  }

  const size_t raw_count = g.p_samples.size() * g.q_samples.size();
  std::vector<Vec> hull_rows =
      (opt.hull_density > 0)
          ? hull_weight_rows(static_cast<int>(raw_count), opt.hull_density, opt.seed)
          : std::vector<Vec>{};

  BuildReport rep;
  rep.stride = map.stride;
  rep.step = map.slice_dt();
  rep.tol_val = tol_val;
  rep.quantum = map.quantum;

  for (int s = S - 1; s >= 0; --s) {
    map.slices[s] = nash_backward_step(g, grid, map.stride, s, map.slices[s + 1], *lower1,
                                       *lower2, opt, hull_rows, floor_slack, map.quantum);
    const CloudSlice& cs = map.slices[s];
    for (int64_t node = 0; node < grid.node_count(); ++node) {
      size_t sz = cs.off[node + 1] - cs.off[node];
      rep.max_cloud = std::max(rep.max_cloud, sz);
      if (sz == 0) {
        ++rep.empty_nodes;
        if (rep.flagged.size() < 32) rep.flagged.emplace_back(s, node);
      }
    }
    rep.total_points += static_cast<int64_t>(cs.pts.size());
  }
  rep.total_points += static_cast<int64_t>(map.slices[S].pts.size());
  if (report) *report = rep;
  return map;
}

// ---- transport residuals ----------------------------------------------------------

struct DerivativeOptions {
  Vec deltas;                  // absolute look-ahead times; empty = {1,2,4} * slice_dt
  double gamma_radius = -1.0;  // negative = half cell diagonal / min delta
  int gamma_samples = 4;       // seeded ball probes in addition to 0 and the node snap
  uint64_t seed = 1;
};

namespace detail {

inline Vec resolve_deltas(const NashMap& map, const Vec& deltas) {
  if (!deltas.empty()) return deltas;
  return {map.slice_dt(), 2.0 * map.slice_dt(), 4.0 * map.slice_dt()};
}

inline double resolve_gamma_radius(const NashMap& map, const Vec& deltas, double gr) {
  if (gr >= 0) return gr;
  double dmin = *std::min_element(deltas.begin(), deltas.end());
  return 0.5 * map.grid.cell_diameter() / std::max(dmin, 1e-12);
}

// min over the delta schedule and gamma samples of dist(p, cloud(t+delta,
// x + delta w + delta gamma)) / delta.
inline double transport_residual(const NashMap& map, int s, std::span<const double> x,
                                 const PayoffPoint& p, std::span<const double> w,
                                 const Vec& deltas, double gamma_radius, int gamma_samples,
                                 uint64_t seed, double stop_below) {
  const Grid& g = map.grid;
  const int n = g.dim();
  const double t = map.slice_time(s);
  double best = std::numeric_limits<double>::infinity();
  Vec xs(n), xg(n);
  KroneckerSeq ball(derive_seed(seed, 0x47414d4dULL), n);
  for (double delta : deltas) {
    if (t + delta > g.theta0 + 1e-9) continue;
    int s2 = map.slice_at(t + delta);
    for (int a = 0; a < n; ++a) xs[a] = x[a] + delta * w[a];
    // gamma = 0
    best = std::min(best, cloud_distance(map, s2, xs, p) / delta);
    if (best <= stop_below) return best;
    // deterministic node snap: the correction that lands the foot on a node
    if (gamma_radius > 0) {
      Vec target = g.node_coords(g.nearest_node(xs));
      double norm = 0.0;
      for (int a = 0; a < n; ++a) {
        xg[a] = (target[a] - xs[a]) / delta;
        norm += xg[a] * xg[a];
      }
      norm = std::sqrt(norm);
      if (norm > 1e-15) {
        double scale = std::min(1.0, gamma_radius / norm);
        for (int a = 0; a < n; ++a) xg[a] = xs[a] + delta * xg[a] * scale;
        best = std::min(best, cloud_distance(map, s2, xg, p) / delta);
        if (best <= stop_below) return best;
      }
      // seeded ball probes
      for (int i = 0; i < gamma_samples; ++i) {
        const Vec& u = ball.next();
        double r = gamma_radius * std::pow(u[0], 1.0 / n);
        // direction from remaining coordinates (axis mix); cheap but seeded
        double norm2 = 0.0;
        for (int a = 0; a < n; ++a) {
          xg[a] = u[(a + 1) % n] - 0.5 + (a == 0 ? 0.25 * u[0] : 0.0);
          norm2 += xg[a] * xg[a];
        }
        norm2 = std::max(std::sqrt(norm2), 1e-12);
        for (int a = 0; a < n; ++a) xg[a] = xs[a] + delta * (r * xg[a] / norm2);
        best = std::min(best, cloud_distance(map, s2, xg, p) / delta);
        if (best <= stop_below) return best;
      }
    }
  }
  return best;
}

}  // namespace detail

// Residual of transporting payoff p from (t, x) along velocity w: the best
// normalized distance to the later clouds over the delta schedule and a ball
// of direction corrections. Near zero iff p survives along w.
inline double directional_derivative(const NashMap& map, double t, std::span<const double> x,
                                     const PayoffPoint& p, std::span<const double> w,
                                     const DerivativeOptions& opt = {}) {
  int s = map.slice_at(t);
  Vec deltas = detail::resolve_deltas(map, opt.deltas);
  double usable = 0.0;
  for (double d : deltas)
    if (t + d <= map.grid.theta0 + 1e-9) usable += 1.0;
  require(usable > 0.0, ErrorKind::domain,
          "directional_derivative: no delta in the schedule fits before the horizon");
  double gr = detail::resolve_gamma_radius(map, deltas, opt.gamma_radius);
  return detail::transport_residual(map, s, x, p, w, deltas, gr, opt.gamma_samples, opt.seed,
                                    -1.0);
}

// Hull velocities whose transport residual stays within tol_dd.
inline std::vector<Vec> tangent_velocities(const NashMap& map, const GameSpec& g, double t,
                                           std::span<const double> x, const PayoffPoint& p,
                                           double tol_dd, int hull_density = 16,
                                           const DerivativeOptions& opt = {}) {
  VelocitySet vs = velocity_set(g, t, x, hull_density, opt.seed);
  std::vector<Vec> out;
  for (const Vec& w : vs.hull_samples) {
    double dd = directional_derivative(map, t, x, p, w, opt);
    if (dd <= tol_dd) out.push_back(w);
  }
  return out;
}

// ---- verification ----------------------------------------------------------------------

struct VerifyOptions {
  double tol_dd = 1.0;
  double tol_val = -1.0;  // guaranteed-level slack for the lower-bound scan
  int hull_density = 16;
  DerivativeOptions dd;
  bool exact_residuals = false;  // disable the running-max early exit
};

struct VerifyReport {
  bool pass = false;
  double max_residual = 0.0;
  int worst_slice = -1;
  int64_t worst_node = -1;
  PayoffPoint worst_point;
  int64_t residual_points = 0;   // points scanned for transport residuals
  int64_t lower_violations = 0;  // points below the guaranteed levels
  int64_t terminal_violations = 0;  // terminal clouds differing from the payoff pair
  int64_t empty_nodes = 0;
  std::string notes;
};

// Full-map check: terminal exactness, guaranteed-level bounds on every slice,
// and transport residuals on every slice whose delta schedule fits before the
// horizon. PASS = no violations and max residual <= tol_dd.
inline VerifyReport verify_map(const NashMap& map, const GameSpec& g,
                               const VerifyOptions& opt = {},
                               std::ostream* residual_csv = nullptr) {
  require(map.lower1 && map.lower2, ErrorKind::config,
          "verify_map: attach guaranteed-level fields before verifying");
  const Grid& grid = map.grid;
  const int n = grid.dim();
  const int S = map.slice_count();
  const double tol_val =
      (opt.tol_val >= 0) ? opt.tol_val : 3.0 * (grid.dt() + grid.max_dx());
  VerifyReport rep;

  // terminal exactness
  {
    const CloudSlice& term = map.slices[S];
    Vec x(n);
    for (int64_t node = 0; node < grid.node_count(); ++node) {
      grid.node_coords(node, x);
      auto run = term.cloud(node);
      PayoffPoint want{eval_payoff(g.sigma1, x), eval_payoff(g.sigma2, x)};
      if (run.size() != 1 || dist_l1(run[0], want) > 1e-9) ++rep.terminal_violations;
    }
  }

  // guaranteed-level bounds and empties
  for (int s = 0; s <= S; ++s) {
    const CloudSlice& cs = map.slices[s];
    const int k = s * map.stride;
    for (int64_t node = 0; node < grid.node_count(); ++node) {
      auto run = cs.cloud(node);
      if (run.empty()) {
        ++rep.empty_nodes;
        continue;
      }
      double f1 = map.lower1->at(k, node) - tol_val;
      double f2 = map.lower2->at(k, node) - tol_val;
      for (const PayoffPoint& p : run)
        if (p.j1 < f1 || p.j2 < f2) ++rep.lower_violations;
    }
  }

  // transport residuals
  Vec deltas = detail::resolve_deltas(map, opt.dd.deltas);
  double max_delta = *std::max_element(deltas.begin(), deltas.end());
  double gr = detail::resolve_gamma_radius(map, deltas, opt.dd.gamma_radius);
  if (residual_csv) {
    *residual_csv << "t";
    for (int a = 0; a < n; ++a) *residual_csv << ",x" << (a + 1);
    *residual_csv << ",j1,j2,residual\n";
  }
  std::vector<Vec> hull_rows =
      (opt.hull_density > 0)
          ? hull_weight_rows(static_cast<int>(g.p_samples.size() * g.q_samples.size()),
                             opt.hull_density, opt.dd.seed)
          : std::vector<Vec>{};
  Vec x(n);
  const bool per_node_velocities = (g.dynamics_id != "example");
  for (int s = 0; s <= S; ++s) {
    double t = map.slice_time(s);
    if (t + *std::min_element(deltas.begin(), deltas.end()) > grid.theta0 + 1e-9) break;
    Vec usable;
    for (double d : deltas)
      if (t + d <= grid.theta0 + 1e-9) usable.push_back(d);
    const CloudSlice& cs = map.slices[s];
    VelocitySet vs;
    std::vector<Vec> hulls;
    if (!per_node_velocities) {
      grid.node_coords(0, x);
      vs = velocity_set(g, t, x, 0, opt.dd.seed);
    }
    size_t last_w = 0;
    for (int64_t node = 0; node < grid.node_count(); ++node) {
      auto run = cs.cloud(node);
      if (run.empty()) continue;
      grid.node_coords(node, x);
      if (per_node_velocities) vs = velocity_set(g, t, x, 0, opt.dd.seed);
      const size_t raw = vs.velocities.size();
      const size_t total_w = raw + hull_rows.size();
      hulls.assign(total_w, Vec());
      for (size_t w = 0; w < raw; ++w) hulls[w] = vs.velocities[w];
      for (size_t h = 0; h < hull_rows.size(); ++h) {
        Vec combo(n, 0.0);
        for (size_t i = 0; i < raw; ++i)
          for (int a = 0; a < n; ++a) combo[a] += hull_rows[h][i] * vs.velocities[i][a];
        hulls[raw + h] = std::move(combo);
      }
      for (const PayoffPoint& p : run) {
        ++rep.residual_points;
        double best = std::numeric_limits<double>::infinity();
        const double cutoff = (opt.exact_residuals || residual_csv)
                                  ? -1.0
                                  : std::max(rep.max_residual, 0.0);
        for (size_t wi = 0; wi < total_w; ++wi) {
          size_t w = (wi == 0) ? last_w : (wi - 1 == last_w ? 0 : wi - 1);
          double dd = detail::transport_residual(map, s, x, p, hulls[w], usable, gr,
                                                 opt.dd.gamma_samples, opt.dd.seed,
                                                 std::min(best, cutoff));
          if (dd < best) {
            best = dd;
            last_w = w;
          }
          if (best <= cutoff) break;
        }
        if (residual_csv) {
          *residual_csv << fmt(t);
          for (int a = 0; a < n; ++a) *residual_csv << ',' << fmt(x[a]);
          *residual_csv << ',' << fmt(p.j1) << ',' << fmt(p.j2) << ',' << fmt(best) << "\n";
        }
        if (best > rep.max_residual) {
          rep.max_residual = best;
          rep.worst_slice = s;
          rep.worst_node = node;
          rep.worst_point = p;
        }
      }
    }
  }

  rep.pass = rep.max_residual <= opt.tol_dd && rep.lower_violations == 0 &&
             rep.terminal_violations == 0;
  rep.notes = "residual sampling is evidence, not proof: transport checked on " +
              std::to_string(rep.residual_points) + " stored points along sampled velocities";
  return rep;
}

// ---- text format --------------------------------------------------------------------

// One line per (slice, node): "t x1 .. xn : J1,J2 ; J1,J2 ; ...".
// Empty clouds keep the colon with nothing after it.
inline void write_nash_map(const NashMap& map, std::ostream& os) {
  const Grid& g = map.grid;
  os << "# payoff map\n";
  os << "# quantum " << fmt(map.quantum) << "\n";
  os << "# stride " << map.stride << "\n";
  std::string buf;
  buf.reserve(1 << 20);
  Vec x(g.dim());
  for (int s = 0; s <= map.slice_count(); ++s) {
    const std::string ts = fmt(map.slice_time(s));
    const CloudSlice& cs = map.slices[s];
    for (int64_t node = 0; node < g.node_count(); ++node) {
      g.node_coords(node, x);
      buf += ts;
      for (int a = 0; a < g.dim(); ++a) {
        buf += ' ';
        buf += fmt(x[a]);
      }
      buf += " :";
      auto run = cs.cloud(node);
      for (size_t i = 0; i < run.size(); ++i) {
        buf += (i == 0) ? " " : " ; ";
        buf += fmt(run[i].j1);
        buf += ',';
        buf += fmt(run[i].j2);
      }
      buf += '\n';
      if (buf.size() > (1 << 20)) {
        os << buf;
        buf.clear();
      }
    }
  }
  os << buf;
}

// Rebuilds a map from its text form; the grid is inferred from the line
// coordinates (the result has stride 1 on its own slice spacing).
inline NashMap read_nash_map(std::istream& is) {
  struct Row {
    double t;
    Vec x;
    std::vector<PayoffPoint> pts;
  };
  std::vector<Row> rows;
  double quantum = 0.0;
  std::string line;
  size_t line_no = 0;
  int dim = -1;
  while (std::getline(is, line)) {
    ++line_no;
    std::string_view sv = trim(line);
    if (sv.empty()) continue;
    if (sv[0] == '#') {
      auto rest = trim(sv.substr(1));
      if (rest.rfind("quantum ", 0) == 0) {
        double q;
        if (parse_double(trim(rest.substr(8)), q)) quantum = q;
      }
      continue;
    }
    size_t colon = sv.find(':');
    require(colon != std::string_view::npos, ErrorKind::io,
            "map line " + std::to_string(line_no) + ": missing ':'");
    Row row;
    Vec head = parse_vec(sv.substr(0, colon), ErrorKind::io,
                         "map line " + std::to_string(line_no));
    require(head.size() >= 2, ErrorKind::io,
            "map line " + std::to_string(line_no) + ": need time and coordinates before ':'");
    row.t = head[0];
    row.x.assign(head.begin() + 1, head.end());
    if (dim < 0) dim = static_cast<int>(row.x.size());
    require(static_cast<int>(row.x.size()) == dim, ErrorKind::io,
            "map line " + std::to_string(line_no) + ": inconsistent coordinate count");
    std::string_view tail = trim(sv.substr(colon + 1));
    if (!tail.empty()) {
      for (std::string_view part : split(tail, ';')) {
        part = trim(part);
        if (part.empty()) continue;
        auto nums = split(part, ',');
        require(nums.size() == 2, ErrorKind::io,
                "map line " + std::to_string(line_no) + ": payoff must be 'J1,J2'");
        PayoffPoint p;
        require(parse_double(trim(nums[0]), p.j1) && parse_double(trim(nums[1]), p.j2),
                ErrorKind::io, "map line " + std::to_string(line_no) + ": bad payoff number");
        row.pts.push_back(p);
      }
    }
    rows.push_back(std::move(row));
  }
  require(!rows.empty(), ErrorKind::io, "map file has no data lines");

  auto uniq = [](std::vector<double> v) {
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end(), [](double a, double b) { return std::abs(a - b) < 1e-9; }),
            v.end());
    return v;
  };
  std::vector<double> times;
  for (const Row& r : rows) times.push_back(r.t);
  times = uniq(std::move(times));
  require(times.size() >= 2, ErrorKind::io, "map file needs at least 2 time slices");

  NashMap map;
  map.quantum = quantum;
  Grid& g = map.grid;
  g.t0 = times.front();
  g.theta0 = times.back();
  g.time_steps = static_cast<int>(times.size()) - 1;
  g.lo.resize(dim);
  g.hi.resize(dim);
  g.res.resize(dim);
  std::vector<std::vector<double>> axis(dim);
  for (int a = 0; a < dim; ++a) {
    std::vector<double> c;
    for (const Row& r : rows) c.push_back(r.x[a]);
    axis[a] = uniq(std::move(c));
    require(axis[a].size() >= 2, ErrorKind::io, "map file needs at least 2 nodes per axis");
    g.lo[a] = axis[a].front();
    g.hi[a] = axis[a].back();
    g.res[a] = static_cast<int>(axis[a].size());
  }
  g.validate();
  require(static_cast<int64_t>(rows.size()) == g.node_count() * (g.time_steps + 1),
          ErrorKind::io, "map file row count does not fill the inferred grid");

  auto index_of = [](const std::vector<double>& sorted, double v) {
    auto it = std::lower_bound(sorted.begin(), sorted.end(), v - 1e-9);
    require(it != sorted.end() && std::abs(*it - v) < 1e-9, ErrorKind::io,
            "map file: coordinate " + fmt(v) + " off the inferred grid");
    return static_cast<int>(it - sorted.begin());
  };

  map.stride = 1;
  map.slices.assign(g.time_steps + 1, CloudSlice{});
  std::vector<std::vector<std::vector<PayoffPoint>>> grids(
      g.time_steps + 1, std::vector<std::vector<PayoffPoint>>(g.node_count()));
  std::vector<int> mi(dim);
  for (Row& r : rows) {
    int s = index_of(times, r.t);
    for (int a = 0; a < dim; ++a) mi[a] = index_of(axis[a], r.x[a]);
    grids[s][g.flat_index(mi)] = std::move(r.pts);
  }
  for (int s = 0; s <= g.time_steps; ++s) {
    CloudSlice& cs = map.slices[s];
    cs.off.assign(g.node_count() + 1, 0);
    for (int64_t node = 0; node < g.node_count(); ++node) {
      auto& pts = grids[s][node];
      std::sort(pts.begin(), pts.end(), [](auto& a, auto& b) {
        return a.j1 < b.j1 || (a.j1 == b.j1 && a.j2 < b.j2);
      });
      cs.off[node + 1] = cs.off[node] + static_cast<uint32_t>(pts.size());
      cs.pts.insert(cs.pts.end(), pts.begin(), pts.end());
    }
  }
  return map;
}

}  // namespace dgnash
