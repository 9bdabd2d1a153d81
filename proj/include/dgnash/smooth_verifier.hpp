#pragma once

// Sufficient-condition checks for user-supplied candidate payoff pairs:
// terminal consistency, secured-level inequalities over sampled subgradients,
// vanishing transport modulus along hull velocities, and, for smooth pairs,
// pointwise solution of the coupled guidance system with one shared control
// pair. Sampling-based: PASS is evidence over the sampled points, not proof.

#include <functional>

#include "dgnash/common.hpp"
#include "dgnash/game.hpp"
#include "dgnash/grid.hpp"
#include "dgnash/value_field.hpp"

namespace dgnash {

enum class SmoothnessHint { smooth, piecewise };

// A candidate payoff pair (c1, c2): closed forms or interpolated fields.
struct CandidatePair {
  std::string label;
  SmoothnessHint hint = SmoothnessHint::piecewise;
  std::function<double(double, std::span<const double>)> c1, c2;

  double eval(int which, double t, std::span<const double> x) const {
    const auto& f = (which == 1) ? c1 : c2;
    require(static_cast<bool>(f), ErrorKind::config,
            "candidate pair '" + label + "' has no component " + std::to_string(which));
    return f(t, x);
  }
};

// Wrap solved or imported fields; queries clamp or reject per policy.
inline CandidatePair candidate_from_fields(std::shared_ptr<const ValueField> f1,
                                           std::shared_ptr<const ValueField> f2,
                                           const std::string& label = "fields",
                                           BoundaryPolicy policy = BoundaryPolicy::clamp) {
  require(f1 && f2, ErrorKind::config, "candidate_from_fields: both fields required");
  CandidatePair p;
  p.label = label;
  p.hint = SmoothnessHint::piecewise;
  p.c1 = [f1, policy](double t, std::span<const double> x) {
    return query_value(*f1, t, x, policy);
  };
  p.c2 = [f2, policy](double t, std::span<const double> x) {
    return query_value(*f2, t, x, policy);
  };
  return p;
}

// Time slope and spatial gradient of one candidate component.
struct SubgradientSample {
  double a = 0.0;
  Vec s;
};

struct SubgradientOptions {
  double radius = 0.02;       // spatial probe offsets around the point
  double fd_step = 1e-3;      // central-difference step
  int lambda_grid = 5;        // hull fill between limit gradients: 0, 1/4, ..., 1
  double cluster_tol = 1e-5;  // distinct-limit-gradient threshold
  double accept_slack = -1.0; // inequality slack; negative = 10*fd_step + radius^2
  uint64_t seed = 1;
};

namespace detail {

// Full space-time gradient of c at (t, x) by central differences; falls back
// to one-sided time differences at the horizon ends.
inline SubgradientSample fd_gradient(const std::function<double(double, std::span<const double>)>& c,
                                     double t, std::span<const double> x, double h, double t_lo,
                                     double t_hi) {
  const int n = static_cast<int>(x.size());
  SubgradientSample g;
  g.s.resize(n);
  double tp = std::min(t + h, t_hi), tm = std::max(t - h, t_lo);
  require(tp > tm, ErrorKind::domain, "gradient probe: degenerate time window");
  g.a = (c(tp, x) - c(tm, x)) / (tp - tm);
  Vec z(x.begin(), x.end());
  for (int a = 0; a < n; ++a) {
    z[a] = x[a] + h;
    double up = c(t, z);
    z[a] = x[a] - h;
    double dn = c(t, z);
    z[a] = x[a];
    g.s[a] = (up - dn) / (2.0 * h);
  }
  return g;
}

// Spatial probe directions: the point itself, +-axes, and all +-axis pairs.
inline std::vector<Vec> probe_directions(int n) {
  std::vector<Vec> dirs;
  dirs.emplace_back(n, 0.0);
  for (int a = 0; a < n; ++a)
    for (double sg : {1.0, -1.0}) {
      Vec d(n, 0.0);
      d[a] = sg;
      dirs.push_back(std::move(d));
    }
  for (int a = 0; a < n; ++a)
    for (int b = a + 1; b < n; ++b)
      for (double sa : {1.0, -1.0})
        for (double sb : {1.0, -1.0}) {
          Vec d(n, 0.0);
          d[a] = sa;
          d[b] = sb;
          dirs.push_back(std::move(d));
        }
  return dirs;
}

}  // namespace detail

// Upper (concave-side) subgradients of one candidate component at (t, x):
// pairs (a, s) with c(t', x') <= c(t, x) + a (t'-t) + <s, x'-x> + slack on a
// probe ball. Candidates are limiting gradients sampled around the point plus
// their pairwise convex combinations, so concave kinks yield the hull of the
// adjacent gradients and smooth points reproduce the gradient.
inline std::vector<SubgradientSample> sample_subgradients(
    const std::function<double(double, std::span<const double>)>& c, double t,
    std::span<const double> x, double t_lo, double t_hi, const SubgradientOptions& opt = {}) {
  require(static_cast<bool>(c), ErrorKind::config, "sample_subgradients: empty candidate");
  const int n = static_cast<int>(x.size());
  const double slack =
      (opt.accept_slack >= 0) ? opt.accept_slack : 10.0 * opt.fd_step + opt.radius * opt.radius;
  std::vector<Vec> dirs = detail::probe_directions(n);

  // limiting gradients around the point
  std::vector<SubgradientSample> limits;
  Vec z(n);
  for (double rho : {opt.radius, 0.5 * opt.radius}) {
    for (const Vec& d : dirs) {
      for (int a = 0; a < n; ++a) z[a] = x[a] + rho * d[a];
      SubgradientSample g = detail::fd_gradient(c, t, z, opt.fd_step, t_lo, t_hi);
      bool fresh = true;
      for (const SubgradientSample& h : limits) {
        double dd = std::abs(g.a - h.a);
        for (int a = 0; a < n; ++a) dd += std::abs(g.s[a] - h.s[a]);
        if (dd <= opt.cluster_tol) {
          fresh = false;
          break;
        }
      }
      if (fresh) limits.push_back(std::move(g));
    }
  }

  // hull fill between every pair of distinct limits
  std::vector<SubgradientSample> cands = limits;
  const int L = std::max(opt.lambda_grid, 2);
  for (size_t i = 0; i < limits.size(); ++i)
    for (size_t j = i + 1; j < limits.size(); ++j)
      for (int k = 1; k + 1 < L; ++k) {
        double lam = static_cast<double>(k) / (L - 1);
        SubgradientSample m;
        m.a = (1 - lam) * limits[i].a + lam * limits[j].a;
        m.s.resize(n);
        for (int a = 0; a < n; ++a)
          m.s[a] = (1 - lam) * limits[i].s[a] + lam * limits[j].s[a];
        cands.push_back(std::move(m));
      }

  // keep candidates satisfying the defining inequality on the probe ball
  const double c0 = c(t, x);
  std::vector<SubgradientSample> out;
  KroneckerSeq ball(derive_seed(opt.seed, 0x53554247ULL), n + 1);
  std::vector<std::pair<double, Vec>> test_pts;
  for (double rho : {opt.radius, 0.5 * opt.radius})
    for (const Vec& d : dirs) {
      Vec p(n);
      for (int a = 0; a < n; ++a) p[a] = x[a] + rho * d[a];
      test_pts.emplace_back(t, std::move(p));
    }
  for (int i = 0; i < 8; ++i) {
    const Vec& u = ball.next();
    double dt = (u[0] - 0.5) * opt.radius;
    double tp = std::clamp(t + dt, t_lo, t_hi);
    Vec p(n);
    for (int a = 0; a < n; ++a) p[a] = x[a] + (u[a + 1] - 0.5) * 2.0 * opt.radius;
    test_pts.emplace_back(tp, std::move(p));
  }
  for (const SubgradientSample& g : cands) {
    bool ok = true;
    for (const auto& [tp, p] : test_pts) {
      double lin = c0 + g.a * (tp - t);
      for (int a = 0; a < n; ++a) lin += g.s[a] * (p[a] - x[a]);
      if (c(tp, p) > lin + slack) {
        ok = false;
        break;
      }
    }
    if (ok) out.push_back(g);
  }
  return out;
}

// ---- transport modulus -----------------------------------------------------------------

// Best normalized joint increment of the pair transported from (t, x) along w,
// over the delta schedule and a ball of direction corrections. Near zero iff
// the pair is stationary along some motion close to w.
inline double modulus_derivative(const CandidatePair& pair, double t, std::span<const double> x,
                                 std::span<const double> w, const Vec& delta_schedule,
                                 double gamma_radius, int gamma_samples = 4, uint64_t seed = 1,
                                 double theta0 = std::numeric_limits<double>::quiet_NaN()) {
  require(!delta_schedule.empty(), ErrorKind::config,
          "modulus_derivative: empty delta schedule");
  if (!std::isnan(theta0)) {
    double dmax = *std::max_element(delta_schedule.begin(), delta_schedule.end());
    require(t + dmax <= theta0 + 1e-9, ErrorKind::domain,
            "modulus_derivative: t + max delta exceeds the horizon");
  }
  const int n = static_cast<int>(x.size());
  const double c10 = pair.eval(1, t, x);
  const double c20 = pair.eval(2, t, x);
  double best = std::numeric_limits<double>::infinity();
  Vec xs(n), xg(n);
  KroneckerSeq ball(derive_seed(seed, 0x4d4f4455ULL), n);
  for (double delta : delta_schedule) {
    require(delta > 0.0, ErrorKind::config, "modulus_derivative: deltas must be positive");
    for (int a = 0; a < n; ++a) xs[a] = x[a] + delta * w[a];
    auto score = [&](const Vec& z) {
      return (std::abs(pair.eval(1, t + delta, z) - c10) +
              std::abs(pair.eval(2, t + delta, z) - c20)) /
             delta;
    };
    best = std::min(best, score(xs));
    for (int i = 0; i < gamma_samples; ++i) {
      const Vec& u = ball.next();
      double r = gamma_radius * std::pow(u[0], 1.0 / n);
      double norm = 0.0;
      for (int a = 0; a < n; ++a) {
        xg[a] = u[(a + 1) % n] - 0.5 + (a == 0 ? 0.25 * u[0] : 0.0);
        norm += xg[a] * xg[a];
      }
      norm = std::max(std::sqrt(norm), 1e-12);
      for (int a = 0; a < n; ++a) xg[a] = xs[a] + delta * (r * xg[a] / norm);
      best = std::min(best, score(xg));
    }
  }
  return best;
}

// ---- sample-point schedules ------------------------------------------------------------

struct SamplePoint {
  double t = 0.0;
  Vec x;
};

// Deterministic low-discrepancy points strictly inside the grid box, away from
// the terminal instant; shared by the checkers and the acceptance suite.
inline std::vector<SamplePoint> sample_box_points(const Grid& grid, int count, uint64_t seed,
                                                  double margin = 0.05,
                                                  double time_margin = 0.05) {
  require(count > 0, ErrorKind::config, "sample_box_points: count must be positive");
  const int n = grid.dim();
  KroneckerSeq seq(derive_seed(seed, 0x504f494eULL), n + 1);
  std::vector<SamplePoint> pts;
  pts.reserve(count);
  const double span_t = (grid.theta0 - grid.t0) * (1.0 - time_margin);
  for (int i = 0; i < count; ++i) {
    const Vec& u = seq.next();
    SamplePoint p;
    p.t = grid.t0 + u[0] * span_t;
    p.x.resize(n);
    for (int a = 0; a < n; ++a) {
      double lo = grid.lo[a] + margin, hi = grid.hi[a] - margin;
      p.x[a] = lo + u[a + 1] * (hi - lo);
    }
    pts.push_back(std::move(p));
  }
  return pts;
}

// ---- secured-level / transport checker ---------------------------------------------------

struct PointCheck {
  double t = 0.0;
  Vec x;
  std::string test;  // terminal | level1 | level2 | transport
  double residual = 0.0;
};

struct UpperCheckOptions {
  int point_count = 128;        // interior sample points
  int terminal_count = 128;     // terminal-slice sample points
  double tol_val = 0.1;         // terminal consistency budget
  double tol_visc = -1.0;       // level-inequality budget; negative = 10*fd_step
  double tol_dd = 1.0;          // transport modulus budget
  double fd_step = 1e-3;
  int hull_density = 16;        // extra hull velocities for the modulus scan
  Vec delta_schedule;           // empty = {1,2,4} * (horizon/64)
  double gamma_radius = -1.0;   // negative = half min grid cell diagonal / min delta
  int gamma_samples = 4;
  uint64_t seed = 1;
  SubgradientOptions subgrad;
  bool keep_rows = false;  // retain every per-point row, not just failures
};

struct UpperCheckReport {
  bool pass = false;
  bool terminal_ok = false;
  bool viscosity_ok = false;  // secured-level inequalities over subgradients
  bool transport_ok = false;  // modulus along best hull velocity
  double max_terminal_gap = 0.0;
  double max_level_defect = -std::numeric_limits<double>::infinity();
  double max_transport = 0.0;
  PointCheck worst_terminal, worst_level, worst_transport;
  int64_t points_checked = 0;
  int64_t subgradients_checked = 0;
  std::vector<PointCheck> rows;
  std::string notes;
};

// Terminal consistency, then at sampled interior points: every sampled
// subgradient (a, s) of c_i must satisfy a + H_i(t, x, s) <= tol_visc, and
// some hull velocity must transport the pair with modulus <= tol_dd.
inline UpperCheckReport check_upper_solution(const GameSpec& g, const CandidatePair& pair,
                                             const Grid& grid,
                                             const UpperCheckOptions& opt = {}) {
  g.validate();
  grid.validate();
  require(grid.dim() == g.state_dim, ErrorKind::config,
          "check_upper_solution: grid dimension must equal game state_dim");
  UpperCheckReport rep;
  const int n = grid.dim();
  const double tol_visc = (opt.tol_visc >= 0) ? opt.tol_visc : 10.0 * opt.fd_step;
  Vec deltas = opt.delta_schedule;
  if (deltas.empty()) {
    double base = (grid.theta0 - grid.t0) / 64.0;
    deltas = {base, 2.0 * base, 4.0 * base};
  }
  const double dmax = *std::max_element(deltas.begin(), deltas.end());
  double gr = opt.gamma_radius;
  if (gr < 0) {
    double dmin = *std::min_element(deltas.begin(), deltas.end());
    gr = 0.5 * grid.cell_diameter() / std::max(dmin, 1e-12);
  }

  auto push_row = [&](PointCheck&& row, bool failed) {
    if (opt.keep_rows || failed) rep.rows.push_back(std::move(row));
  };

  // terminal consistency
  {
    rep.max_terminal_gap = 0.0;
    KroneckerSeq seq(derive_seed(opt.seed, 0x5445524dULL), n);
    Vec x(n);
    for (int i = 0; i < opt.terminal_count; ++i) {
      const Vec& u = seq.next();
      for (int a = 0; a < n; ++a) x[a] = grid.lo[a] + u[a] * (grid.hi[a] - grid.lo[a]);
      double gap = std::max(std::abs(pair.eval(1, grid.theta0, x) - eval_payoff(g.sigma1, x)),
                            std::abs(pair.eval(2, grid.theta0, x) - eval_payoff(g.sigma2, x)));
      if (gap > rep.max_terminal_gap) {
        rep.max_terminal_gap = gap;
        rep.worst_terminal = {grid.theta0, x, "terminal", gap};
      }
      if (gap > opt.tol_val) push_row({grid.theta0, x, "terminal", gap}, true);
    }
    rep.terminal_ok = rep.max_terminal_gap <= opt.tol_val;
  }

  // interior points: margin keeps gradient probes and transports inside the box
  double margin = opt.subgrad.radius + opt.fd_step;
  double vb = velocity_bound(g, grid);
  double span = grid.hi[0] - grid.lo[0];
  for (int a = 1; a < n; ++a) span = std::min(span, grid.hi[a] - grid.lo[a]);
  margin = std::max(margin, std::min(0.25 * span, dmax * vb + gr * dmax));
  double tmargin = std::max(dmax / (grid.theta0 - grid.t0), 1e-3);
  std::vector<SamplePoint> pts =
      sample_box_points(grid, opt.point_count, opt.seed, margin, tmargin);

  rep.viscosity_ok = true;
  rep.transport_ok = true;
  for (const SamplePoint& p : pts) {
    ++rep.points_checked;
    // secured-level inequalities over sampled subgradients of both components
    for (int which = 1; which <= 2; ++which) {
      const auto& comp = (which == 1) ? pair.c1 : pair.c2;
      SubgradientOptions so = opt.subgrad;
      so.fd_step = opt.fd_step;
      so.seed = derive_seed(opt.seed, 0x53474f50ULL + which);
      auto subs = sample_subgradients(comp, p.t, p.x, grid.t0, grid.theta0, so);
      for (const SubgradientSample& sg : subs) {
        ++rep.subgradients_checked;
        double defect = sg.a + hamiltonian(g, which, p.t, p.x, sg.s);
        if (defect > rep.max_level_defect) {
          rep.max_level_defect = defect;
          rep.worst_level = {p.t, p.x, "level" + std::to_string(which), defect};
        }
        if (defect > tol_visc) {
          rep.viscosity_ok = false;
          push_row({p.t, p.x, "level" + std::to_string(which), defect}, true);
        }
      }
    }
    // transport modulus along the best hull velocity
    VelocitySet vs = velocity_set(g, p.t, p.x, opt.hull_density, opt.seed);
    double best = std::numeric_limits<double>::infinity();
    for (const Vec& w : vs.hull_samples) {
      best = std::min(best, modulus_derivative(pair, p.t, p.x, w, deltas, gr, opt.gamma_samples,
                                               opt.seed, grid.theta0));
      if (best <= 0.0) break;
    }
    if (best > rep.max_transport) {
      rep.max_transport = best;
      rep.worst_transport = {p.t, p.x, "transport", best};
    }
    if (best > opt.tol_dd) {
      rep.transport_ok = false;
      push_row({p.t, p.x, "transport", best}, true);
    } else if (opt.keep_rows) {
      push_row({p.t, p.x, "transport", best}, false);
    }
  }
  rep.pass = rep.terminal_ok && rep.viscosity_ok && rep.transport_ok;
  rep.notes = "sampled check: " + std::to_string(rep.points_checked) + " points, " +
              std::to_string(rep.subgradients_checked) +
              " subgradients; evidence over the sampled set, not proof";
  return rep;
}

// ---- smooth guidance system --------------------------------------------------------------

struct ControlSelection {
  double t = 0.0;
  Vec x;
  bool smooth = false;
  bool found = false;
  int u_index = -1;
  int v_index = -1;
  double residual = std::numeric_limits<double>::infinity();
};

struct SmoothCheckOptions {
  double tol_visc = -1.0;     // stationarity budget; negative = 10*fd_step
  double fd_step = 1e-3;
  double kink_spread = 0.05;  // gradient disagreement that excludes a point
  double probe_radius = 0.01;
  uint64_t seed = 1;
};

struct SmoothSystemReport {
  bool pass = false;
  int64_t smooth_points = 0;
  int64_t kink_points = 0;
  int64_t failures = 0;  // smooth points with no admissible control pair
  double max_residual = 0.0;
  std::vector<ControlSelection> selections;
  std::string notes;
};

namespace detail {

// Gradient spread over a small probe cross; large spread marks a kink.
inline bool point_is_smooth(const std::function<double(double, std::span<const double>)>& c,
                            double t, std::span<const double> x, double radius, double fd_step,
                            double spread_tol, double t_lo, double t_hi) {
  const int n = static_cast<int>(x.size());
  SubgradientSample center = fd_gradient(c, t, x, fd_step, t_lo, t_hi);
  Vec z(n);
  for (int a = 0; a < n; ++a)
    for (double sg : {1.0, -1.0}) {
      for (int b = 0; b < n; ++b) z[b] = x[b];
      z[a] = x[a] + sg * radius;
      SubgradientSample g = fd_gradient(c, t, z, fd_step, t_lo, t_hi);
      double dd = std::abs(g.a - center.a);
      for (int b = 0; b < n; ++b) dd += std::abs(g.s[b] - center.s[b]);
      if (dd > spread_tol) return false;
    }
  return true;
}

}  // namespace detail

// At every smooth sample point, search the control samples for one pair
// (u, v) that is simultaneously a best reply in each player's own gradient
// direction and stationary for both components; kink points are excluded and
// reported, smooth points without such a pair are failures.
inline SmoothSystemReport check_smooth_system(const GameSpec& g, const CandidatePair& pair,
                                              const std::vector<SamplePoint>& points,
                                              double t_lo, double t_hi,
                                              const SmoothCheckOptions& opt = {}) {
  g.validate();
  SmoothSystemReport rep;
  const double tol = (opt.tol_visc >= 0) ? opt.tol_visc : 10.0 * opt.fd_step;
  const int np = static_cast<int>(g.p_samples.size());
  const int nq = static_cast<int>(g.q_samples.size());
  Vec f(g.state_dim);
  for (const SamplePoint& p : points) {
    ControlSelection sel;
    sel.t = p.t;
    sel.x = p.x;
    bool smooth1 = detail::point_is_smooth(pair.c1, p.t, p.x, opt.probe_radius, opt.fd_step,
                                           opt.kink_spread, t_lo, t_hi);
    bool smooth2 = detail::point_is_smooth(pair.c2, p.t, p.x, opt.probe_radius, opt.fd_step,
                                           opt.kink_spread, t_lo, t_hi);
    sel.smooth = smooth1 && smooth2;
    if (!sel.smooth) {
      ++rep.kink_points;
      rep.selections.push_back(std::move(sel));
      continue;
    }
    ++rep.smooth_points;
    SubgradientSample g1 = detail::fd_gradient(pair.c1, p.t, p.x, opt.fd_step, t_lo, t_hi);
    SubgradientSample g2 = detail::fd_gradient(pair.c2, p.t, p.x, opt.fd_step, t_lo, t_hi);

    // directional rates <grad_i, f(u, v)> for every sample pair
    std::vector<double> rate1(static_cast<size_t>(np) * nq), rate2(rate1.size());
    for (int i = 0; i < np; ++i)
      for (int j = 0; j < nq; ++j) {
        eval_dynamics(g, p.t, p.x, g.p_samples[i], g.q_samples[j], f);
        rate1[i * nq + j] = dot(g1.s, f);
        rate2[i * nq + j] = dot(g2.s, f);
      }
    for (int i = 0; i < np && !sel.found; ++i)
      for (int j = 0; j < nq && !sel.found; ++j) {
        double best_u = -std::numeric_limits<double>::infinity();
        for (int i2 = 0; i2 < np; ++i2) best_u = std::max(best_u, rate1[i2 * nq + j]);
        if (rate1[i * nq + j] < best_u - tol) continue;  // u not a best reply for c1
        double best_v = -std::numeric_limits<double>::infinity();
        for (int j2 = 0; j2 < nq; ++j2) best_v = std::max(best_v, rate2[i * nq + j2]);
        if (rate2[i * nq + j] < best_v - tol) continue;  // v not a best reply for c2
        double res = std::max(std::abs(g1.a + rate1[i * nq + j]),
                              std::abs(g2.a + rate2[i * nq + j]));
        if (res <= tol) {
          sel.found = true;
          sel.u_index = i;
          sel.v_index = j;
          sel.residual = res;
        }
      }
    if (!sel.found) ++rep.failures;
    else rep.max_residual = std::max(rep.max_residual, sel.residual);
    rep.selections.push_back(std::move(sel));
  }
  rep.pass = (rep.failures == 0) && (rep.smooth_points > 0);
  rep.notes = "smooth points " + std::to_string(rep.smooth_points) + ", kink points excluded " +
              std::to_string(rep.kink_points) +
              "; evidence over the sampled set, not proof";
  return rep;
}

// ---- report CSV --------------------------------------------------------------------------

inline void write_point_checks_csv(const std::vector<PointCheck>& rows, int dim,
                                   std::ostream& os) {
  os << "t";
  for (int a = 0; a < dim; ++a) os << ",x" << (a + 1);
  os << ",test,residual\n";
  for (const PointCheck& r : rows) {
    os << fmt(r.t);
    for (int a = 0; a < dim; ++a) os << ',' << fmt(r.x[a]);
    os << ',' << r.test << ',' << fmt(r.residual) << "\n";
  }
}

inline void write_control_selections_csv(const std::vector<ControlSelection>& rows, int dim,
                                         std::ostream& os) {
  os << "t";
  for (int a = 0; a < dim; ++a) os << ",x" << (a + 1);
  os << ",smooth,found,u_index,v_index,residual\n";
  for (const ControlSelection& r : rows) {
    os << fmt(r.t);
    for (int a = 0; a < dim; ++a) os << ',' << fmt(r.x[a]);
    os << ',' << (r.smooth ? 1 : 0) << ',' << (r.found ? 1 : 0) << ',' << r.u_index << ','
       << r.v_index << ',' << fmt(r.residual) << "\n";
  }
}

}  // namespace dgnash
