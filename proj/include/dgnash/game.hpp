#pragma once

// Game model: dynamics catalog, terminal payoff catalog, sampled control sets,
// velocity sets with convex hull samples, lower/upper Hamiltonians, and the
// minmax-vs-maxmin gap check.

#include <utility>

#include "dgnash/common.hpp"
#include "dgnash/grid.hpp"

namespace dgnash {

// ---- terminal payoffs ----------------------------------------------------------

// Forms: "neg_abs_diff" (dim 2): -(|x0 - x1|); "linear": dot(coef, x) + offset;
// "neg_dist": -||x - coef||_2 + offset.
struct PayoffSpec {
  std::string form = "linear";
  Vec coef;
  double offset = 0.0;

  void validate(int state_dim) const {
    if (form == "neg_abs_diff") {
      require(state_dim == 2, ErrorKind::config, "payoff neg_abs_diff needs state_dim == 2");
    } else if (form == "linear" || form == "neg_dist") {
      require(static_cast<int>(coef.size()) == state_dim, ErrorKind::config,
              "payoff '" + form + "' needs a coefficient per state axis");
    } else {
      fail(ErrorKind::config, "unknown payoff form '" + form + "'");
    }
  }
};

inline double eval_payoff(const PayoffSpec& p, std::span<const double> x) {
  if (p.form == "neg_abs_diff") return -std::abs(x[0] - x[1]);
  if (p.form == "linear") return dot(p.coef, x) + p.offset;
  if (p.form == "neg_dist") {
    double s = 0.0;
    for (size_t i = 0; i < x.size(); ++i) {
      double d = x[i] - p.coef[i];
      s += d * d;
    }
    return -std::sqrt(s) + p.offset;
  }
  fail(ErrorKind::config, "unknown payoff form '" + p.form + "'");
}

// Bound on the l1 norm of the payoff gradient; payoff change per unit linf move.
inline double payoff_lipschitz(const PayoffSpec& p) {
  if (p.form == "neg_abs_diff") return 2.0;
  if (p.form == "linear") return norm_l1(p.coef);
  if (p.form == "neg_dist") return std::sqrt(static_cast<double>(p.coef.size()));
  fail(ErrorKind::config, "unknown payoff form '" + p.form + "'");
}

// ---- game spec -------------------------------------------------------------------

// Dynamics catalog:
//   "example"    n=2, scalar controls: dx = u, dy = v.
//   "affine"     dx = (A + t*A_t) x + B u + C v, matrices row-major.
//   "coupled_uv" n=1, scalar controls: dx = u * v (fails the minmax=maxmin test).
struct GameSpec {
  std::string dynamics_id = "example";
  double t0 = 0.0;
  double theta0 = 1.0;
  int state_dim = 2;
  std::vector<Vec> p_samples;  // player I control samples
  std::vector<Vec> q_samples;  // player II control samples
  PayoffSpec sigma1, sigma2;
  Vec A, B, C, A_t;  // affine dynamics data; empty A_t means time-invariant

  int p_dim() const { return p_samples.empty() ? 0 : static_cast<int>(p_samples[0].size()); }
  int q_dim() const { return q_samples.empty() ? 0 : static_cast<int>(q_samples[0].size()); }

  bool time_invariant() const { return A_t.empty(); }

  void validate() const {
    require(theta0 > t0, ErrorKind::config, "game: theta0 must exceed t0");
    require(state_dim >= 1, ErrorKind::config, "game: state_dim must be >= 1");
    require(!p_samples.empty(), ErrorKind::config, "game: p_samples must be nonempty");
    require(!q_samples.empty(), ErrorKind::config, "game: q_samples must be nonempty");
    for (const Vec& u : p_samples)
      require(u.size() == p_samples[0].size(), ErrorKind::config,
              "game: p_samples must share one dimension");
    for (const Vec& v : q_samples)
      require(v.size() == q_samples[0].size(), ErrorKind::config,
              "game: q_samples must share one dimension");
    sigma1.validate(state_dim);
    sigma2.validate(state_dim);
    if (dynamics_id == "example") {
      require(state_dim == 2 && p_dim() == 1 && q_dim() == 1, ErrorKind::config,
              "example dynamics need state_dim 2 and scalar controls");
    } else if (dynamics_id == "affine") {
      const size_t n = static_cast<size_t>(state_dim);
      require(A.size() == n * n, ErrorKind::config, "affine dynamics: A must be state_dim^2");
      require(B.size() == n * static_cast<size_t>(p_dim()), ErrorKind::config,
              "affine dynamics: B must be state_dim x p_dim");
      require(C.size() == n * static_cast<size_t>(q_dim()), ErrorKind::config,
              "affine dynamics: C must be state_dim x q_dim");
      require(A_t.empty() || A_t.size() == n * n, ErrorKind::config,
              "affine dynamics: A_t must be empty or state_dim^2");
    } else if (dynamics_id == "coupled_uv") {
      require(state_dim == 1 && p_dim() == 1 && q_dim() == 1, ErrorKind::config,
              "coupled_uv dynamics need state_dim 1 and scalar controls");
    } else {
      fail(ErrorKind::config, "unknown dynamics_id '" + dynamics_id + "'");
    }
  }
};

inline void eval_dynamics(const GameSpec& g, double t, std::span<const double> x,
                          std::span<const double> u, std::span<const double> v,
                          std::span<double> out) {
  if (g.dynamics_id == "example") {
    out[0] = u[0];
    out[1] = v[0];
    return;
  }
  if (g.dynamics_id == "coupled_uv") {
    out[0] = u[0] * v[0];
    return;
  }
  const int n = g.state_dim;
  for (int i = 0; i < n; ++i) {
    double s = 0.0;
    const double* Ai = g.A.data() + static_cast<size_t>(i) * n;
    for (int j = 0; j < n; ++j) s += Ai[j] * x[j];
    if (!g.A_t.empty()) {
      const double* Ati = g.A_t.data() + static_cast<size_t>(i) * n;
      for (int j = 0; j < n; ++j) s += t * Ati[j] * x[j];
    }
    for (int j = 0; j < g.p_dim(); ++j) s += g.B[static_cast<size_t>(i) * g.p_dim() + j] * u[j];
    for (int j = 0; j < g.q_dim(); ++j) s += g.C[static_cast<size_t>(i) * g.q_dim() + j] * v[j];
    out[i] = s;
  }
}

inline Vec eval_dynamics(const GameSpec& g, double t, std::span<const double> x,
                         std::span<const double> u, std::span<const double> v) {
  Vec out(g.state_dim);
  eval_dynamics(g, t, x, u, v, out);
  return out;
}

// Sup-norm bound on the velocity over the grid box and all control samples.
inline double velocity_bound(const GameSpec& g, const Grid& grid) {
  double bound = 0.0;
  Vec f(g.state_dim);
  const int corners = 1 << grid.dim();
  Vec x(grid.dim());
  for (int c = 0; c < corners; ++c) {
    for (int a = 0; a < grid.dim(); ++a) x[a] = ((c >> a) & 1) ? grid.hi[a] : grid.lo[a];
    for (const Vec& u : g.p_samples)
      for (const Vec& v : g.q_samples)
        for (double t : {g.t0, g.theta0}) {
          eval_dynamics(g, t, x, u, v, f);
          bound = std::max(bound, norm_linf(f));
        }
  }
  return bound;
}

// Lipschitz constant of f in x (sup-norm); zero for control-only dynamics.
inline double state_lipschitz(const GameSpec& g) {
  if (g.dynamics_id != "affine") return 0.0;
  double m = 0.0;
  const int n = g.state_dim;
  for (int i = 0; i < n; ++i) {
    double row = 0.0;
    for (int j = 0; j < n; ++j) {
      double a = std::abs(g.A[static_cast<size_t>(i) * n + j]);
      if (!g.A_t.empty())
        a += std::max(std::abs(g.t0), std::abs(g.theta0)) *
             std::abs(g.A_t[static_cast<size_t>(i) * n + j]);
      row += a;
    }
    m = std::max(m, row);
  }
  return m;
}

// ---- velocity sets -----------------------------------------------------------------

struct VelocitySet {
  std::vector<Vec> velocities;                 // one per control pair, p-major order
  std::vector<std::pair<int, int>> control_pairs;  // (p index, q index)
  std::vector<Vec> hull_samples;               // velocities ++ seeded convex combinations
};

// Seeded convex weights shared across nodes of a build; one row per hull sample.
inline std::vector<Vec> hull_weight_rows(int raw_count, int hull_density, uint64_t seed) {
  std::vector<Vec> rows;
  rows.reserve(hull_density);
  KroneckerSeq seq(derive_seed(seed, 0x48554c4cULL), raw_count);
  for (int h = 0; h < hull_density; ++h) rows.push_back(convex_weights(seq.next(), raw_count));
  return rows;
}

inline VelocitySet velocity_set(const GameSpec& g, double t, std::span<const double> x,
                                int hull_density = 0, uint64_t seed = 1) {
  require(hull_density >= 0, ErrorKind::config, "velocity_set: hull_density must be >= 0");
  VelocitySet vs;
  const int np = static_cast<int>(g.p_samples.size());
  const int nq = static_cast<int>(g.q_samples.size());
  vs.velocities.reserve(static_cast<size_t>(np) * nq);
  vs.control_pairs.reserve(static_cast<size_t>(np) * nq);
  for (int i = 0; i < np; ++i)
    for (int j = 0; j < nq; ++j) {
      vs.velocities.push_back(eval_dynamics(g, t, x, g.p_samples[i], g.q_samples[j]));
      vs.control_pairs.emplace_back(i, j);
    }
  vs.hull_samples = vs.velocities;
  if (hull_density > 0) {
    const int m = static_cast<int>(vs.velocities.size());
    for (const Vec& w : hull_weight_rows(m, hull_density, seed)) {
      Vec combo(g.state_dim, 0.0);
      for (int i = 0; i < m; ++i)
        for (int a = 0; a < g.state_dim; ++a) combo[a] += w[i] * vs.velocities[i][a];
      vs.hull_samples.push_back(std::move(combo));
    }
  }
  return vs;
}

// ---- Hamiltonians and the saddle gap ---------------------------------------------------

enum class StepMode { max_min, min_max, max_max };

// which=1: H1 = max_u min_v <s, f>; which=2: H2 = max_v min_u <s, f>.
inline double hamiltonian(const GameSpec& g, int which, double t, std::span<const double> x,
                          std::span<const double> s) {
  require(which == 1 || which == 2, ErrorKind::config, "hamiltonian: which must be 1 or 2");
  Vec f(g.state_dim);
  double outer = -std::numeric_limits<double>::infinity();
  const auto& outer_set = (which == 1) ? g.p_samples : g.q_samples;
  const auto& inner_set = (which == 1) ? g.q_samples : g.p_samples;
  for (const Vec& a : outer_set) {
    double inner = std::numeric_limits<double>::infinity();
    for (const Vec& b : inner_set) {
      const Vec& u = (which == 1) ? a : b;
      const Vec& v = (which == 1) ? b : a;
      eval_dynamics(g, t, x, u, v, f);
      inner = std::min(inner, dot(s, f));
    }
    outer = std::max(outer, inner);
  }
  return outer;
}

struct SaddleGapReport {
  double max_gap = 0.0;  // max over samples of minmax - maxmin (>= 0)
  double worst_t = 0.0;
  Vec worst_x, worst_s;
};

// gap(t,x,s) = min_u max_v <s,f> - max_v min_u <s,f>; zero everywhere iff the
// sampled direction game has a saddle point (weak duality makes it >= 0).
inline double saddle_gap(const GameSpec& g, double t, std::span<const double> x,
                         std::span<const double> s) {
  Vec f(g.state_dim);
  const int np = static_cast<int>(g.p_samples.size());
  const int nq = static_cast<int>(g.q_samples.size());
  Vec vals(static_cast<size_t>(np) * nq);
  for (int i = 0; i < np; ++i)
    for (int j = 0; j < nq; ++j) {
      eval_dynamics(g, t, x, g.p_samples[i], g.q_samples[j], f);
      vals[static_cast<size_t>(i) * nq + j] = dot(s, f);
    }
  double minmax = std::numeric_limits<double>::infinity();
  for (int i = 0; i < np; ++i) {
    double best = -std::numeric_limits<double>::infinity();
    for (int j = 0; j < nq; ++j) best = std::max(best, vals[static_cast<size_t>(i) * nq + j]);
    minmax = std::min(minmax, best);
  }
  double maxmin = -std::numeric_limits<double>::infinity();
  for (int j = 0; j < nq; ++j) {
    double worst = std::numeric_limits<double>::infinity();
    for (int i = 0; i < np; ++i) worst = std::min(worst, vals[static_cast<size_t>(i) * nq + j]);
    maxmin = std::max(maxmin, worst);
  }
  return minmax - maxmin;
}

inline SaddleGapReport isaacs_check(const GameSpec& g, std::span<const double> t_samples,
                                    std::span<const Vec> x_samples,
                                    std::span<const Vec> s_samples) {
  require(!t_samples.empty() && !x_samples.empty() && !s_samples.empty(), ErrorKind::config,
          "isaacs_check: sample lists must be nonempty");
  SaddleGapReport rep;
  rep.worst_t = t_samples[0];
  rep.worst_x = x_samples[0];
  rep.worst_s = s_samples[0];
  bool first = true;
  for (double t : t_samples)
    for (const Vec& x : x_samples)
      for (const Vec& s : s_samples) {
        double gap = saddle_gap(g, t, x, s);
        if (first || gap > rep.max_gap) {
          rep.max_gap = gap;
          rep.worst_t = t;
          rep.worst_x = x;
          rep.worst_s = s;
          first = false;
        }
      }
  return rep;
}

// Default probe set: box corners and center for x, +-axis and diagonal unit vectors
// for s, endpoints and midpoint in t.
inline SaddleGapReport isaacs_check_default(const GameSpec& g, const Grid& grid) {
  Vec ts = {grid.t0, 0.5 * (grid.t0 + grid.theta0), grid.theta0};
  std::vector<Vec> xs;
  const int n = grid.dim();
  for (int c = 0; c < (1 << n); ++c) {
    Vec x(n);
    for (int a = 0; a < n; ++a) x[a] = ((c >> a) & 1) ? grid.hi[a] : grid.lo[a];
    xs.push_back(std::move(x));
  }
  Vec center(n);
  for (int a = 0; a < n; ++a) center[a] = 0.5 * (grid.lo[a] + grid.hi[a]);
  xs.push_back(std::move(center));
  std::vector<Vec> ss;
  for (int a = 0; a < n; ++a)
    for (double sgn : {1.0, -1.0}) {
      Vec s(n, 0.0);
      s[a] = sgn;
      ss.push_back(std::move(s));
    }
  for (int c = 0; c < (1 << n); ++c) {
    Vec s(n);
    for (int a = 0; a < n; ++a) s[a] = ((c >> a) & 1) ? 1.0 : -1.0;
    ss.push_back(std::move(s));
  }
  return isaacs_check(g, ts, xs, ss);
}

// ---- catalog factories ---------------------------------------------------------------

// Decoupled unit-speed players on the plane: dx = u, dy = v, u,v in [-1,1];
// sigma1 = -|x - y|, sigma2 = y. Closed forms for everything live in
// example_oracle.hpp, which makes this the calibration game for the test suite.
inline GameSpec example_game() {
  GameSpec g;
  g.dynamics_id = "example";
  g.t0 = 0.0;
  g.theta0 = 1.0;
  g.state_dim = 2;
  g.p_samples = {{-1.0}, {0.0}, {1.0}};
  g.q_samples = {{-1.0}, {0.0}, {1.0}};
  g.sigma1.form = "neg_abs_diff";
  g.sigma2.form = "linear";
  g.sigma2.coef = {0.0, 1.0};
  return g;
}

// Rotation coupling: dx = 0.5 y + u, dy = -0.5 x + v. Euler error is O(step)
// here, which the integration-order tests rely on.
inline GameSpec affine_rotation_game() {
  GameSpec g;
  g.dynamics_id = "affine";
  g.t0 = 0.0;
  g.theta0 = 1.0;
  g.state_dim = 2;
  g.A = {0.0, 0.5, -0.5, 0.0};
  g.B = {1.0, 0.0};
  g.C = {0.0, 1.0};
  g.p_samples = {{-1.0}, {0.0}, {1.0}};
  g.q_samples = {{-1.0}, {0.0}, {1.0}};
  g.sigma1.form = "linear";
  g.sigma1.coef = {1.0, 0.0};
  g.sigma2.form = "linear";
  g.sigma2.coef = {0.0, 1.0};
  return g;
}

// Contracting drift with separated controls.
inline GameSpec affine_damped_game() {
  GameSpec g;
  g.dynamics_id = "affine";
  g.t0 = 0.0;
  g.theta0 = 1.0;
  g.state_dim = 2;
  g.A = {-0.4, 0.0, 0.0, -0.4};
  g.B = {1.0, 0.0};
  g.C = {0.0, 1.0};
  g.p_samples = {{-1.0}, {0.0}, {1.0}};
  g.q_samples = {{-1.0}, {0.0}, {1.0}};
  g.sigma1.form = "neg_abs_diff";
  g.sigma2.form = "linear";
  g.sigma2.coef = {0.0, 1.0};
  return g;
}

// Multiplicative control coupling on the line; its saddle gap is strictly
// positive, so solver warnings and strict-mode errors can be exercised.
inline GameSpec coupled_uv_game() {
  GameSpec g;
  g.dynamics_id = "coupled_uv";
  g.t0 = 0.0;
  g.theta0 = 1.0;
  g.state_dim = 1;
  g.p_samples = {{-1.0}, {1.0}};
  g.q_samples = {{-1.0}, {1.0}};
  g.sigma1.form = "linear";
  g.sigma1.coef = {1.0};
  g.sigma2.form = "linear";
  g.sigma2.coef = {-1.0};
  return g;
}

inline GameSpec make_catalog_game(const std::string& id) {
  if (id == "example") return example_game();
  if (id == "affine_rotation") return affine_rotation_game();
  if (id == "affine_damped") return affine_damped_game();
  if (id == "coupled_uv") return coupled_uv_game();
  fail(ErrorKind::config, "unknown catalog game '" + id + "'");
}

}  // namespace dgnash
