#pragma once

// Step-by-step motions under feedback strategies on per-player partitions,
// punishment-composite equilibrium profiles built from a payoff map, and
// unilateral-deviation experiments over a documented strategy catalog.

#include <functional>
#include <memory>

#include "dgnash/common.hpp"
#include "dgnash/game.hpp"
#include "dgnash/grid.hpp"
#include "dgnash/nash_map.hpp"
#include "dgnash/value_field.hpp"

namespace dgnash {

// ---- partitions -------------------------------------------------------------------------

struct Partition {
  Vec instants;  // strictly increasing, first = t_*, last = theta0

  double fineness() const {
    double f = 0.0;
    for (size_t i = 1; i < instants.size(); ++i) f = std::max(f, instants[i] - instants[i - 1]);
    return f;
  }

  void validate(double eps) const {
    require(instants.size() >= 2, ErrorKind::config, "partition: needs at least two instants");
    for (size_t i = 1; i < instants.size(); ++i)
      require(instants[i] > instants[i - 1], ErrorKind::config,
              "partition: instants must increase strictly");
    require(fineness() <= eps + 1e-12, ErrorKind::config,
            "partition: fineness " + fmt(fineness()) + " exceeds declared " + fmt(eps));
  }

  // Uniform partition with gap < eps; jitter_seed != 0 perturbs the interior
  // instants by up to a quarter gap while keeping the fineness bound.
  static Partition uniform(double t_star, double theta0, double eps, uint64_t jitter_seed = 0) {
    require(eps > 0.0, ErrorKind::config, "partition: eps must be positive");
    require(theta0 > t_star, ErrorKind::config, "partition: empty time interval");
    const double span = theta0 - t_star;
    const double target = (jitter_seed != 0) ? eps / 1.5 : eps;
    int n = std::max(1, static_cast<int>(std::ceil(span / target * (1.0 + 1e-12))));
    Partition p;
    p.instants.resize(n + 1);
    const double h = span / n;
    for (int i = 0; i <= n; ++i) p.instants[i] = t_star + i * h;
    p.instants[n] = theta0;
    if (jitter_seed != 0) {
      uint64_t s = derive_seed(jitter_seed, 0x4a495454ULL);
      for (int i = 1; i < n; ++i)
        p.instants[i] += (unit_double(splitmix64(s)) - 0.5) * 0.5 * h;
    }
    p.validate(eps);
    return p;
  }
};

// ---- strategies -------------------------------------------------------------------------

struct ControlDecision {
  Vec control;
  bool punishing = false;
};

// A live strategy instance: called at the player's own partition instants.
using StrategyFn = std::function<ControlDecision(double t, std::span<const double> x)>;

// Strategy description plus an instantiation factory; instantiate returns a
// fresh closure per run so latched state (punishment detection) never leaks
// between simulations.
struct FeedbackStrategy {
  std::string kind;  // constant | table | punishment | custom
  std::string name;
  int player = 0;       // 1 or 2; bookkeeping only
  bool jitter = false;  // request a jittered own partition
  std::function<StrategyFn(double eps, uint64_t seed)> instantiate;
};

inline FeedbackStrategy constant_strategy(int player, const Vec& control,
                                          const std::string& name = "") {
  FeedbackStrategy s;
  s.kind = "constant";
  s.name = name.empty() ? ("const_" + fmt(control)) : name;
  s.player = player;
  s.instantiate = [control](double, uint64_t) -> StrategyFn {
    return [control](double, std::span<const double>) { return ControlDecision{control, false}; };
  };
  return s;
}

namespace detail {

inline int find_sample(const std::vector<Vec>& samples, std::span<const double> c,
                       double tol = 1e-9) {
  for (size_t i = 0; i < samples.size(); ++i) {
    if (samples[i].size() != c.size()) continue;
    double d = 0.0;
    for (size_t a = 0; a < c.size(); ++a) d = std::max(d, std::abs(samples[i][a] - c[a]));
    if (d <= tol) return static_cast<int>(i);
  }
  return -1;
}

}  // namespace detail

// ---- trajectories -----------------------------------------------------------------------

struct Trajectory {
  Vec times;                   // merged instants, m+1 entries
  std::vector<Vec> states;     // m+1 states
  std::vector<Vec> u_controls; // m per-interval controls of player I
  std::vector<Vec> v_controls; // m per-interval controls of player II
  std::vector<uint8_t> punishing;  // m flags: either side punishing
  PayoffPoint payoffs;

  // Piecewise-linear state lookup; clamps outside the recorded range.
  Vec state_at(double t) const {
    require(!times.empty(), ErrorKind::config, "trajectory: empty");
    if (t <= times.front()) return states.front();
    if (t >= times.back()) return states.back();
    size_t k = std::upper_bound(times.begin(), times.end(), t) - times.begin() - 1;
    double lam = (t - times[k]) / (times[k + 1] - times[k]);
    Vec z(states[k].size());
    for (size_t a = 0; a < z.size(); ++a)
      z[a] = (1 - lam) * states[k][a] + lam * states[k + 1][a];
    return z;
  }
};

inline void write_trajectory_csv(const Trajectory& tr, std::ostream& os) {
  require(!tr.states.empty() && !tr.u_controls.empty(), ErrorKind::config, "trajectory: empty");
  const size_t n = tr.states[0].size();
  const size_t pu = tr.u_controls.empty() ? 0 : tr.u_controls[0].size();
  const size_t pv = tr.v_controls.empty() ? 0 : tr.v_controls[0].size();
  os << "t";
  for (size_t a = 0; a < n; ++a) os << ",x" << (a + 1);
  for (size_t a = 0; a < pu; ++a) os << ",u" << (a + 1);
  for (size_t a = 0; a < pv; ++a) os << ",v" << (a + 1);
  os << ",punishing\n";
  for (size_t k = 0; k < tr.times.size(); ++k) {
    size_t j = std::min(k, tr.u_controls.size() - 1);  // last row repeats the final interval
    os << fmt(tr.times[k]);
    for (size_t a = 0; a < n; ++a) os << ',' << fmt(tr.states[k][a]);
    for (size_t a = 0; a < pu; ++a) os << ',' << fmt(tr.u_controls[j][a]);
    for (size_t a = 0; a < pv; ++a) os << ',' << fmt(tr.v_controls[j][a]);
    os << ',' << (tr.punishing[j] ? 1 : 0) << "\n";
  }
}

// ---- step-by-step motion ------------------------------------------------------------------

// Euler motion over the merged partition: player I's control is re-evaluated
// exactly at its own instants and held constant in between, likewise player
// II. Returned controls are validated against the game's sample sets.
inline Trajectory simulate(const GameSpec& g, double t_star, std::span<const double> x_star,
                           const FeedbackStrategy& U, double eps1, const FeedbackStrategy& V,
                           double eps2, uint64_t seed = 1) {
  g.validate();
  require(eps1 > 0.0 && eps2 > 0.0, ErrorKind::config, "simulate: eps must be positive");
  require(static_cast<int>(x_star.size()) == g.state_dim, ErrorKind::config,
          "simulate: start state dimension mismatch");
  require(static_cast<bool>(U.instantiate) && static_cast<bool>(V.instantiate),
          ErrorKind::config, "simulate: strategies must provide instantiate()");
  require(t_star < g.theta0, ErrorKind::config, "simulate: start time at or past the horizon");

  Partition p1 = Partition::uniform(t_star, g.theta0, eps1,
                                    U.jitter ? derive_seed(seed, 1) : 0);
  Partition p2 = Partition::uniform(t_star, g.theta0, eps2,
                                    V.jitter ? derive_seed(seed, 2) : 0);

  // merged instants
  Vec merged;
  merged.reserve(p1.instants.size() + p2.instants.size());
  std::merge(p1.instants.begin(), p1.instants.end(), p2.instants.begin(), p2.instants.end(),
             std::back_inserter(merged));
  merged.erase(std::unique(merged.begin(), merged.end(),
                           [](double a, double b) { return std::abs(a - b) < 1e-12; }),
               merged.end());

  StrategyFn u_fn = U.instantiate(eps1, derive_seed(seed, 3));
  StrategyFn v_fn = V.instantiate(eps2, derive_seed(seed, 4));

  Trajectory tr;
  const size_t m = merged.size() - 1;
  tr.times = merged;
  tr.states.reserve(m + 1);
  tr.u_controls.reserve(m);
  tr.v_controls.reserve(m);
  tr.punishing.reserve(m);

  Vec x(x_star.begin(), x_star.end());
  tr.states.push_back(x);
  size_t i1 = 0, i2 = 0;
  ControlDecision du, dv;
  Vec f(g.state_dim);
  for (size_t k = 0; k < m; ++k) {
    const double t = merged[k];
    if (i1 < p1.instants.size() && std::abs(p1.instants[i1] - t) < 1e-12) {
      du = u_fn(t, x);
      require(detail::find_sample(g.p_samples, du.control) >= 0, ErrorKind::strategy,
              "strategy '" + U.name + "' returned a control outside the sample set at t=" +
                  fmt(t));
      ++i1;
    }
    if (i2 < p2.instants.size() && std::abs(p2.instants[i2] - t) < 1e-12) {
      dv = v_fn(t, x);
      require(detail::find_sample(g.q_samples, dv.control) >= 0, ErrorKind::strategy,
              "strategy '" + V.name + "' returned a control outside the sample set at t=" +
                  fmt(t));
      ++i2;
    }
    eval_dynamics(g, t, x, du.control, dv.control, f);
    const double h = merged[k + 1] - t;
    for (int a = 0; a < g.state_dim; ++a) x[a] += h * f[a];
    tr.u_controls.push_back(du.control);
    tr.v_controls.push_back(dv.control);
    tr.punishing.push_back((du.punishing || dv.punishing) ? 1 : 0);
    tr.states.push_back(x);
  }
  tr.payoffs = {eval_payoff(g.sigma1, x), eval_payoff(g.sigma2, x)};
  return tr;
}

// ---- punishment profile -------------------------------------------------------------------

struct ProfileOptions {
  double eta = -1.0;        // detection threshold; negative = 2*L_f*eps + cell diameter
  double tol_set = 0.1;     // target-to-cloud admission budget (with the map quantum)
  double agreed_tol = -1.0; // greedy admissibility; negative = quantum + tol_set
  int hull_density = 16;
  uint64_t seed = 1;
};

struct PunishmentProfile {
  FeedbackStrategy u_strategy;
  FeedbackStrategy v_strategy;
  Trajectory agreed;    // states on the map slice grid, controls per slice step
  PayoffPoint target;
  double t_star = 0.0;
  Vec x_star;
};

// Equilibrium profile from a payoff map: an agreed trajectory that greedily
// keeps the target inside the transported clouds, decomposed into sampled
// control pairs; each side plays it until the state strays more than eta from
// the agreed state, then punishes by one-step worst-case minimization of the
// opponent's guaranteed level.
inline PunishmentProfile make_punishment_profile(const NashMap& map, const GameSpec& g,
                                                 std::shared_ptr<const ValueField> omega1,
                                                 std::shared_ptr<const ValueField> omega2,
                                                 double t_star, std::span<const double> x_star,
                                                 const PayoffPoint& target,
                                                 const ProfileOptions& opt = {}) {
  g.validate();
  require(omega1 && omega2, ErrorKind::config,
          "make_punishment_profile: guaranteed-level fields required");
  const Grid& grid = map.grid;
  require(static_cast<int>(x_star.size()) == grid.dim(), ErrorKind::config,
          "make_punishment_profile: start state dimension mismatch");
  const int s0 = map.slice_at(t_star);  // domain error when t_star is off-slice
  const int S = map.slice_count();
  require(s0 < S, ErrorKind::domain, "make_punishment_profile: start at the horizon");

  // precondition: target reachable in the start cloud
  {
    int64_t node = grid.nearest_node(x_star);
    auto run = map.cloud(s0, node);
    double d = run.empty() ? detail::kEmptyCloudDist : dist_l1(target, run);
    require(d <= map.quantum + opt.tol_set, ErrorKind::domain,
            "make_punishment_profile: target (" + fmt(target.j1) + "," + fmt(target.j2) +
                ") is " + fmt(d) + " from the start cloud, beyond quantum+tol_set");
  }

  const double step = map.slice_dt();
  const double agreed_tol = (opt.agreed_tol >= 0) ? opt.agreed_tol : map.quantum + opt.tol_set;
  const size_t raw_count = g.p_samples.size() * g.q_samples.size();
  std::vector<Vec> hull_rows =
      (opt.hull_density > 0)
          ? hull_weight_rows(static_cast<int>(raw_count), opt.hull_density, opt.seed)
          : std::vector<Vec>{};

  // agreed trajectory: per builder step pick the hull velocity whose foot keeps
  // the target closest to the successor cloud, then store the nearest raw pair
  PunishmentProfile prof;
  prof.target = target;
  prof.t_star = t_star;
  prof.x_star.assign(x_star.begin(), x_star.end());
  Trajectory& ag = prof.agreed;
  Vec z(x_star.begin(), x_star.end());
  ag.times.push_back(t_star);
  ag.states.push_back(z);
  const int n = grid.dim();
  Vec foot(n), best_w(n);
  for (int s = s0; s < S; ++s) {
    const double t = map.slice_time(s);
    VelocitySet vs = velocity_set(g, t, z, 0, opt.seed);
    const size_t total_w = vs.velocities.size() + hull_rows.size();
    double best = std::numeric_limits<double>::infinity();
    Vec combo(n);
    for (size_t w = 0; w < total_w; ++w) {
      const double* vel;
      if (w < vs.velocities.size()) {
        vel = vs.velocities[w].data();
      } else {
        std::fill(combo.begin(), combo.end(), 0.0);
        const Vec& rows = hull_rows[w - vs.velocities.size()];
        for (size_t i = 0; i < vs.velocities.size(); ++i)
          for (int a = 0; a < n; ++a) combo[a] += rows[i] * vs.velocities[i][a];
        vel = combo.data();
      }
      for (int a = 0; a < n; ++a) foot[a] = z[a] + step * vel[a];
      double d = cloud_distance(map, s + 1, foot, target);
      if (d < best) {
        best = d;
        for (int a = 0; a < n; ++a) best_w[a] = vel[a];
      }
    }
    if (best > agreed_tol)
      fail(ErrorKind::domain, "make_punishment_profile: agreed trajectory stuck at step " +
                                  std::to_string(s - s0) + " (t=" + fmt(t) +
                                  "): best cloud distance " + fmt(best) + " exceeds " +
                                  fmt(agreed_tol));
    // nearest raw control pair in Euclidean norm, lowest pair index on ties
    size_t best_pair = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (size_t r = 0; r < vs.velocities.size(); ++r) {
      double d = dist_l2(vs.velocities[r], best_w);
      if (d < best_d - 1e-15) {
        best_d = d;
        best_pair = r;
      }
    }
    const auto& [ui, vi] = vs.control_pairs[best_pair];
    ag.u_controls.push_back(g.p_samples[ui]);
    ag.v_controls.push_back(g.q_samples[vi]);
    ag.punishing.push_back(0);
    const Vec& uv = vs.velocities[best_pair];
    for (int a = 0; a < n; ++a) z[a] += step * uv[a];
    ag.times.push_back(map.slice_time(s + 1));
    ag.states.push_back(z);
  }
  ag.payoffs = {eval_payoff(g.sigma1, z), eval_payoff(g.sigma2, z)};

  // shared immutable view of the agreed trajectory for both strategy closures
  auto agreed = std::make_shared<const Trajectory>(ag);
  const double vb = velocity_bound(g, grid);
  const double cell = grid.cell_diameter();
  const double theta0 = grid.theta0;
  const double eta_opt = opt.eta;
  const double t_lo = t_star;

  auto agreed_control = [agreed, t_lo, step](int player, double t) -> Vec {
    const auto& tab = (player == 1) ? agreed->u_controls : agreed->v_controls;
    int idx = static_cast<int>(std::floor((t - t_lo) / step + 1e-9));
    idx = std::clamp(idx, 0, static_cast<int>(tab.size()) - 1);
    return tab[idx];
  };

  auto make_side = [&](int player, std::shared_ptr<const ValueField> opp_level,
                       const std::string& name) {
    FeedbackStrategy s;
    s.kind = "punishment";
    s.name = name;
    s.player = player;
    GameSpec game = g;
    s.instantiate = [=](double eps, uint64_t) -> StrategyFn {
      double eta = (eta_opt >= 0) ? eta_opt : 2.0 * vb * eps + cell;
      auto latched = std::make_shared<bool>(false);
      return [=](double t, std::span<const double> x) -> ControlDecision {
        if (!*latched) {
          Vec ref = agreed->state_at(t);
          double dev = 0.0;
          for (size_t a = 0; a < ref.size(); ++a)
            dev = std::max(dev, std::abs(x[a] - ref[a]));
          if (dev > eta) *latched = true;
        }
        if (!*latched) return {agreed_control(player, t), false};
        // one-step worst-case minimization of the opponent's guaranteed level
        const double h = eps;
        const double tn = std::min(t + h, theta0);
        Vec foot(x.size());
        Vec fe(x.size());
        const auto& own = (player == 1) ? game.p_samples : game.q_samples;
        const auto& other = (player == 1) ? game.q_samples : game.p_samples;
        double best = std::numeric_limits<double>::infinity();
        size_t best_i = 0;
        for (size_t i = 0; i < own.size(); ++i) {
          double worst = -std::numeric_limits<double>::infinity();
          for (size_t j = 0; j < other.size(); ++j) {
            const Vec& u = (player == 1) ? own[i] : other[j];
            const Vec& v = (player == 1) ? other[j] : own[i];
            eval_dynamics(game, t, x, u, v, fe);
            for (size_t a = 0; a < x.size(); ++a) foot[a] = x[a] + h * fe[a];
            worst = std::max(worst, query_value(*opp_level, tn, foot, BoundaryPolicy::clamp));
          }
          if (worst < best - 1e-15) {
            best = worst;
            best_i = i;
          }
        }
        return {own[best_i], true};
      };
    };
    return s;
  };
  prof.u_strategy = make_side(1, omega2, "punish_side1");
  prof.v_strategy = make_side(2, omega1, "punish_side2");
  return prof;
}

// ---- deviation catalog --------------------------------------------------------------------

// Documented finite catalog of unilateral deviations for one player:
// constants (low / middle / high sample), bang-bang switches at quarter
// points, one-step greedy climbs of the player's own cooperative and
// guaranteed fields, seeded random piecewise play, mimic-then-defect, and the
// sample farthest from the agreed control. Finite by design: the experiment
// is falsification-style evidence, not a maximum over all strategies.
inline std::vector<FeedbackStrategy> deviation_catalog(
    const GameSpec& g, int player, const PunishmentProfile* profile,
    std::shared_ptr<const ValueField> own_coop, std::shared_ptr<const ValueField> own_lower,
    uint64_t seed = 1) {
  require(player == 1 || player == 2, ErrorKind::config,
          "deviation_catalog: player must be 1 or 2");
  const auto& own = (player == 1) ? g.p_samples : g.q_samples;
  const auto& other = (player == 1) ? g.q_samples : g.p_samples;
  const size_t m = own.size();
  std::vector<FeedbackStrategy> cat;

  // constants: low, middle, high sample
  for (size_t idx : {size_t{0}, m / 2, m - 1}) {
    FeedbackStrategy s = constant_strategy(player, own[idx], "const_sample_" + std::to_string(idx));
    cat.push_back(std::move(s));
  }

  // bang-bang: switch between the extreme samples at quarter horizon points
  const double span = g.theta0 - g.t0;
  for (double frac : {0.25, 0.5, 0.75})
    for (bool low_first : {true, false}) {
      FeedbackStrategy s;
      s.kind = "custom";
      s.name = "bang_" + fmt(frac) + (low_first ? "_lowhigh" : "_highlow");
      s.player = player;
      Vec a = low_first ? own.front() : own.back();
      Vec b = low_first ? own.back() : own.front();
      double t_switch = g.t0 + frac * span;
      s.instantiate = [a, b, t_switch](double, uint64_t) -> StrategyFn {
        return [a, b, t_switch](double t, std::span<const double>) {
          return ControlDecision{t < t_switch ? a : b, false};
        };
      };
      cat.push_back(std::move(s));
    }

  // one-step greedy on an interpolated field: maximize own field value
  auto greedy = [&](std::shared_ptr<const ValueField> field, const std::string& name) {
    if (!field) return;
    FeedbackStrategy s;
    s.kind = "custom";
    s.name = name;
    s.player = player;
    GameSpec game = g;
    std::vector<Vec> own_s = own, other_s = other;
    double theta0 = g.theta0;
    s.instantiate = [=](double eps, uint64_t) -> StrategyFn {
      return [=](double t, std::span<const double> x) -> ControlDecision {
        const double h = eps;
        const double tn = std::min(t + h, theta0);
        Vec foot(x.size()), fe(x.size());
        double best = -std::numeric_limits<double>::infinity();
        size_t best_i = 0;
        for (size_t i = 0; i < own_s.size(); ++i) {
          double worst = std::numeric_limits<double>::infinity();
          for (size_t j = 0; j < other_s.size(); ++j) {
            const Vec& u = (player == 1) ? own_s[i] : other_s[j];
            const Vec& v = (player == 1) ? other_s[j] : own_s[i];
            eval_dynamics(game, t, x, u, v, fe);
            for (size_t a = 0; a < x.size(); ++a) foot[a] = x[a] + h * fe[a];
            worst = std::min(worst, query_value(*field, tn, foot, BoundaryPolicy::clamp));
          }
          if (worst > best + 1e-15) {
            best = worst;
            best_i = i;
          }
        }
        return {own_s[best_i], false};
      };
    };
    cat.push_back(std::move(s));
  };
  greedy(own_coop, "greedy_cooperative");
  greedy(own_lower, "greedy_security");

  // seeded random piecewise-constant play
  {
    FeedbackStrategy s;
    s.kind = "custom";
    s.name = "random_piecewise";
    s.player = player;
    std::vector<Vec> own_s = own;
    s.instantiate = [own_s, seed](double, uint64_t run_seed) -> StrategyFn {
      auto state = std::make_shared<uint64_t>(derive_seed(seed ^ run_seed, 0x52414e44ULL));
      return [own_s, state](double, std::span<const double>) {
        size_t i = static_cast<size_t>(unit_double(splitmix64(*state)) * own_s.size());
        i = std::min(i, own_s.size() - 1);
        return ControlDecision{own_s[i], false};
      };
    };
    cat.push_back(std::move(s));
  }

  if (profile) {
    auto agreed = std::make_shared<const Trajectory>(profile->agreed);
    const double t_lo = profile->t_star;
    const double step = agreed->times.size() > 1 ? agreed->times[1] - agreed->times[0] : 1.0;
    auto agreed_control = [agreed, t_lo, step, player](double t) -> Vec {
      const auto& tab = (player == 1) ? agreed->u_controls : agreed->v_controls;
      int idx = static_cast<int>(std::floor((t - t_lo) / step + 1e-9));
      idx = std::clamp(idx, 0, static_cast<int>(tab.size()) - 1);
      return tab[idx];
    };
    // mimic the agreed control, then defect to the extreme sample
    {
      FeedbackStrategy s;
      s.kind = "custom";
      s.name = "mimic_then_defect";
      s.player = player;
      Vec defect = own.back();
      double t_switch = g.t0 + 0.5 * span;
      s.instantiate = [=](double, uint64_t) -> StrategyFn {
        return [=](double t, std::span<const double>) {
          return ControlDecision{t < t_switch ? agreed_control(t) : defect, false};
        };
      };
      cat.push_back(std::move(s));
    }
    // sample farthest from the agreed control
    {
      FeedbackStrategy s;
      s.kind = "custom";
      s.name = "opposite_agreed";
      s.player = player;
      std::vector<Vec> own_s = own;
      s.instantiate = [=](double, uint64_t) -> StrategyFn {
        return [=](double t, std::span<const double>) {
          Vec ac = agreed_control(t);
          size_t best_i = 0;
          double best = -1.0;
          for (size_t i = 0; i < own_s.size(); ++i) {
            double d = dist_l2(own_s[i], ac);
            if (d > best + 1e-15) {
              best = d;
              best_i = i;
            }
          }
          return ControlDecision{own_s[best_i], false};
        };
      };
      cat.push_back(std::move(s));
    }
  }
  return cat;
}

// ---- deviation experiment -------------------------------------------------------------------

struct ExperimentOptions {
  Vec eps_schedule = {0.1, 0.05, 0.025};
  int trials = 1;              // seeded reruns per (deviation, eps)
  double tol_nash_base = 0.1;  // PASS budget: base + slope * eps
  double tol_nash_slope = 5.0;
  uint64_t seed = 1;
};

struct DeviationRun {
  std::string name;
  double eps = 0.0;
  int trial = 0;
  double payoff = 0.0;  // deviant's payoff in this run
  double gain = 0.0;    // payoff minus the same-eps profile-vs-profile baseline
  bool punished = false;
};

struct ExperimentReport {
  bool pass = false;
  double max_gain = -std::numeric_limits<double>::infinity();
  std::string worst_name;
  double worst_eps = 0.0;
  double baseline_target_gap = 0.0;  // |baseline payoff - profile target|, worst eps
  std::vector<DeviationRun> runs;
  std::string notes;
};

// Replays the profile with the deviant slot replaced by every catalog entry
// over the eps schedule; gains are measured against the same-eps
// profile-vs-profile baseline, so a deviant playing the profile strategy
// scores exactly zero.
inline ExperimentReport deviation_experiment(const GameSpec& g, const PunishmentProfile& profile,
                                             int deviant,
                                             const std::vector<FeedbackStrategy>& catalog,
                                             const ExperimentOptions& opt = {}) {
  require(deviant == 1 || deviant == 2, ErrorKind::config,
          "deviation_experiment: deviant must be 1 or 2");
  require(!opt.eps_schedule.empty(), ErrorKind::config,
          "deviation_experiment: empty eps schedule");
  ExperimentReport rep;
  for (double eps : opt.eps_schedule) {
    Trajectory base = simulate(g, profile.t_star, profile.x_star, profile.u_strategy, eps,
                               profile.v_strategy, eps, opt.seed);
    const double base_payoff = (deviant == 1) ? base.payoffs.j1 : base.payoffs.j2;
    const double target = (deviant == 1) ? profile.target.j1 : profile.target.j2;
    rep.baseline_target_gap = std::max(rep.baseline_target_gap, std::abs(base_payoff - target));
    for (const FeedbackStrategy& dev : catalog) {
      for (int trial = 0; trial < opt.trials; ++trial) {
        uint64_t run_seed = derive_seed(opt.seed, (static_cast<uint64_t>(trial) << 8) + 7);
        Trajectory tr = (deviant == 1)
                            ? simulate(g, profile.t_star, profile.x_star, dev, eps,
                                       profile.v_strategy, eps, run_seed)
                            : simulate(g, profile.t_star, profile.x_star, profile.u_strategy,
                                       eps, dev, eps, run_seed);
        DeviationRun run;
        run.name = dev.name;
        run.eps = eps;
        run.trial = trial;
        run.payoff = (deviant == 1) ? tr.payoffs.j1 : tr.payoffs.j2;
        run.gain = run.payoff - base_payoff;
        for (uint8_t p : tr.punishing)
          if (p) run.punished = true;
        if (run.gain > rep.max_gain) {
          rep.max_gain = run.gain;
          rep.worst_name = run.name;
          rep.worst_eps = eps;
        }
        rep.runs.push_back(std::move(run));
      }
    }
  }
  rep.pass = true;
  for (const DeviationRun& r : rep.runs)
    if (r.gain > opt.tol_nash_base + opt.tol_nash_slope * r.eps) rep.pass = false;
  rep.notes = "finite catalog of " + std::to_string(catalog.size()) +
              " deviations; falsification-style evidence, not a maximum over all strategies";
  return rep;
}

inline void write_experiment_csv(const ExperimentReport& rep, std::ostream& os) {
  os << "deviation,eps,trial,payoff,gain,punished\n";
  for (const DeviationRun& r : rep.runs)
    os << r.name << ',' << fmt(r.eps) << ',' << r.trial << ',' << fmt(r.payoff) << ','
       << fmt(r.gain) << ',' << (r.punished ? 1 : 0) << "\n";
}

}  // namespace dgnash
