// Command-line front end: solve value fields, build and verify payoff maps,
// check candidate payoff pairs, run punishment-profile simulations and
// deviation experiments, and dump the example-game oracle.
// Exit codes: 0 = success / all checks passed, 1 = usage, config, or IO
// error, 2 = a verification ran and failed.

#include <fstream>
#include <iostream>

#include "CLI11.hpp"
#include "dgnash/config.hpp"
#include "dgnash/example_oracle.hpp"
#include "dgnash/nash_map.hpp"
#include "dgnash/simulator.hpp"
#include "dgnash/smooth_verifier.hpp"
#include "dgnash/value_field.hpp"

namespace {

using namespace dgnash;

struct CliState {
  std::string config_path;
  // command-line overrides; NaN / -1 = keep the config value
  double tol_val = std::numeric_limits<double>::quiet_NaN();
  double tol_set = std::numeric_limits<double>::quiet_NaN();
  double tol_dd = std::numeric_limits<double>::quiet_NaN();
  double tol_visc = std::numeric_limits<double>::quiet_NaN();
  double tol_inv = std::numeric_limits<double>::quiet_NaN();
  double quantum = std::numeric_limits<double>::quiet_NaN();
  int hull_density = -1;
  int stride = -1;
  int grid_k = -1;
  int grid_res = -1;
  int64_t seed = -1;

  RunConfig load() const {
    require(!config_path.empty(), ErrorKind::config, "--config is required");
    RunConfig rc = parse_run_config_file(config_path);
    auto keep = [](double v) { return !std::isnan(v); };
    if (keep(tol_val)) rc.tol.tol_val = tol_val;
    if (keep(tol_set)) rc.tol.tol_set = tol_set;
    if (keep(tol_dd)) rc.tol.tol_dd = tol_dd;
    if (keep(tol_visc)) rc.tol.tol_visc = tol_visc;
    if (keep(tol_inv)) rc.tol.tol_inv = tol_inv;
    if (keep(quantum)) rc.tol.quantum = quantum;
    if (hull_density >= 0) rc.tol.hull_density = hull_density;
    if (stride >= 0) rc.stride = stride;
    if (grid_k > 0) rc.grid.time_steps = grid_k;
    if (grid_res > 1) {
      for (int& r : rc.grid.res) r = grid_res;
      rc.grid.validate();
    }
    if (seed >= 0) rc.seed = static_cast<uint64_t>(seed);
    return rc;
  }
};

std::ofstream open_out(const std::string& path) {
  std::ofstream f(path);
  require(f.good(), ErrorKind::io, "cannot open output file '" + path + "'");
  return f;
}

SolveOptions solve_options(const RunConfig& rc, const std::string& basis,
                           const std::string& outside) {
  SolveOptions so;
  so.boundary = rc.boundary;
  if (basis == "simplex") so.basis = InterpBasis::simplex;
  else if (basis == "multilinear") so.basis = InterpBasis::multilinear;
  else fail(ErrorKind::config, "--basis must be simplex or multilinear");
  if (outside == "extend") so.feet_outside = OutsideRule::extend;
  else if (outside == "clamp") so.feet_outside = OutsideRule::clamp;
  else fail(ErrorKind::config, "--outside must be extend or clamp");
  return so;
}

ValueField solve_one(const RunConfig& rc, const std::string& which, const SolveOptions& so) {
  if (which == "lower1") return solve_lower_value(rc.game, rc.grid, 1, so);
  if (which == "lower2") return solve_lower_value(rc.game, rc.grid, 2, so);
  if (which == "coop1") return solve_cooperative_max(rc.game, rc.grid, 1, so);
  if (which == "coop2") return solve_cooperative_max(rc.game, rc.grid, 2, so);
  fail(ErrorKind::config, "--which must be lower1, lower2, coop1, or coop2");
}

int cmd_solve(const CliState& cli, const std::string& which, const std::string& out,
              const std::string& basis, const std::string& outside) {
  RunConfig rc = cli.load();
  ValueField vf = solve_one(rc, which, solve_options(rc, basis, outside));
  auto s0 = vf.slice(0);
  double lo = s0[0], hi = s0[0];
  for (double v : s0) { lo = std::min(lo, v); hi = std::max(hi, v); }
  std::cout << "field " << vf.label << ": slices=" << rc.grid.time_steps + 1
            << " nodes=" << rc.grid.node_count() << " initial range [" << fmt(lo) << ", "
            << fmt(hi) << "]\n";
  if (!vf.warning.empty()) std::cout << "warning: " << vf.warning << "\n";
  if (!out.empty()) {
    auto f = open_out(out);
    write_value_csv(vf, f);
    std::cout << "wrote " << out << "\n";
  }
  return 0;
}

BuildOptions build_options(const RunConfig& rc) {
  BuildOptions bo;
  bo.tol_val = rc.tol.tol_val;
  bo.quantum = rc.tol.quantum;
  bo.tol_inv = rc.tol.tol_inv;
  bo.hull_density = rc.tol.hull_density;
  bo.seed = rc.seed;
  bo.stride = rc.stride;
  bo.boundary = rc.boundary;
  return bo;
}

int cmd_nash(const CliState& cli, const std::string& out) {
  RunConfig rc = cli.load();
  SolveOptions so;
  so.boundary = rc.boundary;
  auto l1 = std::make_shared<ValueField>(solve_lower_value(rc.game, rc.grid, 1, so));
  auto l2 = std::make_shared<ValueField>(solve_lower_value(rc.game, rc.grid, 2, so));
  BuildReport br;
  NashMap map = build_nash_map(rc.game, rc.grid, l1, l2, build_options(rc), &br);
  std::cout << "map: slices=" << map.slice_count() << " stride=" << br.stride
            << " step=" << fmt(br.step) << " tol_val=" << fmt(br.tol_val)
            << " quantum=" << fmt(br.quantum) << "\n"
            << "points=" << br.total_points << " max_cloud=" << br.max_cloud
            << " empty_nodes=" << br.empty_nodes << "\n";
  if (!out.empty()) {
    auto f = open_out(out);
    write_nash_map(map, f);
    std::cout << "wrote " << out << "\n";
  }
  return 0;
}

int cmd_verify(const CliState& cli, const std::string& map_path, bool exact_residuals) {
  RunConfig rc = cli.load();
  SolveOptions so;
  so.boundary = rc.boundary;
  NashMap map;
  std::shared_ptr<ValueField> l1, l2;
  if (!map_path.empty()) {
    std::ifstream f(map_path);
    require(f.good(), ErrorKind::io, "cannot open map file '" + map_path + "'");
    map = read_nash_map(f);
    // The reader rebuilds the grid on the file's own slice spacing, so a map
    // written at stride > 1 comes back with coarser time steps. Require the
    // same box, nodes, and horizon, and slices sitting on configured steps.
    const Grid& mg = map.grid;
    bool same_box = mg.res == rc.grid.res && std::abs(mg.t0 - rc.grid.t0) <= 1e-12 &&
                    std::abs(mg.theta0 - rc.grid.theta0) <= 1e-12;
    for (int a = 0; same_box && a < mg.dim(); ++a)
      same_box = std::abs(mg.lo[a] - rc.grid.lo[a]) <= 1e-12 &&
                 std::abs(mg.hi[a] - rc.grid.hi[a]) <= 1e-12;
    require(same_box, ErrorKind::config,
            "verify: map box, resolution, or horizon does not match the configured grid");
    require(rc.grid.time_steps % mg.time_steps == 0, ErrorKind::config,
            "verify: map slices do not sit on the configured time steps");
    // Guaranteed levels solved on the configured base grid, then sampled onto
    // the map slices, so the floors match the ones an in-process build uses.
    const int q = rc.grid.time_steps / mg.time_steps;
    auto resample = [&](const ValueField& fine) {
      ValueField c;
      c.grid = mg;
      c.label = fine.label;
      c.warning = fine.warning;
      c.values.resize(static_cast<size_t>(mg.node_count()) * (mg.time_steps + 1));
      for (int s = 0; s <= mg.time_steps; ++s) {
        auto src = fine.slice(s * q);
        std::copy(src.begin(), src.end(), c.slice(s).begin());
      }
      return c;
    };
    l1 = std::make_shared<ValueField>(resample(solve_lower_value(rc.game, rc.grid, 1, so)));
    l2 = std::make_shared<ValueField>(resample(solve_lower_value(rc.game, rc.grid, 2, so)));
  } else {
    l1 = std::make_shared<ValueField>(solve_lower_value(rc.game, rc.grid, 1, so));
    l2 = std::make_shared<ValueField>(solve_lower_value(rc.game, rc.grid, 2, so));
    map = build_nash_map(rc.game, rc.grid, l1, l2, build_options(rc));
  }
  map.lower1 = l1;
  map.lower2 = l2;
  VerifyOptions vo;
  vo.tol_dd = rc.tol.tol_dd;
  vo.tol_val = rc.tol.tol_val;
  vo.hull_density = rc.tol.hull_density;
  vo.exact_residuals = exact_residuals;
  VerifyReport rep = verify_map(map, rc.game, vo);
  std::cout << "verify: max_residual=" << fmt(rep.max_residual)
            << " residual_points=" << rep.residual_points
            << " lower_violations=" << rep.lower_violations
            << " terminal_violations=" << rep.terminal_violations
            << " empty_nodes=" << rep.empty_nodes << "\n";
  if (!rep.notes.empty()) std::cout << rep.notes << "\n";
  std::cout << (rep.pass ? "PASS" : "FAIL") << "\n";
  return rep.pass ? 0 : 2;
}

int cmd_check_pair(const CliState& cli, double gamma, const std::string& c1_path,
                   const std::string& c2_path, bool smooth, int points,
                   const std::string& rows_out) {
  RunConfig rc = cli.load();
  CandidatePair pair;
  if (!c1_path.empty() || !c2_path.empty()) {
    require(!c1_path.empty() && !c2_path.empty(), ErrorKind::config,
            "check-pair: --c1 and --c2 must be given together");
    std::ifstream f1(c1_path), f2(c2_path);
    require(f1.good(), ErrorKind::io, "cannot open '" + c1_path + "'");
    require(f2.good(), ErrorKind::io, "cannot open '" + c2_path + "'");
    auto v1 = std::make_shared<ValueField>(read_value_csv(f1));
    auto v2 = std::make_shared<ValueField>(read_value_csv(f2));
    pair = candidate_from_fields(v1, v2);
  } else {
    require(rc.game.dynamics_id == "example", ErrorKind::config,
            "check-pair: --gamma works with the example game; give --c1/--c2 otherwise");
    pair = oracle::example_candidate(gamma);
  }
  UpperCheckOptions opt;
  opt.tol_val = rc.tol.tol_set;
  opt.tol_visc = rc.tol.tol_visc;
  opt.tol_dd = rc.tol.tol_dd;
  opt.fd_step = rc.tol.fd_step;
  opt.hull_density = rc.tol.hull_density;
  opt.gamma_radius = rc.tol.gamma_radius;
  opt.seed = rc.seed;
  if (points > 0) { opt.point_count = points; opt.terminal_count = points; }
  opt.keep_rows = !rows_out.empty();
  UpperCheckReport rep = check_upper_solution(rc.game, pair, rc.grid, opt);
  std::cout << "pair '" << pair.label << "': terminal " << (rep.terminal_ok ? "ok" : "FAIL")
            << " (max gap " << fmt(rep.max_terminal_gap) << "), level "
            << (rep.viscosity_ok ? "ok" : "FAIL") << " (max defect "
            << fmt(rep.max_level_defect) << "), transport " << (rep.transport_ok ? "ok" : "FAIL")
            << " (max " << fmt(rep.max_transport) << ")\n"
            << "points=" << rep.points_checked << " subgradients=" << rep.subgradients_checked
            << "\n" << rep.notes << "\n";
  bool pass = rep.pass;
  if (smooth) {
    SmoothCheckOptions sopt;
    sopt.tol_visc = rc.tol.tol_visc;
    sopt.fd_step = rc.tol.fd_step;
    sopt.seed = rc.seed;
    auto pts = sample_box_points(rc.grid, points > 0 ? points : 128, derive_seed(rc.seed, 11));
    SmoothSystemReport srep =
        check_smooth_system(rc.game, pair, pts, rc.grid.t0, rc.grid.theta0, sopt);
    std::cout << "guidance system: smooth_points=" << srep.smooth_points
              << " kink_points=" << srep.kink_points << " failures=" << srep.failures
              << " max_residual=" << fmt(srep.max_residual) << " "
              << (srep.pass ? "ok" : "FAIL") << "\n";
    pass = pass && srep.pass;
  }
  if (!rows_out.empty()) {
    auto f = open_out(rows_out);
    write_point_checks_csv(rep.rows, rc.grid.dim(), f);
    std::cout << "wrote " << rows_out << "\n";
  }
  std::cout << (pass ? "PASS" : "FAIL") << "\n";
  return pass ? 0 : 2;
}

// Default target: the start-node cloud point maximizing j1 + j2, ties to j1.
PayoffPoint default_target(const NashMap& map, double t, std::span<const double> x) {
  int s = map.slice_at(t);
  auto run = map.cloud(s, map.grid.nearest_node(x));
  require(!run.empty(), ErrorKind::domain, "simulate: start cloud is empty; give --target");
  PayoffPoint best = run[0];
  for (const PayoffPoint& p : run)
    if (p.j1 + p.j2 > best.j1 + best.j2 + 1e-15 ||
        (std::abs(p.j1 + p.j2 - (best.j1 + best.j2)) <= 1e-15 && p.j1 > best.j1))
      best = p;
  return best;
}

int cmd_simulate(const CliState& cli, const Vec& start, const Vec& target_vec, double t_start,
                 double eps, double eta, int deviant, int trials, const std::string& out) {
  RunConfig rc = cli.load();
  require(eps > 0, ErrorKind::config, "simulate: --eps must be positive");
  SolveOptions so;
  so.boundary = rc.boundary;
  auto l1 = std::make_shared<ValueField>(solve_lower_value(rc.game, rc.grid, 1, so));
  auto l2 = std::make_shared<ValueField>(solve_lower_value(rc.game, rc.grid, 2, so));
  NashMap map = build_nash_map(rc.game, rc.grid, l1, l2, build_options(rc));

  PayoffPoint target;
  if (target_vec.empty()) {
    target = default_target(map, t_start, start);
    std::cout << "target (default): (" << fmt(target.j1) << ", " << fmt(target.j2) << ")\n";
  } else {
    require(target_vec.size() == 2, ErrorKind::config, "--target needs two payoff components");
    target = {target_vec[0], target_vec[1]};
  }
  ProfileOptions po;
  po.eta = eta;
  po.tol_set = rc.tol.tol_set;
  po.hull_density = rc.tol.hull_density;
  po.seed = rc.seed;
  PunishmentProfile prof =
      make_punishment_profile(map, rc.game, l1, l2, t_start, start, target, po);

  if (deviant == 0) {
    Trajectory tr = simulate(rc.game, t_start, start, prof.u_strategy, eps, prof.v_strategy,
                             eps, rc.seed);
    std::cout << "profile run: payoffs (" << fmt(tr.payoffs.j1) << ", " << fmt(tr.payoffs.j2)
              << ") vs target (" << fmt(target.j1) << ", " << fmt(target.j2) << ")\n";
    if (!out.empty()) {
      auto f = open_out(out);
      write_trajectory_csv(tr, f);
      std::cout << "wrote " << out << "\n";
    }
    return 0;
  }

  auto own_coop = std::make_shared<ValueField>(
      solve_cooperative_max(rc.game, rc.grid, deviant, so));
  auto catalog = deviation_catalog(rc.game, deviant, &prof, own_coop,
                                   deviant == 1 ? l1 : l2, derive_seed(rc.seed, 21));
  ExperimentOptions eo;
  eo.eps_schedule = {eps, eps / 2, eps / 4};
  eo.trials = trials;
  eo.tol_nash_base = rc.tol.tol_nash_base;
  eo.tol_nash_slope = rc.tol.tol_nash_slope;
  eo.seed = rc.seed;
  ExperimentReport rep = deviation_experiment(rc.game, prof, deviant, catalog, eo);
  std::cout << "deviant " << deviant << ": runs=" << rep.runs.size()
            << " max_gain=" << fmt(rep.max_gain) << " (worst '" << rep.worst_name << "' at eps="
            << fmt(rep.worst_eps) << ") baseline_target_gap=" << fmt(rep.baseline_target_gap)
            << "\n" << rep.notes << "\n";
  if (!out.empty()) {
    auto f = open_out(out);
    write_experiment_csv(rep, f);
    std::cout << "wrote " << out << "\n";
  }
  std::cout << (rep.pass ? "PASS" : "FAIL") << "\n";
  return rep.pass ? 0 : 2;
}

int cmd_oracle(const CliState& cli, const std::string& out_map, bool compare,
               double cone_speed) {
  RunConfig rc = cli.load();
  require(rc.game.dynamics_id == "example", ErrorKind::config,
          "oracle: closed forms exist for the example game only");
  if (!out_map.empty()) {
    NashMap ref = oracle::exact_nash_map(
        rc.grid, rc.stride > 0 ? rc.stride : 1, rc.tol.quantum_for(rc.grid), cone_speed);
    auto f = open_out(out_map);
    write_nash_map(ref, f);
    std::cout << "wrote " << out_map << "\n";
  }
  if (compare) {
    SolveOptions so;
    so.boundary = rc.boundary;
    const Grid& grid = rc.grid;
    for (const std::string& label : {"lower1", "lower2", "coop1", "coop2"}) {
      ValueField solved = solve_one(rc, label, so);
      ValueField exact = oracle::exact_field(grid, label);
      // The closed forms assume unconstrained room; near the walls the box
      // clamps the motions, so report the gap inside the escape cone as well.
      double gap = 0.0, cone_gap = 0.0;
      Vec x(grid.dim());
      for (int k = 0; k <= grid.time_steps; ++k) {
        const double room = cone_speed * (grid.theta0 - grid.time_at(k));
        auto a = solved.slice(k);
        auto b = exact.slice(k);
        for (int64_t n = 0; n < grid.node_count(); ++n) {
          double d = std::abs(a[n] - b[n]);
          gap = std::max(gap, d);
          grid.node_coords(n, x);
          bool inside = true;
          for (int ax = 0; ax < grid.dim(); ++ax)
            inside = inside && x[ax] - room >= grid.lo[ax] - 1e-9 &&
                     x[ax] + room <= grid.hi[ax] + 1e-9;
          if (inside) cone_gap = std::max(cone_gap, d);
        }
      }
      std::cout << label << ": sup gap vs closed form = " << fmt(gap)
                << " (escape cone: " << fmt(cone_gap) << ")\n";
    }
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Nash-equilibrium payoff sets for two-person differential games"};
  app.require_subcommand(1);
  CliState cli;

  auto add_common = [&cli](CLI::App* sub) {
    sub->add_option("--config", cli.config_path, "run configuration file")->required();
    sub->add_option("--seed", cli.seed, "override run.seed");
    sub->add_option("--grid-k", cli.grid_k, "override grid.k (time steps)");
    sub->add_option("--grid-res", cli.grid_res, "override grid.res on every axis");
    sub->add_option("--tol-val", cli.tol_val, "guaranteed-level slack");
    sub->add_option("--tol-set", cli.tol_set, "payoff-set comparison slack");
    sub->add_option("--tol-dd", cli.tol_dd, "transport residual bound");
    sub->add_option("--tol-visc", cli.tol_visc, "candidate inequality slack");
    sub->add_option("--tol-inv", cli.tol_inv, "reach-test fraction");
    sub->add_option("--quantum", cli.quantum, "payoff lattice spacing");
    sub->add_option("--hull-density", cli.hull_density, "extra convex velocity samples");
    sub->add_option("--stride", cli.stride, "builder steps per base step");
  };

  auto* solve = app.add_subcommand("solve", "solve a guaranteed-level or cooperative field");
  std::string which = "lower1", out, basis = "simplex", outside = "extend";
  add_common(solve);
  solve->add_option("--which", which, "lower1 | lower2 | coop1 | coop2");
  solve->add_option("--out", out, "write the field as CSV");
  solve->add_option("--basis", basis, "interpolation: simplex | multilinear");
  solve->add_option("--outside", outside, "feet outside the box: extend | clamp");

  auto* nash = app.add_subcommand("nash", "build the equilibrium payoff map");
  std::string nash_out;
  add_common(nash);
  nash->add_option("--out", nash_out, "write the map file");

  auto* verify = app.add_subcommand("verify", "check a payoff map's equilibrium properties");
  std::string map_path;
  bool exact_residuals = false;
  add_common(verify);
  verify->add_option("--map", map_path, "map file to verify (default: build in-process)");
  verify->add_flag("--exact-residuals", exact_residuals, "disable the running-max early exit");

  auto* check = app.add_subcommand("check-pair", "check a candidate payoff pair");
  double gamma = 0.0;
  std::string c1_path, c2_path, rows_out;
  bool smooth = false;
  int points = 0;
  add_common(check);
  check->add_option("--gamma", gamma, "example candidate family parameter in [0,2]");
  check->add_option("--c1", c1_path, "candidate component 1 as a field CSV");
  check->add_option("--c2", c2_path, "candidate component 2 as a field CSV");
  check->add_flag("--smooth", smooth, "also check the smooth guidance system");
  check->add_option("--points", points, "sample-point count");
  check->add_option("--rows", rows_out, "write per-point check rows as CSV");

  auto* sim = app.add_subcommand("simulate", "run the punishment profile or a deviation study");
  Vec start, target_vec;
  double t_start = 0.0, eps = 0.05, eta = -1.0;
  int deviant = 0, trials = 1;
  add_common(sim);
  sim->add_option("--start", start, "start state components")->required()->expected(-2);
  sim->add_option("--target", target_vec, "agreed payoff pair (default: best in start cloud)")
      ->expected(2);
  sim->add_option("--t-start", t_start, "start time (must lie on a map slice)");
  sim->add_option("--eps", eps, "partition fineness");
  sim->add_option("--eta", eta, "deviation detector threshold (negative = auto)");
  sim->add_option("--deviant", deviant, "0 = profile run, 1|2 = deviation experiment");
  sim->add_option("--trials", trials, "seeded trials per deviation");
  sim->add_option("--out", out, "trajectory or experiment CSV");

  auto* orc = app.add_subcommand("oracle", "closed-form example-game map and solver gaps");
  std::string oracle_out;
  bool compare = false;
  double cone_speed = 1.0;
  add_common(orc);
  orc->add_option("--out", oracle_out, "write the closed-form map file");
  orc->add_flag("--compare", compare, "solve fields and print sup gaps");
  orc->add_option("--cone-speed", cone_speed, "box-consistency cone speed (0 = off)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (solve->parsed()) return cmd_solve(cli, which, out, basis, outside);
    if (nash->parsed()) return cmd_nash(cli, nash_out);
    if (verify->parsed()) return cmd_verify(cli, map_path, exact_residuals);
    if (check->parsed())
      return cmd_check_pair(cli, gamma, c1_path, c2_path, smooth, points, rows_out);
    if (sim->parsed())
      return cmd_simulate(cli, start, target_vec, t_start, eps, eta, deviant, trials, out);
    if (orc->parsed()) return cmd_oracle(cli, oracle_out, compare, cone_speed);
  } catch (const dgnash::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
