#pragma once

// Line-oriented config files: [section] headers and `key = value` entries,
// with '#' or ';' comments. Errors carry file name and line number.

#include <cstdint>
#include <fstream>
#include <iostream>
#include <map>
#include <set>

#include "dgnash/common.hpp"
#include "dgnash/game.hpp"
#include "dgnash/grid.hpp"

namespace dgnash {

struct ConfigFile {
  std::string name;  // used in error messages
  struct Entry {
    std::string value;
    int line = 0;
    mutable bool used = false;
  };
  std::map<std::string, Entry> entries;  // "section.key" -> entry

  static ConfigFile parse(std::istream& is, const std::string& name) {
    ConfigFile cf;
    cf.name = name;
    std::string line;
    std::string section;
    int line_no = 0;
    while (std::getline(is, line)) {
      ++line_no;
      std::string_view sv = trim(line);
      if (sv.empty() || sv[0] == '#' || sv[0] == ';') continue;
      if (sv.front() == '[') {
        require(sv.back() == ']' && sv.size() > 2, ErrorKind::config,
                name + ":" + std::to_string(line_no) + ": malformed section header");
        section = std::string(trim(sv.substr(1, sv.size() - 2)));
        continue;
      }
      size_t eq = sv.find('=');
      require(eq != std::string_view::npos, ErrorKind::config,
              name + ":" + std::to_string(line_no) + ": expected 'key = value'");
      std::string key = std::string(trim(sv.substr(0, eq)));
      require(!key.empty(), ErrorKind::config,
              name + ":" + std::to_string(line_no) + ": empty key");
      require(!section.empty(), ErrorKind::config,
              name + ":" + std::to_string(line_no) + ": key '" + key + "' outside any [section]");
      std::string full = section + "." + key;
      require(!cf.entries.count(full), ErrorKind::config,
              name + ":" + std::to_string(line_no) + ": duplicate key '" + full + "'");
      cf.entries[full] = {std::string(trim(sv.substr(eq + 1))), line_no, false};
    }
    return cf;
  }

  static ConfigFile parse_file(const std::string& path) {
    std::ifstream f(path);
    require(f.good(), ErrorKind::io, "cannot open config file '" + path + "'");
    return parse(f, path);
  }

  bool has(const std::string& key) const { return entries.count(key) > 0; }

  const std::string& require_raw(const std::string& key) const {
    auto it = entries.find(key);
    if (it == entries.end())
      fail(ErrorKind::config, name + ": missing required key '" + key + "'");
    it->second.used = true;
    return it->second.value;
  }

  std::string get_str(const std::string& key, const std::string& def = "") const {
    auto it = entries.find(key);
    if (it == entries.end()) return def;
    it->second.used = true;
    return it->second.value;
  }

  double get_double(const std::string& key, double def) const {
    auto it = entries.find(key);
    if (it == entries.end()) return def;
    it->second.used = true;
    double v;
    require(parse_double(it->second.value, v), ErrorKind::config,
            name + ":" + std::to_string(it->second.line) + ": key '" + key +
                "' needs a number, got '" + it->second.value + "'");
    return v;
  }

  double require_double(const std::string& key) const {
    require_raw(key);
    return get_double(key, 0.0);
  }

  int64_t get_int(const std::string& key, int64_t def) const {
    double v = get_double(key, static_cast<double>(def));
    int64_t i = static_cast<int64_t>(std::llround(v));
    require(std::abs(v - i) < 1e-9, ErrorKind::config,
            name + ": key '" + key + "' needs an integer");
    return i;
  }

  Vec get_vec(const std::string& key, const Vec& def = {}) const {
    auto it = entries.find(key);
    if (it == entries.end()) return def;
    it->second.used = true;
    return parse_vec(it->second.value, ErrorKind::config,
                     name + ":" + std::to_string(it->second.line) + ": key '" + key + "'");
  }

  Vec require_vec(const std::string& key) const {
    require_raw(key);
    return get_vec(key);
  }

  // Points separated by ';', components by whitespace; scalar lists may skip ';'.
  std::vector<Vec> get_points(const std::string& key, int dim) const {
    auto it = entries.find(key);
    if (it == entries.end()) return {};
    it->second.used = true;
    const std::string ctx = name + ":" + std::to_string(it->second.line) + ": key '" + key + "'";
    std::vector<Vec> pts;
    if (it->second.value.find(';') == std::string::npos && dim == 1) {
      for (double v : parse_vec(it->second.value, ErrorKind::config, ctx)) pts.push_back({v});
      return pts;
    }
    for (std::string_view part : split(it->second.value, ';')) {
      if (trim(part).empty()) continue;
      Vec p = parse_vec(part, ErrorKind::config, ctx);
      require(static_cast<int>(p.size()) == dim, ErrorKind::config,
              ctx + ": point '" + std::string(part) + "' has wrong dimension");
      pts.push_back(std::move(p));
    }
    return pts;
  }

  // Matrix rows separated by ';'.
  Vec get_matrix(const std::string& key, int rows, int cols) const {
    auto it = entries.find(key);
    if (it == entries.end()) return {};
    it->second.used = true;
    const std::string ctx = name + ":" + std::to_string(it->second.line) + ": key '" + key + "'";
    Vec m;
    int r = 0;
    for (std::string_view part : split(it->second.value, ';')) {
      if (trim(part).empty()) continue;
      Vec row = parse_vec(part, ErrorKind::config, ctx);
      require(static_cast<int>(row.size()) == cols, ErrorKind::config,
              ctx + ": row " + std::to_string(r + 1) + " needs " + std::to_string(cols) +
                  " entries");
      m.insert(m.end(), row.begin(), row.end());
      ++r;
    }
    require(r == rows, ErrorKind::config,
            ctx + ": needs " + std::to_string(rows) + " rows separated by ';'");
    return m;
  }

  void check_all_used() const {
    for (const auto& [key, e] : entries)
      require(e.used, ErrorKind::config,
              name + ":" + std::to_string(e.line) + ": unknown key '" + key + "'");
  }
};

// Tolerance and sampling knobs; negative means "derive the default".
struct Tolerances {
  double tol_val = -1.0;      // value-field slack: 3 * (dt + max dx)
  double tol_set = 0.1;       // payoff-set comparison slack
  double tol_inv = 0.5;       // reach test: tau = tol_inv * builder step
  double tol_dd = 1.0;        // transport residual bound (payoff per unit time)
  double tol_visc = -1.0;     // candidate-pair inequality slack: 10 * fd_step
  double quantum = -1.0;      // payoff lattice: tol_val / 2
  double gamma_radius = -1.0; // correction-ball radius: half cell diagonal / min delta
  double eta = -1.0;          // deviation detector: 2 * L_f * eps + cell diameter
  double tol_nash_base = 0.1; // gain bound: base + slope * eps
  double tol_nash_slope = 5.0;
  double fd_step = 1e-3;
  int hull_density = 16;
  Vec delta_mults = {1.0, 2.0, 4.0};  // delta schedule in units of the map step

  double tol_val_for(const Grid& g) const {
    return tol_val >= 0 ? tol_val : 3.0 * (g.dt() + g.max_dx());
  }
  double quantum_for(const Grid& g) const {
    return quantum > 0 ? quantum : 0.5 * tol_val_for(g);
  }
  double tol_visc_resolved() const { return tol_visc >= 0 ? tol_visc : 10.0 * fd_step; }
};

struct RunConfig {
  GameSpec game;
  Grid grid;
  Tolerances tol;
  uint64_t seed = 1;
  BoundaryPolicy boundary = BoundaryPolicy::clamp;
  int stride = 0;  // 0 = auto
};

inline RunConfig parse_run_config(const ConfigFile& cf) {
  RunConfig rc;

  std::string preset = cf.get_str("game.preset");
  if (!preset.empty()) rc.game = make_catalog_game(preset);
  GameSpec& g = rc.game;
  if (cf.has("game.dynamics")) g.dynamics_id = cf.get_str("game.dynamics");
  g.t0 = cf.get_double("game.t0", g.t0);
  g.theta0 = cf.get_double("game.theta0", g.theta0);
  g.state_dim = static_cast<int>(cf.get_int("game.state_dim", g.state_dim));
  if (cf.has("game.sigma1")) {
    g.sigma1 = PayoffSpec{};
    g.sigma1.form = cf.get_str("game.sigma1");
  }
  if (cf.has("game.sigma1_coef")) g.sigma1.coef = cf.get_vec("game.sigma1_coef");
  g.sigma1.offset = cf.get_double("game.sigma1_offset", g.sigma1.offset);
  if (cf.has("game.sigma2")) {
    g.sigma2 = PayoffSpec{};
    g.sigma2.form = cf.get_str("game.sigma2");
  }
  if (cf.has("game.sigma2_coef")) g.sigma2.coef = cf.get_vec("game.sigma2_coef");
  g.sigma2.offset = cf.get_double("game.sigma2_offset", g.sigma2.offset);

  int p_dim = static_cast<int>(cf.get_int("controls.p_dim", std::max(1, g.p_dim())));
  int q_dim = static_cast<int>(cf.get_int("controls.q_dim", std::max(1, g.q_dim())));
  if (cf.has("controls.p_samples")) g.p_samples = cf.get_points("controls.p_samples", p_dim);
  if (cf.has("controls.q_samples")) g.q_samples = cf.get_points("controls.q_samples", q_dim);
  if (cf.has("game.A")) g.A = cf.get_matrix("game.A", g.state_dim, g.state_dim);
  if (cf.has("game.A_t")) g.A_t = cf.get_matrix("game.A_t", g.state_dim, g.state_dim);
  if (cf.has("game.B")) g.B = cf.get_matrix("game.B", g.state_dim, std::max(1, p_dim));
  if (cf.has("game.C")) g.C = cf.get_matrix("game.C", g.state_dim, std::max(1, q_dim));
  if (preset.empty()) {
    // explicit games must state their control samples
    cf.require_raw("game.dynamics");
    require(!g.p_samples.empty(), ErrorKind::config,
            cf.name + ": missing required key 'controls.p_samples'");
    require(!g.q_samples.empty(), ErrorKind::config,
            cf.name + ": missing required key 'controls.q_samples'");
  }
  g.validate();

  Grid& gr = rc.grid;
  gr.t0 = g.t0;
  gr.theta0 = g.theta0;
  gr.time_steps = static_cast<int>(cf.get_int("grid.k", 0));
  require(gr.time_steps >= 1, ErrorKind::config,
          cf.name + ": missing or invalid required key 'grid.k'");
  gr.lo = cf.require_vec("grid.lo");
  gr.hi = cf.require_vec("grid.hi");
  Vec res = cf.require_vec("grid.res");
  gr.res.clear();
  for (double r : res) gr.res.push_back(static_cast<int>(std::llround(r)));
  gr.validate();
  require(gr.dim() == g.state_dim, ErrorKind::config,
          cf.name + ": grid dimension must equal game state_dim");

  Tolerances& t = rc.tol;
  t.tol_val = cf.get_double("run.tol_val", t.tol_val);
  t.tol_set = cf.get_double("run.tol_set", t.tol_set);
  t.tol_inv = cf.get_double("run.tol_inv", t.tol_inv);
  t.tol_dd = cf.get_double("run.tol_dd", t.tol_dd);
  t.tol_visc = cf.get_double("run.tol_visc", t.tol_visc);
  t.quantum = cf.get_double("run.quantum", t.quantum);
  t.gamma_radius = cf.get_double("run.gamma_radius", t.gamma_radius);
  t.eta = cf.get_double("run.eta", t.eta);
  t.tol_nash_base = cf.get_double("run.tol_nash_base", t.tol_nash_base);
  t.tol_nash_slope = cf.get_double("run.tol_nash_slope", t.tol_nash_slope);
  t.fd_step = cf.get_double("run.fd_step", t.fd_step);
  t.hull_density = static_cast<int>(cf.get_int("run.hull_density", t.hull_density));
  t.delta_mults = cf.get_vec("run.delta_mults", t.delta_mults);
  rc.seed = static_cast<uint64_t>(cf.get_int("run.seed", 1));
  rc.stride = static_cast<int>(cf.get_int("run.stride", 0));
  std::string bp = cf.get_str("run.boundary", "clamp");
  if (bp == "clamp")
    rc.boundary = BoundaryPolicy::clamp;
  else if (bp == "strict")
    rc.boundary = BoundaryPolicy::strict;
  else
    fail(ErrorKind::config, cf.name + ": key 'run.boundary' must be clamp or strict");

  cf.check_all_used();
  return rc;
}

inline RunConfig parse_run_config_file(const std::string& path) {
  return parse_run_config(ConfigFile::parse_file(path));
}

}  // namespace dgnash
