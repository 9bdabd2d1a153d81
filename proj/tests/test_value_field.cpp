#include "dgnash/value_field.hpp"

#include <gtest/gtest.h>

#include <sstream>

#include "dgnash/example_oracle.hpp"

using namespace dgnash;

namespace {

Grid square_grid(int res, int k) {
  Grid g;
  g.t0 = 0.0;
  g.theta0 = 1.0;
  g.time_steps = k;
  g.lo = {-2.0, -2.0};
  g.hi = {2.0, 2.0};
  g.res = {res, res};
  return g;
}

double sup_gap(const ValueField& a, const ValueField& b) {
  double m = 0.0;
  for (size_t i = 0; i < a.values.size(); ++i)
    m = std::max(m, std::abs(a.values[i] - b.values[i]));
  return m;
}

// Sup gap over nodes whose full escape cone fits inside the box; the closed
// forms assume unconstrained room, so they are only binding there.
double cone_gap(const ValueField& vf, const ValueField& exact) {
  const Grid& g = vf.grid;
  double m = 0.0;
  Vec x(2);
  for (int k = 0; k <= g.time_steps; ++k) {
    double room = g.theta0 - g.time_at(k);
    for (int64_t node = 0; node < g.node_count(); ++node) {
      g.node_coords(node, x);
      if (std::abs(x[0]) + room > g.hi[0] + 1e-9 || std::abs(x[1]) + room > g.hi[1] + 1e-9)
        continue;
      m = std::max(m, std::abs(vf.at(k, node) - exact.at(k, node)));
    }
  }
  return m;
}

}  // namespace

TEST(value_field, guaranteed_levels_match_closed_forms) {
  GameSpec g = example_game();
  Grid grid = square_grid(81, 20);
  ValueField l1 = solve_lower_value(g, grid, 1);
  ValueField l2 = solve_lower_value(g, grid, 2);
  // player II's level is linear; extension keeps it exact through the walls
  EXPECT_LE(sup_gap(l2, oracle::exact_field(grid, "lower2")), 1e-12);
  // player I's level is exact inside the escape cone up to the one-step
  // diagonal-kink concession max(dt, dx)
  EXPECT_LE(cone_gap(l1, oracle::exact_field(grid, "lower1")),
            std::max(grid.dt(), grid.max_dx()) + 1e-12);
  // far from the kink the values are exact
  Vec p = {1.0, -1.0};
  EXPECT_NEAR(query_value(l1, 0.0, p), -2.0, 1e-12);
  Vec q = {0.3, -0.2};
  EXPECT_NEAR(query_value(l2, 0.25, q), 0.55, 1e-12);
}

TEST(value_field, cooperative_bounds_match_closed_forms) {
  GameSpec g = example_game();
  Grid grid = square_grid(81, 20);
  EXPECT_LE(sup_gap(solve_cooperative_max(g, grid, 1), oracle::exact_field(grid, "coop1")),
            1e-12);
  EXPECT_LE(sup_gap(solve_cooperative_max(g, grid, 2), oracle::exact_field(grid, "coop2")),
            1e-12);
}

TEST(value_field, clamping_flattens_wall_values) {
  GameSpec g = example_game();
  Grid grid = square_grid(81, 20);
  SolveOptions clamp;
  clamp.feet_outside = OutsideRule::clamp;
  ValueField l2 = solve_lower_value(g, grid, 2, clamp);
  // at the top wall the clamped feet cannot rise, so the level loses (1 - t)
  Vec top = {0.0, 2.0};
  EXPECT_NEAR(query_value(l2, 0.0, top), 2.0, 1e-9);  // formula says 3
  EXPECT_GT(sup_gap(l2, oracle::exact_field(grid, "lower2")), 0.5);
}

TEST(value_field, multilinear_extension_is_rejected) {
  GameSpec g = example_game();
  Grid grid = square_grid(41, 10);
  SolveOptions bad;
  bad.basis = InterpBasis::multilinear;
  bad.feet_outside = OutsideRule::extend;
  EXPECT_THROW(solve_lower_value(g, grid, 1, bad), Error);
  // multilinear with clamped feet is fine (and exact here: dt == dx aligns
  // the kink with cell diagonals only for the simplex basis, so compare coop2
  // which has no spatial kink)
  SolveOptions ok;
  ok.basis = InterpBasis::multilinear;
  ok.feet_outside = OutsideRule::clamp;
  ValueField c2 = solve_cooperative_max(g, grid, 2, ok);
  Vec mid = {0.0, 0.0};
  EXPECT_NEAR(query_value(c2, 0.0, mid), 1.0, 1e-9);
}

TEST(value_field, simplex_beats_multilinear_on_diagonal_kinks) {
  GameSpec g = example_game();
  // dt = 1/30 is no multiple of dx = 0.05, so the Euler feet land strictly
  // inside cells and the interpolation basis matters; with dt = dx the feet
  // hit nodes exactly and both bases coincide.
  Grid grid = square_grid(81, 30);
  SolveOptions ml;
  ml.basis = InterpBasis::multilinear;
  ml.feet_outside = OutsideRule::clamp;
  ValueField exact = oracle::exact_field(grid, "lower1");
  double gap_simplex = cone_gap(solve_lower_value(g, grid, 1), exact);
  double gap_ml = cone_gap(solve_lower_value(g, grid, 1, ml), exact);
  EXPECT_LT(gap_simplex, gap_ml);  // bilinear smears the kink every step
}

TEST(value_field, solver_loop_equals_single_step) {
  GameSpec g = example_game();
  Grid grid = square_grid(41, 10);
  ValueField l2 = solve_lower_value(g, grid, 2);
  Vec out(grid.node_count());
  value_backward_step(g, grid, StepMode::max_min, 2, grid.time_at(9), grid.dt(), l2.slice(10),
                      out);
  auto s9 = l2.slice(9);
  for (int64_t node = 0; node < grid.node_count(); ++node)
    EXPECT_EQ(out[node], s9[node]);  // identical arithmetic, bitwise equal
}

TEST(value_field, min_max_is_negated_max_min) {
  // min_u max_v V == -(max_u min_v (-V)) pointwise for any next slice
  GameSpec g = coupled_uv_game();
  Grid grid;
  grid.t0 = 0.0;
  grid.theta0 = 1.0;
  grid.time_steps = 10;
  grid.lo = {-2.0};
  grid.hi = {2.0};
  grid.res = {21};
  Vec v(grid.node_count()), neg(grid.node_count());
  uint64_t s = 7;
  for (int64_t i = 0; i < grid.node_count(); ++i) {
    v[i] = unit_double(splitmix64(s)) * 2.0 - 1.0;
    neg[i] = -v[i];
  }
  Vec a(grid.node_count()), b(grid.node_count());
  value_backward_step(g, grid, StepMode::min_max, 1, 0.0, grid.dt(), v, a);
  value_backward_step(g, grid, StepMode::max_min, 1, 0.0, grid.dt(), neg, b);
  for (int64_t i = 0; i < grid.node_count(); ++i) EXPECT_NEAR(a[i], -b[i], 1e-15);
}

TEST(value_field, saddle_gap_warning_and_strict_mode) {
  GameSpec g = coupled_uv_game();
  Grid grid;
  grid.t0 = 0.0;
  grid.theta0 = 1.0;
  grid.time_steps = 10;
  grid.lo = {-2.0};
  grid.hi = {2.0};
  grid.res = {21};
  ValueField vf = solve_lower_value(g, grid, 1);
  EXPECT_FALSE(vf.warning.empty());  // gap 2 > tol: one-sided value warning
  SolveOptions strict;
  strict.strict_saddle = true;
  EXPECT_THROW(solve_lower_value(g, grid, 1, strict), Error);
  SolveOptions off;
  off.check_saddle = false;
  EXPECT_TRUE(solve_lower_value(g, grid, 1, off).warning.empty());
  // the example game has a saddle point everywhere: no warning
  Grid sq = square_grid(21, 10);
  EXPECT_TRUE(solve_lower_value(example_game(), sq, 1).warning.empty());
}

TEST(value_field, query_value_time_interpolation_and_policy) {
  GameSpec g = example_game();
  Grid grid = square_grid(41, 10);
  ValueField l2 = solve_lower_value(g, grid, 2);
  Vec x = {0.5, 0.5};
  double v0 = query_value(l2, 0.3, x);
  double v1 = query_value(l2, 0.4, x);
  double mid = query_value(l2, 0.35, x);
  EXPECT_NEAR(mid, 0.5 * (v0 + v1), 1e-12);  // linear between slices
  EXPECT_NO_THROW(query_value(l2, -0.5, x));  // clamp holds the first slice
  EXPECT_DOUBLE_EQ(query_value(l2, -0.5, x), query_value(l2, 0.0, x));
  EXPECT_THROW(query_value(l2, -0.5, x, BoundaryPolicy::strict), Error);
  EXPECT_THROW(query_value(l2, 1.5, x, BoundaryPolicy::strict), Error);
}

TEST(value_field, csv_round_trip_is_bit_exact) {
  GameSpec g = example_game();
  Grid grid = square_grid(9, 4);
  ValueField vf = solve_lower_value(g, grid, 1);
  vf.warning = "sample warning";
  std::ostringstream os;
  write_value_csv(vf, os);
  std::istringstream is(os.str());
  ValueField back = read_value_csv(is);
  EXPECT_EQ(back.label, vf.label);
  EXPECT_EQ(back.warning, vf.warning);
  ASSERT_TRUE(grids_match(back.grid, vf.grid));
  ASSERT_EQ(back.values.size(), vf.values.size());
  for (size_t i = 0; i < vf.values.size(); ++i) EXPECT_EQ(back.values[i], vf.values[i]);
}

TEST(value_field, csv_reader_rejects_malformed_input) {
  {
    std::istringstream is("t,x1,value\n");  // header only
    EXPECT_THROW(read_value_csv(is), Error);
  }
  {
    std::istringstream is("t,x1,value\n0,0,abc\n1,0,1\n");
    EXPECT_THROW(read_value_csv(is), Error);
  }
  {
    // hole: (t=1, x=1) missing
    std::istringstream is("t,x1,value\n0,0,1\n0,1,2\n1,0,3\n");
    EXPECT_THROW(read_value_csv(is), Error);
  }
}
