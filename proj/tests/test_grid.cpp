#include "dgnash/grid.hpp"

#include <gtest/gtest.h>

using namespace dgnash;

namespace {

Grid square_grid(int res, int k = 10) {
  Grid g;
  g.t0 = 0.0;
  g.theta0 = 1.0;
  g.time_steps = k;
  g.lo = {-2.0, -2.0};
  g.hi = {2.0, 2.0};
  g.res = {res, res};
  g.validate();
  return g;
}

}  // namespace

TEST(grid, basic_measures) {
  Grid g = square_grid(201, 100);
  EXPECT_EQ(g.dim(), 2);
  EXPECT_EQ(g.node_count(), 201 * 201);
  EXPECT_DOUBLE_EQ(g.dt(), 0.01);
  EXPECT_DOUBLE_EQ(g.max_dx(), 0.02);
  EXPECT_DOUBLE_EQ(g.time_at(0), 0.0);
  EXPECT_DOUBLE_EQ(g.time_at(100), 1.0);  // endpoint exact, no drift
  EXPECT_NEAR(g.cell_diameter(), std::hypot(0.02, 0.02), 1e-15);
}

TEST(grid, node_coords_round_trip) {
  Grid g = square_grid(5);
  Vec x(2);
  for (int64_t node = 0; node < g.node_count(); ++node) {
    g.node_coords(node, x);
    EXPECT_EQ(g.nearest_node(x), node);
  }
  // nearest_node snaps off-node points
  Vec p = {0.4, -0.6};
  EXPECT_EQ(g.nearest_node(p), g.nearest_node(Vec{0.0, -1.0}));
}

TEST(grid, validate_rejects_bad_boxes) {
  Grid g = square_grid(5);
  g.res = {1, 5};
  EXPECT_THROW(g.validate(), Error);
  g = square_grid(5);
  g.hi = {-3.0, 2.0};
  EXPECT_THROW(g.validate(), Error);
  g = square_grid(5);
  g.time_steps = 0;
  EXPECT_THROW(g.validate(), Error);
}

TEST(grid, multilinear_weights_partition_unity) {
  Grid g = square_grid(5);  // nodes at integers
  CellWeights cw;
  Vec p = {0.3, 0.7};
  cell_weights(g, p, BoundaryPolicy::clamp, cw);
  ASSERT_EQ(cw.count, 4);
  double sum = 0.0;
  for (int c = 0; c < cw.count; ++c) {
    EXPECT_GE(cw.w[c], 0.0);
    EXPECT_LE(cw.w[c], 1.0);
    sum += cw.w[c];
  }
  EXPECT_NEAR(sum, 1.0, 1e-12);
  // cell center weights are all 1/4
  Vec c = {0.5, 0.5};
  cell_weights(g, c, BoundaryPolicy::clamp, cw);
  for (int i = 0; i < 4; ++i) EXPECT_NEAR(cw.w[i], 0.25, 1e-12);
}

TEST(grid, on_node_snap_gives_unit_weight) {
  Grid g = square_grid(5);
  CellWeights cw;
  Vec p = {1.0 + 4e-10, -1.0 - 4e-10};  // within snap_eps of a node
  cell_weights(g, p, BoundaryPolicy::clamp, cw);
  int heavy = 0;
  for (int c = 0; c < cw.count; ++c)
    if (cw.w[c] > 0.999999) ++heavy;
  EXPECT_EQ(heavy, 1);
}

TEST(grid, simplex_exact_on_diagonal_kink) {
  // -|x - y| is piecewise linear with its kink on the cell diagonal; the
  // simplex basis reproduces it exactly where multilinear smears.
  Grid g = square_grid(5);
  Vec vals(g.node_count());
  Vec x(2);
  for (int64_t node = 0; node < g.node_count(); ++node) {
    g.node_coords(node, x);
    vals[node] = -std::abs(x[0] - x[1]);
  }
  CellWeights cw;
  Vec p = {0.3, 0.3};
  cell_weights(g, p, BoundaryPolicy::clamp, InterpBasis::simplex, cw);
  EXPECT_NEAR(interpolate(vals, cw), 0.0, 1e-12);
  cell_weights(g, p, BoundaryPolicy::clamp, InterpBasis::multilinear, cw);
  EXPECT_NEAR(interpolate(vals, cw), -0.42, 1e-12);  // bilinear smear at (0.3, 0.3)
  // off the kink both bases agree with the exact value
  Vec q = {0.25, -0.5};
  cell_weights(g, q, BoundaryPolicy::clamp, InterpBasis::simplex, cw);
  EXPECT_NEAR(interpolate(vals, cw), -0.75, 1e-12);
}

TEST(grid, simplex_weights_partition_unity) {
  Grid g = square_grid(5);
  CellWeights cw;
  Vec p = {0.6, -1.3};
  cell_weights_simplex(g, p, BoundaryPolicy::clamp, cw);
  ASSERT_EQ(cw.count, 3);
  double sum = 0.0;
  for (int c = 0; c < cw.count; ++c) {
    EXPECT_GE(cw.w[c], -1e-15);
    sum += cw.w[c];
  }
  EXPECT_NEAR(sum, 1.0, 1e-12);
}

TEST(grid, outside_extend_continues_affine) {
  // linear field 2x + y: extension reproduces it beyond the wall, clamping
  // freezes the boundary value
  Grid g = square_grid(5);
  Vec vals(g.node_count());
  Vec x(2);
  for (int64_t node = 0; node < g.node_count(); ++node) {
    g.node_coords(node, x);
    vals[node] = 2.0 * x[0] + x[1];
  }
  CellWeights cw;
  Vec p = {2.5, 1.0};
  cell_weights(g, p, BoundaryPolicy::clamp, cw, 1e-9, OutsideRule::extend);
  EXPECT_NEAR(interpolate(vals, cw), 6.0, 1e-12);
  cell_weights(g, p, BoundaryPolicy::clamp, cw, 1e-9, OutsideRule::clamp);
  EXPECT_NEAR(interpolate(vals, cw), 5.0, 1e-12);
  // extension weights still sum to one (they may be negative)
  cell_weights(g, p, BoundaryPolicy::clamp, cw, 1e-9, OutsideRule::extend);
  double sum = 0.0;
  for (int c = 0; c < cw.count; ++c) sum += cw.w[c];
  EXPECT_NEAR(sum, 1.0, 1e-12);
  // overshoot is capped at one cell
  Vec far = {10.0, 0.0};
  cell_weights(g, far, BoundaryPolicy::clamp, cw, 1e-9, OutsideRule::extend);
  EXPECT_NEAR(interpolate(vals, cw), 2.0 * 3.0 + 0.0, 1e-12);
  // simplex extension matches on affine fields too
  cell_weights(g, p, BoundaryPolicy::clamp, InterpBasis::simplex, cw, 1e-9, OutsideRule::extend);
  EXPECT_NEAR(interpolate(vals, cw), 6.0, 1e-12);
}

TEST(grid, strict_policy_rejects_outside_points) {
  Grid g = square_grid(5);
  CellWeights cw;
  Vec p = {2.1, 0.0};
  EXPECT_THROW(cell_weights(g, p, BoundaryPolicy::strict, cw), Error);
  try {
    cell_weights(g, p, BoundaryPolicy::strict, cw);
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::domain);
  }
  // clamp accepts the same point
  EXPECT_NO_THROW(cell_weights(g, p, BoundaryPolicy::clamp, cw));
}

TEST(grid, interp_at_recovers_node_values) {
  Grid g = square_grid(9);
  Vec vals(g.node_count());
  Vec x(2);
  for (int64_t node = 0; node < g.node_count(); ++node) {
    g.node_coords(node, x);
    vals[node] = 0.5 * x[0] - 1.5 * x[1] + 0.25;
  }
  for (int64_t node = 0; node < g.node_count(); node += 7) {
    g.node_coords(node, x);
    EXPECT_NEAR(interp_at(g, vals, x, BoundaryPolicy::clamp), vals[node], 1e-12);
  }
}
