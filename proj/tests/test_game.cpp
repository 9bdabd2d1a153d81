#include "dgnash/game.hpp"

#include <gtest/gtest.h>

using namespace dgnash;

TEST(game, example_dynamics_literal) {
  GameSpec g = example_game();
  g.validate();
  Vec f = eval_dynamics(g, 0.5, Vec{0.0, 0.0}, Vec{1.0}, Vec{-1.0});
  EXPECT_DOUBLE_EQ(f[0], 1.0);
  EXPECT_DOUBLE_EQ(f[1], -1.0);
}

TEST(game, affine_dynamics_literal) {
  GameSpec g;
  g.dynamics_id = "affine";
  g.state_dim = 2;
  g.A = {1.0, 0.0, 0.0, 1.0};
  g.B = {0.0, 0.0};
  g.C = {0.0, 0.0};
  g.p_samples = {{0.0}};
  g.q_samples = {{0.0}};
  g.sigma1.form = "linear";
  g.sigma1.coef = {1.0, 0.0};
  g.sigma2 = g.sigma1;
  g.validate();
  Vec f = eval_dynamics(g, 0.0, Vec{2.0, 3.0}, Vec{0.0}, Vec{0.0});
  EXPECT_DOUBLE_EQ(f[0], 2.0);
  EXPECT_DOUBLE_EQ(f[1], 3.0);
  // time-varying part: A_t adds t * A_t x
  g.A_t = {1.0, 0.0, 0.0, 0.0};
  Vec ft = eval_dynamics(g, 0.5, Vec{2.0, 3.0}, Vec{0.0}, Vec{0.0});
  EXPECT_DOUBLE_EQ(ft[0], 3.0);
  EXPECT_DOUBLE_EQ(ft[1], 3.0);
}

TEST(game, rotation_dynamics_literal) {
  GameSpec g = affine_rotation_game();
  Vec f = eval_dynamics(g, 0.0, Vec{1.0, 0.0}, Vec{1.0}, Vec{1.0});
  EXPECT_DOUBLE_EQ(f[0], 1.0);   // 0.5 * 0 + 1
  EXPECT_DOUBLE_EQ(f[1], 0.5);   // -0.5 * 1 + 1
}

TEST(game, payoff_forms) {
  PayoffSpec nad;
  nad.form = "neg_abs_diff";
  EXPECT_DOUBLE_EQ(eval_payoff(nad, Vec{2.0, 3.0}), -1.0);
  EXPECT_DOUBLE_EQ(eval_payoff(nad, Vec{1.5, 1.5}), 0.0);
  PayoffSpec lin;
  lin.form = "linear";
  lin.coef = {0.0, 1.0};
  EXPECT_DOUBLE_EQ(eval_payoff(lin, Vec{2.0, 3.0}), 3.0);
  lin.offset = -0.5;
  EXPECT_DOUBLE_EQ(eval_payoff(lin, Vec{2.0, 3.0}), 2.5);
  PayoffSpec nd;
  nd.form = "neg_dist";
  nd.coef = {1.0, 1.0};
  EXPECT_DOUBLE_EQ(eval_payoff(nd, Vec{4.0, 5.0}), -5.0);
  EXPECT_DOUBLE_EQ(payoff_lipschitz(nad), 2.0);
  EXPECT_DOUBLE_EQ(payoff_lipschitz(lin), 1.0);
}

TEST(game, velocity_set_raw_and_hull) {
  GameSpec g = example_game();
  VelocitySet vs = velocity_set(g, 0.0, Vec{0.0, 0.0}, 0, 1);
  ASSERT_EQ(vs.velocities.size(), 9u);  // 3 x 3 control pairs
  ASSERT_EQ(vs.control_pairs.size(), 9u);
  EXPECT_EQ(vs.hull_samples.size(), vs.velocities.size());  // density 0: hull == raw
  // p-major ordering: pair (i, j) has velocity (p_i, q_j)
  for (size_t k = 0; k < vs.velocities.size(); ++k) {
    auto [i, j] = vs.control_pairs[k];
    EXPECT_DOUBLE_EQ(vs.velocities[k][0], g.p_samples[i][0]);
    EXPECT_DOUBLE_EQ(vs.velocities[k][1], g.q_samples[j][0]);
  }
  // hull samples stay inside the bounding box of the raw velocities
  VelocitySet vh = velocity_set(g, 0.0, Vec{0.0, 0.0}, 8, 1);
  EXPECT_EQ(vh.hull_samples.size(), 17u);
  for (const Vec& w : vh.hull_samples) {
    EXPECT_LE(std::abs(w[0]), 1.0 + 1e-12);
    EXPECT_LE(std::abs(w[1]), 1.0 + 1e-12);
  }
  // hull rows are deterministic per seed
  VelocitySet vh2 = velocity_set(g, 0.0, Vec{0.0, 0.0}, 8, 1);
  for (size_t k = 0; k < vh.hull_samples.size(); ++k)
    EXPECT_EQ(vh.hull_samples[k], vh2.hull_samples[k]);
}

TEST(game, hamiltonians_example) {
  GameSpec g = example_game();
  Vec x = {0.0, 0.0};
  // H1 = max_u min_v (s_x u + s_y v) = |s_x| - |s_y|
  EXPECT_DOUBLE_EQ(hamiltonian(g, 1, 0.0, x, Vec{1.0, 0.0}), 1.0);
  EXPECT_DOUBLE_EQ(hamiltonian(g, 1, 0.0, x, Vec{0.7, -0.2}), 0.5);
  EXPECT_DOUBLE_EQ(hamiltonian(g, 1, 0.0, x, Vec{0.0, 0.0}), 0.0);
  // H2 = max_v min_u (s_x u + s_y v) = |s_y| - |s_x|
  EXPECT_DOUBLE_EQ(hamiltonian(g, 2, 0.0, x, Vec{0.0, 1.0}), 1.0);
  EXPECT_DOUBLE_EQ(hamiltonian(g, 2, 0.0, x, Vec{1.0, 1.0}), 0.0);
  EXPECT_THROW(hamiltonian(g, 3, 0.0, x, Vec{1.0, 0.0}), Error);
}

TEST(game, saddle_gap_example_zero) {
  GameSpec g = example_game();
  Grid grid;
  grid.t0 = 0.0;
  grid.theta0 = 1.0;
  grid.time_steps = 10;
  grid.lo = {-2.0, -2.0};
  grid.hi = {2.0, 2.0};
  grid.res = {5, 5};
  SaddleGapReport rep = isaacs_check_default(g, grid);
  EXPECT_NEAR(rep.max_gap, 0.0, 1e-12);  // decoupled controls: saddle everywhere
}

TEST(game, saddle_gap_coupled_positive) {
  GameSpec g = coupled_uv_game();
  // at s = 1: min_u max_v (u v) = 1, max_v min_u (u v) = -1
  EXPECT_DOUBLE_EQ(saddle_gap(g, 0.0, Vec{0.0}, Vec{1.0}), 2.0);
  Grid grid;
  grid.t0 = 0.0;
  grid.theta0 = 1.0;
  grid.time_steps = 10;
  grid.lo = {-2.0};
  grid.hi = {2.0};
  grid.res = {5};
  SaddleGapReport rep = isaacs_check_default(g, grid);
  EXPECT_DOUBLE_EQ(rep.max_gap, 2.0);
}

TEST(game, velocity_and_lipschitz_bounds) {
  Grid grid;
  grid.t0 = 0.0;
  grid.theta0 = 1.0;
  grid.time_steps = 10;
  grid.lo = {-3.0, -3.0};
  grid.hi = {3.0, 3.0};
  grid.res = {7, 7};
  EXPECT_DOUBLE_EQ(velocity_bound(example_game(), grid), 1.0);
  EXPECT_DOUBLE_EQ(velocity_bound(affine_rotation_game(), grid), 2.5);  // 0.5*3 + 1
  EXPECT_DOUBLE_EQ(state_lipschitz(example_game()), 0.0);
  EXPECT_DOUBLE_EQ(state_lipschitz(affine_rotation_game()), 0.5);
  EXPECT_DOUBLE_EQ(state_lipschitz(affine_damped_game()), 0.4);
}

TEST(game, catalog_and_validation) {
  EXPECT_NO_THROW(make_catalog_game("example").validate());
  EXPECT_NO_THROW(make_catalog_game("affine_rotation").validate());
  EXPECT_NO_THROW(make_catalog_game("affine_damped").validate());
  EXPECT_NO_THROW(make_catalog_game("coupled_uv").validate());
  EXPECT_THROW(make_catalog_game("unknown"), Error);
  GameSpec g = example_game();
  g.p_samples.clear();
  EXPECT_THROW(g.validate(), Error);
  g = example_game();
  g.sigma1.form = "mystery";
  EXPECT_THROW(g.validate(), Error);
  g = example_game();
  g.theta0 = g.t0;
  EXPECT_THROW(g.validate(), Error);
}
