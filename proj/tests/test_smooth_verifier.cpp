#include "dgnash/smooth_verifier.hpp"

#include <gtest/gtest.h>

#include <sstream>

#include "dgnash/example_oracle.hpp"

using namespace dgnash;

namespace {

Grid acceptance_grid() {
  Grid g;
  g.t0 = 0.0;
  g.theta0 = 1.0;
  g.time_steps = 100;
  g.lo = {-2.0, -2.0};
  g.hi = {2.0, 2.0};
  g.res = {201, 201};
  return g;
}

CandidatePair constant_pair() {
  CandidatePair p;
  p.label = "const";
  p.hint = SmoothnessHint::smooth;
  p.c1 = [](double, std::span<const double>) { return 3.0; };
  p.c2 = [](double, std::span<const double>) { return -1.0; };
  return p;
}

}  // namespace

TEST(smooth_verifier, subgradients_at_a_concave_kink_span_the_segment) {
  CandidatePair cp = oracle::example_candidate(2.0);
  Vec x{0.5, 0.5};
  auto subs = sample_subgradients(cp.c1, 0.3, x, 0.0, 1.0);
  ASSERT_GE(subs.size(), 3u);
  // the upper subdifferential at x = y is the segment {(0, l, -l) : l in [0,1]}
  oracle::SubdiffSet exact = oracle::subdifferential_c1_exact(2.0, 0.3, 0.5, 0.5);
  double worst = 0.0;
  double to_zero = 1e9, to_edge = 1e9;
  for (const SubgradientSample& s : subs) {
    worst = std::max(worst, exact.dist({s.a, s.s[0], s.s[1]}));
    to_zero = std::min(to_zero, std::abs(s.a) + std::abs(s.s[0]) + std::abs(s.s[1]));
    to_edge = std::min(to_edge, std::abs(s.a) + std::abs(s.s[0] - 1) + std::abs(s.s[1] + 1));
  }
  EXPECT_LE(worst, 0.05);    // measured 1.3e-15
  EXPECT_LE(to_zero, 0.05);  // both segment endpoints are recovered
  EXPECT_LE(to_edge, 0.05);
}

TEST(smooth_verifier, subgradients_at_a_smooth_point_reproduce_the_gradient) {
  CandidatePair cp = oracle::example_candidate(2.0);
  Vec x{-0.5, 0.5};  // y > x: c1 = x - y, gradient (1, -1), no time slope
  auto subs = sample_subgradients(cp.c1, 0.25, x, 0.0, 1.0);
  ASSERT_EQ(subs.size(), 1u);
  EXPECT_NEAR(subs[0].a, 0.0, 1e-6);
  EXPECT_NEAR(subs[0].s[0], 1.0, 1e-6);
  EXPECT_NEAR(subs[0].s[1], -1.0, 1e-6);
}

TEST(smooth_verifier, transport_modulus_vanishes_along_the_agreed_motion) {
  CandidatePair cp = oracle::example_candidate(2.0);
  Vec deltas{0.05, 0.1};
  Vec diag{1.0, 1.0};
  Vec x1{-0.3, 0.4};
  // constants transport along anything
  EXPECT_DOUBLE_EQ(modulus_derivative(constant_pair(), 0.2, x1, diag, deltas, 0.5), 0.0);
  // y >= x: the pair rides the diagonal
  EXPECT_NEAR(modulus_derivative(cp, 0.2, x1, diag, deltas, 0.0, 0), 0.0, 1e-12);
  // y < x inside the transfer band: the agreed velocity is (1 - d, 1)
  double t = 0.5, xx = 0.4, yy = -0.3;
  double d = oracle::transfer_rate_exact(2.0, t, xx, yy);
  EXPECT_NEAR(d, 1.4, 1e-12);
  Vec w{1.0 - d, 1.0};
  Vec x2{xx, yy};
  EXPECT_NEAR(modulus_derivative(cp, t, x2, w, deltas, 0.0, 0), 0.0, 1e-12);
  // an off-motion velocity leaves a first-order residual
  Vec wrong{1.0, -1.0};
  EXPECT_GT(modulus_derivative(cp, 0.2, x1, wrong, deltas, 0.0, 0), 0.5);
  // horizon guard
  EXPECT_THROW(modulus_derivative(cp, 0.95, x1, diag, deltas, 0.0, 0, 1, 1.0), Error);
}

TEST(smooth_verifier, candidate_family_passes_the_upper_check) {
  GameSpec g = example_game();
  Grid grid = acceptance_grid();
  for (double gamma : {2.0, 1.0}) {
    CandidatePair cp = oracle::example_candidate(gamma);
    UpperCheckReport r = check_upper_solution(g, cp, grid);
    EXPECT_TRUE(r.pass) << "gamma " << gamma;
    EXPECT_TRUE(r.terminal_ok);
    EXPECT_TRUE(r.viscosity_ok);
    EXPECT_TRUE(r.transport_ok);
    EXPECT_LE(r.max_terminal_gap, 1e-12);
    EXPECT_LE(r.max_level_defect, 1e-9);  // measured 2e-13
    EXPECT_LE(r.max_transport, 1e-12);
    EXPECT_EQ(r.points_checked, 128);
    EXPECT_GT(r.subgradients_checked, 100);
    EXPECT_NE(r.notes.find("not proof"), std::string::npos);
  }
}

TEST(smooth_verifier, upper_check_flags_a_terminal_mismatch) {
  GameSpec g = example_game();
  Grid grid = acceptance_grid();
  CandidatePair bad;
  bad.label = "shifted";
  bad.hint = SmoothnessHint::piecewise;
  bad.c1 = [](double t, std::span<const double> x) {
    return oracle::lower_value_exact(1, t, x[0], x[1]) - 1.0;
  };
  bad.c2 = [](double t, std::span<const double> x) {
    return oracle::lower_value_exact(2, t, x[0], x[1]);
  };
  UpperCheckReport r = check_upper_solution(g, bad, grid);
  EXPECT_FALSE(r.pass);
  EXPECT_FALSE(r.terminal_ok);
  EXPECT_NEAR(r.max_terminal_gap, 1.0, 1e-9);
  // the shifted pair still satisfies the differential conditions
  EXPECT_TRUE(r.viscosity_ok);
  EXPECT_TRUE(r.transport_ok);
  EXPECT_FALSE(r.rows.empty());  // failures are retained for the CSV
}

TEST(smooth_verifier, smooth_system_finds_one_shared_control_pair) {
  GameSpec g = example_game();
  CandidatePair cp = oracle::example_candidate(2.0);
  std::vector<SamplePoint> pts;
  pts.push_back({0.5, {0.8, -0.4}});   // x > y past the transfer band
  pts.push_back({0.25, {-0.5, 0.5}});  // y > x
  pts.push_back({0.3, {0.5, 0.5}});    // on the kink: excluded, not failed
  pts.push_back({0.5, {0.2, -0.1}});   // x > y inside the band
  SmoothSystemReport r = check_smooth_system(g, cp, pts, 0.0, 1.0);
  EXPECT_TRUE(r.pass);
  EXPECT_EQ(r.smooth_points, 3);
  EXPECT_EQ(r.kink_points, 1);
  EXPECT_EQ(r.failures, 0);
  EXPECT_LE(r.max_residual, 1e-9);  // measured 1.8e-15
  ASSERT_EQ(r.selections.size(), 4u);
  // x > y: stationarity needs u = -1 (index 0) and v = +1 (index 2)
  EXPECT_TRUE(r.selections[0].found);
  EXPECT_EQ(r.selections[0].u_index, 0);
  EXPECT_EQ(r.selections[0].v_index, 2);
  // y > x: both climb, u = v = +1
  EXPECT_TRUE(r.selections[1].found);
  EXPECT_EQ(r.selections[1].u_index, 2);
  EXPECT_EQ(r.selections[1].v_index, 2);
  EXPECT_FALSE(r.selections[2].smooth);
  EXPECT_FALSE(r.selections[2].found);
  EXPECT_TRUE(r.selections[3].found);
  EXPECT_EQ(r.selections[3].u_index, 0);
  EXPECT_EQ(r.selections[3].v_index, 2);
}

TEST(smooth_verifier, candidate_from_fields_wraps_queries) {
  GameSpec g = example_game();
  Grid grid;
  grid.t0 = 0.0;
  grid.theta0 = 1.0;
  grid.time_steps = 20;
  grid.lo = {-2.0, -2.0};
  grid.hi = {2.0, 2.0};
  grid.res = {81, 81};
  auto f1 = std::make_shared<ValueField>(solve_lower_value(g, grid, 1));
  auto f2 = std::make_shared<ValueField>(solve_lower_value(g, grid, 2));
  CandidatePair cp = candidate_from_fields(f1, f2, "wrapped");
  Vec x{0.3, -0.2};
  EXPECT_DOUBLE_EQ(cp.eval(1, 0.25, x), query_value(*f1, 0.25, x));
  EXPECT_DOUBLE_EQ(cp.eval(2, 0.25, x), query_value(*f2, 0.25, x));
  EXPECT_THROW(candidate_from_fields(nullptr, f2), Error);
  CandidatePair half;
  half.label = "half";
  half.c1 = cp.c1;
  EXPECT_THROW(half.eval(2, 0.25, x), Error);
}

TEST(smooth_verifier, report_csv_shapes) {
  std::vector<PointCheck> rows;
  rows.push_back({0.5, {0.1, -0.2}, "transport", 0.25});
  std::ostringstream os;
  write_point_checks_csv(rows, 2, os);
  std::istringstream is(os.str());
  std::string line;
  std::getline(is, line);
  EXPECT_EQ(line, "t,x1,x2,test,residual");
  std::getline(is, line);
  EXPECT_EQ(line, "0.5,0.1,-0.2,transport,0.25");

  std::vector<ControlSelection> sels(1);
  sels[0].t = 0.25;
  sels[0].x = {0.0, 1.0};
  sels[0].smooth = true;
  sels[0].found = true;
  sels[0].u_index = 2;
  sels[0].v_index = 2;
  sels[0].residual = 0.0;
  std::ostringstream os2;
  write_control_selections_csv(sels, 2, os2);
  std::istringstream is2(os2.str());
  std::getline(is2, line);
  EXPECT_EQ(line, "t,x1,x2,smooth,found,u_index,v_index,residual");
  std::getline(is2, line);
  EXPECT_EQ(line, "0.25,0,1,1,1,2,2,0");
}

TEST(smooth_verifier, sample_box_points_are_deterministic_and_interior) {
  Grid grid = acceptance_grid();
  auto a = sample_box_points(grid, 64, 7, 0.1, 0.05);
  auto b = sample_box_points(grid, 64, 7, 0.1, 0.05);
  ASSERT_EQ(a.size(), 64u);
  for (size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].t, b[i].t);
    EXPECT_EQ(a[i].x, b[i].x);
    EXPECT_GE(a[i].t, grid.t0);
    EXPECT_LE(a[i].t, grid.theta0 - 0.04);  // time margin keeps points early
    for (int ax = 0; ax < 2; ++ax) {
      EXPECT_GE(a[i].x[ax], grid.lo[ax] + 0.1 - 1e-12);
      EXPECT_LE(a[i].x[ax], grid.hi[ax] - 0.1 + 1e-12);
    }
  }
  auto c = sample_box_points(grid, 64, 8, 0.1, 0.05);
  bool differs = false;
  for (size_t i = 0; i < a.size(); ++i)
    if (a[i].t != c[i].t) differs = true;
  EXPECT_TRUE(differs);  // seed matters
}
