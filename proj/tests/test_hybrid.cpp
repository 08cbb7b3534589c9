#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <sstream>
#include <vector>

#include "tscale/hybrid.hpp"
#include "tscale/scenarios.hpp"

using namespace tscale;

namespace {

Vec v2(double a, double b) {
  Vec x(2);
  x << a, b;
  return x;
}

// Oracle: impact instants of a ball dropped with height h0 and upward speed
// v0 under gravity g and restitution theta, from the kinematic recurrence
// t_{n+1} = t_n + 2 theta^n V1 / g with V1 the first landing speed.
std::vector<double> oracle_impacts(double h0, double v0, double g,
                                   double theta, int count) {
  double V1 = std::sqrt(v0 * v0 + 2.0 * g * h0);
  std::vector<double> t = {(v0 + V1) / g};
  double w = V1;
  for (int n = 1; n < count; ++n) {
    w *= theta;
    t.push_back(t.back() + 2.0 * w / g);
  }
  return t;
}

std::string trace_bytes(const Signal& s) {
  std::ostringstream os;
  write_trace_csv(os, s);
  return os.str();
}

}  // namespace

TEST_CASE("rk4 reproduces the parabolic flight closed form") {
  VectorField f = [](const Vec& x) { return v2(x[1], -2.0); };
  Vec x0 = v2(1.0, 0.5);
  for (double h : {1e-3, 0.1, 0.7}) {
    Vec y = rk4_step(f, x0, h);
    // flow map is polynomial of degree two, integrated exactly
    CHECK(y[0] == doctest::Approx(1.0 + 0.5 * h - h * h).epsilon(1e-14));
    CHECK(y[1] == doctest::Approx(0.5 - 2.0 * h).epsilon(1e-14));
  }
}

TEST_CASE("gap policies meter scale gaps and budgets") {
  GapPolicy constant{GapKind::Constant, 2.5, 0.5};
  CHECK(constant.gap_length(1) == 2.5);
  CHECK(constant.gap_length(7) == 2.5);
  CHECK(std::isinf(constant.remaining_budget(3)));
  GapPolicy geo{GapKind::Geometric, 1.0, 0.5};
  CHECK(geo.gap_length(1) == 0.5);
  CHECK(geo.gap_length(3) == 0.125);
  CHECK(geo.remaining_budget(0) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(geo.remaining_budget(2) == doctest::Approx(0.25).epsilon(1e-15));
}

TEST_CASE("solver rejects starts outside both sets") {
  HybridSystem sys = bouncing_ball_system(2.0, 0.5);
  CHECK_THROWS_AS(solve(sys, v2(-1.0, 1.0), SolverConfig{}),
                  std::invalid_argument);
}

TEST_CASE("ball impacts land on the kinematic recurrence") {
  HybridSystem sys = bouncing_ball_system(2.0, 0.5);
  SolverConfig cfg;
  cfg.horizon = 10.0;
  SolveResult sol = solve(sys, v2(0.0, 1.0), cfg);
  REQUIRE(sol.jumps >= 10);
  std::vector<double> expect = oracle_impacts(0.0, 1.0, 2.0, 0.5, 10);
  for (int n = 0; n < 10; ++n) {
    double t_scale = sol.signal.grid(static_cast<std::size_t>(n)).back();
    double t_phys = continuous_part(sol.signal.dom(), t_scale);
    CHECK(std::abs(t_phys - expect[static_cast<std::size_t>(n)]) <=
          cfg.event_tol + 1e-6);
  }
  CHECK(sol.reason == StopReason::ZenoDetected);
}

TEST_CASE("constant gaps open unit holes by default") {
  HybridSystem sys = bouncing_ball_system(2.0, 0.5);
  SolverConfig cfg;
  cfg.horizon = 1.8;  // two impacts
  SolveResult sol = solve(sys, v2(0.0, 1.0), cfg);
  const auto& segs = sol.signal.dom().segments();
  REQUIRE(segs.size() >= 2);
  CHECK(segs[1].lo - segs[0].hi == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("geometric gaps shrink by the ratio") {
  HybridSystem sys = bouncing_ball_system(2.0, 0.5);
  SolverConfig cfg;
  cfg.horizon = 1.9;
  cfg.gap_policy.kind = GapKind::Geometric;
  cfg.gap_policy.ratio = 0.5;
  SolveResult sol = solve(sys, v2(0.0, 1.0), cfg);
  const auto& segs = sol.signal.dom().segments();
  REQUIRE(segs.size() >= 3);
  CHECK(segs[1].lo - segs[0].hi == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(segs[2].lo - segs[1].hi == doctest::Approx(0.25).epsilon(1e-12));
}

TEST_CASE("stop reasons are reported faithfully") {
  HybridSystem sys = bouncing_ball_system(2.0, 0.5);
  SolverConfig cfg;

  cfg.horizon = 0.5;
  CHECK(solve(sys, v2(0.0, 1.0), cfg).reason == StopReason::HorizonSpent);

  cfg.horizon = 10.0;
  cfg.max_jumps = 3;
  SolveResult mj = solve(sys, v2(0.0, 1.0), cfg);
  CHECK(mj.reason == StopReason::MaxJumps);
  CHECK(mj.jumps == 3);

  // scalar system that drifts out of C with nothing in D
  HybridSystem drift;
  drift.in_C = [](const Vec& x) { return x[0] < 1.0; };
  drift.in_D = [](const Vec&) { return false; };
  drift.flow = [](const Vec&) { return Vec(Vec::Ones(1)); };
  drift.jump = [](const Vec& x) { return x; };
  Vec one(1);
  one << 0.0;
  SolverConfig dcfg;
  dcfg.horizon = 5.0;
  CHECK(solve(drift, one, dcfg).reason == StopReason::LeftFlowAndJumpSets);
}

TEST_CASE("zeno accumulation is detected and optionally closed") {
  HybridSystem sys = bouncing_ball_system(2.0, 0.5);
  SolverConfig cfg;
  cfg.horizon = 10.0;
  cfg.zeno_tol = 1e-3;
  cfg.zeno_run = 4;
  SolveResult detected = solve(sys, v2(0.0, 1.0), cfg);
  CHECK(detected.reason == StopReason::ZenoDetected);
  CHECK_FALSE(detected.zeno_closed);

  cfg.gap_policy.kind = GapKind::Geometric;
  cfg.gap_policy.ratio = 0.5;
  cfg.zeno_limit = v2(0.0, 0.0);
  SolveResult closed = solve(sys, v2(0.0, 1.0), cfg);
  CHECK(closed.reason == StopReason::ZenoClosed);
  CHECK(closed.zeno_closed);
  CHECK(std::isfinite(closed.zeno_closure));
  const auto& segs = closed.signal.dom().segments();
  CHECK(segs.back().lo == closed.zeno_closure);
  CHECK(segs.back().is_point());
  const Vec& last = closed.signal.values(closed.signal.segment_count() - 1)
                        .back();
  CHECK(last[0] == 0.0);
  CHECK(last[1] == 0.0);
  // the closure point sits within the residual gap budget of the detection
  double t_detect = segs[segs.size() - 2].hi;
  CHECK(closed.zeno_closure > t_detect);
  CHECK(closed.zeno_closure - t_detect <= 1.0);
}

TEST_CASE("identical configurations reproduce traces bit for bit") {
  HybridSystem sys = bouncing_ball_system(2.0, 0.5);
  SolverConfig cfg;
  cfg.horizon = 1.9;
  SolveResult a = solve(sys, v2(0.0, 1.0), cfg);
  SolveResult b = solve(sys, v2(0.0, 1.0), cfg);
  CHECK(trace_bytes(a.signal) == trace_bytes(b.signal));
}

TEST_CASE("validation accepts solver output and flags tampering") {
  HybridSystem sys = bouncing_ball_system(2.0, 0.5);
  SolverConfig cfg;
  cfg.horizon = 1.8;
  SolveResult sol = solve(sys, v2(0.0, 1.0), cfg);
  ViolationReport ok = validate(sys, sol.signal, 0.01);
  CHECK(ok.ok());
  CHECK(ok.max_flow_residual <= 0.01);

  // corrupt one interior sample: the difference quotient must blow up
  std::vector<std::vector<double>> grids;
  std::vector<std::vector<Vec>> vals;
  for (std::size_t k = 0; k < sol.signal.segment_count(); ++k) {
    grids.push_back(sol.signal.grid(k));
    vals.push_back(sol.signal.values(k));
  }
  vals[0][vals[0].size() / 2][0] += 0.1;
  Signal bad(sol.signal.dom(), grids, vals);
  ViolationReport flagged = validate(sys, bad, 0.01);
  CHECK_FALSE(flagged.ok());
  CHECK_FALSE(flagged.flow_violations.empty());
}

TEST_CASE("jump validation distinguishes admissible target sets") {
  HybridSystem sys = bouncing_ball_system(2.0, 0.5);
  SolverConfig cfg;
  cfg.horizon = 1.8;
  SolveResult sol = solve(sys, v2(0.0, 1.0), cfg);

  HybridSystem wrong = sys;
  wrong.jump = [](const Vec& x) { return v2(x[0], -0.25 * x[1]); };
  ViolationReport rep = validate(wrong, sol.signal, 0.01);
  CHECK_FALSE(rep.jump_violations.empty());

  // declaring the produced target among the admissible set clears it
  HybridSystem setvalued = wrong;
  setvalued.jump_targets = [](const Vec& x) {
    return std::vector<Vec>{v2(x[0], -0.25 * x[1]), v2(x[0], -0.5 * x[1])};
  };
  ViolationReport rep2 = validate(setvalued, sol.signal, 0.01);
  CHECK(rep2.jump_violations.empty());
}

TEST_CASE("a longer run extends a shorter one") {
  HybridSystem sys = bouncing_ball_system(2.0, 0.5);
  SolverConfig cfg;
  cfg.horizon = 1.2;
  SolveResult base = solve(sys, v2(0.0, 1.0), cfg);
  cfg.horizon = 1.4;
  SolveResult ext = solve(sys, v2(0.0, 1.0), cfg);
  CHECK(is_extension(base.signal, ext.signal, 1e-9));
  CHECK_FALSE(is_extension(ext.signal, base.signal, 1e-9));
}

TEST_CASE("solver config json round-trips and validates") {
  SolverConfig cfg;
  cfg.step = 5e-4;
  cfg.gap_policy.kind = GapKind::Geometric;
  cfg.gap_policy.ratio = 0.25;
  cfg.zeno_limit = v2(0.0, 0.0);
  nlohmann::json j;
  to_json(j, cfg);
  SolverConfig back;
  from_json(j, back);
  CHECK(back.step == 5e-4);
  CHECK(back.gap_policy.kind == GapKind::Geometric);
  CHECK(back.gap_policy.ratio == 0.25);
  REQUIRE(back.zeno_limit.has_value());
  CHECK((*back.zeno_limit)[1] == 0.0);
  j["step"] = -1.0;
  CHECK_THROWS_AS(from_json(j, back), std::invalid_argument);
}
