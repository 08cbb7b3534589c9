#pragma once

#include <iosfwd>
#include <vector>

#include <nlohmann/json.hpp>

#include "tscale/hybrid.hpp"
#include "tscale/stability.hpp"

namespace tscale {

// Planar system x1' = -x1 + x2^2, x2' = -x2 - x1*x2 whose squared norm
// satisfies V^Delta = -2V + (sigma(t) - t) V (1 + x2^2).
Vec decay_field(const Vec& x);

struct Example1Result {
  Signal signal;
  StabilityReport report;
};

// RK4 on [0, horizon]; the report compares d(t) = |x(t)| against the
// closed-form envelope e^{-t} d(0) with a pinned 1e-4 tolerance.
Example1Result example1_continuous(const Vec& x0, double horizon, double step);

// Explicit Euler x(t+r) = x(t) + r f(x(t)) on the grid {0, r, ..., n r}.
// The report certifies V(t+r) = V(t)((r-1)^2 + r^2 x2(t)^2) per realized
// step to 1e-9 relative; growth past 1e150 stops the run (divergent flag).
Example1Result example1_discrete(const Vec& x0, double r, int n_steps);

// State-dependent switching between x' = (10 x2, 0) (mode 0, where
// (x1 + 4 x2)(x1 - 2 x2) <= 0) and x' = (1.5 x1 + 2 x2, -2 x1 - 0.5 x2).
int example2_mode(const Vec& x);
Vec example2_field(const Vec& x, int mode);

struct SwitchEvent {
  double time = 0.0;
  int from_mode = 0;
  int to_mode = 0;
  Vec state;
  double v_value = 0.0;  // 2 (x1 + x2)^2 + x2^2 at the switch
};

struct SwitchEventLog {
  std::vector<SwitchEvent> events;
  // full dwells only (between consecutive switches), indexed by mode
  double tau_min[2] = {kInf, kInf};
  double tau_max[2] = {0.0, 0.0};
  // angular rate d/dt atan2(x2, x1) observed at every accepted grid point
  double rate_min = kInf;
  double rate_max = -kInf;
  std::vector<std::pair<double, double>> rate_samples;  // subsampled (t, rate)
  bool converged = false;
  double end_time = 0.0;
};

void to_json(nlohmann::json& j, const SwitchEventLog& log);

struct Example2Result {
  Signal signal;
  SwitchEventLog log;
};

// Fixed-step RK4 with bisection onto the switching surfaces; terminates
// early once |x| <= 1e-4 |x0|.  The origin yields the trivial solution.
Example2Result example2_switched(const Vec& x0, double horizon, double step);

// Ball: flow (x2, -g) on height >= 0, impact surface height <= 0 with
// descending velocity, restitution x2+ = -theta x2.
HybridSystem bouncing_ball_system(double g, double theta);

struct ImpactRow {
  int n = 0;            // 1-indexed impact number
  double t = 0.0;       // physical (continuous-part) impact time
  double v_minus = 0.0; // arrival velocity (<= 0)
  double v_plus = 0.0;  // rebound velocity
  double gap = 0.0;     // t_{n+1} - t_n, NaN on the last row
};

struct ImpactTable {
  std::vector<ImpactRow> rows;
  double theta_estimate = 0.0;  // mean rebound ratio
  double t_inf_estimate = 0.0;  // geometric-tail accumulation estimate
};

void write_impacts_csv(std::ostream& os, const ImpactTable& table);

struct BallResult {
  SolveResult sol;
  ImpactTable impacts;
};

BallResult bouncing_ball(double h0, double v0, double g, double theta,
                         const SolverConfig& cfg);

// Value sets of a signal grouped by shared continuous-time part.
struct RealTimeTrace {
  struct Group {
    double s = 0.0;           // continuous-time instant
    std::vector<Vec> states;  // distinct values attained there
  };
  std::vector<Group> groups;
};

RealTimeTrace realtime_projection(const Signal& sig);

struct ZenoResult {
  Signal signal;
  RealTimeTrace projection;
  double t_inf = 0.0;    // physical accumulation time of the impacts
  double closure = 0.0;  // scale point carrying the accumulation state
};

// Closed-form ball trajectory embedded with geometric jump gaps (1/2)^n,
// closed at t_inf + 1 and continued there by the rest state (0, 0).
ZenoResult bouncing_ball_zeno(double h0, double v0, double g, double theta);

}  // namespace tscale
