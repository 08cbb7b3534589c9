#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "tscale/signal.hpp"

namespace tscale {

using StatePred = std::function<bool(const Vec&)>;
using VectorField = std::function<Vec(const Vec&)>;
using JumpMap = std::function<Vec(const Vec&)>;
using JumpEnum = std::function<std::vector<Vec>(const Vec&)>;

// Flow while in C, jump when in D; jumps take priority on the overlap.
// jump_targets optionally enumerates the full admissible target set for
// validation of set-valued jump maps; empty means jump() is exhaustive.
struct HybridSystem {
  StatePred in_C;
  StatePred in_D;
  VectorField flow;
  JumpMap jump;
  JumpEnum jump_targets;
};

enum class GapKind { Constant, Geometric };

// Length of the scale gap the n-th jump opens (n = 1, 2, ...).
struct GapPolicy {
  GapKind kind = GapKind::Constant;
  double delta = 1.0;  // constant gap length
  double ratio = 0.5;  // geometric gap length ratio^n

  double gap_length(long n) const;
  // Sum of every gap after the n-th; finite only for geometric gaps.
  double remaining_budget(long n) const;
};

struct SolverConfig {
  double step = 1e-3;
  double event_tol = 1e-10;
  GapPolicy gap_policy;
  long max_jumps = 10000;
  double horizon = 10.0;  // continuous-time budget
  double zeno_tol = 1e-6;
  int zeno_run = 8;
  // State at the accumulation closure point; absent stops on detection.
  std::optional<Vec> zeno_limit;
};

void to_json(nlohmann::json& j, const SolverConfig& cfg);
void from_json(const nlohmann::json& j, SolverConfig& cfg);

enum class StopReason {
  HorizonSpent,
  MaxJumps,
  ZenoDetected,
  ZenoClosed,
  LeftFlowAndJumpSets
};

std::string to_string(StopReason r);

struct SolveResult {
  Signal signal;
  StopReason reason = StopReason::HorizonSpent;
  long jumps = 0;
  bool zeno_closed = false;
  // Scale time of the closure point when a detected accumulation was closed.
  double zeno_closure = std::numeric_limits<double>::quiet_NaN();
};

// Fixed-step RK4 with bisection onto the first point where the state enters
// D or leaves C.  Each jump opens a gap per the policy.  Deterministic:
// identical inputs reproduce the trace bit for bit.
SolveResult solve(const HybridSystem& sys, const Vec& x0,
                  const SolverConfig& cfg);

Vec rk4_step(const VectorField& f, const Vec& x, double h);

struct FlowViolation {
  double t;
  double residual;  // +inf encodes a flow-set membership failure
};

struct JumpViolation {
  double t;
  std::string reason;
};

// Solution-concept audit of a trace against a system: initial membership,
// flow-set membership plus first-order difference-quotient residual along
// flows, jump-set membership plus target distance across gaps.
struct ViolationReport {
  bool initial_ok = true;
  std::vector<FlowViolation> flow_violations;
  std::vector<JumpViolation> jump_violations;
  double max_flow_residual = 0.0;
  bool ok() const {
    return initial_ok && flow_violations.empty() && jump_violations.empty();
  }
};

void to_json(nlohmann::json& j, const ViolationReport& rep);

ViolationReport validate(const HybridSystem& sys, const Signal& x, double tol);

// True when ext agrees with base on base's whole domain and extends it:
// base's domain is an initial sub-time-scale of ext's and samples match
// within tol at every base grid point.
bool is_extension(const Signal& base, const Signal& ext, double tol);

}  // namespace tscale
