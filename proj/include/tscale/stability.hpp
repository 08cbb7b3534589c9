#pragma once

#include <cmath>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "tscale/signal.hpp"

namespace tscale {

// Class K-infinity comparison function: zero at zero, strictly increasing,
// unbounded.  Held as a composition chain of power and monotone-table atoms
// so inverses and compositions stay exact where the algebra allows.
class ClassKInfFn {
 public:
  static ClassKInfFn identity();
  // coeff * s^exponent, coeff > 0, exponent > 0
  static ClassKInfFn power(double coeff, double exponent);
  // piecewise-linear through strictly increasing samples starting at (0,0),
  // extrapolated beyond the last sample with tail_slope > 0
  static ClassKInfFn table(std::vector<double> xs, std::vector<double> ys,
                           double tail_slope);

  double operator()(double s) const;
  ClassKInfFn inverse() const;
  // compose(f, g)(s) = f(g(s)); adjacent power atoms fold symbolically
  friend ClassKInfFn compose(const ClassKInfFn& outer,
                             const ClassKInfFn& inner);

  bool is_power() const;
  double power_coeff() const;
  double power_exponent() const;
  std::string describe() const;

 private:
  struct Power {
    double c, e;
  };
  struct Table {
    std::vector<double> xs, ys;
    double slope;
  };
  using Atom = std::variant<Power, Table>;
  std::vector<Atom> chain_;  // applied left to right (innermost first)
  void simplify();
};

// alpha^{-1} o gamma o beta: the stability envelope induced by a sandwiched,
// gamma-non-expansive functional.
ClassKInfFn ugs_bound_from_kweak(const ClassKInfFn& alpha,
                                 const ClassKInfFn& beta,
                                 const ClassKInfFn& gamma);

// Family of trajectories sharing a pointwise distance measure.
struct Ensemble {
  std::vector<Signal> signals;
  ValueMap distance;
  bool forward_complete_extensions_declared = false;
};

struct Witness {
  int signal = -1;
  double s = 0.0;
  double t = 0.0;
  double d_s = 0.0;
  double d_t = 0.0;
};

// Inequalities pass with lhs <= rhs + abs + rel*|rhs|.
struct Slack {
  double abs = 1e-9;
  double rel = 1e-9;
  double bound(double rhs) const { return rhs + abs + rel * std::abs(rhs); }
};

struct StabilityReport {
  std::string check;
  bool pass = false;
  std::optional<Witness> witness;
  long checked_pairs = 0;
  // smallest leftover slack across all checks; negative on fail
  double margin = kInf;
  nlohmann::json params;
  nlohmann::json resolution;
};

void to_json(nlohmann::json& j, const StabilityReport& rep);

// d_x(t) <= beta(d_x(s)) over all ordered same-signal grid pairs t >= s.
StabilityReport check_ugs(const Ensemble& E, const ClassKInfFn& beta,
                          Slack slack = {});

// Pairs with t >= s + T: d_x(s) <= 1/eps forces d_x(t) < eps.
StabilityReport check_attractivity(const Ensemble& E, double eps, double T,
                                   Slack slack = {});

// Sandwich alpha(d) <= V <= beta(d) at every grid point plus
// V(t) <= gamma(V(s)) over all ordered pairs.
StabilityReport check_k_weak(const Ensemble& E, const ValueMap& V,
                             const ClassKInfFn& alpha, const ClassKInfFn& beta,
                             const ClassKInfFn& gamma, Slack slack = {});

// Searches for a corridor: a pair t >= s + T with eps <= d <= 1/eps at every
// grid point between.  Pass means no corridor exists at this resolution.
StabilityReport falsify_c1(const Ensemble& E, double eps, double T,
                           Slack slack = {});

// Gap bound sigma(t) <= t + M on every domain, plus V-decrease >= delta
// across every in-corridor pair separated by at least T.  The resolution
// block reports the induced corridor-length bound k*(T + M).
StabilityReport check_corollary1(const Ensemble& E, const ValueMap& V,
                                 double M, double eps, double T, double delta,
                                 Slack slack = {});

// V^Delta(t) <= -gamma(d_x(t)) + 10*h at every grid point with a computable
// quotient, h the local forward spacing.
StabilityReport check_strict_decrease(const Signal& sig, const ValueMap& V,
                                      const ClassKInfFn& gamma,
                                      const ValueMap& d, Slack slack = {});

struct GrowthFit {
  double rho = 1.0;    // overshoot factor
  double M = 0.0;      // exponential growth rate along flows
  double tau_max = 0;  // dwell bound used in the gain
  ClassKInfFn gamma = ClassKInfFn::identity();
};

// Empirical fit of V(t) <= rho*e^{M(t-s)}*V(s) over an ensemble, yielding the
// linear gain gamma(tau) = rho^2 e^{2 M tau_max} tau.  Requires V > 0 on all
// grid points; works in log space to avoid underflow.
GrowthFit fit_growth_gamma(const Ensemble& E, const ValueMap& V,
                           double tau_max);

// Named pointwise maps for CLI use: "norm", "sqnorm", "example2_v".
ValueMap named_value_map(const std::string& name);
// "identity" | "power:a,b" -> class K-infinity function.
ClassKInfFn parse_kinf(const std::string& spec);

}  // namespace tscale
