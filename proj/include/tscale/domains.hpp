#pragma once

#include <vector>

#include <nlohmann/json.hpp>

#include "tscale/signal.hpp"
#include "tscale/timescale.hpp"

namespace tscale {

// One interval of flow at jump count j: [lo, hi] x {j}.
struct HtdPiece {
  double lo = 0.0;
  double hi = 0.0;
  long j = 0;
};

// Union of pieces with t_0 = 0, shared breakpoints, and j = 0, 1, ...
// The tail flavor qualifies the final piece, mirroring time-scale tails.
struct HybridTimeDomain {
  std::vector<HtdPiece> pieces;
  TailKind tail = TailKind::Closed;
};

// Checks invariants and snaps shared breakpoints exactly together.
// Throws std::invalid_argument on a malformed domain.
HybridTimeDomain normalize(HybridTimeDomain dom, double tol = kDefaultTolT);

void to_json(nlohmann::json& j, const HybridTimeDomain& dom);
void from_json(const nlohmann::json& j, HybridTimeDomain& dom);

// (t, j) -> t + j maps each piece to the segment [lo + j, hi + j]; all gaps
// come out with length exactly 1.
GeneralizedTimeScale to_gts(const HybridTimeDomain& dom,
                            double tol_t = kDefaultTolT);

// Membership in the image family of hybrid time domains: Ini = 0 and every
// gap has length 1, both within tol_t.
bool is_in_H(const GeneralizedTimeScale& I);

// Inverse of to_gts via t -> (t - j, j) with j the gap count before t.
// Lattices materialize up to `horizon` (required finite for them); segment
// scales ignore horizon.  Throws std::domain_error when I is not in H.
HybridTimeDomain to_htd(const GeneralizedTimeScale& I, double horizon = kInf);

// Piecewise-constant, right-continuous mode schedule on [0, inf):
// modes[n] holds on [breakpoints[n-1], breakpoints[n]).
struct SwitchingSignal {
  std::vector<double> breakpoints;  // strictly increasing, all > 0
  std::vector<int> modes;           // size = breakpoints.size() + 1
};

SwitchingSignal normalize(SwitchingSignal sig);
void to_json(nlohmann::json& j, const SwitchingSignal& sig);
void from_json(const nlohmann::json& j, SwitchingSignal& sig);
int mode_at(const SwitchingSignal& sig, double s);

// Real time s -> its images on the gap-stretched scale that opens a gap of
// length ratio^n after the n-th breakpoint.  Two images exactly at a
// breakpoint (pre- and post-switch), one otherwise.
std::vector<double> sjr(const std::vector<double>& breakpoints, double ratio,
                        double s, double break_tol = 1e-12);

// Rewrites a trajectory on one real-time segment starting at 0 as a signal
// on the stretched scale, appending the active mode as an extra component.
// Breakpoint instants appear twice: segment end with the pre-switch mode,
// next segment start with the post-switch mode.
Signal embed_switched(const Signal& x, const SwitchingSignal& lambda,
                      double ratio);

}  // namespace tscale
