#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "tscale/numeric.hpp"

namespace tscale {

inline constexpr double kDefaultTolT = 1e-9;

// One maximal closed block [lo, hi].  lo == hi is an isolated point.
// hi == +inf is only legal on the final segment of an unbounded scale.
struct Segment {
  double lo = 0.0;
  double hi = 0.0;
  bool is_point() const { return lo == hi; }
};

enum class TailKind { Closed, HalfOpen, Unbounded };

std::string to_string(TailKind k);
TailKind tail_from_string(const std::string& s);

// Uniform grid {start + k*stride : k = 0, 1, ...}, kept intensionally so the
// infinitely many isolated points never need materializing.
struct Lattice {
  double start = 0.0;
  double stride = 1.0;
};

// Closed-from-below subset of the reals: finitely many maximal segments plus
// a tail flavor, or an unbounded lattice of isolated points.
class GeneralizedTimeScale {
 public:
  GeneralizedTimeScale() = default;
  GeneralizedTimeScale(std::vector<Segment> segments, TailKind tail,
                       double tol_t = kDefaultTolT);

  static GeneralizedTimeScale lattice(double start, double stride,
                                      double tol_t = kDefaultTolT);

  bool empty() const { return !lat_ && segs_.empty(); }
  bool is_lattice() const { return lat_.has_value(); }
  const Lattice& lattice_spec() const;
  const std::vector<Segment>& segments() const;
  TailKind tail() const { return tail_; }
  double tol() const { return tol_; }

  bool contains(double t) const;
  // Index of the segment holding t; throws std::domain_error outside the set.
  std::size_t segment_of(double t) const;
  // Nearest lattice index for t; throws off-lattice or for segment scales.
  long lattice_index_of(double t) const;

 private:
  std::vector<Segment> segs_;
  TailKind tail_ = TailKind::Closed;
  double tol_ = kDefaultTolT;
  std::optional<Lattice> lat_;
};

double ini(const GeneralizedTimeScale& I);
// +inf for unbounded scales; the open sup for a half-open tail.
double fin(const GeneralizedTimeScale& I);
// True iff fin(I) is finite and a member (closed tail).
bool fin_attained(const GeneralizedTimeScale& I);

// Forward jump: least member strictly beyond t, with sigma(Fin) = Fin on a
// closed tail.  Throws std::domain_error when t is not a member.
double sigma(const GeneralizedTimeScale& I, double t);
double graininess(const GeneralizedTimeScale& I, double t);
bool is_right_scattered(const GeneralizedTimeScale& I, double t);

// Right-scattered members in [a, b], ascending.  b may be +inf only for
// segment scales (finitely many gaps); lattices then throw.
std::vector<double> gap_points(const GeneralizedTimeScale& I, double a,
                               double b);

// Set intersection with [a, b].  Throws std::domain_error when empty.
GeneralizedTimeScale restrict(const GeneralizedTimeScale& I, double a,
                              double b);
// Prefix up to a member t: restrict(I, ini, t).
GeneralizedTimeScale truncate_below(const GeneralizedTimeScale& I, double t);

// T_c(t) = Ini + Lebesgue measure of [Ini, t] \ gaps.  Member t only.
double continuous_part(const GeneralizedTimeScale& I, double t);
// N_d(t) = total gap length strictly before t.  Member t only.
double discrete_part(const GeneralizedTimeScale& I, double t);

// True iff [Ini(J), Fin(J)] cut out of I reproduces J exactly (Fin(J)
// included per J's own tail flavor).
bool is_subinterval(const GeneralizedTimeScale& J,
                    const GeneralizedTimeScale& I);

void to_json(nlohmann::json& j, const GeneralizedTimeScale& I);
void from_json(const nlohmann::json& j, GeneralizedTimeScale& I);

}  // namespace tscale
