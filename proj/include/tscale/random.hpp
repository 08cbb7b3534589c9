#pragma once

#include <cstdint>
#include <random>

#include "tscale/domains.hpp"

namespace tscale {

// Deterministic uniform source.  Draws take whole 53-bit mantissas from
// mt19937_64, so a seed reproduces the same stream on every platform.
class DomainRng {
 public:
  explicit DomainRng(std::uint64_t seed) : gen_(seed) {}

  double uniform() {  // [0, 1)
    return static_cast<double>(gen_() >> 11) * 0x1.0p-53;
  }
  double uniform(double a, double b) { return a + (b - a) * uniform(); }
  long uniform_int(long a, long b) {  // inclusive
    double u = uniform() * static_cast<double>(b - a + 1);
    long k = a + static_cast<long>(u);
    return k > b ? b : k;
  }

 private:
  std::mt19937_64 gen_;
};

// Segment scale with up to max_segments segments: mixed point and interval
// segments, random tail flavor, origin anywhere in [-5, 5].
GeneralizedTimeScale random_scale(DomainRng& rng, int max_segments = 20);

// A member of I, biased toward interior points with occasional exact
// segment endpoints; unbounded tails are sampled within 5 units of Fin's
// last anchor.
double random_member(DomainRng& rng, const GeneralizedTimeScale& I);

// Hybrid time domain with up to max_pieces pieces, mixed point and interval
// pieces, random tail flavor.
HybridTimeDomain random_htd(DomainRng& rng, int max_pieces = 10);

// Member of the H family: Ini = 0, all gaps exactly 1.
GeneralizedTimeScale random_h_scale(DomainRng& rng, int max_segments = 10);

// Switching schedule with n_switches breakpoints on a dyadic grid
// (multiples of 2^-10), so stretched-scale images stay exactly summable.
SwitchingSignal random_switching(DomainRng& rng, int n_switches,
                                 int n_modes = 2);

}  // namespace tscale
