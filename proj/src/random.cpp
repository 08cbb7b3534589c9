#include "tscale/random.hpp"

#include <cmath>
#include <stdexcept>

namespace tscale {

GeneralizedTimeScale random_scale(DomainRng& rng, int max_segments) {
  int n = static_cast<int>(rng.uniform_int(1, max_segments));
  std::vector<Segment> segs;
  double t = rng.uniform(-5.0, 5.0);
  for (int k = 0; k < n; ++k) {
    bool point = rng.uniform() < 0.25;
    double len = point ? 0.0 : rng.uniform(0.05, 1.5);
    segs.push_back(Segment{t, t + len});
    t += len + rng.uniform(0.05, 1.5);
  }
  double u = rng.uniform();
  TailKind tail = TailKind::Closed;
  if (u < 0.25) {
    segs.back().hi = kInf;
    tail = TailKind::Unbounded;
  } else if (u < 0.5 && !segs.back().is_point()) {
    tail = TailKind::HalfOpen;
  }
  return GeneralizedTimeScale(std::move(segs), tail);
}

double random_member(DomainRng& rng, const GeneralizedTimeScale& I) {
  const auto& segs = I.segments();
  std::size_t k =
      static_cast<std::size_t>(rng.uniform_int(0, static_cast<long>(segs.size()) - 1));
  const Segment& s = segs[k];
  if (s.is_point()) return s.lo;
  bool last = k + 1 == segs.size();
  double hi = s.hi == kInf ? s.lo + 5.0 : s.hi;
  double u = rng.uniform();
  if (u < 0.1) return s.lo;
  if (u < 0.2 && s.hi != kInf && !(last && I.tail() == TailKind::HalfOpen))
    return s.hi;
  double frac = rng.uniform(0.0, last && I.tail() == TailKind::HalfOpen
                                     ? 0.999
                                     : 1.0);
  return s.lo + frac * (hi - s.lo);
}

HybridTimeDomain random_htd(DomainRng& rng, int max_pieces) {
  int n = static_cast<int>(rng.uniform_int(1, max_pieces));
  HybridTimeDomain dom;
  double t = 0.0;
  for (int k = 0; k < n; ++k) {
    bool point = rng.uniform() < 0.3;
    double len = point ? 0.0 : rng.uniform(0.1, 2.0);
    dom.pieces.push_back(HtdPiece{t, t + len, k});
    t += len;
  }
  double u = rng.uniform();
  if (u < 0.25) {
    dom.pieces.back().hi = kInf;
    dom.tail = TailKind::Unbounded;
  } else if (u < 0.5 && dom.pieces.back().hi > dom.pieces.back().lo) {
    dom.tail = TailKind::HalfOpen;
  }
  return normalize(std::move(dom));
}

GeneralizedTimeScale random_h_scale(DomainRng& rng, int max_segments) {
  HybridTimeDomain dom = random_htd(rng, max_segments);
  return to_gts(dom);
}

SwitchingSignal random_switching(DomainRng& rng, int n_switches,
                                 int n_modes) {
  if (n_modes < 2) throw std::invalid_argument("need at least two modes");
  SwitchingSignal sig;
  long ticks = 0;  // dyadic time in units of 2^-10
  for (int k = 0; k < n_switches; ++k) {
    ticks += rng.uniform_int(1, 64);
    sig.breakpoints.push_back(static_cast<double>(ticks) * 0x1.0p-10);
  }
  int mode = static_cast<int>(rng.uniform_int(0, n_modes - 1));
  sig.modes.push_back(mode);
  for (int k = 0; k < n_switches; ++k) {
    int next = static_cast<int>(rng.uniform_int(0, n_modes - 2));
    if (next >= mode) ++next;  // forced change, uniform over the others
    sig.modes.push_back(next);
    mode = next;
  }
  return normalize(std::move(sig));
}

}  // namespace tscale
