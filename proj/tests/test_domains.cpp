#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "tscale/domains.hpp"
#include "tscale/random.hpp"

using namespace tscale;

namespace {

Vec v2(double a, double b) {
  Vec x(2);
  x << a, b;
  return x;
}

bool same_piece(const HtdPiece& a, const HtdPiece& b, double tol) {
  if (a.j != b.j) return false;
  if (std::abs(a.lo - b.lo) > tol) return false;
  if (std::isinf(a.hi) || std::isinf(b.hi))
    return std::isinf(a.hi) == std::isinf(b.hi);
  return std::abs(a.hi - b.hi) <= tol;
}

}  // namespace

TEST_CASE("normalize enforces the domain invariants") {
  CHECK_THROWS_AS(normalize(HybridTimeDomain{{{0.5, 1.0, 0}}, {}}),
                  std::invalid_argument);  // t0 != 0
  CHECK_THROWS_AS(
      normalize(HybridTimeDomain{{{0.0, 1.0, 0}, {1.0, 2.0, 2}}, {}}),
      std::invalid_argument);  // jump counter skips
  CHECK_THROWS_AS(
      normalize(HybridTimeDomain{{{0.0, 1.0, 0}, {0.5, 2.0, 1}}, {}}),
      std::invalid_argument);  // breakpoints disagree beyond tolerance
  HybridTimeDomain snapped = normalize(
      HybridTimeDomain{{{0.0, 1.0, 0}, {1.0 + 1e-12, 2.0, 1}}, {}});
  CHECK(snapped.pieces[1].lo == snapped.pieces[0].hi);
}

TEST_CASE("image of a two-piece domain opens a unit gap") {
  HybridTimeDomain dom{{{0.0, 1.0, 0}, {1.0, 2.0, 1}}, TailKind::Closed};
  GeneralizedTimeScale I = to_gts(dom);
  REQUIRE(I.segments().size() == 2);
  CHECK(I.segments()[0].lo == 0.0);
  CHECK(I.segments()[0].hi == 1.0);
  CHECK(I.segments()[1].lo == 2.0);
  CHECK(I.segments()[1].hi == 3.0);
  CHECK(is_in_H(I));
}

TEST_CASE("non-unit gaps are recognized as outside the image family") {
  GeneralizedTimeScale bad({{0.0, 1.0}, {2.5, 3.0}}, TailKind::Closed);
  CHECK_FALSE(is_in_H(bad));
  CHECK_THROWS_WITH_AS(to_htd(bad), doctest::Contains("not in H"),
                       std::domain_error);
  GeneralizedTimeScale shifted({{0.5, 1.0}}, TailKind::Closed);
  CHECK_FALSE(is_in_H(shifted));
}

TEST_CASE("time decompositions read off hybrid coordinates") {
  // (t, j) maps to t + j, so the continuous part must return t and the
  // discrete part must return j.
  DomainRng rng(11);
  for (int trial = 0; trial < 100; ++trial) {
    HybridTimeDomain dom = random_htd(rng);
    GeneralizedTimeScale I = to_gts(dom);
    for (std::size_t k = 0; k < dom.pieces.size(); ++k) {
      const HtdPiece& p = dom.pieces[k];
      std::vector<double> probes = {p.lo};
      if (std::isfinite(p.hi)) {
        probes.push_back(0.5 * (p.lo + p.hi));
        bool open_end = (k + 1 == dom.pieces.size()) &&
                        dom.tail == TailKind::HalfOpen;
        if (!open_end) probes.push_back(p.hi);
      } else {
        probes.push_back(p.lo + 7.5);
      }
      for (double t : probes) {
        double tau = t + static_cast<double>(p.j);
        CAPTURE(trial);
        CAPTURE(tau);
        CHECK(std::abs(continuous_part(I, tau) - t) <= 1e-9);
        CHECK(std::abs(discrete_part(I, tau) -
                       static_cast<double>(p.j)) <= 1e-9);
      }
    }
  }
}

TEST_CASE("random hybrid domains round-trip through the image") {
  DomainRng rng(23);
  for (int trial = 0; trial < 100; ++trial) {
    HybridTimeDomain dom = random_htd(rng);
    HybridTimeDomain back = to_htd(to_gts(dom));
    CAPTURE(trial);
    REQUIRE(back.pieces.size() == dom.pieces.size());
    CHECK(back.tail == dom.tail);
    for (std::size_t k = 0; k < dom.pieces.size(); ++k)
      CHECK(same_piece(back.pieces[k], dom.pieces[k], 1e-12));
  }
}

TEST_CASE("random image scales round-trip through hybrid coordinates") {
  DomainRng rng(29);
  for (int trial = 0; trial < 100; ++trial) {
    GeneralizedTimeScale I = random_h_scale(rng);
    REQUIRE(is_in_H(I));
    GeneralizedTimeScale back = to_gts(to_htd(I));
    CAPTURE(trial);
    REQUIRE(back.segments().size() == I.segments().size());
    CHECK(back.tail() == I.tail());
    for (std::size_t k = 0; k < I.segments().size(); ++k) {
      CHECK(std::abs(back.segments()[k].lo - I.segments()[k].lo) <= 1e-12);
      if (std::isfinite(I.segments()[k].hi))
        CHECK(std::abs(back.segments()[k].hi - I.segments()[k].hi) <=
              1e-12);
      else
        CHECK(std::isinf(back.segments()[k].hi));
    }
  }
}

TEST_CASE("unit lattice is the purely discrete hybrid domain") {
  GeneralizedTimeScale L = GeneralizedTimeScale::lattice(0.0, 1.0);
  REQUIRE(is_in_H(L));
  HybridTimeDomain dom = to_htd(L, 4.0);
  REQUIRE(dom.pieces.size() >= 4);
  for (const HtdPiece& p : dom.pieces) {
    CHECK(p.lo == 0.0);
    CHECK(p.hi == 0.0);
  }
  CHECK(dom.pieces[3].j == 3);
  CHECK_THROWS_AS(to_htd(L), std::invalid_argument);  // needs a horizon
}

TEST_CASE("hybrid domain json round-trips") {
  HybridTimeDomain dom{{{0.0, 1.5, 0}, {1.5, 1.5, 1}, {1.5, kInf, 2}},
                       TailKind::Unbounded};
  nlohmann::json j;
  to_json(j, dom);
  HybridTimeDomain back;
  from_json(j, back);
  REQUIRE(back.pieces.size() == 3);
  CHECK(back.pieces[1].lo == back.pieces[1].hi);
  CHECK(std::isinf(back.pieces[2].hi));
  CHECK(back.tail == TailKind::Unbounded);
}

TEST_CASE("switching signals validate and evaluate right-continuously") {
  SwitchingSignal sig{{1.0, 2.0}, {0, 1, 0}};
  sig = normalize(sig);
  CHECK(mode_at(sig, 0.0) == 0);
  CHECK(mode_at(sig, 0.999) == 0);
  CHECK(mode_at(sig, 1.0) == 1);  // right-continuous at the breakpoint
  CHECK(mode_at(sig, 1.999) == 1);
  CHECK(mode_at(sig, 2.0) == 0);
  CHECK(mode_at(sig, 50.0) == 0);
  CHECK_THROWS_AS(normalize(SwitchingSignal{{2.0, 1.0}, {0, 1, 0}}),
                  std::invalid_argument);
  CHECK_THROWS_AS(normalize(SwitchingSignal{{1.0}, {0}}),
                  std::invalid_argument);
}

TEST_CASE("switch embedding images match the worked fixture") {
  std::vector<double> bp = {1.0, 2.0};
  double r = 0.5;
  auto im1 = sjr(bp, r, 1.0);
  REQUIRE(im1.size() == 2);
  CHECK(im1[0] == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(im1[1] == doctest::Approx(1.5).epsilon(1e-15));
  auto im2 = sjr(bp, r, 2.0);
  REQUIRE(im2.size() == 2);
  CHECK(im2[0] == doctest::Approx(2.5).epsilon(1e-15));
  CHECK(im2[1] == doctest::Approx(2.75).epsilon(1e-15));
  auto im3 = sjr(bp, r, 3.0);
  REQUIRE(im3.size() == 1);
  CHECK(im3[0] == doctest::Approx(3.75).epsilon(1e-15));
  auto im0 = sjr(bp, r, 0.25);
  REQUIRE(im0.size() == 1);
  CHECK(im0[0] == 0.25);
}

TEST_CASE("embedding stretches time by the gap budget and keeps values") {
  // source trajectory x(s) = (s, s^2) sampled densely on [0, 3]
  GeneralizedTimeScale dom({{0.0, 3.0}}, TailKind::Closed);
  std::vector<double> grid;
  std::vector<Vec> vals;
  for (int i = 0; i <= 300; ++i) {
    double s = i * 0.01;
    grid.push_back(s);
    vals.push_back(v2(s, s * s));
  }
  grid.back() = 3.0;
  Signal x(dom, {grid}, {vals});
  SwitchingSignal lambda{{1.0, 2.0}, {0, 1, 0}};
  Signal emb = embed_switched(x, lambda, 0.5);

  REQUIRE(emb.dim() == 3);
  REQUIRE(emb.dom().segments().size() == 3);
  CHECK(emb.dom().segments()[0].hi == doctest::Approx(1.0));
  CHECK(emb.dom().segments()[1].lo == doctest::Approx(1.5));
  CHECK(emb.dom().segments()[1].hi == doctest::Approx(2.5));
  CHECK(emb.dom().segments()[2].lo == doctest::Approx(2.75));
  CHECK(emb.dom().segments()[2].hi == doctest::Approx(3.75));

  // every embedded sample carries the source value at its continuous part
  // and the active mode in the appended component
  double max_err = 0.0;
  emb.for_each([&](std::size_t, double tau, const Vec& v) {
    double s = continuous_part(emb.dom(), tau);
    Vec ref = sample(x, std::min(s, 3.0));
    max_err = std::max(max_err, std::abs(v[0] - ref[0]));
    max_err = std::max(max_err, std::abs(v[1] - ref[1]));
    CHECK((v[2] == 0.0 || v[2] == 1.0));
  });
  CHECK(max_err <= 1e-9);

  // pre- and post-switch images of the first breakpoint carry both modes
  CHECK(emb.values(0).back()[2] == 0.0);
  CHECK(emb.values(1).front()[2] == 1.0);
  CHECK(emb.values(1).back()[2] == 1.0);
  CHECK(emb.values(2).front()[2] == 0.0);

  // total stretched time never exceeds the geometric gap budget
  double last = emb.grid(2).back();
  CHECK(discrete_part(emb.dom(), last) <= 1.0 + 1e-12);
}
