#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <functional>
#include <vector>

#include "tscale/random.hpp"
#include "tscale/stability.hpp"

using namespace tscale;

namespace {

Vec v1(double a) {
  Vec x(1);
  x << a;
  return x;
}

// Scalar signal with prescribed values over a bounded scale; grids cover
// every bounded segment end so the flatten order is well defined.
Signal scalar_signal(const GeneralizedTimeScale& dom,
                     const std::function<double(double)>& f,
                     double dense_step = 0.1) {
  std::vector<std::vector<double>> grids;
  std::vector<std::vector<Vec>> vals;
  const auto& segs = dom.segments();
  for (std::size_t k = 0; k < segs.size(); ++k) {
    const Segment& s = segs[k];
    double hi = std::isfinite(s.hi) ? s.hi : s.lo + 2.0;
    bool open_end = (k + 1 == segs.size()) &&
                    dom.tail() == TailKind::HalfOpen &&
                    std::isfinite(s.hi);
    if (open_end) hi = s.lo + 0.75 * (s.hi - s.lo);  // stop short of the sup
    std::vector<double> g = {s.lo};
    if (hi > s.lo) {
      for (double t = s.lo + dense_step; t < hi - dense_step * 0.5;
           t += dense_step)
        g.push_back(t);
      g.push_back(hi);
    }
    std::vector<Vec> v;
    for (double t : g) v.push_back(v1(f(t)));
    grids.push_back(std::move(g));
    vals.push_back(std::move(v));
  }
  return Signal(dom, std::move(grids), std::move(vals));
}

Signal scalar_on_interval(double lo, double hi,
                          const std::function<double(double)>& f,
                          double dense_step = 0.1) {
  return scalar_signal(GeneralizedTimeScale({{lo, hi}}, TailKind::Closed), f,
                       dense_step);
}

ValueMap abs_first() {
  return [](const Vec& v) { return std::abs(v[0]); };
}

// Blunt oracle for the same-signal all-pairs bound d(t) <= beta(d(s)):
// quadratic scan, no shared bookkeeping with the library implementation.
struct BruteForce {
  bool pass = true;
  double margin = kInf;
};

BruteForce brute_force_ugs(const Ensemble& E, const ClassKInfFn& beta,
                           Slack slack = {}) {
  BruteForce out;
  for (const Signal& sig : E.signals) {
    std::vector<double> d;
    sig.for_each(
        [&](std::size_t, double, const Vec& v) { d.push_back(E.distance(v)); });
    for (std::size_t i = 0; i < d.size(); ++i)
      for (std::size_t j = i; j < d.size(); ++j) {
        double rhs = beta(d[i]);
        out.margin = std::min(out.margin, rhs - d[j]);
        if (d[j] > slack.bound(rhs)) out.pass = false;
      }
  }
  return out;
}

}  // namespace

TEST_CASE("power functions evaluate invert and fold") {
  ClassKInfFn f = ClassKInfFn::power(2.0, 3.0);
  CHECK(f(0.0) == 0.0);
  CHECK(f(2.0) == doctest::Approx(16.0).epsilon(1e-15));
  ClassKInfFn finv = f.inverse();
  for (double y : {0.5, 1.0, 7.0, 123.0})
    CHECK(finv(f(y)) == doctest::Approx(y).epsilon(1e-12));
  ClassKInfFn g = ClassKInfFn::power(0.5, 2.0);
  ClassKInfFn fg = compose(f, g);
  REQUIRE(fg.is_power());
  CHECK(fg.power_exponent() == doctest::Approx(6.0).epsilon(1e-15));
  CHECK(fg.power_coeff() == doctest::Approx(2.0 * std::pow(0.5, 3.0)));
  CHECK(fg(1.5) == doctest::Approx(f(g(1.5))).epsilon(1e-13));
}

TEST_CASE("identity is a neutral element that simplifies away") {
  ClassKInfFn id = ClassKInfFn::identity();
  CHECK(id(3.25) == 3.25);
  CHECK(id.is_power());
  CHECK(id.power_coeff() == 1.0);
  CHECK(id.power_exponent() == 1.0);
  ClassKInfFn f = ClassKInfFn::power(3.0, 2.0);
  CHECK(compose(id, f).is_power());
  CHECK(compose(f, id).power_coeff() == 3.0);
  CHECK(id.inverse()(7.0) == 7.0);
  CHECK(id.describe() == "identity");
}

TEST_CASE("tables interpolate extrapolate and invert") {
  ClassKInfFn t = ClassKInfFn::table({0.0, 1.0, 2.0}, {0.0, 2.0, 8.0}, 6.0);
  CHECK(t(0.0) == 0.0);
  CHECK(t(0.5) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(t(1.5) == doctest::Approx(5.0).epsilon(1e-15));
  CHECK(t(3.0) == doctest::Approx(14.0).epsilon(1e-15));
  CHECK_FALSE(t.is_power());
  ClassKInfFn tinv = t.inverse();
  for (double s : {0.25, 0.75, 1.9, 4.0})
    CHECK(tinv(t(s)) == doctest::Approx(s).epsilon(1e-12));
  CHECK_THROWS_AS(
      ClassKInfFn::table({0.0, 1.0}, {0.0, -1.0}, 1.0),
      std::invalid_argument);
  CHECK_THROWS_AS(ClassKInfFn::table({0.5, 1.0}, {0.5, 1.0}, 1.0),
                  std::invalid_argument);
}

TEST_CASE("mixed chains invert atom by atom") {
  ClassKInfFn f = compose(ClassKInfFn::power(2.0, 1.0),
                          ClassKInfFn::table({0.0, 1.0}, {0.0, 3.0}, 1.5));
  ClassKInfFn finv = f.inverse();
  for (double s : {0.1, 0.9, 2.5})
    CHECK(finv(f(s)) == doctest::Approx(s).epsilon(1e-12));
  CHECK(f.describe().find(" o ") != std::string::npos);
}

TEST_CASE("stability envelope composes to the exact closed form") {
  // oracle: alpha(s) = s^2/3 and beta(s) = 5 s^2 give
  // alpha^{-1}(identity(beta(s))) = sqrt(15) * s
  const double root15 = std::sqrt(15.0);
  ClassKInfFn bound = ugs_bound_from_kweak(ClassKInfFn::power(1.0 / 3.0, 2.0),
                                           ClassKInfFn::power(5.0, 2.0),
                                           ClassKInfFn::identity());
  REQUIRE(bound.is_power());
  CHECK(bound.power_exponent() == doctest::Approx(1.0).epsilon(1e-15));
  for (int i = 0; i <= 32; ++i) {
    double s = 0.125 * i;
    CHECK(std::abs(bound(s) - root15 * s) <= 1e-12);
  }
}

TEST_CASE("spec strings parse to comparison functions") {
  CHECK(parse_kinf("identity")(4.0) == 4.0);
  ClassKInfFn p = parse_kinf("power:2.5,2");
  CHECK(p(2.0) == doctest::Approx(10.0).epsilon(1e-15));
  CHECK_THROWS_AS(parse_kinf("nonsense"), std::invalid_argument);
  CHECK_THROWS_AS(parse_kinf("power:-1,2"), std::invalid_argument);
}

TEST_CASE("named value maps compute the advertised quantities") {
  Vec x(2);
  x << 3.0, 4.0;
  CHECK(named_value_map("norm")(x) == 5.0);
  CHECK(named_value_map("sqnorm")(x) == 25.0);
  CHECK(named_value_map("example2_v")(x) ==
        doctest::Approx(2.0 * 49.0 + 16.0).epsilon(1e-15));
  CHECK_THROWS_AS(named_value_map("bogus"), std::invalid_argument);
}

TEST_CASE("bound check agrees with the quadratic-scan oracle") {
  DomainRng rng(5);
  int fails_seen = 0, passes_seen = 0;
  for (int trial = 0; trial < 40; ++trial) {
    Ensemble E;
    E.distance = abs_first();
    int n_signals = 1 + static_cast<int>(rng.uniform_int(0, 2));
    for (int s = 0; s < n_signals; ++s) {
      GeneralizedTimeScale dom = random_scale(rng, 4);
      double base = rng.uniform(0.5, 3.0), wob = rng.uniform(0.0, 2.0);
      E.signals.push_back(scalar_signal(
          dom,
          [&](double t) { return base + wob * std::sin(3.0 * t); }, 0.37));
    }
    ClassKInfFn beta =
        trial % 2 == 0 ? ClassKInfFn::identity()
                       : ClassKInfFn::power(rng.uniform(0.8, 3.0), 1.0);
    StabilityReport rep = check_ugs(E, beta);
    BruteForce bf = brute_force_ugs(E, beta);
    CAPTURE(trial);
    CHECK(rep.pass == bf.pass);
    CHECK(rep.margin == bf.margin);  // same subtractions, same doubles
    if (rep.pass) {
      ++passes_seen;
      CHECK_FALSE(rep.witness.has_value());
    } else {
      ++fails_seen;
      REQUIRE(rep.witness.has_value());
      // the witness pair must reproduce the reported worst margin
      CHECK(beta(rep.witness->d_s) - rep.witness->d_t == rep.margin);
      CHECK(rep.witness->t >= rep.witness->s);
    }
  }
  CHECK(fails_seen > 0);
  CHECK(passes_seen > 0);
}

TEST_CASE("failed checks reproduce their witness bit for bit") {
  Ensemble E;
  E.distance = abs_first();
  E.signals.push_back(
      scalar_on_interval(0.0, 5.0, [](double t) { return 1.0 + t * t; }));
  StabilityReport a = check_ugs(E, ClassKInfFn::identity());
  StabilityReport b = check_ugs(E, ClassKInfFn::identity());
  REQUIRE_FALSE(a.pass);
  REQUIRE(a.witness.has_value());
  REQUIRE(b.witness.has_value());
  nlohmann::json ja, jb;
  to_json(ja, a);
  to_json(jb, b);
  CHECK(ja.dump() == jb.dump());
}

TEST_CASE("enlarging the gain can only repair a failure") {
  Ensemble E;
  E.distance = abs_first();
  E.signals.push_back(scalar_on_interval(
      0.0, 6.0, [](double t) { return 2.0 + std::sin(t); }, 0.05));
  CHECK_FALSE(check_ugs(E, ClassKInfFn::identity()).pass);
  CHECK(check_ugs(E, ClassKInfFn::power(10.0, 1.0)).pass);
}

TEST_CASE("attractivity accepts decay and rejects growth") {
  Ensemble decay;
  decay.distance = abs_first();
  decay.signals.push_back(scalar_on_interval(
      0.0, 20.0, [](double t) { return 2.0 * std::exp(-t); }, 0.02));
  StabilityReport ok = check_attractivity(decay, 0.25, 5.0);
  CHECK(ok.pass);

  Ensemble stuck;
  stuck.distance = abs_first();
  stuck.signals.push_back(
      scalar_on_interval(0.0, 20.0, [](double) { return 1.0; }, 0.02));
  StabilityReport bad = check_attractivity(stuck, 0.25, 5.0);
  CHECK_FALSE(bad.pass);
  REQUIRE(bad.witness.has_value());
  CHECK(bad.witness->t >= bad.witness->s + 5.0 - 1e-12);
  CHECK_THROWS_AS(check_attractivity(decay, 2.0, 5.0),
                  std::invalid_argument);
}

TEST_CASE("sandwich plus monotone gain splits into named failure modes") {
  Ensemble E;
  E.distance = abs_first();
  E.signals.push_back(scalar_on_interval(
      0.0, 8.0, [](double t) { return std::exp(-0.5 * t); }, 0.05));
  ValueMap V = [](const Vec& v) { return 2.0 * v[0] * v[0]; };
  ClassKInfFn alpha = ClassKInfFn::power(1.0, 2.0);
  ClassKInfFn beta = ClassKInfFn::power(3.0, 2.0);
  StabilityReport ok = check_k_weak(E, V, alpha, beta,
                                    ClassKInfFn::identity());
  CHECK(ok.pass);

  StabilityReport low = check_k_weak(E, V, ClassKInfFn::power(4.0, 2.0),
                                     beta, ClassKInfFn::identity());
  CHECK_FALSE(low.pass);
  CHECK(low.resolution.at("violated") == "sandwich_lower");

  StabilityReport up = check_k_weak(E, V, alpha,
                                    ClassKInfFn::power(0.5, 2.0),
                                    ClassKInfFn::identity());
  CHECK_FALSE(up.pass);
  CHECK(up.resolution.at("violated") == "sandwich_upper");

  Ensemble bump;
  bump.distance = abs_first();
  bump.signals.push_back(scalar_on_interval(
      0.0, 8.0, [](double t) { return 1.0 + 0.5 * std::sin(t); }, 0.05));
  StabilityReport mono = check_k_weak(bump, V, alpha, beta,
                                      ClassKInfFn::identity());
  CHECK_FALSE(mono.pass);
  CHECK(mono.resolution.at("violated") == "monotone_gain");
}

TEST_CASE("corridor search finds plateaus and clears decays") {
  Ensemble plateau;
  plateau.distance = abs_first();
  plateau.signals.push_back(
      scalar_on_interval(0.0, 30.0, [](double) { return 1.0; }, 0.1));
  StabilityReport found = falsify_c1(plateau, 0.2, 10.0);
  CHECK_FALSE(found.pass);
  REQUIRE(found.witness.has_value());
  CHECK(found.witness->t - found.witness->s >= 10.0 - 1e-9);

  Ensemble decay;
  decay.distance = abs_first();
  decay.signals.push_back(scalar_on_interval(
      0.0, 30.0, [](double t) { return 3.0 * std::exp(-t); }, 0.02));
  // the band [0.2, 5] is crossed in under three time units
  CHECK(falsify_c1(decay, 0.2, 10.0).pass);
  CHECK_FALSE(falsify_c1(decay, 0.2, 1.0).pass);
}

TEST_CASE("corridor decrease certificate checks gaps and descent") {
  Ensemble E;
  E.distance = abs_first();
  E.signals.push_back(scalar_on_interval(
      0.0, 10.0, [](double t) { return std::exp(-t); }, 0.01));
  ValueMap V = abs_first();
  StabilityReport ok = check_corollary1(E, V, 1.0, 0.2, 1.0, 0.1);
  CHECK(ok.pass);
  CHECK(ok.resolution.contains("corridor_length_bound"));

  Ensemble stuck;
  stuck.distance = abs_first();
  stuck.signals.push_back(
      scalar_on_interval(0.0, 10.0, [](double) { return 1.0; }, 0.01));
  StabilityReport bad = check_corollary1(stuck, V, 1.0, 0.2, 1.0, 0.1);
  CHECK_FALSE(bad.pass);

  // a domain gap wider than M fails the graininess premise
  GeneralizedTimeScale gappy({{0.0, 1.0}, {4.0, 5.0}}, TailKind::Closed);
  Ensemble wide;
  wide.distance = abs_first();
  wide.signals.push_back(
      scalar_signal(gappy, [](double t) { return std::exp(-t); }, 0.05));
  StabilityReport gapfail = check_corollary1(wide, V, 1.0, 0.2, 1.0, 0.01);
  CHECK_FALSE(gapfail.pass);
}

TEST_CASE("pointwise decrease compares the quotient against the gain") {
  Signal sig = scalar_on_interval(
      0.0, 6.0, [](double t) { return std::exp(-t); }, 0.001);
  ValueMap V = [](const Vec& v) { return v[0] * v[0]; };  // e^{-2t}
  ValueMap d = abs_first();                               // e^{-t}
  // V' = -2 e^{-2t} <= -gamma(d) for gamma(s) = s^2 = e^{-2t}
  StabilityReport ok = check_strict_decrease(sig, V,
                                             ClassKInfFn::power(1.0, 2.0), d);
  CHECK(ok.pass);
  StabilityReport bad = check_strict_decrease(
      sig, V, ClassKInfFn::power(3.0, 2.0), d);
  CHECK_FALSE(bad.pass);
  REQUIRE(bad.witness.has_value());
}

TEST_CASE("growth fit recovers a known exponential envelope") {
  Ensemble E;
  E.distance = abs_first();
  E.signals.push_back(scalar_on_interval(
      0.0, 2.0, [](double t) { return 2.0 * std::exp(0.5 * t); }, 0.001));
  ValueMap V = [](const Vec& v) { return v[0] * v[0]; };  // rate 1.0
  GrowthFit fit = fit_growth_gamma(E, V, 1.0);
  CHECK(fit.M == doctest::Approx(1.0).epsilon(1e-3));
  CHECK(fit.rho == doctest::Approx(1.0).epsilon(1e-3));
  REQUIRE(fit.gamma.is_power());
  CHECK(fit.gamma.power_exponent() == 1.0);
  CHECK(fit.gamma.power_coeff() ==
        doctest::Approx(std::exp(2.0)).epsilon(1e-2));

  Ensemble zero;
  zero.distance = abs_first();
  zero.signals.push_back(
      scalar_on_interval(0.0, 1.0, [](double) { return 0.0; }));
  CHECK_THROWS_AS(fit_growth_gamma(zero, V, 1.0), std::invalid_argument);
}

TEST_CASE("slack folds absolute and relative tolerances") {
  Slack s;
  CHECK(s.bound(0.0) == 1e-9);
  CHECK(s.bound(2.0) == doctest::Approx(2.0 + 1e-9 + 2e-9).epsilon(1e-16));
  Slack wide{0.5, 0.0};
  CHECK(wide.bound(-3.0) == -2.5);
}
