#include "tscale/stability.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace tscale {

namespace {

void require(bool ok, const std::string& msg) {
  if (!ok) throw std::invalid_argument(msg);
}

}  // namespace

ClassKInfFn ClassKInfFn::identity() { return power(1.0, 1.0); }

ClassKInfFn ClassKInfFn::power(double coeff, double exponent) {
  require(std::isfinite(coeff) && coeff > 0.0, "power coefficient must be > 0");
  require(std::isfinite(exponent) && exponent > 0.0,
          "power exponent must be > 0");
  ClassKInfFn f;
  f.chain_.push_back(Power{coeff, exponent});
  return f;
}

ClassKInfFn ClassKInfFn::table(std::vector<double> xs, std::vector<double> ys,
                               double tail_slope) {
  require(!xs.empty() && xs.size() == ys.size(),
          "table needs matching nonempty sample lists");
  require(xs.front() == 0.0 && ys.front() == 0.0,
          "table must start at the sample (0, 0)");
  for (std::size_t i = 1; i < xs.size(); ++i)
    require(xs[i] > xs[i - 1] && ys[i] > ys[i - 1],
            "table samples must be strictly increasing");
  require(std::isfinite(tail_slope) && tail_slope > 0.0,
          "table tail slope must be > 0");
  ClassKInfFn f;
  f.chain_.push_back(Table{std::move(xs), std::move(ys), tail_slope});
  return f;
}

namespace {

double eval_power(const double c, const double e, double s) {
  if (e == 1.0) return c == 1.0 ? s : c * s;
  return c * std::pow(s, e);
}

}  // namespace

double ClassKInfFn::operator()(double s) const {
  if (!(s >= 0.0))
    throw std::domain_error("class K-infinity functions take s >= 0");
  for (const Atom& atom : chain_) {
    if (const Power* p = std::get_if<Power>(&atom)) {
      s = eval_power(p->c, p->e, s);
    } else {
      const Table& t = std::get<Table>(atom);
      if (s >= t.xs.back()) {
        s = t.ys.back() + t.slope * (s - t.xs.back());
      } else {
        auto it = std::upper_bound(t.xs.begin(), t.xs.end(), s);
        std::size_t j = static_cast<std::size_t>(it - t.xs.begin());
        // j >= 1 because xs.front() == 0 <= s
        double w = (s - t.xs[j - 1]) / (t.xs[j] - t.xs[j - 1]);
        s = t.ys[j - 1] + w * (t.ys[j] - t.ys[j - 1]);
      }
    }
  }
  return s;
}

ClassKInfFn ClassKInfFn::inverse() const {
  ClassKInfFn inv;
  for (auto it = chain_.rbegin(); it != chain_.rend(); ++it) {
    if (const Power* p = std::get_if<Power>(&*it)) {
      double e = 1.0 / p->e;
      double c = p->e == 1.0 ? 1.0 / p->c : std::pow(p->c, -1.0 / p->e);
      inv.chain_.push_back(Power{c, e});
    } else {
      const Table& t = std::get<Table>(*it);
      inv.chain_.push_back(Table{t.ys, t.xs, 1.0 / t.slope});
    }
  }
  inv.simplify();
  return inv;
}

void ClassKInfFn::simplify() {
  std::vector<Atom> out;
  for (Atom& atom : chain_) {
    Power* p = std::get_if<Power>(&atom);
    if (p && !out.empty()) {
      if (Power* q = std::get_if<Power>(&out.back())) {
        // q applied first, p second: p.c * (q.c * s^{q.e})^{p.e}
        double c =
            p->e == 1.0 ? p->c * q->c : p->c * std::pow(q->c, p->e);
        *q = Power{c, q->e * p->e};
        continue;
      }
    }
    if (p && p->c == 1.0 && p->e == 1.0 && !chain_.empty() &&
        chain_.size() > 1)
      continue;  // drop exact identities inside longer chains
    out.push_back(std::move(atom));
  }
  if (out.empty()) out.push_back(Power{1.0, 1.0});
  chain_ = std::move(out);
}

ClassKInfFn compose(const ClassKInfFn& outer, const ClassKInfFn& inner) {
  ClassKInfFn f;
  f.chain_ = inner.chain_;
  f.chain_.insert(f.chain_.end(), outer.chain_.begin(), outer.chain_.end());
  f.simplify();
  return f;
}

bool ClassKInfFn::is_power() const {
  return chain_.size() == 1 && std::holds_alternative<Power>(chain_[0]);
}

double ClassKInfFn::power_coeff() const {
  require(is_power(), "not a pure power function");
  return std::get<Power>(chain_[0]).c;
}

double ClassKInfFn::power_exponent() const {
  require(is_power(), "not a pure power function");
  return std::get<Power>(chain_[0]).e;
}

std::string ClassKInfFn::describe() const {
  std::string out;
  for (const Atom& atom : chain_) {
    if (!out.empty()) out += " o ";
    if (const Power* p = std::get_if<Power>(&atom)) {
      if (p->c == 1.0 && p->e == 1.0)
        out += "identity";
      else
        out += "power:" + format_double(p->c) + "," + format_double(p->e);
    } else {
      out += "table[" +
             std::to_string(std::get<Table>(atom).xs.size()) + "]";
    }
  }
  return out;
}

ClassKInfFn ugs_bound_from_kweak(const ClassKInfFn& alpha,
                                 const ClassKInfFn& beta,
                                 const ClassKInfFn& gamma) {
  return compose(compose(alpha.inverse(), gamma), beta);
}

namespace {

// Grid points of one signal in ascending order with per-point metadata.
struct Flat {
  std::vector<double> ts;
  std::vector<double> d;
  std::vector<double> v;
};

Flat flatten(const Signal& x, const ValueMap* dist, const ValueMap* V) {
  Flat f;
  f.ts.reserve(x.total_points());
  if (dist) f.d.reserve(x.total_points());
  if (V) f.v.reserve(x.total_points());
  x.for_each([&](std::size_t, double t, const Vec& val) {
    f.ts.push_back(t);
    if (dist) {
      double dv = (*dist)(val);
      if (!(dv >= 0.0))
        throw std::invalid_argument("distance measure must be >= 0");
      f.d.push_back(dv);
    }
    if (V) f.v.push_back((*V)(val));
  });
  return f;
}

void validate_ensemble(const Ensemble& E) {
  if (!E.signals.empty())
    require(static_cast<bool>(E.distance),
            "ensemble needs a distance measure");
  for (const Signal& s : E.signals)
    require(s.dim() == E.signals.front().dim(),
            "ensemble signals must share one value dimension");
}

// Suffix maxima of vals plus the index attaining each maximum.
void suffix_max(const std::vector<double>& vals, std::vector<double>& M,
                std::vector<std::size_t>& A) {
  std::size_t n = vals.size();
  M.assign(n, 0.0);
  A.assign(n, 0);
  if (n == 0) return;
  M[n - 1] = vals[n - 1];
  A[n - 1] = n - 1;
  for (std::size_t i = n - 1; i-- > 0;) {
    if (vals[i] >= M[i + 1]) {
      M[i] = vals[i];
      A[i] = i;
    } else {
      M[i] = M[i + 1];
      A[i] = A[i + 1];
    }
  }
}

// Shared bookkeeping: worst (most negative) raw margin wins the witness.
struct Tracker {
  double margin = kInf;
  bool pass = true;
  Witness witness;
  bool have_witness = false;

  void observe(double raw, bool ok, const Witness& w) {
    if (raw < margin) {
      margin = raw;
      witness = w;
      have_witness = true;
    }
    if (!ok) pass = false;
  }
};

void finish(StabilityReport& rep, const Tracker& tr, long pairs, long points,
            std::size_t nsignals) {
  rep.pass = tr.pass;
  rep.margin = tr.margin;
  rep.checked_pairs = pairs;
  if (!tr.pass && tr.have_witness) rep.witness = tr.witness;
  rep.resolution["signals"] = nsignals;
  rep.resolution["grid_points"] = points;
  rep.resolution["checked_pairs"] = pairs;
  if (std::isfinite(tr.margin)) rep.resolution["margin"] = tr.margin;
}

}  // namespace

void to_json(nlohmann::json& j, const StabilityReport& rep) {
  nlohmann::json w = nullptr;
  if (rep.witness) {
    w = {{"signal", rep.witness->signal},
         {"s", rep.witness->s},
         {"t", rep.witness->t},
         {"d_s", rep.witness->d_s},
         {"d_t", rep.witness->d_t}};
  }
  j = {{"check", rep.check},
       {"verdict", rep.pass ? "pass" : "fail"},
       {"witness", std::move(w)},
       {"params", rep.params},
       {"resolution", rep.resolution}};
}

StabilityReport check_ugs(const Ensemble& E, const ClassKInfFn& beta,
                          Slack slack) {
  validate_ensemble(E);
  StabilityReport rep;
  rep.check = "ugs";
  rep.params = {{"beta", beta.describe()},
                {"slack_abs", slack.abs},
                {"slack_rel", slack.rel}};
  Tracker tr;
  long pairs = 0, points = 0;
  std::vector<double> M;
  std::vector<std::size_t> A;
  for (std::size_t si = 0; si < E.signals.size(); ++si) {
    Flat f = flatten(E.signals[si], &E.distance, nullptr);
    std::size_t n = f.ts.size();
    points += static_cast<long>(n);
    pairs += static_cast<long>(n) * static_cast<long>(n + 1) / 2;
    suffix_max(f.d, M, A);
    for (std::size_t i = 0; i < n; ++i) {
      double b = beta(f.d[i]);
      bool ok = M[i] <= slack.bound(b);
      tr.observe(b - M[i], ok,
                 Witness{static_cast<int>(si), f.ts[i], f.ts[A[i]], f.d[i],
                         M[i]});
    }
  }
  finish(rep, tr, pairs, points, E.signals.size());
  return rep;
}

StabilityReport check_attractivity(const Ensemble& E, double eps, double T,
                                   Slack slack) {
  require(eps > 0.0 && eps < 1.0, "eps must lie in (0, 1)");
  require(T > 0.0 && std::isfinite(T), "T must be positive");
  validate_ensemble(E);
  StabilityReport rep;
  rep.check = "attractivity";
  rep.params = {{"eps", eps},
                {"T", T},
                {"slack_abs", slack.abs},
                {"slack_rel", slack.rel}};
  Tracker tr;
  long pairs = 0, points = 0;
  std::vector<double> M;
  std::vector<std::size_t> A;
  const double cap = 1.0 / eps;
  for (std::size_t si = 0; si < E.signals.size(); ++si) {
    Flat f = flatten(E.signals[si], &E.distance, nullptr);
    std::size_t n = f.ts.size();
    points += static_cast<long>(n);
    suffix_max(f.d, M, A);
    std::size_t j = 0;
    for (std::size_t i = 0; i < n; ++i) {
      while (j < n && f.ts[j] < f.ts[i] + T) ++j;
      if (j >= n) break;
      if (f.d[i] > cap) continue;
      pairs += static_cast<long>(n - j);
      bool ok = M[j] <= slack.bound(eps);
      tr.observe(eps - M[j], ok,
                 Witness{static_cast<int>(si), f.ts[i], f.ts[A[j]], f.d[i],
                         M[j]});
    }
  }
  finish(rep, tr, pairs, points, E.signals.size());
  return rep;
}

StabilityReport check_k_weak(const Ensemble& E, const ValueMap& V,
                             const ClassKInfFn& alpha, const ClassKInfFn& beta,
                             const ClassKInfFn& gamma, Slack slack) {
  validate_ensemble(E);
  require(static_cast<bool>(V), "check_k_weak needs a scalarizer V");
  StabilityReport rep;
  rep.check = "k_weak";
  rep.params = {{"alpha", alpha.describe()},
                {"beta", beta.describe()},
                {"gamma", gamma.describe()},
                {"slack_abs", slack.abs},
                {"slack_rel", slack.rel}};
  Tracker tr;
  std::string violated = "none";
  long pairs = 0, points = 0;
  std::vector<double> M;
  std::vector<std::size_t> A;
  for (std::size_t si = 0; si < E.signals.size(); ++si) {
    Flat f = flatten(E.signals[si], &E.distance, &V);
    std::size_t n = f.ts.size();
    points += static_cast<long>(n);
    pairs += static_cast<long>(n) * static_cast<long>(n + 1) / 2;
    for (std::size_t i = 0; i < n; ++i) {
      Witness w{static_cast<int>(si), f.ts[i], f.ts[i], f.d[i], f.d[i]};
      double lo = alpha(f.d[i]);
      bool ok1 = lo <= slack.bound(f.v[i]);
      if (!ok1 && tr.pass) violated = "sandwich_lower";
      tr.observe(f.v[i] - lo, ok1, w);
      double hi = beta(f.d[i]);
      bool ok2 = f.v[i] <= slack.bound(hi);
      if (!ok2 && tr.pass) violated = "sandwich_upper";
      tr.observe(hi - f.v[i], ok2, w);
    }
    suffix_max(f.v, M, A);
    for (std::size_t i = 0; i < n; ++i) {
      double cap = gamma(f.v[i]);
      bool ok = M[i] <= slack.bound(cap);
      if (!ok && tr.pass) violated = "monotone_gain";
      tr.observe(cap - M[i], ok,
                 Witness{static_cast<int>(si), f.ts[i], f.ts[A[i]], f.d[i],
                         f.d[A[i]]});
    }
  }
  finish(rep, tr, pairs, points, E.signals.size());
  rep.resolution["violated"] = rep.pass ? "none" : violated;
  return rep;
}

StabilityReport falsify_c1(const Ensemble& E, double eps, double T,
                           Slack slack) {
  require(eps > 0.0 && eps < 1.0, "eps must lie in (0, 1)");
  require(T > 0.0 && std::isfinite(T), "T must be positive");
  validate_ensemble(E);
  StabilityReport rep;
  rep.check = "c1";
  rep.params = {{"eps", eps},
                {"T", T},
                {"slack_abs", slack.abs},
                {"slack_rel", slack.rel}};
  Tracker tr;
  long pairs = 0, points = 0;
  const double cap = 1.0 / eps;
  for (std::size_t si = 0; si < E.signals.size() && tr.pass; ++si) {
    Flat f = flatten(E.signals[si], &E.distance, nullptr);
    std::size_t n = f.ts.size();
    points += static_cast<long>(n);
    std::size_t i = 0;
    while (i < n) {
      if (!(f.d[i] >= eps && f.d[i] <= cap)) {
        ++i;
        continue;
      }
      std::size_t b = i;
      while (b + 1 < n && f.d[b + 1] >= eps && f.d[b + 1] <= cap) ++b;
      double span = f.ts[b] - f.ts[i];
      long len = static_cast<long>(b - i + 1);
      pairs += len * (len + 1) / 2;
      bool corridor = span >= T;
      // earliest corridor pair: first partner at or beyond s + T
      std::size_t tj = b;
      if (corridor) {
        tj = i;
        while (f.ts[tj] < f.ts[i] + T) ++tj;
      }
      tr.observe(T - span, !corridor,
                 Witness{static_cast<int>(si), f.ts[i], f.ts[tj], f.d[i],
                         f.d[tj]});
      if (corridor) break;
      i = b + 1;
    }
  }
  finish(rep, tr, pairs, points, E.signals.size());
  return rep;
}

StabilityReport check_corollary1(const Ensemble& E, const ValueMap& V,
                                 double M_gap, double eps, double T,
                                 double delta, Slack slack) {
  require(M_gap > 0.0, "gap bound M must be positive");
  require(eps > 0.0 && eps < 1.0, "eps must lie in (0, 1)");
  require(T > 0.0 && delta > 0.0, "T and delta must be positive");
  validate_ensemble(E);
  require(static_cast<bool>(V), "check_corollary1 needs a scalarizer V");
  StabilityReport rep;
  rep.check = "corollary1";
  rep.params = {{"M", M_gap},           {"eps", eps},
                {"T", T},               {"delta", delta},
                {"slack_abs", slack.abs}, {"slack_rel", slack.rel}};
  Tracker tr;
  long pairs = 0, points = 0;
  const double cap = 1.0 / eps;
  double v_band_max = -kInf;
  std::vector<double> M;
  std::vector<std::size_t> A;
  for (std::size_t si = 0; si < E.signals.size(); ++si) {
    const Signal& sig = E.signals[si];
    Flat f = flatten(sig, &E.distance, &V);
    std::size_t n = f.ts.size();
    points += static_cast<long>(n);

    // gap bound sigma(t) <= t + M on the domain
    if (!sig.dom().is_lattice()) {
      const auto& segs = sig.dom().segments();
      for (std::size_t k = 0; k + 1 < segs.size(); ++k) {
        double gap = segs[k + 1].lo - segs[k].hi;
        bool ok = gap <= slack.bound(M_gap);
        double ds = 0.0, dt = 0.0;
        // segment ends are grid points; find their flat d values
        auto it = std::lower_bound(f.ts.begin(), f.ts.end(), segs[k].hi);
        if (it != f.ts.end())
          ds = f.d[static_cast<std::size_t>(it - f.ts.begin())];
        auto it2 = std::lower_bound(f.ts.begin(), f.ts.end(), segs[k + 1].lo);
        if (it2 != f.ts.end())
          dt = f.d[static_cast<std::size_t>(it2 - f.ts.begin())];
        tr.observe(M_gap - gap, ok,
                   Witness{static_cast<int>(si), segs[k].hi, segs[k + 1].lo,
                           ds, dt});
      }
    }

    // V-decrease over in-corridor pairs separated by >= T
    std::size_t i = 0;
    while (i < n) {
      if (!(f.d[i] >= eps && f.d[i] <= cap)) {
        ++i;
        continue;
      }
      std::size_t b = i;
      while (b + 1 < n && f.d[b + 1] >= eps && f.d[b + 1] <= cap) ++b;
      for (std::size_t q = i; q <= b; ++q)
        v_band_max = std::max(v_band_max, f.v[q]);
      // suffix max of V on the run
      std::vector<double> run_v(f.v.begin() + static_cast<long>(i),
                                f.v.begin() + static_cast<long>(b + 1));
      suffix_max(run_v, M, A);
      std::size_t j = i;
      for (std::size_t s = i; s <= b; ++s) {
        if (j < s) j = s;
        while (j <= b && f.ts[j] < f.ts[s] + T) ++j;
        if (j > b) break;
        pairs += static_cast<long>(b - j + 1);
        double need = f.v[s] - delta;
        double worst = M[j - i];
        std::size_t arg = A[j - i] + i;
        bool ok = worst <= slack.bound(need);
        tr.observe(need - worst, ok,
                   Witness{static_cast<int>(si), f.ts[s], f.ts[arg], f.d[s],
                           f.d[arg]});
      }
      i = b + 1;
    }
  }
  finish(rep, tr, pairs, points, E.signals.size());
  if (v_band_max > -kInf) {
    double k = std::floor(v_band_max / delta) + 1.0;
    rep.resolution["corridor_bound_k"] = k;
    rep.resolution["corridor_length_bound"] = k * (T + M_gap);
    rep.resolution["corridor_bound_note"] =
        "k derived from the observed in-corridor V bound";
  }
  return rep;
}

StabilityReport check_strict_decrease(const Signal& sig, const ValueMap& V,
                                      const ClassKInfFn& gamma,
                                      const ValueMap& d, Slack slack) {
  require(static_cast<bool>(V) && static_cast<bool>(d),
          "check_strict_decrease needs V and d");
  StabilityReport rep;
  rep.check = "strict_decrease";
  rep.params = {{"gamma", gamma.describe()},
                {"slack_abs", slack.abs},
                {"slack_rel", slack.rel},
                {"quotient_slack", "10*local spacing"}};
  Ensemble one;
  one.signals.push_back(sig);
  one.distance = d;
  validate_ensemble(one);
  Flat f = flatten(sig, &d, &V);
  Tracker tr;
  long pairs = 0;
  std::size_t n = f.ts.size();
  for (std::size_t i = 0; i + 1 < n; ++i) {
    double h = f.ts[i + 1] - f.ts[i];
    double quotient = (f.v[i + 1] - f.v[i]) / h;
    double bound = -gamma(f.d[i]) + 10.0 * h;
    bool ok = quotient <= slack.bound(bound);
    ++pairs;
    tr.observe(bound - quotient, ok,
               Witness{0, f.ts[i], f.ts[i + 1], f.d[i], f.d[i + 1]});
  }
  finish(rep, tr, pairs, static_cast<long>(n), 1);
  return rep;
}

GrowthFit fit_growth_gamma(const Ensemble& E, const ValueMap& V,
                           double tau_max) {
  require(tau_max >= 0.0 && std::isfinite(tau_max),
          "tau_max must be finite and >= 0");
  validate_ensemble(E);
  require(static_cast<bool>(V), "fit needs a scalarizer V");
  GrowthFit fit;
  fit.tau_max = tau_max;
  double m_hat = 0.0;
  // growth rate along flows (same-segment neighbors), in log space
  std::vector<std::vector<double>> logs;
  for (const Signal& sig : E.signals) {
    for (std::size_t k = 0; k < sig.segment_count(); ++k) {
      const auto& g = sig.grid(k);
      const auto& vs = sig.values(k);
      std::vector<double> lg(g.size());
      for (std::size_t i = 0; i < g.size(); ++i) {
        double v = V(vs[i]);
        require(v > 0.0, "fit requires V > 0 at every grid point");
        lg[i] = std::log(v);
      }
      for (std::size_t i = 0; i + 1 < g.size(); ++i)
        m_hat = std::max(m_hat, (lg[i + 1] - lg[i]) / (g[i + 1] - g[i]));
      logs.push_back(std::move(lg));
    }
  }
  fit.M = m_hat;
  // max draw-up of log V - M*t over same-signal ordered pairs
  double drawup = 0.0;
  std::size_t li = 0;
  for (const Signal& sig : E.signals) {
    double run_min = kInf;
    for (std::size_t k = 0; k < sig.segment_count(); ++k, ++li) {
      const auto& g = sig.grid(k);
      const auto& lg = logs[li];
      for (std::size_t i = 0; i < g.size(); ++i) {
        double w = lg[i] - m_hat * g[i];
        run_min = std::min(run_min, w);
        drawup = std::max(drawup, w - run_min);
      }
    }
  }
  fit.rho = std::exp(drawup);
  double gain = fit.rho * fit.rho * std::exp(2.0 * m_hat * tau_max);
  fit.gamma = ClassKInfFn::power(gain, 1.0);
  return fit;
}

ValueMap named_value_map(const std::string& name) {
  if (name == "norm") return [](const Vec& x) { return x.norm(); };
  if (name == "sqnorm") return [](const Vec& x) { return x.squaredNorm(); };
  if (name == "example2_v")
    return [](const Vec& x) {
      double s = x[0] + x[1];
      return 2.0 * s * s + x[1] * x[1];
    };
  throw std::invalid_argument("unknown value map: " + name);
}

ClassKInfFn parse_kinf(const std::string& spec) {
  if (spec == "identity" || spec == "id") return ClassKInfFn::identity();
  if (spec.rfind("power:", 0) == 0) {
    std::string body = spec.substr(6);
    auto comma = body.find(',');
    require(comma != std::string::npos,
            "power spec must look like power:a,b");
    double a = std::stod(body.substr(0, comma));
    double b = std::stod(body.substr(comma + 1));
    return ClassKInfFn::power(a, b);
  }
  throw std::invalid_argument("unknown class K-infinity spec: " + spec);
}

}  // namespace tscale
