#include "tscale/scenarios.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <stdexcept>

#include "tscale/numeric.hpp"

namespace tscale {

namespace {

void require(bool ok, const std::string& msg) {
  if (!ok) throw std::invalid_argument(msg);
}

bool same_bits(const Vec& a, const Vec& b) {
  return a.size() == b.size() &&
         std::equal(a.data(), a.data() + a.size(), b.data());
}

}  // namespace

Vec decay_field(const Vec& x) {
  Vec f(2);
  f << -x[0] + x[1] * x[1], -x[1] - x[0] * x[1];
  return f;
}

Example1Result example1_continuous(const Vec& x0, double horizon,
                                   double step) {
  require(x0.size() == 2, "state dimension must be 2");
  require(horizon > 0.0 && step > 0.0 && step <= horizon,
          "need 0 < step <= horizon");
  std::vector<double> ts;
  ts.push_back(0.0);
  for (long i = 1; i * step < horizon - step * 1e-9; ++i)
    ts.push_back(static_cast<double>(i) * step);
  ts.push_back(horizon);

  const VectorField f = [](const Vec& x) { return decay_field(x); };
  std::vector<Vec> xs;
  xs.reserve(ts.size());
  xs.push_back(x0);
  for (std::size_t i = 0; i + 1 < ts.size(); ++i)
    xs.push_back(rk4_step(f, xs.back(), ts[i + 1] - ts[i]));

  const double d0 = x0.norm();
  const double tol = 1e-4;
  double max_err = 0.0, at_t = 0.0, at_obs = 0.0, at_exp = 0.0;
  for (std::size_t i = 0; i < ts.size(); ++i) {
    double expect = std::exp(-ts[i]) * d0;
    double err = std::abs(xs[i].norm() - expect);
    if (err > max_err) {
      max_err = err;
      at_t = ts[i];
      at_obs = xs[i].norm();
      at_exp = expect;
    }
  }

  Example1Result out;
  out.report.check = "exp_decay";
  out.report.pass = max_err <= tol;
  out.report.margin = tol - max_err;
  out.report.checked_pairs = static_cast<long>(ts.size());
  out.report.params = {{"x0", {x0[0], x0[1]}},
                       {"horizon", horizon},
                       {"step", step},
                       {"tol", tol}};
  out.report.resolution = {{"max_abs_err", max_err},
                           {"at_t", at_t},
                           {"grid_points", ts.size()}};
  if (!out.report.pass)
    out.report.witness = Witness{0, at_t, at_t, at_obs, at_exp};

  GeneralizedTimeScale dom({Segment{0.0, horizon}}, TailKind::Closed);
  out.signal = Signal(std::move(dom), {std::move(ts)}, {std::move(xs)});
  return out;
}

Example1Result example1_discrete(const Vec& x0, double r, int n_steps) {
  require(x0.size() == 2, "state dimension must be 2");
  require(r > 1e-8, "step r must be positive");
  require(n_steps >= 1, "need at least one step");

  std::vector<double> ts{0.0};
  std::vector<Vec> xs{x0};
  double max_rel = 0.0;
  double worst_s = 0.0, worst_lhs = 0.0, worst_rhs = 0.0;
  bool divergent = false;
  for (int k = 0; k < n_steps; ++k) {
    const Vec& x = xs.back();
    double v = x[0] * x[0] + x[1] * x[1];
    if (v > 1e150) {
      divergent = true;
      break;
    }
    // factored Euler update: exact when 1 - r is a power of two and x2 = 0
    Vec y(2);
    y << (1.0 - r) * x[0] + r * (x[1] * x[1]),
        (1.0 - r) * x[1] - r * (x[0] * x[1]);
    double lhs = y[0] * y[0] + y[1] * y[1];
    double rhs = v * ((r - 1.0) * (r - 1.0) + r * r * (x[1] * x[1]));
    double rel = std::abs(lhs - rhs) / std::max(1.0, std::abs(rhs));
    if (rel > max_rel) {
      max_rel = rel;
      worst_s = ts.back();
      worst_lhs = lhs;
      worst_rhs = rhs;
    }
    ts.push_back(static_cast<double>(k + 1) * r);
    xs.push_back(std::move(y));
  }

  Example1Result out;
  out.report.check = "euler_v_identity";
  const double tol = 1e-9;
  out.report.pass = max_rel <= tol;
  out.report.margin = tol - max_rel;
  out.report.checked_pairs = static_cast<long>(ts.size()) - 1;
  out.report.params = {
      {"x0", {x0[0], x0[1]}}, {"r", r}, {"n_steps", n_steps}, {"tol", tol}};
  out.report.resolution = {{"max_rel_err", max_rel},
                           {"divergent", divergent},
                           {"steps_realized", ts.size() - 1},
                           {"worst_lhs", worst_lhs},
                           {"worst_rhs", worst_rhs}};
  if (!out.report.pass) {
    std::size_t k = static_cast<std::size_t>(worst_s / r + 0.5);
    out.report.witness = Witness{0, worst_s, worst_s + r, xs[k].norm(),
                                 xs[std::min(k + 1, xs.size() - 1)].norm()};
  }

  std::vector<Segment> segs;
  std::vector<std::vector<double>> grids;
  std::vector<std::vector<Vec>> vals;
  for (std::size_t k = 0; k < ts.size(); ++k) {
    segs.push_back(Segment{ts[k], ts[k]});
    grids.push_back({ts[k]});
    vals.push_back({xs[k]});
  }
  GeneralizedTimeScale dom(std::move(segs), TailKind::Closed,
                           std::min(kDefaultTolT, r / 4.0));
  out.signal = Signal(std::move(dom), std::move(grids), std::move(vals));
  return out;
}

int example2_mode(const Vec& x) {
  return (x[0] + 4.0 * x[1]) * (x[0] - 2.0 * x[1]) <= 0.0 ? 0 : 1;
}

Vec example2_field(const Vec& x, int mode) {
  Vec f(2);
  if (mode == 0)
    f << 10.0 * x[1], 0.0;
  else
    f << 1.5 * x[0] + 2.0 * x[1], -2.0 * x[0] - 0.5 * x[1];
  return f;
}

namespace {

double example2_v(const Vec& x) {
  double s = x[0] + x[1];
  return 2.0 * s * s + x[1] * x[1];
}

double angular_rate(const Vec& x, int mode) {
  Vec f = example2_field(x, mode);
  return (f[1] * x[0] - f[0] * x[1]) / x.squaredNorm();
}

}  // namespace

void to_json(nlohmann::json& j, const SwitchEventLog& log) {
  nlohmann::json events = nlohmann::json::array();
  for (const SwitchEvent& e : log.events)
    events.push_back({{"t", e.time},
                      {"from", e.from_mode},
                      {"to", e.to_mode},
                      {"state", {e.state[0], e.state[1]}},
                      {"V", e.v_value}});
  nlohmann::json samples = nlohmann::json::array();
  for (auto& [t, rate] : log.rate_samples) samples.push_back({t, rate});
  j = {{"events", std::move(events)},
       {"dwell",
        {{"mode0", {{"min", log.tau_min[0]}, {"max", log.tau_max[0]}}},
         {"mode1", {{"min", log.tau_min[1]}, {"max", log.tau_max[1]}}}}},
       {"angular_rate",
        {{"min", log.rate_min},
         {"max", log.rate_max},
         {"samples", std::move(samples)}}},
       {"converged", log.converged},
       {"end_time", log.end_time}};
}

Example2Result example2_switched(const Vec& x0, double horizon, double step) {
  require(x0.size() == 2, "state dimension must be 2");
  require(horizon > 0.0 && step > 0.0 && step <= horizon,
          "need 0 < step <= horizon");
  Example2Result out;
  const double n0 = x0.norm();
  if (n0 == 0.0) {
    // trivial solution: stays at the origin, no switching structure
    out.log.converged = true;
    out.log.end_time = horizon;
    GeneralizedTimeScale dom({Segment{0.0, horizon}}, TailKind::Closed);
    out.signal = Signal(std::move(dom), {{0.0, horizon}},
                        {{Vec::Zero(2), Vec::Zero(2)}});
    return out;
  }

  const double stop_norm = 1e-4 * n0;
  const double event_tol = 1e-12;
  const int sample_stride = 211;

  int mode = example2_mode(x0);
  double t = 0.0;
  Vec x = x0;
  std::vector<double> ts{0.0};
  std::vector<Vec> xs{x0};
  double last_switch = kNaN;

  auto observe_rate = [&](double when, const Vec& at, int m) {
    if (at.squaredNorm() <= 0.0) return;
    double rate = angular_rate(at, m);
    out.log.rate_min = std::min(out.log.rate_min, rate);
    out.log.rate_max = std::max(out.log.rate_max, rate);
    if (ts.size() % sample_stride == 1)
      out.log.rate_samples.emplace_back(when, rate);
  };
  observe_rate(0.0, x0, mode);

  const VectorField fields[2] = {
      [](const Vec& y) { return example2_field(y, 0); },
      [](const Vec& y) { return example2_field(y, 1); }};

  while (true) {
    double remaining = horizon - t;
    if (remaining <= step * 1e-12) break;
    double h = std::min(step, remaining);
    Vec y = rk4_step(fields[mode], x, h);
    if (example2_mode(y) != mode) {
      // bisect the earliest surface crossing within (0, h]
      double lo = 0.0, hi = h;
      while (hi - lo > event_tol) {
        double mid = 0.5 * (lo + hi);
        if (example2_mode(rk4_step(fields[mode], x, mid)) != mode)
          hi = mid;
        else
          lo = mid;
      }
      y = rk4_step(fields[mode], x, hi);
      int to = example2_mode(y);
      double t_sw = t + hi;
      out.log.events.push_back(
          SwitchEvent{t_sw, mode, to, y, example2_v(y)});
      if (std::isfinite(last_switch)) {
        double dwell = t_sw - last_switch;
        out.log.tau_min[mode] = std::min(out.log.tau_min[mode], dwell);
        out.log.tau_max[mode] = std::max(out.log.tau_max[mode], dwell);
      }
      last_switch = t_sw;
      mode = to;
      t = t_sw;
    } else {
      t += h;
    }
    x = std::move(y);
    ts.push_back(t);
    xs.push_back(x);
    observe_rate(t, x, mode);
    if (x.norm() <= stop_norm) {
      out.log.converged = true;
      break;
    }
  }
  out.log.end_time = t;

  GeneralizedTimeScale dom({Segment{0.0, ts.back()}}, TailKind::Closed);
  out.signal = Signal(std::move(dom), {std::move(ts)}, {std::move(xs)});
  return out;
}

HybridSystem bouncing_ball_system(double g, double theta) {
  require(g > 0.0, "gravity must be positive");
  require(theta >= 0.0 && theta < 1.0, "restitution must lie in [0, 1)");
  HybridSystem sys;
  sys.in_C = [](const Vec& x) { return x[0] >= -1e-9; };
  sys.in_D = [](const Vec& x) { return x[0] <= 0.0 && x[1] <= 0.0; };
  sys.flow = [g](const Vec& x) {
    Vec f(2);
    f << x[1], -g;
    return f;
  };
  sys.jump = [theta](const Vec& x) {
    Vec y(2);
    y << x[0], -theta * x[1];
    return y;
  };
  return sys;
}

void write_impacts_csv(std::ostream& os, const ImpactTable& table) {
  os << "n,t_n,v_minus,v_plus,gap\n";
  for (const ImpactRow& row : table.rows)
    os << row.n << ',' << format_double(row.t) << ','
       << format_double(row.v_minus) << ',' << format_double(row.v_plus)
       << ',' << format_double(row.gap) << '\n';
}

BallResult bouncing_ball(double h0, double v0, double g, double theta,
                         const SolverConfig& cfg) {
  require(h0 >= 0.0, "initial height must be >= 0");
  Vec x0(2);
  x0 << h0, v0;
  BallResult out;
  out.sol = solve(bouncing_ball_system(g, theta), x0, cfg);
  const Signal& sig = out.sol.signal;

  for (long k = 0; k < out.sol.jumps; ++k) {
    std::size_t ks = static_cast<std::size_t>(k);
    ImpactRow row;
    row.n = static_cast<int>(k + 1);
    row.t = continuous_part(sig.dom(), sig.grid(ks).back());
    row.v_minus = sig.values(ks).back()[1];
    row.v_plus = sig.values(ks + 1).front()[1];
    row.gap = kNaN;
    out.impacts.rows.push_back(row);
  }
  for (std::size_t i = 0; i + 1 < out.impacts.rows.size(); ++i)
    out.impacts.rows[i].gap =
        out.impacts.rows[i + 1].t - out.impacts.rows[i].t;

  double ratio_sum = 0.0;
  long ratio_n = 0;
  for (const ImpactRow& row : out.impacts.rows)
    if (row.v_minus < 0.0) {
      ratio_sum += row.v_plus / -row.v_minus;
      ++ratio_n;
    }
  out.impacts.theta_estimate = ratio_n ? ratio_sum / ratio_n : 0.0;
  if (!out.impacts.rows.empty() && out.impacts.theta_estimate < 1.0) {
    const ImpactRow& last = out.impacts.rows.back();
    out.impacts.t_inf_estimate =
        last.t + (2.0 * last.v_plus / g) / (1.0 - out.impacts.theta_estimate);
  } else {
    out.impacts.t_inf_estimate = kNaN;
  }
  return out;
}

RealTimeTrace realtime_projection(const Signal& sig) {
  const auto& segs = sig.dom().segments();
  std::vector<double> gaps(segs.size(), 0.0);
  NeumaierSum acc;
  double min_gap = kInf;
  for (std::size_t k = 1; k < segs.size(); ++k) {
    min_gap = std::min(min_gap, segs[k].lo - segs[k - 1].hi);
    acc.add(segs[k].lo - segs[k - 1].hi);
    gaps[k] = acc.value();
  }
  RealTimeTrace out;
  // instants closer than the scale can resolve share a group; gaps bound the
  // resolution so accumulation-adjacent flights stay apart from the closure
  const double tol = std::min(1e-9, min_gap / 4.0);
  sig.for_each([&](std::size_t k, double t, const Vec& v) {
    double s = t - gaps[k];
    if (out.groups.empty() || s - out.groups.back().s > tol) {
      out.groups.push_back(RealTimeTrace::Group{s, {v}});
      return;
    }
    auto& states = out.groups.back().states;
    for (const Vec& held : states)
      if (same_bits(held, v)) return;
    states.push_back(v);
  });
  return out;
}

ZenoResult bouncing_ball_zeno(double h0, double v0, double g, double theta) {
  require(h0 >= 0.0, "initial height must be >= 0");
  require(g > 0.0, "gravity must be positive");
  require(theta >= 0.0 && theta < 1.0, "restitution must lie in [0, 1)");

  const double V1 = std::sqrt(v0 * v0 + 2.0 * g * h0);
  const double t1 = (v0 + V1) / g;
  const double t_inf =
      theta > 0.0 ? t1 + (2.0 * V1 / g) * (theta / (1.0 - theta)) : t1;

  // flight n: physical [t_n, t_{n+1}] shifted right by R_n = 1 - 2^{-n},
  // the n-th jump gap being (1/2)^n
  std::vector<Segment> segs;
  std::vector<std::vector<double>> grids;
  std::vector<std::vector<Vec>> vals;

  auto emit_flight = [&](double t_lo, double dur, double launch_h,
                         double launch_v, double impact_v, double shift,
                         int pts) {
    double lo = t_lo + shift;
    double hi = lo + dur;
    std::vector<double> g_;
    std::vector<Vec> v_;
    if (dur <= 0.0) {
      Vec p(2);
      p << launch_h, launch_v;
      segs.push_back(Segment{lo, lo});
      grids.push_back({lo});
      vals.push_back({p});
      return;
    }
    g_.push_back(lo);
    Vec a(2);
    a << launch_h, launch_v;
    v_.push_back(a);
    for (int j = 1; j < pts; ++j) {
      double tau = dur * j / pts;
      double tg = lo + tau;
      if (tg <= g_.back() || tg >= hi) continue;
      Vec p(2);
      p << launch_h + tau * (launch_v - g * tau / 2.0), launch_v - g * tau;
      g_.push_back(tg);
      v_.push_back(p);
    }
    g_.push_back(hi);
    Vec b(2);
    b << 0.0, impact_v;
    v_.push_back(b);
    segs.push_back(Segment{lo, hi});
    grids.push_back(std::move(g_));
    vals.push_back(std::move(v_));
  };

  // flight 0 from (h0, v0)
  emit_flight(0.0, t1, h0, v0, -V1, 0.0, 64);

  double t_n = t1;
  double R = 0.0;  // gap budget spent so far
  const int cap = 44;
  for (int n = 1; n <= cap; ++n) {
    double w = std::pow(theta, n) * V1;  // launch speed of flight n
    double dur = 2.0 * w / g;
    double gap = std::pow(0.5, n);
    double R_next = R + gap;
    double lo = t_n + R_next;
    if (lo <= segs.back().hi) break;  // representability guard
    emit_flight(t_n, dur, 0.0, w, -w, R_next, 16);
    R = R_next;
    t_n += dur;
    double tail = theta > 0.0 ? dur * theta / (1.0 - theta) : 0.0;
    if (dur > 0.0 && tail <= 1e-13) break;
  }

  // closure point at t_inf + 1 carries the rest state and an unbounded tail
  const double closure = t_inf + 1.0;
  require(closure > segs.back().hi, "closure collided with the last flight");
  std::vector<double> cg;
  std::vector<Vec> cv;
  for (int j = 0; j <= 8; ++j) {
    cg.push_back(closure + 0.25 * j);
    cv.push_back(Vec::Zero(2));
  }
  segs.push_back(Segment{closure, kInf});
  grids.push_back(std::move(cg));
  vals.push_back(std::move(cv));

  double min_gap = kInf;
  for (std::size_t k = 1; k < segs.size(); ++k)
    min_gap = std::min(min_gap, segs[k].lo - segs[k - 1].hi);
  double tol = std::min(1e-15, min_gap / 4.0);

  ZenoResult out;
  GeneralizedTimeScale dom(std::move(segs), TailKind::Unbounded, tol);
  out.signal = Signal(std::move(dom), std::move(grids), std::move(vals));
  out.projection = realtime_projection(out.signal);
  out.t_inf = t_inf;
  out.closure = closure;
  return out;
}

}  // namespace tscale
