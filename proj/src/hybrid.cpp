#include "tscale/hybrid.hpp"

#include <cmath>
#include <stdexcept>

namespace tscale {

namespace {

void require(bool ok, const std::string& msg) {
  if (!ok) throw std::invalid_argument(msg);
}

}  // namespace

double GapPolicy::gap_length(long n) const {
  if (kind == GapKind::Constant) return delta;
  return std::pow(ratio, static_cast<double>(n));
}

double GapPolicy::remaining_budget(long n) const {
  if (kind == GapKind::Constant) return kInf;
  if (ratio >= 1.0) return kInf;
  return std::pow(ratio, static_cast<double>(n + 1)) / (1.0 - ratio);
}

void to_json(nlohmann::json& j, const SolverConfig& cfg) {
  nlohmann::json gp;
  if (cfg.gap_policy.kind == GapKind::Constant)
    gp = {{"kind", "constant"}, {"delta", cfg.gap_policy.delta}};
  else
    gp = {{"kind", "geometric"}, {"r", cfg.gap_policy.ratio}};
  j = {{"step", cfg.step},         {"event_tol", cfg.event_tol},
       {"gap_policy", gp},         {"max_jumps", cfg.max_jumps},
       {"horizon", cfg.horizon},   {"zeno_tol", cfg.zeno_tol},
       {"zeno_run", cfg.zeno_run}};
  if (cfg.zeno_limit) {
    std::vector<double> v(cfg.zeno_limit->begin(), cfg.zeno_limit->end());
    j["zeno_limit"] = v;
  }
}

void from_json(const nlohmann::json& j, SolverConfig& cfg) {
  SolverConfig out;
  out.step = j.value("step", out.step);
  out.event_tol = j.value("event_tol", out.event_tol);
  out.max_jumps = j.value("max_jumps", out.max_jumps);
  out.horizon = j.value("horizon", out.horizon);
  out.zeno_tol = j.value("zeno_tol", out.zeno_tol);
  out.zeno_run = j.value("zeno_run", out.zeno_run);
  if (j.contains("gap_policy")) {
    const auto& gp = j.at("gap_policy");
    std::string kind = gp.value("kind", std::string("constant"));
    if (kind == "constant") {
      out.gap_policy.kind = GapKind::Constant;
      out.gap_policy.delta = gp.value("delta", 1.0);
    } else if (kind == "geometric") {
      out.gap_policy.kind = GapKind::Geometric;
      out.gap_policy.ratio = gp.value("r", 0.5);
    } else {
      throw std::invalid_argument("gap_policy kind must be constant|geometric");
    }
  }
  if (j.contains("zeno_limit")) {
    auto v = j.at("zeno_limit").get<std::vector<double>>();
    Vec z(static_cast<Eigen::Index>(v.size()));
    for (std::size_t i = 0; i < v.size(); ++i)
      z[static_cast<Eigen::Index>(i)] = v[i];
    out.zeno_limit = std::move(z);
  }
  require(out.step > 0 && std::isfinite(out.step), "step must be positive");
  require(out.event_tol > 0, "event_tol must be positive");
  require(out.horizon > 0, "horizon must be positive");
  require(out.max_jumps >= 0, "max_jumps must be >= 0");
  require(out.zeno_tol > 0 && out.zeno_run > 0,
          "zeno_tol and zeno_run must be positive");
  if (out.gap_policy.kind == GapKind::Constant)
    require(out.gap_policy.delta > 0, "constant gap delta must be positive");
  else
    require(out.gap_policy.ratio > 0 && out.gap_policy.ratio <= 1,
            "geometric gap ratio must lie in (0, 1]");
  cfg = out;
}

std::string to_string(StopReason r) {
  switch (r) {
    case StopReason::HorizonSpent: return "horizon_spent";
    case StopReason::MaxJumps: return "max_jumps";
    case StopReason::ZenoDetected: return "zeno_detected";
    case StopReason::ZenoClosed: return "zeno_closed";
    case StopReason::LeftFlowAndJumpSets: return "left_flow_and_jump_sets";
  }
  return "horizon_spent";
}

Vec rk4_step(const VectorField& f, const Vec& x, double h) {
  Vec k1 = f(x);
  Vec k2 = f(x + (0.5 * h) * k1);
  Vec k3 = f(x + (0.5 * h) * k2);
  Vec k4 = f(x + h * k3);
  return x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

namespace {

// Incrementally grown trace: one segment per inter-jump flow interval.
struct TraceBuilder {
  std::vector<Segment> segs;
  std::vector<std::vector<double>> grids;
  std::vector<std::vector<Vec>> vals;

  void open(double t, Vec x) {
    segs.push_back({t, t});
    grids.push_back({t});
    vals.push_back({std::move(x)});
  }
  void append(double t, Vec x) {
    segs.back().hi = t;
    grids.back().push_back(t);
    vals.back().push_back(std::move(x));
  }
  double min_gap() const {
    double g = kInf;
    for (std::size_t k = 0; k + 1 < segs.size(); ++k)
      g = std::min(g, segs[k + 1].lo - segs[k].hi);
    return g;
  }
};

}  // namespace

SolveResult solve(const HybridSystem& sys, const Vec& x0,
                  const SolverConfig& cfg) {
  require(static_cast<bool>(sys.in_C) && static_cast<bool>(sys.in_D) &&
              static_cast<bool>(sys.flow) && static_cast<bool>(sys.jump),
          "hybrid system needs in_C, in_D, flow, and jump");
  require(cfg.step > 0 && cfg.event_tol > 0 && cfg.horizon > 0,
          "solver config needs positive step, event_tol, horizon");
  if (!sys.in_C(x0) && !sys.in_D(x0))
    throw std::invalid_argument("initial state lies outside C and D");

  SolveResult out;
  TraceBuilder tb;
  Vec x = x0;
  double tau = 0.0;  // scale time
  NeumaierSum tc;    // continuous budget spent
  double flow_dur = 0.0;
  int short_flows = 0;
  tb.open(tau, x);

  auto trigger = [&](const Vec& y) { return sys.in_D(y) || !sys.in_C(y); };

  for (;;) {
    if (sys.in_D(x)) {
      if (short_flows >= cfg.zeno_run) {
        if (cfg.zeno_limit && cfg.gap_policy.kind == GapKind::Geometric &&
            cfg.gap_policy.ratio < 1.0) {
          // spend the whole residual gap budget and land on the limit state
          double closure = tau + cfg.gap_policy.remaining_budget(out.jumps);
          out.zeno_closed = true;
          out.zeno_closure = closure;
          tb.open(closure, *cfg.zeno_limit);
          out.reason = StopReason::ZenoClosed;
          break;
        }
        out.reason = StopReason::ZenoDetected;
        break;
      }
      if (out.jumps >= cfg.max_jumps) {
        out.reason = StopReason::MaxJumps;
        break;
      }
      ++out.jumps;
      double gap = cfg.gap_policy.gap_length(out.jumps);
      x = sys.jump(x);
      tau += gap;
      tb.open(tau, x);
      if (flow_dur < cfg.zeno_tol)
        ++short_flows;
      else
        short_flows = 0;
      flow_dur = 0.0;
      continue;
    }
    if (!sys.in_C(x)) {
      out.reason = StopReason::LeftFlowAndJumpSets;
      break;
    }
    double remaining = cfg.horizon - tc.value();
    if (remaining <= cfg.step * 1e-12) {
      out.reason = StopReason::HorizonSpent;
      break;
    }
    double h = std::min(cfg.step, remaining);
    Vec x_try = rk4_step(sys.flow, x, h);
    if (trigger(x_try)) {
      double lo = 0.0, hi = h;
      while (hi - lo > cfg.event_tol) {
        double mid = 0.5 * (lo + hi);
        if (trigger(rk4_step(sys.flow, x, mid)))
          hi = mid;
        else
          lo = mid;
      }
      x_try = rk4_step(sys.flow, x, hi);
      h = hi;
    }
    x = std::move(x_try);
    tau += h;
    tc.add(h);
    flow_dur += h;
    tb.append(tau, x);
  }

  double tol = kDefaultTolT;
  double mg = tb.min_gap();
  if (mg != kInf) tol = std::min(tol, 0.25 * mg);
  GeneralizedTimeScale dom(std::move(tb.segs), TailKind::Closed, tol);
  out.signal = Signal(std::move(dom), std::move(tb.grids), std::move(tb.vals));
  return out;
}

void to_json(nlohmann::json& j, const ViolationReport& rep) {
  nlohmann::json fv = nlohmann::json::array();
  for (const auto& v : rep.flow_violations)
    fv.push_back({{"t", v.t}, {"residual", v.residual}});
  nlohmann::json jv = nlohmann::json::array();
  for (const auto& v : rep.jump_violations)
    jv.push_back({{"t", v.t}, {"reason", v.reason}});
  j = {{"initial_ok", rep.initial_ok},
       {"flow_violations", std::move(fv)},
       {"jump_violations", std::move(jv)},
       {"max_flow_residual", rep.max_flow_residual},
       {"ok", rep.ok()}};
}

ViolationReport validate(const HybridSystem& sys, const Signal& x,
                         double tol) {
  ViolationReport rep;
  const std::size_t nseg = x.segment_count();
  rep.initial_ok = sys.in_C(x.values(0).front()) || sys.in_D(x.values(0).front());
  for (std::size_t k = 0; k < nseg; ++k) {
    const auto& g = x.grid(k);
    const auto& v = x.values(k);
    for (std::size_t i = 0; i < g.size(); ++i) {
      bool jump_point = (k + 1 < nseg) && (i + 1 == g.size());
      if (jump_point) {
        if (!sys.in_D(v[i]))
          rep.jump_violations.push_back(
              {g[i], "state outside the jump set at a jump instant"});
        const Vec& next = x.values(k + 1).front();
        double dist;
        if (sys.jump_targets) {
          dist = kInf;
          for (const Vec& cand : sys.jump_targets(v[i]))
            dist = std::min(dist, (next - cand).norm());
        } else {
          dist = (next - sys.jump(v[i])).norm();
        }
        if (dist > tol)
          rep.jump_violations.push_back(
              {g[i], "forward jump misses every admissible target (dist = " +
                         format_double(dist) + ")"});
        continue;
      }
      bool last_overall = (k + 1 == nseg) && (i + 1 == g.size());
      if (last_overall) continue;
      if (!sys.in_C(v[i])) {
        rep.flow_violations.push_back({g[i], kInf});
        continue;
      }
      Vec quotient = (v[i + 1] - v[i]) / (g[i + 1] - g[i]);
      double resid = (quotient - sys.flow(v[i])).norm();
      rep.max_flow_residual = std::max(rep.max_flow_residual, resid);
      if (resid > tol) rep.flow_violations.push_back({g[i], resid});
    }
  }
  return rep;
}

bool is_extension(const Signal& base, const Signal& ext, double tol) {
  if (base.dim() != ext.dim()) return false;
  if (!is_subinterval(base.dom(), ext.dom())) return false;
  bool ok = true;
  base.for_each([&](std::size_t, double t, const Vec& v) {
    if (!ok) return;
    try {
      if ((sample(ext, t) - v).norm() > tol) ok = false;
    } catch (const std::domain_error&) {
      ok = false;
    }
  });
  return ok;
}

}  // namespace tscale
