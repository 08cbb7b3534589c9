#include "tscale/domains.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace tscale {

namespace {

void require(bool ok, const std::string& msg) {
  if (!ok) throw std::invalid_argument(msg);
}

}  // namespace

HybridTimeDomain normalize(HybridTimeDomain dom, double tol) {
  require(!dom.pieces.empty(), "hybrid time domain needs at least one piece");
  require(std::abs(dom.pieces.front().lo) <= tol,
          "hybrid time domains start at t = 0");
  dom.pieces.front().lo = 0.0;
  for (std::size_t i = 0; i < dom.pieces.size(); ++i) {
    HtdPiece& p = dom.pieces[i];
    require(p.j == static_cast<long>(i),
            "jump counter must run 0, 1, ... across pieces");
    require(!std::isnan(p.lo) && !std::isnan(p.hi) && p.lo != kInf,
            "piece bounds must be numbers with finite lo");
    bool last = i + 1 == dom.pieces.size();
    if (p.hi == kInf)
      require(last && dom.tail == TailKind::Unbounded,
              "infinite hi only on the final piece of an unbounded domain");
    require(p.hi >= p.lo, "piece needs hi >= lo");
    if (!last) {
      HtdPiece& nx = dom.pieces[i + 1];
      require(std::abs(nx.lo - p.hi) <= tol,
              "consecutive pieces must share their breakpoint");
      // Snapping lo up must not invert a point piece; keep hi == lo with it.
      if (nx.hi != kInf && nx.hi < p.hi) {
        require(p.hi - nx.hi <= tol,
                "consecutive pieces must share their breakpoint");
        nx.hi = p.hi;
      }
      nx.lo = p.hi;
    }
  }
  const HtdPiece& back = dom.pieces.back();
  switch (dom.tail) {
    case TailKind::Closed:
      require(back.hi != kInf, "closed tail requires a finite final piece");
      break;
    case TailKind::HalfOpen:
      require(back.hi != kInf && back.hi > back.lo,
              "half-open tail requires a finite final piece with hi > lo");
      break;
    case TailKind::Unbounded:
      require(back.hi == kInf, "unbounded tail requires final hi = +inf");
      break;
  }
  return dom;
}

void to_json(nlohmann::json& j, const HybridTimeDomain& dom) {
  nlohmann::json pieces = nlohmann::json::array();
  for (const HtdPiece& p : dom.pieces) {
    nlohmann::json e = {{"lo", p.lo}, {"j", p.j}};
    if (p.hi == kInf)
      e["hi"] = nullptr;
    else
      e["hi"] = p.hi;
    pieces.push_back(std::move(e));
  }
  j = {{"pieces", std::move(pieces)}, {"tail", to_string(dom.tail)}};
}

void from_json(const nlohmann::json& j, HybridTimeDomain& dom) {
  HybridTimeDomain out;
  for (const auto& e : j.at("pieces")) {
    HtdPiece p;
    p.lo = e.at("lo").get<double>();
    p.hi = e.at("hi").is_null() ? kInf : e.at("hi").get<double>();
    p.j = e.at("j").get<long>();
    out.pieces.push_back(p);
  }
  out.tail = tail_from_string(j.value("tail", std::string("closed")));
  dom = normalize(std::move(out));
}

GeneralizedTimeScale to_gts(const HybridTimeDomain& dom, double tol_t) {
  std::vector<Segment> segs;
  segs.reserve(dom.pieces.size());
  for (const HtdPiece& p : dom.pieces) {
    double shift = static_cast<double>(p.j);
    segs.push_back({p.lo + shift, p.hi == kInf ? kInf : p.hi + shift});
  }
  return GeneralizedTimeScale(std::move(segs), dom.tail, tol_t);
}

bool is_in_H(const GeneralizedTimeScale& I) {
  if (I.empty()) return false;
  const double tol = I.tol();
  if (I.is_lattice()) {
    const Lattice& L = I.lattice_spec();
    return std::abs(L.start) <= tol && std::abs(L.stride - 1.0) <= tol;
  }
  const auto& segs = I.segments();
  if (std::abs(segs.front().lo) > tol) return false;
  for (std::size_t k = 0; k + 1 < segs.size(); ++k)
    if (std::abs((segs[k + 1].lo - segs[k].hi) - 1.0) > tol) return false;
  return true;
}

HybridTimeDomain to_htd(const GeneralizedTimeScale& I, double horizon) {
  if (!is_in_H(I))
    throw std::domain_error(
        "not in H: the scale is no hybrid-time-domain image "
        "(needs Ini = 0 and unit gaps)");
  if (I.is_lattice()) {
    require(horizon != kInf,
            "lattice scales need a finite horizon to materialize pieces");
    return to_htd(restrict(I, ini(I), horizon), kInf);
  }
  HybridTimeDomain dom;
  const auto& segs = I.segments();
  for (std::size_t k = 0; k < segs.size(); ++k) {
    double shift = static_cast<double>(k);
    HtdPiece p;
    p.lo = segs[k].lo - shift;
    p.hi = segs[k].hi == kInf ? kInf : segs[k].hi - shift;
    p.j = static_cast<long>(k);
    dom.pieces.push_back(p);
  }
  dom.tail = I.tail();
  return normalize(std::move(dom), std::max(I.tol(), 2 * kDefaultTolT));
}

SwitchingSignal normalize(SwitchingSignal sig) {
  require(sig.modes.size() == sig.breakpoints.size() + 1,
          "switching signal needs one more mode than breakpoints");
  double prev = 0.0;
  for (double t : sig.breakpoints) {
    require(std::isfinite(t) && t > prev,
            "breakpoints must be finite, positive, strictly increasing");
    prev = t;
  }
  return sig;
}

void to_json(nlohmann::json& j, const SwitchingSignal& sig) {
  j = {{"breakpoints", sig.breakpoints}, {"modes", sig.modes}};
}

void from_json(const nlohmann::json& j, SwitchingSignal& sig) {
  SwitchingSignal out;
  out.breakpoints = j.at("breakpoints").get<std::vector<double>>();
  out.modes = j.at("modes").get<std::vector<int>>();
  sig = normalize(std::move(out));
}

int mode_at(const SwitchingSignal& sig, double s) {
  require(s >= 0.0, "switching signals are defined on s >= 0");
  auto it =
      std::upper_bound(sig.breakpoints.begin(), sig.breakpoints.end(), s);
  return sig.modes.at(static_cast<std::size_t>(it - sig.breakpoints.begin()));
}

namespace {

// R[n] = sum of the first n gap lengths ratio^1 + ... + ratio^n.
std::vector<double> gap_prefix_sums(std::size_t n, double ratio) {
  std::vector<double> r(n + 1, 0.0);
  NeumaierSum acc;
  double g = 1.0;
  for (std::size_t m = 1; m <= n; ++m) {
    g *= ratio;
    acc.add(g);
    r[m] = acc.value();
  }
  return r;
}

}  // namespace

std::vector<double> sjr(const std::vector<double>& breakpoints, double ratio,
                        double s, double break_tol) {
  require(ratio > 0.0 && ratio <= 1.0, "gap ratio must lie in (0, 1]");
  require(std::isfinite(s) && s >= 0.0, "query time must be finite and >= 0");
  double prev = 0.0;
  for (double t : breakpoints) {
    require(std::isfinite(t) && t > prev, "breakpoints must increase from 0");
    prev = t;
  }
  std::vector<double> R = gap_prefix_sums(breakpoints.size(), ratio);
  std::size_t n_before = 0;
  for (std::size_t i = 0; i < breakpoints.size(); ++i) {
    if (std::abs(s - breakpoints[i]) <= break_tol)
      return {s + R[i], s + R[i + 1]};
    if (breakpoints[i] < s) n_before = i + 1;
  }
  return {s + R[n_before]};
}

Signal embed_switched(const Signal& x, const SwitchingSignal& lambda,
                      double ratio) {
  require(ratio > 0.0 && ratio <= 1.0, "gap ratio must lie in (0, 1]");
  require(lambda.modes.size() == lambda.breakpoints.size() + 1,
          "switching signal needs one more mode than breakpoints");
  require(x.segment_count() == 1,
          "embedding expects a trajectory on a single real-time segment");
  const GeneralizedTimeScale& dom = x.dom();
  require(std::abs(ini(dom)) <= dom.tol(), "trajectory must start at s = 0");
  const double a = fin(dom);
  const double extent = x.grid(0).back();

  std::vector<double> bps;
  double prev_bp = 0.0;
  for (double t : lambda.breakpoints) {
    require(std::isfinite(t) && t > prev_bp,
            "breakpoints must increase from 0");
    prev_bp = t;
    if (t >= a || t >= extent) break;
    bps.push_back(t);
  }
  const std::size_t K = bps.size();
  std::vector<double> R = gap_prefix_sums(K, ratio);

  const auto& g = x.grid(0);
  std::vector<Segment> segs;
  std::vector<std::vector<double>> grids;
  std::vector<std::vector<Vec>> vals;

  auto image_value = [&](double s, int mode) {
    Vec v(x.dim() + 1);
    v.head(x.dim()) = sample(x, s);
    v[x.dim()] = static_cast<double>(mode);
    return v;
  };

  std::size_t cursor = 0;
  for (std::size_t n = 0; n <= K; ++n) {
    double s_lo = n == 0 ? ini(dom) : bps[n - 1];
    bool final_region = n == K;
    double s_hi = final_region ? a : bps[n];
    int mode = lambda.modes.at(n);

    std::vector<double> grid;
    std::vector<Vec> val;
    auto push = [&](double img, const Vec& v) {
      if (!grid.empty() && img <= grid.back()) return;
      grid.push_back(img);
      val.push_back(v);
    };

    push(s_lo + R[n], image_value(s_lo, mode));
    while (cursor < g.size() && g[cursor] <= s_lo) ++cursor;
    while (cursor < g.size() && g[cursor] < s_hi) {
      push(g[cursor] + R[n], image_value(g[cursor], mode));
      ++cursor;
    }
    if (!final_region) {
      push(s_hi + R[n], image_value(s_hi, mode));
      segs.push_back({s_lo + R[n], s_hi + R[n]});
    } else {
      if (fin_attained(dom) && extent > s_lo)
        push(extent + R[n], image_value(extent, mode));
      double seg_hi = s_hi == kInf ? kInf : s_hi + R[n];
      segs.push_back({s_lo + R[n], seg_hi});
    }
    grids.push_back(std::move(grid));
    vals.push_back(std::move(val));
  }

  double tol = dom.tol();
  if (K > 0) tol = std::min(tol, 0.25 * std::pow(ratio, double(K)));
  TailKind tail = dom.tail();
  GeneralizedTimeScale image(std::move(segs), tail, tol);
  return Signal(std::move(image), std::move(grids), std::move(vals));
}

}  // namespace tscale
