#include "tscale/timescale.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace tscale {

namespace {

bool finite(double v) { return std::isfinite(v); }

void require(bool ok, const std::string& msg) {
  if (!ok) throw std::invalid_argument(msg);
}

}  // namespace

std::string to_string(TailKind k) {
  switch (k) {
    case TailKind::Closed: return "closed";
    case TailKind::HalfOpen: return "half_open";
    case TailKind::Unbounded: return "unbounded";
  }
  return "closed";
}

TailKind tail_from_string(const std::string& s) {
  if (s == "closed") return TailKind::Closed;
  if (s == "half_open") return TailKind::HalfOpen;
  if (s == "unbounded") return TailKind::Unbounded;
  throw std::invalid_argument("unknown tail kind: " + s);
}

GeneralizedTimeScale::GeneralizedTimeScale(std::vector<Segment> segments,
                                           TailKind tail, double tol_t)
    : segs_(std::move(segments)), tail_(tail), tol_(tol_t) {
  require(finite(tol_) && tol_ >= 0.0, "tol_t must be finite and >= 0");
  if (segs_.empty()) return;
  for (std::size_t k = 0; k < segs_.size(); ++k) {
    const Segment& s = segs_[k];
    bool last = k + 1 == segs_.size();
    require(finite(s.lo), "segment lo must be finite");
    require(!std::isnan(s.hi), "segment hi must not be NaN");
    require(s.lo <= s.hi, "segment must have lo <= hi");
    if (s.hi == kInf)
      require(last && tail_ == TailKind::Unbounded,
              "infinite hi only on the final segment of an unbounded scale");
    if (!last)
      require(segs_[k + 1].lo - s.hi > tol_,
              "segments must be disjoint with gaps wider than tol_t");
  }
  const Segment& back = segs_.back();
  switch (tail_) {
    case TailKind::Closed:
      require(back.hi != kInf, "closed tail requires a finite final segment");
      break;
    case TailKind::HalfOpen:
      require(back.hi != kInf && back.hi > back.lo,
              "half-open tail requires a finite final segment with hi > lo");
      break;
    case TailKind::Unbounded:
      require(back.hi == kInf, "unbounded tail requires final hi = +inf");
      break;
  }
}

GeneralizedTimeScale GeneralizedTimeScale::lattice(double start, double stride,
                                                   double tol_t) {
  require(finite(start), "lattice start must be finite");
  require(finite(stride) && stride > 0.0, "lattice stride must be positive");
  require(finite(tol_t) && tol_t >= 0.0 && tol_t < stride / 2,
          "tol_t must satisfy 0 <= tol_t < stride/2");
  GeneralizedTimeScale I;
  I.lat_ = Lattice{start, stride};
  I.tail_ = TailKind::Unbounded;
  I.tol_ = tol_t;
  return I;
}

const Lattice& GeneralizedTimeScale::lattice_spec() const {
  if (!lat_) throw std::logic_error("not a lattice scale");
  return *lat_;
}

const std::vector<Segment>& GeneralizedTimeScale::segments() const {
  if (lat_) throw std::logic_error("lattice scale has no explicit segments");
  return segs_;
}

bool GeneralizedTimeScale::contains(double t) const {
  if (std::isnan(t)) return false;
  if (lat_) {
    if (t < lat_->start - tol_) return false;
    double k = std::round((t - lat_->start) / lat_->stride);
    if (k < 0) k = 0;
    return std::abs(t - (lat_->start + k * lat_->stride)) <= tol_;
  }
  for (std::size_t k = 0; k < segs_.size(); ++k) {
    const Segment& s = segs_[k];
    if (t < s.lo - tol_) return false;
    bool last = k + 1 == segs_.size();
    if (s.hi == kInf) return true;
    if (last && tail_ == TailKind::HalfOpen) {
      if (t < s.hi) return true;
    } else if (t <= s.hi + tol_) {
      return true;
    }
  }
  return false;
}

std::size_t GeneralizedTimeScale::segment_of(double t) const {
  if (lat_) throw std::logic_error("segment_of on a lattice scale");
  auto in_seg = [&](std::size_t k) {
    const Segment& s = segs_[k];
    if (t < s.lo - tol_) return false;
    if (s.hi == kInf) return true;
    if (k + 1 == segs_.size() && tail_ == TailKind::HalfOpen) return t < s.hi;
    return t <= s.hi + tol_;
  };
  auto it = std::upper_bound(
      segs_.begin(), segs_.end(), t,
      [](double v, const Segment& s) { return v < s.lo; });
  std::size_t cand = static_cast<std::size_t>(it - segs_.begin());
  if (cand > 0 && in_seg(cand - 1)) return cand - 1;
  if (cand < segs_.size() && in_seg(cand)) return cand;
  throw std::domain_error("t = " + format_double(t) +
                          " is not a member of the time scale");
}

long GeneralizedTimeScale::lattice_index_of(double t) const {
  if (!lat_) throw std::logic_error("lattice_index_of on a segment scale");
  double k = std::round((t - lat_->start) / lat_->stride);
  if (k < 0 || std::abs(t - (lat_->start + k * lat_->stride)) > tol_)
    throw std::domain_error("t = " + format_double(t) +
                            " is not a member of the lattice");
  return static_cast<long>(k);
}

double ini(const GeneralizedTimeScale& I) {
  if (I.empty()) throw std::domain_error("empty time scale has no Ini");
  if (I.is_lattice()) return I.lattice_spec().start;
  return I.segments().front().lo;
}

double fin(const GeneralizedTimeScale& I) {
  if (I.empty()) throw std::domain_error("empty time scale has no Fin");
  if (I.is_lattice()) return kInf;
  return I.segments().back().hi;
}

bool fin_attained(const GeneralizedTimeScale& I) {
  if (I.empty()) throw std::domain_error("empty time scale has no Fin");
  return !I.is_lattice() && I.tail() == TailKind::Closed;
}

double sigma(const GeneralizedTimeScale& I, double t) {
  if (I.is_lattice()) {
    long k = I.lattice_index_of(t);
    const Lattice& L = I.lattice_spec();
    return L.start + static_cast<double>(k + 1) * L.stride;
  }
  std::size_t idx = I.segment_of(t);
  const Segment& s = I.segments()[idx];
  if (s.hi == kInf) return t;
  bool last = idx + 1 == I.segments().size();
  if (t >= s.hi - I.tol()) {
    if (!last) return I.segments()[idx + 1].lo;
    if (I.tail() == TailKind::Closed) return s.hi;
  }
  return t;
}

double graininess(const GeneralizedTimeScale& I, double t) {
  return sigma(I, t) - t;
}

bool is_right_scattered(const GeneralizedTimeScale& I, double t) {
  return sigma(I, t) - t > I.tol();
}

std::vector<double> gap_points(const GeneralizedTimeScale& I, double a,
                               double b) {
  require(!std::isnan(a) && !std::isnan(b) && a <= b,
          "gap_points window needs a <= b");
  std::vector<double> pts;
  if (I.is_lattice()) {
    require(b != kInf, "unbounded right-scattered query on a lattice");
    const Lattice& L = I.lattice_spec();
    double lo = std::max(a, L.start);
    long k0 = static_cast<long>(std::ceil((lo - L.start - I.tol()) / L.stride));
    if (k0 < 0) k0 = 0;
    long k1 = static_cast<long>(std::floor((b - L.start + I.tol()) / L.stride));
    for (long k = k0; k <= k1; ++k)
      pts.push_back(L.start + static_cast<double>(k) * L.stride);
    return pts;
  }
  const auto& segs = I.segments();
  for (std::size_t k = 0; k + 1 < segs.size(); ++k) {
    double p = segs[k].hi;
    if (p >= a - I.tol() && p <= b + I.tol()) pts.push_back(p);
  }
  return pts;
}

namespace {

struct ClipResult {
  std::vector<Segment> segs;
  TailKind tail = TailKind::Closed;
};

// Intersect a segment scale with the window [a, b] (or [a, b) when
// open_right).  Clamping keeps a window endpoint that sits within tol of a
// member snapped onto the set, so the result never has inverted segments.
ClipResult clip_window(const GeneralizedTimeScale& I, double a, double b,
                       bool open_right) {
  ClipResult out;
  const auto& segs = I.segments();
  const double tol = I.tol();
  for (std::size_t k = 0; k < segs.size(); ++k) {
    const Segment& s = segs[k];
    bool last = k + 1 == segs.size();
    bool half_open_seg = last && I.tail() == TailKind::HalfOpen;
    bool unbounded_seg = s.hi == kInf;

    if (s.lo - tol > b) break;
    if (!unbounded_seg) {
      if (half_open_seg) {
        if (a >= s.hi) continue;
      } else if (a > s.hi + tol) {
        continue;
      }
    }

    double lo = std::max(s.lo, std::min(a, unbounded_seg ? a : s.hi));
    if (open_right && b <= (unbounded_seg ? kInf : s.hi) && b != kInf) {
      if (b - lo > tol) {
        out.segs.push_back({lo, b});
        out.tail = TailKind::HalfOpen;
      } else if (b > lo) {
        // window's open end shaves the segment start down to a point
        out.segs.push_back({lo, lo});
        out.tail = TailKind::Closed;
      }
      return out;
    }
    if (unbounded_seg) {
      if (b == kInf) {
        out.segs.push_back({lo, kInf});
        out.tail = TailKind::Unbounded;
      } else {
        out.segs.push_back({lo, std::max(b, lo)});
        out.tail = TailKind::Closed;
      }
      return out;
    }
    if (b >= s.hi) {
      out.segs.push_back({lo, s.hi});
      out.tail = half_open_seg ? TailKind::HalfOpen : TailKind::Closed;
    } else {
      out.segs.push_back({lo, std::max(b, lo)});
      out.tail = TailKind::Closed;
      return out;
    }
  }
  return out;
}

}  // namespace

GeneralizedTimeScale restrict(const GeneralizedTimeScale& I, double a,
                              double b) {
  require(!std::isnan(a) && !std::isnan(b) && a <= b,
          "restrict window needs a <= b");
  require(a != kInf, "restrict window must start below +inf");
  if (I.empty()) throw std::domain_error("restriction of an empty scale");
  if (I.is_lattice()) {
    const Lattice& L = I.lattice_spec();
    double lo = std::max(a, L.start);
    long k0 = static_cast<long>(std::ceil((lo - L.start - I.tol()) / L.stride));
    if (k0 < 0) k0 = 0;
    double first = L.start + static_cast<double>(k0) * L.stride;
    if (b == kInf)
      return GeneralizedTimeScale::lattice(first, L.stride, I.tol());
    long k1 = static_cast<long>(std::floor((b - L.start + I.tol()) / L.stride));
    if (k1 < k0) throw std::domain_error("restriction window misses the scale");
    require(k1 - k0 < 2'000'000, "lattice restriction materializes too many points");
    std::vector<Segment> pts;
    pts.reserve(static_cast<std::size_t>(k1 - k0 + 1));
    for (long k = k0; k <= k1; ++k) {
      double p = L.start + static_cast<double>(k) * L.stride;
      pts.push_back({p, p});
    }
    return GeneralizedTimeScale(std::move(pts), TailKind::Closed, I.tol());
  }
  ClipResult r = clip_window(I, a, b, false);
  if (r.segs.empty())
    throw std::domain_error("restriction window misses the scale");
  return GeneralizedTimeScale(std::move(r.segs), r.tail, I.tol());
}

GeneralizedTimeScale truncate_below(const GeneralizedTimeScale& I, double t) {
  if (!I.contains(t))
    throw std::domain_error("truncate_below requires a member t");
  return restrict(I, ini(I), t);
}

double continuous_part(const GeneralizedTimeScale& I, double t) {
  if (I.is_lattice()) {
    (void)I.lattice_index_of(t);
    return I.lattice_spec().start;
  }
  std::size_t idx = I.segment_of(t);
  const auto& segs = I.segments();
  NeumaierSum m;
  for (std::size_t k = 0; k < idx; ++k) m.add(segs[k].hi - segs[k].lo);
  double t_eff = std::min(std::max(t, segs[idx].lo), segs[idx].hi);
  m.add(t_eff - segs[idx].lo);
  return segs[0].lo + m.value();
}

double discrete_part(const GeneralizedTimeScale& I, double t) {
  if (I.is_lattice()) {
    long k = I.lattice_index_of(t);
    return static_cast<double>(k) * I.lattice_spec().stride;
  }
  std::size_t idx = I.segment_of(t);
  const auto& segs = I.segments();
  NeumaierSum g;
  for (std::size_t k = 1; k <= idx; ++k) g.add(segs[k].lo - segs[k - 1].hi);
  return g.value();
}

namespace {

bool segment_lists_match(const std::vector<Segment>& a, TailKind ta,
                         const std::vector<Segment>& b, TailKind tb,
                         double tol) {
  if (a.size() != b.size() || ta != tb) return false;
  for (std::size_t k = 0; k < a.size(); ++k) {
    if (std::abs(a[k].lo - b[k].lo) > tol) return false;
    if (a[k].hi == kInf || b[k].hi == kInf) {
      if (a[k].hi != b[k].hi) return false;
    } else if (std::abs(a[k].hi - b[k].hi) > tol) {
      return false;
    }
  }
  return true;
}

}  // namespace

bool is_subinterval(const GeneralizedTimeScale& J,
                    const GeneralizedTimeScale& I) {
  if (J.empty()) return true;
  if (I.empty()) return false;
  double tol = std::max(J.tol(), I.tol());

  if (J.is_lattice()) {
    if (!I.is_lattice()) return false;
    const Lattice& lj = J.lattice_spec();
    const Lattice& li = I.lattice_spec();
    if (std::abs(lj.stride - li.stride) > tol) return false;
    if (lj.start < li.start - tol) return false;
    double k = std::round((lj.start - li.start) / li.stride);
    return std::abs(lj.start - (li.start + k * li.stride)) <= tol;
  }

  if (I.is_lattice()) {
    // J must be a consecutive run of lattice points, all isolated.
    if (J.tail() != TailKind::Closed) return false;
    long prev = -1;
    for (const Segment& s : J.segments()) {
      if (!s.is_point()) return false;
      if (!I.contains(s.lo)) return false;
      long k = I.lattice_index_of(s.lo);
      if (prev >= 0 && k != prev + 1) return false;
      prev = k;
    }
    return true;
  }

  double a = ini(J);
  ClipResult cut;
  switch (J.tail()) {
    case TailKind::Closed:
      cut = clip_window(I, a, fin(J), false);
      break;
    case TailKind::HalfOpen:
      cut = clip_window(I, a, fin(J), true);
      break;
    case TailKind::Unbounded:
      cut = clip_window(I, a, kInf, false);
      break;
  }
  return segment_lists_match(J.segments(), J.tail(), cut.segs, cut.tail, tol);
}

void to_json(nlohmann::json& j, const GeneralizedTimeScale& I) {
  j = nlohmann::json::object();
  j["tol_t"] = I.tol();
  if (I.is_lattice()) {
    j["lattice"] = {{"start", I.lattice_spec().start},
                    {"stride", I.lattice_spec().stride}};
    return;
  }
  nlohmann::json arr = nlohmann::json::array();
  for (const Segment& s : I.segments()) {
    nlohmann::json pair = nlohmann::json::array();
    pair.push_back(s.lo);
    if (s.hi == kInf)
      pair.push_back(nullptr);
    else
      pair.push_back(s.hi);
    arr.push_back(std::move(pair));
  }
  j["segments"] = std::move(arr);
  j["tail"] = to_string(I.tail());
}

void from_json(const nlohmann::json& j, GeneralizedTimeScale& I) {
  double tol = j.value("tol_t", kDefaultTolT);
  if (j.contains("lattice")) {
    const auto& l = j.at("lattice");
    I = GeneralizedTimeScale::lattice(l.at("start").get<double>(),
                                      l.at("stride").get<double>(), tol);
    return;
  }
  std::vector<Segment> segs;
  for (const auto& pair : j.at("segments")) {
    if (!pair.is_array() || pair.size() != 2)
      throw std::invalid_argument("segment entries must be [lo, hi] pairs");
    double lo = pair[0].get<double>();
    double hi = pair[1].is_null() ? kInf : pair[1].get<double>();
    segs.push_back({lo, hi});
  }
  TailKind tail = tail_from_string(j.value("tail", std::string("closed")));
  I = GeneralizedTimeScale(std::move(segs), tail, tol);
}

}  // namespace tscale
