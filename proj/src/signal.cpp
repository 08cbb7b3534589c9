#include "tscale/signal.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace tscale {

namespace {

void require(bool ok, const std::string& msg) {
  if (!ok) throw std::invalid_argument(msg);
}

}  // namespace

Signal::Signal(GeneralizedTimeScale dom, std::vector<std::vector<double>> grids,
               std::vector<std::vector<Vec>> values)
    : dom_(std::move(dom)), grids_(std::move(grids)), vals_(std::move(values)) {
  require(!dom_.is_lattice(),
          "signals need explicit segments; materialize the lattice first");
  require(!dom_.empty(), "signal domain must be nonempty");
  const auto& segs = dom_.segments();
  require(grids_.size() == segs.size() && vals_.size() == segs.size(),
          "one grid and one value list per domain segment");
  const double tol = dom_.tol();
  for (std::size_t k = 0; k < segs.size(); ++k) {
    const auto& g = grids_[k];
    const auto& v = vals_[k];
    bool last = k + 1 == segs.size();
    require(!g.empty() && g.size() == v.size(),
            "segment grid must be nonempty and match its values");
    require(std::abs(g.front() - segs[k].lo) <= tol,
            "segment grid must start at the segment's lo");
    for (std::size_t j = 1; j < g.size(); ++j)
      require(g[j] > g[j - 1], "segment grid must be strictly increasing");
    if (segs[k].hi == kInf) {
      // any finite sampled extent
    } else if (last && dom_.tail() == TailKind::HalfOpen) {
      require(g.back() < segs[k].hi,
              "grid on a half-open tail must stop short of the open sup");
    } else {
      require(std::abs(g.back() - segs[k].hi) <= tol,
              "bounded closed segment grid must end at the segment's hi");
    }
    for (const Vec& x : v) {
      if (dim_ == 0) dim_ = x.size();
      require(x.size() == dim_ && dim_ > 0,
              "all samples must share one positive dimension");
    }
  }
}

std::size_t Signal::total_points() const {
  std::size_t n = 0;
  for (const auto& g : grids_) n += g.size();
  return n;
}

namespace {

// Index j with grid[j] <= t < grid[j+1], clamped into [0, n-1].
std::size_t bracket(const std::vector<double>& grid, double t) {
  auto it = std::upper_bound(grid.begin(), grid.end(), t);
  if (it == grid.begin()) return 0;
  return static_cast<std::size_t>(it - grid.begin()) - 1;
}

}  // namespace

Vec sample(const Signal& x, double t) {
  std::size_t k = x.dom().segment_of(t);
  const auto& g = x.grid(k);
  const auto& v = x.values(k);
  const double tol = x.dom().tol();
  if (t <= g.front()) return v.front();
  if (t >= g.back()) {
    if (t - g.back() <= tol) return v.back();
    throw std::domain_error("t = " + format_double(t) +
                            " is beyond the sampled extent");
  }
  std::size_t j = bracket(g, t);
  if (g[j] == t) return v[j];
  double w = (t - g[j]) / (g[j + 1] - g[j]);
  return v[j] + w * (v[j + 1] - v[j]);
}

Signal extend(const Signal& x) {
  const auto& segs = x.dom().segments();
  std::vector<double> grid;
  std::vector<Vec> vals;
  grid.reserve(x.total_points());
  vals.reserve(x.total_points());
  for (std::size_t k = 0; k < segs.size(); ++k) {
    grid.insert(grid.end(), x.grid(k).begin(), x.grid(k).end());
    vals.insert(vals.end(), x.values(k).begin(), x.values(k).end());
  }
  TailKind tail = x.dom().tail();
  double hi = segs.back().hi;
  GeneralizedTimeScale dom({{segs.front().lo, hi}}, tail, x.dom().tol());
  return Signal(std::move(dom), {std::move(grid)}, {std::move(vals)});
}

Vec delta_derivative(const Signal& x, double t) {
  const GeneralizedTimeScale& dom = x.dom();
  std::size_t k = dom.segment_of(t);
  if (is_right_scattered(dom, t)) {
    // t sits at the right end of a non-final segment; both samples stored
    const Vec& here = x.values(k).back();
    const Vec& next = x.values(k + 1).front();
    double gap = x.grid(k + 1).front() - x.grid(k).back();
    return (next - here) / gap;
  }
  const auto& g = x.grid(k);
  if (t >= g.back() - dom.tol() || g.size() < 2)
    throw std::domain_error(
        "delta derivative undefined at Fin / end of sampled extent");
  std::size_t j = bracket(g, t);
  if (j + 1 >= g.size()) j = g.size() - 2;
  return (x.values(k)[j + 1] - x.values(k)[j]) / (g[j + 1] - g[j]);
}

Signal pseudo_distance(const Signal& x, const ValueMap& d) {
  std::vector<std::vector<Vec>> vals(x.segment_count());
  std::vector<std::vector<double>> grids(x.segment_count());
  for (std::size_t k = 0; k < x.segment_count(); ++k) {
    grids[k] = x.grid(k);
    vals[k].reserve(x.values(k).size());
    for (const Vec& v : x.values(k)) {
      double s = d(v);
      if (!(s >= 0.0))
        throw std::invalid_argument(
            "pseudo distance measure returned a negative or NaN value");
      Vec one(1);
      one[0] = s;
      vals[k].push_back(std::move(one));
    }
  }
  return Signal(x.dom(), std::move(grids), std::move(vals));
}

void write_trace_csv(std::ostream& os, const Signal& x) {
  os << "t,t_c,t_d";
  for (Eigen::Index i = 0; i < x.dim(); ++i) os << ",x" << i;
  os << "\n";
  const GeneralizedTimeScale& dom = x.dom();
  x.for_each([&](std::size_t, double t, const Vec& v) {
    os << format_double(t) << ',' << format_double(continuous_part(dom, t))
       << ',' << format_double(discrete_part(dom, t));
    for (Eigen::Index i = 0; i < v.size(); ++i)
      os << ',' << format_double(v[i]);
    os << "\n";
  });
}

Signal read_trace_csv(std::istream& is, double tol_t) {
  std::string line;
  if (!std::getline(is, line))
    throw std::invalid_argument("empty trace CSV");
  {
    std::stringstream hs(line);
    std::string col;
    const char* expected[3] = {"t", "t_c", "t_d"};
    for (int i = 0; i < 3; ++i) {
      if (!std::getline(hs, col, ',') || col != expected[i])
        throw std::invalid_argument("trace CSV header must start t,t_c,t_d");
    }
  }
  std::vector<double> ts, tds;
  std::vector<Vec> xs;
  Eigen::Index dim = -1;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::stringstream ls(line);
    std::string cell;
    std::vector<double> row;
    while (std::getline(ls, cell, ',')) row.push_back(std::stod(cell));
    if (row.size() < 4)
      throw std::invalid_argument("trace CSV rows need t,t_c,t_d,x0,...");
    Eigen::Index d = static_cast<Eigen::Index>(row.size()) - 3;
    if (dim < 0) dim = d;
    if (d != dim) throw std::invalid_argument("inconsistent trace CSV width");
    ts.push_back(row[0]);
    tds.push_back(row[2]);
    Vec v(dim);
    for (Eigen::Index i = 0; i < dim; ++i) v[i] = row[3 + i];
    xs.push_back(std::move(v));
  }
  if (ts.empty()) throw std::invalid_argument("trace CSV has no data rows");

  std::vector<Segment> segs;
  std::vector<std::vector<double>> grids;
  std::vector<std::vector<Vec>> vals;
  double min_gap = kInf;
  for (std::size_t r = 0; r < ts.size(); ++r) {
    bool new_seg = r == 0 || tds[r] > tds[r - 1];
    if (new_seg) {
      if (!segs.empty()) {
        segs.back().hi = ts[r - 1];
        min_gap = std::min(min_gap, ts[r] - ts[r - 1]);
      }
      segs.push_back({ts[r], ts[r]});
      grids.emplace_back();
      vals.emplace_back();
    }
    grids.back().push_back(ts[r]);
    vals.back().push_back(std::move(xs[r]));
  }
  segs.back().hi = ts.back();
  double tol = tol_t;
  if (min_gap != kInf) tol = std::min(tol, 0.25 * min_gap);
  GeneralizedTimeScale dom(std::move(segs), TailKind::Closed, tol);
  return Signal(std::move(dom), std::move(grids), std::move(vals));
}

}  // namespace tscale
