#pragma once

#include <functional>
#include <iosfwd>
#include <vector>

#include <Eigen/Core>

#include "tscale/timescale.hpp"

namespace tscale {

using Vec = Eigen::VectorXd;
// Scalarizer applied pointwise to signal values; must be >= 0.
using ValueMap = std::function<double(const Vec&)>;

// Sampled trajectory over a segment scale.  Each domain segment carries its
// own strictly increasing grid; bounded segment endpoints are always grid
// points, so right-scattered members and their forward jumps both hold
// stored samples.
class Signal {
 public:
  Signal() = default;
  Signal(GeneralizedTimeScale dom, std::vector<std::vector<double>> grids,
         std::vector<std::vector<Vec>> values);

  const GeneralizedTimeScale& dom() const { return dom_; }
  Eigen::Index dim() const { return dim_; }
  std::size_t segment_count() const { return grids_.size(); }
  const std::vector<double>& grid(std::size_t k) const { return grids_.at(k); }
  const std::vector<Vec>& values(std::size_t k) const { return vals_.at(k); }
  std::size_t total_points() const;

  template <class F>
  void for_each(F&& f) const {
    for (std::size_t k = 0; k < grids_.size(); ++k)
      for (std::size_t j = 0; j < grids_[k].size(); ++j)
        f(k, grids_[k][j], vals_[k][j]);
  }

 private:
  GeneralizedTimeScale dom_;
  std::vector<std::vector<double>> grids_;
  std::vector<std::vector<Vec>> vals_;
  Eigen::Index dim_ = 0;
};

// Value at member t: stored sample on grid hits, linear interpolation
// between neighbors otherwise.  Throws std::domain_error off the domain or
// beyond the sampled extent of an unbounded tail.
Vec sample(const Signal& x, double t);

// Gap-spanning piecewise-linear extension: same samples on one segment
// [Ini, Fin], with straight bridges across former gaps.  Identity (same
// grid, same values) when the domain already has no gaps.
Signal extend(const Signal& x);

// Difference quotient toward sigma(t): exact jump quotient at
// right-scattered members, forward/bracketing secant at right-dense ones.
// Throws at Fin and at the last sampled point of an unbounded tail.
Vec delta_derivative(const Signal& x, double t);

// Pointwise scalar signal t -> d(x(t)); rejects d < 0.
Signal pseudo_distance(const Signal& x, const ValueMap& d);

// Header "t,t_c,t_d,x0,...,x{p-1}"; one row per grid point, %.17g fields.
void write_trace_csv(std::ostream& os, const Signal& x);
// Rebuilds segments at rows where t_d increases.  Tail flavors are not
// expressible in CSV; the result is closed at the last sample.
Signal read_trace_csv(std::istream& is, double tol_t = kDefaultTolT);

}  // namespace tscale
