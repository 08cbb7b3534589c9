#pragma once

#include <cmath>
#include <cstdio>
#include <limits>
#include <string>

namespace tscale {

inline constexpr double kInf = std::numeric_limits<double>::infinity();
inline constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// Compensated (Neumaier) summation.  Running sums of segment lengths and gap
// lengths must stay accurate to a few ulp even over thousands of terms.
class NeumaierSum {
 public:
  void add(double v) {
    double t = sum_ + v;
    if (std::abs(sum_) >= std::abs(v))
      comp_ += (sum_ - t) + v;
    else
      comp_ += (v - t) + sum_;
    sum_ = t;
  }
  double value() const { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

// Shortest exact decimal form; %.17g round-trips any double, so serialized
// artifacts are byte-stable for a given build.
inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace tscale
