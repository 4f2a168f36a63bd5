#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

namespace lltbrw {

/// Compensated (Neumaier) summation.
class NeumaierSum {
 public:
  void add(double x) noexcept {
    const double t = sum_ + x;
    if (std::abs(sum_) >= std::abs(x))
      comp_ += (sum_ - t) + x;
    else
      comp_ += (x - t) + sum_;
    sum_ = t;
  }
  double value() const noexcept { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

/// %.17g: round-trips every double.
inline std::string format_double(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

/// log(1 + w) - w without cancellation for small |w|.
inline double log1pmx(double w) {
  if (std::abs(w) > 1e-2) return std::log1p(w) - w;
  // -w^2/2 + w^3/3 - w^4/4 + ...
  double term = w * w;
  double acc = 0.0;
  for (int k = 2; k <= 12; ++k) {
    acc += (k % 2 == 0 ? -term : term) / k;
    term *= w;
  }
  return acc;
}

/// Linear-interpolated sample quantile (type 7), q in [0,1].
inline double quantile(std::vector<double> v, double q) {
  if (v.empty()) return std::nan("");
  std::sort(v.begin(), v.end());
  const double pos = q * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, v.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return v[lo] + frac * (v[hi] - v[lo]);
}

inline double median(std::vector<double> v) { return quantile(std::move(v), 0.5); }

}  // namespace lltbrw
