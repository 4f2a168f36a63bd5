#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <type_traits>
#include <vector>

#include "lltbrw/error.hpp"
#include "lltbrw/numeric.hpp"
#include "lltbrw/rng.hpp"

namespace lltbrw {

using uint128 = unsigned __int128;

template <class T>
concept CountType = std::is_same_v<T, std::uint64_t> || std::is_same_v<T, uint128>;

namespace detail {

/// Trial counts up to this bound are sampled directly in double precision.
inline constexpr std::uint64_t kDirectTrialLimit = std::uint64_t{1} << 31;

/// log(k!) - [(k + 1/2) log(k + 1) - (k + 1) + log(2 pi)/2].
inline double stirling_tail(double k) {
  static constexpr double table[] = {0.08106146679532726, 0.04134069595540929, 0.02767792568499834,
                                     0.02079067210376509, 0.01664469118982119, 0.01387612882307075,
                                     0.01189670994589177, 0.01041126526197209, 0.009255462182712733,
                                     0.008330563433362871};
  if (k <= 9) return table[static_cast<int>(k)];
  const double kp1sq = (k + 1) * (k + 1);
  return (1.0 / 12 - (1.0 / 360 - 1.0 / 1260 / kp1sq) / kp1sq) / (k + 1);
}

/// Sequential-search inversion; used when n p < 10.
inline std::uint64_t binomial_inversion(std::uint64_t n, double p, Stream& rng) {
  const double q = 1.0 - p;
  const double ratio = p / q;
  while (true) {
    double f = std::exp(static_cast<double>(n) * std::log1p(-p));
    double u = rng.uniform();
    std::uint64_t k = 0;
    bool ok = true;
    while (u > f) {
      u -= f;
      ++k;
      if (k > n) {
        ok = false;  // rounding left u positive; redraw
        break;
      }
      f *= ratio * static_cast<double>(n - k + 1) / static_cast<double>(k);
    }
    if (ok) return k;
  }
}

/// Hormann's BTRS (transformed rejection with squeeze), p <= 1/2, n p >= 10.
inline std::uint64_t binomial_btrs(std::uint64_t n_int, double p, Stream& rng) {
  const double n = static_cast<double>(n_int);
  const double spq = std::sqrt(n * p * (1.0 - p));
  const double b = 1.15 + 2.53 * spq;
  const double a = -0.0873 + 0.0248 * b + 0.01 * p;
  const double c = n * p + 0.5;
  const double v_r = 0.92 - 4.2 / b;
  const double r = p / (1.0 - p);
  const double alpha = (2.83 + 5.1 / b) * spq;
  const double m = std::floor((n + 1) * p);
  while (true) {
    const double u = rng.uniform() - 0.5;
    double v = rng.uniform();
    const double us = 0.5 - std::abs(u);
    const double k = std::floor((2 * a / us + b) * u + c);
    if (k < 0 || k > n) continue;
    if (us >= 0.07 && v <= v_r) return static_cast<std::uint64_t>(k);
    v = std::log(v * alpha / (a / (us * us) + b));
    const double bound = (m + 0.5) * std::log((m + 1) / (r * (n - m + 1))) +
                         (n + 1) * std::log((n - m + 1) / (n - k + 1)) +
                         (k + 0.5) * std::log(r * (n - k + 1) / (k + 1)) + stirling_tail(m) +
                         stirling_tail(n - m) - stirling_tail(k) - stirling_tail(n - k);
    if (v <= bound) return static_cast<std::uint64_t>(k);
  }
}

/// Gamma(shape) for shape >= 1 by Marsaglia-Tsang, returned as the pair
/// (d, w) with variate d (1 + w); keeping w separate preserves precision when
/// shape is astronomically large.
struct LargeGamma {
  double d;
  double w;
};

inline LargeGamma gamma_large(double shape, Stream& rng) {
  const double d = shape - 1.0 / 3.0;
  const double c = 1.0 / std::sqrt(9.0 * d);
  while (true) {
    const double x = rng.normal();
    const double t = c * x;
    if (t <= -1.0) continue;
    const double w = t * (3.0 + t * (3.0 + t));  // (1 + t)^3 - 1
    const double u = rng.uniform();
    if (u < 1.0 - 0.0331 * x * x * x * x) return {d, w};
    if (std::log(u) < 0.5 * x * x + d * log1pmx(w)) return {d, w};
  }
}

/// Beta(a, b) for a, b >= 1 as G_a / (G_a + G_b).
inline double beta_large(double a, double b, Stream& rng) {
  const LargeGamma ga = gamma_large(a, rng);
  const LargeGamma gb = gamma_large(b, rng);
  // 1 / (1 + (d_b (1 + w_b)) / (d_a (1 + w_a)))
  const double ratio = (gb.d / ga.d) * ((1.0 + gb.w) / (1.0 + ga.w));
  return 1.0 / (1.0 + ratio);
}

template <CountType UInt>
UInt binomial_impl(UInt trials, double p, Stream& rng) {
  if (trials == 0 || p <= 0.0) return 0;
  if (p >= 1.0) return trials;
  if (p > 0.5) return trials - binomial_impl<UInt>(trials, 1.0 - p, rng);
  if (trials <= UInt{kDirectTrialLimit}) {
    const auto n = static_cast<std::uint64_t>(trials);
    if (static_cast<double>(n) * p < 10.0) return UInt{binomial_inversion(n, p, rng)};
    return UInt{binomial_btrs(n, p, rng)};
  }
  // The a-th smallest of `trials` uniforms is Beta(a, trials + 1 - a). If it
  // lies above p, the successes are among the a - 1 uniforms below it, which
  // are uniform on [0, X]; otherwise a successes are known and the remaining
  // trials - a uniforms are uniform on [X, 1].
  const UInt a = trials / 2 + 1;
  const UInt b = trials + 1 - a;
  const double x = beta_large(static_cast<double>(a), static_cast<double>(b), rng);
  if (x >= p) return binomial_impl<UInt>(a - 1, p / x, rng);
  return a + binomial_impl<UInt>(trials - a, (p - x) / (1.0 - x), rng);
}

}  // namespace detail

/// Exact Binomial(trials, p) draw. No normal approximation at any size.
template <CountType UInt>
UInt binomial_exact(UInt trials, double p, Stream& rng) {
  if (!(p >= 0.0 && p <= 1.0)) throw Error(ErrorCode::InvalidArgument, "binomial probability outside [0,1]");
  return detail::binomial_impl<UInt>(trials, p, rng);
}

/// Multinomial(trials, probs) by sequential binomial splits in index order,
/// each conditioned on the remaining probability mass. `probs` need not sum to
/// exactly one; the last cell with positive weight absorbs the remainder.
template <CountType UInt>
void multinomial_exact(UInt trials, std::span<const double> probs, Stream& rng, std::span<UInt> out) {
  if (out.size() != probs.size()) throw Error(ErrorCode::InvalidArgument, "multinomial output size mismatch");
  std::vector<double> tail(probs.size() + 1, 0.0);
  for (std::size_t i = probs.size(); i-- > 0;) tail[i] = tail[i + 1] + probs[i];
  std::size_t last = probs.size();
  for (std::size_t i = probs.size(); i-- > 0;)
    if (probs[i] > 0.0) {
      last = i;
      break;
    }
  UInt remaining = trials;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    if (i == last) {
      out[i] = remaining;
      remaining = 0;
      continue;
    }
    if (remaining == 0 || probs[i] <= 0.0) {
      out[i] = 0;
      continue;
    }
    const double cond = std::min(1.0, probs[i] / tail[i]);
    const UInt x = binomial_exact<UInt>(remaining, cond, rng);
    out[i] = x;
    remaining -= x;
  }
  if (remaining != 0) throw Error(ErrorCode::InvalidArgument, "multinomial with no positive probability");
}

}  // namespace lltbrw
