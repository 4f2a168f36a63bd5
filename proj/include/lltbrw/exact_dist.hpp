#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <optional>
#include <ostream>
#include <span>
#include <thread>
#include <vector>

#include "lltbrw/error.hpp"
#include "lltbrw/lattice.hpp"
#include "lltbrw/numeric.hpp"
#include "lltbrw/step_law.hpp"

namespace lltbrw {

inline constexpr std::size_t kDefaultElementBudget = std::size_t{1} << 28;

struct ConvolveOptions {
  std::size_t element_budget = kDefaultElementBudget;
  unsigned threads = 1;
};

/// Exact pmf of S_n on the box prod_s [-n t_s, n t_s], stored densely in
/// row-major order (last axis fastest). The box is centred, so the flat index
/// of -z is size() - 1 - index(z).
class LatticeDist {
 public:
  LatticeDist(int n, std::vector<std::int64_t> radius) : n_(n), radius_(std::move(radius)) {
    extent_.resize(radius_.size());
    stride_.resize(radius_.size());
    std::size_t total = 1;
    for (std::size_t s = radius_.size(); s-- > 0;) {
      extent_[s] = static_cast<std::size_t>(2 * radius_[s] + 1);
      stride_[s] = total;
      total *= extent_[s];
    }
    mass_.assign(total, 0.0);
  }

  int n() const noexcept { return n_; }
  int dim() const noexcept { return static_cast<int>(radius_.size()); }
  const std::vector<std::int64_t>& radius() const noexcept { return radius_; }
  const std::vector<std::size_t>& extent() const noexcept { return extent_; }
  const std::vector<std::size_t>& stride() const noexcept { return stride_; }
  std::size_t size() const noexcept { return mass_.size(); }
  std::span<const double> mass() const noexcept { return mass_; }
  std::span<double> mass() noexcept { return mass_; }

  bool contains(const Point& z) const {
    if (z.size() != radius_.size()) return false;
    for (std::size_t s = 0; s < z.size(); ++s)
      if (z[s] < -radius_[s] || z[s] > radius_[s]) return false;
    return true;
  }

  std::size_t index_of(const Point& z) const {
    std::size_t idx = 0;
    for (std::size_t s = 0; s < z.size(); ++s)
      idx += static_cast<std::size_t>(z[s] + radius_[s]) * stride_[s];
    return idx;
  }

  Point point_of(std::size_t idx) const {
    Point z(radius_.size());
    for (std::size_t s = 0; s < radius_.size(); ++s) {
      z[s] = static_cast<std::int64_t>(idx / stride_[s]) - radius_[s];
      idx %= stride_[s];
    }
    return z;
  }

  /// Probability at z; exactly zero outside the stored box.
  double at(const Point& z) const { return contains(z) ? mass_[index_of(z)] : 0.0; }

  double total_mass() const {
    NeumaierSum acc;
    for (double v : mass_) acc.add(v);
    return acc.value();
  }

  /// mass(z) <- (mass(z) + mass(-z)) / 2, so the stored tensor is bit-exactly
  /// symmetric.
  void symmetrize() {
    const std::size_t n = mass_.size();
    for (std::size_t i = 0; i < n / 2; ++i) {
      const double v = (mass_[i] + mass_[n - 1 - i]) * 0.5;
      mass_[i] = v;
      mass_[n - 1 - i] = v;
    }
  }

 private:
  int n_;
  std::vector<std::int64_t> radius_;
  std::vector<std::size_t> extent_;
  std::vector<std::size_t> stride_;
  std::vector<double> mass_;
};

inline LatticeDist delta_dist(const StepLaw& law) {
  LatticeDist dist(0, std::vector<std::int64_t>(static_cast<std::size_t>(law.dim()), 0));
  dist.mass()[0] = 1.0;
  return dist;
}

namespace detail {

template <class Fn>
void parallel_chunks(std::size_t total, unsigned threads, Fn&& fn) {
  if (threads <= 1 || total < 4096) {
    fn(std::size_t{0}, total);
    return;
  }
  const std::size_t chunk = (total + threads - 1) / threads;
  std::vector<std::thread> pool;
  for (unsigned t = 0; t < threads; ++t) {
    const std::size_t lo = t * chunk;
    const std::size_t hi = std::min(total, lo + chunk);
    if (lo >= hi) break;
    pool.emplace_back([&fn, lo, hi] { fn(lo, hi); });
  }
  for (auto& th : pool) th.join();
}

}  // namespace detail

/// One more step of the walk. Each output cell is computed independently in the
/// fixed order lazy term, then axis-major / increasing r / minus before plus,
/// so the result does not depend on the thread count.
inline LatticeDist convolve_step(const LatticeDist& dist, const StepLaw& law, const ConvolveOptions& opts = {}) {
  const auto d = static_cast<std::size_t>(law.dim());
  if (static_cast<std::size_t>(dist.dim()) != d)
    throw Error(ErrorCode::InvalidArgument, "distribution and law dimensions differ");

  std::vector<std::int64_t> radius(d);
  double cells = 1.0;
  for (std::size_t s = 0; s < d; ++s) {
    radius[s] = dist.radius()[s] + law.range(static_cast<int>(s));
    cells *= static_cast<double>(2 * radius[s] + 1);
  }
  if (cells > static_cast<double>(opts.element_budget))
    throw Error(ErrorCode::CapacityExceeded, "step " + std::to_string(dist.n() + 1) + " needs " +
                                                 std::to_string(static_cast<long double>(cells)) +
                                                 " cells, budget is " + std::to_string(opts.element_budget));

  LatticeDist out(dist.n() + 1, radius);

  // Embed the old tensor in the new box; the margin is zero.
  std::vector<double> src(out.size(), 0.0);
  {
    const auto old = dist.mass();
    for (std::size_t i = 0; i < old.size(); ++i) {
      if (old[i] == 0.0) continue;
      Point z = dist.point_of(i);
      src[out.index_of(z)] = old[i];
    }
  }

  struct Term {
    std::size_t axis;
    std::size_t r;
    double w;
  };
  std::vector<Term> terms;
  for (std::size_t s = 0; s < d; ++s)
    for (int r = 1; r <= law.range(static_cast<int>(s)); ++r) {
      const double w = law.weight(static_cast<int>(s), r);
      if (w > 0.0) terms.push_back({s, static_cast<std::size_t>(r), w / 2});
    }
  const double lazy = law.zeta0();
  const auto& extent = out.extent();
  const auto& stride = out.stride();
  auto mass = out.mass();

  detail::parallel_chunks(out.size(), opts.threads, [&](std::size_t lo, std::size_t hi) {
    std::vector<std::size_t> coord(d);
    {
      std::size_t rem = lo;
      for (std::size_t s = 0; s < d; ++s) {
        coord[s] = rem / stride[s];
        rem %= stride[s];
      }
    }
    for (std::size_t i = lo; i < hi; ++i) {
      double acc = lazy * src[i];
      for (const auto& t : terms) {
        const std::size_t c = coord[t.axis];
        const std::size_t step = t.r * stride[t.axis];
        const double minus = c >= t.r ? src[i - step] : 0.0;
        const double plus = c + t.r < extent[t.axis] ? src[i + step] : 0.0;
        acc += t.w * (minus + plus);
      }
      mass[i] = acc;
      for (std::size_t s = d; s-- > 0;) {
        if (++coord[s] < extent[s]) break;
        coord[s] = 0;
      }
    }
  });

  out.symmetrize();
  return out;
}

/// S_n by n repeated convolutions.
inline LatticeDist exact_distribution(const StepLaw& law, int n, const ConvolveOptions& opts = {}) {
  if (n < 0) throw Error(ErrorCode::InvalidArgument, "step count must be >= 0");
  LatticeDist dist = delta_dist(law);
  for (int k = 0; k < n; ++k) dist = convolve_step(dist, law, opts);
  return dist;
}

inline double dist_at(const LatticeDist& dist, const Point& z) { return dist.at(z); }

/// Smallest panel count per axis for which the periodic trapezoid rule
/// integrates cos<phi,z> psi(phi)^n exactly: it must exceed the highest
/// frequency n * max_s t_s + |z|_inf.
inline std::size_t cf_min_panels(const StepLaw& law, int n, const Point& z) {
  return static_cast<std::size_t>(n) * static_cast<std::size_t>(law.max_range()) +
         static_cast<std::size_t>(sup_norm(z)) + 1;
}

inline std::size_t cf_default_panels(const StepLaw& law, int n, const Point& z) {
  return 2 * (static_cast<std::size_t>(n) * static_cast<std::size_t>(law.max_range()) +
              static_cast<std::size_t>(sup_norm(z))) +
         1;
}

namespace detail {

/// g_s(phi_j) = sum_r zeta_{s,r} cos(r phi_j) on the uniform torus grid.
inline std::vector<double> axis_symbol(const StepLaw& law, int axis, std::size_t panels) {
  std::vector<double> g(panels, 0.0);
  for (std::size_t j = 0; j < panels; ++j) {
    const double phi = -std::numbers::pi + 2.0 * std::numbers::pi * static_cast<double>(j) / static_cast<double>(panels);
    double acc = 0.0;
    for (int r = 1; r <= law.range(axis); ++r) acc += law.weight(axis, r) * std::cos(r * phi);
    g[j] = acc;
  }
  return g;
}

/// phi_j * z reduced mod 2 pi, with phi_j = -pi + 2 pi j / m; exact integer
/// reduction keeps the phase accurate for large |z|.
inline double grid_phase(std::size_t j, std::int64_t z, std::size_t m) {
  const auto mm = static_cast<std::int64_t>(m);
  const std::int64_t red = ((static_cast<std::int64_t>(j) % mm) * (z % mm) % mm + mm) % mm;
  const double half_turns = (z % 2 != 0) ? std::numbers::pi : 0.0;
  return half_turns + 2.0 * std::numbers::pi * static_cast<double>(red) / static_cast<double>(m);
}

inline double int_pow(double x, int n) {
  double result = 1.0;
  while (n > 0) {
    if (n & 1) result *= x;
    x *= x;
    n >>= 1;
  }
  return result;
}

}  // namespace detail

/// P(S_n = z) = (2 pi)^-d int_{[-pi,pi]^d} cos<phi,z> psi(phi)^n dphi evaluated
/// by the periodic trapezoid rule with `panels` nodes per axis.
inline double cf_invert(const StepLaw& law, int n, const Point& z, std::optional<std::size_t> panels = std::nullopt) {
  const auto d = static_cast<std::size_t>(law.dim());
  if (z.size() != d) throw Error(ErrorCode::InvalidArgument, "point dimension differs from law");
  if (n < 0) throw Error(ErrorCode::InvalidArgument, "step count must be >= 0");
  const std::size_t min_panels = cf_min_panels(law, n, z);
  const std::size_t m = panels.value_or(cf_default_panels(law, n, z));
  if (m < min_panels)
    throw Error(ErrorCode::ResolutionTooLow,
                std::to_string(m) + " panels per axis, need at least " + std::to_string(min_panels));

  std::vector<std::vector<double>> symbol(d);
  std::vector<std::vector<std::complex<double>>> phase(d);
  for (std::size_t s = 0; s < d; ++s) {
    symbol[s] = detail::axis_symbol(law, static_cast<int>(s), m);
    phase[s].resize(m);
    for (std::size_t j = 0; j < m; ++j) {
      const double angle = detail::grid_phase(j, z[s], m);
      phase[s][j] = std::polar(1.0, angle);
    }
  }

  NeumaierSum acc;
  std::vector<std::size_t> idx(d, 0);
  while (true) {
    double psi = law.zeta0();
    std::complex<double> ph(1.0, 0.0);
    for (std::size_t s = 0; s < d; ++s) {
      psi += symbol[s][idx[s]];
      ph *= phase[s][idx[s]];
    }
    acc.add(ph.real() * detail::int_pow(psi, n));
    std::size_t s = d;
    while (s-- > 0) {
      if (++idx[s] < m) break;
      idx[s] = 0;
    }
    if (s == static_cast<std::size_t>(-1)) break;
  }
  return acc.value() / std::pow(static_cast<double>(m), static_cast<double>(d));
}

/// cf_invert for every point of the support box at once, by separable inverse
/// DFTs of psi^n with 2 n t_s + 1 nodes on axis s.
inline LatticeDist cf_invert_box(const StepLaw& law, int n) {
  const auto d = static_cast<std::size_t>(law.dim());
  std::vector<std::int64_t> radius(d);
  for (std::size_t s = 0; s < d; ++s) radius[s] = static_cast<std::int64_t>(n) * law.range(static_cast<int>(s));
  LatticeDist out(n, radius);
  const auto& extent = out.extent();
  const auto& stride = out.stride();

  std::vector<std::vector<double>> symbol(d);
  for (std::size_t s = 0; s < d; ++s) symbol[s] = detail::axis_symbol(law, static_cast<int>(s), extent[s]);

  std::vector<std::complex<double>> work(out.size());
  {
    std::vector<std::size_t> idx(d, 0);
    for (std::size_t i = 0; i < work.size(); ++i) {
      double psi = law.zeta0();
      for (std::size_t s = 0; s < d; ++s) psi += symbol[s][idx[s]];
      work[i] = detail::int_pow(psi, n);
      for (std::size_t s = d; s-- > 0;) {
        if (++idx[s] < extent[s]) break;
        idx[s] = 0;
      }
    }
  }

  // Transform axis by axis: out(z_s) = (1/M) sum_j v(j) exp(i phi_j z_s).
  std::vector<std::complex<double>> line, res;
  for (std::size_t s = 0; s < d; ++s) {
    const std::size_t m = extent[s];
    const auto r = radius[s];
    std::vector<std::complex<double>> kernel(m * m);
    for (std::size_t k = 0; k < m; ++k)
      for (std::size_t j = 0; j < m; ++j) {
        const double angle = detail::grid_phase(j, static_cast<std::int64_t>(k) - r, m);
        kernel[k * m + j] = std::polar(1.0 / static_cast<double>(m), angle);
      }
    line.resize(m);
    res.resize(m);
    const std::size_t st = stride[s];
    const std::size_t block = st * m;
    for (std::size_t base = 0; base < work.size(); base += block)
      for (std::size_t off = 0; off < st; ++off) {
        for (std::size_t j = 0; j < m; ++j) line[j] = work[base + off + j * st];
        for (std::size_t k = 0; k < m; ++k) {
          std::complex<double> acc(0.0, 0.0);
          for (std::size_t j = 0; j < m; ++j) acc += kernel[k * m + j] * line[j];
          res[k] = acc;
        }
        for (std::size_t k = 0; k < m; ++k) work[base + off + k * st] = res[k];
      }
  }
  auto mass = out.mass();
  for (std::size_t i = 0; i < work.size(); ++i) mass[i] = work[i].real();
  return out;
}

/// CSV rows z_1,...,z_d,probability with 17 significant digits.
inline void write_dist_csv(std::ostream& os, const LatticeDist& dist) {
  for (int s = 0; s < dist.dim(); ++s) os << "z" << (s + 1) << ',';
  os << "probability\n";
  for (std::size_t i = 0; i < dist.size(); ++i) {
    const Point z = dist.point_of(i);
    for (auto v : z) os << v << ',';
    os << format_double(dist.mass()[i]) << '\n';
  }
}

}  // namespace lltbrw
