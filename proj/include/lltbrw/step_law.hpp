#pragma once

#include <cmath>
#include <cstdint>
#include <numeric>
#include <string>
#include <vector>

#include "lltbrw/error.hpp"

namespace lltbrw {

/// Unvalidated step law as written in a config: axes[s][r-1] is the weight of
/// the pair of steps +-r e_s (each step receives half of it).
struct RawStepLaw {
  int d = 0;
  double zeta0 = 0.0;
  std::vector<std::vector<double>> axes;
};

/// One displacement of the step law with its probability.
struct Atom {
  int axis = -1;  ///< -1 for the lazy (stay) atom
  std::int64_t offset = 0;
  double prob = 0.0;
};

enum class WalkClass { Aperiodic, Bipartite };

inline const char* to_string(WalkClass c) {
  return c == WalkClass::Aperiodic ? "Aperiodic" : "Bipartite";
}

/// Symmetric, axis-aligned, finite-range increment law on Z^d. Immutable once
/// built by validate(); weights are exactly renormalized to sum to one.
class StepLaw {
 public:
  static constexpr double kNormalizationTolerance = 1e-12;
  static constexpr double kZeroWeightThreshold = 1e-15;

  static StepLaw validate(const RawStepLaw& raw, std::vector<std::string>* warnings = nullptr) {
    if (raw.d < 1) throw Error(ErrorCode::InvalidArgument, "dimension must be >= 1");
    if (raw.axes.size() != static_cast<std::size_t>(raw.d))
      throw Error(ErrorCode::InvalidArgument, "expected one weight list per axis");
    for (const auto& axis : raw.axes)
      if (axis.empty()) throw Error(ErrorCode::InvalidArgument, "every axis needs at least one range");

    if (!(raw.zeta0 >= 0.0)) throw Error(ErrorCode::NegativeWeight, "zeta0 is negative");
    for (std::size_t s = 0; s < raw.axes.size(); ++s)
      for (std::size_t r = 0; r < raw.axes[s].size(); ++r)
        if (!(raw.axes[s][r] >= 0.0))
          throw Error(ErrorCode::NegativeWeight, "weight for axis " + std::to_string(s + 1) +
                                                     ", range " + std::to_string(r + 1) + " is negative");
    if (raw.zeta0 >= 1.0) throw Error(ErrorCode::DegenerateLazy, "zeta0 must be < 1");

    double sum = raw.zeta0;
    for (const auto& axis : raw.axes)
      for (double w : axis) sum += w;
    if (std::abs(sum - 1.0) > kNormalizationTolerance)
      throw Error(ErrorCode::NonNormalized, "weights sum to " + std::to_string(sum));

    StepLaw law;
    law.d_ = raw.d;
    law.zeta0_ = raw.zeta0 < kZeroWeightThreshold ? 0.0 : raw.zeta0 / sum;
    if (raw.zeta0 > 0.0 && raw.zeta0 < kZeroWeightThreshold && warnings)
      warnings->push_back("zeta0 below 1e-15 treated as zero");
    law.axes_ = raw.axes;
    for (std::size_t s = 0; s < law.axes_.size(); ++s) {
      auto& axis = law.axes_[s];
      for (std::size_t r = 0; r < axis.size(); ++r) {
        if (axis[r] > 0.0 && axis[r] < kZeroWeightThreshold) {
          if (warnings)
            warnings->push_back("weight for axis " + std::to_string(s + 1) + ", range " +
                                std::to_string(r + 1) + " below 1e-15 treated as zero");
          axis[r] = 0.0;
        }
        axis[r] /= sum;
      }
      if (axis.back() <= 0.0)
        throw Error(ErrorCode::ZeroTopWeight,
                    "top range weight of axis " + std::to_string(s + 1) + " is zero");
      std::int64_t g = 0;
      for (std::size_t r = 0; r < axis.size(); ++r)
        if (axis[r] > 0.0) g = std::gcd(g, static_cast<std::int64_t>(r + 1));
      if (g != 1)
        throw Error(ErrorCode::Reducible,
                    "gcd of supported ranges on axis " + std::to_string(s + 1) + " is " + std::to_string(g));
    }
    return law;
  }

  int dim() const noexcept { return d_; }
  double zeta0() const noexcept { return zeta0_; }
  const std::vector<std::vector<double>>& axes() const noexcept { return axes_; }
  int range(int axis) const { return static_cast<int>(axes_[static_cast<std::size_t>(axis)].size()); }
  /// zeta_{s,r}; r starts at 1.
  double weight(int axis, int r) const {
    return axes_[static_cast<std::size_t>(axis)][static_cast<std::size_t>(r - 1)];
  }
  int max_range() const {
    int t = 0;
    for (int s = 0; s < d_; ++s) t = std::max(t, range(s));
    return t;
  }

  /// Nonzero atoms in the fixed order axis-major, increasing r, minus before
  /// plus, lazy atom last.
  std::vector<Atom> atoms() const {
    std::vector<Atom> out;
    for (int s = 0; s < d_; ++s)
      for (int r = 1; r <= range(s); ++r) {
        const double w = weight(s, r);
        if (w <= 0.0) continue;
        out.push_back({s, -r, w / 2});
        out.push_back({s, r, w / 2});
      }
    if (zeta0_ > 0.0) out.push_back({-1, 0, zeta0_});
    return out;
  }

  RawStepLaw raw() const { return {d_, zeta0_, axes_}; }

 private:
  StepLaw() = default;

  int d_ = 0;
  double zeta0_ = 0.0;
  std::vector<std::vector<double>> axes_;
};

inline WalkClass classify(const StepLaw& law) {
  if (law.zeta0() > 0.0) return WalkClass::Aperiodic;
  for (int s = 0; s < law.dim(); ++s)
    for (int r = 2; r <= law.range(s); r += 2)
      if (law.weight(s, r) > 0.0) return WalkClass::Aperiodic;
  return WalkClass::Bipartite;
}

/// Per-axis moments zeta_s(k) = sum_r zeta_{s,r} r^k for k = 2, 4, 6, i.e. the
/// diagonals of Gamma_2, Gamma_4, Gamma_6, plus the traces the expansion uses.
struct Moments {
  std::vector<double> gamma2;
  std::vector<double> gamma4;
  std::vector<double> gamma6;
  double det_gamma2 = 0.0;
  double tr_g4g2m2 = 0.0;     ///< tr(G4 G2^-2)
  double tr_g6g2m3 = 0.0;     ///< tr(G6 G2^-3)
  double tr_g4sq_g2m4 = 0.0;  ///< tr(G4^2 G2^-4)

  int dim() const noexcept { return static_cast<int>(gamma2.size()); }

  static Moments from_diagonals(std::vector<double> g2, std::vector<double> g4, std::vector<double> g6) {
    if (g2.empty() || g2.size() != g4.size() || g2.size() != g6.size())
      throw Error(ErrorCode::InvalidArgument, "moment diagonals must be non-empty and of equal length");
    Moments m;
    m.gamma2 = std::move(g2);
    m.gamma4 = std::move(g4);
    m.gamma6 = std::move(g6);
    m.det_gamma2 = 1.0;
    for (std::size_t s = 0; s < m.gamma2.size(); ++s) {
      const double a = m.gamma2[s];
      if (!(a > 0.0)) throw Error(ErrorCode::InvalidArgument, "gamma2 entries must be positive");
      m.det_gamma2 *= a;
      m.tr_g4g2m2 += m.gamma4[s] / (a * a);
      m.tr_g6g2m3 += m.gamma6[s] / (a * a * a);
      m.tr_g4sq_g2m4 += (m.gamma4[s] * m.gamma4[s]) / (a * a * a * a);
    }
    return m;
  }
};

inline Moments moments(const StepLaw& law) {
  const auto d = static_cast<std::size_t>(law.dim());
  std::vector<double> g2(d, 0.0), g4(d, 0.0), g6(d, 0.0);
  for (int s = 0; s < law.dim(); ++s)
    for (int r = 1; r <= law.range(s); ++r) {
      const double w = law.weight(s, r);
      const double r2 = static_cast<double>(r) * r;
      g2[static_cast<std::size_t>(s)] += w * r2;
      g4[static_cast<std::size_t>(s)] += w * r2 * r2;
      g6[static_cast<std::size_t>(s)] += w * r2 * r2 * r2;
    }
  return Moments::from_diagonals(std::move(g2), std::move(g4), std::move(g6));
}

/// Law with zeta0 = sigma and zeta_{s,1} = (1 - sigma)/d on every axis.
inline StepLaw lazy_simple_law(int d, double sigma) {
  RawStepLaw raw;
  raw.d = d;
  raw.zeta0 = sigma;
  raw.axes.assign(static_cast<std::size_t>(d), std::vector<double>{(1.0 - sigma) / d});
  return StepLaw::validate(raw);
}

}  // namespace lltbrw
