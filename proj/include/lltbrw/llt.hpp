#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <vector>

#include "lltbrw/error.hpp"
#include "lltbrw/exact_dist.hpp"
#include "lltbrw/lattice.hpp"
#include "lltbrw/numeric.hpp"
#include "lltbrw/step_law.hpp"

namespace lltbrw {

/// First- and second-order constants of the local expansion
///   P(S_n = z) ~ factor (2 pi n)^{-d/2} det(G2)^{-1/2}
///     { 1 + [tau - q(z)/2] / n + [q(z)^2/8 - <Lambda z,z> + chi] / n^2 }
/// with q(z) = <z, G2^{-1} z>.
struct ExpansionConstants {
  int d = 0;
  double tau = 0.0;
  std::vector<double> lambda;  ///< diagonal of Lambda_d
  double chi = 0.0;
  /// The five summands of chi in display order.
  std::array<double, 5> chi_terms{};
  double norm = 0.0;  ///< det(G2)^{-1/2}
  WalkClass walk_class = WalkClass::Aperiodic;

  double factor() const noexcept { return walk_class == WalkClass::Bipartite ? 2.0 : 1.0; }
};

inline ExpansionConstants constants(const Moments& m, WalkClass walk_class) {
  ExpansionConstants c;
  const int d = m.dim();
  const double dd = d;
  const double tr4 = m.tr_g4g2m2;
  c.d = d;
  c.walk_class = walk_class;
  c.norm = 1.0 / std::sqrt(m.det_gamma2);
  c.tau = tr4 / 8.0 - dd * (dd + 2.0) / 8.0;
  c.lambda.resize(static_cast<std::size_t>(d));
  for (std::size_t s = 0; s < c.lambda.size(); ++s) {
    const double g2 = m.gamma2[s];
    c.lambda[s] = (tr4 - (dd + 2.0) * (dd + 4.0)) / 16.0 / g2 + m.gamma4[s] / (4.0 * g2 * g2 * g2);
  }
  c.chi_terms = {
      -(dd + 2.0) * (dd + 4.0) * tr4 / 64.0,
      m.tr_g4sq_g2m4 / 12.0,
      tr4 * tr4 / 128.0,
      -m.tr_g6g2m3 / 48.0,
      dd * (dd + 2.0) * (dd + 4.0) * (3.0 * dd + 2.0) / 384.0,
  };
  c.chi = 0.0;
  for (double t : c.chi_terms) c.chi += t;
  return c;
}

/// <z, G2^{-1} z>
inline double inverse_quadratic(const Moments& m, const Point& z) {
  double q = 0.0;
  for (std::size_t s = 0; s < z.size(); ++s) q += static_cast<double>(z[s]) * static_cast<double>(z[s]) / m.gamma2[s];
  return q;
}

/// <Lambda z, z>
inline double lambda_quadratic(const ExpansionConstants& c, const Point& z) {
  double q = 0.0;
  for (std::size_t s = 0; s < z.size(); ++s) q += c.lambda[s] * static_cast<double>(z[s]) * static_cast<double>(z[s]);
  return q;
}

/// Coefficient of 1/n in the bracket.
inline double first_order_coefficient(const ExpansionConstants& c, const Moments& m, const Point& z) {
  return c.tau - 0.5 * inverse_quadratic(m, z);
}

/// Coefficient of 1/n^2 in the bracket. `lambda_sign` = -1 is the form the
/// expansion uses; +1 gives the opposite-sign candidate for comparisons.
inline double second_order_coefficient(const ExpansionConstants& c, const Moments& m, const Point& z,
                                       double lambda_sign = -1.0) {
  const double q = inverse_quadratic(m, z);
  return q * q / 8.0 + lambda_sign * lambda_quadratic(c, z) + c.chi;
}

/// factor (2 pi n)^{-d/2} det(G2)^{-1/2}
inline double leading_density(const ExpansionConstants& c, int n) {
  return c.factor() * std::pow(2.0 * std::numbers::pi * n, -0.5 * c.d) * c.norm;
}

inline double rw_expansion(const ExpansionConstants& c, const Moments& m, int n, const Point& z) {
  if (n < 1) throw Error(ErrorCode::InvalidArgument, "expansion needs n >= 1");
  if (c.walk_class == WalkClass::Bipartite && !parity_matched(n, z)) return 0.0;
  const double nn = n;
  return leading_density(c, n) *
         (1.0 + first_order_coefficient(c, m, z) / nn + second_order_coefficient(c, m, z) / (nn * nn));
}

/// gamma_n(z) = n^{d/2+2} (P(S_n = z) - expansion), given the exact law of S_n.
inline double gamma_residual(const LatticeDist& dist, const ExpansionConstants& c, const Moments& m, const Point& z) {
  const int n = dist.n();
  return std::pow(static_cast<double>(n), 0.5 * c.d + 2.0) * (dist.at(z) - rw_expansion(c, m, n, z));
}

inline double gamma_residual(const StepLaw& law, int n, const Point& z, const ConvolveOptions& opts = {}) {
  const Moments m = moments(law);
  const ExpansionConstants c = constants(m, classify(law));
  return gamma_residual(exact_distribution(law, n, opts), c, m, z);
}

/// Empirical 1/n and 1/n^2 coefficients at z from exact probabilities.
struct CoefficientFit {
  std::vector<int> n;
  std::vector<double> probability;
  std::vector<double> rho;      ///< P / leading - 1
  std::vector<double> c1_seq;   ///< n rho
  std::vector<double> c2_seq;   ///< n^2 (rho - c1_theory / n)
  double c1_hat = 0.0;
  double c2_hat = 0.0;
  double c1_theory = 0.0;
  double c2_theory = 0.0;         ///< -<Lambda z,z> form
  double c2_opposite_sign = 0.0;  ///< +<Lambda z,z> form
};

/// Builds the fit from exact probabilities P(S_n = z), one per entry of n_list.
inline CoefficientFit fit_from_probabilities(const ExpansionConstants& c, const Moments& m, const Point& z,
                                             const std::vector<int>& n_list, const std::vector<double>& probs) {
  if (n_list.size() != probs.size()) throw Error(ErrorCode::InvalidArgument, "one probability per step count");
  CoefficientFit fit;
  fit.c1_theory = first_order_coefficient(c, m, z);
  fit.c2_theory = second_order_coefficient(c, m, z, -1.0);
  fit.c2_opposite_sign = second_order_coefficient(c, m, z, +1.0);
  for (std::size_t i = 0; i < n_list.size(); ++i) {
    const double nn = n_list[i];
    const double rho = probs[i] / leading_density(c, n_list[i]) - 1.0;
    fit.n.push_back(n_list[i]);
    fit.probability.push_back(probs[i]);
    fit.rho.push_back(rho);
    fit.c1_seq.push_back(nn * rho);
    fit.c2_seq.push_back(nn * nn * (rho - fit.c1_theory / nn));
  }
  fit.c1_hat = fit.c1_seq.back();
  fit.c2_hat = fit.c2_seq.back();
  return fit;
}

inline void check_fit_schedule(const ExpansionConstants& c, const Point& z, const std::vector<int>& n_list) {
  if (n_list.size() < 3) throw Error(ErrorCode::InvalidArgument, "coefficient fit needs at least three step counts");
  if (!std::is_sorted(n_list.begin(), n_list.end()) || n_list.front() < 1)
    throw Error(ErrorCode::InvalidArgument, "step counts must be increasing and positive");
  if (c.walk_class == WalkClass::Bipartite)
    for (int n : n_list)
      if (!parity_matched(n, z))
        throw Error(ErrorCode::InvalidArgument, "step count " + std::to_string(n) + " has the wrong parity for z");
}

inline CoefficientFit fit_correction_coefficients(const StepLaw& law, const Point& z, std::vector<int> n_list,
                                                  const ConvolveOptions& opts = {}) {
  const Moments m = moments(law);
  const ExpansionConstants c = constants(m, classify(law));
  check_fit_schedule(c, z, n_list);
  std::vector<double> probs;
  LatticeDist dist = delta_dist(law);
  for (int target : n_list) {
    while (dist.n() < target) dist = convolve_step(dist, law, opts);
    probs.push_back(dist.at(z));
  }
  return fit_from_probabilities(c, m, z, n_list, probs);
}

// ---------------------------------------------------------------------------
// Gaussian moment identities behind the expansion constants.
// ---------------------------------------------------------------------------

inline constexpr int kGaussianIdentityCount = 13;

struct IdentityValue {
  int index = 0;
  double quadrature = 0.0;
  double closed_form = 0.0;
  double relative_error = 0.0;
};

inline std::size_t default_identity_panels(int d) {
  switch (d) {
    case 1: return 4096;
    case 2: return 1024;
    default: return 256;
  }
}

/// Closed forms, all multiplied by (2 pi)^{d/2} det(G2)^{-1/2}.
inline std::array<double, kGaussianIdentityCount> gaussian_identity_closed_forms(const Moments& m, const Point& z) {
  const double d = m.dim();
  const double scale = std::pow(2.0 * std::numbers::pi, d / 2.0) / std::sqrt(m.det_gamma2);
  double q = 0.0, q4 = 0.0;
  for (std::size_t s = 0; s < z.size(); ++s) {
    const double zz = static_cast<double>(z[s]) * static_cast<double>(z[s]);
    const double g2 = m.gamma2[s];
    q += zz / g2;
    q4 += m.gamma4[s] * zz / (g2 * g2 * g2);
  }
  const double t4 = m.tr_g4g2m2;
  return {
      scale * q,
      scale * 3.0 * q * q,
      scale * (d + 2) * (d + 4) * q,
      scale * 3.0 * (4.0 * q4 + t4 * q),
      scale,
      scale * 3.0 * t4,
      scale * d * (d + 2),
      scale * 3.0 * (d + 4) * t4,
      scale * 15.0 * m.tr_g6g2m3,
      scale * d * (d + 2) * (d + 4),
      scale * d * (d + 2) * (d + 4) * (d + 6),
      scale * (96.0 * m.tr_g4sq_g2m4 + 9.0 * t4 * t4),
      scale * 3.0 * (d + 4) * (d + 6) * t4,
  };
}

/// Product trapezoid rule over |theta_s| <= 12 / sqrt(gamma2_s) for all 13
/// integrands at once.
inline std::array<double, kGaussianIdentityCount> gaussian_identity_quadrature(const Moments& m, const Point& z,
                                                                              std::size_t panels) {
  const auto d = static_cast<std::size_t>(m.dim());
  if (d > 3) throw Error(ErrorCode::InvalidArgument, "identity quadrature supports d <= 3");
  if (z.size() != d) throw Error(ErrorCode::InvalidArgument, "point dimension differs from moments");
  if (panels < 16) throw Error(ErrorCode::ResolutionTooLow, "identity quadrature needs at least 16 panels");

  const std::size_t nodes = panels + 1;
  std::vector<std::vector<double>> theta(d, std::vector<double>(nodes));
  std::vector<std::vector<double>> weight(d, std::vector<double>(nodes));
  for (std::size_t s = 0; s < d; ++s) {
    const double half = 12.0 / std::sqrt(m.gamma2[s]);
    const double h = 2.0 * half / static_cast<double>(panels);
    for (std::size_t j = 0; j < nodes; ++j) {
      theta[s][j] = -half + h * static_cast<double>(j);
      const double t = theta[s][j];
      weight[s][j] = h * ((j == 0 || j == panels) ? 0.5 : 1.0) * std::exp(-0.5 * m.gamma2[s] * t * t);
    }
  }

  std::array<NeumaierSum, kGaussianIdentityCount> acc{};
  std::array<std::size_t, 3> idx{0, 0, 0};
  while (true) {
    double w = 1.0, a = 0.0, b = 0.0, c6 = 0.0, lz = 0.0;
    for (std::size_t s = 0; s < d; ++s) {
      const double t = theta[s][idx[s]];
      const double t2 = t * t;
      w *= weight[s][idx[s]];
      a += m.gamma2[s] * t2;
      b += m.gamma4[s] * t2 * t2;
      c6 += m.gamma6[s] * t2 * t2 * t2;
      lz += t * static_cast<double>(z[s]);
    }
    const double lz2 = lz * lz;
    const double a2 = a * a;
    acc[0].add(w * lz2);
    acc[1].add(w * lz2 * lz2);
    acc[2].add(w * a2 * lz2);
    acc[3].add(w * b * lz2);
    acc[4].add(w);
    acc[5].add(w * b);
    acc[6].add(w * a2);
    acc[7].add(w * a * b);
    acc[8].add(w * c6);
    acc[9].add(w * a2 * a);
    acc[10].add(w * a2 * a2);
    acc[11].add(w * b * b);
    acc[12].add(w * b * a2);

    std::size_t s = d;
    while (s-- > 0) {
      if (++idx[s] < nodes) break;
      idx[s] = 0;
    }
    if (s == static_cast<std::size_t>(-1)) break;
  }
  std::array<double, kGaussianIdentityCount> out{};
  for (int i = 0; i < kGaussianIdentityCount; ++i) out[static_cast<std::size_t>(i)] = acc[static_cast<std::size_t>(i)].value();
  return out;
}

namespace detail {

inline double identity_relative_error(double quad, double closed, double scale) {
  // Identity 1-4 vanish at z = 0; measure against the Gaussian mass there.
  const double denom = closed != 0.0 ? std::abs(closed) : scale;
  return std::abs(quad - closed) / denom;
}

}  // namespace detail

inline std::array<IdentityValue, kGaussianIdentityCount> gaussian_identities(const Moments& m, const Point& z,
                                                                             std::size_t panels) {
  const auto quad = gaussian_identity_quadrature(m, z, panels);
  const auto closed = gaussian_identity_closed_forms(m, z);
  const double scale = std::pow(2.0 * std::numbers::pi, m.dim() / 2.0) / std::sqrt(m.det_gamma2);
  std::array<IdentityValue, kGaussianIdentityCount> out{};
  for (std::size_t i = 0; i < out.size(); ++i)
    out[i] = {static_cast<int>(i + 1), quad[i], closed[i], detail::identity_relative_error(quad[i], closed[i], scale)};
  return out;
}

/// Relative error of identity `identity_index` (1..13).
inline double gaussian_identity_check(const Moments& m, int identity_index, const Point& z, std::size_t panels) {
  if (identity_index < 1 || identity_index > kGaussianIdentityCount)
    throw Error(ErrorCode::InvalidArgument, "identity index must be in 1..13");
  return gaussian_identities(m, z, panels)[static_cast<std::size_t>(identity_index - 1)].relative_error;
}

}  // namespace lltbrw
