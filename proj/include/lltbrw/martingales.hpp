#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

#include "lltbrw/error.hpp"
#include "lltbrw/gw_brw.hpp"
#include "lltbrw/lattice.hpp"
#include "lltbrw/llt.hpp"
#include "lltbrw/numeric.hpp"
#include "lltbrw/step_law.hpp"

namespace lltbrw {

enum class Functional { W, N1, N2, N2z, N3, N4 };

inline constexpr Functional kAllFunctionals[] = {Functional::W,   Functional::N1, Functional::N2,
                                                 Functional::N2z, Functional::N3, Functional::N4};

inline const char* to_string(Functional f) {
  switch (f) {
    case Functional::W: return "W";
    case Functional::N1: return "N1";
    case Functional::N2: return "N2";
    case Functional::N2z: return "N2z";
    case Functional::N3: return "N3";
    case Functional::N4: return "N4";
  }
  return "?";
}

/// Values of all functionals. Built either per particle (the polynomial
/// f(x, n)) or as a generation readout m^{-n} sum_u f(S_u, n).
struct MartingaleReadout {
  int n = 0;
  double W = 0.0;
  std::vector<double> N1;
  std::vector<double> N2;
  double N2z = 0.0;
  std::vector<double> N3;
  double N4 = 0.0;

  /// Flattened components of one functional.
  std::vector<double> component(Functional f) const {
    switch (f) {
      case Functional::W: return {W};
      case Functional::N1: return N1;
      case Functional::N2: return N2;
      case Functional::N2z: return {N2z};
      case Functional::N3: return N3;
      case Functional::N4: return {N4};
    }
    return {};
  }
};

/// The per-particle polynomials: 1, x, (x_s^2 - n g2_s)_s,
/// <x,G2^-1 z>^2 - n <G2^-1 z,z>, <x,G2^-1 x> x - (d+2) n x and
/// <x,G2^-1 x>^2 - (4+2d) n <x,G2^-1 x> + d(d+2)(n^2+n) - tr(G4 G2^-2) n.
inline MartingaleReadout particle_functionals(const Moments& mom, std::span<const double> x, int n, const Point& z) {
  const auto d = x.size();
  const double dd = static_cast<double>(d);
  const double nn = n;
  MartingaleReadout f;
  f.n = n;
  f.W = 1.0;
  f.N1.assign(x.begin(), x.end());
  f.N2.resize(d);
  f.N3.resize(d);
  double qx = 0.0, xz = 0.0, qz = 0.0;
  for (std::size_t s = 0; s < d; ++s) {
    const double g2 = mom.gamma2[s];
    const double zs = static_cast<double>(z[s]);
    f.N2[s] = x[s] * x[s] - nn * g2;
    qx += x[s] * x[s] / g2;
    xz += x[s] * zs / g2;
    qz += zs * zs / g2;
  }
  f.N2z = xz * xz - nn * qz;
  for (std::size_t s = 0; s < d; ++s) f.N3[s] = qx * x[s] - (dd + 2.0) * nn * x[s];
  f.N4 = qx * qx - (4.0 + 2.0 * dd) * nn * qx + dd * (dd + 2.0) * (nn * nn + nn) - mom.tr_g4g2m2 * nn;
  return f;
}

/// Readout of a generation: m^{-n} sum_sites count * f(site, n), with
/// compensated summation and the m^{-n} scaling applied last.
template <CountType Count>
MartingaleReadout readout(const GenerationState<Count>& state, double m, const Moments& mom, const Point& z) {
  if (!(m > 1.0)) throw Error(ErrorCode::InvalidArgument, "mean offspring must exceed 1");
  const auto d = static_cast<std::size_t>(mom.dim());
  NeumaierSum w, n2z, n4;
  std::vector<NeumaierSum> n1(d), n2(d), n3(d);
  std::vector<double> x(d);
  for (const auto& [site, c] : state.counts) {
    const double weight = static_cast<double>(c);
    for (std::size_t s = 0; s < d; ++s) x[s] = static_cast<double>(site[s]);
    const MartingaleReadout f = particle_functionals(mom, x, state.n, z);
    w.add(weight);
    n2z.add(weight * f.N2z);
    n4.add(weight * f.N4);
    for (std::size_t s = 0; s < d; ++s) {
      n1[s].add(weight * f.N1[s]);
      n2[s].add(weight * f.N2[s]);
      n3[s].add(weight * f.N3[s]);
    }
  }
  const double scale = std::pow(m, -static_cast<double>(state.n));
  MartingaleReadout r;
  r.n = state.n;
  r.W = static_cast<double>(state.total) * scale;
  r.N2z = n2z.value() * scale;
  r.N4 = n4.value() * scale;
  r.N1.resize(d);
  r.N2.resize(d);
  r.N3.resize(d);
  for (std::size_t s = 0; s < d; ++s) {
    r.N1[s] = n1[s].value() * scale;
    r.N2[s] = n2[s].value() * scale;
    r.N3[s] = n3[s].value() * scale;
  }
  return r;
}

struct HarmonicityDefect {
  double defect = 0.0;  ///< max over components of |E f(x+L, n+1) - f(x, n)|
  double scale = 0.0;   ///< 1 + max over components of |f(x, n)|
  double relative() const noexcept { return defect / scale; }
};

/// Exact one-step annealed expectation over the step-law atoms.
inline HarmonicityDefect harmonicity(Functional fn, const StepLaw& law, const Moments& mom, const Point& x, int n,
                                     const Point& z) {
  const auto d = static_cast<std::size_t>(law.dim());
  std::vector<double> xd(d);
  for (std::size_t s = 0; s < d; ++s) xd[s] = static_cast<double>(x[s]);
  const std::vector<double> here = particle_functionals(mom, xd, n, z).component(fn);

  std::vector<NeumaierSum> expect(here.size());
  for (const Atom& a : law.atoms()) {
    std::vector<double> y = xd;
    if (a.axis >= 0) y[static_cast<std::size_t>(a.axis)] += static_cast<double>(a.offset);
    const std::vector<double> next = particle_functionals(mom, y, n + 1, z).component(fn);
    for (std::size_t i = 0; i < next.size(); ++i) expect[i].add(a.prob * next[i]);
  }
  HarmonicityDefect out;
  double mag = 0.0;
  for (std::size_t i = 0; i < here.size(); ++i) {
    out.defect = std::max(out.defect, std::abs(expect[i].value() - here[i]));
    mag = std::max(mag, std::abs(here[i]));
  }
  out.scale = 1.0 + mag;
  return out;
}

inline double harmonicity_defect(Functional fn, const StepLaw& law, const Moments& mom, const Point& x, int n,
                                 const Point& z) {
  return harmonicity(fn, law, mom, x, n, z).defect;
}

/// Readout frozen at a finite generation and used in place of the a.s. limits.
struct LimitEstimates {
  std::vector<double> V1;
  std::vector<double> V2;
  double V2z = 0.0;
  std::vector<double> V3;
  double V4 = 0.0;
  double W_inf = 1.0;
  int source_generation = 0;

  static LimitEstimates from_readout(const MartingaleReadout& r) {
    return {r.N1, r.N2, r.N2z, r.N3, r.N4, r.W, r.n};
  }

  /// W = 1 and every correction limit zero.
  static LimitEstimates trivial(int d) {
    const auto n = static_cast<std::size_t>(d);
    return {std::vector<double>(n, 0.0), std::vector<double>(n, 0.0), 0.0, std::vector<double>(n, 0.0), 0.0, 1.0, 0};
  }
};

/// F1(z) = (tau - q(z)/2) W + <V1, G2^-1 z> - <V2, G2^-1 1>/2.
inline double f1_eval(const LimitEstimates& est, const ExpansionConstants& c, const Moments& mom, const Point& z) {
  double v1 = 0.0, v2 = 0.0;
  for (std::size_t s = 0; s < z.size(); ++s) {
    v1 += est.V1[s] * static_cast<double>(z[s]) / mom.gamma2[s];
    v2 += est.V2[s] / mom.gamma2[s];
  }
  return first_order_coefficient(c, mom, z) * est.W_inf + v1 - 0.5 * v2;
}

/// The summands of F2(z), kept apart so other forms can be compared term by
/// term.
struct SecondOrderTerms {
  double w_quartic = 0.0;    ///< q(z)^2/8 W
  double w_quadratic = 0.0;  ///< -<Lambda z,z> W
  double w_constant = 0.0;   ///< chi W
  double v1 = 0.0;
  double v2 = 0.0;
  double v2z = 0.0;
  double v3 = 0.0;
  double v4 = 0.0;

  double total() const noexcept { return w_quartic + w_quadratic + w_constant + v1 + v2 + v2z + v3 + v4; }
};

inline SecondOrderTerms f2_terms(const LimitEstimates& est, const ExpansionConstants& c, const Moments& mom,
                                 const Point& z) {
  const double q = inverse_quadratic(mom, z);
  SecondOrderTerms t;
  t.w_quartic = q * q / 8.0 * est.W_inf;
  t.w_quadratic = -lambda_quadratic(c, z) * est.W_inf;
  t.w_constant = c.chi * est.W_inf;
  for (std::size_t s = 0; s < z.size(); ++s) {
    const double g2 = mom.gamma2[s];
    const double zs = static_cast<double>(z[s]);
    t.v1 += est.V1[s] * (2.0 * c.lambda[s] - 0.5 * q / g2) * zs;
    t.v2 += est.V2[s] * (0.25 * q / g2 - c.lambda[s]);
    t.v3 += -0.5 * est.V3[s] * zs / g2;
  }
  t.v2z = 0.5 * est.V2z;
  t.v4 = est.V4 / 8.0;
  return t;
}

inline double f2_eval(const LimitEstimates& est, const ExpansionConstants& c, const Moments& mom, const Point& z) {
  return f2_terms(est, c, mom, z).total();
}

/// Predicted m^{-n} Z_n(z): factor (2 pi n)^{-d/2} det(G2)^{-1/2} [W + F1/n + F2/n^2].
inline double theorem_prediction(const LimitEstimates& est, const ExpansionConstants& c, const Moments& mom, int n,
                                 const Point& z) {
  if (n < 1) throw Error(ErrorCode::InvalidArgument, "prediction needs n >= 1");
  if (c.walk_class == WalkClass::Bipartite && !parity_matched(n, z)) return 0.0;
  const double nn = n;
  return leading_density(c, n) *
         (est.W_inf + f1_eval(est, c, mom, z) / nn + f2_eval(est, c, mom, z) / (nn * nn));
}

/// Constants of the lazy simple walk (zeta0 = sigma, zeta_{s,1} = (1-sigma)/d).
inline double corollary_mu(double sigma, int d) {
  const double dd = d;
  return -(1.0 + 4.0 / dd) / 8.0 + sigma * (dd / 16.0 + 3.0 / 8.0 + 1.0 / (2.0 * dd));
}

inline double corollary_chi(double sigma, int d) {
  const double dd = d;
  return dd / 48.0 - 1.0 / 32.0 + 1.0 / (24.0 * dd) +
         sigma * (dd + 2.0) * (dd + 4.0) / 64.0 * (sigma / 2.0 + (sigma - 2.0) / (3.0 * dd));
}

struct CorollaryValues {
  double H1 = 0.0;
  double H2 = 0.0;
  SecondOrderTerms h2_terms;  ///< already multiplied by d^2/(1-sigma)^2
  double mu = 0.0;
  double chi = 0.0;
};

/// H_{sigma,1}(z), H_{sigma,2}(z) for the lazy simple walk, evaluated with the
/// printed mu and chi (including the printed +mu |z|^2 W sign). The rescaled
/// limits are V2z (d/(1-sigma))^-2, V3 (d/(1-sigma))^-1 and V4 (d/(1-sigma))^-2.
inline CorollaryValues corollary_eval(double sigma, int d, const LimitEstimates& est, const Point& z) {
  if (!(sigma >= 0.0 && sigma < 1.0)) throw Error(ErrorCode::InvalidArgument, "sigma must be in [0,1)");
  const double c = d / (1.0 - sigma);
  const double c2 = c * c;
  double zz = 0.0, zv1 = 0.0, v2sum = 0.0, zv3 = 0.0;
  for (std::size_t s = 0; s < z.size(); ++s) {
    const double zs = static_cast<double>(z[s]);
    zz += zs * zs;
    zv1 += zs * est.V1[s];
    v2sum += est.V2[s];
    zv3 += zs * est.V3[s] / c;
  }
  const double W = est.W_inf;
  CorollaryValues out;
  out.mu = corollary_mu(sigma, d);
  out.chi = corollary_chi(sigma, d);
  out.H1 = c * ((sigma * (d + 2.0) / 8.0 - 0.25 - 0.5 * zz) * W + zv1 - 0.5 * v2sum);

  SecondOrderTerms& t = out.h2_terms;
  t.w_quartic = c2 * (zz * zz / 8.0) * W;
  t.w_quadratic = c2 * out.mu * zz * W;
  t.w_constant = c2 * out.chi * W;
  t.v1 = c2 * (2.0 * out.mu - 0.5 * zz) * zv1;
  t.v2 = c2 * (zz / 4.0 - out.mu) * v2sum;
  t.v2z = c2 * 0.5 * (est.V2z / c2);
  t.v3 = c2 * (-0.5) * zv3;
  t.v4 = c2 * (est.V4 / c2) / 8.0;
  out.H2 = t.total();
  return out;
}

/// n^{d/2+2} (m^{-n} Z_n(z) - prediction).
template <CountType Count>
double brw_residual(const GenerationState<Count>& snapshot, double m, const LimitEstimates& est,
                    const ExpansionConstants& c, const Moments& mom, const Point& z) {
  const int n = snapshot.n;
  const auto it = snapshot.counts.find(z);
  const double count = it == snapshot.counts.end() ? 0.0 : static_cast<double>(it->second);
  const double observed = count * std::pow(m, -static_cast<double>(n));
  return std::pow(static_cast<double>(n), 0.5 * c.d + 2.0) * (observed - theorem_prediction(est, c, mom, n, z));
}

/// (2 pi n)^{d/2} det(G2)^{1/2} / factor * m^{-n} Z_n(z) - W_n; tends to F1(z)/n.
template <CountType Count>
double first_order_statistic(const GenerationState<Count>& snapshot, double m, const ExpansionConstants& c,
                             const Point& z) {
  const int n = snapshot.n;
  const auto it = snapshot.counts.find(z);
  const double count = it == snapshot.counts.end() ? 0.0 : static_cast<double>(it->second);
  const double scale = std::pow(m, -static_cast<double>(n));
  return count * scale / leading_density(c, n) - static_cast<double>(snapshot.total) * scale;
}

}  // namespace lltbrw
