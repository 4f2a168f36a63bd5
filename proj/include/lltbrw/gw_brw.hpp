#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <ostream>
#include <string>
#include <vector>

#include "lltbrw/binomial.hpp"
#include "lltbrw/error.hpp"
#include "lltbrw/lattice.hpp"
#include "lltbrw/rng.hpp"
#include "lltbrw/step_law.hpp"

namespace lltbrw {

/// Finite offspring law; probs[k] = P(N = k).
struct OffspringLaw {
  std::vector<double> probs;
  double mean = 0.0;

  static constexpr double kNormalizationTolerance = 1e-12;

  static OffspringLaw validate(const std::vector<double>& raw) {
    if (raw.empty()) throw Error(ErrorCode::InvalidArgument, "offspring table is empty");
    double sum = 0.0, mean = 0.0;
    for (std::size_t k = 0; k < raw.size(); ++k) {
      if (!(raw[k] >= 0.0)) throw Error(ErrorCode::InvalidArgument, "offspring probability is negative");
      sum += raw[k];
      mean += static_cast<double>(k) * raw[k];
    }
    if (std::abs(sum - 1.0) > kNormalizationTolerance)
      throw Error(ErrorCode::NonNormalized, "offspring probabilities sum to " + std::to_string(sum));
    if (raw[0] > 0.0) throw Error(ErrorCode::HasExtinction, "P(N = 0) must be zero");
    OffspringLaw law;
    law.probs = raw;
    for (double& p : law.probs) p /= sum;
    law.mean = mean / sum;
    if (!(law.mean > 1.0))
      throw Error(ErrorCode::SubcriticalOrCritical, "mean offspring " + std::to_string(law.mean) + " is not > 1");
    while (law.probs.size() > 1 && law.probs.back() == 0.0) law.probs.pop_back();
    return law;
  }

  /// Skips validation; for degenerate laws in tests (e.g. N = 1).
  static OffspringLaw unchecked(std::vector<double> probs) {
    OffspringLaw law;
    law.probs = std::move(probs);
    for (std::size_t k = 0; k < law.probs.size(); ++k) law.mean += static_cast<double>(k) * law.probs[k];
    return law;
  }
};

/// Site occupancy of one generation: counts[z] = Z_n(z).
template <CountType Count>
struct GenerationState {
  int n = 0;
  std::map<Point, Count> counts;
  Count total = 0;
};

template <CountType Count>
GenerationState<Count> initial_state(int d) {
  GenerationState<Count> s;
  s.counts.emplace(origin(d), Count{1});
  s.total = 1;
  return s;
}

inline std::string count_to_string(uint128 v) {
  if (v == 0) return "0";
  std::string out;
  while (v > 0) {
    out.insert(out.begin(), static_cast<char>('0' + static_cast<int>(v % 10)));
    v /= 10;
  }
  return out;
}
inline std::string count_to_string(std::uint64_t v) { return std::to_string(v); }

namespace detail {

template <CountType Count>
void checked_add(Count& acc, Count x, int generation) {
  if (__builtin_add_overflow(acc, x, &acc))
    throw Error(ErrorCode::CountOverflow, "particle count overflows at generation " + std::to_string(generation));
}

template <CountType Count>
Count checked_mul(Count a, Count b, int generation) {
  Count r;
  if (__builtin_mul_overflow(a, b, &r))
    throw Error(ErrorCode::CountOverflow, "particle count overflows at generation " + std::to_string(generation));
  return r;
}

}  // namespace detail

/// One generation of the count-based branching random walk. For a site with
/// c particles: the c offspring numbers are summarized by a multinomial split
/// of c over offspring values, giving T = sum_k k c_k children, and the T
/// children are split over the step-law atoms by a second multinomial. The
/// stream for each site is keyed by (generation, site ordinal), so the result
/// is a pure function of (state, seed).
template <CountType Count>
GenerationState<Count> evolve_generation(const GenerationState<Count>& state, const OffspringLaw& off,
                                         const StepLaw& law, const ReplicateSeed& seed) {
  const std::vector<Atom> atoms = law.atoms();
  std::vector<double> atom_probs;
  for (const auto& a : atoms) atom_probs.push_back(a.prob);
  std::vector<Count> by_value(off.probs.size());
  std::vector<Count> by_atom(atoms.size());
  const int next_gen = state.n + 1;

  GenerationState<Count> next;
  next.n = next_gen;
  std::uint64_t ordinal = 0;
  for (const auto& [site, c] : state.counts) {
    Stream rng = seed.stream(static_cast<std::uint64_t>(state.n), ordinal++);
    multinomial_exact<Count>(c, off.probs, rng, by_value);
    Count children = 0;
    for (std::size_t k = 1; k < by_value.size(); ++k)
      if (by_value[k] != 0)
        detail::checked_add(children, detail::checked_mul(by_value[k], static_cast<Count>(k), next_gen), next_gen);
    if (children == 0) continue;
    multinomial_exact<Count>(children, atom_probs, rng, by_atom);
    for (std::size_t i = 0; i < atoms.size(); ++i) {
      if (by_atom[i] == 0) continue;
      Point dest = site;
      if (atoms[i].axis >= 0) dest[static_cast<std::size_t>(atoms[i].axis)] += atoms[i].offset;
      detail::checked_add(next.counts[dest], by_atom[i], next_gen);
    }
    detail::checked_add(next.total, children, next_gen);
  }
  return next;
}

/// Runs to n_max from one particle at the origin, calling `visit` on every
/// generation 0..n_max.
template <CountType Count>
void simulate_each(const OffspringLaw& off, const StepLaw& law, int n_max, const ReplicateSeed& seed,
                   const std::function<void(const GenerationState<Count>&)>& visit) {
  if (n_max < 1) throw Error(ErrorCode::InvalidArgument, "n_max must be >= 1");
  GenerationState<Count> state = initial_state<Count>(law.dim());
  visit(state);
  for (int g = 0; g < n_max; ++g) {
    state = evolve_generation(state, off, law, seed);
    visit(state);
  }
}

/// Snapshots at the generations listed in `probes` (each <= n_max).
template <CountType Count>
std::vector<GenerationState<Count>> simulate(const OffspringLaw& off, const StepLaw& law, int n_max,
                                             const ReplicateSeed& seed, const std::vector<int>& probes) {
  std::vector<GenerationState<Count>> out;
  simulate_each<Count>(off, law, n_max, seed, [&](const GenerationState<Count>& s) {
    for (int p : probes)
      if (p == s.n) {
        out.push_back(s);
        break;
      }
  });
  return out;
}

/// CSV rows generation,z_1..z_d,count with exact integer counts.
template <CountType Count>
void write_snapshot_csv(std::ostream& os, const GenerationState<Count>& state, bool header = true) {
  if (header) {
    os << "generation";
    const std::size_t d = state.counts.empty() ? 0 : state.counts.begin()->first.size();
    for (std::size_t s = 0; s < d; ++s) os << ",z" << (s + 1);
    os << ",count\n";
  }
  for (const auto& [site, c] : state.counts) {
    os << state.n;
    for (auto v : site) os << ',' << v;
    os << ',' << count_to_string(c) << '\n';
  }
}

}  // namespace lltbrw
