#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <fstream>
#include <mutex>
#include <numbers>
#include <string>
#include <thread>
#include <vector>

#include "lltbrw/exact_dist.hpp"
#include "lltbrw/gw_brw.hpp"
#include "lltbrw/harness/config.hpp"
#include "lltbrw/harness/report.hpp"
#include "lltbrw/lattice.hpp"
#include "lltbrw/llt.hpp"
#include "lltbrw/martingales.hpp"
#include "lltbrw/numeric.hpp"
#include "lltbrw/rng.hpp"
#include "lltbrw/step_law.hpp"

namespace lltbrw::harness {

struct RunOptions {
  unsigned threads = 1;
};

namespace detail {

/// Runs fn(i) for i in [0, count) on up to `threads` workers. Work is handed
/// out dynamically, but every index writes only its own slot, so results do not
/// depend on the schedule. The first exception is rethrown.
template <class Fn>
void parallel_for(std::size_t count, unsigned threads, Fn&& fn) {
  if (threads <= 1 || count <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    while (true) {
      const std::size_t i = next.fetch_add(1);
      if (i >= count) return;
      try {
        fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next = count;
        return;
      }
    }
  };
  std::vector<std::thread> pool;
  const unsigned workers = static_cast<unsigned>(std::min<std::size_t>(threads, count));
  for (unsigned t = 0; t < workers; ++t) pool.emplace_back(worker);
  for (auto& th : pool) th.join();
  if (failure) std::rethrow_exception(failure);
}

inline ResultTable new_table(const ExperimentConfig& cfg) {
  ResultTable t;
  t.experiment = cfg.experiment;
  t.config_hash = config_hash(cfg.source);
  t.base_seed = cfg.base_seed;
  json canon = cfg.source;
  for (auto it = canon.begin(); it != canon.end();) {
    if (is_location_key(it.key()))
      it = canon.erase(it);
    else
      ++it;
  }
  t.config_text = canon.dump();
  return t;
}

inline std::vector<int> schedule(const ExperimentConfig& cfg, std::vector<int> fallback) {
  std::vector<int> n = cfg.n.empty() ? std::move(fallback) : cfg.n;
  for (int v : n)
    if (v < 1) throw Error(ErrorCode::Config, "step counts must be >= 1");
  if (!std::is_sorted(n.begin(), n.end()) || std::adjacent_find(n.begin(), n.end()) != n.end())
    throw Error(ErrorCode::Config, "n must be strictly increasing");
  return n;
}

/// z set at step count n: the configured points (or the whole ball) restricted
/// to |z| <= C n^kappa.
inline std::vector<Point> admissible_points(const ExperimentConfig& cfg, int n) {
  const double radius = cfg.z_radius_constant * std::pow(static_cast<double>(n), cfg.kappa);
  if (!cfg.z) return points_in_ball(cfg.step_law.d, radius);
  std::vector<Point> out;
  for (const auto& z : *cfg.z)
    if (euclidean_norm(z) <= radius) out.push_back(z);
  return out;
}

inline Point designated_point(const ExperimentConfig& cfg) {
  if (cfg.z && !cfg.z->empty()) return cfg.z->front();
  return Point(static_cast<std::size_t>(cfg.step_law.d), 1);
}

inline double relative_gap(double observed, double target) {
  return target == 0.0 ? std::abs(observed) : std::abs(observed - target) / std::abs(target);
}

inline void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::Config, "cannot write " + path);
  out << text;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// llt-check
// ---------------------------------------------------------------------------

inline ResultTable run_llt_check(const ExperimentConfig& cfg, const RunOptions& run = {}) {
  const StepLaw law = StepLaw::validate(cfg.step_law);
  const Moments mom = moments(law);
  const ExpansionConstants c = constants(mom, classify(law));
  const std::vector<int> ns = detail::schedule(cfg, {64, 256, 1024});
  const ConvolveOptions opts{cfg.element_budget, run.threads};

  ResultTable table = detail::new_table(cfg);
  double worst_cf = 0.0;
  std::vector<double> sups;
  LatticeDist dist = delta_dist(law);
  for (int n : ns) {
    while (dist.n() < n) dist = convolve_step(dist, law, opts);
    const std::vector<Point> zs = detail::admissible_points(cfg, n);
    double sup = 0.0;
    for (const Point& z : zs) {
      const std::string zt = format_point(z);
      const double exact = dist.at(z);
      const double cf = cf_invert(law, n, z, cfg.panels);
      const double predicted = rw_expansion(c, mom, n, z);
      const double gamma = std::pow(static_cast<double>(n), 0.5 * c.d + 2.0) * (exact - predicted);
      worst_cf = std::max(worst_cf, std::abs(cf - exact));
      if (c.walk_class == WalkClass::Aperiodic || parity_matched(n, z)) sup = std::max(sup, std::abs(gamma));
      table.add({"point", -1, n, zt, "probability", exact, predicted, gamma, ""});
      table.add({"point", -1, n, zt, "cf_inversion", cf, exact, cf - exact, ""});
    }
    sups.push_back(sup);
    table.add({"sup", -1, n, "", "sup_abs_gamma", sup, kNotApplicable, kNotApplicable, ""});
  }

  table.check("cf_agreement", worst_cf, cfg.assertions.cf_tolerance, worst_cf <= cfg.assertions.cf_tolerance);
  if (cfg.assertions.residual_decreasing && sups.size() >= 2) {
    double worst_ratio = 0.0;
    for (std::size_t i = 1; i < sups.size(); ++i)
      worst_ratio = std::max(worst_ratio, sups[i - 1] > 0.0 ? sups[i] / sups[i - 1] : (sups[i] > 0.0 ? 1.0 : 0.0));
    table.check("sup_gamma_strictly_decreasing", worst_ratio, 1.0, worst_ratio < 1.0);
  }
  return table;
}

// ---------------------------------------------------------------------------
// coeff-fit
// ---------------------------------------------------------------------------

inline ResultTable run_coeff_fit(const ExperimentConfig& cfg, const RunOptions& run = {}) {
  const StepLaw law = StepLaw::validate(cfg.step_law);
  const Moments mom = moments(law);
  const ExpansionConstants c = constants(mom, classify(law));
  const std::vector<int> ns = detail::schedule(cfg, {1024, 2048, 4096});
  const std::vector<Point> zs = cfg.z ? *cfg.z : std::vector<Point>{origin(law.dim())};
  for (const Point& z : zs) check_fit_schedule(c, z, ns);

  std::vector<std::vector<double>> probs(zs.size());
  LatticeDist dist = delta_dist(law);
  const ConvolveOptions opts{cfg.element_budget, run.threads};
  for (int n : ns) {
    while (dist.n() < n) dist = convolve_step(dist, law, opts);
    for (std::size_t k = 0; k < zs.size(); ++k) probs[k].push_back(dist.at(zs[k]));
  }

  ResultTable table = detail::new_table(cfg);
  const auto& as = cfg.assertions;
  for (std::size_t k = 0; k < zs.size(); ++k) {
    const Point& z = zs[k];
    const std::string zt = format_point(z);
    const CoefficientFit fit = fit_from_probabilities(c, mom, z, ns, probs[k]);
    for (std::size_t i = 0; i < fit.n.size(); ++i) {
      const int n = fit.n[i];
      table.add({"sequence", -1, n, zt, "probability", fit.probability[i], rw_expansion(c, mom, n, z),
                 kNotApplicable, ""});
      table.add({"sequence", -1, n, zt, "rho", fit.rho[i], kNotApplicable, kNotApplicable, ""});
      table.add({"sequence", -1, n, zt, "c1_estimate", fit.c1_seq[i], fit.c1_theory, fit.c1_seq[i] - fit.c1_theory,
                 ""});
      table.add({"sequence", -1, n, zt, "c2_estimate", fit.c2_seq[i], fit.c2_theory, fit.c2_seq[i] - fit.c2_theory,
                 ""});
    }
    const int n_top = fit.n.back();
    table.add({"candidate", -1, n_top, zt, "c2_minus_lambda_form", fit.c2_hat, fit.c2_theory,
               fit.c2_hat - fit.c2_theory, ""});
    table.add({"candidate", -1, n_top, zt, "c2_plus_lambda_form", fit.c2_hat, fit.c2_opposite_sign,
               fit.c2_hat - fit.c2_opposite_sign, ""});

    const double gap_minus = std::abs(fit.c2_hat - fit.c2_theory);
    const double gap_plus = std::abs(fit.c2_hat - fit.c2_opposite_sign);
    std::string verdict;
    if (fit.c2_theory == fit.c2_opposite_sign)
      verdict = "indistinguishable";
    else
      verdict = gap_minus < gap_plus ? "minus_lambda_form" : "plus_lambda_form";
    table.add({"verdict", -1, n_top, zt, "lambda_sign", fit.c2_hat,
               gap_minus <= gap_plus ? fit.c2_theory : fit.c2_opposite_sign, kNotApplicable, verdict});

    const double c1_gap = detail::relative_gap(fit.c1_hat, fit.c1_theory);
    table.check("c1_relative_error", c1_gap, as.c1_rel_tolerance, c1_gap <= as.c1_rel_tolerance, zt, n_top);
    const double c2_gap = detail::relative_gap(fit.c2_hat, fit.c2_theory);
    table.check("c2_relative_error", c2_gap, as.c2_rel_tolerance, c2_gap <= as.c2_rel_tolerance, zt, n_top);
  }
  return table;
}

// ---------------------------------------------------------------------------
// identities
// ---------------------------------------------------------------------------

inline ResultTable run_identities(const ExperimentConfig& cfg, const RunOptions& = {}) {
  Moments mom;
  if (cfg.moments) {
    mom = Moments::from_diagonals((*cfg.moments)[0], (*cfg.moments)[1], (*cfg.moments)[2]);
  } else {
    mom = moments(StepLaw::validate(cfg.step_law));
  }
  if (mom.dim() > 3) throw Error(ErrorCode::Config, "identities need d <= 3");
  const Point z = detail::designated_point(cfg);
  if (static_cast<int>(z.size()) != mom.dim()) throw Error(ErrorCode::Config, "z has the wrong dimension");
  const std::size_t panels = cfg.panels.value_or(default_identity_panels(mom.dim()));

  ResultTable table = detail::new_table(cfg);
  const std::string zt = format_point(z);
  double worst = 0.0;
  for (const IdentityValue& v : gaussian_identities(mom, z, panels)) {
    table.add({"identity", -1, -1, zt, "identity_" + std::to_string(v.index), v.quadrature, v.closed_form,
               v.relative_error, ""});
    worst = std::max(worst, v.relative_error);
  }
  const double tol = cfg.assertions.identity_tolerance;
  table.check("identity_max_relative_error", worst, tol, worst <= tol, zt);
  return table;
}

// ---------------------------------------------------------------------------
// martingale-check
// ---------------------------------------------------------------------------

namespace detail {

inline std::vector<std::string> component_names(int d) {
  std::vector<std::string> names;
  for (Functional f : kAllFunctionals) {
    const bool vector_valued = f == Functional::N1 || f == Functional::N2 || f == Functional::N3;
    if (!vector_valued) {
      names.emplace_back(to_string(f));
      continue;
    }
    for (int s = 0; s < d; ++s) names.push_back(std::string(to_string(f)) + "[" + std::to_string(s + 1) + "]");
  }
  return names;
}

inline std::vector<double> flatten(const MartingaleReadout& r) {
  std::vector<double> out;
  for (Functional f : kAllFunctionals) {
    const auto v = r.component(f);
    out.insert(out.end(), v.begin(), v.end());
  }
  return out;
}

inline double sample_variance(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  NeumaierSum s;
  for (double x : v) s.add(x);
  const double mean = s.value() / static_cast<double>(v.size());
  NeumaierSum ss;
  for (double x : v) ss.add((x - mean) * (x - mean));
  return ss.value() / static_cast<double>(v.size() - 1);
}

inline constexpr std::uint64_t kHarmonicityStream = 0x4841524d4f4e4943ULL;
inline constexpr std::uint64_t kOneStepStream = 0x4f4e4553544550ULL;

template <CountType Count>
void martingale_simulation_parts(const ExperimentConfig& cfg, const StepLaw& law, const Moments& mom,
                                 const Point& z, const RunOptions& run, ResultTable& table) {
  const OffspringLaw off = OffspringLaw::validate(*cfg.offspring);
  const double m = off.mean;
  const auto& as = cfg.assertions;
  const std::vector<std::string> names = component_names(law.dim());

  // (b) one-step annealed check from a fixed parent generation.
  if (cfg.mc_replicates > 1) {
    const int g = std::max(0, cfg.mc_parent_generation);
    GenerationState<Count> parent = initial_state<Count>(law.dim());
    const ReplicateSeed parent_seed{cfg.base_seed, 0};
    for (int k = 0; k < g; ++k) parent = evolve_generation(parent, off, law, parent_seed);
    const std::vector<double> base = flatten(readout(parent, m, mom, z));

    const auto reps = static_cast<std::size_t>(cfg.mc_replicates);
    std::vector<std::vector<double>> draws(reps);
    const std::uint64_t key = derive(cfg.base_seed, kOneStepStream);
    parallel_for(reps, run.threads, [&](std::size_t r) {
      const GenerationState<Count> child = evolve_generation(parent, off, law, ReplicateSeed{key, r});
      draws[r] = flatten(readout(child, m, mom, z));
    });

    double worst = 0.0;
    bool ok = true;
    for (std::size_t i = 0; i < base.size(); ++i) {
      NeumaierSum s;
      for (const auto& v : draws) s.add(v[i]);
      const double mean = s.value() / static_cast<double>(reps);
      std::vector<double> col(reps);
      for (std::size_t r = 0; r < reps; ++r) col[r] = draws[r][i];
      const double se = std::sqrt(sample_variance(col) / static_cast<double>(reps));
      double score;
      if (se > 0.0) {
        score = (mean - base[i]) / se;
        ok = ok && std::abs(score) <= as.mc_standard_errors;
        worst = std::max(worst, std::abs(score));
      } else {
        score = mean - base[i];
        const bool exact = std::abs(score) <= 1e-12 * (1.0 + std::abs(base[i]));
        ok = ok && exact;
        if (!exact) worst = std::max(worst, std::numeric_limits<double>::infinity());
      }
      table.add({"one_step", -1, g + 1, format_point(z), names[i], mean, base[i], score, ""});
    }
    table.check("one_step_max_standard_errors", worst, as.mc_standard_errors, ok, format_point(z), g + 1);
  }

  // (c) readout trajectory of replicate 0.
  if (cfg.n_max >= 1) {
    std::vector<MartingaleReadout> traj;
    simulate_each<Count>(off, law, cfg.n_max, ReplicateSeed{cfg.base_seed, 0},
                         [&](const GenerationState<Count>& s) { traj.push_back(readout(s, m, mom, z)); });
    for (const auto& r : traj) {
      const std::vector<double> v = flatten(r);
      for (std::size_t i = 0; i < v.size(); ++i)
        table.add({"trajectory", 0, r.n, format_point(z), names[i], v[i], kNotApplicable, kNotApplicable, ""});
    }
    if (!cfg.trajectory_output.empty()) {
      std::string text = "generation";
      for (const auto& nm : names) text += "," + nm;
      text += "\n";
      for (const auto& r : traj) {
        text += std::to_string(r.n);
        for (double v : flatten(r)) text += "," + format_double(v);
        text += "\n";
      }
      write_text_file(cfg.trajectory_output, text);
    }
    if (as.trajectory_variance && cfg.n_max >= 8) {
      const std::size_t quarter = static_cast<std::size_t>(cfg.n_max) / 4;
      std::vector<double> first, last;
      for (std::size_t i = 1; i <= quarter; ++i) first.push_back(traj[i].N4);
      for (std::size_t i = traj.size() - quarter; i < traj.size(); ++i) last.push_back(traj[i].N4);
      const double v_first = sample_variance(first), v_last = sample_variance(last);
      table.check("N4_last_quarter_variance_below_first", v_last, v_first, v_last < v_first, format_point(z));
    }
  }
}

}  // namespace detail

inline ResultTable run_martingale_check(const ExperimentConfig& cfg, const RunOptions& run = {}) {
  const StepLaw law = StepLaw::validate(cfg.step_law);
  const Moments mom = moments(law);
  const Point z = detail::designated_point(cfg);
  ResultTable table = detail::new_table(cfg);
  const auto& as = cfg.assertions;

  // (a) exact harmonicity at random (x, n).
  Stream rng(derive(cfg.base_seed, detail::kHarmonicityStream));
  std::vector<double> worst(std::size(kAllFunctionals), 0.0);
  for (int k = 0; k < cfg.harmonicity_samples; ++k) {
    Point x(static_cast<std::size_t>(law.dim()));
    for (auto& xs : x) xs = static_cast<std::int64_t>(rng.next() % 21) - 10;
    const int n = static_cast<int>(rng.next() % 51);
    for (std::size_t f = 0; f < worst.size(); ++f)
      worst[f] = std::max(worst[f], harmonicity(kAllFunctionals[f], law, mom, x, n, z).relative());
  }
  bool harmonic = true;
  for (std::size_t f = 0; f < worst.size(); ++f) {
    const std::string name = std::string("harmonicity_") + to_string(kAllFunctionals[f]);
    table.add({"harmonicity", -1, -1, format_point(z), name, worst[f], 0.0, kNotApplicable, ""});
    harmonic = table.check(name, worst[f], as.harmonicity_tolerance, worst[f] <= as.harmonicity_tolerance,
                           format_point(z)) &&
               harmonic;
  }

  if (cfg.offspring) {
    if (cfg.count_width == 128)
      detail::martingale_simulation_parts<uint128>(cfg, law, mom, z, run, table);
    else
      detail::martingale_simulation_parts<std::uint64_t>(cfg, law, mom, z, run, table);
  }
  return table;
}

// ---------------------------------------------------------------------------
// brw-check
// ---------------------------------------------------------------------------

namespace detail {

struct ReplicateOutcome {
  std::vector<double> W;                   ///< per probe
  std::vector<std::vector<double>> count;  ///< [probe][z] m^{-n} Z_n(z)
  std::vector<std::vector<double>> Q;      ///< [probe][z] first-order statistic
  std::vector<std::vector<double>> residual;
  std::vector<std::vector<double>> predicted;
  std::vector<double> F1;                  ///< per z
};

template <CountType Count>
ReplicateOutcome brw_replicate(const ExperimentConfig& cfg, const OffspringLaw& off, const StepLaw& law,
                               const Moments& mom, const ExpansionConstants& c, const std::vector<int>& probes,
                               int n_est, const std::vector<Point>& zs, std::size_t replicate,
                               std::string* snapshot_text) {
  const double m = off.mean;
  const int n_max = std::max(probes.back(), n_est);
  std::vector<GenerationState<Count>> snaps;
  std::vector<LimitEstimates> est(zs.size(), LimitEstimates::trivial(law.dim()));
  simulate_each<Count>(off, law, n_max, ReplicateSeed{cfg.base_seed, replicate}, [&](const GenerationState<Count>& s) {
    if (s.n == n_est)
      for (std::size_t k = 0; k < zs.size(); ++k) est[k] = LimitEstimates::from_readout(readout(s, m, mom, zs[k]));
    if (std::find(probes.begin(), probes.end(), s.n) != probes.end()) snaps.push_back(s);
  });

  ReplicateOutcome out;
  for (std::size_t p = 0; p < probes.size(); ++p) {
    const auto& s = snaps[p];
    const double scale = std::pow(m, -static_cast<double>(s.n));
    out.W.push_back(static_cast<double>(s.total) * scale);
    std::vector<double> cnt, q, res, pred;
    for (std::size_t k = 0; k < zs.size(); ++k) {
      const auto it = s.counts.find(zs[k]);
      cnt.push_back((it == s.counts.end() ? 0.0 : static_cast<double>(it->second)) * scale);
      q.push_back(first_order_statistic(s, m, c, zs[k]));
      res.push_back(brw_residual(s, m, est[k], c, mom, zs[k]));
      pred.push_back(theorem_prediction(est[k], c, mom, s.n, zs[k]));
    }
    out.count.push_back(cnt);
    out.Q.push_back(q);
    out.residual.push_back(res);
    out.predicted.push_back(pred);
  }
  for (std::size_t k = 0; k < zs.size(); ++k) out.F1.push_back(f1_eval(est[k], c, mom, zs[k]));

  if (snapshot_text) {
    std::ostringstream os;
    for (std::size_t p = 0; p < snaps.size(); ++p) write_snapshot_csv(os, snaps[p], p == 0);
    *snapshot_text = os.str();
  }
  return out;
}

}  // namespace detail

inline ResultTable run_brw_check(const ExperimentConfig& cfg, const RunOptions& run = {}) {
  if (!cfg.offspring) throw Error(ErrorCode::Config, "brw-check needs an offspring law");
  const StepLaw law = StepLaw::validate(cfg.step_law);
  const OffspringLaw off = OffspringLaw::validate(*cfg.offspring);
  const Moments mom = moments(law);
  const ExpansionConstants c = constants(mom, classify(law));
  const std::vector<int> probes = detail::schedule(cfg, {16, 32, 48});
  const int n_est = cfg.n_est.value_or(probes.back());
  if (n_est < 1) throw Error(ErrorCode::Config, "n_est must be >= 1");
  const std::vector<Point> zs = cfg.z ? *cfg.z : std::vector<Point>{origin(law.dim())};
  const auto reps = static_cast<std::size_t>(cfg.replicates);

  std::vector<detail::ReplicateOutcome> outcomes(reps);
  std::string snapshot_text;
  detail::parallel_for(reps, run.threads, [&](std::size_t r) {
    std::string* snap = (r == 0 && !cfg.snapshot_output.empty()) ? &snapshot_text : nullptr;
    outcomes[r] = cfg.count_width == 128
                      ? detail::brw_replicate<uint128>(cfg, off, law, mom, c, probes, n_est, zs, r, snap)
                      : detail::brw_replicate<std::uint64_t>(cfg, off, law, mom, c, probes, n_est, zs, r, snap);
  });
  if (!cfg.snapshot_output.empty()) detail::write_text_file(cfg.snapshot_output, snapshot_text);

  ResultTable table = detail::new_table(cfg);
  for (std::size_t r = 0; r < reps; ++r) {
    const auto& o = outcomes[r];
    const int ri = static_cast<int>(r);
    for (std::size_t p = 0; p < probes.size(); ++p) {
      const int n = probes[p];
      table.add({"replicate", ri, n, "", "W", o.W[p], kNotApplicable, kNotApplicable, ""});
      for (std::size_t k = 0; k < zs.size(); ++k) {
        const std::string zt = format_point(zs[k]);
        table.add({"replicate", ri, n, zt, "normalized_count", o.count[p][k], o.predicted[p][k], o.residual[p][k],
                   ""});
        table.add({"replicate", ri, n, zt, "first_order_statistic", o.Q[p][k], o.F1[k] / n, n * o.Q[p][k], ""});
      }
    }
    for (std::size_t k = 0; k < zs.size(); ++k)
      table.add({"replicate", ri, n_est, format_point(zs[k]), "F1", o.F1[k], kNotApplicable, kNotApplicable, ""});
  }

  const auto& as = cfg.assertions;
  for (std::size_t k = 0; k < zs.size(); ++k) {
    const std::string zt = format_point(zs[k]);
    std::vector<double> med_abs_q;
    for (std::size_t p = 0; p < probes.size(); ++p) {
      const int n = probes[p];
      std::vector<double> abs_q, abs_res;
      for (const auto& o : outcomes) {
        abs_q.push_back(std::abs(o.Q[p][k]));
        abs_res.push_back(std::abs(o.residual[p][k]));
      }
      med_abs_q.push_back(median(abs_q));
      table.add({"aggregate", -1, n, zt, "median_abs_first_order_statistic", med_abs_q.back(), kNotApplicable,
                 kNotApplicable, ""});
      table.add({"aggregate", -1, n, zt, "iqr_abs_first_order_statistic",
                 quantile(abs_q, 0.75) - quantile(abs_q, 0.25), kNotApplicable, kNotApplicable, ""});
      table.add({"aggregate", -1, n, zt, "median_abs_residual", median(abs_res), kNotApplicable, kNotApplicable, ""});
      table.add({"aggregate", -1, n, zt, "iqr_abs_residual", quantile(abs_res, 0.75) - quantile(abs_res, 0.25),
                 kNotApplicable, kNotApplicable, ""});
    }
    std::vector<double> f1, nq;
    const int n_top = probes.back();
    for (const auto& o : outcomes) {
      f1.push_back(o.F1[k]);
      nq.push_back(n_top * o.Q.back()[k]);
    }
    const double f1_lo = quantile(f1, 0.25), f1_hi = quantile(f1, 0.75);
    const double nq_med = median(nq);
    table.add({"aggregate", -1, n_est, zt, "F1_q1", f1_lo, kNotApplicable, kNotApplicable, ""});
    table.add({"aggregate", -1, n_est, zt, "F1_median", median(f1), kNotApplicable, kNotApplicable, ""});
    table.add({"aggregate", -1, n_est, zt, "F1_q3", f1_hi, kNotApplicable, kNotApplicable, ""});
    table.add({"aggregate", -1, n_top, zt, "median_n_times_first_order_statistic", nq_med, median(f1),
               kNotApplicable, ""});

    const bool live = c.walk_class == WalkClass::Aperiodic ||
                      std::all_of(probes.begin(), probes.end(), [&](int n) { return parity_matched(n, zs[k]); });
    if (as.brw_trend && live && probes.size() >= 2) {
      double worst_ratio = 0.0;
      for (std::size_t p = 1; p < med_abs_q.size(); ++p)
        worst_ratio = std::max(worst_ratio, med_abs_q[p - 1] > 0.0 ? med_abs_q[p] / med_abs_q[p - 1] : 1.0);
      table.check("median_abs_first_order_statistic_decreasing", worst_ratio, 1.0, worst_ratio < 1.0, zt);
      const bool inside = nq_med >= f1_lo && nq_med <= f1_hi;
      const double dist = inside ? 0.0 : std::min(std::abs(nq_med - f1_lo), std::abs(nq_med - f1_hi));
      table.check("first_order_statistic_in_F1_band", dist, 0.0, inside, zt, n_top);
    }
  }
  return table;
}

// ---------------------------------------------------------------------------

inline ResultTable run_experiment(const ExperimentConfig& cfg, const RunOptions& run = {}) {
  if (cfg.experiment == "llt-check") return run_llt_check(cfg, run);
  if (cfg.experiment == "coeff-fit") return run_coeff_fit(cfg, run);
  if (cfg.experiment == "identities") return run_identities(cfg, run);
  if (cfg.experiment == "martingale-check") return run_martingale_check(cfg, run);
  if (cfg.experiment == "brw-check") return run_brw_check(cfg, run);
  throw Error(ErrorCode::Config, "unknown experiment '" + cfg.experiment + "'");
}

}  // namespace lltbrw::harness
