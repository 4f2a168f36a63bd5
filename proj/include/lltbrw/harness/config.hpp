#pragma once

#include <cstdint>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "lltbrw/error.hpp"
#include "lltbrw/exact_dist.hpp"
#include "lltbrw/lattice.hpp"
#include "lltbrw/step_law.hpp"

namespace lltbrw::harness {

using json = nlohmann::json;

inline constexpr const char* kToolVersion = "1.0.0";

/// Thresholds for the experiment's pass/fail rows. Defaults are the contract
/// values; a config may tighten or loosen them under "assertions".
struct Assertions {
  double cf_tolerance = 1e-9;
  double harmonicity_tolerance = 1e-9;
  double identity_tolerance = 1e-8;
  double c1_rel_tolerance = 0.01;
  double c2_rel_tolerance = 0.05;
  double mc_standard_errors = 4.0;
  bool residual_decreasing = true;
  bool brw_trend = true;
  bool trajectory_variance = true;
};

struct ExperimentConfig {
  std::string experiment;  ///< llt-check | coeff-fit | identities | martingale-check | brw-check
  RawStepLaw step_law;
  std::optional<std::vector<double>> offspring;
  std::vector<int> n;  ///< step counts or probe generations
  std::optional<int> n_est;
  int n_max = 40;
  std::optional<std::vector<Point>> z;
  double kappa = 0.15;
  double z_radius_constant = 1.0;
  int replicates = 64;
  std::uint64_t base_seed = 1;
  int count_width = 64;
  std::optional<std::size_t> panels;
  std::optional<std::vector<std::vector<double>>> moments;  ///< [gamma2, gamma4, gamma6]
  int harmonicity_samples = 1000;
  int mc_replicates = 10000;
  int mc_parent_generation = 3;
  std::size_t element_budget = kDefaultElementBudget;
  std::string output;
  std::string snapshot_output;
  std::string trajectory_output;
  Assertions assertions;
  json source;  ///< the document after overrides
};

inline const std::vector<std::string>& experiment_names() {
  static const std::vector<std::string> names{"llt-check", "coeff-fit", "identities", "martingale-check", "brw-check"};
  return names;
}

/// Keys that only say where output goes; they do not affect any row.
inline bool is_location_key(const std::string& key) {
  return key == "output" || key == "snapshot_output" || key == "trajectory_output" || key == "threads";
}

/// FNV-1a over the canonical (sorted-key) dump, location keys removed.
inline std::uint64_t config_hash(const json& doc) {
  json canon = doc;
  if (canon.is_object())
    for (auto it = canon.begin(); it != canon.end();) {
      if (is_location_key(it.key()))
        it = canon.erase(it);
      else
        ++it;
    }
  const std::string text = canon.dump();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::string hash_hex(std::uint64_t h) {
  std::ostringstream os;
  os << std::hex;
  os.width(16);
  os.fill('0');
  os << h;
  return os.str();
}

/// Applies "a.b.c=value"; value is parsed as JSON when possible, else taken as
/// a string.
inline void apply_override(json& doc, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0)
    throw Error(ErrorCode::Config, "override must look like key=value: " + assignment);
  const std::string path = assignment.substr(0, eq);
  const std::string text = assignment.substr(eq + 1);
  json value = json::parse(text, nullptr, false);
  if (value.is_discarded()) value = text;

  json* node = &doc;
  std::size_t start = 0;
  while (true) {
    const auto dot = path.find('.', start);
    const std::string key = path.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
    if (key.empty()) throw Error(ErrorCode::Config, "empty key in override " + path);
    if (!node->is_object()) *node = json::object();
    node = &(*node)[key];
    if (dot == std::string::npos) break;
    start = dot + 1;
  }
  *node = value;
}

namespace detail {

inline Point parse_point(const json& j) {
  if (j.is_number_integer()) return Point{j.get<std::int64_t>()};
  if (!j.is_array()) throw Error(ErrorCode::Config, "lattice point must be an integer array");
  Point p;
  for (const auto& v : j) p.push_back(v.get<std::int64_t>());
  return p;
}

template <class T>
void read_if(const json& doc, const char* key, T& out) {
  if (doc.contains(key)) out = doc.at(key).get<T>();
}

}  // namespace detail

inline RawStepLaw parse_step_law(const json& j) {
  RawStepLaw raw;
  raw.d = j.at("d").get<int>();
  raw.zeta0 = j.value("zeta0", 0.0);
  raw.axes = j.at("axes").get<std::vector<std::vector<double>>>();
  return raw;
}

inline json step_law_to_json(const RawStepLaw& raw) {
  return json{{"d", raw.d}, {"zeta0", raw.zeta0}, {"axes", raw.axes}};
}

inline ExperimentConfig parse_config(const json& doc) {
  try {
    ExperimentConfig cfg;
    cfg.source = doc;
    cfg.experiment = doc.at("experiment").get<std::string>();
    bool known = false;
    for (const auto& name : experiment_names()) known = known || name == cfg.experiment;
    if (!known) throw Error(ErrorCode::Config, "unknown experiment '" + cfg.experiment + "'");

    cfg.step_law = parse_step_law(doc.at("step_law"));
    if (doc.contains("offspring")) {
      const json& off = doc.at("offspring");
      cfg.offspring = off.is_object() ? off.at("probs").get<std::vector<double>>() : off.get<std::vector<double>>();
    }
    detail::read_if(doc, "n", cfg.n);
    if (doc.contains("n_est")) cfg.n_est = doc.at("n_est").get<int>();
    detail::read_if(doc, "n_max", cfg.n_max);
    if (doc.contains("z")) {
      std::vector<Point> zs;
      for (const auto& p : doc.at("z")) zs.push_back(detail::parse_point(p));
      cfg.z = zs;
    }
    detail::read_if(doc, "kappa", cfg.kappa);
    detail::read_if(doc, "z_radius_constant", cfg.z_radius_constant);
    detail::read_if(doc, "replicates", cfg.replicates);
    detail::read_if(doc, "base_seed", cfg.base_seed);
    detail::read_if(doc, "count_width", cfg.count_width);
    if (doc.contains("panels")) cfg.panels = doc.at("panels").get<std::size_t>();
    if (doc.contains("moments")) {
      const json& m = doc.at("moments");
      cfg.moments = std::vector<std::vector<double>>{m.at("gamma2").get<std::vector<double>>(),
                                                     m.at("gamma4").get<std::vector<double>>(),
                                                     m.at("gamma6").get<std::vector<double>>()};
    }
    detail::read_if(doc, "harmonicity_samples", cfg.harmonicity_samples);
    detail::read_if(doc, "mc_replicates", cfg.mc_replicates);
    detail::read_if(doc, "mc_parent_generation", cfg.mc_parent_generation);
    detail::read_if(doc, "element_budget", cfg.element_budget);
    detail::read_if(doc, "output", cfg.output);
    detail::read_if(doc, "snapshot_output", cfg.snapshot_output);
    detail::read_if(doc, "trajectory_output", cfg.trajectory_output);
    if (doc.contains("assertions")) {
      const json& a = doc.at("assertions");
      auto& as = cfg.assertions;
      detail::read_if(a, "cf_tolerance", as.cf_tolerance);
      detail::read_if(a, "harmonicity_tolerance", as.harmonicity_tolerance);
      detail::read_if(a, "identity_tolerance", as.identity_tolerance);
      detail::read_if(a, "c1_rel_tolerance", as.c1_rel_tolerance);
      detail::read_if(a, "c2_rel_tolerance", as.c2_rel_tolerance);
      detail::read_if(a, "mc_standard_errors", as.mc_standard_errors);
      detail::read_if(a, "residual_decreasing", as.residual_decreasing);
      detail::read_if(a, "brw_trend", as.brw_trend);
      detail::read_if(a, "trajectory_variance", as.trajectory_variance);
    }

    if (!(cfg.kappa > 0.0 && cfg.kappa < 1.0 / 6.0)) throw Error(ErrorCode::Config, "kappa must lie in (0, 1/6)");
    if (!(cfg.z_radius_constant > 0.0)) throw Error(ErrorCode::Config, "z_radius_constant must be positive");
    if (cfg.count_width != 64 && cfg.count_width != 128) throw Error(ErrorCode::Config, "count_width must be 64 or 128");
    if (cfg.replicates < 1) throw Error(ErrorCode::Config, "replicates must be >= 1");
    const int dim = cfg.moments ? static_cast<int>(cfg.moments->front().size()) : cfg.step_law.d;
    if (cfg.z)
      for (const auto& p : *cfg.z)
        if (static_cast<int>(p.size()) != dim)
          throw Error(ErrorCode::Config, "z point " + format_point(p) + " has the wrong dimension");
    return cfg;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::Config, e.what());
  }
}

inline json load_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Config, "cannot open config " + path);
  json doc = json::parse(in, nullptr, false);
  if (doc.is_discarded()) throw Error(ErrorCode::Config, "config " + path + " is not valid JSON");
  return doc;
}

}  // namespace lltbrw::harness
