// lltbrw: command-line front end for the experiment harness.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "lltbrw/exact_dist.hpp"
#include "lltbrw/harness/config.hpp"
#include "lltbrw/harness/experiments.hpp"
#include "lltbrw/harness/report.hpp"
#include "lltbrw/step_law.hpp"

namespace {

namespace fs = std::filesystem;
using namespace lltbrw;
using namespace lltbrw::harness;

constexpr int kExitAssertion = 1;
constexpr int kExitError = 2;

json load_with_overrides(const std::string& path, const std::vector<std::string>& overrides) {
  json doc = load_json_file(path);
  for (const auto& o : overrides) apply_override(doc, o);
  return doc;
}

/// --output wins, then the configured path; a relative path is placed under
/// $LLTBRW_OUTPUT_DIR when set. With neither, and the variable set, a name is
/// made from the experiment and config hash. Empty means stdout.
std::string resolve_output(const std::string& flag, const std::string& configured, const std::string& fallback_name) {
  const char* env = std::getenv("LLTBRW_OUTPUT_DIR");
  const std::string dir = env ? env : "";
  std::string path = !flag.empty() ? flag : configured;
  if (path.empty()) {
    if (dir.empty()) return "";
    path = fallback_name;
  }
  if (path == "-") return "";
  if (!dir.empty() && fs::path(path).is_relative()) path = (fs::path(dir) / path).string();
  return path;
}

void emit(const std::string& path, const std::string& text) {
  if (path.empty()) {
    std::cout << text;
    return;
  }
  const fs::path p(path);
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary);
  if (!out) throw Error(ErrorCode::Config, "cannot write " + path);
  out << text;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Exact walks, local expansions and branching random walk experiments"};
  app.require_subcommand(1);

  auto* version = app.add_subcommand("version", "Print the tool version");

  std::string cfg_path;
  std::vector<std::string> overrides;
  auto* validate = app.add_subcommand("validate", "Check a config and its step/offspring laws");
  validate->add_option("config", cfg_path, "Config JSON")->required();
  validate->add_option("--override", overrides, "key.path=value (repeatable)");

  unsigned threads = 1;
  std::string output;
  auto* run = app.add_subcommand("run", "Run the experiment and write the result CSV");
  run->add_option("config", cfg_path, "Config JSON")->required();
  run->add_option("--override", overrides, "key.path=value (repeatable)");
  run->add_option("--threads", threads, "Worker threads")->check(CLI::PositiveNumber);
  run->add_option("--output", output, "Output CSV path ('-' for stdout)");

  int dump_n = 0;
  std::string method = "conv";
  auto* dump = app.add_subcommand("dump-dist", "Write the exact law of S_n as CSV");
  dump->add_option("config", cfg_path, "Config JSON")->required();
  dump->add_option("--override", overrides, "key.path=value (repeatable)");
  dump->add_option("--n", dump_n, "Step count")->required()->check(CLI::NonNegativeNumber);
  dump->add_option("--method", method, "conv or cf")->check(CLI::IsMember({"conv", "cf"}));
  dump->add_option("--threads", threads, "Worker threads")->check(CLI::PositiveNumber);
  dump->add_option("--output", output, "Output CSV path ('-' for stdout)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*version) {
      std::cout << "lltbrw " << kToolVersion << '\n';
      return 0;
    }

    const json doc = load_with_overrides(cfg_path, overrides);
    const ExperimentConfig cfg = parse_config(doc);

    if (*validate) {
      std::vector<std::string> warnings;
      const StepLaw law = StepLaw::validate(cfg.step_law, &warnings);
      for (const auto& w : warnings) std::cerr << "warning: " << w << '\n';
      if (cfg.offspring) OffspringLaw::validate(*cfg.offspring);
      if (cfg.experiment == "brw-check" && !cfg.offspring)
        throw Error(ErrorCode::Config, "brw-check needs an offspring law");
      std::cout << "ok " << cfg.experiment << " d=" << law.dim() << " class=" << to_string(classify(law))
                << " config_hash=" << hash_hex(config_hash(doc)) << '\n';
      return 0;
    }

    if (*run) {
      const ResultTable table = run_experiment(cfg, RunOptions{threads});
      const std::string name = cfg.experiment + "-" + hash_hex(table.config_hash) + ".csv";
      emit(resolve_output(output, cfg.output, name), to_csv(table));
      if (!table.passed) {
        std::cerr << table.failures() << " assertion(s) failed\n";
        return kExitAssertion;
      }
      return 0;
    }

    if (*dump) {
      const StepLaw law = StepLaw::validate(cfg.step_law);
      const LatticeDist dist = method == "cf" ? cf_invert_box(law, dump_n)
                                              : exact_distribution(law, dump_n, {cfg.element_budget, threads});
      std::ostringstream os;
      write_dist_csv(os, dist);
      const std::string name = "dist-" + hash_hex(config_hash(doc)) + "-n" + std::to_string(dump_n) + ".csv";
      emit(resolve_output(output, "", name), os.str());
      return 0;
    }
  } catch (const Error& e) {
    std::cerr << "error [" << to_string(e.code()) << "]: " << e.what() << '\n';
    return kExitError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitError;
  }
  return 0;
}
