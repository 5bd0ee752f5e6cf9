#include <iomanip>
#include <iostream>

#if __has_include(<CLI/CLI.hpp>)
#include <CLI/CLI.hpp>
#else
#include <CLI11.hpp>
#endif

#include "diraclab/runner.hpp"

namespace {

using namespace diraclab;

const char* type_label(ParamType t) {
  switch (t) {
    case ParamType::integer: return "int";
    case ParamType::number: return "real";
    case ParamType::boolean: return "bool";
    case ParamType::string: return "text";
    case ParamType::integer_list: return "int[]";
    case ParamType::number_list: return "real[]";
  }
  return "?";
}

int cmd_list(bool verbose) {
  for (const auto& e : experiment_registry()) {
    std::cout << e.name << "\n  " << e.summary << "\n";
    if (!verbose) continue;
    for (const auto& p : e.params) {
      std::string def = p.default_value.is_null() ? (p.derive ? "derived" : "required") : p.default_value.dump();
      std::cout << "    " << std::left << std::setw(22) << p.name << std::setw(7) << type_label(p.type)
                << std::setw(26) << def << p.doc << "\n";
    }
    std::cout << "\n";
  }
  return 0;
}

int cmd_run(const std::string& path) {
  const ExperimentConfig cfg = load_config(path);
  const RunOptions opt = options_from_environment();
  const RunOutcome out = run_experiment(cfg, opt);
  std::cout << out.directory.string() << "\n";
  for (const auto& c : out.manifest.checks) {
    std::cout << (c.passed ? "  ok    " : "  FAIL  ") << c.name << " = " << c.value << " (" << c.relation << " "
              << c.threshold << ")\n";
  }
  if (!out.manifest.error.empty()) std::cerr << "error: " << out.manifest.error << "\n";
  std::cout << "status: " << out.manifest.status << "\n";
  return out.exit_code;
}

int cmd_replay(const std::string& manifest, std::optional<std::uint64_t> seed) {
  const RunOptions opt = options_from_environment();
  const ReplayReport r = replay(manifest, seed, opt.threads);
  if (!r.version_match) {
    std::cout << "warning: manifest written by '" << r.recorded_version << "', this is '" << kToolVersion << "'\n";
  }
  std::cout << "seed " << r.seed << "\n";
  for (const auto& f : r.files) {
    std::cout << (f.match ? "  match     " : "  MISMATCH  ") << f.name;
    if (!f.match) {
      if (f.on_disk.empty()) std::cout << " (missing on disk)";
      else if (f.on_disk != f.recorded) std::cout << " (modified on disk)";
      if (f.replayed.empty()) std::cout << " (not produced by replay)";
      else if (f.replayed != f.recorded) std::cout << " (replay differs)";
    }
    std::cout << "\n";
  }
  std::cout << (r.all_match ? "replay: all files match\n" : "replay: mismatch\n");
  return r.all_match ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"diraclab: lattice Dirac experiments with persisted, replayable runs"};
  app.set_version_flag("--version", std::string(diraclab::kToolVersion));
  app.require_subcommand(1);

  std::string config_path;
  auto* run = app.add_subcommand("run", "run the experiment described by a JSON config");
  run->add_option("config", config_path, "config file")->required()->check(CLI::ExistingFile);

  bool verbose = true;
  auto* list = app.add_subcommand("list", "list experiments with their parameters");
  list->add_flag("!--brief", verbose, "names and summaries only");

  auto* schema = app.add_subcommand("schema", "print the config schema as JSON");

  std::string manifest_path;
  std::optional<std::uint64_t> seed;
  auto* rep = app.add_subcommand("replay", "re-run a manifest and compare content hashes");
  rep->add_option("manifest", manifest_path, "manifest.json of a run")->required()->check(CLI::ExistingFile);
  rep->add_option("--seed", seed, "replay with another seed");

  CLI11_PARSE(app, argc, argv);
  try {
    if (*run) return cmd_run(config_path);
    if (*list) return cmd_list(verbose);
    if (*schema) {
      std::cout << diraclab::config_schema().dump(2) << "\n";
      return 0;
    }
    if (*rep) return cmd_replay(manifest_path, seed);
  } catch (const diraclab::ConfigError& e) {
    std::cerr << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
