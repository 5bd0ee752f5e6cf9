#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "diraclab/errors.hpp"

namespace diraclab {

inline constexpr const char* kToolVersion = "diraclab 0.1.0";

/// Validation failure carrying every problem found, not just the first.
class ConfigError : public InvalidInput {
 public:
  explicit ConfigError(std::vector<std::string> problems);
  const std::vector<std::string>& problems() const noexcept { return problems_; }

 private:
  std::vector<std::string> problems_;
};

enum class ParamType { integer, number, boolean, string, integer_list, number_list };

struct ParamSpec {
  std::string name;
  ParamType type = ParamType::number;
  nlohmann::json default_value;  // null with no `derive`: required
  std::optional<double> minimum;
  bool exclusive_minimum = false;
  std::string doc;
  /// Default computed from the other (already filled) parameters.
  std::function<nlohmann::json(const nlohmann::json& params)> derive;
};

struct ExperimentInfo {
  std::string name;
  std::string summary;
  std::vector<ParamSpec> params;
  /// Cross-parameter constraints; appends human-readable problems.
  std::function<void(const nlohmann::json& params, std::vector<std::string>& problems)> validate;
};

/// Registered experiments, in a fixed order.
const std::vector<ExperimentInfo>& experiment_registry();
const ExperimentInfo& find_experiment(const std::string& name);

/// The published schema: top-level keys "experiment", "seed" and "params".
nlohmann::json config_schema();

struct ExperimentConfig {
  std::string experiment;
  std::uint64_t seed = 0;
  nlohmann::json params;  // every parameter present, defaults filled in

  nlohmann::json to_json() const;
  /// First 8 hex digits of the SHA-256 of the canonical JSON.
  std::string short_hash() const;
};

/// Parses and validates; throws ConfigError listing all problems.
ExperimentConfig parse_config(const nlohmann::json& document);
ExperimentConfig load_config(const std::filesystem::path& path);

struct FileRecord {
  std::string name;
  std::size_t rows = 0;  // data rows (CSV without header) or 1 for JSON
  std::string sha256;
};

struct CheckRecord {
  std::string name;
  double value = 0.0;
  std::string relation;  // "<", "<=", ">", ">=", "=="
  double threshold = 0.0;
  bool passed = false;
};

struct RunManifest {
  std::string version = kToolVersion;
  std::string experiment;
  std::uint64_t seed = 0;
  nlohmann::json config;
  std::string config_hash;
  std::string started;
  std::string finished;
  std::string status;  // "ok", "checks_failed" or "failed"
  std::string error;
  unsigned threads = 1;
  std::vector<CheckRecord> checks;
  std::vector<FileRecord> files;

  nlohmann::json to_json() const;
  static RunManifest from_json(const nlohmann::json& j);
};

struct RunOptions {
  std::filesystem::path output_root = "runs";
  unsigned threads = 1;
};

/// Output root from DIRACLAB_OUTPUT_ROOT (default ./runs); threads from the
/// hardware, capped by DIRACLAB_THREADS.
RunOptions options_from_environment();

struct RunOutcome {
  std::filesystem::path directory;
  RunManifest manifest;
  int exit_code = 0;  // 0 ok, 1 checks failed, 2 error
};

/// `<experiment>-s<seed>-<hash8>`.
std::string run_directory_name(const ExperimentConfig& config);

/// Runs into `<output_root>/<run_directory_name>`, replacing a previous run
/// directory of the same name.
RunOutcome run_experiment(const ExperimentConfig& config, const RunOptions& options);

/// Same as run_experiment but into an explicit directory.
RunOutcome run_experiment_in(const ExperimentConfig& config, const std::filesystem::path& directory,
                             unsigned threads);

struct ReplayFile {
  std::string name;
  std::string recorded;
  std::string on_disk;   // empty if missing
  std::string replayed;  // empty if not produced
  bool match = false;
};

struct ReplayReport {
  std::string recorded_version;
  bool version_match = true;
  std::uint64_t seed = 0;
  std::vector<ReplayFile> files;
  bool all_match = false;
};

/// Re-runs the manifest's config (optionally with another seed) in a scratch
/// directory and compares content hashes with the manifest and the files on disk.
ReplayReport replay(const std::filesystem::path& manifest_path, std::optional<std::uint64_t> seed_override,
                    unsigned threads);

std::string sha256_hex(const std::string& bytes);
std::string sha256_file(const std::filesystem::path& path);

}  // namespace diraclab
