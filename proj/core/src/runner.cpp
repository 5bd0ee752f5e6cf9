#include "diraclab/runner.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <random>
#include <set>
#include <sstream>
#include <thread>

#include <openssl/evp.h>

#include "run_context.hpp"

namespace diraclab {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string join(const std::vector<std::string>& items, const std::string& sep) {
  std::string out;
  for (std::size_t i = 0; i < items.size(); ++i) out += (i ? sep : "") + items[i];
  return out;
}

std::string type_name(ParamType t) {
  switch (t) {
    case ParamType::integer: return "integer";
    case ParamType::number: return "number";
    case ParamType::boolean: return "boolean";
    case ParamType::string: return "string";
    case ParamType::integer_list: return "list of integers";
    case ParamType::number_list: return "list of numbers";
  }
  return "?";
}

bool is_integer(const json& v) { return v.is_number_integer(); }

// Checks one value against its spec; appends problems prefixed with the field path.
void check_value(const ParamSpec& spec, const json& v, std::vector<std::string>& problems) {
  const std::string field = "params." + spec.name;
  auto check_number = [&](const json& x, const std::string& where) {
    const double d = x.get<double>();
    if (!std::isfinite(d)) {
      problems.push_back(where + ": must be finite");
      return;
    }
    if (spec.minimum) {
      const bool bad = spec.exclusive_minimum ? !(d > *spec.minimum) : !(d >= *spec.minimum);
      if (bad) {
        problems.push_back(where + ": must be " + (spec.exclusive_minimum ? "> " : ">= ") +
                           detail::format_number(*spec.minimum) + " (got " + x.dump() + ")");
      }
    }
  };
  switch (spec.type) {
    case ParamType::integer:
      if (!is_integer(v)) return problems.push_back(field + ": expected an integer, got " + v.dump());
      return check_number(v, field);
    case ParamType::number:
      if (!v.is_number()) return problems.push_back(field + ": expected a number, got " + v.dump());
      return check_number(v, field);
    case ParamType::boolean:
      if (!v.is_boolean()) problems.push_back(field + ": expected true or false, got " + v.dump());
      return;
    case ParamType::string:
      if (!v.is_string()) problems.push_back(field + ": expected a string, got " + v.dump());
      return;
    case ParamType::integer_list:
    case ParamType::number_list: {
      if (!v.is_array() || v.empty()) return problems.push_back(field + ": expected a nonempty " + type_name(spec.type));
      for (std::size_t i = 0; i < v.size(); ++i) {
        const std::string where = field + "[" + std::to_string(i) + "]";
        const bool ok = spec.type == ParamType::integer_list ? is_integer(v[i]) : v[i].is_number();
        if (!ok) {
          problems.push_back(where + ": expected " + (spec.type == ParamType::integer_list ? "an integer" : "a number") +
                             ", got " + v[i].dump());
          continue;
        }
        check_number(v[i], where);
      }
      return;
    }
  }
}

std::string utc_now() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  std::ostringstream out;
  out << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return out.str();
}

void write_atomically(const fs::path& path, const std::string& content) {
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + tmp.string());
    out << content;
    if (!out) throw Error("write failed for " + tmp.string());
  }
  fs::rename(tmp, path);
}

}  // namespace

ConfigError::ConfigError(std::vector<std::string> problems)
    : InvalidInput("invalid configuration:\n  " + join(problems, "\n  ")), problems_(std::move(problems)) {}

const ExperimentInfo& find_experiment(const std::string& name) {
  for (const auto& e : experiment_registry()) {
    if (e.name == name) return e;
  }
  std::vector<std::string> names;
  for (const auto& e : experiment_registry()) names.push_back(e.name);
  throw InvalidInput("unknown experiment '" + name + "' (known: " + join(names, ", ") + ")");
}

json config_schema() {
  json schema = {{"type", "object"},
                 {"required", {"experiment", "seed"}},
                 {"additionalProperties", false},
                 {"properties",
                  {{"experiment", {{"type", "string"}}},
                   {"seed", {{"type", "integer"}, {"minimum", 0}}},
                   {"params", {{"type", "object"}}}}}};
  json variants = json::array();
  for (const auto& e : experiment_registry()) {
    json props = json::object();
    for (const auto& p : e.params) {
      json d = {{"type", type_name(p.type)}, {"description", p.doc}};
      if (!p.default_value.is_null()) d["default"] = p.default_value;
      if (p.minimum) d[p.exclusive_minimum ? "exclusiveMinimum" : "minimum"] = *p.minimum;
      props[p.name] = d;
    }
    variants.push_back({{"experiment", e.name}, {"summary", e.summary}, {"params", props}});
  }
  schema["experiments"] = variants;
  return schema;
}

json ExperimentConfig::to_json() const {
  return {{"experiment", experiment}, {"seed", seed}, {"params", params}};
}

std::string ExperimentConfig::short_hash() const { return sha256_hex(to_json().dump()).substr(0, 8); }

ExperimentConfig parse_config(const json& doc) {
  std::vector<std::string> problems;
  if (!doc.is_object()) throw ConfigError({"configuration must be a JSON object"});
  for (const auto& [key, value] : doc.items()) {
    if (key != "experiment" && key != "seed" && key != "params") {
      problems.push_back(key + ": unknown key (allowed: experiment, seed, params)");
    }
  }
  ExperimentConfig cfg;
  const ExperimentInfo* info = nullptr;
  if (!doc.contains("experiment")) {
    problems.push_back("experiment: missing");
  } else if (!doc["experiment"].is_string()) {
    problems.push_back("experiment: expected a string");
  } else {
    cfg.experiment = doc["experiment"].get<std::string>();
    try {
      info = &find_experiment(cfg.experiment);
    } catch (const InvalidInput& e) {
      problems.push_back(std::string("experiment: ") + e.what());
    }
  }
  if (!doc.contains("seed")) {
    problems.push_back("seed: missing");
  } else if (!doc["seed"].is_number_integer() || (!doc["seed"].is_number_unsigned() && doc["seed"].get<long long>() < 0)) {
    problems.push_back("seed: expected a non-negative integer, got " + doc["seed"].dump());
  } else {
    cfg.seed = doc["seed"].get<std::uint64_t>();
  }
  const json given = doc.contains("params") ? doc["params"] : json::object();
  if (!given.is_object()) problems.push_back("params: expected an object");

  if (info && given.is_object()) {
    for (const auto& [key, value] : given.items()) {
      const bool known = std::any_of(info->params.begin(), info->params.end(),
                                     [&](const ParamSpec& p) { return p.name == key; });
      if (!known) problems.push_back("params." + key + ": unknown parameter for " + info->name);
    }
    json params = json::object();
    for (const auto& spec : info->params) {
      if (given.contains(spec.name)) {
        const std::size_t before = problems.size();
        check_value(spec, given[spec.name], problems);
        if (problems.size() == before) params[spec.name] = given[spec.name];
      } else if (!spec.default_value.is_null()) {
        params[spec.name] = spec.default_value;
      } else if (!spec.derive) {
        problems.push_back("params." + spec.name + ": missing (required)");
      }
    }
    // derived defaults once everything they may depend on is present
    const bool complete = std::all_of(info->params.begin(), info->params.end(), [&](const ParamSpec& p) {
      return params.contains(p.name) || (p.derive && !given.contains(p.name));
    });
    if (complete) {
      for (const auto& spec : info->params) {
        if (!params.contains(spec.name) && spec.derive) params[spec.name] = spec.derive(params);
      }
      if (info->validate) info->validate(params, problems);
    }
    cfg.params = params;
  }
  if (!problems.empty()) throw ConfigError(problems);
  return cfg;
}

ExperimentConfig load_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw InvalidInput("cannot open configuration file " + path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError({path.string() + ": " + e.what()});
  }
  return parse_config(doc);
}

json RunManifest::to_json() const {
  json checks_json = json::array();
  for (const auto& c : checks) {
    checks_json.push_back({{"name", c.name},
                           {"value", c.value},
                           {"relation", c.relation},
                           {"threshold", c.threshold},
                           {"passed", c.passed}});
  }
  json files_json = json::array();
  for (const auto& f : files) files_json.push_back({{"name", f.name}, {"rows", f.rows}, {"sha256", f.sha256}});
  json j = {{"version", version},   {"experiment", experiment}, {"seed", seed},
            {"config", config},     {"config_hash", config_hash}, {"started", started},
            {"finished", finished}, {"status", status},         {"threads", threads},
            {"checks", checks_json}, {"files", files_json}};
  if (!error.empty()) j["error"] = error;
  return j;
}

RunManifest RunManifest::from_json(const json& j) {
  RunManifest m;
  try {
    m.version = j.at("version").get<std::string>();
    m.experiment = j.at("experiment").get<std::string>();
    m.seed = j.at("seed").get<std::uint64_t>();
    m.config = j.at("config");
    m.config_hash = j.value("config_hash", "");
    m.started = j.value("started", "");
    m.finished = j.value("finished", "");
    m.status = j.at("status").get<std::string>();
    m.error = j.value("error", "");
    m.threads = j.value("threads", 1u);
    for (const auto& c : j.at("checks")) {
      // non-finite values were written as null
      const double value = c.at("value").is_null() ? std::nan("") : c.at("value").get<double>();
      m.checks.push_back({c.at("name").get<std::string>(), value,
                          c.at("relation").get<std::string>(), c.at("threshold").get<double>(),
                          c.at("passed").get<bool>()});
    }
    for (const auto& f : j.at("files")) {
      m.files.push_back({f.at("name").get<std::string>(), f.at("rows").get<std::size_t>(),
                         f.at("sha256").get<std::string>()});
    }
  } catch (const json::exception& e) {
    throw InvalidInput(std::string("malformed manifest: ") + e.what());
  }
  return m;
}

RunOptions options_from_environment() {
  RunOptions o;
  if (const char* root = std::getenv("DIRACLAB_OUTPUT_ROOT"); root && *root) o.output_root = root;
  o.threads = std::max(1u, std::thread::hardware_concurrency());
  if (const char* cap = std::getenv("DIRACLAB_THREADS"); cap && *cap) {
    char* end = nullptr;
    const long v = std::strtol(cap, &end, 10);
    if (*end != '\0' || v < 1) throw InvalidInput("DIRACLAB_THREADS must be a positive integer");
    o.threads = std::min(o.threads, static_cast<unsigned>(v));
  }
  return o;
}

std::string run_directory_name(const ExperimentConfig& config) {
  return config.experiment + "-s" + std::to_string(config.seed) + "-" + config.short_hash();
}

RunOutcome run_experiment(const ExperimentConfig& config, const RunOptions& options) {
  return run_experiment_in(config, options.output_root / run_directory_name(config), options.threads);
}

RunOutcome run_experiment_in(const ExperimentConfig& config, const fs::path& directory, unsigned threads) {
  threads = std::max(1u, threads);
  const detail::ExperimentFn fn = detail::experiment_function(config.experiment);
  if (fs::exists(directory)) fs::remove_all(directory);
  fs::create_directories(directory);

  RunOutcome out;
  out.directory = directory;
  RunManifest& m = out.manifest;
  m.experiment = config.experiment;
  m.seed = config.seed;
  m.config = config.to_json();
  m.config_hash = config.short_hash();
  m.threads = threads;
  m.started = utc_now();

  {
    std::ofstream echo(directory / "config.echo", std::ios::binary);
    echo << m.config.dump(2) << '\n';
  }
  detail::RunContext ctx(config, directory, threads);
  try {
    fn(ctx);
    m.status = "ok";
  } catch (const std::exception& e) {
    m.status = "failed";
    m.error = e.what();
  }
  std::vector<FileRecord> files{{"config.echo", 1, ""}};
  for (auto& f : ctx.finish()) files.push_back(f);
  for (auto& f : files) f.sha256 = sha256_file(directory / f.name);
  m.files = files;
  m.checks = ctx.checks();
  if (m.status == "ok" && std::any_of(m.checks.begin(), m.checks.end(), [](const CheckRecord& c) { return !c.passed; })) {
    m.status = "checks_failed";
  }
  m.finished = utc_now();
  write_atomically(directory / "manifest.json", m.to_json().dump(2) + "\n");
  out.exit_code = m.status == "ok" ? 0 : m.status == "checks_failed" ? 1 : 2;
  return out;
}

ReplayReport replay(const fs::path& manifest_path, std::optional<std::uint64_t> seed_override, unsigned threads) {
  std::ifstream in(manifest_path);
  if (!in) throw InvalidInput("cannot open manifest " + manifest_path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw InvalidInput(std::string("manifest is not valid JSON: ") + e.what());
  }
  const RunManifest recorded = RunManifest::from_json(doc);
  ReplayReport report;
  report.recorded_version = recorded.version;
  report.version_match = recorded.version == kToolVersion;

  ExperimentConfig cfg = parse_config(recorded.config);
  if (seed_override) cfg.seed = *seed_override;
  report.seed = cfg.seed;

  std::random_device rd;
  const fs::path scratch = fs::temp_directory_path() / ("diraclab-replay-" + std::to_string(rd()) + std::to_string(rd()));
  RunOutcome again;
  try {
    again = run_experiment_in(cfg, scratch, threads);
  } catch (...) {
    fs::remove_all(scratch);
    throw;
  }
  fs::remove_all(scratch);

  const fs::path run_dir = manifest_path.parent_path();
  std::set<std::string> names;
  for (const auto& f : recorded.files) names.insert(f.name);
  for (const auto& f : again.manifest.files) names.insert(f.name);
  report.all_match = true;
  for (const auto& name : names) {
    ReplayFile rf;
    rf.name = name;
    for (const auto& f : recorded.files) {
      if (f.name == name) rf.recorded = f.sha256;
    }
    for (const auto& f : again.manifest.files) {
      if (f.name == name) rf.replayed = f.sha256;
    }
    if (fs::exists(run_dir / name)) rf.on_disk = sha256_file(run_dir / name);
    rf.match = !rf.recorded.empty() && rf.recorded == rf.on_disk && rf.recorded == rf.replayed;
    report.all_match = report.all_match && rf.match;
    report.files.push_back(rf);
  }
  return report;
}

std::string sha256_hex(const std::string& bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
    throw Error("SHA-256 computation failed");
  }
  std::ostringstream out;
  for (unsigned int i = 0; i < len; ++i) out << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(digest[i]);
  return out.str();
}

std::string sha256_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot read " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return sha256_hex(buf.str());
}

namespace detail {

CsvWriter::CsvWriter(const fs::path& path, const std::vector<std::string>& header)
    : out_(path, std::ios::binary | std::ios::trunc) {
  if (!out_) throw Error("cannot write " + path.string());
  out_ << join(header, ",") << '\n';
}

RunContext::RunContext(const ExperimentConfig& config, fs::path directory, unsigned threads)
    : config_(config), directory_(std::move(directory)), threads_(threads) {}

const json& RunContext::param(const std::string& name) const {
  if (!config_.params.contains(name)) throw Error("experiment reads undeclared parameter '" + name + "'");
  return config_.params.at(name);
}

double RunContext::number(const std::string& name) const { return param(name).get<double>(); }
long long RunContext::integer(const std::string& name) const { return param(name).get<long long>(); }
std::size_t RunContext::count(const std::string& name) const { return param(name).get<std::size_t>(); }
bool RunContext::flag(const std::string& name) const { return param(name).get<bool>(); }
std::string RunContext::text(const std::string& name) const { return param(name).get<std::string>(); }
std::vector<double> RunContext::numbers(const std::string& name) const { return param(name).get<std::vector<double>>(); }
std::vector<std::size_t> RunContext::counts(const std::string& name) const {
  return param(name).get<std::vector<std::size_t>>();
}

CsvWriter& RunContext::csv(const std::string& name, const std::vector<std::string>& header) {
  files_.push_back({name, std::make_unique<CsvWriter>(directory_ / name, header), 0});
  return *files_.back().writer;
}

void RunContext::json(const std::string& name, const nlohmann::json& value) {
  std::ofstream out(directory_ / name, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + (directory_ / name).string());
  out << value.dump(2) << '\n';
  files_.push_back({name, nullptr, 1});
}

void RunContext::check(const std::string& name, double value, const std::string& relation, double threshold) {
  bool passed = false;
  if (relation == "<") passed = value < threshold;
  else if (relation == "<=") passed = value <= threshold;
  else if (relation == ">") passed = value > threshold;
  else if (relation == ">=") passed = value >= threshold;
  else if (relation == "==") passed = value == threshold;
  else throw Error("unknown check relation " + relation);
  checks_.push_back({name, value, relation, threshold, passed});
}

std::vector<FileRecord> RunContext::finish() {
  std::vector<FileRecord> out;
  for (auto& f : files_) {
    if (f.writer) {
      f.writer->close();
      f.rows = f.writer->rows();
    }
    out.push_back({f.name, f.rows, ""});
  }
  return out;
}

}  // namespace detail
}  // namespace diraclab
