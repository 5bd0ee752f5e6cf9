#pragma once

#include <charconv>
#include <filesystem>
#include <fstream>
#include <memory>
#include <string>
#include <type_traits>
#include <vector>

#include "diraclab/runner.hpp"

namespace diraclab::detail {

// Shortest round-trip text for doubles, so artifacts are byte-stable.
inline std::string format_number(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

class CsvWriter {
 public:
  CsvWriter(const std::filesystem::path& path, const std::vector<std::string>& header);

  template <typename... Ts>
  void row(const Ts&... values) {
    bool first = true;
    ((out_ << (first ? "" : ",") << cell(values), first = false), ...);
    out_ << '\n';
    ++rows_;
  }
  void close() { out_.close(); }
  std::size_t rows() const noexcept { return rows_; }

 private:
  template <typename T>
  static std::string cell(const T& v) {
    if constexpr (std::is_floating_point_v<T>) {
      return format_number(static_cast<double>(v));
    } else if constexpr (std::is_integral_v<T>) {
      return std::to_string(v);
    } else {
      return std::string(v);
    }
  }

  std::ofstream out_;
  std::size_t rows_ = 0;
};

class RunContext {
 public:
  RunContext(const ExperimentConfig& config, std::filesystem::path directory, unsigned threads);

  const ExperimentConfig& config() const noexcept { return config_; }
  std::uint64_t seed() const noexcept { return config_.seed; }
  unsigned threads() const noexcept { return threads_; }

  double number(const std::string& name) const;
  long long integer(const std::string& name) const;
  std::size_t count(const std::string& name) const;
  bool flag(const std::string& name) const;
  std::string text(const std::string& name) const;
  std::vector<double> numbers(const std::string& name) const;
  std::vector<std::size_t> counts(const std::string& name) const;

  CsvWriter& csv(const std::string& name, const std::vector<std::string>& header);
  void json(const std::string& name, const nlohmann::json& value);
  void check(const std::string& name, double value, const std::string& relation, double threshold);

  /// Closes writers and returns the records in creation order (rows only; hashes are added later).
  std::vector<FileRecord> finish();
  const std::vector<CheckRecord>& checks() const noexcept { return checks_; }

 private:
  struct Entry {
    std::string name;
    std::unique_ptr<CsvWriter> writer;  // null for JSON files
    std::size_t rows = 0;
  };
  const nlohmann::json& param(const std::string& name) const;

  ExperimentConfig config_;
  std::filesystem::path directory_;
  unsigned threads_;
  std::vector<Entry> files_;
  std::vector<CheckRecord> checks_;
};

using ExperimentFn = void (*)(RunContext&);
ExperimentFn experiment_function(const std::string& name);

}  // namespace diraclab::detail
