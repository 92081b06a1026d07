#pragma once

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

namespace phasor {

using json = nlohmann::json;

// Deterministic number formatting for metric files: shortest round-trip
// representation, identical across runs and platforms using IEEE doubles.
std::string fmt_double(double x);

// Minimal append-style CSV writer with a fixed header.
class CsvWriter {
 public:
  CsvWriter(std::filesystem::path path, std::vector<std::string> header);
  ~CsvWriter();

  void row(const std::vector<double>& values);
  void row(const std::vector<std::string>& values);
  void close();

  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
  std::ofstream out_;
  std::size_t columns_;
};

// Canonical serialization (sorted keys, fixed float format) hashed with
// FNV-1a; used for config provenance.
std::string config_hash(const json& config);

void write_json(const std::filesystem::path& path, const json& j);
json read_json(const std::filesystem::path& path);

// Deep merge: values in `patch` override `base`; objects merge recursively.
json merge_config(json base, const json& patch);

// Apply "a.b.c=value" style override; value parsed as JSON when possible,
// else kept as string.
void apply_override(json& config, const std::string& key_eq_value);

}  // namespace phasor
