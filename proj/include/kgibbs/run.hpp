#pragma once

#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "kgibbs/config.hpp"

namespace kg {

using json = nlohmann::json;

inline constexpr const char* kToolVersion = "0.3.0";

// Module failure with the chain of stages it passed through.
class RunError : public std::runtime_error {
 public:
  RunError(const std::string& what, std::vector<std::string> context)
      : std::runtime_error(what), context_(std::move(context)) {}
  const std::vector<std::string>& context() const { return context_; }

 private:
  std::vector<std::string> context_;
};

json error_json(const std::exception& e);

struct Artifact {
  std::string file;    // relative to the output directory
  std::string sha256;
};

struct RunManifest {
  std::string kind;
  std::string config_hash;   // sha256 of the canonical config
  std::string model_hash;    // sha256 of the canonical [model] section
  std::string tool_version = kToolVersion;
  std::uint64_t seed = 0;
  int threads = 1;
  double wall_clock = 0.0;   // seconds
  std::vector<Artifact> outputs;
  // flat numeric/string summary; a field "x_err" is the standard error of "x"
  json results = json::object();
};

json to_json(const RunManifest& m);
RunManifest manifest_from_json(const json& j);
RunManifest read_manifest(const std::string& path);

// Runs the pipeline for the experiment kind, writes artifacts plus
// manifest.json into cfg.out. Progress lines go to log when given.
RunManifest run(const ExperimentConfig& cfg, std::ostream* log = nullptr);

// Every output exists under dir and matches its checksum; returns the problems.
std::vector<std::string> verify_manifest(const RunManifest& m, const std::string& dir);

struct FieldDiff {
  std::string field;
  json a, b;
  double tolerance = 0.0;
  std::string status;  // "consistent", "inconsistent", "differs", "missing"
};

struct CompareReport {
  std::string verdict;  // "identical", "consistent", "inconsistent", "incomparable"
  std::vector<FieldDiff> diffs;
  std::string message;
};

// Throws std::invalid_argument when the experiment kinds differ.
CompareReport compare(const RunManifest& a, const RunManifest& b);
json to_json(const CompareReport& r);

}  // namespace kg
