#pragma once

// Run configuration: one JSON file, every knob overridable from the CLI.

#include "lsad/model.hpp"

#include "json.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

namespace lsad {

/// Environment variable that overrides io.data_dir.
inline constexpr const char* kDataDirEnv = "LSAD_DATA_DIR";

struct IoConfig {
  std::string data_dir = ".";
  std::string events = "events.csv";
  std::string roster;  // empty: node universe from the event file
  std::string out_dir = "out";
  int bucket_width_hours = 4;
  bool trim_boundary = false;
  bool require_outgoing = false;
  std::string periodicity = "none";  // none | offline | burn_in
  std::size_t burn_in_periods = 42;

  std::filesystem::path resolve(const std::string& p) const;
};

struct ScoringConfig {
  double edge_threshold = -10.0;
  std::size_t top_k = 200;
  std::size_t scan_window = 20;
  double scan_z = 3.0;
};

struct ReplayConfig {
  bool tune_forgetting = true;
  bool remove_anomalies = false;
  std::int64_t checkpoint_every = 0;  // periods; 0 disables
};

struct RunConfig {
  ModelConfig model = default_model();
  IoConfig io;
  ScoringConfig scoring;
  ReplayConfig replay;
  std::uint64_t seed = 1;

  /// Model defaults with non-edges sampled at 3.3 per edge.
  static ModelConfig default_model();

  void validate() const;
};

void to_json(nlohmann::json& j, const SamplingPolicy& p);
void from_json(const nlohmann::json& j, SamplingPolicy& p);
void to_json(nlohmann::json& j, const ModelConfig& c);
void from_json(const nlohmann::json& j, ModelConfig& c);
void to_json(nlohmann::json& j, const RunConfig& c);
void from_json(const nlohmann::json& j, RunConfig& c);

/// Parses "all", "proportion:0.025", "count:500000" or "ratio:3.3".
SamplingPolicy parse_sampling(const std::string& s);
std::string format_sampling(const SamplingPolicy& p);

/// Reads a config file (missing keys keep defaults, unknown keys are errors)
/// and applies the data-directory environment override.
RunConfig load_config(const std::filesystem::path& path);
/// Defaults plus the environment override.
RunConfig default_config();
void save_config(const std::filesystem::path& path, const RunConfig& c);

}  // namespace lsad
