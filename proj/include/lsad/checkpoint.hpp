#pragma once

// Versioned, digest-protected replay checkpoints.
//
// Layout: a first line "LSADCKPT <version> <fnv1a64 of body, 16 hex digits>"
// followed by a JSON body.

#include "lsad/config.hpp"
#include "lsad/ep_engine.hpp"
#include "lsad/events.hpp"
#include "lsad/model.hpp"

#include <cstdint>
#include <filesystem>
#include <random>
#include <stdexcept>
#include <string>

namespace lsad {

inline constexpr int kCheckpointVersion = 1;

class CheckpointVersionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class CheckpointCorrupt : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Checkpoint {
  int version = kCheckpointVersion;
  RunConfig config;
  ParamState state;
  SweepStats totals;  // message-store counters summed over the run; timing is not stored
  std::string rng_state;
  std::int64_t next_period = 0;
  std::size_t n_nodes = 0;
  PeriodicityTable periodicity;
};

std::uint64_t fnv1a64(std::string_view bytes);

nlohmann::json param_state_to_json(const ParamState& s);
ParamState param_state_from_json(const nlohmann::json& j);

std::string rng_to_string(const std::mt19937_64& rng);
std::mt19937_64 rng_from_string(const std::string& s);

std::string checkpoint_serialize(const Checkpoint& c);
/// Throws CheckpointVersionError or CheckpointCorrupt.
Checkpoint checkpoint_deserialize(const std::string& bytes);

void checkpoint_save(const std::filesystem::path& path, const Checkpoint& c);
Checkpoint checkpoint_load(const std::filesystem::path& path);

}  // namespace lsad
