#pragma once

// Event ingestion, time bucketing and periodicity mean shifts.

#include "lsad/graph.hpp"

#include <cstdint>
#include <filesystem>
#include <istream>
#include <optional>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

namespace lsad {

struct EventRecord {
  std::int64_t timestamp = 0;  // seconds since epoch
  NodeId src = 0;
  NodeId dst = 0;

  friend bool operator==(const EventRecord&, const EventRecord&) = default;
};

/// Maps node names to dense ids. A frozen interner rejects unknown names.
class NodeInterner {
 public:
  NodeInterner() = default;
  static NodeInterner from_names(std::vector<std::string> names);
  static NodeInterner load_roster(const std::filesystem::path& path);

  std::optional<NodeId> find(const std::string& name) const;
  NodeId intern(const std::string& name);
  const std::string& name(NodeId id) const { return names_.at(id); }
  const std::vector<std::string>& names() const { return names_; }
  std::size_t size() const { return names_.size(); }

 private:
  std::vector<std::string> names_;
  std::unordered_map<std::string, NodeId> ids_;
};

struct IngestOptions {
  bool allow_self_loops = false;
  /// Keep only nodes with at least one outgoing record.
  bool require_outgoing = false;
  double max_malformed_fraction = 0.5;
};

struct IngestStats {
  std::uint64_t lines = 0;
  std::uint64_t records = 0;
  std::uint64_t malformed = 0;
  std::uint64_t self_loops = 0;
  std::uint64_t unknown_nodes = 0;  // records dropped for names outside the roster
  std::uint64_t filtered = 0;       // records dropped by the sender-activity filter
  bool header = false;
};

struct IngestResult {
  std::vector<EventRecord> events;
  NodeInterner nodes;
  IngestStats stats;
};

class IngestError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Reads `time,src,dst` records (comma or whitespace separated, extra columns
/// ignored, optional header). Without a roster, ids follow sorted node names.
/// Throws IngestError when the source is unreadable or more than
/// `max_malformed_fraction` of the data lines are malformed.
IngestResult ingest(std::istream& in, const IngestOptions& options = {},
                    const NodeInterner* roster = nullptr);
IngestResult ingest(const std::filesystem::path& path, const IngestOptions& options = {},
                    const NodeInterner* roster = nullptr);

struct PeriodSnapshot {
  std::int64_t period_index = 0;
  std::int64_t bucket_start = 0;
  std::int64_t bucket_end = 0;  // exclusive
  DyadSet edges;
  int slot_of_day = 0;
  int day_of_week = 0;  // Monday = 0
};

/// Floor division of a timestamp into days; Monday = 0.
int day_of_week(std::int64_t timestamp);

/// Presence-deduplicated buckets of `width_hours`, aligned to midnight UTC of
/// the first event's day. Empty buckets in the middle are kept. With
/// `trim_boundary`, the first and last buckets are dropped. Throws
/// std::invalid_argument unless width_hours divides 24.
std::vector<PeriodSnapshot> bucketize(const std::vector<EventRecord>& events, int width_hours,
                                      bool trim_boundary = false);

struct PeriodicityTable {
  int width_hours = 4;
  std::vector<double> shifts;  // indexed by day_of_week * slots_per_day + slot_of_day
  std::vector<std::uint32_t> class_counts;
  std::size_t empty_classes = 0;

  int slots_per_day() const { return 24 / width_hours; }
  std::size_t n_classes() const { return shifts.size(); }
  std::size_t class_of(const PeriodSnapshot& s) const {
    return static_cast<std::size_t>(s.day_of_week * slots_per_day() + s.slot_of_day);
  }
  double offset(const PeriodSnapshot& s) const { return shifts.at(class_of(s)); }

  /// All-zero table.
  static PeriodicityTable none(int width_hours);
};

/// shift(class) = logit(mean density in class) - logit(overall mean density),
/// with density = edges / (n (n - 1)). Classes without buckets get 0. When
/// `burn_in` is set only the first that many snapshots are used.
PeriodicityTable periodicity_shifts(const std::vector<PeriodSnapshot>& snapshots,
                                    std::size_t n_nodes, int width_hours,
                                    std::optional<std::size_t> burn_in = std::nullopt,
                                    bool allow_self_loops = false);

}  // namespace lsad
