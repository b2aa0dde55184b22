#include "lsad/events.hpp"

#include "lsad/gaussian.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <stdexcept>
#include <string_view>

namespace lsad {

namespace {

constexpr std::int64_t kDay = 86400;

std::int64_t floor_div(std::int64_t a, std::int64_t b) {
  std::int64_t q = a / b;
  if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
  return q;
}

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t k = 0;
  const auto is_sep = [](char c) { return c == ',' || c == ' ' || c == '\t' || c == '\r'; };
  const bool comma = line.find(',') != std::string_view::npos;
  while (k <= line.size()) {
    if (comma) {
      const std::size_t e = std::min(line.find(',', k), line.size());
      std::string_view f = line.substr(k, e - k);
      while (!f.empty() && is_sep(f.front())) f.remove_prefix(1);
      while (!f.empty() && is_sep(f.back())) f.remove_suffix(1);
      out.push_back(f);
      k = e + 1;
    } else {
      while (k < line.size() && is_sep(line[k])) ++k;
      if (k >= line.size()) break;
      std::size_t e = k;
      while (e < line.size() && !is_sep(line[e])) ++e;
      out.push_back(line.substr(k, e - k));
      k = e;
    }
  }
  return out;
}

std::optional<std::int64_t> parse_time(std::string_view s) {
  std::int64_t v = 0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec == std::errc() && p == s.data() + s.size()) return v;
  double d = 0.0;
  auto [pd, ecd] = std::from_chars(s.data(), s.data() + s.size(), d);
  if (ecd == std::errc() && pd == s.data() + s.size() && std::isfinite(d)) {
    return static_cast<std::int64_t>(std::floor(d));
  }
  return std::nullopt;
}

struct RawRecord {
  std::int64_t timestamp;
  std::string src;
  std::string dst;
};

}  // namespace

NodeInterner NodeInterner::from_names(std::vector<std::string> names) {
  NodeInterner out;
  for (auto& n : names) {
    if (out.find(n)) throw std::invalid_argument("duplicate node name: " + n);
    out.intern(n);
  }
  return out;
}

NodeInterner NodeInterner::load_roster(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IngestError("cannot read roster " + path.string());
  std::vector<std::string> names;
  std::string line;
  while (std::getline(in, line)) {
    while (!line.empty() && (line.back() == '\r' || line.back() == ' ')) line.pop_back();
    if (!line.empty()) names.push_back(line);
  }
  return from_names(std::move(names));
}

std::optional<NodeId> NodeInterner::find(const std::string& name) const {
  auto it = ids_.find(name);
  if (it == ids_.end()) return std::nullopt;
  return it->second;
}

NodeId NodeInterner::intern(const std::string& name) {
  auto [it, inserted] = ids_.emplace(name, static_cast<NodeId>(names_.size()));
  if (inserted) names_.push_back(name);
  return it->second;
}

IngestResult ingest(std::istream& in, const IngestOptions& options, const NodeInterner* roster) {
  IngestResult res;
  std::vector<RawRecord> raw;
  std::string line;
  bool first = true;
  std::uint64_t data_lines = 0;
  while (std::getline(in, line)) {
    ++res.stats.lines;
    std::string_view sv(line);
    if (sv.find_first_not_of(" \t\r") == std::string_view::npos) continue;
    const auto f = split_fields(sv);
    const bool is_first = first;
    first = false;
    const auto ts = f.size() >= 3 ? parse_time(f[0]) : std::nullopt;
    if (!ts) {
      if (is_first && f.size() >= 3) {
        res.stats.header = true;
        continue;
      }
      ++data_lines;
      ++res.stats.malformed;
      continue;
    }
    ++data_lines;
    if (f[1].empty() || f[2].empty()) {
      ++res.stats.malformed;
      continue;
    }
    if (!options.allow_self_loops && f[1] == f[2]) {
      ++res.stats.self_loops;
      continue;
    }
    raw.push_back({*ts, std::string(f[1]), std::string(f[2])});
  }
  if (in.bad()) throw IngestError("read error");
  if (data_lines > 0 && static_cast<double>(res.stats.malformed) >
                            options.max_malformed_fraction * static_cast<double>(data_lines)) {
    throw IngestError("too many malformed lines: " + std::to_string(res.stats.malformed) + " of " +
                      std::to_string(data_lines));
  }

  std::set<std::string> senders;
  if (options.require_outgoing) {
    for (const RawRecord& r : raw) senders.insert(r.src);
  }
  const auto keep = [&](const std::string& name) {
    return !options.require_outgoing || senders.count(name) > 0;
  };

  if (roster) {
    res.nodes = *roster;
  } else {
    std::set<std::string> names;
    for (const RawRecord& r : raw) {
      if (keep(r.src)) names.insert(r.src);
      if (keep(r.dst)) names.insert(r.dst);
    }
    for (const auto& n : names) res.nodes.intern(n);
  }

  res.events.reserve(raw.size());
  for (const RawRecord& r : raw) {
    if (!keep(r.src) || !keep(r.dst)) {
      ++res.stats.filtered;
      continue;
    }
    const auto s = res.nodes.find(r.src);
    const auto d = res.nodes.find(r.dst);
    if (!s || !d) {
      ++res.stats.unknown_nodes;
      continue;
    }
    res.events.push_back({r.timestamp, *s, *d});
  }
  res.stats.records = res.events.size();
  return res;
}

IngestResult ingest(const std::filesystem::path& path, const IngestOptions& options,
                    const NodeInterner* roster) {
  std::ifstream in(path);
  if (!in) throw IngestError("cannot read " + path.string());
  return ingest(in, options, roster);
}

int day_of_week(std::int64_t timestamp) {
  // 1970-01-01 was a Thursday.
  const std::int64_t days = floor_div(timestamp, kDay);
  return static_cast<int>(((days + 3) % 7 + 7) % 7);
}

std::vector<PeriodSnapshot> bucketize(const std::vector<EventRecord>& events, int width_hours,
                                      bool trim_boundary) {
  if (width_hours <= 0 || 24 % width_hours != 0) {
    throw std::invalid_argument("bucket width must be a positive divisor of 24 hours");
  }
  if (events.empty()) return {};
  const std::int64_t width = std::int64_t{width_hours} * 3600;
  std::int64_t lo = events.front().timestamp;
  std::int64_t hi = lo;
  for (const EventRecord& e : events) {
    lo = std::min(lo, e.timestamp);
    hi = std::max(hi, e.timestamp);
  }
  const std::int64_t origin = floor_div(lo, kDay) * kDay;
  const auto n_buckets = static_cast<std::size_t>(floor_div(hi - origin, width) + 1);

  std::vector<std::vector<Edge>> buckets(n_buckets);
  for (const EventRecord& e : events) {
    buckets[static_cast<std::size_t>(floor_div(e.timestamp - origin, width))].push_back(
        {e.src, e.dst});
  }
  std::size_t first = 0;
  std::size_t last = n_buckets;
  if (trim_boundary) {
    if (n_buckets <= 2) return {};
    first = 1;
    last = n_buckets - 1;
  }
  std::vector<PeriodSnapshot> out;
  out.reserve(last - first);
  for (std::size_t b = first; b < last; ++b) {
    PeriodSnapshot s;
    s.period_index = static_cast<std::int64_t>(b - first);
    s.bucket_start = origin + static_cast<std::int64_t>(b) * width;
    s.bucket_end = s.bucket_start + width;
    s.edges = DyadSet(std::move(buckets[b]));
    s.slot_of_day = static_cast<int>((s.bucket_start - floor_div(s.bucket_start, kDay) * kDay) / width);
    s.day_of_week = day_of_week(s.bucket_start);
    out.push_back(std::move(s));
  }
  return out;
}

PeriodicityTable PeriodicityTable::none(int width_hours) {
  if (width_hours <= 0 || 24 % width_hours != 0) {
    throw std::invalid_argument("bucket width must be a positive divisor of 24 hours");
  }
  PeriodicityTable t;
  t.width_hours = width_hours;
  t.shifts.assign(static_cast<std::size_t>(7 * (24 / width_hours)), 0.0);
  t.class_counts.assign(t.shifts.size(), 0);
  return t;
}

PeriodicityTable periodicity_shifts(const std::vector<PeriodSnapshot>& snapshots,
                                    std::size_t n_nodes, int width_hours,
                                    std::optional<std::size_t> burn_in, bool allow_self_loops) {
  PeriodicityTable t = PeriodicityTable::none(width_hours);
  if (n_nodes < 2) throw std::invalid_argument("periodicity_shifts: need at least two nodes");
  const double dyads = static_cast<double>(n_nodes) *
                       static_cast<double>(allow_self_loops ? n_nodes : n_nodes - 1);
  const std::size_t used = std::min(snapshots.size(), burn_in.value_or(snapshots.size()));
  std::vector<double> sum(t.shifts.size(), 0.0);
  double total = 0.0;
  for (std::size_t k = 0; k < used; ++k) {
    const double dens = static_cast<double>(snapshots[k].edges.size()) / dyads;
    const std::size_t c = t.class_of(snapshots[k]);
    sum[c] += dens;
    ++t.class_counts[c];
    total += dens;
  }
  if (used == 0 || !(total > 0.0)) {
    t.empty_classes = t.shifts.size();
    return t;
  }
  const double overall = logit(total / static_cast<double>(used));
  for (std::size_t c = 0; c < t.shifts.size(); ++c) {
    const double mean = t.class_counts[c] ? sum[c] / t.class_counts[c] : 0.0;
    if (!(mean > 0.0 && mean < 1.0)) {
      ++t.empty_classes;
      continue;
    }
    t.shifts[c] = logit(mean) - overall;
  }
  return t;
}

}  // namespace lsad
