#include "lsad/checkpoint.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

namespace lsad {

using nlohmann::json;

namespace {

constexpr const char* kMagic = "LSADCKPT";

json gaussian_to_json(const Gaussian1D& g) { return json::array({g.precision, g.precision_mean}); }

Gaussian1D gaussian_from_json(const json& j) {
  return {j.at(0).get<double>(), j.at(1).get<double>()};
}

json latent_to_json(const std::vector<GaussianD>& gs) {
  json out = json::array();
  for (const GaussianD& g : gs) {
    json p = json::array();
    for (Eigen::Index k = 0; k < g.precision.size(); ++k) p.push_back(g.precision.data()[k]);
    json h = json::array();
    for (Eigen::Index k = 0; k < g.precision_mean.size(); ++k) h.push_back(g.precision_mean[k]);
    out.push_back(json{{"p", std::move(p)}, {"h", std::move(h)}});
  }
  return out;
}

std::vector<GaussianD> latent_from_json(const json& j, int d) {
  std::vector<GaussianD> out;
  out.reserve(j.size());
  for (const json& e : j) {
    GaussianD g = GaussianD::uniform(d);
    const json& p = e.at("p");
    const json& h = e.at("h");
    if (static_cast<int>(p.size()) != d * d || static_cast<int>(h.size()) != d) {
      throw CheckpointCorrupt("latent belief has the wrong dimension");
    }
    for (int k = 0; k < d * d; ++k) g.precision.data()[k] = p[k].get<double>();
    for (int k = 0; k < d; ++k) g.precision_mean[k] = h[k].get<double>();
    out.push_back(std::move(g));
  }
  return out;
}

json scalar_list(const std::vector<Gaussian1D>& gs) {
  json p = json::array();
  json h = json::array();
  for (const Gaussian1D& g : gs) {
    p.push_back(g.precision);
    h.push_back(g.precision_mean);
  }
  return json{{"p", std::move(p)}, {"h", std::move(h)}};
}

std::vector<Gaussian1D> scalar_list_from(const json& j) {
  const json& p = j.at("p");
  const json& h = j.at("h");
  if (p.size() != h.size()) throw CheckpointCorrupt("scalar belief list length mismatch");
  std::vector<Gaussian1D> out(p.size());
  for (std::size_t k = 0; k < p.size(); ++k) out[k] = {p[k].get<double>(), h[k].get<double>()};
  return out;
}

std::string hex16(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

}  // namespace

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

json param_state_to_json(const ParamState& s) {
  return json{{"latent_dim", s.latent_dim},
              {"period_index", s.period_index},
              {"cc_log_q", s.cc_log_q},
              {"mu", gaussian_to_json(s.mu)},
              {"alpha", scalar_list(s.alpha)},
              {"beta", scalar_list(s.beta)},
              {"u", latent_to_json(s.u)},
              {"v", latent_to_json(s.v)}};
}

ParamState param_state_from_json(const json& j) {
  ParamState s;
  s.latent_dim = j.at("latent_dim").get<int>();
  s.period_index = j.at("period_index").get<std::int64_t>();
  s.cc_log_q = j.at("cc_log_q").get<double>();
  s.mu = gaussian_from_json(j.at("mu"));
  s.alpha = scalar_list_from(j.at("alpha"));
  s.beta = scalar_list_from(j.at("beta"));
  s.u = latent_from_json(j.at("u"), s.latent_dim);
  s.v = latent_from_json(j.at("v"), s.latent_dim);
  return s;
}

std::string rng_to_string(const std::mt19937_64& rng) {
  std::ostringstream os;
  os << rng;
  return os.str();
}

std::mt19937_64 rng_from_string(const std::string& s) {
  std::istringstream is(s);
  std::mt19937_64 rng;
  is >> rng;
  if (is.fail()) throw CheckpointCorrupt("bad RNG state");
  return rng;
}

std::string checkpoint_serialize(const Checkpoint& c) {
  json body{{"config", c.config},
            {"state", param_state_to_json(c.state)},
            {"totals",
             {{"max_natural_param_delta", c.totals.max_natural_param_delta},
              {"pd_skips", c.totals.pd_skips},
              {"improper_skips", c.totals.improper_skips},
              {"clamps", c.totals.clamps},
              {"factors_processed", c.totals.factors_processed}}},
            {"rng", c.rng_state},
            {"next_period", c.next_period},
            {"n_nodes", c.n_nodes},
            {"periodicity",
             {{"width_hours", c.periodicity.width_hours},
              {"shifts", c.periodicity.shifts},
              {"class_counts", c.periodicity.class_counts},
              {"empty_classes", c.periodicity.empty_classes}}}};
  const std::string text = body.dump();
  return std::string(kMagic) + " " + std::to_string(c.version) + " " + hex16(fnv1a64(text)) +
         "\n" + text;
}

Checkpoint checkpoint_deserialize(const std::string& bytes) {
  const auto nl = bytes.find('\n');
  if (nl == std::string::npos) throw CheckpointCorrupt("checkpoint header missing");
  std::istringstream head(bytes.substr(0, nl));
  std::string magic, digest;
  int version = 0;
  head >> magic >> version >> digest;
  if (head.fail() || magic != kMagic) throw CheckpointCorrupt("not a checkpoint file");
  if (version != kCheckpointVersion) {
    throw CheckpointVersionError("checkpoint version " + std::to_string(version) +
                                 " is not supported (expected " +
                                 std::to_string(kCheckpointVersion) + ")");
  }
  const std::string_view body(bytes.data() + nl + 1, bytes.size() - nl - 1);
  if (hex16(fnv1a64(body)) != digest) throw CheckpointCorrupt("checkpoint digest mismatch");

  Checkpoint c;
  try {
    const json j = json::parse(body);
    c.version = version;
    c.config = j.at("config").get<RunConfig>();
    c.state = param_state_from_json(j.at("state"));
    const json& t = j.at("totals");
    c.totals.max_natural_param_delta = t.at("max_natural_param_delta").get<double>();
    c.totals.pd_skips = t.at("pd_skips").get<std::uint64_t>();
    c.totals.improper_skips = t.at("improper_skips").get<std::uint64_t>();
    c.totals.clamps = t.at("clamps").get<std::uint64_t>();
    c.totals.factors_processed = t.at("factors_processed").get<std::uint64_t>();
    c.rng_state = j.at("rng").get<std::string>();
    c.next_period = j.at("next_period").get<std::int64_t>();
    c.n_nodes = j.at("n_nodes").get<std::size_t>();
    const json& p = j.at("periodicity");
    c.periodicity.width_hours = p.at("width_hours").get<int>();
    c.periodicity.shifts = p.at("shifts").get<std::vector<double>>();
    c.periodicity.class_counts = p.at("class_counts").get<std::vector<std::uint32_t>>();
    c.periodicity.empty_classes = p.at("empty_classes").get<std::size_t>();
  } catch (const json::exception& e) {
    throw CheckpointCorrupt(std::string("checkpoint body invalid: ") + e.what());
  }
  return c;
}

void checkpoint_save(const std::filesystem::path& path, const Checkpoint& c) {
  const std::string bytes = checkpoint_serialize(c);
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw std::runtime_error("write failed: " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

Checkpoint checkpoint_load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return checkpoint_deserialize(ss.str());
}

}  // namespace lsad
