#pragma once

// Experiment configuration shared by all CLI subcommands. JSON with a
// versioned schema; see README for the field list.

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "wiplab/error.hpp"
#include "wiplab/model_io.hpp"
#include "wiplab/partition.hpp"

namespace wiplab {

inline constexpr int kConfigSchemaVersion = 1;

/// Invalid configuration; what() lists one "config.<field>: ..." line per problem.
class ConfigError : public PreconditionError {
 public:
  using PreconditionError::PreconditionError;
};

struct ExperimentConfig {
  int schema_version = kConfigSchemaVersion;
  json model;                // inline model definition, or null when model_file is used
  std::string model_file;
  double alpha = 0.5;
  double epsilon = 0.05;
  std::optional<double> beta;
  int k0 = 9;
  std::vector<std::int64_t> N_list{4096, 8192, 16384, 32768, 65536, 131072};
  std::int64_t N = 16384;    // single-path length for `couple`
  int reps = 200;
  int reps_for_cdf = 100;
  std::uint64_t seed = 1;
  int threads = 1;
  std::string out_dir = "out";
  double delta = 0.5;
  double epsilon0 = 1.0;
  bool smoothing = false;
  int m_max = 64;
  int t_points = 9;
  std::vector<int> k_list;   // blocks printed by `partition`; empty means all blocks of N_list.back()
  std::vector<long> c3_n{16, 64, 256, 1024};
  std::vector<long> c3_k{0, 10, 100, 1000};
  int k_gap_max = 20;
  int max_intervals = 4;     // M1 + M2
  int max_card = 4;

  double beta_or_default() const { return beta.value_or(optimal_beta(alpha)); }

  bool operator==(const ExperimentConfig&) const = default;

  ChainModel load() const {
    if (!model_file.empty()) return load_model(model_file);
    return model_from_json(model);
  }

  /// Throws ConfigError naming every offending field.
  void validate(bool rate_experiment = false, bool needs_model = true) const {
    std::vector<std::string> problems;
    auto check = [&](bool ok, const std::string& field, const std::string& msg) {
      if (!ok) problems.push_back("config." + field + ": " + msg);
    };
    check(schema_version == kConfigSchemaVersion, "schema_version",
          "unsupported version " + std::to_string(schema_version));
    check(!needs_model || !model.is_null() || !model_file.empty(), "model", "either model or model_file is required");
    check(alpha > 0.0, "alpha", "must be > 0");
    check(epsilon > 0.0 && epsilon < 1.0, "epsilon", "must lie in (0, 1)");
    if (alpha > 0.0) {
      const double b = beta_or_default();
      check(b > 0.0 && b < 1.0, "beta", "must lie in (0, 1)");
      check(epsilon + b < 1.0, "epsilon", "epsilon + beta must be < 1");
      if (rate_experiment) check(b > 0.5, "beta", "must be > 1/2 for rate experiments");
    }
    check(k0 >= 1 && k0 <= 40, "k0", "must lie in [1, 40]");
    check(!N_list.empty(), "N_list", "must be non-empty");
    for (auto n : N_list) check(n >= 1, "N_list", "entries must be positive");
    check(N >= 1, "N", "must be positive");
    check(reps >= 2, "reps", "must be >= 2");
    check(reps_for_cdf >= 2, "reps_for_cdf", "must be >= 2");
    check(threads >= 1, "threads", "must be positive");
    check(delta > 0.0, "delta", "must be > 0");
    check(epsilon0 > 0.0 && epsilon0 <= 1.0, "epsilon0", "must lie in (0, 1]");
    check(m_max >= 1, "m_max", "must be positive");
    check(t_points >= 1, "t_points", "must be positive");
    check(k_gap_max >= 1, "k_gap_max", "must be positive");
    check(max_intervals >= 2, "max_intervals", "must be >= 2");
    check(max_card >= 1, "max_card", "must be positive");
    for (long n : c3_n) check(n >= 1, "c3_n", "entries must be positive");
    for (long k : c3_k) check(k >= 0, "c3_k", "entries must be >= 0");
    if (!problems.empty()) {
      std::string msg;
      for (const auto& p : problems) msg += (msg.empty() ? "" : "\n") + p;
      throw ConfigError(msg);
    }
  }
};

/// Everything except the thread count, which does not affect results.
inline json config_to_json(const ExperimentConfig& c) {
  json j;
  j["schema_version"] = c.schema_version;
  j["model"] = c.model;
  j["model_file"] = c.model_file;
  j["alpha"] = c.alpha;
  j["epsilon"] = c.epsilon;
  j["beta"] = c.beta ? json(*c.beta) : json(nullptr);
  j["k0"] = c.k0;
  j["N_list"] = c.N_list;
  j["N"] = c.N;
  j["reps"] = c.reps;
  j["reps_for_cdf"] = c.reps_for_cdf;
  j["seed"] = c.seed;
  j["out_dir"] = c.out_dir;
  j["delta"] = c.delta;
  j["epsilon0"] = c.epsilon0;
  j["smoothing"] = c.smoothing;
  j["m_max"] = c.m_max;
  j["t_points"] = c.t_points;
  j["k_list"] = c.k_list;
  j["c3_n"] = c.c3_n;
  j["c3_k"] = c.c3_k;
  j["k_gap_max"] = c.k_gap_max;
  j["max_intervals"] = c.max_intervals;
  j["max_card"] = c.max_card;
  return j;
}

inline ExperimentConfig config_from_json(const json& j) {
  if (!j.is_object()) throw ConfigError("config: top-level JSON object expected");
  static const std::vector<std::string> known{
      "schema_version", "model", "model_file", "alpha", "epsilon", "beta", "k0", "N_list", "N", "reps",
      "reps_for_cdf", "seed", "threads", "out_dir", "delta", "epsilon0", "smoothing", "m_max", "t_points",
      "k_list", "c3_n", "c3_k", "k_gap_max", "max_intervals", "max_card"};
  std::vector<std::string> problems;
  for (const auto& [key, value] : j.items()) {
    if (std::find(known.begin(), known.end(), key) == known.end()) problems.push_back("config." + key + ": unknown field");
  }
  ExperimentConfig c;
  auto get = [&](const char* key, auto& dst) {
    if (!j.contains(key)) return;
    try {
      j.at(key).get_to(dst);
    } catch (const json::exception& e) {
      problems.push_back(std::string("config.") + key + ": " + e.what());
    }
  };
  get("schema_version", c.schema_version);
  if (j.contains("model")) c.model = j.at("model");
  get("model_file", c.model_file);
  get("alpha", c.alpha);
  get("epsilon", c.epsilon);
  if (j.contains("beta") && !j.at("beta").is_null()) {
    double b = 0.0;
    get("beta", b);
    c.beta = b;
  }
  get("k0", c.k0);
  get("N_list", c.N_list);
  get("N", c.N);
  get("reps", c.reps);
  get("reps_for_cdf", c.reps_for_cdf);
  get("seed", c.seed);
  get("threads", c.threads);
  get("out_dir", c.out_dir);
  get("delta", c.delta);
  get("epsilon0", c.epsilon0);
  get("smoothing", c.smoothing);
  get("m_max", c.m_max);
  get("t_points", c.t_points);
  get("k_list", c.k_list);
  get("c3_n", c.c3_n);
  get("c3_k", c.c3_k);
  get("k_gap_max", c.k_gap_max);
  get("max_intervals", c.max_intervals);
  get("max_card", c.max_card);
  if (!problems.empty()) {
    std::string msg;
    for (const auto& p : problems) msg += (msg.empty() ? "" : "\n") + p;
    throw ConfigError(msg);
  }
  return c;
}

inline ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  json doc;
  try {
    in >> doc;
  } catch (const json::parse_error& e) {
    throw ConfigError("config file " + path + ": " + e.what());
  }
  return config_from_json(doc);
}

}  // namespace wiplab
