#pragma once

// Configuration ingestion: a single versioned JSON document describing the
// chain, the system, and per-experiment options. All probabilities pass
// through the chain constructors, so malformed inputs fail before any
// computation runs.

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "rmab/chain.hpp"

namespace rmab {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ExperimentConfig {
  nlohmann::json raw;  // resolved document, echoed into outputs
  std::uint64_t seed = 1;
  std::optional<ChainC1> chain_c1;
  std::optional<ChainGeneral> chain_general;
  std::optional<SystemConfig> system;
};

namespace detail {

inline double require_prob(const nlohmann::json& j, const std::string& key) {
  if (!j.contains(key) || !j[key].is_number()) {
    throw ConfigError("config: missing or non-numeric field '" + key + "'");
  }
  return j[key].get<double>();
}

inline ChainC1 parse_chain_c1(const nlohmann::json& j) {
  try {
    return ChainC1(require_prob(j, "p01_passive"), require_prob(j, "p11_passive"),
                   require_prob(j, "p01_active"), require_prob(j, "p11_active"));
  } catch (const std::domain_error& e) {
    throw ConfigError(std::string("config: chain_c1: ") + e.what());
  }
}

inline ChainGeneral parse_chain_general(const nlohmann::json& j) {
  if (!j.contains("capacity")) {
    throw ConfigError("config: chain_general needs 'capacity'");
  }
  TridiagonalParams p;
  p.arrival_passive = require_prob(j, "arrival_passive");
  p.arrival_active = require_prob(j, "arrival_active");
  p.up_passive = j.value("up_passive", 0.0);
  p.up_active = j.value("up_active", 0.0);
  p.down_passive = j.value("down_passive", 0.0);
  p.down_active = j.value("down_active", 0.0);
  p.stay_full_passive = require_prob(j, "stay_full_passive");
  p.stay_full_active = require_prob(j, "stay_full_active");
  try {
    return make_tridiagonal_chain(j["capacity"].get<int>(), p);
  } catch (const std::exception& e) {
    throw ConfigError(std::string("config: chain_general: ") + e.what());
  }
}

inline std::optional<long> parse_horizon(const nlohmann::json& j) {
  if (!j.contains("horizon") || j["horizon"].is_null()) return std::nullopt;
  if (j["horizon"].is_string()) {
    if (j["horizon"] == "infinite") return std::nullopt;
    throw ConfigError("config: horizon must be a slot count or \"infinite\"");
  }
  return j["horizon"].get<long>();
}

inline SystemConfig parse_system(const nlohmann::json& j, int capacity) {
  const int nodes = j.value("nodes", 0);
  const int servers = j.value("servers", 0);
  const double beta = j.value("beta", 1.0);
  const auto horizon = parse_horizon(j);
  std::vector<BeliefVec> beliefs;
  if (!j.contains("initial_beliefs") || j["initial_beliefs"] == "uniform") {
    beliefs.assign(static_cast<std::size_t>(nodes),
                   BeliefVec::uniform(capacity));
  } else {
    for (const auto& entry : j["initial_beliefs"]) {
      try {
        if (entry.is_number()) {
          if (capacity != 1) {
            throw ConfigError(
                "config: scalar beliefs are only valid for capacity 1");
          }
          beliefs.push_back(BeliefVec::from_scalar(entry.get<double>()));
        } else {
          beliefs.push_back(BeliefVec(entry.get<std::vector<double>>()));
        }
      } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("config: initial_beliefs: ") + e.what());
      } catch (const std::domain_error& e) {
        throw ConfigError(std::string("config: initial_beliefs: ") + e.what());
      }
    }
  }
  try {
    return SystemConfig(nodes, servers, capacity, beta, horizon,
                        std::move(beliefs));
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("config: system: ") + e.what());
  }
}

}  // namespace detail

inline ExperimentConfig parse_experiment_config(const nlohmann::json& j) {
  if (!j.is_object()) throw ConfigError("config: document must be an object");
  const int version = j.value("schema_version", 0);
  if (version != 1) {
    throw ConfigError("config: unsupported schema_version " +
                      std::to_string(version));
  }
  ExperimentConfig cfg;
  cfg.raw = j;
  cfg.seed = j.value("seed", std::uint64_t{1});
  if (j.contains("chain_c1")) {
    cfg.chain_c1 = detail::parse_chain_c1(j["chain_c1"]);
  }
  if (j.contains("chain_general")) {
    cfg.chain_general = detail::parse_chain_general(j["chain_general"]);
  }
  if (j.contains("system")) {
    int capacity = 1;
    if (cfg.chain_general.has_value()) {
      capacity = cfg.chain_general->capacity();
    }
    cfg.system = detail::parse_system(j["system"], capacity);
  }
  return cfg;
}

}  // namespace rmab
