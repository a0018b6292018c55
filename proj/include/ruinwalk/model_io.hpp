#pragma once

// JSON model files:
//   {"claim": D, "interarrival": D, "truncate_m": int?, "rebalance_l": int?, "tail_eps": real?}
// where D is {"family":"poisson","lambda":x}, {"family":"geometric","p":x},
// {"family":"binomial","n":k,"p":x} or {"pmf":{"offset":k,"weights":[...]}}.

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "ruinwalk/model.hpp"

namespace ruinwalk {

struct ModelSpec {
  ParametricDist claim;
  ParametricDist interarrival;
  std::optional<int> truncate_m;
  std::optional<int> rebalance_l;
  double tail_eps = kDefaultTailEps;
};

// Throws DomainError on schema or parameter problems.
ModelSpec parse_model_spec(const nlohmann::json& doc);
ModelSpec load_model_spec(const std::string& path);

struct BuiltModel {
  RiskModel model;
  double original_drift;                // E(X - c*theta) before truncation
  std::optional<double> original_tail;  // P(X - c*theta <= -(m+1)) when truncated
};

BuiltModel build_model(const ModelSpec& spec);

nlohmann::json to_json(const Pmf& pmf);
nlohmann::json to_json(const ParametricDist& dist);

}  // namespace ruinwalk
