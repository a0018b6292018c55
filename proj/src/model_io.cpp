#include "ruinwalk/model_io.hpp"

#include <cmath>
#include <fstream>

#include "ruinwalk/errors.hpp"

namespace ruinwalk {

using nlohmann::json;

namespace {

ParametricDist parse_dist(const json& j, const char* field) {
  const std::string where = std::string("'") + field + "'";
  if (!j.is_object()) throw DomainError(where + " must be an object");
  if (j.contains("pmf")) {
    const json& p = j.at("pmf");
    if (!p.is_object() || !p.contains("weights") || !p.at("weights").is_array())
      throw DomainError(where + ".pmf needs a 'weights' array");
    const int offset = p.value("offset", 0);
    return Pmf(offset, p.at("weights").get<std::vector<double>>());
  }
  if (!j.contains("family")) throw DomainError(where + " needs 'family' or 'pmf'");
  const std::string family = j.at("family").get<std::string>();
  auto num = [&](const char* key) {
    if (!j.contains(key) || !j.at(key).is_number())
      throw DomainError(where + " (" + family + ") needs numeric '" + key + "'");
    return j.at(key).get<double>();
  };
  ParametricDist d;
  if (family == "poisson")
    d = Poisson{num("lambda")};
  else if (family == "geometric")
    d = Geometric{num("p")};
  else if (family == "binomial") {
    const double n = num("n");
    if (n != std::floor(n)) throw DomainError(where + " binomial n must be an integer");
    d = Binomial{static_cast<int>(n), num("p")};
  } else
    throw DomainError(where + " has unknown family '" + family + "'");
  validate(d);
  return d;
}

}  // namespace

ModelSpec parse_model_spec(const json& doc) {
  try {
    if (!doc.is_object()) throw DomainError("model file must hold a JSON object");
    for (const char* key : {"claim", "interarrival"})
      if (!doc.contains(key)) throw DomainError(std::string("model file lacks '") + key + "'");
    ModelSpec spec{parse_dist(doc.at("claim"), "claim"),
                   parse_dist(doc.at("interarrival"), "interarrival"), std::nullopt, std::nullopt,
                   kDefaultTailEps};
    if (doc.contains("truncate_m")) spec.truncate_m = doc.at("truncate_m").get<int>();
    if (doc.contains("rebalance_l")) spec.rebalance_l = doc.at("rebalance_l").get<int>();
    if (doc.contains("tail_eps")) spec.tail_eps = doc.at("tail_eps").get<double>();
    if (spec.rebalance_l && !spec.truncate_m)
      throw DomainError("'rebalance_l' requires 'truncate_m'");
    return spec;
  } catch (const json::exception& e) {
    throw DomainError(std::string("malformed model file: ") + e.what());
  }
}

ModelSpec load_model_spec(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DomainError("cannot open model file " + path);
  json doc;
  try {
    in >> doc;
  } catch (const json::exception& e) {
    throw DomainError("model file " + path + " is not valid JSON: " + e.what());
  }
  return parse_model_spec(doc);
}

BuiltModel build_model(const ModelSpec& spec) {
  Pmf claim = spec.rebalance_l
                  ? rebalance_claim(spec.claim, spec.interarrival, *spec.truncate_m,
                                    *spec.rebalance_l, spec.tail_eps)
                  : materialize(spec.claim, spec.tail_eps);
  Pmf inter = spec.truncate_m ? truncate(spec.interarrival, *spec.truncate_m)
                              : materialize(spec.interarrival, spec.tail_eps);
  std::optional<double> tail;
  if (spec.truncate_m)
    tail = lower_tail_beyond(spec.claim, spec.interarrival, *spec.truncate_m, spec.tail_eps);
  const double original_drift = mean(spec.claim) - mean(spec.interarrival);
  return BuiltModel{RiskModel(std::move(claim), std::move(inter)), original_drift, tail};
}

json to_json(const Pmf& pmf) {
  return json{{"offset", pmf.offset()}, {"weights", pmf.weights()}, {"tail_mass", pmf.tail_mass()}};
}

json to_json(const ParametricDist& dist) {
  struct Visitor {
    json operator()(const Geometric& g) const { return {{"family", "geometric"}, {"p", g.p}}; }
    json operator()(const Poisson& p) const { return {{"family", "poisson"}, {"lambda", p.lambda}}; }
    json operator()(const Binomial& b) const {
      return {{"family", "binomial"}, {"n", b.n}, {"p", b.p}};
    }
    json operator()(const Pmf& p) const { return {{"pmf", to_json(p)}}; }
  };
  return std::visit(Visitor{}, dist);
}

}  // namespace ruinwalk
