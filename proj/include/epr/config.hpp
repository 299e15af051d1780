#pragma once

#include <json.hpp>

#include <cstdint>
#include <fstream>
#include <iomanip>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "epr/montecarlo.hpp"
#include "epr/version.hpp"

namespace epr {

using Json = nlohmann::json;

// Result of parsing a config document: the fully-validated experiment, the
// effective config (defaults filled, overrides applied, probabilities
// normalized) and its hash for report provenance.
struct ParsedConfig {
  int schema_version = 1;
  Json effective;
  std::string config_hash;
  ExperimentConfig experiment;
};

// Command-line values that win over the config file.
struct ConfigOverrides {
  std::optional<std::int64_t> trials;
  std::optional<std::uint64_t> seed;
};

inline std::uint64_t fnv1a64(std::string_view text) {
  std::uint64_t hash = 0xcbf29ce484222325ULL;
  for (const char c : text) {
    hash ^= static_cast<unsigned char>(c);
    hash *= 0x100000001b3ULL;
  }
  return hash;
}

inline std::string config_hash_string(const Json& effective) {
  std::ostringstream out;
  out << "fnv1a:" << std::hex << std::setw(16) << std::setfill('0')
      << fnv1a64(effective.dump());
  return out.str();
}

namespace detail {

[[noreturn]] inline void config_fail(const std::string& field, const std::string& message) {
  throw ConfigError("config field '" + field + "': " + message);
}

inline void require_known_keys(const Json& obj, const std::string& context,
                               const std::set<std::string>& allowed) {
  for (const auto& item : obj.items()) {
    if (!allowed.count(item.key())) {
      const std::string where = context.empty() ? item.key() : context + "." + item.key();
      throw ConfigError("config field '" + where + "': unknown field");
    }
  }
}

inline const Json& require_field(const Json& obj, const std::string& context,
                                 const std::string& key) {
  const auto it = obj.find(key);
  if (it == obj.end()) {
    const std::string where = context.empty() ? key : context + "." + key;
    config_fail(where, "required field is missing");
  }
  return *it;
}

inline std::int64_t positive_integer(const Json& value, const std::string& field) {
  if (!value.is_number_integer() || value.get<std::int64_t>() < 1)
    config_fail(field, "must be a positive integer");
  return value.get<std::int64_t>();
}

inline std::uint64_t unsigned_integer(const Json& value, const std::string& field) {
  if (value.is_number_unsigned()) return value.get<std::uint64_t>();
  if (value.is_number_integer() && value.get<std::int64_t>() >= 0)
    return static_cast<std::uint64_t>(value.get<std::int64_t>());
  config_fail(field, "must be a non-negative integer");
}

inline double positive_real(const Json& value, const std::string& field) {
  if (!value.is_number() || !(value.get<double>() > 0.0))
    config_fail(field, "must be a positive number");
  return value.get<double>();
}

}  // namespace detail

// Validates a config document and builds the experiment it describes.
// Every diagnostic names the offending field.
inline ParsedConfig parse_config(const Json& doc, const ConfigOverrides& overrides = {}) {
  using detail::config_fail;
  if (!doc.is_object()) throw ConfigError("config root must be a JSON object");
  detail::require_known_keys(doc, "", {"schema_version", "probabilities", "labels",
                                       "model", "nodes", "m", "solver", "experiment"});

  int schema_version = 1;
  if (doc.contains("schema_version")) {
    if (!doc["schema_version"].is_number_integer())
      config_fail("schema_version", "must be an integer");
    schema_version = doc["schema_version"].get<int>();
  }
  if (schema_version != 1)
    config_fail("schema_version", "unsupported version (expected 1)");

  // --- probabilities -------------------------------------------------------
  const Json& probs = detail::require_field(doc, "", "probabilities");
  if (!probs.is_array() || probs.size() < 2)
    config_fail("probabilities", "must be an array of at least 2 numbers");
  Vector mass(static_cast<int>(probs.size()));
  for (int x = 0; x < mass.size(); ++x) {
    if (!probs[x].is_number() || !(probs[x].get<double>() > 0.0))
      config_fail("probabilities", "entries must be strictly positive numbers");
    mass[x] = probs[x].get<double>();
  }
  const double total = mass.sum();
  if (std::abs(total - 1.0) > 1e-9) {
    std::ostringstream msg;
    msg << "entries must sum to 1 within 1e-9 (got " << total << ")";
    config_fail("probabilities", msg.str());
  }
  mass /= total;

  std::vector<std::string> labels;
  if (doc.contains("labels")) {
    const Json& jl = doc["labels"];
    if (!jl.is_array() || jl.size() != probs.size())
      config_fail("labels", "must be an array matching probabilities in length");
    for (const auto& l : jl) {
      if (!l.is_string()) config_fail("labels", "entries must be strings");
      labels.push_back(l.get<std::string>());
    }
  }
  Alphabet alphabet = labels.empty()
                          ? Alphabet(static_cast<int>(mass.size()))
                          : Alphabet(static_cast<int>(mass.size()), labels);
  Distribution p(alphabet, mass);

  // --- model ---------------------------------------------------------------
  const Json& model_spec = detail::require_field(doc, "", "model");
  if (!model_spec.is_object()) config_fail("model", "must be an object");
  detail::require_known_keys(model_spec, "model", {"kind", "embeddings"});
  const Json& kind = detail::require_field(model_spec, "model", "kind");
  if (!kind.is_string()) config_fail("model.kind", "must be a string");
  const std::string kind_name = kind.get<std::string>();

  LossModel model = [&]() -> LossModel {
    if (kind_name == "quadratic-embedding") {
      const Json& emb = detail::require_field(model_spec, "model", "embeddings");
      if (!emb.is_array() || emb.size() != static_cast<std::size_t>(alphabet.size()))
        config_fail("model.embeddings", "must be an array with one row per symbol");
      std::size_t dim = 0;
      for (const auto& row : emb) {
        if (!row.is_array() || row.empty())
          config_fail("model.embeddings", "rows must be non-empty arrays of numbers");
        if (dim == 0) dim = row.size();
        if (row.size() != dim)
          config_fail("model.embeddings", "rows must all have the same length");
      }
      Matrix e(alphabet.size(), static_cast<int>(dim));
      for (int x = 0; x < alphabet.size(); ++x) {
        for (int j = 0; j < static_cast<int>(dim); ++j) {
          if (!emb[x][j].is_number())
            config_fail("model.embeddings", "entries must be numbers");
          e(x, j) = emb[x][j].get<double>();
        }
      }
      return quadratic_embedding_model(alphabet, std::move(e));
    }
    if (kind_name == "categorical-logloss") {
      if (model_spec.contains("embeddings"))
        config_fail("model.embeddings", "not accepted for categorical-logloss");
      return categorical_logloss_model(alphabet);
    }
    config_fail("model.kind",
                "unknown kind (expected quadratic-embedding or categorical-logloss)");
  }();

  // --- nodes ---------------------------------------------------------------
  const Json& nodes = detail::require_field(doc, "", "nodes");
  if (!nodes.is_object()) config_fail("nodes", "must be an object");
  detail::require_known_keys(nodes, "nodes", {"n0", "helpers"});
  NodeProfile profile;
  profile.n0 = detail::positive_integer(detail::require_field(nodes, "nodes", "n0"),
                                        "nodes.n0");
  const Json& helpers = detail::require_field(nodes, "nodes", "helpers");
  if (!helpers.is_array()) config_fail("nodes.helpers", "must be an array");
  for (const auto& h : helpers)
    profile.helpers.push_back(detail::positive_integer(h, "nodes.helpers"));
  if (profile.k() + 1 >= static_cast<int>(kStreamStride))
    config_fail("nodes.helpers", "too many helpers");

  if (doc.contains("m"))
    profile.m = static_cast<int>(detail::positive_integer(doc["m"], "m"));

  // --- solver --------------------------------------------------------------
  double tol = kDefaultSolverTol;
  int max_iters = kDefaultSolverMaxIters;
  double pinv_tol = kDefaultPinvTol;
  if (doc.contains("solver")) {
    const Json& solver = doc["solver"];
    if (!solver.is_object()) config_fail("solver", "must be an object");
    detail::require_known_keys(solver, "solver",
                               {"tolerance", "max_iters", "pinv_tolerance"});
    if (solver.contains("tolerance"))
      tol = detail::positive_real(solver["tolerance"], "solver.tolerance");
    if (solver.contains("max_iters"))
      max_iters = static_cast<int>(
          detail::positive_integer(solver["max_iters"], "solver.max_iters"));
    if (solver.contains("pinv_tolerance"))
      pinv_tol = detail::positive_real(solver["pinv_tolerance"], "solver.pinv_tolerance");
  }

  // --- experiment ----------------------------------------------------------
  std::int64_t trials = 1;
  RandomSeed seed;
  ThetaMethod theta_method = ThetaMethod::erm_resolve;
  PlanSource plan_source = PlanSource::algorithm;
  std::vector<std::vector<int>> explicit_sets;
  bool as_printed = false;
  if (doc.contains("experiment")) {
    const Json& exp = doc["experiment"];
    if (!exp.is_object()) config_fail("experiment", "must be an object");
    detail::require_known_keys(exp, "experiment",
                               {"trials", "seed", "stream", "theta_method", "plan_source",
                                "plan", "as_printed_estimator"});
    if (exp.contains("trials"))
      trials = detail::positive_integer(exp["trials"], "experiment.trials");
    if (exp.contains("seed"))
      seed.seed = detail::unsigned_integer(exp["seed"], "experiment.seed");
    if (exp.contains("stream"))
      seed.stream = detail::unsigned_integer(exp["stream"], "experiment.stream");
    if (exp.contains("theta_method")) {
      const Json& tm = exp["theta_method"];
      if (!tm.is_string()) config_fail("experiment.theta_method", "must be a string");
      const std::string name = tm.get<std::string>();
      if (name == "perturbation") theta_method = ThetaMethod::perturbation;
      else if (name == "erm-resolve") theta_method = ThetaMethod::erm_resolve;
      else config_fail("experiment.theta_method",
                       "unknown method (expected perturbation or erm-resolve)");
    }
    if (exp.contains("plan_source")) {
      const Json& ps = exp["plan_source"];
      if (!ps.is_string()) config_fail("experiment.plan_source", "must be a string");
      const std::string name = ps.get<std::string>();
      if (name == "algorithm") plan_source = PlanSource::algorithm;
      else if (name == "brute-force") plan_source = PlanSource::brute_force;
      else if (name == "explicit") plan_source = PlanSource::explicit_plan;
      else if (name == "baseline") plan_source = PlanSource::baseline;
      else config_fail("experiment.plan_source",
                       "unknown source (expected algorithm, brute-force, explicit, or baseline)");
    }
    if (plan_source == PlanSource::explicit_plan) {
      const Json& plan = detail::require_field(exp, "experiment", "plan");
      if (!plan.is_array() || plan.size() != static_cast<std::size_t>(profile.k()))
        config_fail("experiment.plan", "must be an array with one index set per helper");
      for (const auto& set : plan) {
        if (!set.is_array() || set.size() != static_cast<std::size_t>(profile.m))
          config_fail("experiment.plan", "each set must list exactly m eigen indices");
        std::vector<int> zero_based;
        for (const auto& idx : set) {
          const std::int64_t one_based = detail::positive_integer(idx, "experiment.plan");
          if (one_based > alphabet.size())
            config_fail("experiment.plan", "eigen index exceeds the alphabet size");
          zero_based.push_back(static_cast<int>(one_based - 1));
        }
        for (std::size_t i = 1; i < zero_based.size(); ++i)
          if (zero_based[i] <= zero_based[i - 1])
            config_fail("experiment.plan", "indices within a set must be strictly ascending");
        explicit_sets.push_back(std::move(zero_based));
      }
    } else if (exp.contains("plan")) {
      config_fail("experiment.plan", "only accepted when plan_source is explicit");
    }
    if (exp.contains("as_printed_estimator")) {
      if (!exp["as_printed_estimator"].is_boolean())
        config_fail("experiment.as_printed_estimator", "must be a boolean");
      as_printed = exp["as_printed_estimator"].get<bool>();
    }
  }

  if (overrides.trials) {
    if (*overrides.trials < 1) throw ConfigError("--trials must be a positive integer");
    trials = *overrides.trials;
  }
  if (overrides.seed) seed.seed = *overrides.seed;

  // --- effective config ----------------------------------------------------
  Json effective;
  effective["schema_version"] = schema_version;
  effective["probabilities"] = std::vector<double>(mass.data(), mass.data() + mass.size());
  if (!labels.empty()) effective["labels"] = labels;
  effective["model"]["kind"] = kind_name;
  if (kind_name == "quadratic-embedding") {
    const Json& emb = model_spec["embeddings"];
    Json rows = Json::array();
    for (const auto& row : emb) {
      std::vector<double> r;
      for (const auto& v : row) r.push_back(v.get<double>());
      rows.push_back(r);
    }
    effective["model"]["embeddings"] = rows;
  }
  effective["nodes"]["n0"] = profile.n0;
  effective["nodes"]["helpers"] = profile.helpers;
  effective["m"] = profile.m;
  effective["solver"]["tolerance"] = tol;
  effective["solver"]["max_iters"] = max_iters;
  effective["solver"]["pinv_tolerance"] = pinv_tol;
  effective["experiment"]["trials"] = trials;
  effective["experiment"]["seed"] = seed.seed;
  effective["experiment"]["stream"] = seed.stream;
  effective["experiment"]["theta_method"] = to_string(theta_method);
  effective["experiment"]["plan_source"] = to_string(plan_source);
  if (plan_source == PlanSource::explicit_plan) {
    Json sets = Json::array();
    for (const auto& set : explicit_sets) {
      std::vector<int> one_based;
      for (int j : set) one_based.push_back(j + 1);
      sets.push_back(one_based);
    }
    effective["experiment"]["plan"] = sets;
  }
  effective["experiment"]["as_printed_estimator"] = as_printed;

  std::string hash = config_hash_string(effective);
  return ParsedConfig{schema_version, std::move(effective), hash,
                      ExperimentConfig{std::move(model),
                                       std::move(p),
                                       std::move(profile),
                                       plan_source,
                                       std::move(explicit_sets),
                                       trials,
                                       theta_method,
                                       seed,
                                       as_printed,
                                       tol,
                                       max_iters,
                                       pinv_tol,
                                       hash}};
}

inline ParsedConfig load_config(const std::string& path,
                                const ConfigOverrides& overrides = {}) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  Json doc;
  try {
    doc = Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw ConfigError("cannot parse config file " + path + ": " + e.what());
  }
  return parse_config(doc, overrides);
}

}  // namespace epr
