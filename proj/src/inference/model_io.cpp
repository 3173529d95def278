#include <cmath>
#include <string>

#include "granulab/core/error.hpp"
#include "granulab/inference/inference.hpp"

namespace granulab::inference {

namespace {

constexpr const char* kFormat = "mdrff-model";
constexpr int kVersion = 1;

Json to_array(const std::vector<double>& v) {
  Json a = Json::array();
  for (double x : v) a.push_back(x);
  return a;
}

std::vector<double> number_array(const Json& j, const char* key) {
  const Json& v = require_key(j, key);
  if (!v.is_array()) throw DataError(std::string("field '") + key + "' must be an array");
  std::vector<double> out;
  out.reserve(v.size());
  for (const auto& x : v) {
    if (!x.is_number()) throw DataError(std::string("field '") + key + "' must hold numbers");
    out.push_back(x.get<double>());
  }
  return out;
}

std::vector<std::string> string_array(const Json& j, const char* key) {
  const Json& v = require_key(j, key);
  if (!v.is_array()) throw DataError(std::string("field '") + key + "' must be an array");
  std::vector<std::string> out;
  for (const auto& x : v) {
    if (!x.is_string()) throw DataError(std::string("field '") + key + "' must hold strings");
    out.push_back(x.get<std::string>());
  }
  return out;
}

}  // namespace

Json model_to_json(const MdrffModel& model) {
  model.validate();
  Json j;
  j["format"] = kFormat;
  j["version"] = kVersion;
  j["component_count"] = model.component_count;
  j["param_dim"] = model.param_dim;
  Json rff;
  rff["feature_count"] = model.rff.feature_count;
  rff["smoothness"] = model.rff.smoothness;
  rff["lengthscales"] = to_array(model.rff.lengthscales);
  Json omega = Json::array();
  for (const auto& row : model.rff.omega) omega.push_back(to_array(row));
  rff["omega"] = std::move(omega);
  rff["phase"] = to_array(model.rff.phase);
  rff["seed"] = model.rff.seed;
  j["rff"] = std::move(rff);
  j["stat_mean"] = to_array(model.stat_mean);
  j["stat_std"] = to_array(model.stat_std);
  Json prior;
  prior["names"] = model.prior.names;
  prior["lo"] = to_array(model.prior.lo);
  prior["hi"] = to_array(model.prior.hi);
  j["prior"] = std::move(prior);
  j["weights"] = to_array(model.weights);
  j["biases"] = to_array(model.biases);
  Json diag;
  diag["final_loss"] = model.diagnostics.final_loss;
  diag["epochs"] = model.diagnostics.epochs;
  diag["early_stopped"] = model.diagnostics.early_stopped;
  j["diagnostics"] = std::move(diag);
  j["provenance"] = model.provenance;
  return j;
}

MdrffModel model_from_json(const Json& j) {
  if (require_string(j, "format") != kFormat) throw DataError("not a mixture model document");
  if (require_integer(j, "version") != kVersion)
    throw DataError("unsupported model document version");

  MdrffModel model;
  model.component_count = static_cast<std::size_t>(require_integer(j, "component_count"));
  model.param_dim = static_cast<std::size_t>(require_integer(j, "param_dim"));

  const Json& rff = require_key(j, "rff");
  model.rff.feature_count = static_cast<std::size_t>(require_integer(rff, "feature_count"));
  model.rff.smoothness = require_number(rff, "smoothness");
  model.rff.lengthscales = number_array(rff, "lengthscales");
  const Json& omega = require_key(rff, "omega");
  if (!omega.is_array()) throw DataError("field 'omega' must be an array");
  for (const auto& row : omega) {
    if (!row.is_array()) throw DataError("field 'omega' must hold arrays");
    std::vector<double> r;
    r.reserve(row.size());
    for (const auto& x : row) {
      if (!x.is_number()) throw DataError("field 'omega' must hold numbers");
      r.push_back(x.get<double>());
    }
    model.rff.omega.push_back(std::move(r));
  }
  model.rff.phase = number_array(rff, "phase");
  model.rff.seed = static_cast<std::uint64_t>(require_integer(rff, "seed"));

  model.stat_mean = number_array(j, "stat_mean");
  model.stat_std = number_array(j, "stat_std");
  const Json& prior = require_key(j, "prior");
  model.prior.names = string_array(prior, "names");
  model.prior.lo = number_array(prior, "lo");
  model.prior.hi = number_array(prior, "hi");
  model.weights = number_array(j, "weights");
  model.biases = number_array(j, "biases");
  const Json& diag = require_key(j, "diagnostics");
  model.diagnostics.final_loss = require_number(diag, "final_loss");
  model.diagnostics.epochs = static_cast<int>(require_integer(diag, "epochs"));
  model.diagnostics.early_stopped = require_key(diag, "early_stopped").get<bool>();
  if (j.contains("provenance")) model.provenance = j["provenance"];

  try {
    model.validate();
  } catch (const ValidationError& err) {
    throw DataError(std::string("inconsistent model document: ") + err.what());
  }
  for (double x : model.weights)
    if (!std::isfinite(x)) throw DataError("model document contains non-finite weights");
  for (double x : model.biases)
    if (!std::isfinite(x)) throw DataError("model document contains non-finite biases");
  return model;
}

void save_model(const std::filesystem::path& path, const MdrffModel& model) {
  save_json(path, model_to_json(model));
}

MdrffModel load_model(const std::filesystem::path& path) {
  return model_from_json(load_json(path));
}

}  // namespace granulab::inference
