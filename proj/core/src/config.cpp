#include "scribblefill/config.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"
#include "scribblefill/error.hpp"

namespace scribblefill {

namespace {

using nlohmann::json;

void require(bool ok, const std::string& field, const std::string& what) {
  if (!ok) throw ValidationError("config: " + field + " " + what);
}

template <typename T>
T get_number(const json& j, const std::string& key) {
  const json& v = j.at(key);
  if (!v.is_number()) throw ValidationError("config: " + key + " must be a number");
  if constexpr (std::is_integral_v<T>) {
    if (!v.is_number_integer() && !v.is_number_unsigned()) {
      throw ValidationError("config: " + key + " must be an integer");
    }
  }
  return v.get<T>();
}

}  // namespace

void EnrichConfig::validate() const {
  require(std::isfinite(h1) && h1 > 0, "h1", "must be positive");
  require(std::isfinite(h2) && h2 > 0, "h2", "must be positive");
  require(K >= 1 && K <= 64, "K", "must be in [1, 64]");
  require(std::isfinite(lambda) && lambda > 0, "lambda", "must be positive");
  require(tau >= 8 && tau <= 256, "tau", "must be in [8, 256]");
  require(itq_iters >= 0, "itq_iters", "must be non-negative");
  require(itq_sample >= 1, "itq_sample", "must be positive");
  require(pca_dims >= 1, "pca_dims", "must be positive");
  require(window_radius >= 1, "window_radius", "must be positive");
  require(std::isfinite(grid_edge_weight) && grid_edge_weight > 0 && grid_edge_weight <= 1,
          "grid_edge_weight", "must be in (0, 1]");
  require(std::isfinite(threshold) && threshold >= 0 && threshold <= 1, "threshold",
          "must be in [0, 1]");
  require(std::isfinite(scale) && scale > 0 && scale <= 1, "scale", "must be in (0, 1]");
  require(std::isfinite(tol) && tol > 0, "tol", "must be positive");
  require(maxiter >= 1, "maxiter", "must be positive");
  for (double g : gweights) {
    require(std::isfinite(g) && g >= 0, "gweights", "entries must be non-negative");
  }
}

EnrichConfig parse_config(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ValidationError(std::string("config: invalid JSON: ") + e.what());
  }
  if (!j.is_object()) throw ValidationError("config: top level must be a JSON object");

  static const std::set<std::string> kKnown = {
      "h1",        "h2",           "K",       "lambda",        "tau",
      "itq_iters", "itq_sample",   "seed",    "pca_dims",      "window_radius",
      "grid_edge_weight", "threshold", "scale", "tol",         "maxiter",
      "gweights",  "laplacian"};
  for (const auto& [key, _] : j.items()) {
    if (!kKnown.count(key)) throw ValidationError("config: unknown key \"" + key + "\"");
  }

  EnrichConfig cfg;
  if (j.contains("h1")) cfg.h1 = get_number<double>(j, "h1");
  if (j.contains("h2")) cfg.h2 = get_number<double>(j, "h2");
  if (j.contains("K")) cfg.K = get_number<int>(j, "K");
  if (j.contains("lambda")) cfg.lambda = get_number<double>(j, "lambda");
  if (j.contains("tau")) cfg.tau = get_number<int>(j, "tau");
  if (j.contains("itq_iters")) cfg.itq_iters = get_number<int>(j, "itq_iters");
  if (j.contains("itq_sample")) cfg.itq_sample = get_number<int>(j, "itq_sample");
  if (j.contains("seed")) {
    if (!j["seed"].is_number_unsigned() && !(j["seed"].is_number_integer() && j["seed"].get<std::int64_t>() >= 0)) {
      throw ValidationError("config: seed must be a non-negative integer");
    }
    cfg.seed = j["seed"].get<std::uint64_t>();
  }
  if (j.contains("pca_dims")) cfg.pca_dims = get_number<int>(j, "pca_dims");
  if (j.contains("window_radius")) cfg.window_radius = get_number<int>(j, "window_radius");
  if (j.contains("grid_edge_weight")) cfg.grid_edge_weight = get_number<double>(j, "grid_edge_weight");
  if (j.contains("threshold")) cfg.threshold = get_number<double>(j, "threshold");
  if (j.contains("scale")) cfg.scale = get_number<double>(j, "scale");
  if (j.contains("tol")) cfg.tol = get_number<double>(j, "tol");
  if (j.contains("maxiter")) cfg.maxiter = get_number<int>(j, "maxiter");
  if (j.contains("gweights")) {
    if (!j["gweights"].is_array()) throw ValidationError("config: gweights must be an array");
    cfg.gweights.clear();
    for (const auto& v : j["gweights"]) {
      if (!v.is_number()) throw ValidationError("config: gweights entries must be numbers");
      cfg.gweights.push_back(v.get<double>());
    }
  }
  if (j.contains("laplacian")) {
    const auto& v = j["laplacian"];
    if (v == "plain") {
      cfg.laplacian = LaplacianKind::kPlain;
    } else if (v == "clustering") {
      cfg.laplacian = LaplacianKind::kClustering;
    } else {
      throw ValidationError("config: laplacian must be \"plain\" or \"clustering\"");
    }
  }
  cfg.validate();
  return cfg;
}

EnrichConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string config_to_json(const EnrichConfig& cfg) {
  json j = {
      {"h1", cfg.h1},
      {"h2", cfg.h2},
      {"K", cfg.K},
      {"lambda", cfg.lambda},
      {"tau", cfg.tau},
      {"itq_iters", cfg.itq_iters},
      {"itq_sample", cfg.itq_sample},
      {"seed", cfg.seed},
      {"pca_dims", cfg.pca_dims},
      {"window_radius", cfg.window_radius},
      {"grid_edge_weight", cfg.grid_edge_weight},
      {"threshold", cfg.threshold},
      {"scale", cfg.scale},
      {"tol", cfg.tol},
      {"maxiter", cfg.maxiter},
      {"gweights", cfg.gweights},
      {"laplacian", cfg.laplacian == LaplacianKind::kPlain ? "plain" : "clustering"},
  };
  return j.dump(2);
}

}  // namespace scribblefill
