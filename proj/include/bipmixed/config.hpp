#pragma once

#include "bipmixed/baselines.hpp"
#include "bipmixed/model.hpp"
#include "bipmixed/prediction.hpp"

#include <json.hpp>

#include <filesystem>
#include <string>

namespace bipmixed {

/// Flat object holding every Hyperparameters field.
nlohmann::json hyper_to_json(const Hyperparameters& h);
/// Reads the fields present in `j` over the defaults; `where` prefixes error paths.
Hyperparameters hyper_from_json(const nlohmann::json& j, const std::string& where);

/// Run configuration with sections {data, model, mcmc, prediction, output}.
/// Every field is optional; absent fields keep their defaults.
struct RunConfig {
  Method method = Method::BIPmixed;
  Hyperparameters hyper;
  FitOptions fit;
  Pca2StepOptions pca;
  PredictionOptions prediction;

  std::string train;        // manifest
  std::string test;         // manifest
  std::string fitted;       // archive
  std::string predictions;  // CSV
  std::string truth;        // truth JSON
  std::string out_dir = ".";
  int workers = 0;          // 0: environment or hardware default
};

RunConfig config_from_json(const nlohmann::json& j);
RunConfig load_config(const std::filesystem::path& path);

}  // namespace bipmixed
