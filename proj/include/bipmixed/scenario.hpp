#pragma once

#include "bipmixed/baselines.hpp"
#include "bipmixed/metrics.hpp"
#include "bipmixed/model.hpp"
#include "bipmixed/simulation.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace bipmixed {

struct ScenarioOptions {
  int replicates = 20;
  std::vector<Method> methods = {Method::BIP, Method::BIPmixed, Method::PCA2Step};
  /// MCMC schedule and priors; the seed is replaced per replicate.
  Hyperparameters hyper;
  FitOptions fit;
  Pca2StepOptions pca;
  ImportanceRule importance = ImportanceRule::MaxOverComponents;
  int workers = 1;
  /// When set, each finished replicate is written to `<dir>/replicate_<k>.csv`.
  std::optional<std::filesystem::path> out_dir;
};

struct ScenarioRow {
  int scenario = 0;
  MetricsReport metrics;
};

struct ScenarioReport {
  std::vector<ScenarioRow> rows;  // replicate-major, methods in option order
};

/// Seeds: replicate k uses substream k + 1 of `spec.seed` for its data and
/// substream 1 of that for every method's chain, so methods are paired.
ScenarioReport run_scenario(const ScenarioSpec& spec, const ScenarioOptions& options);

/// Scores one fitted model on a simulated test set.
MetricsReport evaluate_fit(const FittedModel& fitted, const SimulatedData& data, ImportanceRule rule);

/// Columns scenario, method, replicate, MSE, VarYhat, FPR, FNR, AUC.
std::string report_csv(const ScenarioReport& report);
/// Columns scenario, method, replicate, view, FPR, FNR, AUC.
std::string per_view_csv(const ScenarioReport& report);
/// Mean and SD over replicates per method; `sd_defined` is 0 with one replicate.
std::string summary_csv(const ScenarioReport& report);

}  // namespace bipmixed
