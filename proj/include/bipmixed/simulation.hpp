#pragma once

#include "bipmixed/data.hpp"
#include "bipmixed/rng.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <vector>

namespace bipmixed {

/// Benchmark settings. `preset(id)` gives the three standard scenarios.
struct ScenarioSpec {
  int scenario_id = 1;
  int n_sites = 20;
  int families_per_site = 20;
  int individuals_per_family = 2;
  int n_views = 4;
  int p = 500;
  /// Leading features per view with nonzero loadings, in groups of ten.
  int n_signal = 100;
  int r = 4;
  double sigma_theta2 = 0.0;
  double sigma_xi2 = 0.0;
  double mu = 1.0;
  Eigen::VectorXd alpha = Eigen::Vector4d(1.0, 1.0, 1.0, 0.0);
  double sigma2 = 1.0;
  /// Optional N(0, 1) covariates entering y with coefficients `beta`.
  int n_covariates = 0;
  double beta = 0.5;
  std::uint64_t seed = 1;

  static ScenarioSpec preset(int id);
  int num_rows() const { return n_sites * families_per_site * individuals_per_family; }
  void validate() const;
};

/// Feature j is "main" when j % 10 == 0 inside the signal block.
inline constexpr int kBlockSize = 10;

/// Block-diagonal correlation: ten-feature blocks over the first `n_signal`
/// features (main/support 0.7, support/support 0.49), identity elsewhere.
Eigen::MatrixXd gen_intra_view_cov(int p, int n_signal = 100);

/// Per-view r x p loadings: signal columns uniform on ±[0.3, 0.5], main
/// features doubled, remaining columns zero.
std::vector<Eigen::MatrixXd> gen_loadings(Rng& rng, int n_views, int r, int p, int n_signal = 100);

struct SimulationTruth {
  Eigen::MatrixXd U_train;
  Eigen::MatrixXd U_test;
  std::vector<Eigen::MatrixXd> loadings;
  Eigen::VectorXd alpha;
  Eigen::VectorXd beta;
  Eigen::VectorXd xi;  // shared by train and test
  Eigen::VectorXd theta_train;
  Eigen::VectorXd theta_test;
  /// Per view, 1 for features with nonzero loadings.
  std::vector<std::vector<int>> importance;
  std::vector<int> main_features;
};

struct SimulatedData {
  MultiViewDataset train;
  MultiViewDataset test;
  SimulationTruth truth;
};

/// Train and test sets share sites and ξ; families are unique to each.
SimulatedData gen_dataset(const ScenarioSpec& spec, Rng& rng);
SimulatedData gen_dataset(const ScenarioSpec& spec);

}  // namespace bipmixed
