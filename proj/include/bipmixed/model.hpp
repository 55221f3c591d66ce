#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <string>
#include <vector>

namespace bipmixed {

using Mask = Eigen::Array<std::uint8_t, Eigen::Dynamic, 1>;
using MaskMatrix = Eigen::Array<std::uint8_t, Eigen::Dynamic, Eigen::Dynamic>;

struct InverseGammaPrior {
  double shape = 0.01;
  double scale = 0.01;
};

/// Which closed forms the outcome block uses for β, ξ and σ_ξ².
/// `PriorConsistent` samples the exact full conditionals of the model;
/// `Legacy` keeps an older variant for comparison (β precision with
/// σ⁻²I, ξ mean without the μ/σ_ξ² term, σ_ξ² scale from Σ ξ_s²).
enum class OutcomeFormulas { PriorConsistent, Legacy };

struct Hyperparameters {
  int r = 4;
  double q_eta = 0.05;
  double q_gamma = 0.5;
  double tau2 = 1.0;
  double sigma_beta2 = 100.0;
  double sigma_mu2 = 100.0;
  InverseGammaPrior ig_xi;
  InverseGammaPrior ig_theta;
  InverseGammaPrior ig_sigma;
  InverseGammaPrior ig_feature;

  int n_iter = 5000;
  int n_burn = 2500;
  int thin = 1;
  std::uint64_t seed = 1;
  int max_bma_models = 50;

  bool random_effects_enabled = true;
  bool covariates_in_outcome = true;
  bool standardize = true;
  OutcomeFormulas formulas = OutcomeFormulas::PriorConsistent;

  /// Throws ConfigError naming the offending field.
  void validate() const;
};

/// Selection and loading state of one view. View 0 is the outcome: it has a
/// single "feature", its H row equals γ, its loadings are α and its feature
/// variance is σ².
struct ViewState {
  Mask gamma;           // r
  MaskMatrix eta;       // r x p
  Eigen::MatrixXd loadings;  // r x p
  Eigen::VectorXd feat_var;  // p

  int rank() const { return static_cast<int>(gamma.size()); }
  int num_features() const { return static_cast<int>(eta.cols()); }

  /// Bitmask of components l with γ_l η_lj = 1.
  std::uint64_t active_mask(int j) const;
  int num_active(int j) const;

  static ViewState empty(int r, int p);
};

/// One MCMC iterate.
struct ChainState {
  Eigen::MatrixXd U;              // n x r
  std::vector<ViewState> views;   // 0 = outcome, 1..M = data views
  Eigen::VectorXd beta;           // p_beta
  Eigen::VectorXd theta;          // per family
  Eigen::VectorXd xi;             // per site
  double mu = 0.0;
  double sigma_xi2 = 1.0;
  Eigen::VectorXd sigma_theta2;   // per site

  double sigma2() const { return views[0].feat_var(0); }
  void set_sigma2(double v) { views[0].feat_var(0) = v; }
  Eigen::VectorXd alpha() const { return views[0].loadings.col(0); }
  int rank() const { return static_cast<int>(U.cols()); }
};

/// Spike consistency: nonzero loadings only where γ_l η_lj = 1, and the
/// outcome view's η column equals γ.
bool spike_consistent(const ChainState& state);
bool variances_positive(const ChainState& state);

}  // namespace bipmixed
