#pragma once

#include "bipmixed/data.hpp"
#include "bipmixed/model.hpp"
#include "bipmixed/prediction.hpp"

#include <Eigen/Dense>

namespace bipmixed {

/// The same sampler with random effects disabled (θ ≡ 0, ξ ≡ μ).
FittedModel fit_bip(const MultiViewDataset& train, Hyperparameters hyper, const FitOptions& options = {});

struct PrincipalComponents {
  Eigen::MatrixXd directions;  // P x k, orthonormal columns
  Eigen::MatrixXd scores;      // n x k
  Eigen::VectorXd variances;   // k leading eigenvalues of the sample covariance
};

/// Top-k principal directions of a column-centered matrix. Each direction is
/// signed so that its largest-magnitude entry is positive.
PrincipalComponents principal_components(const Eigen::MatrixXd& x, int k);

struct Pca2StepOptions {
  int components = 4;
  /// Family intercepts around a single grand mean instead of site means.
  bool family_only = false;
};

/// PCA of the standardized, concatenated views followed by a random-intercept
/// model on the scores. The mixed model is fitted with the outcome Gibbs block
/// under vague priors; `hyper` supplies the schedule, seed and variance priors.
FittedModel fit_pca2step(const MultiViewDataset& train, Hyperparameters hyper, const Pca2StepOptions& options = {});

}  // namespace bipmixed
