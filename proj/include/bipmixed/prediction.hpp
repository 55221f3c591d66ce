#pragma once

#include "bipmixed/data.hpp"
#include "bipmixed/mcmc.hpp"
#include "bipmixed/model.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace bipmixed {

enum class Method { BIPmixed, BIP, PCA2Step };

std::string_view to_string(Method method);
/// Accepts "bipmixed", "bip", "pca2step" (case-insensitive).
Method parse_method(std::string_view name);

/// Point estimates of one registered selection configuration.
struct ModelLoadings {
  std::uint64_t hash = 0;
  /// Visit frequency renormalized over the retained models.
  double weight = 0.0;
  std::vector<Eigen::MatrixXd> views;  // data views 1..M, r x p_m
  Eigen::VectorXd alpha;               // r
};

struct FitOptions {
  /// Multiply the post-hoc loading estimates by σ̂_j². Off by default: the
  /// plain conjugate posterior mean is scale-consistent with Ū.
  bool loading_variance_factor = false;
  /// Append the covariates to the views instead of the outcome model.
  bool covariates_as_view = false;
  bool keep_trace = false;
};

struct FittedModel {
  Method method = Method::BIPmixed;
  Hyperparameters hyper;
  FitOptions options;
  Scaler scaler;
  std::vector<std::string> site_ids;
  std::vector<std::string> family_ids;
  std::vector<int> family_site;
  PosteriorSummary posterior;
  std::vector<ModelLoadings> models;
  /// Concatenated-feature principal directions (P x r); PCA2Step only.
  std::optional<Eigen::MatrixXd> pca_directions;
  /// All rows treated as one site (PCA2Step family-only variant).
  bool single_site = false;
  std::vector<TraceRow> trace;

  std::size_t num_views() const { return scaler.views.size(); }
};

/// Post-hoc loadings of one view under a fixed selection:
/// â_Sj = c_j (Ū_Sᵀ Ū_S + I)⁻¹ Ū_Sᵀ x_j with S_j = {l : γ_l η_lj = 1} and
/// c_j = σ̂_j² (or 1 when `variance_factor` is false). Inactive entries are 0.
Eigen::MatrixXd estimate_loadings(const Eigen::MatrixXd& U_bar, const ViewSelection& selection,
                                  const Eigen::MatrixXd& x, const Eigen::VectorXd& feat_var_hat,
                                  bool variance_factor);

/// û = (Â D Âᵀ + I)⁻¹ Â D x for one subject; Â stacks the view loadings
/// column-wise (r x P), D = diag(σ̂⁻²) and x is the concatenated feature row.
Eigen::VectorXd estimate_u_new(const Eigen::MatrixXd& loadings, const Eigen::VectorXd& feat_var_hat,
                               const Eigen::VectorXd& x_row);
/// Same for every row of `x` (n x P) at once.
Eigen::MatrixXd estimate_u_new_rows(const Eigen::MatrixXd& loadings, const Eigen::VectorXd& feat_var_hat,
                                    const Eigen::MatrixXd& x);

struct PredictionOptions {
  /// Draw θ of unseen families from N(ξ̂_s, σ̂_θs²) instead of using ξ̂_s.
  bool stochastic_unseen = false;
  std::uint64_t seed = 1;
};

/// Fits BIPmixed, or BIP when `hyper.random_effects_enabled` is false.
FittedModel fit_model(const MultiViewDataset& train, const Hyperparameters& hyper, const FitOptions& options = {});

/// Per-row intercept for new subjects: trained θ̂ for known families, ξ̂_s
/// otherwise, μ̂ without random effects. Throws UnknownSite.
Eigen::VectorXd predicted_intercepts(const FittedModel& fitted, const std::vector<std::string>& site_label,
                                     const std::vector<std::string>& family_label,
                                     const PredictionOptions& options = {});

/// ŷ under registered model `index` (0 = most visited).
Eigen::VectorXd predict_single_model(const FittedModel& fitted, std::size_t index, const MultiViewDataset& test,
                                     const PredictionOptions& options = {});

/// Frequency-weighted average over the retained models.
Eigen::VectorXd predict_bma(const FittedModel& fitted, const MultiViewDataset& test,
                            const PredictionOptions& options = {});

/// BMA for the Bayesian methods, the projected mixed model for PCA2Step.
Eigen::VectorXd predict(const FittedModel& fitted, const MultiViewDataset& test, const PredictionOptions& options = {});

/// Test views (and covariates, when they form a view) in training units,
/// concatenated column-wise.
Eigen::MatrixXd prepared_features(const FittedModel& fitted, const MultiViewDataset& test);

}  // namespace bipmixed
