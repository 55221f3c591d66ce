#pragma once

#include "bipmixed/data.hpp"
#include "bipmixed/model.hpp"
#include "bipmixed/rng.hpp"

#include <Eigen/Dense>

#include <optional>

namespace bipmixed {

struct GaussianConditional {
  double mean = 0.0;
  double var = 1.0;
};

struct MultivariateConditional {
  Eigen::VectorXd mean;
  Eigen::MatrixXd cov;
};

// Grand mean: μ | ξ, σ_ξ² ~ N(m_μ, Σ_μ).
GaussianConditional mu_conditional(const Eigen::VectorXd& xi, double sigma_xi2, double sigma_mu2);
double gibbs_mu(const Eigen::VectorXd& xi, double sigma_xi2, double sigma_mu2, Rng& rng);

/// Intercept conditional when random effects are disabled: y − Wβ − Uα ~ N(μ1, σ² I).
GaussianConditional intercept_conditional(const Eigen::VectorXd& residual, double sigma2, double sigma_mu2);

/// `residual` is y − Zθ − Uα.
MultivariateConditional beta_conditional(const Eigen::MatrixXd& W, const Eigen::VectorXd& residual, double sigma2,
                                         double sigma_beta2, OutcomeFormulas formulas);
Eigen::VectorXd gibbs_beta(const Eigen::MatrixXd& W, const Eigen::VectorXd& y, const Eigen::VectorXd& theta_expanded,
                           const Eigen::VectorXd& U_alpha, double sigma2, double sigma_beta2,
                           OutcomeFormulas formulas, Rng& rng);

/// Site effect given the sum of its families' θ.
GaussianConditional xi_conditional(double theta_sum, int n_families, double sigma_xi2, double sigma_theta2_site,
                                   double mu, OutcomeFormulas formulas);
Eigen::VectorXd gibbs_xi(const Eigen::VectorXd& theta, const HierarchyIndex& hierarchy, double sigma_xi2,
                         const Eigen::VectorXd& sigma_theta2, double mu, OutcomeFormulas formulas, Rng& rng);

/// Family effect given the family mean of y − Wβ − Uα.
GaussianConditional theta_conditional(double residual_mean, int family_size, double xi_site,
                                      double sigma_theta2_site, double sigma2);
Eigen::VectorXd gibbs_theta(const Eigen::VectorXd& residual, const HierarchyIndex& hierarchy,
                            const Eigen::VectorXd& xi, const Eigen::VectorXd& sigma_theta2, double sigma2, Rng& rng);

InverseGammaPrior sigma_xi2_conditional(const Eigen::VectorXd& xi, double mu, const InverseGammaPrior& prior,
                                        OutcomeFormulas formulas);
InverseGammaPrior sigma_theta2_conditional(const Eigen::VectorXd& theta, const HierarchyIndex& hierarchy,
                                           const Eigen::VectorXd& xi, int site, const InverseGammaPrior& prior);

struct VarianceComponents {
  double sigma_xi2 = 1.0;
  Eigen::VectorXd sigma_theta2;
};

/// Draws every σ_θs² and then σ_ξ².
VarianceComponents gibbs_variance_components(const Eigen::VectorXd& xi, const Eigen::VectorXd& theta,
                                             const HierarchyIndex& hierarchy, double mu,
                                             const InverseGammaPrior& ig_xi, const InverseGammaPrior& ig_theta,
                                             OutcomeFormulas formulas, Rng& rng);

/// σ² with α integrated out: IG(a + N/2, b + ½ ỹᵀ(τ² U_A U_Aᵀ + I)⁻¹ ỹ),
/// ỹ = y − Wβ − Zθ. The quadratic form uses the r-dimensional Woodbury
/// identity, never an n x n inverse.
InverseGammaPrior sigma2_conditional(const Eigen::VectorXd& residual, const Eigen::MatrixXd& U_active, double tau2,
                                     const InverseGammaPrior& prior);
double gibbs_sigma2(const Eigen::VectorXd& y, const std::optional<Eigen::MatrixXd>& W, const Eigen::VectorXd& beta,
                    const Eigen::VectorXd& theta_expanded, const Eigen::MatrixXd& U_active, double tau2,
                    const InverseGammaPrior& prior, Rng& rng);

/// Columns of U with γ_l⁽⁰⁾ = 1.
Eigen::MatrixXd active_columns(const Eigen::MatrixXd& U, const Mask& gamma);

/// Outcome-side inputs of the sweep.
struct OutcomeData {
  const Eigen::VectorXd* y = nullptr;
  const Eigen::MatrixXd* W = nullptr;  // null when covariates are absent or excluded
  const HierarchyIndex* hierarchy = nullptr;
};

/// Caches Wβ, the random-intercept vector (Zθ, or μ1 when random effects are
/// off) and Uα, and forms the three residuals the outcome updates use.
class ResidualWorkspace {
 public:
  explicit ResidualWorkspace(const OutcomeData& data);

  void set_fixed(const Eigen::VectorXd& beta);
  void set_random(const Eigen::VectorXd& per_row);
  void set_latent(const Eigen::MatrixXd& U, const Eigen::VectorXd& alpha);

  Eigen::VectorXd without_random() const { return *data_.y - fixed_ - latent_; }  // y − Wβ − Uα
  Eigen::VectorXd without_latent() const { return *data_.y - fixed_ - random_; }  // y − Wβ − Zθ
  Eigen::VectorXd without_fixed() const { return *data_.y - random_ - latent_; }  // y − Zθ − Uα

  /// Largest absolute gap between the cached parts and a recomputation from `state`.
  double drift(const ChainState& state, bool random_effects) const;

  /// Family means of a per-row vector.
  Eigen::VectorXd family_means(const Eigen::VectorXd& per_row) const;

 private:
  OutcomeData data_;
  Eigen::VectorXd fixed_;
  Eigen::VectorXd random_;
  Eigen::VectorXd latent_;
};

/// Per-row intercept implied by the state: Zθ with random effects, μ1 without.
Eigen::VectorXd intercept_vector(const ChainState& state, const HierarchyIndex& hierarchy, bool random_effects);

/// Outcome Gibbs block in the fixed order β, θ, ξ, σ_θ², σ_ξ², μ, σ². With
/// random effects disabled only β, μ and σ² are drawn and θ ≡ 0, ξ ≡ μ.
void outcome_sweep(ChainState& state, const OutcomeData& data, const Hyperparameters& hyper, Rng& rng);

}  // namespace bipmixed
