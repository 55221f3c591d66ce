#pragma once

#include "bipmixed/model.hpp"
#include "bipmixed/rng.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <span>
#include <unordered_map>
#include <vector>

namespace bipmixed {

/// Everything the factor-model updates need from a view given U:
/// Uᵀ X (r x p) and the squared column norms of X.
struct ViewStatistics {
  Eigen::MatrixXd cross;
  Eigen::VectorXd sq_norm;
  int n = 0;
};

ViewStatistics view_statistics(const Eigen::MatrixXd& U, const Eigen::MatrixXd& x);

/// Cholesky factors of (U_Sᵀ U_S + τ⁻² I) keyed by the active component set S.
/// Built for one U; construct a new cache whenever U changes. Features that
/// share an active set share one factorization.
class MarginalLikelihoodCache {
 public:
  struct Factor {
    std::vector<int> index;
    Eigen::LLT<Eigen::MatrixXd> llt;
    /// log det(I + τ² U_Sᵀ U_S)
    double log_det = 0.0;
  };

  MarginalLikelihoodCache(const Eigen::MatrixXd& U, double tau2);

  const Factor& factor(std::uint64_t mask);

  /// log N(x_j; 0, σ²(τ² U_S U_Sᵀ + I_n)) using the r-dimensional identity.
  double loglik(const ViewStatistics& stats, int j, std::uint64_t mask, double feat_var);

  const Eigen::MatrixXd& gram() const { return gram_; }
  double tau2() const { return tau2_; }
  int n() const { return n_; }
  std::size_t size() const { return factors_.size(); }

 private:
  Eigen::MatrixXd gram_;
  double tau2_;
  int n_;
  std::unordered_map<std::uint64_t, Factor> factors_;
};

/// Log marginal density of one feature column with its loadings integrated
/// out: x ~ N(0, σ_j² (τ² U_A U_Aᵀ + I_n)), A = {l : active(l) = 1}.
double marginal_loglik_feature(const Eigen::VectorXd& x, const Eigen::MatrixXd& U, const Mask& active,
                               double feat_var, double tau2);

struct SelectionPrior {
  double q_eta = 0.05;
  double q_gamma = 0.5;
};

struct SelectionSweepResult {
  /// Per-feature marginal log-likelihood maintained incrementally during the sweep.
  Eigen::VectorXd loglik;
  int proposals = 0;
  int accepted = 0;
};

/// One Metropolis-Hastings sweep over (γ, H) of a view with loadings
/// integrated out. For each component l, in order:
///   1. flip γ_l; switching on proposes η_l· iid Bernoulli(q_eta), switching
///      off sets η_l· = 0;
///   2. if γ_l = 1, flip each η_lj in turn;
///   3. if γ_l = 1, swap one active and one inactive η_lj.
/// Every move is reversible with respect to p(γ, H | U, X, σ²), so the sweep
/// leaves it invariant. With `outcome_view` the single feature's η equals γ
/// and only move 1 applies. Loadings of switched-off entries are zeroed.
SelectionSweepResult mh_update_selection(ViewState& view, const ViewStatistics& stats,
                                         MarginalLikelihoodCache& cache, const SelectionPrior& prior,
                                         bool outcome_view, Rng& rng);

/// Conjugate posterior of the active loadings of feature j:
/// N(Σ_a U_Sᵀ x_j, σ_j² Σ_a), Σ_a = (U_Sᵀ U_S + τ⁻² I)⁻¹.
struct LoadingConditional {
  std::vector<int> index;
  Eigen::VectorXd mean;
  Eigen::MatrixXd cov;
};

LoadingConditional loading_conditional(const ViewState& view, const ViewStatistics& stats,
                                       MarginalLikelihoodCache& cache, int j);

void gibbs_update_loadings(ViewState& view, const ViewStatistics& stats, MarginalLikelihoodCache& cache, Rng& rng);

/// IG(a + n/2 + |S|/2, b + ½‖x_j − U a_j‖² + ½ a_Sᵀ a_S / τ²).
InverseGammaPrior feature_variance_conditional(const ViewState& view, const ViewStatistics& stats,
                                               const Eigen::MatrixXd& gram, double tau2,
                                               const InverseGammaPrior& prior, int j);

void gibbs_update_feature_variances(ViewState& view, const ViewStatistics& stats, const Eigen::MatrixXd& gram,
                                    double tau2, const InverseGammaPrior& prior, Rng& rng);

/// A view's contribution to the conditional of U: data (n x p), loadings
/// (r x p) and per-feature variances (p).
struct LatentBlock {
  const Eigen::MatrixXd* data;
  const Eigen::MatrixXd* loadings;
  const Eigen::VectorXd* feat_var;
};

/// Rows of U are independent given everything else, sharing the covariance
/// Σ_U = (Σ_m A Ψ⁻¹ Aᵀ + I)⁻¹; row i has mean Σ_U Σ_m A Ψ⁻¹ x_i.
struct LatentConditional {
  Eigen::MatrixXd mean;  // n x r
  Eigen::MatrixXd cov;   // r x r
};

LatentConditional latent_conditional(int n, int r, std::span<const LatentBlock> blocks);

void gibbs_update_latent(Eigen::MatrixXd& U, std::span<const LatentBlock> blocks, Rng& rng);

}  // namespace bipmixed
