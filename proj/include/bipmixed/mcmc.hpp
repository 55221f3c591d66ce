#pragma once

#include "bipmixed/data.hpp"
#include "bipmixed/model.hpp"
#include "bipmixed/rng.hpp"
#include "bipmixed/sampler_outcome.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <string>
#include <vector>

namespace bipmixed {

struct IntervalSummary {
  double mean = 0.0;
  double lower = 0.0;  // 2.5%
  double upper = 0.0;  // 97.5%
};

/// (γ, H) of one view.
struct ViewSelection {
  Mask gamma;
  MaskMatrix eta;
};

/// A visited selection configuration across views 0..M.
struct RegisteredModel {
  std::uint64_t hash = 0;
  double frequency = 0.0;
  std::vector<ViewSelection> selection;
};

struct PosteriorSummary {
  std::vector<Eigen::MatrixXd> mpp_eta;    // views 0..M, r x p_m (view 0 is r x 1)
  std::vector<Eigen::VectorXd> mpp_gamma;  // views 0..M
  Eigen::MatrixXd U_bar;
  std::vector<Eigen::VectorXd> feat_var_hat;  // views 0..M; view 0 holds σ²
  Eigen::VectorXd beta_hat;
  Eigen::VectorXd theta_hat;
  Eigen::VectorXd xi_hat;
  double mu_hat = 0.0;
  IntervalSummary sigma2;
  IntervalSummary sigma_xi2;
  std::vector<IntervalSummary> sigma_theta2;
  /// Summary of the per-iteration average of σ_θs² over sites.
  IntervalSummary sigma_theta2_site_mean;
  /// Sorted by frequency (descending), truncated to max_bma_models.
  std::vector<RegisteredModel> registry;
  int n_kept = 0;
  int n_distinct_models = 0;
};

/// Posterior mean and equal-tailed 95% interval of a scalar trace.
IntervalSummary summarize_trace(std::vector<double> draws);

/// Concatenated (γ, H) bitstring over all views; the model identity.
std::string selection_key(const std::vector<ViewState>& views);
std::string selection_key(const std::vector<ViewSelection>& selection);
std::uint64_t fnv1a(const std::string& s);
std::vector<ViewSelection> decode_selection_key(const std::string& key, int r, const std::vector<int>& view_features);

/// One row of the optional per-iteration trace.
struct TraceRow {
  int iteration = 0;
  double mu = 0.0;
  double sigma2 = 0.0;
  double sigma_xi2 = 0.0;
  std::vector<int> active_per_view;
};

/// The full sampler. Holds views and outcome by reference; `data` must be
/// standardized already when that is wanted.
class Sampler {
 public:
  Sampler(const MultiViewDataset& data, const HierarchyIndex& hierarchy, const Hyperparameters& hyper);

  /// Initial values: σ_j² = 1, σ² = 1, σ_ξ² = 1, σ_θs² = 0.5, μ = mean(y),
  /// β by least squares, everything else from its prior.
  void initialize(Rng& rng);

  /// One sweep: selection (views 0..M), loadings, feature variances, U, outcome block.
  void step(Rng& rng);

  const ChainState& state() const { return state_; }
  ChainState& mutable_state() { return state_; }
  const OutcomeData& outcome_data() const { return outcome_; }

  /// Outcome view data ỹ = y − Wβ − Zθ (or − μ1 without random effects).
  Eigen::VectorXd outcome_view_data() const;

  /// Largest gap between the incrementally maintained selection
  /// log-likelihoods of the last sweep and a recomputation from scratch.
  double last_cache_coherence_gap() const { return cache_gap_; }
  void set_check_cache(bool on) { check_cache_ = on; }

 private:
  const MultiViewDataset& data_;
  const HierarchyIndex& hierarchy_;
  Hyperparameters hyper_;
  OutcomeData outcome_;
  ChainState state_;
  bool check_cache_ = false;
  double cache_gap_ = 0.0;
};

struct ChainResult {
  PosteriorSummary posterior;
  std::vector<TraceRow> trace;
};

/// Runs n_iter sweeps from a fresh initialization with `hyper.seed`, keeping
/// every thin-th post-burn-in state.
ChainResult run_chain(const MultiViewDataset& data, const HierarchyIndex& hierarchy, const Hyperparameters& hyper,
                      bool keep_trace = false);

/// Mixed model without latent factors, y = Wβ + Zθ + ε, sampled with the same
/// outcome block (or its random-effects-free variant). `W` may be null.
ChainResult run_outcome_chain(const Eigen::VectorXd& y, const Eigen::MatrixXd* W, const HierarchyIndex& hierarchy,
                              const Hyperparameters& hyper, bool keep_trace = false);

}  // namespace bipmixed
