#include "bipmixed/mcmc.hpp"

#include "bipmixed/error.hpp"
#include "bipmixed/sampler_views.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>

namespace bipmixed {

IntervalSummary summarize_trace(std::vector<double> draws) {
  IntervalSummary s;
  if (draws.empty()) return s;
  double sum = 0.0;
  for (double d : draws) sum += d;
  s.mean = sum / static_cast<double>(draws.size());
  std::sort(draws.begin(), draws.end());
  auto quantile = [&](double q) {
    const double pos = q * static_cast<double>(draws.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(lo + 1, draws.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    return draws[lo] + frac * (draws[hi] - draws[lo]);
  };
  s.lower = quantile(0.025);
  s.upper = quantile(0.975);
  return s;
}

std::string selection_key(const std::vector<ViewState>& views) {
  std::string key;
  for (const auto& v : views) {
    for (int l = 0; l < v.rank(); ++l) key.push_back(v.gamma(l) ? '1' : '0');
    for (int j = 0; j < v.num_features(); ++j) {
      for (int l = 0; l < v.rank(); ++l) key.push_back(v.eta(l, j) ? '1' : '0');
    }
    key.push_back('|');
  }
  return key;
}

std::string selection_key(const std::vector<ViewSelection>& selection) {
  std::string key;
  for (const auto& v : selection) {
    for (Eigen::Index l = 0; l < v.gamma.size(); ++l) key.push_back(v.gamma(l) ? '1' : '0');
    for (Eigen::Index j = 0; j < v.eta.cols(); ++j) {
      for (Eigen::Index l = 0; l < v.eta.rows(); ++l) key.push_back(v.eta(l, j) ? '1' : '0');
    }
    key.push_back('|');
  }
  return key;
}

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::vector<ViewSelection> decode_selection_key(const std::string& key, int r, const std::vector<int>& view_features) {
  std::vector<ViewSelection> out;
  std::size_t pos = 0;
  for (int p : view_features) {
    const std::size_t need = static_cast<std::size_t>(r) * (1 + p) + 1;
    if (pos + need > key.size()) throw Error(ErrorKind::DimensionMismatch, "selection key is too short");
    ViewSelection sel{Mask::Zero(r), MaskMatrix::Zero(r, p)};
    for (int l = 0; l < r; ++l) sel.gamma(l) = key[pos++] == '1';
    for (int j = 0; j < p; ++j) {
      for (int l = 0; l < r; ++l) sel.eta(l, j) = key[pos++] == '1';
    }
    if (key[pos++] != '|') throw Error(ErrorKind::DimensionMismatch, "malformed selection key");
    out.push_back(std::move(sel));
  }
  return out;
}

namespace {

void initialize_outcome_block(ChainState& state, const OutcomeData& outcome, const Hyperparameters& hyper, Rng& rng) {
  const HierarchyIndex& h = *outcome.hierarchy;
  const int n_sites = h.num_sites();
  const int n_families = h.num_families();

  state.mu = outcome.y->mean();
  const Eigen::VectorXd centered = outcome.y->array() - state.mu;
  if (outcome.W) {
    const auto& W = *outcome.W;
    state.beta = (W.transpose() * W).ldlt().solve(W.transpose() * centered);
  } else {
    state.beta = Eigen::VectorXd::Zero(0);
  }

  state.sigma_xi2 = 1.0;
  state.sigma_theta2 = Eigen::VectorXd::Constant(n_sites, 0.5);
  state.xi.resize(n_sites);
  state.theta.resize(n_families);
  if (hyper.random_effects_enabled) {
    for (int s = 0; s < n_sites; ++s) state.xi(s) = rng.normal(state.mu, std::sqrt(state.sigma_xi2));
    for (int f = 0; f < n_families; ++f) {
      const int s = h.family(f).site;
      state.theta(f) = rng.normal(state.xi(s), std::sqrt(state.sigma_theta2(s)));
    }
  } else {
    state.xi.setConstant(state.mu);
    state.theta.setZero();
  }
}

}  // namespace

Sampler::Sampler(const MultiViewDataset& data, const HierarchyIndex& hierarchy, const Hyperparameters& hyper)
    : data_(data), hierarchy_(hierarchy), hyper_(hyper) {
  hyper_.validate();
  if (hierarchy.num_rows() != static_cast<int>(data.num_rows())) {
    throw Error(ErrorKind::DimensionMismatch, "hierarchy and dataset row counts differ");
  }
  outcome_.y = &data_.outcome;
  outcome_.W = (hyper_.covariates_in_outcome && data_.covariates) ? &*data_.covariates : nullptr;
  outcome_.hierarchy = &hierarchy_;
}

Eigen::VectorXd Sampler::outcome_view_data() const {
  Eigen::VectorXd y = data_.outcome - intercept_vector(state_, hierarchy_, hyper_.random_effects_enabled);
  if (outcome_.W) y -= (*outcome_.W) * state_.beta;
  return y;
}

void Sampler::initialize(Rng& rng) {
  const int n = static_cast<int>(data_.num_rows());
  const int r = hyper_.r;
  state_ = ChainState{};
  state_.U.resize(n, r);
  for (int i = 0; i < n; ++i) {
    for (int l = 0; l < r; ++l) state_.U(i, l) = rng.normal();
  }

  state_.views.clear();
  state_.views.push_back(ViewState::empty(r, 1));
  for (const auto& x : data_.views) state_.views.push_back(ViewState::empty(r, static_cast<int>(x.cols())));
  for (std::size_t m = 0; m < state_.views.size(); ++m) {
    auto& v = state_.views[m];
    for (int l = 0; l < r; ++l) {
      v.gamma(l) = rng.bernoulli(hyper_.q_gamma);
      for (int j = 0; j < v.num_features(); ++j) {
        v.eta(l, j) = v.gamma(l) && (m == 0 || rng.bernoulli(hyper_.q_eta));
        if (v.eta(l, j)) v.loadings(l, j) = rng.normal(0.0, std::sqrt(hyper_.tau2 * v.feat_var(j)));
      }
    }
  }

  initialize_outcome_block(state_, outcome_, hyper_, rng);
}

void Sampler::step(Rng& rng) {
  const SelectionPrior prior{hyper_.q_eta, hyper_.q_gamma};
  const std::size_t n_views = state_.views.size();

  const Eigen::MatrixXd y_tilde = outcome_view_data();
  MarginalLikelihoodCache cache(state_.U, hyper_.tau2);
  std::vector<ViewStatistics> stats;
  stats.reserve(n_views);
  stats.push_back(view_statistics(state_.U, y_tilde));
  for (const auto& x : data_.views) stats.push_back(view_statistics(state_.U, x));

  cache_gap_ = 0.0;
  for (std::size_t m = 0; m < n_views; ++m) {
    auto res = mh_update_selection(state_.views[m], stats[m], cache, prior, m == 0, rng);
    if (check_cache_) {
      for (int j = 0; j < state_.views[m].num_features(); ++j) {
        const double fresh = cache.loglik(stats[m], j, state_.views[m].active_mask(j), state_.views[m].feat_var(j));
        cache_gap_ = std::max(cache_gap_, std::abs(fresh - res.loglik(j)));
      }
    }
  }

  for (std::size_t m = 0; m < n_views; ++m) gibbs_update_loadings(state_.views[m], stats[m], cache, rng);
  for (std::size_t m = 1; m < n_views; ++m) {
    gibbs_update_feature_variances(state_.views[m], stats[m], cache.gram(), hyper_.tau2, hyper_.ig_feature, rng);
  }

  std::vector<LatentBlock> blocks;
  blocks.push_back({&y_tilde, &state_.views[0].loadings, &state_.views[0].feat_var});
  for (std::size_t m = 1; m < n_views; ++m) {
    blocks.push_back({&data_.views[m - 1], &state_.views[m].loadings, &state_.views[m].feat_var});
  }
  gibbs_update_latent(state_.U, blocks, rng);

  outcome_sweep(state_, outcome_, hyper_, rng);
}

namespace {

struct Accumulator {
  std::vector<Eigen::MatrixXd> eta_sum;
  std::vector<Eigen::VectorXd> gamma_sum;
  std::vector<Eigen::VectorXd> feat_var_sum;
  Eigen::MatrixXd U_sum;
  Eigen::VectorXd beta_sum, theta_sum, xi_sum;
  double mu_sum = 0.0;
  std::vector<double> sigma2, sigma_xi2, sigma_theta2_mean;
  std::vector<std::vector<double>> sigma_theta2;
  std::unordered_map<std::string, int> visits;
  int kept = 0;

  explicit Accumulator(const ChainState& s) {
    for (const auto& v : s.views) {
      eta_sum.push_back(Eigen::MatrixXd::Zero(v.rank(), v.num_features()));
      gamma_sum.push_back(Eigen::VectorXd::Zero(v.rank()));
      feat_var_sum.push_back(Eigen::VectorXd::Zero(v.num_features()));
    }
    U_sum = Eigen::MatrixXd::Zero(s.U.rows(), s.U.cols());
    beta_sum = Eigen::VectorXd::Zero(s.beta.size());
    theta_sum = Eigen::VectorXd::Zero(s.theta.size());
    xi_sum = Eigen::VectorXd::Zero(s.xi.size());
    sigma_theta2.resize(s.sigma_theta2.size());
  }

  void add(const ChainState& s) {
    for (std::size_t m = 0; m < s.views.size(); ++m) {
      eta_sum[m] += s.views[m].eta.cast<double>().matrix();
      gamma_sum[m] += s.views[m].gamma.cast<double>().matrix();
      feat_var_sum[m] += s.views[m].feat_var;
    }
    U_sum += s.U;
    beta_sum += s.beta;
    theta_sum += s.theta;
    xi_sum += s.xi;
    mu_sum += s.mu;
    sigma2.push_back(s.sigma2());
    sigma_xi2.push_back(s.sigma_xi2);
    for (Eigen::Index k = 0; k < s.sigma_theta2.size(); ++k) sigma_theta2[k].push_back(s.sigma_theta2(k));
    if (s.sigma_theta2.size() > 0) sigma_theta2_mean.push_back(s.sigma_theta2.mean());
    ++visits[selection_key(s.views)];
    ++kept;
  }

  PosteriorSummary finish(const ChainState& s, int max_models) const {
    PosteriorSummary out;
    const double inv = 1.0 / kept;
    for (std::size_t m = 0; m < eta_sum.size(); ++m) {
      out.mpp_eta.push_back(eta_sum[m] * inv);
      out.mpp_gamma.push_back(gamma_sum[m] * inv);
      out.feat_var_hat.push_back(feat_var_sum[m] * inv);
    }
    out.U_bar = U_sum * inv;
    out.beta_hat = beta_sum * inv;
    out.theta_hat = theta_sum * inv;
    out.xi_hat = xi_sum * inv;
    out.mu_hat = mu_sum * inv;
    out.sigma2 = summarize_trace(sigma2);
    out.sigma_xi2 = summarize_trace(sigma_xi2);
    for (const auto& t : sigma_theta2) out.sigma_theta2.push_back(summarize_trace(t));
    out.sigma_theta2_site_mean = summarize_trace(sigma_theta2_mean);
    out.n_kept = kept;
    out.n_distinct_models = static_cast<int>(visits.size());

    std::vector<std::pair<std::string, int>> ranked(visits.begin(), visits.end());
    std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
      return a.second != b.second ? a.second > b.second : a.first < b.first;
    });
    if (static_cast<int>(ranked.size()) > max_models) ranked.resize(max_models);
    std::vector<int> view_features;
    for (const auto& v : s.views) view_features.push_back(v.num_features());
    for (const auto& [key, count] : ranked) {
      RegisteredModel model;
      model.hash = fnv1a(key);
      model.frequency = count * inv;
      model.selection = decode_selection_key(key, s.rank(), view_features);
      out.registry.push_back(std::move(model));
    }
    return out;
  }
};

}  // namespace

ChainResult run_chain(const MultiViewDataset& data, const HierarchyIndex& hierarchy, const Hyperparameters& hyper,
                      bool keep_trace) {
  Sampler sampler(data, hierarchy, hyper);
  Rng rng(hyper.seed);
  sampler.initialize(rng);
  Accumulator acc(sampler.state());
  ChainResult result;
  for (int it = 0; it < hyper.n_iter; ++it) {
    sampler.step(rng);
    if (it < hyper.n_burn || (it - hyper.n_burn) % hyper.thin != 0) continue;
    const auto& s = sampler.state();
    acc.add(s);
    if (keep_trace) {
      TraceRow row{it, s.mu, s.sigma2(), s.sigma_xi2, {}};
      for (const auto& v : s.views) row.active_per_view.push_back(static_cast<int>(v.eta.cast<int>().sum()));
      result.trace.push_back(std::move(row));
    }
  }
  result.posterior = acc.finish(sampler.state(), hyper.max_bma_models);
  return result;
}

ChainResult run_outcome_chain(const Eigen::VectorXd& y, const Eigen::MatrixXd* W, const HierarchyIndex& hierarchy,
                              const Hyperparameters& hyper, bool keep_trace) {
  if (hierarchy.num_rows() != y.size()) throw Error(ErrorKind::DimensionMismatch, "hierarchy and outcome lengths differ");
  if (W && W->rows() != y.size()) throw Error(ErrorKind::DimensionMismatch, "covariate rows differ from outcome length");
  const OutcomeData outcome{&y, (W && W->cols() > 0) ? W : nullptr, &hierarchy};
  Rng rng(hyper.seed);
  ChainState state;
  state.U = Eigen::MatrixXd::Zero(y.size(), 0);
  state.views.push_back(ViewState::empty(0, 1));
  initialize_outcome_block(state, outcome, hyper, rng);

  Accumulator acc(state);
  ChainResult result;
  for (int it = 0; it < hyper.n_iter; ++it) {
    outcome_sweep(state, outcome, hyper, rng);
    if (it < hyper.n_burn || (it - hyper.n_burn) % hyper.thin != 0) continue;
    acc.add(state);
    if (keep_trace) result.trace.push_back(TraceRow{it, state.mu, state.sigma2(), state.sigma_xi2, {0}});
  }
  result.posterior = acc.finish(state, 1);
  return result;
}

}  // namespace bipmixed
