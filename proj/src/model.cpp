#include "bipmixed/model.hpp"

#include "bipmixed/error.hpp"

#include <bit>

namespace bipmixed {

namespace {

void require(bool ok, const std::string& field, const std::string& why) {
  if (!ok) throw Error(ErrorKind::ConfigError, "model." + field + ": " + why);
}

void require_ig(const InverseGammaPrior& p, const std::string& field) {
  require(p.shape > 0.0 && p.scale > 0.0, field, "shape and scale must be > 0");
}

}  // namespace

void Hyperparameters::validate() const {
  require(r >= 1 && r <= 64, "r", "must be in [1, 64]");
  require(q_eta > 0.0 && q_eta < 1.0, "q_eta", "must lie in (0, 1)");
  require(q_gamma > 0.0 && q_gamma < 1.0, "q_gamma", "must lie in (0, 1)");
  require(tau2 > 0.0, "tau2", "must be > 0");
  require(sigma_beta2 > 0.0, "sigma_beta2", "must be > 0");
  require(sigma_mu2 > 0.0, "sigma_mu2", "must be > 0");
  require_ig(ig_xi, "ig_xi");
  require_ig(ig_theta, "ig_theta");
  require_ig(ig_sigma, "ig_sigma");
  require_ig(ig_feature, "ig_feature");
  require(n_iter >= 1, "n_iter", "must be >= 1");
  require(n_burn >= 0 && n_burn < n_iter, "n_burn", "must satisfy 0 <= n_burn < n_iter");
  require(thin >= 1, "thin", "must be >= 1");
  require(max_bma_models >= 1, "max_bma_models", "must be >= 1");
}

std::uint64_t ViewState::active_mask(int j) const {
  std::uint64_t mask = 0;
  for (int l = 0; l < rank(); ++l) {
    if (gamma(l) && eta(l, j)) mask |= (std::uint64_t{1} << l);
  }
  return mask;
}

int ViewState::num_active(int j) const { return std::popcount(active_mask(j)); }

ViewState ViewState::empty(int r, int p) {
  ViewState v;
  v.gamma = Mask::Zero(r);
  v.eta = MaskMatrix::Zero(r, p);
  v.loadings = Eigen::MatrixXd::Zero(r, p);
  v.feat_var = Eigen::VectorXd::Ones(p);
  return v;
}

bool spike_consistent(const ChainState& state) {
  for (std::size_t m = 0; m < state.views.size(); ++m) {
    const auto& v = state.views[m];
    for (int j = 0; j < v.num_features(); ++j) {
      for (int l = 0; l < v.rank(); ++l) {
        const bool active = v.gamma(l) && v.eta(l, j);
        if (!active && v.loadings(l, j) != 0.0) return false;
        if (!v.gamma(l) && v.eta(l, j)) return false;
        if (m == 0 && v.eta(l, j) != v.gamma(l)) return false;
      }
    }
  }
  return true;
}

bool variances_positive(const ChainState& state) {
  for (const auto& v : state.views) {
    if (!(v.feat_var.array() > 0.0).all()) return false;
  }
  if (!(state.sigma_xi2 > 0.0)) return false;
  return (state.sigma_theta2.array() > 0.0).all();
}

}  // namespace bipmixed
