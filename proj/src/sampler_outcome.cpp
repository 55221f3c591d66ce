#include "bipmixed/sampler_outcome.hpp"

#include "bipmixed/error.hpp"

#include <algorithm>
#include <cmath>

namespace bipmixed {

GaussianConditional mu_conditional(const Eigen::VectorXd& xi, double sigma_xi2, double sigma_mu2) {
  GaussianConditional c;
  c.var = 1.0 / (1.0 / sigma_mu2 + static_cast<double>(xi.size()) / sigma_xi2);
  c.mean = c.var * xi.sum() / sigma_xi2;
  return c;
}

double gibbs_mu(const Eigen::VectorXd& xi, double sigma_xi2, double sigma_mu2, Rng& rng) {
  const auto c = mu_conditional(xi, sigma_xi2, sigma_mu2);
  return rng.normal(c.mean, std::sqrt(c.var));
}

GaussianConditional intercept_conditional(const Eigen::VectorXd& residual, double sigma2, double sigma_mu2) {
  GaussianConditional c;
  c.var = 1.0 / (1.0 / sigma_mu2 + static_cast<double>(residual.size()) / sigma2);
  c.mean = c.var * residual.sum() / sigma2;
  return c;
}

MultivariateConditional beta_conditional(const Eigen::MatrixXd& W, const Eigen::VectorXd& residual, double sigma2,
                                         double sigma_beta2, OutcomeFormulas formulas) {
  if (W.rows() != residual.size()) throw Error(ErrorKind::DimensionMismatch, "W rows vs outcome length");
  const Eigen::Index k = W.cols();
  const Eigen::MatrixXd wtw = W.transpose() * W;
  const Eigen::MatrixXd eye = Eigen::MatrixXd::Identity(k, k);
  const Eigen::MatrixXd prec = formulas == OutcomeFormulas::Legacy ? Eigen::MatrixXd(wtw / sigma_beta2 + eye / sigma2)
                                                                      : Eigen::MatrixXd(eye / sigma_beta2 + wtw / sigma2);
  Eigen::LLT<Eigen::MatrixXd> llt(prec);
  if (llt.info() != Eigen::Success) throw Error(ErrorKind::SingularSystem, "fixed-effect precision");
  MultivariateConditional c;
  c.cov = llt.solve(eye);
  c.mean = c.cov * (W.transpose() * residual) / sigma2;
  return c;
}

Eigen::VectorXd gibbs_beta(const Eigen::MatrixXd& W, const Eigen::VectorXd& y, const Eigen::VectorXd& theta_expanded,
                           const Eigen::VectorXd& U_alpha, double sigma2, double sigma_beta2,
                           OutcomeFormulas formulas, Rng& rng) {
  const auto c = beta_conditional(W, y - theta_expanded - U_alpha, sigma2, sigma_beta2, formulas);
  Eigen::LLT<Eigen::MatrixXd> llt(c.cov);
  Eigen::VectorXd z(c.mean.size());
  for (Eigen::Index k = 0; k < z.size(); ++k) z(k) = rng.normal();
  return c.mean + llt.matrixL() * z;
}

GaussianConditional xi_conditional(double theta_sum, int n_families, double sigma_xi2, double sigma_theta2_site,
                                   double mu, OutcomeFormulas formulas) {
  GaussianConditional c;
  c.var = 1.0 / (1.0 / sigma_xi2 + n_families / sigma_theta2_site);
  const double prior_term = formulas == OutcomeFormulas::Legacy ? 0.0 : mu / sigma_xi2;
  c.mean = c.var * (theta_sum / sigma_theta2_site + prior_term);
  return c;
}

Eigen::VectorXd gibbs_xi(const Eigen::VectorXd& theta, const HierarchyIndex& hierarchy, double sigma_xi2,
                         const Eigen::VectorXd& sigma_theta2, double mu, OutcomeFormulas formulas, Rng& rng) {
  Eigen::VectorXd xi(hierarchy.num_sites());
  for (int s = 0; s < hierarchy.num_sites(); ++s) {
    double sum = 0.0;
    for (int f : hierarchy.site(s).families) sum += theta(f);
    const auto c = xi_conditional(sum, hierarchy.families_in_site(s), sigma_xi2, sigma_theta2(s), mu, formulas);
    xi(s) = rng.normal(c.mean, std::sqrt(c.var));
  }
  return xi;
}

GaussianConditional theta_conditional(double residual_mean, int family_size, double xi_site,
                                      double sigma_theta2_site, double sigma2) {
  GaussianConditional c;
  const double data_prec = family_size / sigma2;
  c.var = 1.0 / (1.0 / sigma_theta2_site + data_prec);
  c.mean = c.var * (xi_site / sigma_theta2_site + data_prec * residual_mean);
  return c;
}

Eigen::VectorXd gibbs_theta(const Eigen::VectorXd& residual, const HierarchyIndex& hierarchy,
                            const Eigen::VectorXd& xi, const Eigen::VectorXd& sigma_theta2, double sigma2, Rng& rng) {
  Eigen::VectorXd theta(hierarchy.num_families());
  for (int f = 0; f < hierarchy.num_families(); ++f) {
    const auto& fam = hierarchy.family(f);
    double sum = 0.0;
    for (int i : fam.rows) sum += residual(i);
    const int size = hierarchy.family_size(f);
    const auto c = theta_conditional(sum / size, size, xi(fam.site), sigma_theta2(fam.site), sigma2);
    theta(f) = rng.normal(c.mean, std::sqrt(c.var));
  }
  return theta;
}

InverseGammaPrior sigma_xi2_conditional(const Eigen::VectorXd& xi, double mu, const InverseGammaPrior& prior,
                                        OutcomeFormulas formulas) {
  const double center = formulas == OutcomeFormulas::Legacy ? 0.0 : mu;
  InverseGammaPrior post;
  post.shape = prior.shape + 0.5 * static_cast<double>(xi.size());
  post.scale = prior.scale + 0.5 * (xi.array() - center).square().sum();
  return post;
}

InverseGammaPrior sigma_theta2_conditional(const Eigen::VectorXd& theta, const HierarchyIndex& hierarchy,
                                           const Eigen::VectorXd& xi, int site, const InverseGammaPrior& prior) {
  double ss = 0.0;
  for (int f : hierarchy.site(site).families) ss += (theta(f) - xi(site)) * (theta(f) - xi(site));
  InverseGammaPrior post;
  post.shape = prior.shape + 0.5 * hierarchy.families_in_site(site);
  post.scale = prior.scale + 0.5 * ss;
  return post;
}

VarianceComponents gibbs_variance_components(const Eigen::VectorXd& xi, const Eigen::VectorXd& theta,
                                             const HierarchyIndex& hierarchy, double mu,
                                             const InverseGammaPrior& ig_xi, const InverseGammaPrior& ig_theta,
                                             OutcomeFormulas formulas, Rng& rng) {
  VarianceComponents out;
  out.sigma_theta2.resize(hierarchy.num_sites());
  for (int s = 0; s < hierarchy.num_sites(); ++s) {
    const auto post = sigma_theta2_conditional(theta, hierarchy, xi, s, ig_theta);
    out.sigma_theta2(s) = rng.inv_gamma(post.shape, post.scale);
  }
  const auto post = sigma_xi2_conditional(xi, mu, ig_xi, formulas);
  out.sigma_xi2 = rng.inv_gamma(post.shape, post.scale);
  return out;
}

Eigen::MatrixXd active_columns(const Eigen::MatrixXd& U, const Mask& gamma) {
  Eigen::MatrixXd out(U.rows(), static_cast<Eigen::Index>(gamma.cast<int>().sum()));
  Eigen::Index k = 0;
  for (Eigen::Index l = 0; l < gamma.size(); ++l) {
    if (gamma(l)) out.col(k++) = U.col(l);
  }
  return out;
}

InverseGammaPrior sigma2_conditional(const Eigen::VectorXd& residual, const Eigen::MatrixXd& U_active, double tau2,
                                     const InverseGammaPrior& prior) {
  double quad = residual.squaredNorm();
  if (U_active.cols() > 0) {
    // (I + τ² U Uᵀ)⁻¹ = I − U (Uᵀ U + τ⁻² I)⁻¹ Uᵀ
    Eigen::MatrixXd inner = U_active.transpose() * U_active;
    inner.diagonal().array() += 1.0 / tau2;
    Eigen::LLT<Eigen::MatrixXd> llt(inner);
    if (llt.info() != Eigen::Success) throw Error(ErrorKind::SingularSystem, "σ² Woodbury inner system");
    const Eigen::VectorXd c = U_active.transpose() * residual;
    quad -= llt.matrixL().solve(c).squaredNorm();
  }
  InverseGammaPrior post;
  post.shape = prior.shape + 0.5 * static_cast<double>(residual.size());
  post.scale = prior.scale + 0.5 * std::max(quad, 0.0);
  return post;
}

double gibbs_sigma2(const Eigen::VectorXd& y, const std::optional<Eigen::MatrixXd>& W, const Eigen::VectorXd& beta,
                    const Eigen::VectorXd& theta_expanded, const Eigen::MatrixXd& U_active, double tau2,
                    const InverseGammaPrior& prior, Rng& rng) {
  Eigen::VectorXd resid = y - theta_expanded;
  if (W && W->cols() > 0) resid -= (*W) * beta;
  const auto post = sigma2_conditional(resid, U_active, tau2, prior);
  return rng.inv_gamma(post.shape, post.scale);
}

ResidualWorkspace::ResidualWorkspace(const OutcomeData& data)
    : data_(data),
      fixed_(Eigen::VectorXd::Zero(data.y->size())),
      random_(Eigen::VectorXd::Zero(data.y->size())),
      latent_(Eigen::VectorXd::Zero(data.y->size())) {}

void ResidualWorkspace::set_fixed(const Eigen::VectorXd& beta) {
  if (data_.W && data_.W->cols() > 0) {
    fixed_.noalias() = (*data_.W) * beta;
  } else {
    fixed_.setZero();
  }
}

void ResidualWorkspace::set_random(const Eigen::VectorXd& per_row) { random_ = per_row; }

void ResidualWorkspace::set_latent(const Eigen::MatrixXd& U, const Eigen::VectorXd& alpha) {
  latent_.noalias() = U * alpha;
}

Eigen::VectorXd ResidualWorkspace::family_means(const Eigen::VectorXd& per_row) const {
  const auto& h = *data_.hierarchy;
  Eigen::VectorXd out(h.num_families());
  for (int f = 0; f < h.num_families(); ++f) {
    double sum = 0.0;
    for (int i : h.family(f).rows) sum += per_row(i);
    out(f) = sum / h.family_size(f);
  }
  return out;
}

double ResidualWorkspace::drift(const ChainState& state, bool random_effects) const {
  Eigen::VectorXd fixed = Eigen::VectorXd::Zero(fixed_.size());
  if (data_.W && data_.W->cols() > 0) fixed = (*data_.W) * state.beta;
  const Eigen::VectorXd random = intercept_vector(state, *data_.hierarchy, random_effects);
  const Eigen::VectorXd latent = state.U * state.alpha();
  return std::max({(fixed - fixed_).cwiseAbs().maxCoeff(), (random - random_).cwiseAbs().maxCoeff(),
                   (latent - latent_).cwiseAbs().maxCoeff()});
}

Eigen::VectorXd intercept_vector(const ChainState& state, const HierarchyIndex& hierarchy, bool random_effects) {
  if (random_effects) return hierarchy.expand_family(state.theta);
  return Eigen::VectorXd::Constant(hierarchy.num_rows(), state.mu);
}

void outcome_sweep(ChainState& state, const OutcomeData& data, const Hyperparameters& hyper, Rng& rng) {
  const HierarchyIndex& h = *data.hierarchy;
  const bool use_w = data.W != nullptr && data.W->cols() > 0;
  ResidualWorkspace ws(data);
  ws.set_latent(state.U, state.alpha());
  ws.set_random(intercept_vector(state, h, hyper.random_effects_enabled));
  ws.set_fixed(state.beta);

  if (use_w) {
    const auto c = beta_conditional(*data.W, ws.without_fixed(), state.sigma2(), hyper.sigma_beta2, hyper.formulas);
    Eigen::LLT<Eigen::MatrixXd> llt(c.cov);
    Eigen::VectorXd z(c.mean.size());
    for (Eigen::Index k = 0; k < z.size(); ++k) z(k) = rng.normal();
    state.beta = c.mean + llt.matrixL() * z;
    ws.set_fixed(state.beta);
  }

  if (hyper.random_effects_enabled) {
    state.theta = gibbs_theta(ws.without_random(), h, state.xi, state.sigma_theta2, state.sigma2(), rng);
    ws.set_random(h.expand_family(state.theta));
    state.xi = gibbs_xi(state.theta, h, state.sigma_xi2, state.sigma_theta2, state.mu, hyper.formulas, rng);
    const auto vc = gibbs_variance_components(state.xi, state.theta, h, state.mu, hyper.ig_xi, hyper.ig_theta,
                                              hyper.formulas, rng);
    state.sigma_theta2 = vc.sigma_theta2;
    state.sigma_xi2 = vc.sigma_xi2;
    state.mu = gibbs_mu(state.xi, state.sigma_xi2, hyper.sigma_mu2, rng);
  } else {
    const auto c = intercept_conditional(ws.without_random(), state.sigma2(), hyper.sigma_mu2);
    state.mu = rng.normal(c.mean, std::sqrt(c.var));
    state.theta.setZero();
    state.xi.setConstant(state.mu);
    ws.set_random(intercept_vector(state, h, false));
  }

  const auto post = sigma2_conditional(ws.without_latent(), active_columns(state.U, state.views[0].gamma),
                                       hyper.tau2, hyper.ig_sigma);
  state.set_sigma2(rng.inv_gamma(post.shape, post.scale));
}

}  // namespace bipmixed
