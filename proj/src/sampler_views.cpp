#include "bipmixed/sampler_views.hpp"

#include "bipmixed/error.hpp"

#include <algorithm>
#include <bit>
#include <cmath>

namespace bipmixed {

namespace {

constexpr double kLog2Pi = 1.8378770664093454835606594728112;

std::uint64_t bit(int l) { return std::uint64_t{1} << l; }

double log_odds(double q) { return std::log(q) - std::log1p(-q); }

double isotropic_loglik(double sq_norm, int n, double feat_var) {
  return -0.5 * n * (kLog2Pi + std::log(feat_var)) - 0.5 * sq_norm / feat_var;
}

bool accept(double log_ratio, Rng& rng) { return log_ratio >= 0.0 || std::log(rng.uniform()) < log_ratio; }

}  // namespace

ViewStatistics view_statistics(const Eigen::MatrixXd& U, const Eigen::MatrixXd& x) {
  if (U.rows() != x.rows()) {
    throw Error(ErrorKind::DimensionMismatch, "U has " + std::to_string(U.rows()) + " rows, view has " +
                                                  std::to_string(x.rows()));
  }
  ViewStatistics s;
  s.cross = U.transpose() * x;
  s.sq_norm = x.colwise().squaredNorm().transpose();
  s.n = static_cast<int>(x.rows());
  return s;
}

MarginalLikelihoodCache::MarginalLikelihoodCache(const Eigen::MatrixXd& U, double tau2)
    : gram_(U.transpose() * U), tau2_(tau2), n_(static_cast<int>(U.rows())) {
  if (U.cols() > 64) throw Error(ErrorKind::BadDimension, "rank above 64 is not supported");
}

const MarginalLikelihoodCache::Factor& MarginalLikelihoodCache::factor(std::uint64_t mask) {
  auto it = factors_.find(mask);
  if (it != factors_.end()) return it->second;

  Factor f;
  for (int l = 0; l < gram_.rows(); ++l) {
    if (mask & bit(l)) f.index.push_back(l);
  }
  const int k = static_cast<int>(f.index.size());
  Eigen::MatrixXd prec(k, k);
  for (int a = 0; a < k; ++a) {
    for (int b = 0; b < k; ++b) prec(a, b) = gram_(f.index[a], f.index[b]);
    prec(a, a) += 1.0 / tau2_;
  }
  f.llt.compute(prec);
  if (f.llt.info() != Eigen::Success) {
    throw Error(ErrorKind::SingularSystem, "loading posterior precision is not positive definite");
  }
  const Eigen::MatrixXd& L = f.llt.matrixLLT();
  double log_det_prec = 0.0;
  for (int a = 0; a < k; ++a) log_det_prec += 2.0 * std::log(L(a, a));
  f.log_det = k * std::log(tau2_) + log_det_prec;
  return factors_.emplace(mask, std::move(f)).first->second;
}

double MarginalLikelihoodCache::loglik(const ViewStatistics& stats, int j, std::uint64_t mask, double feat_var) {
  if (mask == 0) return isotropic_loglik(stats.sq_norm(j), n_, feat_var);
  const Factor& f = factor(mask);
  const int k = static_cast<int>(f.index.size());
  Eigen::VectorXd c(k);
  for (int a = 0; a < k; ++a) c(a) = stats.cross(f.index[a], j);
  // xᵀ(I + τ² U_S U_Sᵀ)⁻¹x = xᵀx − cᵀ(U_SᵀU_S + τ⁻²I)⁻¹c
  const Eigen::VectorXd half = f.llt.matrixL().solve(c);
  const double quad = stats.sq_norm(j) - half.squaredNorm();
  return -0.5 * n_ * (kLog2Pi + std::log(feat_var)) - 0.5 * f.log_det - 0.5 * quad / feat_var;
}

double marginal_loglik_feature(const Eigen::VectorXd& x, const Eigen::MatrixXd& U, const Mask& active,
                               double feat_var, double tau2) {
  if (x.size() != U.rows() || active.size() != U.cols()) {
    throw Error(ErrorKind::DimensionMismatch, "marginal_loglik_feature: inconsistent shapes");
  }
  std::uint64_t mask = 0;
  for (Eigen::Index l = 0; l < active.size(); ++l) {
    if (active(l)) mask |= bit(static_cast<int>(l));
  }
  MarginalLikelihoodCache cache(U, tau2);
  const ViewStatistics stats = view_statistics(U, x);
  return cache.loglik(stats, 0, mask, feat_var);
}

SelectionSweepResult mh_update_selection(ViewState& view, const ViewStatistics& stats,
                                         MarginalLikelihoodCache& cache, const SelectionPrior& prior,
                                         bool outcome_view, Rng& rng) {
  const int r = view.rank();
  const int p = view.num_features();
  SelectionSweepResult res;
  res.loglik.resize(p);
  std::vector<std::uint64_t> masks(p);
  for (int j = 0; j < p; ++j) {
    masks[j] = view.active_mask(j);
    res.loglik(j) = cache.loglik(stats, j, masks[j], view.feat_var(j));
  }

  const double gamma_odds = log_odds(prior.q_gamma);
  const double eta_odds = log_odds(prior.q_eta);
  Eigen::VectorXd proposed(p);
  std::vector<std::uint8_t> proposed_eta(p);

  for (int l = 0; l < r; ++l) {
    // Component move.
    ++res.proposals;
    if (!view.gamma(l)) {
      double delta = 0.0;
      for (int j = 0; j < p; ++j) {
        proposed_eta[j] = outcome_view ? 1 : static_cast<std::uint8_t>(rng.bernoulli(prior.q_eta));
        if (proposed_eta[j]) {
          proposed(j) = cache.loglik(stats, j, masks[j] | bit(l), view.feat_var(j));
          delta += proposed(j) - res.loglik(j);
        }
      }
      // The η proposal equals its conditional prior, so those terms cancel.
      if (accept(delta + gamma_odds, rng)) {
        ++res.accepted;
        view.gamma(l) = 1;
        for (int j = 0; j < p; ++j) {
          view.eta(l, j) = proposed_eta[j];
          if (proposed_eta[j]) {
            masks[j] |= bit(l);
            res.loglik(j) = proposed(j);
          }
        }
      }
    } else {
      double delta = 0.0;
      for (int j = 0; j < p; ++j) {
        if (view.eta(l, j)) {
          proposed(j) = cache.loglik(stats, j, masks[j] & ~bit(l), view.feat_var(j));
          delta += proposed(j) - res.loglik(j);
        }
      }
      if (accept(delta - gamma_odds, rng)) {
        ++res.accepted;
        view.gamma(l) = 0;
        for (int j = 0; j < p; ++j) {
          if (view.eta(l, j)) {
            masks[j] &= ~bit(l);
            res.loglik(j) = proposed(j);
          }
          view.eta(l, j) = 0;
          view.loadings(l, j) = 0.0;
        }
      }
    }

    if (outcome_view || !view.gamma(l)) continue;

    // Single-feature flips within the active component.
    for (int j = 0; j < p; ++j) {
      ++res.proposals;
      const bool on = view.eta(l, j);
      const std::uint64_t new_mask = on ? (masks[j] & ~bit(l)) : (masks[j] | bit(l));
      const double ll = cache.loglik(stats, j, new_mask, view.feat_var(j));
      const double log_ratio = ll - res.loglik(j) + (on ? -eta_odds : eta_odds);
      if (accept(log_ratio, rng)) {
        ++res.accepted;
        view.eta(l, j) = on ? 0 : 1;
        masks[j] = new_mask;
        res.loglik(j) = ll;
        if (on) view.loadings(l, j) = 0.0;
      }
    }

    // Swap move; proposal is symmetric because it keeps both counts fixed.
    if (p >= 2) {
      std::vector<int> on_idx, off_idx;
      for (int j = 0; j < p; ++j) (view.eta(l, j) ? on_idx : off_idx).push_back(j);
      if (!on_idx.empty() && !off_idx.empty()) {
        ++res.proposals;
        const int j1 = on_idx[rng.index(on_idx.size())];
        const int j0 = off_idx[rng.index(off_idx.size())];
        const std::uint64_t m1 = masks[j1] & ~bit(l);
        const std::uint64_t m0 = masks[j0] | bit(l);
        const double ll1 = cache.loglik(stats, j1, m1, view.feat_var(j1));
        const double ll0 = cache.loglik(stats, j0, m0, view.feat_var(j0));
        if (accept(ll1 - res.loglik(j1) + ll0 - res.loglik(j0), rng)) {
          ++res.accepted;
          view.eta(l, j1) = 0;
          view.eta(l, j0) = 1;
          view.loadings(l, j1) = 0.0;
          masks[j1] = m1;
          masks[j0] = m0;
          res.loglik(j1) = ll1;
          res.loglik(j0) = ll0;
        }
      }
    }
  }
  return res;
}

LoadingConditional loading_conditional(const ViewState& view, const ViewStatistics& stats,
                                       MarginalLikelihoodCache& cache, int j) {
  LoadingConditional out;
  const std::uint64_t mask = view.active_mask(j);
  if (mask == 0) return out;
  const auto& f = cache.factor(mask);
  const int k = static_cast<int>(f.index.size());
  Eigen::VectorXd c(k);
  for (int a = 0; a < k; ++a) c(a) = stats.cross(f.index[a], j);
  out.index = f.index;
  out.mean = f.llt.solve(c);
  out.cov = view.feat_var(j) * f.llt.solve(Eigen::MatrixXd::Identity(k, k));
  return out;
}

void gibbs_update_loadings(ViewState& view, const ViewStatistics& stats, MarginalLikelihoodCache& cache, Rng& rng) {
  const int p = view.num_features();
  for (int j = 0; j < p; ++j) {
    view.loadings.col(j).setZero();
    const std::uint64_t mask = view.active_mask(j);
    if (mask == 0) continue;
    const auto& f = cache.factor(mask);
    const int k = static_cast<int>(f.index.size());
    Eigen::VectorXd c(k), z(k);
    for (int a = 0; a < k; ++a) c(a) = stats.cross(f.index[a], j);
    for (int a = 0; a < k; ++a) z(a) = rng.normal();
    const Eigen::VectorXd mean = f.llt.solve(c);
    // Precision Λ = L Lᵀ, so L⁻ᵀ z ~ N(0, Λ⁻¹).
    const Eigen::VectorXd noise = f.llt.matrixU().solve(z);
    const Eigen::VectorXd draw = mean + std::sqrt(view.feat_var(j)) * noise;
    for (int a = 0; a < k; ++a) view.loadings(f.index[a], j) = draw(a);
  }
}

InverseGammaPrior feature_variance_conditional(const ViewState& view, const ViewStatistics& stats,
                                               const Eigen::MatrixXd& gram, double tau2,
                                               const InverseGammaPrior& prior, int j) {
  const Eigen::VectorXd a = view.loadings.col(j);
  const double rss = std::max(0.0, stats.sq_norm(j) - 2.0 * a.dot(stats.cross.col(j)) + a.dot(gram * a));
  const int k = view.num_active(j);
  InverseGammaPrior post;
  post.shape = prior.shape + 0.5 * stats.n + 0.5 * k;
  post.scale = prior.scale + 0.5 * rss + 0.5 * a.squaredNorm() / tau2;
  return post;
}

void gibbs_update_feature_variances(ViewState& view, const ViewStatistics& stats, const Eigen::MatrixXd& gram,
                                    double tau2, const InverseGammaPrior& prior, Rng& rng) {
  for (int j = 0; j < view.num_features(); ++j) {
    const auto post = feature_variance_conditional(view, stats, gram, tau2, prior, j);
    view.feat_var(j) = rng.inv_gamma(post.shape, post.scale);
  }
}

namespace {

struct LatentSystem {
  Eigen::MatrixXd prec;  // r x r
  Eigen::MatrixXd rhs;   // n x r, row i = Σ_m A Ψ⁻¹ x_i
};

LatentSystem assemble_latent(int n, int r, std::span<const LatentBlock> blocks) {
  LatentSystem sys{Eigen::MatrixXd::Identity(r, r), Eigen::MatrixXd::Zero(n, r)};
  for (const auto& b : blocks) {
    if (b.data->rows() != n || b.loadings->rows() != r || b.loadings->cols() != b.data->cols()) {
      throw Error(ErrorKind::DimensionMismatch, "latent block shapes are inconsistent");
    }
    const Eigen::MatrixXd scaled = b.loadings->array().rowwise() / b.feat_var->transpose().array();
    sys.prec.noalias() += scaled * b.loadings->transpose();
    sys.rhs.noalias() += (*b.data) * scaled.transpose();
  }
  return sys;
}

}  // namespace

LatentConditional latent_conditional(int n, int r, std::span<const LatentBlock> blocks) {
  const LatentSystem sys = assemble_latent(n, r, blocks);
  Eigen::LLT<Eigen::MatrixXd> llt(sys.prec);
  LatentConditional out;
  out.cov = llt.solve(Eigen::MatrixXd::Identity(r, r));
  out.mean = sys.rhs * out.cov;
  return out;
}

void gibbs_update_latent(Eigen::MatrixXd& U, std::span<const LatentBlock> blocks, Rng& rng) {
  const int n = static_cast<int>(U.rows());
  const int r = static_cast<int>(U.cols());
  const LatentSystem sys = assemble_latent(n, r, blocks);
  Eigen::LLT<Eigen::MatrixXd> llt(sys.prec);
  if (llt.info() != Eigen::Success) throw Error(ErrorKind::SingularSystem, "latent precision");
  // Row form: u_iᵀ = b_iᵀ Λ⁻¹ + z_iᵀ L⁻¹ with Λ = L Lᵀ.
  const Eigen::MatrixXd L_inv = llt.matrixL().solve(Eigen::MatrixXd::Identity(r, r));
  Eigen::MatrixXd z(n, r);
  for (int i = 0; i < n; ++i) {
    for (int l = 0; l < r; ++l) z(i, l) = rng.normal();
  }
  U = llt.solve(sys.rhs.transpose()).transpose() + z * L_inv;
}

}  // namespace bipmixed
