#include "bipmixed/simulation.hpp"

#include "bipmixed/error.hpp"

#include <cmath>
#include <string>

namespace bipmixed {

ScenarioSpec ScenarioSpec::preset(int id) {
  ScenarioSpec s;
  s.scenario_id = id;
  switch (id) {
    case 1:
      s.sigma_theta2 = 0.0;
      s.sigma_xi2 = 0.0;
      break;
    case 2:
      s.sigma_theta2 = 1.0;
      s.sigma_xi2 = 0.5;
      break;
    case 3:
      s.sigma_theta2 = 0.5;
      s.sigma_xi2 = 1.0;
      break;
    default:
      throw Error(ErrorKind::ConfigError, "scenario.id: must be 1, 2 or 3");
  }
  return s;
}

void ScenarioSpec::validate() const {
  if (n_sites < 1 || families_per_site < 1 || individuals_per_family < 1) {
    throw Error(ErrorKind::ConfigError, "scenario: site, family and individual counts must be positive");
  }
  if (n_views < 1) throw Error(ErrorKind::ConfigError, "scenario.n_views: must be positive");
  if (n_signal < kBlockSize || n_signal % kBlockSize != 0) {
    throw Error(ErrorKind::ConfigError, "scenario.n_signal: must be a positive multiple of 10");
  }
  if (p < n_signal) throw Error(ErrorKind::BadDimension, "scenario.p: must be at least n_signal");
  if (alpha.size() != r) throw Error(ErrorKind::ConfigError, "scenario.alpha: length must equal r");
  if (sigma_theta2 < 0 || sigma_xi2 < 0 || sigma2 <= 0) {
    throw Error(ErrorKind::ConfigError, "scenario: variances must be non-negative (sigma2 positive)");
  }
  if (n_covariates < 0) throw Error(ErrorKind::ConfigError, "scenario.n_covariates: must be non-negative");
}

Eigen::MatrixXd gen_intra_view_cov(int p, int n_signal) {
  if (n_signal < kBlockSize || n_signal % kBlockSize != 0) {
    throw Error(ErrorKind::BadDimension, "signal block must be a positive multiple of 10");
  }
  if (p < n_signal) throw Error(ErrorKind::BadDimension, "p = " + std::to_string(p) + " is below " + std::to_string(n_signal));
  Eigen::MatrixXd cov = Eigen::MatrixXd::Identity(p, p);
  for (int b = 0; b < n_signal; b += kBlockSize) {
    for (int i = b; i < b + kBlockSize; ++i) {
      for (int j = b; j < b + kBlockSize; ++j) {
        if (i == j) continue;
        cov(i, j) = (i == b || j == b) ? 0.7 : 0.49;
      }
    }
  }
  return cov;
}

std::vector<Eigen::MatrixXd> gen_loadings(Rng& rng, int n_views, int r, int p, int n_signal) {
  std::vector<Eigen::MatrixXd> out;
  for (int m = 0; m < n_views; ++m) {
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(r, p);
    for (int j = 0; j < n_signal; ++j) {
      for (int l = 0; l < r; ++l) {
        const double magnitude = 0.3 + 0.2 * rng.uniform();
        double v = rng.bernoulli(0.5) ? magnitude : -magnitude;
        if (j % kBlockSize == 0) v *= 2.0;
        a(l, j) = v;
      }
    }
    out.push_back(std::move(a));
  }
  return out;
}

namespace {

struct Half {
  MultiViewDataset data;
  Eigen::MatrixXd U;
  Eigen::VectorXd theta;
};

Half gen_half(const ScenarioSpec& spec, const std::vector<Eigen::MatrixXd>& loadings,
              const std::vector<Eigen::MatrixXd>& noise_factor, const Eigen::VectorXd& xi,
              const Eigen::VectorXd& beta, const std::string& prefix, Rng& rng) {
  const int n = spec.num_rows();
  const int n_families = spec.n_sites * spec.families_per_site;
  Half h;
  h.U.resize(n, spec.r);
  for (int i = 0; i < n; ++i) {
    for (int l = 0; l < spec.r; ++l) h.U(i, l) = rng.normal();
  }

  for (int m = 0; m < spec.n_views; ++m) {
    Eigen::MatrixXd z(n, spec.p);
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < spec.p; ++j) z(i, j) = rng.normal();
    }
    h.data.views.push_back(h.U * loadings[m] + z * noise_factor[m].transpose());
  }

  if (spec.n_covariates > 0) {
    Eigen::MatrixXd w(n, spec.n_covariates);
    for (int i = 0; i < n; ++i) {
      for (int k = 0; k < spec.n_covariates; ++k) w(i, k) = rng.normal();
    }
    h.data.covariates = std::move(w);
  }

  h.theta.resize(n_families);
  for (int f = 0; f < n_families; ++f) {
    const int s = f / spec.families_per_site;
    h.theta(f) = xi(s) + std::sqrt(spec.sigma_theta2) * rng.normal();
  }

  h.data.outcome.resize(n);
  int row = 0;
  for (int f = 0; f < n_families; ++f) {
    const int s = f / spec.families_per_site;
    for (int k = 0; k < spec.individuals_per_family; ++k, ++row) {
      h.data.site_label.push_back("s" + std::to_string(s + 1));
      h.data.family_label.push_back(prefix + std::to_string(f + 1));
      double y = h.U.row(row).dot(spec.alpha) + h.theta(f) + std::sqrt(spec.sigma2) * rng.normal();
      if (h.data.covariates) y += h.data.covariates->row(row).dot(beta);
      h.data.outcome(row) = y;
    }
  }
  h.data.validate();
  return h;
}

}  // namespace

SimulatedData gen_dataset(const ScenarioSpec& spec, Rng& rng) {
  spec.validate();
  SimulatedData out;
  auto& t = out.truth;
  t.loadings = gen_loadings(rng, spec.n_views, spec.r, spec.p, spec.n_signal);
  t.alpha = spec.alpha;
  t.beta = Eigen::VectorXd::Constant(spec.n_covariates, spec.beta);

  const Eigen::MatrixXd cov = gen_intra_view_cov(spec.p, spec.n_signal);
  const Eigen::MatrixXd chol = cov.llt().matrixL();
  const std::vector<Eigen::MatrixXd> noise_factor(spec.n_views, chol);

  t.xi.resize(spec.n_sites);
  for (int s = 0; s < spec.n_sites; ++s) t.xi(s) = spec.mu + std::sqrt(spec.sigma_xi2) * rng.normal();

  Half train = gen_half(spec, t.loadings, noise_factor, t.xi, t.beta, "tr_", rng);
  Half test = gen_half(spec, t.loadings, noise_factor, t.xi, t.beta, "te_", rng);
  out.train = std::move(train.data);
  out.test = std::move(test.data);
  t.U_train = std::move(train.U);
  t.U_test = std::move(test.U);
  t.theta_train = std::move(train.theta);
  t.theta_test = std::move(test.theta);

  for (int m = 0; m < spec.n_views; ++m) {
    std::vector<int> mask(spec.p, 0);
    for (int j = 0; j < spec.n_signal; ++j) mask[j] = 1;
    t.importance.push_back(std::move(mask));
  }
  for (int j = 0; j < spec.n_signal; j += kBlockSize) t.main_features.push_back(j);
  return out;
}

SimulatedData gen_dataset(const ScenarioSpec& spec) {
  Rng rng(spec.seed);
  return gen_dataset(spec, rng);
}

}  // namespace bipmixed
