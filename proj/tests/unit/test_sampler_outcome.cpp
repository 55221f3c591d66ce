#include "bipmixed/sampler_outcome.hpp"

#include "../oracles.hpp"

#include <doctest.h>

using namespace bipmixed;
using oracle::log_inv_gamma;
using oracle::log_normal;

namespace {

void check_moments(const GaussianConditional& c, const oracle::Moments& q) {
  CHECK(c.mean == doctest::Approx(q.mean).epsilon(1e-6).scale(1.0));
  CHECK(c.var == doctest::Approx(q.var).epsilon(1e-6));
}

void check_ig(const InverseGammaPrior& post, const oracle::Moments& q) {
  const double a = post.shape, b = post.scale;
  CHECK(b / (a - 1) == doctest::Approx(q.mean).epsilon(1e-5));
  CHECK(b * b / ((a - 1) * (a - 1) * (a - 2)) == doctest::Approx(q.var).epsilon(1e-4));
}

HierarchyIndex small_hierarchy() {
  return HierarchyIndex::build({"a", "a", "a", "b", "b", "b"}, {"f1", "f1", "f2", "f3", "f3", "f3"});
}

}  // namespace

TEST_CASE("mu conditional against quadrature") {
  const Eigen::VectorXd xi = Eigen::Vector3d(0.8, 1.4, 2.1);
  const auto c = mu_conditional(xi, 0.6, 4.0);
  const auto q = oracle::quadrature_moments(
      [&](double mu) {
        double lp = log_normal(mu, 0.0, 4.0);
        for (int s = 0; s < 3; ++s) lp += log_normal(xi(s), mu, 0.6);
        return lp;
      },
      -8, 10);
  check_moments(c, q);
}

TEST_CASE("intercept conditional against quadrature") {
  const Eigen::VectorXd r = (Eigen::VectorXd(4) << 1.0, 2.5, 0.3, 1.9).finished();
  const auto c = intercept_conditional(r, 0.7, 10.0);
  const auto q = oracle::quadrature_moments(
      [&](double mu) {
        double lp = log_normal(mu, 0.0, 10.0);
        for (int i = 0; i < 4; ++i) lp += log_normal(r(i), mu, 0.7);
        return lp;
      },
      -10, 12);
  check_moments(c, q);
}

TEST_CASE("theta conditional against quadrature") {
  const double r[] = {1.2, 0.4, 2.0};
  const auto c = theta_conditional((1.2 + 0.4 + 2.0) / 3, 3, 0.9, 0.5, 1.3);
  const auto q = oracle::quadrature_moments(
      [&](double t) {
        double lp = log_normal(t, 0.9, 0.5);
        for (double v : r) lp += log_normal(v, t, 1.3);
        return lp;
      },
      -8, 10);
  check_moments(c, q);
}

TEST_CASE("xi conditional against quadrature") {
  const double theta[] = {1.5, 0.7};
  const auto c = xi_conditional(2.2, 2, 0.8, 0.4, 1.1, OutcomeFormulas::PriorConsistent);
  const auto q = oracle::quadrature_moments(
      [&](double x) { return log_normal(x, 1.1, 0.8) + log_normal(theta[0], x, 0.4) + log_normal(theta[1], x, 0.4); },
      -8, 10);
  check_moments(c, q);
  const auto legacy = xi_conditional(2.2, 2, 0.8, 0.4, 1.1, OutcomeFormulas::Legacy);
  CHECK(legacy.var == doctest::Approx(c.var));
  CHECK(legacy.mean == doctest::Approx(c.var * 2.2 / 0.4));
}

TEST_CASE("beta conditional against quadrature and normal equations") {
  Rng rng(40);
  Eigen::MatrixXd W(5, 1);
  W << 0.3, -1.2, 0.8, 1.5, -0.4;
  const Eigen::VectorXd res = (Eigen::VectorXd(5) << 0.5, -0.9, 1.1, 1.8, 0.2).finished();
  const auto c = beta_conditional(W, res, 0.9, 2.0, OutcomeFormulas::PriorConsistent);
  const auto q = oracle::quadrature_moments(
      [&](double b) {
        double lp = log_normal(b, 0.0, 2.0);
        for (int i = 0; i < 5; ++i) lp += log_normal(res(i), W(i, 0) * b, 0.9);
        return lp;
      },
      -10, 10);
  check_moments({c.mean(0), c.cov(0, 0)}, q);

  Eigen::MatrixXd W3(6, 3);
  for (int i = 0; i < 6; ++i)
    for (int k = 0; k < 3; ++k) W3(i, k) = rng.normal();
  const Eigen::VectorXd r6 = Eigen::VectorXd::NullaryExpr(6, [&] { return rng.normal(); });
  const auto c3 = beta_conditional(W3, r6, 1.5, 3.0, OutcomeFormulas::PriorConsistent);
  const Eigen::MatrixXd prec = W3.transpose() * W3 / 1.5 + Eigen::MatrixXd::Identity(3, 3) / 3.0;
  CHECK((c3.cov - prec.inverse()).cwiseAbs().maxCoeff() < 1e-12);
  CHECK((c3.mean - prec.inverse() * W3.transpose() * r6 / 1.5).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("legacy beta uses the swapped precision") {
  Eigen::MatrixXd W(3, 1);
  W << 1, 2, 3;
  const Eigen::VectorXd res = Eigen::Vector3d(1, 1, 1);
  const auto c = beta_conditional(W, res, 2.0, 100.0, OutcomeFormulas::Legacy);
  CHECK(c.cov(0, 0) == doctest::Approx(1.0 / (14.0 / 100.0 + 1.0 / 2.0)));
}

TEST_CASE("variance-component conditionals against quadrature") {
  const auto h = small_hierarchy();
  const Eigen::VectorXd theta = Eigen::Vector3d(1.4, 0.2, -0.6);
  const Eigen::VectorXd xi = Eigen::Vector2d(0.9, -0.1);
  const InverseGammaPrior prior{4.0, 2.0};

  const auto st = sigma_theta2_conditional(theta, h, xi, 0, prior);
  check_ig(st, oracle::quadrature_moments(
                   [&](double v) {
                     return log_inv_gamma(v, 4.0, 2.0) + log_normal(1.4, 0.9, v) + log_normal(0.2, 0.9, v);
                   },
                   1e-4, 400));

  const auto sx = sigma_xi2_conditional(xi, 0.3, prior, OutcomeFormulas::PriorConsistent);
  check_ig(sx, oracle::quadrature_moments(
                   [&](double v) {
                     return log_inv_gamma(v, 4.0, 2.0) + log_normal(0.9, 0.3, v) + log_normal(-0.1, 0.3, v);
                   },
                   1e-4, 400));
  const auto legacy = sigma_xi2_conditional(xi, 0.3, prior, OutcomeFormulas::Legacy);
  CHECK(legacy.scale == doctest::Approx(2.0 + 0.5 * (0.81 + 0.01)));
}

TEST_CASE("sigma2 conditional integrates the outcome loadings") {
  Rng rng(41);
  const int n = 5;
  Eigen::MatrixXd U(n, 2);
  for (int i = 0; i < n; ++i)
    for (int k = 0; k < 2; ++k) U(i, k) = rng.normal();
  const Eigen::VectorXd res = Eigen::VectorXd::NullaryExpr(n, [&] { return 1.5 * rng.normal(); });
  const double tau2 = 0.7;
  const auto post = sigma2_conditional(res, U, tau2, {4.0, 2.0});
  const Eigen::MatrixXd shape = tau2 * U * U.transpose() + Eigen::MatrixXd::Identity(n, n);
  check_ig(post, oracle::quadrature_moments(
                     [&](double v) {
                       return log_inv_gamma(v, 4.0, 2.0) + oracle::dense_mvn_logpdf(res, v * shape);
                     },
                     1e-4, 400));
  const auto none = sigma2_conditional(res, Eigen::MatrixXd(n, 0), tau2, {4.0, 2.0});
  CHECK(none.scale == doctest::Approx(2.0 + 0.5 * res.squaredNorm()));
}

TEST_CASE("residual workspace tracks the state exactly") {
  Rng rng(42);
  const auto h = small_hierarchy();
  const Eigen::VectorXd y = Eigen::VectorXd::NullaryExpr(6, [&] { return rng.normal(); });
  Eigen::MatrixXd W(6, 2);
  for (int i = 0; i < 6; ++i) W.row(i) << rng.normal(), rng.normal();
  ChainState s;
  s.U = Eigen::MatrixXd::NullaryExpr(6, 2, [&] { return rng.normal(); });
  s.views = {ViewState::empty(2, 1)};
  s.views[0].gamma.setOnes();
  s.views[0].eta.setOnes();
  s.views[0].loadings << 0.5, -0.3;
  s.beta = Eigen::Vector2d(0.2, 0.1);
  s.theta = Eigen::Vector3d::Zero();
  s.xi = Eigen::Vector2d::Zero();
  s.sigma_theta2 = Eigen::Vector2d::Constant(0.5);
  Hyperparameters hyper;
  const OutcomeData data{&y, &W, &h};
  for (int k = 0; k < 500; ++k) {
    outcome_sweep(s, data, hyper, rng);
    ResidualWorkspace ws(data);
    ws.set_fixed(s.beta);
    ws.set_random(intercept_vector(s, h, true));
    ws.set_latent(s.U, s.alpha());
    REQUIRE(ws.drift(s, true) < 1e-10);
    REQUIRE(s.sigma2() > 0);
    REQUIRE(s.sigma_xi2 > 0);
    REQUIRE((s.sigma_theta2.array() > 0).all());
  }
}

TEST_CASE("random effects disabled pins theta to zero and xi to mu") {
  Rng rng(43);
  const auto h = small_hierarchy();
  const Eigen::VectorXd y = Eigen::VectorXd::NullaryExpr(6, [&] { return 2.0 + rng.normal(); });
  ChainState s;
  s.U = Eigen::MatrixXd::Zero(6, 0);
  s.views = {ViewState::empty(0, 1)};
  s.theta = Eigen::Vector3d::Constant(1.0);
  s.xi = Eigen::Vector2d::Zero();
  s.sigma_theta2 = Eigen::Vector2d::Constant(0.5);
  Hyperparameters hyper;
  hyper.random_effects_enabled = false;
  const OutcomeData data{&y, nullptr, &h};
  for (int k = 0; k < 50; ++k) {
    outcome_sweep(s, data, hyper, rng);
    REQUIRE(s.theta.isZero(0.0));
    REQUIRE(s.xi(0) == s.mu);
    REQUIRE(s.xi(1) == s.mu);
  }
}
