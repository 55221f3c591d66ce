#include "bipmixed/baselines.hpp"
#include "bipmixed/metrics.hpp"

#include "fixtures.hpp"

#include <doctest.h>

using namespace bipmixed;

TEST_CASE("principal components match a dense eigensolver") {
  Rng rng(90);
  const int n = 60, P = 8;
  Eigen::MatrixXd x = Eigen::MatrixXd::NullaryExpr(n, P, [&] { return rng.normal(); });
  x.col(1) += 2.0 * x.col(0);
  x.col(3) -= x.col(2);
  const auto pc = principal_components(x, 3);
  CHECK(pc.directions.rows() == P);
  CHECK(pc.directions.cols() == 3);
  CHECK((pc.directions.transpose() * pc.directions - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff() < 1e-10);

  const Eigen::MatrixXd centered = x.rowwise() - x.colwise().mean();
  const Eigen::MatrixXd cov = centered.transpose() * centered / (n - 1);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov);
  for (int k = 0; k < 3; ++k) {
    CHECK(pc.variances(k) == doctest::Approx(eig.eigenvalues()(P - 1 - k)).epsilon(1e-10));
    const Eigen::VectorXd v = eig.eigenvectors().col(P - 1 - k);
    CHECK(std::abs(v.dot(pc.directions.col(k))) == doctest::Approx(1.0).epsilon(1e-10));
    Eigen::Index arg;
    pc.directions.col(k).cwiseAbs().maxCoeff(&arg);
    CHECK(pc.directions(arg, k) > 0);
  }
  CHECK((pc.scores - centered * pc.directions).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("two-step baseline fits and predicts") {
  const auto sim = gen_dataset(fixture::small_spec());
  const auto fit = fit_pca2step(sim.train, fixture::short_chain());
  CHECK(fit.method == Method::PCA2Step);
  REQUIRE(fit.pca_directions);
  CHECK(fit.pca_directions->cols() == 4);
  CHECK(fit.posterior.beta_hat.size() == 4);
  const Eigen::VectorXd yhat = predict(fit, sim.test);
  CHECK(yhat.size() == 40);
  CHECK(mse(sim.test.outcome, yhat) < 3.0 * var_pred(sim.test.outcome));

  Pca2StepOptions fam;
  fam.family_only = true;
  const auto fit2 = fit_pca2step(sim.train, fixture::short_chain(), fam);
  CHECK(fit2.single_site);
  CHECK(fit2.site_ids.size() == 1);
  CHECK(predict(fit2, sim.test).size() == 40);
}

TEST_CASE("bip baseline disables random effects") {
  const auto sim = gen_dataset(fixture::small_spec());
  const auto fit = fit_bip(sim.train, fixture::short_chain());
  CHECK(fit.method == Method::BIP);
  CHECK(!fit.hyper.random_effects_enabled);
  CHECK((fit.posterior.xi_hat.array() == fit.posterior.mu_hat).all());
}
