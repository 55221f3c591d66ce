#include "bipmixed/sampler_views.hpp"

#include "bipmixed/error.hpp"

#include "../oracles.hpp"

#include <doctest.h>

#include <map>

using namespace bipmixed;

namespace {

Eigen::MatrixXd gaussian(Rng& rng, int rows, int cols, double sd = 1.0) {
  Eigen::MatrixXd m(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) m(i, j) = sd * rng.normal();
  return m;
}

Mask mask_of(std::initializer_list<int> bits) {
  Mask m(static_cast<Eigen::Index>(bits.size()));
  int k = 0;
  for (int b : bits) m(k++) = static_cast<std::uint8_t>(b);
  return m;
}

}  // namespace

TEST_CASE("marginal likelihood matches the dense Gaussian density") {
  Rng rng(21);
  for (int trial = 0; trial < 40; ++trial) {
    const int n = 3 + static_cast<int>(rng.index(10));
    const int r = 1 + static_cast<int>(rng.index(4));
    const Eigen::MatrixXd U = gaussian(rng, n, r);
    const Eigen::VectorXd x = gaussian(rng, n, 1, 2.0);
    Mask active(r);
    for (int l = 0; l < r; ++l) active(l) = static_cast<std::uint8_t>(rng.bernoulli(0.5));
    const double feat_var = 0.3 + rng.uniform();
    const double tau2 = 0.5 + rng.uniform();
    Eigen::MatrixXd cov = Eigen::MatrixXd::Identity(n, n);
    for (int l = 0; l < r; ++l)
      if (active(l)) cov += tau2 * U.col(l) * U.col(l).transpose();
    const double expected = oracle::dense_mvn_logpdf(x, feat_var * cov);
    CHECK(marginal_loglik_feature(x, U, active, feat_var, tau2) == doctest::Approx(expected).epsilon(1e-10));

    MarginalLikelihoodCache cache(U, tau2);
    const auto stats = view_statistics(U, x);
    std::uint64_t mask = 0;
    for (int l = 0; l < r; ++l)
      if (active(l)) mask |= std::uint64_t{1} << l;
    CHECK(cache.loglik(stats, 0, mask, feat_var) == doctest::Approx(expected).epsilon(1e-10));
  }
}

TEST_CASE("marginal likelihood with nothing active is isotropic") {
  Rng rng(22);
  const Eigen::MatrixXd U = gaussian(rng, 5, 2);
  const Eigen::VectorXd x = gaussian(rng, 5, 1);
  double expected = 0;
  for (int i = 0; i < 5; ++i) expected += oracle::log_normal(x(i), 0.0, 0.7);
  CHECK(marginal_loglik_feature(x, U, mask_of({0, 0}), 0.7, 1.0) == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("cache shares factorizations across features with equal active sets") {
  Rng rng(23);
  const Eigen::MatrixXd U = gaussian(rng, 20, 3);
  const Eigen::MatrixXd x = gaussian(rng, 20, 6);
  MarginalLikelihoodCache cache(U, 1.0);
  const auto stats = view_statistics(U, x);
  for (int j = 0; j < 6; ++j) cache.loglik(stats, j, 0b101, 1.0);
  CHECK(cache.size() == 1);
  cache.loglik(stats, 0, 0b011, 1.0);
  CHECK(cache.size() == 2);
}

TEST_CASE("loading conditional matches ridge normal equations") {
  Rng rng(24);
  const int n = 15, r = 3, p = 4;
  const Eigen::MatrixXd U = gaussian(rng, n, r);
  const Eigen::MatrixXd x = gaussian(rng, n, p);
  ViewState v = ViewState::empty(r, p);
  v.gamma = mask_of({1, 0, 1});
  v.eta.setOnes();
  v.feat_var << 0.5, 1.0, 2.0, 1.5;
  const double tau2 = 0.8;
  MarginalLikelihoodCache cache(U, tau2);
  const auto stats = view_statistics(U, x);
  for (int j = 0; j < p; ++j) {
    const auto c = loading_conditional(v, stats, cache, j);
    REQUIRE(c.index == std::vector<int>{0, 2});
    Eigen::MatrixXd Us(n, 2);
    Us << U.col(0), U.col(2);
    const Eigen::MatrixXd prec = Us.transpose() * Us / v.feat_var(j) +
                                 Eigen::MatrixXd::Identity(2, 2) / (tau2 * v.feat_var(j));
    const Eigen::MatrixXd cov = prec.inverse();
    const Eigen::VectorXd mean = cov * Us.transpose() * x.col(j) / v.feat_var(j);
    CHECK((c.mean - mean).cwiseAbs().maxCoeff() < 1e-10);
    CHECK((c.cov - cov).cwiseAbs().maxCoeff() < 1e-10);
  }
}

TEST_CASE("loading draws zero the spike and match the slab moments") {
  Rng rng(25);
  const int n = 10, r = 2, p = 2;
  const Eigen::MatrixXd U = gaussian(rng, n, r);
  const Eigen::MatrixXd x = gaussian(rng, n, p);
  ViewState v = ViewState::empty(r, p);
  v.gamma = mask_of({1, 1});
  v.eta(0, 0) = 1;
  v.eta(1, 1) = 1;
  MarginalLikelihoodCache cache(U, 1.0);
  const auto stats = view_statistics(U, x);
  const auto c = loading_conditional(v, stats, cache, 0);
  std::vector<double> draws;
  for (int k = 0; k < 50000; ++k) {
    gibbs_update_loadings(v, stats, cache, rng);
    REQUIRE(v.loadings(1, 0) == 0.0);
    REQUIRE(v.loadings(0, 1) == 0.0);
    draws.push_back(v.loadings(0, 0));
  }
  const auto m = oracle::sample_moments(draws);
  CHECK(m.mean == doctest::Approx(c.mean(0)).epsilon(0.02).scale(0.0));
  CHECK(m.var == doctest::Approx(c.cov(0, 0)).epsilon(0.05));
}

TEST_CASE("feature variance conditional adds residual and slab terms") {
  Rng rng(26);
  const int n = 8, r = 2;
  const Eigen::MatrixXd U = gaussian(rng, n, r);
  const Eigen::MatrixXd x = gaussian(rng, n, 1);
  ViewState v = ViewState::empty(r, 1);
  v.gamma = mask_of({1, 1});
  v.eta(0, 0) = 1;
  v.loadings(0, 0) = 0.7;
  const auto stats = view_statistics(U, x);
  const double tau2 = 2.0;
  const auto post = feature_variance_conditional(v, stats, U.transpose() * U, tau2, {3.0, 1.5}, 0);
  const double resid = (x.col(0) - U.col(0) * 0.7).squaredNorm();
  CHECK(post.shape == doctest::Approx(3.0 + n / 2.0 + 0.5));
  CHECK(post.scale == doctest::Approx(1.5 + 0.5 * resid + 0.5 * 0.49 / tau2).epsilon(1e-12));
}

TEST_CASE("latent conditional matches the stacked regression") {
  Rng rng(27);
  const int n = 6, r = 2;
  const Eigen::MatrixXd x1 = gaussian(rng, n, 3), x2 = gaussian(rng, n, 2);
  const Eigen::MatrixXd a1 = gaussian(rng, r, 3), a2 = gaussian(rng, r, 2);
  const Eigen::VectorXd v1 = Eigen::Vector3d(0.5, 1.0, 2.0), v2 = Eigen::Vector2d(1.5, 0.8);
  const std::vector<LatentBlock> blocks{{&x1, &a1, &v1}, {&x2, &a2, &v2}};
  const auto c = latent_conditional(n, r, blocks);

  // Oracle: each row u has prior N(0, I) and observations x = Aᵀu + e.
  Eigen::MatrixXd At(5, r);
  At << a1.transpose(), a2.transpose();
  Eigen::VectorXd noise(5);
  noise << v1, v2;
  const Eigen::MatrixXd prec = At.transpose() * noise.cwiseInverse().asDiagonal() * At + Eigen::MatrixXd::Identity(r, r);
  const Eigen::MatrixXd cov = prec.inverse();
  CHECK((c.cov - cov).cwiseAbs().maxCoeff() < 1e-10);
  for (int i = 0; i < n; ++i) {
    Eigen::VectorXd xi(5);
    xi << x1.row(i).transpose(), x2.row(i).transpose();
    const Eigen::VectorXd mean = cov * At.transpose() * noise.cwiseInverse().asDiagonal() * xi;
    CHECK((c.mean.row(i).transpose() - mean).cwiseAbs().maxCoeff() < 1e-10);
  }
}

TEST_CASE("selection sweep keeps the spike consistent and the log-likelihood current") {
  Rng rng(28);
  const int n = 30, r = 3, p = 5;
  const Eigen::MatrixXd U = gaussian(rng, n, r);
  const Eigen::MatrixXd x = U.col(0) * Eigen::RowVectorXd::Ones(p) + gaussian(rng, n, p);
  ViewState v = ViewState::empty(r, p);
  MarginalLikelihoodCache cache(U, 1.0);
  const auto stats = view_statistics(U, x);
  for (int sweep = 0; sweep < 200; ++sweep) {
    gibbs_update_loadings(v, stats, cache, rng);
    const auto res = mh_update_selection(v, stats, cache, {0.3, 0.5}, false, rng);
    for (int j = 0; j < p; ++j) {
      for (int l = 0; l < r; ++l) {
        if (!v.gamma(l)) REQUIRE(v.eta(l, j) == 0);
        if (!(v.gamma(l) && v.eta(l, j))) REQUIRE(v.loadings(l, j) == 0.0);
      }
      Mask active(r);
      for (int l = 0; l < r; ++l) active(l) = v.gamma(l) && v.eta(l, j);
      REQUIRE(res.loglik(j) == doctest::Approx(marginal_loglik_feature(x.col(j), U, active, 1.0, 1.0)).epsilon(1e-8));
    }
  }
}

TEST_CASE("selection sweep visits configurations at posterior frequency") {
  Rng rng(29);
  const int n = 5, r = 2, p = 2;
  const Eigen::MatrixXd U = gaussian(rng, n, r);
  const Eigen::MatrixXd x = 0.8 * U.col(0) * Eigen::RowVectorXd::Ones(p) + gaussian(rng, n, p);
  const Eigen::VectorXd feat_var = Eigen::Vector2d(0.9, 1.3);
  const auto exact = oracle::enumerate_selection(x, U, feat_var, 1.0, 0.4, 0.5, false);
  ViewState v = ViewState::empty(r, p);
  v.feat_var = feat_var;
  MarginalLikelihoodCache cache(U, 1.0);
  const auto stats = view_statistics(U, x);
  std::map<std::uint64_t, double> freq;
  const int sweeps = 20000;
  for (int k = 0; k < sweeps; ++k) {
    mh_update_selection(v, stats, cache, {0.4, 0.5}, false, rng);
    freq[oracle::configuration_code(v.gamma, v.eta)] += 1.0 / sweeps;
  }
  double tv = 0;
  for (const auto& c : exact) tv += std::abs(c.prob - freq[oracle::configuration_code(c.gamma, c.eta)]);
  CHECK(0.5 * tv < 0.05);
}

TEST_CASE("outcome view keeps eta equal to gamma") {
  Rng rng(30);
  const Eigen::MatrixXd U = gaussian(rng, 12, 3);
  const Eigen::MatrixXd y = U.col(1) + gaussian(rng, 12, 1, 0.5);
  ViewState v = ViewState::empty(3, 1);
  MarginalLikelihoodCache cache(U, 1.0);
  const auto stats = view_statistics(U, y);
  for (int k = 0; k < 100; ++k) {
    mh_update_selection(v, stats, cache, {0.05, 0.5}, true, rng);
    for (int l = 0; l < 3; ++l) REQUIRE(v.eta(l, 0) == v.gamma(l));
  }
}

TEST_CASE("mismatched rows are rejected") {
  Rng rng(31);
  CHECK_THROWS_AS(view_statistics(gaussian(rng, 4, 2), gaussian(rng, 5, 1)), Error);
}
