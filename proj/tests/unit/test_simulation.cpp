#include "bipmixed/error.hpp"
#include "bipmixed/simulation.hpp"

#include "fixtures.hpp"

#include <doctest.h>

#include <set>

using namespace bipmixed;

TEST_CASE("intra-view covariance has the block pattern") {
  const Eigen::MatrixXd c = gen_intra_view_cov(30, 20);
  CHECK(c.rows() == 30);
  CHECK(c(0, 0) == 1.0);
  CHECK(c(0, 1) == doctest::Approx(0.7));
  CHECK(c(1, 0) == doctest::Approx(0.7));
  CHECK(c(1, 2) == doctest::Approx(0.49));
  CHECK(c(10, 11) == doctest::Approx(0.7));
  CHECK(c(9, 10) == 0.0);
  CHECK(c(20, 21) == 0.0);
  CHECK(c(25, 25) == 1.0);
  CHECK((c - c.transpose()).isZero(0.0));
  Eigen::LLT<Eigen::MatrixXd> llt(c);
  CHECK(llt.info() == Eigen::Success);
  try {
    gen_intra_view_cov(50, 100);
    FAIL("expected BadDimension");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::BadDimension);
  }
}

TEST_CASE("loadings live on the signal block with doubled main features") {
  Rng rng(70);
  const auto a = gen_loadings(rng, 3, 4, 40, 20);
  REQUIRE(a.size() == 3);
  for (const auto& m : a) {
    CHECK(m.rows() == 4);
    CHECK(m.cols() == 40);
    for (int j = 0; j < 40; ++j) {
      for (int l = 0; l < 4; ++l) {
        const double v = std::abs(m(l, j));
        if (j >= 20) {
          CHECK(v == 0.0);
        } else if (j % 10 == 0) {
          CHECK(v >= 0.6);
          CHECK(v <= 1.0);
        } else {
          CHECK(v >= 0.3);
          CHECK(v <= 0.5);
        }
      }
    }
  }
}

TEST_CASE("generated dataset has the requested shape and labels") {
  const auto spec = fixture::small_spec();
  const auto d = gen_dataset(spec);
  CHECK(d.train.num_rows() == 40);
  CHECK(d.test.num_rows() == 40);
  CHECK(d.train.num_views() == 2);
  CHECK(d.train.views[0].cols() == 20);
  const auto htr = HierarchyIndex::build(d.train.site_label, d.train.family_label);
  const auto hte = HierarchyIndex::build(d.test.site_label, d.test.family_label);
  CHECK(htr.num_sites() == 4);
  CHECK(htr.num_families() == 20);
  for (const auto& f : hte.families()) CHECK(!htr.find_family(f.id));
  for (const auto& s : hte.sites()) CHECK(htr.find_site(s.id));
  CHECK(d.truth.xi.size() == 4);
  CHECK(d.truth.importance[0].size() == 20);
  int signal = 0;
  for (int v : d.truth.importance[1]) signal += v;
  CHECK(signal == 10);
}

TEST_CASE("the same seed gives the same data") {
  const auto a = gen_dataset(fixture::small_spec(2, 11));
  const auto b = gen_dataset(fixture::small_spec(2, 11));
  const auto c = gen_dataset(fixture::small_spec(2, 12));
  CHECK(a.train.views[0] == b.train.views[0]);
  CHECK(a.test.outcome == b.test.outcome);
  CHECK(a.train.views[0] != c.train.views[0]);
}

TEST_CASE("scenario one collapses the random effects onto the grand mean") {
  const auto spec = fixture::small_spec(1);
  const auto d = gen_dataset(spec);
  CHECK((d.truth.theta_train.array() == spec.mu).all());
  CHECK((d.truth.xi.array() == spec.mu).all());
}

TEST_CASE("outcome follows the generating equation") {
  auto spec = fixture::small_spec(3);
  spec.n_sites = 30;
  spec.families_per_site = 30;
  spec.sigma2 = 0.25;
  spec.n_covariates = 1;
  const auto d = gen_dataset(spec);
  const auto h = HierarchyIndex::build(d.train.site_label, d.train.family_label);
  const Eigen::VectorXd resid = d.train.outcome - d.truth.U_train * d.truth.alpha -
                                h.expand_family(d.truth.theta_train) - *d.train.covariates * d.truth.beta;
  const double var = (resid.array() - resid.mean()).square().sum() / (resid.size() - 1);
  CHECK(resid.mean() == doctest::Approx(0.0).epsilon(0.05).scale(1.0));
  CHECK(var == doctest::Approx(0.25).epsilon(0.1));
}

TEST_CASE("unknown scenario ids are rejected") {
  CHECK_THROWS_AS(ScenarioSpec::preset(4), Error);
  auto s = fixture::small_spec();
  s.n_signal = 25;
  CHECK_THROWS_AS(s.validate(), Error);
}
