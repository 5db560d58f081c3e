#include <doctest.h>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "ptlab/distributions.hpp"
#include "ptlab/error.hpp"
#include "ptlab/multiple_testing.hpp"
#include "ptlab/simulation.hpp"
#include "ptlab/wald.hpp"

using namespace ptlab;

TEST_CASE("chi-square cdf") {
  for (int k = 1; k <= 20; ++k) CHECK(chi2_cdf(0.0, k) == 0.0);
  CHECK(chi2_cdf(2.0 * std::log(2.0), 2) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(chi2_cdf(15.50731, 8) == doctest::Approx(0.95).epsilon(1e-5));
  CHECK_THROWS_AS(chi2_cdf(-1.0, 3), Error);
  CHECK_THROWS_AS(chi2_cdf(1.0, 0), Error);
  for (int k : {1, 2, 3, 8, 14, 31}) {
    double prev = 0.0;
    for (double x : {0.01, 0.5, 1.0, 3.0, 7.5, 15.0, 30.0, 60.0}) {
      const double c = chi2_cdf(x, k);
      CHECK(c >= prev);
      prev = c;
      // df = 1 has an integrable singularity at 0; use its erf form instead
      const double ref = k == 1 ? std::erf(std::sqrt(x / 2.0)) : oracle::chi2_cdf_quadrature(x, k);
      CHECK(c == doctest::Approx(ref).epsilon(1e-9));
      CHECK(chi2_cdf(x, k) + chi2_sf(x, k) == doctest::Approx(1.0).epsilon(1e-14));
    }
  }
}

TEST_CASE("chi-square quantile") {
  CHECK(chi2_quantile(0.99, 2) == doctest::Approx(-2.0 * std::log(0.01)).epsilon(1e-12));
  CHECK(chi2_quantile(0.95, 8) == doctest::Approx(oracle::chi2_quantile_quadrature(0.95, 8)).epsilon(1e-9));
  CHECK(std::abs(chi2_quantile(0.95, 8) - 15.50731) < 1e-5);
  for (int k : {1, 2, 5, 8, 14}) {
    CHECK(chi2_quantile(0.0, k) == 0.0);
    for (double p : {1e-6, 0.01, 0.3, 0.5, 0.95, 0.999, 1 - 1e-9}) {
      CHECK(chi2_cdf(chi2_quantile(p, k), k) == doctest::Approx(p).epsilon(1e-10).scale(1.0));
    }
  }
  CHECK_THROWS_AS(chi2_quantile(1.0, 2), Error);
  CHECK_THROWS_AS(chi2_quantile(-0.1, 2), Error);
}

TEST_CASE("normal quantile inverts the cdf") {
  for (double u : {1e-12, 1e-6, 0.01, 0.2, 0.5, 0.77, 0.999, 1 - 1e-10}) {
    CHECK(normal_cdf(normal_quantile(u)) == doctest::Approx(u).epsilon(1e-12));
  }
  CHECK(normal_quantile(0.975) == doctest::Approx(1.959963984540054).epsilon(1e-14));
}

TEST_CASE("engine-power multiple-testing table") {
  const std::vector<double> raw{0.000000, 0.000000, 0.373784, 0.036163, 0.004209, 0.000000, 0.000153};
  const std::vector<double> printed{0.000000, 0.000000, 0.373784, 0.072326, 0.012628, 0.000000, 0.000614};
  for (Adjustment m : {Adjustment::kHolm, Adjustment::kHochberg, Adjustment::kHommel}) {
    const auto adj = adjust_pvalues(raw, m);
    for (std::size_t i = 0; i < raw.size(); ++i) {
      // printed values are 6-decimal roundings; 1e-15 absorbs the binary representation
      CHECK(std::abs(adj[i] - printed[i]) <= 2e-6 + 1e-15);
    }
  }
}

TEST_CASE("single hypothesis is unadjusted") {
  for (Adjustment m : {Adjustment::kBonferroni, Adjustment::kHolm, Adjustment::kHochberg, Adjustment::kHommel}) {
    CHECK(adjust_pvalues(std::vector<double>{0.0314}, m)[0] == 0.0314);
  }
}

TEST_CASE("Hommel equals the Simes closure and adjustments are ordered") {
  std::mt19937_64 rng(131);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int rep = 0; rep < 300; ++rep) {
    const int k = 1 + rep % 6;
    std::vector<double> p(k);
    for (double& x : p) x = rep % 3 == 0 ? std::pow(u(rng), 4) : u(rng);
    if (rep % 5 == 0 && k > 1) p[1] = p[0];  // ties
    const auto hommel = adjust_pvalues(p, Adjustment::kHommel);
    const auto closure = oracle::hommel_closure(p);
    const auto holm = adjust_pvalues(p, Adjustment::kHolm);
    const auto hoch = adjust_pvalues(p, Adjustment::kHochberg);
    const auto bonf = adjust_pvalues(p, Adjustment::kBonferroni);
    for (int i = 0; i < k; ++i) {
      CHECK(hommel[i] == doctest::Approx(closure[i]).epsilon(1e-12));
      CHECK(bonf[i] >= holm[i] - 1e-15);
      CHECK(holm[i] >= hoch[i] - 1e-15);
      CHECK(hoch[i] >= hommel[i] - 1e-15);
      CHECK(hommel[i] >= p[i] - 1e-15);
      CHECK(bonf[i] <= 1.0);
    }
  }
}

TEST_CASE("adjustment input checks") {
  CHECK_THROWS_AS(adjust_pvalues(std::vector<double>{0.5, 1.2}, Adjustment::kHolm), Error);
  CHECK_THROWS_AS(adjust_pvalues(std::vector<double>{-0.01}, Adjustment::kHommel), Error);
  CHECK(parse_adjustment("hommel") == Adjustment::kHommel);
  CHECK_THROWS_AS(parse_adjustment("bh"), Error);
}

namespace {

// A FitResult carrying only what the Wald functions read.
FitResult synthetic_fit(const Vector& alpha, const Vector& beta, const Matrix& bias_info, int levels = 1) {
  FitResult fit;
  fit.theta_hat.mu_x = Vector::Zero(levels);
  fit.theta_hat.alpha = alpha;
  fit.theta_hat.beta = beta;
  fit.levels = levels;
  fit.converged = true;
  fit.bias.info = bias_info;
  fit.bias.inverse = bias_info.inverse();
  return fit;
}

FitResult real_fit(std::uint64_t seed, int replicas = 5) {
  TrueParameters truth = study_truth(Regime::kA, replicas);
  truth.theta.alpha << 0.05, 0.0, -0.04, 0.0;
  truth.theta.beta << 0.995, 1.0, 1.002, 1.0;
  return fit_em(simulate_dataset(truth, seed), truth.design);
}

}  // namespace

TEST_CASE("Wald statistics on hand-made inputs") {
  const FitResult null = synthetic_fit(Vector::Zero(1), Vector::Ones(1), Matrix::Identity(2, 2));
  CHECK(wald_global(null).statistic == 0.0);
  CHECK(wald_global(null).p_value == 1.0);
  CHECK(wald_individual(null, 1).statistic == 0.0);

  const FitResult f = synthetic_fit(Vector::Ones(1), Vector::Constant(1, 2.0), Matrix::Identity(2, 2));
  CHECK(wald_global(f).statistic == doctest::Approx(2.0));
  CHECK(wald_global(f).df == 2);

  const FitResult g = synthetic_fit(Vector::Ones(1), Vector::Ones(1), Matrix::Identity(2, 2));
  CHECK(wald_individual(g, 1).statistic == doctest::Approx(1.0));
  CHECK(wald_composite(g, Vector::Zero(2), Matrix::Identity(2, 2)).statistic == 0.0);
  CHECK_THROWS_AS(wald_individual(g, 0), Error);
  CHECK_THROWS_AS(wald_individual(g, 2), Error);
}

TEST_CASE("composite statistic against the dense product") {
  std::mt19937_64 rng(141);
  std::normal_distribution<double> z;
  for (int rep = 0; rep < 20; ++rep) {
    const int k = 6, r = 1 + rep % 5;
    Matrix a(k, k);
    for (int i = 0; i < k; ++i)
      for (int j = 0; j < k; ++j) a(i, j) = z(rng);
    const Matrix info = a * a.transpose() + Matrix::Identity(k, k);
    const FitResult f = synthetic_fit(Vector::Zero(3), Vector::Ones(3), info);
    Matrix H(k, r);
    Vector h(r);
    for (int i = 0; i < k; ++i)
      for (int j = 0; j < r; ++j) H(i, j) = z(rng);
    for (int j = 0; j < r; ++j) h[j] = z(rng);
    const Matrix inner = H.transpose() * oracle::adjugate_inverse(info) * H;
    const double expected = h.dot(oracle::adjugate_inverse(inner) * h);
    const WaldTest t = wald_composite(f, h, H);
    CHECK(t.statistic == doctest::Approx(expected).epsilon(1e-9));
    CHECK(t.df == r);
  }
  Matrix H = Matrix::Zero(6, 2);
  H(0, 0) = 1.0;
  H(0, 1) = 2.0;
  const FitResult f = synthetic_fit(Vector::Zero(3), Vector::Ones(3), Matrix::Identity(6, 6));
  try {
    wald_composite(f, Vector::Ones(2), H);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::kRankDeficient);
  }
}

TEST_CASE("composite statistic reduces to the global and per-lab forms") {
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    const FitResult fit = real_fit(seed);
    REQUIRE(fit.converged);
    const Contrast g = global_contrast(fit);
    const double qg = wald_global(fit).statistic;
    CHECK(wald_composite(fit, g.value, g.jacobian).statistic == doctest::Approx(qg).epsilon(1e-10));
    for (int lab = 1; lab < fit.labs(); ++lab) {
      const Contrast c = lab_contrast(fit, lab);
      CHECK(wald_composite(fit, c.value, c.jacobian).statistic ==
            doctest::Approx(wald_individual(fit, lab).statistic).epsilon(1e-10));
    }
  }
}

TEST_CASE("statistics are invariant under relabelling levels") {
  TrueParameters truth = study_truth(Regime::kB, 4);
  truth.theta.alpha[0] = 0.1;
  const Measurements y = simulate_dataset(truth, 99);
  const FitResult fit = fit_em(y, truth.design);
  const int m = truth.design.levels;
  std::vector<int> perm{3, 0, 4, 1, 2};
  std::vector<std::vector<Vector>> values(truth.design.labs, std::vector<Vector>(m));
  Vector s2x(m);
  Matrix s2(truth.design.labs, m);
  for (int j = 0; j < m; ++j) {
    s2x[j] = truth.design.sigma2_x[perm[j]];
    s2.col(j) = truth.design.sigma2.col(perm[j]);
    for (int i = 0; i < truth.design.labs; ++i) values[i][j] = y.cell(i, perm[j]);
  }
  const FitResult permuted =
      fit_em(Measurements(values), StudyDesign::make(truth.design.replicas, s2x, s2));
  CHECK(wald_global(permuted).statistic == doctest::Approx(wald_global(fit).statistic).epsilon(1e-8));
  for (int lab = 1; lab < 5; ++lab) {
    CHECK(wald_individual(permuted, lab).statistic ==
          doctest::Approx(wald_individual(fit, lab).statistic).epsilon(1e-8));
  }
}

TEST_CASE("report verdicts never reject above the raw level") {
  for (std::uint64_t seed = 10; seed < 30; ++seed) {
    const FitResult fit = real_fit(seed, 3);
    for (Adjustment m : {Adjustment::kBonferroni, Adjustment::kHolm, Adjustment::kHochberg, Adjustment::kHommel}) {
      const WaldReport r = wald_report(fit, m, 0.05);
      CHECK(r.global.df == 8);
      for (const LabVerdict& v : r.labs) {
        CHECK(v.adjusted(m) >= v.test.p_value - 1e-15);
        if (v.test.p_value > 0.05) CHECK_FALSE(v.reject);
        CHECK(v.reject == (v.adjusted(m) <= 0.05));
      }
    }
  }
}

TEST_CASE("ellipse geometry") {
  const FitResult circle = synthetic_fit(Vector::Constant(1, 0.3), Vector::Constant(1, 1.1), Matrix::Identity(2, 2));
  const EllipseSpec e = confidence_ellipse(circle, 1, 0.99, 1);
  CHECK(e.radius2 == doctest::Approx(-2.0 * std::log(0.01)));
  CHECK(e.boundary.size() >= 128);
  CHECK(e.boundary.front() == e.boundary.back());
  for (const auto& z : e.boundary) {
    CHECK((z - Eigen::Vector2d(0.3, 1.1)).norm() == doctest::Approx(std::sqrt(e.radius2)).epsilon(1e-12));
  }
  CHECK(confidence_ellipse(circle, 1, 0.99, 7).level == doctest::Approx(1.0 - 0.01 / 7.0));
  CHECK_THROWS_AS(confidence_ellipse(circle, 1, 1.0, 1), Error);
  CHECK_THROWS_AS(confidence_ellipse(circle, 1, 0.9, 0), Error);
}

TEST_CASE("ellipse boundary and containment agree with the per-lab statistic") {
  int inside = 0, outside = 0;
  for (std::uint64_t seed = 100; seed < 200; ++seed) {
    const FitResult fit = real_fit(seed, 3);
    for (int lab = 1; lab < fit.labs(); ++lab) {
      const EllipseSpec e = confidence_ellipse(fit, lab, 0.95, 4);
      for (std::size_t k = 0; k < e.boundary.size(); k += 37) {
        CHECK(e.mahalanobis2(e.boundary[k]) == doctest::Approx(e.radius2).epsilon(1e-8));
      }
      const bool covers = e.contains({0.0, 1.0});
      CHECK(covers == (wald_individual(fit, lab).statistic <= e.radius2));
      (covers ? inside : outside)++;
    }
  }
  CHECK(inside > 0);
  CHECK(outside > 0);
}
