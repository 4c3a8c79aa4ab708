#include <doctest.h>

#include <cmath>
#include <numbers>

#include "dispbias/errors.hpp"
#include "dispbias/fit.hpp"
#include "dispbias/simulate.hpp"
#include "support.hpp"

using namespace dispbias;
using testing::vec;

using testing::simulated;

TEST_CASE("normal log-likelihood equals the Gaussian density sum") {
  const ModelSpec m = testing::linear_model(normal_family(), Link::identity(), 2, 2);
  Dataset d = testing::uniform_design(6, 3);
  d.y = vec({0.3, -1.2, 2.5, 0.9, 1.1, -0.4});
  const VectorXd beta = vec({0.2, 1.5});
  const VectorXd theta = vec({0.3, -0.7});
  double want = 0.0;
  for (int i = 0; i < 6; ++i) {
    const double mu = 0.2 + 1.5 * d.x(i, 0);
    const double var = 1.0 / std::exp(0.3 - 0.7 * d.x(i, 1));
    want += -0.5 * std::log(2 * std::numbers::pi * var) - (d.y(i) - mu) * (d.y(i) - mu) / (2 * var);
  }
  CHECK(loglik(m, d, beta, theta) == doctest::Approx(want).epsilon(1e-13));
}

TEST_CASE("score and observed information match finite differences") {
  for (const auto& c : testing::score_cases()) {
    INFO(c.label);
    const Dataset d = simulated(c.model, c.beta, c.theta, 30, 21);
    const auto p = c.beta.size();
    VectorXd z(p + c.theta.size());
    z << c.beta, c.theta;
    auto ll = [&](const VectorXd& v) { return loglik(c.model, d, v.head(p), v.tail(c.theta.size())); };
    const VectorXd u = score(c.model, d, c.beta, c.theta);
    DesignOptions o;
    o.hessians = true;
    const MatrixXd j = observed_information(c.model, d, design_build(c.model, d, c.beta, c.theta, o));
    for (Eigen::Index k = 0; k < z.size(); ++k) {
      const double fd = testing::central_difference(ll, z, k, 1e-4);
      CHECK(std::abs(u(k) - fd) <= 1e-6 * std::max(1.0, std::abs(fd)));
      auto uk = [&](const VectorXd& v) {
        return score(c.model, d, v.head(p), v.tail(c.theta.size()))(k);
      };
      for (Eigen::Index l = 0; l < z.size(); ++l) {
        const double fd2 = -testing::central_difference(uk, z, l, 1e-4);
        CHECK(std::abs(j(k, l) - fd2) <= 1e-5 * std::max(1.0, std::abs(fd2)));
      }
    }
  }
}

TEST_CASE("score has mean zero at the true parameters") {
  const ModelSpec m = testing::linear_model(gamma_family(), Link::log(), 2, 2);
  const VectorXd beta = vec({0.5, 1.0});
  const VectorXd theta = vec({1.0, -0.5});
  Dataset d = testing::uniform_design(30, 2);
  const int draws = 5000;
  VectorXd s = VectorXd::Zero(4), ss = VectorXd::Zero(4);
  Rng rng = make_stream(6, 0, 0);
  for (int r = 0; r < draws; ++r) {
    testing::simulate_response(m, d, beta, theta, rng);
    const VectorXd u = score(m, d, beta, theta);
    s += u;
    ss += u.cwiseProduct(u);
  }
  const VectorXd mean = s / draws;
  const VectorXd se = ((ss / draws - mean.cwiseProduct(mean)) / draws).cwiseSqrt();
  for (int k = 0; k < 4; ++k) CHECK(std::abs(mean(k)) < 4 * se(k));
}

TEST_CASE("consistency at n = 2000") {
  const ModelSpec m = testing::nonlinear_model(gamma_family(), Link::log());
  const VectorXd beta = vec({0.5, 1.0, 2.0});
  const VectorXd theta = vec({1.0, 2.0, 1.5});
  const Dataset d = simulated(m, beta, theta, 2000, 8);
  const FitResult f = fit_mle(m, d);
  REQUIRE(f.converged);
  CHECK(f.score_norm <= 1e-8);
  for (int k = 0; k < 3; ++k) {
    CHECK(std::abs(f.beta(k) - beta(k)) < 4 * std::sqrt(f.K_beta_inv(k, k)));
    CHECK(std::abs(f.theta(k) - theta(k)) < 4 * std::sqrt(f.K_theta_inv(k, k)));
  }
  for (std::size_t k = 1; k < f.trace.size(); ++k) CHECK(f.trace[k] >= f.trace[k - 1] - 1e-9);
}

TEST_CASE("update rules and schemes reach the same maximum") {
  const ModelSpec m = testing::linear_model(inverse_gaussian_family(), Link::log(), 3, 2);
  const Dataset d = simulated(m, vec({0.2, 0.5, -0.3}), vec({1.0, 0.8}), 80, 4);
  FitOptions fisher;
  fisher.step_rule = StepRule::fisher;
  FitOptions alternating;
  alternating.scheme = UpdateScheme::alternating;
  const FitResult a = fit_mle(m, d);
  const FitResult b = fit_mle(m, d, fisher);
  const FitResult c = fit_mle(m, d, alternating);
  REQUIRE(a.converged);
  REQUIRE(b.converged);
  REQUIRE(c.converged);
  CHECK((a.zeta() - b.zeta()).lpNorm<Eigen::Infinity>() < 1e-7);
  CHECK((a.zeta() - c.zeta()).lpNorm<Eigen::Infinity>() < 1e-7);
  // restarting at the optimum converges immediately
  const FitResult again = fit_mle(m, d, {}, StartValues{a.beta, a.theta});
  CHECK(again.iterations <= 1);
}

TEST_CASE("reciprocal gamma study design converges on at least 98% of replicates") {
  const ModelSpec m = testing::nonlinear_model();
  Dataset d = study_design(testing::reference_study());
  const VectorXd beta = vec({0.5, 1.0, 2.0});
  const VectorXd theta = vec({1.0, 2.0, 3.0});
  int ok = 0;
  const int reps = 2000;
  for (int r = 0; r < reps; ++r) {
    Rng rng = make_stream(77, static_cast<std::uint64_t>(r), 0);
    testing::simulate_response(m, d, beta, theta, rng);
    FitOptions o;
    o.keep_trace = false;
    if (fit_mle(m, d, o).converged) ++ok;
  }
  INFO("converged " << ok << " of " << reps);
  CHECK(ok >= 0.98 * reps);
}

TEST_CASE("Wald coverage at n = 500 is near nominal") {
  const ModelSpec m = testing::linear_model(gamma_family(), Link::log(), 2, 2);
  const VectorXd beta = vec({0.5, 1.0});
  const VectorXd theta = vec({1.0, -0.5});
  Dataset d = testing::uniform_design(500, 12);
  const int reps = 2000;
  std::vector<int> hits(4, 0);
  int used = 0;
  for (int r = 0; r < reps; ++r) {
    Rng rng = make_stream(13, static_cast<std::uint64_t>(r), 0);
    testing::simulate_response(m, d, beta, theta, rng);
    FitOptions o;
    o.keep_trace = false;
    const FitResult f = fit_mle(m, d, o);
    if (!f.converged) continue;
    ++used;
    const auto ci = wald_intervals(f, 0.10);
    const VectorXd truth = vec({0.5, 1.0, 1.0, -0.5});
    for (int k = 0; k < 4; ++k) hits[k] += ci[k].lower <= truth(k) && truth(k) <= ci[k].upper;
  }
  for (int k = 0; k < 4; ++k) {
    INFO("parameter " << k);
    CHECK(std::abs(static_cast<double>(hits[k]) / used - 0.90) <= 0.02);
  }
}

TEST_CASE("fit errors and statuses") {
  const ModelSpec m = testing::nonlinear_model();
  Dataset small = testing::uniform_design(5, 1);
  small.y.setConstant(1.0);
  CHECK_THROWS_AS(fit_mle(m, small), DimensionError);

  ModelSpec lin = testing::linear_model(gamma_family(), Link::log(), 3, 1);
  Dataset col = simulated(testing::linear_model(gamma_family(), Link::log(), 2, 1), vec({0.1, 0.2}),
                          vec({1.0}), 30, 3);
  col.x.col(1) = 3.0 * col.x.col(0);
  CHECK_THROWS_AS(fit_mle(lin, col), RankDeficientError);

  // an invalid start (negative √μ) falls back to the default start
  const Dataset d = simulated(m, vec({0.5, 1.0, 2.0}), vec({1.0, 2.0, 3.0}), 200, 5);
  const FitResult f = fit_mle(m, d, {}, StartValues{vec({-5.0, 0.0, 1.0}), vec({1.0, 2.0, 3.0})});
  CHECK(f.converged);

  // an exponent so large that its design column vanishes is caught up front
  CHECK_THROWS_AS(fit_mle(m, d, {}, StartValues{vec({0.5, 1.0, 2.0}), vec({1.0, 2.0, 900.0})}),
                  RankDeficientError);

  // nearly collinear dispersion covariates: the score vanishes, the information does not invert
  ModelSpec near = testing::linear_model(gamma_family(), Link::log(), 2, 3);
  Dataset nd = simulated(near, vec({0.5, 1.0}), vec({1.0, 0.5, 0.0}), 60, 9);
  Rng jitter = make_stream(9, 2, 0);
  for (Eigen::Index i = 0; i < nd.x.rows(); ++i) nd.x(i, 1) = nd.x(i, 0) + 1e-7 * uniform_open(jitter);
  const FitResult s = fit_mle(near, nd);
  CHECK_FALSE(s.converged);
  CHECK(s.status == FitStatus::singular_information);

  FitOptions tight;
  tight.max_iterations = 1;
  const FitResult t = fit_mle(m, d, tight);
  CHECK(t.status == FitStatus::max_iterations);
  CHECK(to_string(t.status) == "max-iterations");
}

TEST_CASE("Wald intervals") {
  const auto ci = wald_intervals(vec({1.0, -2.0}), vec({0.25, 4.0}), 0.05);
  CHECK(ci[0].lower == doctest::Approx(1.0 - 1.959963984540054 * 0.5));
  CHECK(ci[1].upper == doctest::Approx(-2.0 + 1.959963984540054 * 2.0));
  CHECK_THROWS_AS(wald_intervals(vec({1.0}), vec({1.0}), 1.5), std::invalid_argument);
}
