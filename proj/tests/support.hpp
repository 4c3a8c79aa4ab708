#pragma once

#include <cmath>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "dispbias/fit.hpp"
#include "dispbias/model.hpp"
#include "dispbias/rng.hpp"
#include "dispbias/simulate.hpp"

namespace testing {

using namespace dispbias;

inline const nlohmann::json& oracles() {
  static const nlohmann::json j = [] {
    std::ifstream in(std::string(DISPBIAS_SOURCE_DIR) + "/tests/oracles/oracles.json");
    return nlohmann::json::parse(in);
  }();
  return j;
}

inline std::string source_path(const std::string& rel) {
  return std::string(DISPBIAS_SOURCE_DIR) + "/" + rel;
}

inline bool close_rel(double a, double b, double tol) {
  return std::abs(a - b) <= tol * std::max(1.0, std::abs(b));
}

/// √μ = b0 + b1 x1 + x2^b2, log φ = t0 + t1 x1 + x2^t2, reciprocal gamma.
inline ModelSpec nonlinear_model(FamilyPtr family = reciprocal_gamma_family(),
                                 Link mean_link = Link::sqrt()) {
  ModelSpec m;
  m.family = std::move(family);
  m.mean_link = mean_link;
  m.disp_link = Link::log();
  const std::vector<std::string> cov{"x1", "x2"};
  m.mean = parse_predictor("b0 + b1*x1 + x2^b2", {"b0", "b1", "b2"}, cov);
  m.disp = parse_predictor("t0 + t1*x1 + x2^t2", {"t0", "t1", "t2"}, cov);
  return m;
}

inline ModelSpec linear_model(FamilyPtr family, Link mean_link, int p = 2, int q = 2) {
  ModelSpec m;
  m.family = std::move(family);
  m.mean_link = mean_link;
  m.disp_link = Link::log();
  const std::vector<std::string> cov{"x1", "x2"};
  const char* mean[] = {"", "b0", "b0 + b1*x1", "b0 + b1*x1 + b2*x2"};
  const char* disp[] = {"", "t0", "t0 + t1*x2", "t0 + t1*x1 + t2*x2"};
  const std::vector<std::string> bp{"b0", "b1", "b2"};
  const std::vector<std::string> tp{"t0", "t1", "t2"};
  m.mean = parse_predictor(mean[p], {bp.begin(), bp.begin() + p}, cov);
  if (!m.family->fixed_phi()) m.disp = parse_predictor(disp[q], {tp.begin(), tp.begin() + q}, cov);
  return m;
}

/// Two U(0,1) covariates from a fixed stream; y left at zero.
inline Dataset uniform_design(int n, std::uint64_t seed) {
  Dataset d;
  d.names = {"x1", "x2"};
  d.x.resize(n, 2);
  d.y = VectorXd::Zero(n);
  Rng rng = make_stream(seed, 0, 99);
  for (int i = 0; i < n; ++i) {
    d.x(i, 0) = uniform_open(rng);
    d.x(i, 1) = uniform_open(rng);
  }
  return d;
}

inline void simulate_response(const ModelSpec& m, Dataset& d, const VectorXd& beta,
                              const VectorXd& theta, Rng& rng) {
  const DesignState s = design_build(m, d, beta, theta);
  for (Eigen::Index i = 0; i < d.y.size(); ++i) d.y(i) = m.family->sample(s.mu(i), s.phi(i), rng);
}

inline VectorXd vec(std::initializer_list<double> v) {
  VectorXd out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out(i++) = x;
  return out;
}

}  // namespace testing

namespace testing {

struct ScoreCase {
  std::string label;
  ModelSpec model;
  VectorXd beta;
  VectorXd theta;
};

/// Every samplable family under each of its usual links, with a linear and a
/// power-term predictor. Parameters keep μ well inside the link domain for
/// covariates in (0, 1).
inline std::vector<ScoreCase> score_cases() {
  struct FamilyLinks {
    FamilyPtr family;
    std::vector<std::pair<Link, double>> links;  // link and a central μ
  };
  const std::vector<FamilyLinks> table = {
      {normal_family(), {{Link::identity(), 1.0}, {Link::log(), 2.0}}},
      {poisson_family(), {{Link::log(), 3.0}, {Link::sqrt(), 4.0}, {Link::identity(), 5.0}}},
      {binomial_family(), {{Link::logit(), 0.4}, {Link::probit(), 0.6}, {Link::cloglog(), 0.3}}},
      {gamma_family(), {{Link::log(), 2.0}, {Link::reciprocal(), 0.5}, {Link::identity(), 3.0}}},
      {inverse_gaussian_family(), {{Link::log(), 1.5}, {Link::square_reciprocal(), 0.8}}},
      {von_mises_family(), {{Link::tangent(), 0.3}, {Link::identity(), -0.4}}},
      {reciprocal_gamma_family(), {{Link::sqrt(), 4.0}, {Link::log(), 1.5}}},
      {log_gamma_family(), {{Link::identity(), 0.7}}},
      {ghs_family(), {{Link::identity(), 0.5}}},
  };
  const std::vector<std::string> cov{"x1", "x2"};
  std::vector<ScoreCase> out;
  for (const auto& fl : table) {
    for (const auto& [link, mu0] : fl.links) {
      for (bool nonlinear : {false, true}) {
        ScoreCase c;
        c.label = fl.family->name() + "/" + link.name() + (nonlinear ? "/power" : "/linear");
        c.model.family = fl.family;
        c.model.mean_link = link;
        c.model.disp_link = Link::log();
        const double eta0 = link.apply(mu0);
        const double span = std::abs(eta0) > 0.2 ? 0.1 * std::abs(eta0) : 0.05;
        if (nonlinear) {
          c.model.mean = parse_predictor("b0 + b1*x1 + x2^b2", {"b0", "b1", "b2"}, cov);
          c.beta = vec({eta0 - 0.2 * span, span, 1.5});
          c.beta(0) -= 0.5;  // x2^b2 contributes up to 1
        } else {
          c.model.mean = parse_predictor("b0 + b1*x1 + b2*x2", {"b0", "b1", "b2"}, cov);
          c.beta = vec({eta0 - span, span, span});
        }
        if (!fl.family->fixed_phi()) {
          if (nonlinear) {
            c.model.disp = parse_predictor("t0 + t1*x1 + x2^t2", {"t0", "t1", "t2"}, cov);
            c.theta = vec({0.8, 0.4, 1.3});
          } else {
            c.model.disp = parse_predictor("t0 + t1*x2", {"t0", "t1"}, cov);
            c.theta = vec({0.8, 0.5});
          }
        } else {
          c.theta = VectorXd(0);
        }
        out.push_back(std::move(c));
      }
    }
  }
  return out;
}

/// Uniform design with responses drawn at (beta, theta).
inline Dataset simulated(const ModelSpec& m, const VectorXd& beta, const VectorXd& theta, int n,
                         std::uint64_t seed) {
  Dataset d = uniform_design(n, seed);
  Rng rng = make_stream(seed, 1, 1);
  simulate_response(m, d, beta, theta, rng);
  return d;
}

struct RandomBiasModel {
  std::string label;
  ModelSpec model;
  Dataset data;
  VectorXd beta;
  VectorXd theta;
};

/// Draws from score_cases() with parameters jittered by up to ±10% and
/// n ∈ [25, 60]; deterministic in seed.
inline std::vector<RandomBiasModel> random_bias_models(int count, std::uint64_t seed) {
  const std::vector<ScoreCase> cases = score_cases();
  Rng rng = make_stream(seed, 0, 7);
  std::vector<RandomBiasModel> out;
  for (int k = 0; k < count; ++k) {
    const ScoreCase& c = cases[static_cast<std::size_t>(k) % cases.size()];
    RandomBiasModel r;
    r.label = c.label;
    r.model = c.model;
    auto jitter = [&](const VectorXd& v) {
      VectorXd w = v;
      for (Eigen::Index j = 0; j < w.size(); ++j) w(j) *= 1.0 + 0.2 * (uniform_open(rng) - 0.5);
      return w;
    };
    r.beta = jitter(c.beta);
    r.theta = jitter(c.theta);
    const int n = 25 + static_cast<int>(uniform_open(rng) * 36);
    r.data = simulated(r.model, r.beta, r.theta, n, seed + static_cast<std::uint64_t>(k));
    out.push_back(std::move(r));
  }
  return out;
}

/// Gamma family, log links, μ = exp(b0 + b1 x1), φ = exp(t0 + t1 x2).
inline ModelSpec gamma_log_model() { return linear_model(gamma_family(), Link::log(), 2, 2); }
inline VectorXd gamma_log_beta() { return vec({0.5, 1.0}); }
inline VectorXd gamma_log_theta() { return vec({1.0, 0.5}); }

/// The reciprocal gamma power-term study: truth (0.5, 1, 2, 1, 2, 3), n = 20,
/// U(0,1) covariates from seed 1, coverage at 90%.
inline StudyConfig reference_study(int replications = 2000, int bootstrap_B = 200) {
  StudyConfig c;
  c.model = nonlinear_model();
  c.truth = vec({0.5, 1.0, 2.0, 1.0, 2.0, 3.0});
  c.n = 20;
  c.replications = replications;
  c.bootstrap_B = bootstrap_B;
  c.covariate_names = {"x1", "x2"};
  c.seed = 1;
  c.alphas = {0.10};
  return c;
}

/// Five-point central difference of a scalar function along coordinate j.
template <class F>
double central_difference(F&& f, VectorXd z, Eigen::Index j, double h) {
  const double z0 = z(j);
  auto at = [&](double s) {
    z(j) = z0 + s;
    return f(z);
  };
  return (-at(2 * h) + 8 * at(h) - 8 * at(-h) + at(-2 * h)) / (12 * h);
}

}  // namespace testing
