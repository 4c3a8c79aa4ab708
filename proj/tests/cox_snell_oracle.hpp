#pragma once

// Generic second-order bias b_s = K^{sr} K^{tu} (κ_rt^{(u)} − ½ κ_rtu) with every
// joint cumulant taken by quadrature over the response, using textbook
// log-densities differentiated by hand. Nothing here goes through the
// library's cumulant tables or the M-matrix decomposition.

#include <array>
#include <cmath>
#include <limits>
#include <vector>

#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/special_functions/polygamma.hpp>

#include "dispbias/model.hpp"

namespace testing::oracle {

using dispbias::MatrixXd;
using dispbias::VectorXd;

enum class Textbook { gamma, reciprocal_gamma };

// index order: m, p, mm, mp, pp, mmm, mmp, mpp, ppp
using Partials = std::array<double, 9>;

inline double log_density(Textbook f, double y, double mu, double phi) {
  switch (f) {
    case Textbook::gamma:  // shape φ, mean μ
      return phi * std::log(phi / mu) + (phi - 1) * std::log(y) - phi * y / mu - std::lgamma(phi);
    case Textbook::reciprocal_gamma:  // 1/Y ~ Gamma(shape φ, rate φμ)
      return phi * std::log(phi * mu) - (phi + 1) * std::log(y) - phi * mu / y - std::lgamma(phi);
  }
  return 0.0;
}

inline Partials partials(Textbook f, double y, double mu, double phi) {
  using boost::math::polygamma;
  const double dg = boost::math::digamma(phi);
  const double tg = boost::math::trigamma(phi);
  const double qg = polygamma(2, phi);
  const double lpp = 1 / phi - tg;
  const double lppp = -1 / (phi * phi) - qg;
  switch (f) {
    case Textbook::gamma:
      return {-phi / mu + phi * y / (mu * mu),
              std::log(phi) + 1 - std::log(mu) + std::log(y) - y / mu - dg,
              phi / (mu * mu) - 2 * phi * y / (mu * mu * mu),
              -1 / mu + y / (mu * mu),
              lpp,
              -2 * phi / (mu * mu * mu) + 6 * phi * y / (mu * mu * mu * mu),
              1 / (mu * mu) - 2 * y / (mu * mu * mu),
              0.0,
              lppp};
    case Textbook::reciprocal_gamma:
      return {phi / mu - phi / y,
              std::log(phi) + 1 + std::log(mu) - std::log(y) - mu / y - dg,
              -phi / (mu * mu),
              1 / mu - 1 / y,
              lpp,
              2 * phi / (mu * mu * mu),
              -1 / (mu * mu),
              0.0,
              lppp};
  }
  return {};
}

/// E[∂ log f] for every entry of Partials, by exp-sinh quadrature on (0, ∞).
inline Partials expected_partials(Textbook f, double mu, double phi) {
  boost::math::quadrature::exp_sinh<double> integrator;
  Partials out{};
  for (std::size_t k = 0; k < out.size(); ++k) {
    auto integrand = [&](double y) {
      const double d = std::exp(log_density(f, y, mu, phi));
      return d == 0.0 ? 0.0 : d * partials(f, y, mu, phi)[k];
    };
    out[k] = integrator.integrate(integrand, 0.0, std::numeric_limits<double>::infinity(), 1e-13);
  }
  return out;
}

// ∂(μᵢ, φᵢ)/∂ζ and second derivatives, in ζ = (β, θ) order.
struct Jet {
  Eigen::Matrix<double, 2, Eigen::Dynamic> d1;
  std::array<MatrixXd, 2> d2;
};

inline std::vector<Jet> jets(const dispbias::DesignState& s) {
  const Eigen::Index n = s.mu.size();
  const Eigen::Index p = s.Xtilde.cols();
  const Eigen::Index q = s.Ztilde.cols();
  std::vector<Jet> out(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) {
    Jet& j = out[static_cast<std::size_t>(i)];
    j.d1.setZero(2, p + q);
    j.d1.row(0).head(p) = s.dmu(i) * s.Xtilde.row(i);
    j.d1.row(1).tail(q) = s.dphi(i) * s.Ztilde.row(i);
    j.d2[0].setZero(p + q, p + q);
    j.d2[1].setZero(p + q, p + q);
    const auto row = static_cast<std::size_t>(i);
    j.d2[0].topLeftCorner(p, p) = s.d2mu(i) * s.Xtilde.row(i).transpose() * s.Xtilde.row(i);
    if (!s.Xhess.empty()) j.d2[0].topLeftCorner(p, p) += s.dmu(i) * s.Xhess[row];
    j.d2[1].bottomRightCorner(q, q) = s.d2phi(i) * s.Ztilde.row(i).transpose() * s.Ztilde.row(i);
    if (!s.Zhess.empty()) j.d2[1].bottomRightCorner(q, q) += s.dphi(i) * s.Zhess[row];
  }
  return out;
}

inline double second(const Partials& e, int a, int b) {
  if (a == 0 && b == 0) return e[2];
  if (a == 1 && b == 1) return e[4];
  return e[3];
}

inline double third(const Partials& e, int a, int b, int c) {
  const int phis = a + b + c;
  return e[static_cast<std::size_t>(5 + phis)];
}

/// κ_rt = E[∂²ℓ/∂ζ_r∂ζ_t].
inline MatrixXd kappa2(Textbook f, const dispbias::ModelSpec& model, const dispbias::Dataset& data,
                       const VectorXd& beta, const VectorXd& theta) {
  dispbias::DesignOptions o;
  o.hessians = true;
  const dispbias::DesignState s = dispbias::design_build(model, data, beta, theta, o);
  const std::vector<Jet> js = jets(s);
  const Eigen::Index dim = beta.size() + theta.size();
  MatrixXd k = MatrixXd::Zero(dim, dim);
  for (std::size_t i = 0; i < js.size(); ++i) {
    const Partials e = expected_partials(f, s.mu(static_cast<Eigen::Index>(i)), s.phi(static_cast<Eigen::Index>(i)));
    for (int a = 0; a < 2; ++a) {
      for (int b = 0; b < 2; ++b) k += second(e, a, b) * js[i].d1.row(a).transpose() * js[i].d1.row(b);
    }
  }
  return k;
}

/// The generic O(n⁻¹) bias of the joint MLE of (β, θ).
inline VectorXd cox_snell_bias(Textbook f, const dispbias::ModelSpec& model, const dispbias::Dataset& data,
                               const VectorXd& beta, const VectorXd& theta) {
  const Eigen::Index p = beta.size();
  const Eigen::Index dim = p + theta.size();
  VectorXd zeta(dim);
  zeta << beta, theta;
  auto kappa_at = [&](const VectorXd& z) { return kappa2(f, model, data, z.head(p), z.tail(dim - p)); };

  // κ_rt^{(u)} by a five-point stencil in ζ_u
  std::vector<MatrixXd> dk(static_cast<std::size_t>(dim));
  for (Eigen::Index u = 0; u < dim; ++u) {
    const double h = 1e-3 * std::max(1.0, std::abs(zeta(u)));
    auto at = [&](double s) {
      VectorXd z = zeta;
      z(u) += s;
      return kappa_at(z);
    };
    dk[static_cast<std::size_t>(u)] = (-at(2 * h) + 8 * at(h) - 8 * at(-h) + at(-2 * h)) / (12 * h);
  }

  dispbias::DesignOptions o;
  o.hessians = true;
  const dispbias::DesignState s = dispbias::design_build(model, data, beta, theta, o);
  const std::vector<Jet> js = jets(s);
  std::vector<MatrixXd> k3(static_cast<std::size_t>(dim), MatrixXd::Zero(dim, dim));
  MatrixXd k2 = MatrixXd::Zero(dim, dim);
  for (std::size_t i = 0; i < js.size(); ++i) {
    const auto ii = static_cast<Eigen::Index>(i);
    const Partials e = expected_partials(f, s.mu(ii), s.phi(ii));
    const Jet& j = js[i];
    for (int a = 0; a < 2; ++a) {
      for (int b = 0; b < 2; ++b) k2 += second(e, a, b) * j.d1.row(a).transpose() * j.d1.row(b);
    }
    for (Eigen::Index r = 0; r < dim; ++r) {
      for (Eigen::Index t = 0; t < dim; ++t) {
        for (Eigen::Index u = 0; u < dim; ++u) {
          double v = 0.0;
          for (int a = 0; a < 2; ++a) {
            for (int b = 0; b < 2; ++b) {
              for (int c = 0; c < 2; ++c) v += third(e, a, b, c) * j.d1(a, r) * j.d1(b, t) * j.d1(c, u);
              v += second(e, a, b) * (j.d2[static_cast<std::size_t>(a)](r, t) * j.d1(b, u) +
                                      j.d2[static_cast<std::size_t>(a)](r, u) * j.d1(b, t) +
                                      j.d2[static_cast<std::size_t>(a)](t, u) * j.d1(b, r));
            }
          }
          k3[static_cast<std::size_t>(u)](r, t) += v;
        }
      }
    }
  }
  const MatrixXd kinv = (-k2).inverse();
  VectorXd b = VectorXd::Zero(dim);
  for (Eigen::Index u = 0; u < dim; ++u) {
    const MatrixXd a = dk[static_cast<std::size_t>(u)] - 0.5 * k3[static_cast<std::size_t>(u)];
    // Σ_{r,t} K^{sr} K^{tu} a_rt
    b += kinv * a * kinv.col(u);
  }
  return b;
}

}  // namespace testing::oracle
