#include "dispbias/bias.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "dispbias/errors.hpp"

namespace dispbias {

BiasMatrices bias_matrices(const ModelSpec& model, const Dataset& data, const VectorXd& beta,
                           const VectorXd& theta) {
  DesignOptions opt;
  opt.hessians = true;
  BiasMatrices m;
  m.design = design_build(model, data, beta, theta, opt);
  const DesignState& d = m.design;
  const Information info = information(model, d);
  m.K_beta_inv = inverse_spd(info.K_beta, &m.warnings);
  m.K_theta_inv = inverse_spd(info.K_theta, &m.warnings);

  const Eigen::Index n = d.mu.size();
  const Eigen::Index q = d.Ztilde.cols();
  for (VectorXd* v : {&m.W_beta, &m.W_theta, &m.M1, &m.M2, &m.M3, &m.E, &m.F, &m.Z_beta, &m.Z_theta}) {
    v->setZero(n);
  }
  m.T1 = d.dmu;
  m.S1 = d.d2mu;
  m.T2 = d.dphi;
  m.S2 = d.d2phi;
  const Family& fam = *model.family;
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto row = static_cast<std::size_t>(i);
    const CumulantEval c = fam.cumulants(d.mu(i), d.phi(i));
    const double t1 = d.dmu(i);
    const double t2 = d.dphi(i);
    m.W_beta(i) = -c.d2 * t1 * t1;
    m.M1(i) = 0.5 * ((2.0 * c.d2p - c.d3) * t1 * t1 * t1 + c.d2 * t1 * d.d2mu(i));
    m.Z_beta(i) = d.Xtilde.row(i) * m.K_beta_inv * d.Xtilde.row(i).transpose();
    if (!d.Xhess.empty()) m.E(i) = d.Xhess[row].cwiseProduct(m.K_beta_inv).sum();
    if (q > 0) {
      m.W_theta(i) = -c.alpha2 * t2 * t2;
      m.M2(i) = 0.5 * ((2.0 * c.alpha2p - c.alpha3) * t2 * t2 * t2 + c.alpha2 * t2 * d.d2phi(i));
      m.M3(i) = 0.5 * c.d2 * t1 * t1 * t2;
      m.Z_theta(i) = d.Ztilde.row(i) * m.K_theta_inv * d.Ztilde.row(i).transpose();
      if (!d.Zhess.empty()) m.F(i) = d.Zhess[row].cwiseProduct(m.K_theta_inv).sum();
    }
  }
  return m;
}

BiasMatrices bias_matrices(const ModelSpec& model, const Dataset& data, const FitResult& fit) {
  return bias_matrices(model, data, fit.beta, fit.theta);
}

namespace {

// Coefficients of the regression of ξ on the columns of X with weights w.
VectorXd weighted_ls(const MatrixXd& x, const VectorXd& xi, const VectorXd& w) {
  if (x.cols() == 0) return VectorXd(0);
  if ((w.array() <= 0.0).any()) {
    throw DomainError("non-positive regression weight in the bias regression");
  }
  const VectorXd sw = w.cwiseSqrt();
  const MatrixXd xw = sw.asDiagonal() * x;
  Eigen::ColPivHouseholderQR<MatrixXd> qr(xw);
  if (qr.rank() < x.cols()) throw RankDeficientError("singular weighted cross-product");
  return qr.solve(sw.cwiseProduct(xi));
}

// The regression route is a cross-check; a numerically singular regression
// leaves it undefined (NaN) instead of discarding the direct result.
void regression_check(const MatrixXd& x, const VectorXd& xi, const VectorXd& w, const VectorXd& direct,
                      VectorXd& coef, double& discrepancy) {
  try {
    coef = weighted_ls(x, xi, w);
    discrepancy = coef.size() ? (direct - coef).lpNorm<Eigen::Infinity>() : 0.0;
  } catch (const RankDeficientError&) {
    coef = VectorXd::Constant(x.cols(), std::numeric_limits<double>::quiet_NaN());
    discrepancy = std::numeric_limits<double>::quiet_NaN();
  }
}

}  // namespace

BetaBias bias_beta(const BiasMatrices& m) {
  const DesignState& d = m.design;
  const VectorXd w = d.phi.cwiseProduct(m.W_beta);
  BetaBias out;
  out.B1 = m.K_beta_inv * (d.Xtilde.transpose() * d.phi.cwiseProduct(m.M1.cwiseProduct(m.Z_beta)));
  out.B2 = -0.5 * (m.K_beta_inv * (d.Xtilde.transpose() * w.cwiseProduct(m.E)));
  out.B = out.B1 + out.B2;
  const VectorXd xi = m.M1.cwiseProduct(m.Z_beta).cwiseQuotient(m.W_beta) - 0.5 * m.E;
  regression_check(d.Xtilde, xi, w, out.B, out.B_regression, out.discrepancy);
  return out;
}

ThetaBias bias_theta(const BiasMatrices& m) {
  const DesignState& d = m.design;
  ThetaBias out;
  const Eigen::Index q = d.Ztilde.cols();
  if (q == 0) {
    out.B = out.Q1 = out.Q2 = out.B_regression = VectorXd(0);
    return out;
  }
  const VectorXd num = m.M2.cwiseProduct(m.Z_theta) - m.M3.cwiseProduct(m.Z_beta);
  out.Q1 = m.K_theta_inv * (d.Ztilde.transpose() * num);
  out.Q2 = -0.5 * (m.K_theta_inv * (d.Ztilde.transpose() * m.W_theta.cwiseProduct(m.F)));
  out.B = out.Q1 + out.Q2;
  const VectorXd xi = num.cwiseQuotient(m.W_theta) - 0.5 * m.F;
  regression_check(d.Ztilde, xi, m.W_theta, out.B, out.B_regression, out.discrepancy);
  return out;
}

CorrectedParameters corrected_parameters(const FitResult& fit, const VectorXd& B_beta,
                                         const VectorXd& B_theta) {
  if (B_beta.size() != fit.beta.size() || B_theta.size() != fit.theta.size()) {
    throw DimensionError("bias vector sizes do not match the fit");
  }
  return {fit.beta - B_beta, fit.theta - B_theta};
}

std::string to_string(BiasSource s) {
  switch (s) {
    case BiasSource::analytic: return "analytic";
    case BiasSource::parametric_bootstrap: return "parametric";
    case BiasSource::nonparametric_bootstrap: return "nonparametric";
  }
  return "unknown";
}

MuPhiBias bias_mu_phi(const BiasMatrices& m, BiasSource source,
                      const std::optional<VectorXd>& boot_bias) {
  const DesignState& d = m.design;
  const Eigen::Index p = d.Xtilde.cols();
  const Eigen::Index q = d.Ztilde.cols();
  VectorXd bb;
  VectorXd bt;
  if (source == BiasSource::analytic) {
    bb = bias_beta(m).B;
    bt = bias_theta(m).B;
  } else {
    if (!boot_bias) throw std::invalid_argument("bootstrap bias source needs a bootstrap estimate");
    if (boot_bias->size() != p + q) throw DimensionError("bootstrap bias has the wrong length");
    bb = boot_bias->head(p);
    bt = boot_bias->tail(q);
  }
  MuPhiBias out;
  out.B_mu = m.T1.cwiseProduct(d.Xtilde * bb + 0.5 * m.E) + 0.5 * m.S1.cwiseProduct(m.Z_beta);
  if (q > 0) {
    out.B_phi = m.T2.cwiseProduct(d.Ztilde * bt + 0.5 * m.F) + 0.5 * m.S2.cwiseProduct(m.Z_theta);
  } else {
    out.B_phi = VectorXd::Zero(d.mu.size());
  }
  out.mu_tilde = d.mu - out.B_mu;
  out.phi_tilde = d.phi - out.B_phi;
  return out;
}

BiasReport bias_report(const ModelSpec& model, const Dataset& data, const FitResult& fit) {
  const BiasMatrices m = bias_matrices(model, data, fit);
  BiasReport r;
  r.beta = bias_beta(m);
  r.theta = bias_theta(m);
  r.mu_phi = bias_mu_phi(m, BiasSource::analytic);
  r.corrected = corrected_parameters(fit, r.beta.B, r.theta.B);
  r.mu_hat = m.design.mu;
  r.phi_hat = m.design.phi;
  return r;
}

}  // namespace dispbias
