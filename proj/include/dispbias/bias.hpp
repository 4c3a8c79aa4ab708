#pragma once

#include <optional>

#include "dispbias/fit.hpp"
#include "dispbias/model.hpp"

namespace dispbias {

/// Diagonal auxiliary matrices stored as n-vectors, plus the inverse information.
struct BiasMatrices {
  DesignState design;  // with Hessian stacks
  VectorXd W_beta, W_theta;
  VectorXd M1, M2, M3;
  VectorXd T1, T2, S1, S2;
  VectorXd E, F;               // tr(X̃ᵢK^β), tr(Z̃ᵢK^θ)
  VectorXd Z_beta, Z_theta;    // diag(X̃K^βX̃ᵀ), diag(Z̃K^θZ̃ᵀ)
  MatrixXd K_beta_inv, K_theta_inv;
  std::vector<std::string> warnings;
};

BiasMatrices bias_matrices(const ModelSpec& model, const Dataset& data, const VectorXd& beta,
                           const VectorXd& theta);
BiasMatrices bias_matrices(const ModelSpec& model, const Dataset& data, const FitResult& fit);

struct BetaBias {
  VectorXd B;             // B1 + B2
  VectorXd B1;            // curvature-of-family part
  VectorXd B2;            // nonlinearity-of-predictor part
  VectorXd B_regression;  // weighted least-squares route
  double discrepancy = 0.0;  // max |B − B_regression|; NaN when the regression is singular
};

struct ThetaBias {
  VectorXd B;  // Q1 + Q2
  VectorXd Q1;
  VectorXd Q2;
  VectorXd B_regression;
  double discrepancy = 0.0;
};

BetaBias bias_beta(const BiasMatrices& m);
ThetaBias bias_theta(const BiasMatrices& m);

struct CorrectedParameters {
  VectorXd beta;
  VectorXd theta;
};

/// ζ̂ − B̂, applied once.
CorrectedParameters corrected_parameters(const FitResult& fit, const VectorXd& B_beta,
                                         const VectorXd& B_theta);

enum class BiasSource { analytic, parametric_bootstrap, nonparametric_bootstrap };
std::string to_string(BiasSource s);

struct MuPhiBias {
  VectorXd B_mu;
  VectorXd B_phi;
  VectorXd mu_tilde;
  VectorXd phi_tilde;
};

/// Per-observation biases of μ̂ and φ̂ propagated from the parameter biases.
/// Bootstrap sources take the (β, θ) bias estimate from boot_bias, which is
/// required for them.
MuPhiBias bias_mu_phi(const BiasMatrices& m, BiasSource source,
                      const std::optional<VectorXd>& boot_bias = std::nullopt);

struct BiasReport {
  BetaBias beta;
  ThetaBias theta;
  MuPhiBias mu_phi;
  CorrectedParameters corrected;
  VectorXd mu_hat;
  VectorXd phi_hat;
};

BiasReport bias_report(const ModelSpec& model, const Dataset& data, const FitResult& fit);

}  // namespace dispbias
