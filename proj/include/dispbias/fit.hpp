#pragma once

#include <optional>
#include <string>
#include <vector>

#include "dispbias/model.hpp"

namespace dispbias {

/// Diagonal blocks of the expected information; the β–θ block is identically zero.
struct Information {
  MatrixXd K_beta;   // X̃ᵀΦW_βX̃
  MatrixXd K_theta;  // Z̃ᵀW_θZ̃
};

double loglik(const ModelSpec& model, const Dataset& data, const VectorXd& beta,
              const VectorXd& theta);
double loglik(const ModelSpec& model, const Dataset& data, const DesignState& design);

/// (U_β, U_θ) stacked.
VectorXd score(const ModelSpec& model, const Dataset& data, const VectorXd& beta,
               const VectorXd& theta);
VectorXd score(const ModelSpec& model, const Dataset& data, const DesignState& design);

Information information(const ModelSpec& model, const Dataset& data, const VectorXd& beta,
                        const VectorXd& theta);
Information information(const ModelSpec& model, const DesignState& design);

/// Negative Hessian of the log-likelihood (observed information), full
/// (p+q)×(p+q) including the β–θ block. The design must carry Hessian stacks
/// for nonlinear predictors.
MatrixXd observed_information(const ModelSpec& model, const Dataset& data,
                              const DesignState& design);

/// Inverse of a symmetric matrix by Cholesky; falls back to an eigenvalue-clipped
/// pseudo-inverse and appends a warning when the matrix is not positive definite.
MatrixXd inverse_spd(const MatrixXd& m, std::vector<std::string>* warnings = nullptr);

/// singular_information: the information at the final point is singular after
/// unit-diagonal scaling, as when a power exponent has run off to infinity.
enum class FitStatus { converged, max_iterations, line_search_failed, singular_information };
enum class UpdateScheme { joint, alternating };
/// fisher: always K⁻¹U. newton_when_pd: the observed information replaces K
/// whenever it is positive definite, which restores fast local convergence
/// along weakly identified directions.
enum class StepRule { fisher, newton_when_pd };

std::string to_string(FitStatus s);

struct FitOptions {
  int max_iterations = 100;
  int max_halvings = 30;
  double score_tol = 1e-8;   // ‖U‖∞
  double step_tol = 1e-10;   // max |Δζ|/(|ζ| + 1)
  UpdateScheme scheme = UpdateScheme::joint;
  StepRule step_rule = StepRule::newton_when_pd;
  bool keep_trace = true;
};

struct StartValues {
  VectorXd beta;
  VectorXd theta;
};

struct FitResult {
  VectorXd beta;
  VectorXd theta;
  double loglik = 0.0;
  MatrixXd K_beta_inv;
  MatrixXd K_theta_inv;
  int iterations = 0;
  bool converged = false;
  FitStatus status = FitStatus::max_iterations;
  double score_norm = 0.0;
  std::vector<double> trace;  // log-likelihood after each accepted step, starting point first
  std::vector<std::string> warnings;

  VectorXd zeta() const;
};

/// Deterministic starting point: β by least squares of g₁(y) on the predictor
/// linearized with power exponents at 1, θ by scoring a constant dispersion.
StartValues default_start(const ModelSpec& model, const Dataset& data);

/// Fisher scoring with step-halving. Returns a non-converged result rather than
/// throwing when the iteration limit is hit or the line search stalls. Throws
/// DimensionError when n < p + q and RankDeficientError for a singular design
/// at the start. An invalid init falls back to default_start.
FitResult fit_mle(const ModelSpec& model, const Dataset& data, const FitOptions& options = {},
                  const std::optional<StartValues>& init = std::nullopt);

struct Interval {
  double lower;
  double upper;
};

/// estimate ± z_{1−α/2} √(inverse-information diagonal).
std::vector<Interval> wald_intervals(const VectorXd& estimate, const VectorXd& inv_info_diag,
                                     double alpha);
/// β then θ intervals at the fitted values.
std::vector<Interval> wald_intervals(const FitResult& fit, double alpha);

}  // namespace dispbias
