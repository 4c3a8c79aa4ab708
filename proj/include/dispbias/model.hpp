#pragma once

#include <cstddef>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "dispbias/families.hpp"
#include "dispbias/links.hpp"

namespace dispbias {

using Eigen::MatrixXd;
using Eigen::VectorXd;

/// Observed responses with a named covariate table (one column per covariate).
struct Dataset {
  VectorXd y;
  MatrixXd x;
  std::vector<std::string> names;

  std::size_t n() const { return static_cast<std::size_t>(y.size()); }
  /// Column index of a named covariate, or -1.
  int column(std::string_view name) const;
  /// Rows selected by index, in order (duplicates allowed).
  Dataset subset(const std::vector<std::size_t>& rows) const;
};

struct Term {
  enum class Kind { intercept, linear, power, offset };
  Kind kind;
  int param = -1;      // parameter index, unused for offsets
  int covariate = -1;  // covariate column, unused for intercepts
};

/// Escape hatch for library callers: a C² predictor with hand-written derivatives.
class CustomPredictor {
 public:
  virtual ~CustomPredictor() = default;
  virtual std::size_t param_count() const = 0;
  virtual bool is_linear() const { return false; }
  /// Returns η for one covariate row; fills grad (size params) and, when hess is
  /// non-null, the params×params Hessian.
  virtual double eval(const Eigen::Ref<const Eigen::RowVectorXd>& x, const VectorXd& params,
                      Eigen::Ref<VectorXd> grad, MatrixXd* hess) const = 0;
};

/// Sum of intercept, linear (θ·x), power (x^θ) and offset (x) terms.
class Predictor {
 public:
  Predictor() = default;
  Predictor(std::vector<Term> terms, std::vector<std::string> param_names);
  Predictor(std::shared_ptr<const CustomPredictor> custom, std::vector<std::string> param_names);

  std::size_t param_count() const { return names_.size(); }
  const std::vector<std::string>& param_names() const { return names_; }
  const std::vector<Term>& terms() const { return terms_; }
  bool is_custom() const { return custom_ != nullptr; }
  bool is_linear() const;
  /// Index of the parameter carried by an intercept term, or -1.
  int intercept_param() const;

  /// η at covariate row i. grad must have param_count() entries. hess, when
  /// given, must be param_count()×param_count() and is overwritten.
  double eval(const MatrixXd& x, Eigen::Index row, const VectorXd& params,
              Eigen::Ref<VectorXd> grad, MatrixXd* hess) const;

  /// Human-readable form, e.g. "b0 + b1*x1 + x2^b2".
  std::string to_string(const std::vector<std::string>& covariate_names) const;

 private:
  std::vector<Term> terms_;
  std::vector<std::string> names_;
  std::shared_ptr<const CustomPredictor> custom_;
};

/// Parses "b0 + b1*x1 + x2^b2". Identifiers listed in params become parameters
/// (indexed in that order); the rest must be covariate names. Throws
/// std::invalid_argument naming the first unresolved identifier.
Predictor parse_predictor(std::string_view text, const std::vector<std::string>& params,
                          const std::vector<std::string>& covariates);

struct ModelSpec {
  FamilyPtr family;
  Link mean_link = Link::identity();
  Link disp_link = Link::log();
  Predictor mean;
  Predictor disp;

  std::size_t p() const { return mean.param_count(); }
  std::size_t q() const { return disp.param_count(); }
  /// Throws std::invalid_argument when the parts do not fit together.
  void validate() const;
};

struct DesignOptions {
  bool hessians = false;
  bool rank_check = false;
};

/// Everything the likelihood, information and bias formulas need at one ζ.
struct DesignState {
  MatrixXd Xtilde;  // n×p, ∂η₁/∂β
  MatrixXd Ztilde;  // n×q, ∂η₂/∂θ
  std::vector<MatrixXd> Xhess;  // filled only when hessians were requested
  std::vector<MatrixXd> Zhess;
  VectorXd eta1, eta2, mu, phi, dmu, d2mu, dphi, d2phi;
};

/// Throws DomainError (with the row) when a link or power term leaves its
/// domain, and RankDeficientError naming the block when rank_check is set.
DesignState design_build(const ModelSpec& model, const Dataset& data, const VectorXd& beta,
                         const VectorXd& theta, const DesignOptions& options = {});

/// Numerical rank via column-pivoted QR with threshold 1e-10 relative to the largest pivot.
Eigen::Index numerical_rank(const MatrixXd& m);

}  // namespace dispbias
