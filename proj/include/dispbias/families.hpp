#pragma once

#include <memory>
#include <optional>
#include <string>
#include <string_view>

#include "dispbias/links.hpp"
#include "dispbias/rng.hpp"

namespace dispbias {

enum class FamilyKind { exponential_dispersion, proper_dispersion, constant_cv };

/// Per-observation pieces of the log-density φ·t(y, μ) + a(φ, y).
struct LoglikTerms {
  double t;
  double tprime;  // ∂t/∂μ
  double a;
  double aprime;  // ∂a/∂φ
};

/// Higher derivatives used by the cumulant identities: E[t''] = d₂, E[t'''] = d₃,
/// E[a''] = α₂, E[a'''] = α₃.
struct HigherDerivatives {
  double t2;
  double t3;
  double a2;
  double a3;
};

/// Expected derivatives entering the information matrix and the bias formulas.
struct CumulantEval {
  double d2;
  double d3;
  double d2p;  // ∂d₂/∂μ
  double alpha2;
  double alpha3;
  double alpha2p;  // ∂α₂/∂φ
};

/// A dispersion-model family exp{φ t(y, μ) + a(φ, y)}.
///
/// Not every catalog entry supports every capability: some carry only the
/// expected-derivative columns needed by the bias formulas. Calls to an
/// unsupported capability throw UnsupportedError.
class Family {
 public:
  virtual ~Family() = default;

  virtual std::string name() const = 0;
  virtual FamilyKind kind() const = 0;
  virtual OpenInterval mu_domain() const = 0;

  /// Fixed precision (φ ≡ value) for families without a dispersion regression.
  virtual std::optional<double> fixed_phi() const { return std::nullopt; }

  virtual bool has_likelihood() const { return true; }
  virtual bool samplable() const { return has_likelihood(); }
  /// False when the α-cumulants are not available for this family.
  virtual bool has_dispersion_cumulants() const { return !fixed_phi().has_value(); }

  virtual bool in_support(double y) const = 0;

  /// φ t(y, μ) + a(φ, y).
  virtual double log_density(double y, double mu, double phi) const;
  virtual LoglikTerms loglik_terms(double y, double mu, double phi) const;
  virtual HigherDerivatives higher_derivatives(double y, double mu, double phi) const;
  virtual CumulantEval cumulants(double mu, double phi) const = 0;
  virtual double sample(double mu, double phi, Rng& rng) const;

  /// Moves y strictly inside the μ-domain, for link-scale starting values.
  double clamp_to_domain(double y) const;

 protected:
  void check_args(double y, double mu, double phi) const;
  void check_mu_phi(double mu, double phi) const;
};

using FamilyPtr = std::shared_ptr<const Family>;

FamilyPtr normal_family();
FamilyPtr poisson_family();
/// Bernoulli responses y ∈ {0, 1}; fixed φ = 1.
FamilyPtr binomial_family();
FamilyPtr gamma_family();
FamilyPtr inverse_gaussian_family();
FamilyPtr von_mises_family();
/// 1/Y ~ Gamma(shape φ, rate φμ), so d₂ = −μ⁻² as for the gamma family.
FamilyPtr reciprocal_gamma_family();
FamilyPtr log_gamma_family();
/// Reciprocal inverse Gaussian: expected-derivative columns only.
FamilyPtr reciprocal_inverse_gaussian_family();
/// Natural exponential family generated by the hyperbolic secant, V(μ) = 1 + μ², φ ≡ 1.
FamilyPtr ghs_family();
/// Tweedie family V(μ) = μᵖ. p ∈ {0, 1, 2, 3} delegates to normal, Poisson, gamma
/// and inverse Gaussian; other p carry only the mean cumulants with φ ≡ 1.
FamilyPtr power_variance_family(double p);
/// V(μ) = exp(bμ); mean cumulants only, φ ≡ 1.
FamilyPtr exponential_variance_family(double b);
/// Legacy negative binomial d-columns, kept verbatim even though d₂ uses 1 − μ
/// while d₃ uses 1 + μ. Not samplable, no likelihood.
FamilyPtr negative_binomial_as_published();
/// Known coefficient of variation c, φ ≡ 1.
FamilyPtr cv_normal_family(double c);
FamilyPtr cv_inverse_gaussian_family(double c);
FamilyPtr cv_lognormal_family(double c);
FamilyPtr cv_weibull_family(double c);

/// Parses configuration names such as "gamma", "power-variance(1.5)", "cv-normal(0.3)".
FamilyPtr make_family(std::string_view text);

}  // namespace dispbias
