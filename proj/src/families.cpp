#include "dispbias/families.hpp"

#include <charconv>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "dispbias/errors.hpp"
#include "dispbias/specialfns.hpp"
#include "variates.hpp"

namespace dispbias {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kPi = std::numbers::pi;
const double kLogTwoPi = std::log(2.0 * kPi);

std::string fmt_param(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

}  // namespace

double Family::log_density(double y, double mu, double phi) const {
  const LoglikTerms lt = loglik_terms(y, mu, phi);
  return phi * lt.t + lt.a;
}

LoglikTerms Family::loglik_terms(double, double, double) const {
  throw UnsupportedError("family '" + name() + "' has no likelihood");
}

HigherDerivatives Family::higher_derivatives(double, double, double) const {
  throw UnsupportedError("family '" + name() + "' has no likelihood");
}

double Family::sample(double, double, Rng&) const {
  throw UnsupportedError("family '" + name() + "' is not samplable");
}

double Family::clamp_to_domain(double y) const {
  const OpenInterval dom = mu_domain();
  constexpr double nudge = 1.4901161193847656e-08;  // √ε
  if (y <= dom.lo) return dom.lo + nudge * std::max(1.0, std::abs(dom.lo));
  if (y >= dom.hi) return dom.hi - nudge * std::max(1.0, std::abs(dom.hi));
  return y;
}

void Family::check_mu_phi(double mu, double phi) const {
  if (!mu_domain().contains(mu)) {
    throw DomainError(name() + ": mu = " + std::to_string(mu) + " outside the family domain");
  }
  if (!(phi > 0.0) || !std::isfinite(phi)) {
    throw DomainError(name() + ": phi = " + std::to_string(phi) + " must be positive");
  }
}

void Family::check_args(double y, double mu, double phi) const {
  if (!in_support(y)) {
    throw DomainError(name() + ": y = " + std::to_string(y) + " outside the support");
  }
  check_mu_phi(mu, phi);
}

namespace {

// ---------------------------------------------------------------- normal

class NormalFamily final : public Family {
 public:
  std::string name() const override { return "normal"; }
  FamilyKind kind() const override { return FamilyKind::exponential_dispersion; }
  OpenInterval mu_domain() const override { return {-kInf, kInf}; }
  bool in_support(double y) const override { return std::isfinite(y); }

  // t = −(y − μ)²/2, a = ½ log φ − ½ log 2π
  LoglikTerms loglik_terms(double y, double mu, double phi) const override {
    check_args(y, mu, phi);
    const double r = y - mu;
    return {-0.5 * r * r, r, 0.5 * std::log(phi) - 0.5 * kLogTwoPi, 0.5 / phi};
  }
  HigherDerivatives higher_derivatives(double y, double mu, double phi) const override {
    check_args(y, mu, phi);
    return {-1.0, 0.0, -0.5 / (phi * phi), 1.0 / (phi * phi * phi)};
  }
  CumulantEval cumulants(double mu, double phi) const override {
    check_mu_phi(mu, phi);
    const double a3 = 1.0 / (phi * phi * phi);
    return {-1.0, 0.0, 0.0, -0.5 / (phi * phi), a3, a3};
  }
  double sample(double mu, double phi, Rng& rng) const override {
    check_mu_phi(mu, phi);
    return mu + standard_normal(rng) / std::sqrt(phi);
  }
};

// ---------------------------------------------------------------- poisson

class PoissonFamily final : public Family {
 public:
  std::string name() const override { return "poisson"; }
  FamilyKind kind() const override { return FamilyKind::exponential_dispersion; }
  OpenInterval mu_domain() const override { return {0.0, kInf}; }
  std::optional<double> fixed_phi() const override { return 1.0; }
  bool in_support(double y) const override {
    return y >= 0.0 && std::isfinite(y) && y == std::floor(y);
  }
  LoglikTerms loglik_terms(double y, double mu, double phi) const override {
    check_args(y, mu, phi);
    return {y * std::log(mu) - mu, y / mu - 1.0, -special::log_gamma(y + 1.0), 0.0};
  }
  HigherDerivatives higher_derivatives(double y, double mu, double phi) const override {
    check_args(y, mu, phi);
    return {-y / (mu * mu), 2.0 * y / (mu * mu * mu), 0.0, 0.0};
  }
  CumulantEval cumulants(double mu, double phi) const override {
    check_mu_phi(mu, phi);
    return {-1.0 / mu, 2.0 / (mu * mu), 1.0 / (mu * mu), 0.0, 0.0, 0.0};
  }
  double sample(double mu, double phi, Rng& rng) const override {
    check_mu_phi(mu, phi);
    return poisson_variate(mu, rng);
  }
};

// ---------------------------------------------------------------- binomial

class BinomialFamily final : public Family {
 public:
  std::string name() const override { return "binomial"; }
  FamilyKind kind() const override { return FamilyKind::exponential_dispersion; }
  OpenInterval mu_domain() const override { return {0.0, 1.0}; }
  std::optional<double> fixed_phi() const override { return 1.0; }
  bool in_support(double y) const override { return y >= 0.0 && y <= 1.0; }
  LoglikTerms loglik_terms(double y, double mu, double phi) const override {
    check_args(y, mu, phi);
    const double t = y * std::log(mu) + (1.0 - y) * std::log1p(-mu);
    return {t, y / mu - (1.0 - y) / (1.0 - mu), 0.0, 0.0};
  }
  HigherDerivatives higher_derivatives(double y, double mu, double phi) const override {
    check_args(y, mu, phi);
    const double q = 1.0 - mu;
    return {-y / (mu * mu) - (1.0 - y) / (q * q),
            2.0 * y / (mu * mu * mu) - 2.0 * (1.0 - y) / (q * q * q), 0.0, 0.0};
  }
  CumulantEval cumulants(double mu, double phi) const override {
    check_mu_phi(mu, phi);
    const double v = mu * (1.0 - mu);
    const double v1 = 1.0 - 2.0 * mu;
    return {-1.0 / v, 2.0 * v1 / (v * v), v1 / (v * v), 0.0, 0.0, 0.0};
  }
  double sample(double mu, double phi, Rng& rng) const override {
    check_mu_phi(mu, phi);
    return uniform_open(rng) < mu ? 1.0 : 0.0;
  }
};

// φ log φ − log Γ(φ) shared by the gamma-type families
struct GammaDispersion {
  static double a1(double phi) { return phi * std::log(phi) - special::log_gamma(phi); }
  // a₁(φ) − φ without the O(φ log φ) cancellation
  static double a1_shifted(double phi) {
    return 0.5 * std::log(phi) - 0.5 * kLogTwoPi - special::stirling_remainder(phi);
  }
  // log u − u + 1 for u = 1 + r
  static double log_u_minus_u(double r) { return std::log1p(r) - r; }
  static double a1p(double phi) { return std::log(phi) + 1.0 - special::digamma(phi); }
  static double a1pp(double phi) { return 1.0 / phi - special::trigamma(phi); }
  static double a1ppp(double phi) { return -1.0 / (phi * phi) - special::polygamma(2, phi); }
};

// ---------------------------------------------------------------- gamma

class GammaFamily final : public Family {
 public:
  std::string name() const override { return "gamma"; }
  FamilyKind kind() const override { return FamilyKind::exponential_dispersion; }
  OpenInterval mu_domain() const override { return {0.0, kInf}; }
  bool in_support(double y) const override { return y > 0.0 && std::isfinite(y); }

  // t = log(y/μ) − y/μ, a = φ log φ − log Γ(φ) − log y
  double log_density(double y, double mu, double phi) const override {
    check_args(y, mu, phi);
    return phi * GammaDispersion::log_u_minus_u((y - mu) / mu) + GammaDispersion::a1_shifted(phi) -
           std::log(y);
  }
  LoglikTerms loglik_terms(double y, double mu, double phi) const override {
    check_args(y, mu, phi);
    const double u = y / mu;
    return {std::log(u) - u, (u - 1.0) / mu, GammaDispersion::a1(phi) - std::log(y),
            GammaDispersion::a1p(phi)};
  }
  HigherDerivatives higher_derivatives(double y, double mu, double phi) const override {
    check_args(y, mu, phi);
    const double m2 = mu * mu;
    return {1.0 / m2 - 2.0 * y / (m2 * mu), -2.0 / (m2 * mu) + 6.0 * y / (m2 * m2),
            GammaDispersion::a1pp(phi), GammaDispersion::a1ppp(phi)};
  }
  CumulantEval cumulants(double mu, double phi) const override {
    check_mu_phi(mu, phi);
    const double m3 = mu * mu * mu;
    const double a3 = GammaDispersion::a1ppp(phi);
    return {-1.0 / (mu * mu), 4.0 / m3, 2.0 / m3, GammaDispersion::a1pp(phi), a3, a3};
  }
  double sample(double mu, double phi, Rng& rng) const override {
    check_mu_phi(mu, phi);
    return gamma_variate(phi, rng) * mu / phi;
  }
};

// ---------------------------------------------------------------- inverse Gaussian

class InverseGaussianFamily final : public Family {
 public:
  std::string name() const override { return "inverse-gaussian"; }
  FamilyKind kind() const override { return FamilyKind::exponential_dispersion; }
  OpenInterval mu_domain() const override { return {0.0, kInf}; }
  bool in_support(double y) const override { return y > 0.0 && std::isfinite(y); }

  // t = −(y − μ)²/(2μ²y), a = ½ log φ − ½ log(2π y³)
  LoglikTerms loglik_terms(double y, double mu, double phi) const override {
    check_args(y, mu, phi);
    const double r = y - mu;
    const double m2 = mu * mu;
    return {-r * r / (2.0 * m2 * y), y / (m2 * mu) - 1.0 / m2,
            0.5 * std::log(phi) - 0.5 * (kLogTwoPi + 3.0 * std::log(y)), 0.5 / phi};
  }
  HigherDerivatives higher_derivatives(double y, double mu, double phi) const override {
    check_args(y, mu, phi);
    const double m2 = mu * mu;
    const double m4 = m2 * m2;
    return {-3.0 * y / m4 + 2.0 / (m2 * mu), 12.0 * y / (m4 * mu) - 6.0 / m4,
            -0.5 / (phi * phi), 1.0 / (phi * phi * phi)};
  }
  CumulantEval cumulants(double mu, double phi) const override {
    check_mu_phi(mu, phi);
    const double m4 = mu * mu * mu * mu;
    const double a3 = 1.0 / (phi * phi * phi);
    return {-1.0 / (mu * mu * mu), 6.0 / m4, 3.0 / m4, -0.5 / (phi * phi), a3, a3};
  }
  double sample(double mu, double phi, Rng& rng) const override {
    check_mu_phi(mu, phi);
    return inverse_gaussian_variate(mu, phi, rng);
  }
};

// ---------------------------------------------------------------- von Mises

class VonMisesFamily final : public Family {
 public:
  std::string name() const override { return "von-mises"; }
  FamilyKind kind() const override { return FamilyKind::proper_dispersion; }
  OpenInterval mu_domain() const override { return {-kPi, kPi}; }
  bool in_support(double y) const override { return y >= -kPi && y <= kPi; }

  // t = cos(y − μ), a = −log(2π I₀(φ))
  double log_density(double y, double mu, double phi) const override {
    check_args(y, mu, phi);
    return phi * std::cos(y - mu) - kLogTwoPi - special::log_bessel_i0(phi);
  }
  LoglikTerms loglik_terms(double y, double mu, double phi) const override {
    check_args(y, mu, phi);
    const double r = special::bessel_ratio(phi).r;
    return {std::cos(y - mu), std::sin(y - mu), -kLogTwoPi - special::log_bessel_i0(phi), -r};
  }
  HigherDerivatives higher_derivatives(double y, double mu, double phi) const override {
    check_args(y, mu, phi);
    const auto br = special::bessel_ratio(phi);
    return {-std::cos(y - mu), -std::sin(y - mu), -br.r1, -br.r2};
  }
  CumulantEval cumulants(double mu, double phi) const override {
    check_mu_phi(mu, phi);
    const auto br = special::bessel_ratio(phi);
    return {-br.r, 0.0, 0.0, -br.r1, -br.r2, -br.r2};
  }
  double sample(double mu, double phi, Rng& rng) const override {
    check_mu_phi(mu, phi);
    return von_mises_variate(mu, phi, rng);
  }
};

// ---------------------------------------------------------------- reciprocal gamma

class ReciprocalGammaFamily final : public Family {
 public:
  std::string name() const override { return "reciprocal-gamma"; }
  FamilyKind kind() const override { return FamilyKind::proper_dispersion; }
  OpenInterval mu_domain() const override { return {0.0, kInf}; }
  bool in_support(double y) const override { return y > 0.0 && std::isfinite(y); }

  // t = log(μ/y) − μ/y, a = φ log φ − log Γ(φ) − log y
  double log_density(double y, double mu, double phi) const override {
    check_args(y, mu, phi);
    return phi * GammaDispersion::log_u_minus_u((mu - y) / y) + GammaDispersion::a1_shifted(phi) -
           std::log(y);
  }
  LoglikTerms loglik_terms(double y, double mu, double phi) const override {
    check_args(y, mu, phi);
    const double u = mu / y;
    return {std::log(u) - u, 1.0 / mu - 1.0 / y, GammaDispersion::a1(phi) - std::log(y),
            GammaDispersion::a1p(phi)};
  }
  HigherDerivatives higher_derivatives(double y, double mu, double phi) const override {
    check_args(y, mu, phi);
    return {-1.0 / (mu * mu), 2.0 / (mu * mu * mu), GammaDispersion::a1pp(phi),
            GammaDispersion::a1ppp(phi)};
  }
  CumulantEval cumulants(double mu, double phi) const override {
    check_mu_phi(mu, phi);
    const double m3 = mu * mu * mu;
    const double a3 = GammaDispersion::a1ppp(phi);
    return {-1.0 / (mu * mu), 2.0 / m3, 2.0 / m3, GammaDispersion::a1pp(phi), a3, a3};
  }
  double sample(double mu, double phi, Rng& rng) const override {
    check_mu_phi(mu, phi);
    // 1/Y ~ Gamma(shape φ, rate φμ)
    return phi * mu / gamma_variate(phi, rng);
  }
};

// ---------------------------------------------------------------- log-gamma

class LogGammaFamily final : public Family {
 public:
  std::string name() const override { return "log-gamma"; }
  FamilyKind kind() const override { return FamilyKind::proper_dispersion; }
  OpenInterval mu_domain() const override { return {-kInf, kInf}; }
  bool in_support(double y) const override { return std::isfinite(y); }

  // t = (y − μ) − e^{y−μ}, a = φ log φ − log Γ(φ)
  double log_density(double y, double mu, double phi) const override {
    check_args(y, mu, phi);
    const double w = y - mu;
    return -phi * (std::expm1(w) - w) + GammaDispersion::a1_shifted(phi);
  }
  LoglikTerms loglik_terms(double y, double mu, double phi) const override {
    check_args(y, mu, phi);
    const double w = y - mu;
    const double e = std::exp(w);
    return {w - e, e - 1.0, GammaDispersion::a1(phi), GammaDispersion::a1p(phi)};
  }
  HigherDerivatives higher_derivatives(double y, double mu, double phi) const override {
    check_args(y, mu, phi);
    const double e = std::exp(y - mu);
    return {-e, e, GammaDispersion::a1pp(phi), GammaDispersion::a1ppp(phi)};
  }
  CumulantEval cumulants(double mu, double phi) const override {
    check_mu_phi(mu, phi);
    const double a3 = GammaDispersion::a1ppp(phi);
    return {-1.0, 1.0, 0.0, GammaDispersion::a1pp(phi), a3, a3};
  }
  double sample(double mu, double phi, Rng& rng) const override {
    check_mu_phi(mu, phi);
    return mu + std::log(gamma_variate(phi, rng) / phi);
  }
};

// ---------------------------------------------------------------- reciprocal inverse Gaussian

class ReciprocalInverseGaussianFamily final : public Family {
 public:
  std::string name() const override { return "reciprocal-inverse-gaussian"; }
  FamilyKind kind() const override { return FamilyKind::proper_dispersion; }
  OpenInterval mu_domain() const override { return {0.0, kInf}; }
  bool has_likelihood() const override { return false; }
  bool in_support(double y) const override { return y > 0.0 && std::isfinite(y); }
  CumulantEval cumulants(double mu, double phi) const override {
    check_mu_phi(mu, phi);
    const double a3 = 1.0 / (phi * phi * phi);
    return {-1.0 / mu, 0.0, 1.0 / (mu * mu), -0.5 / (phi * phi), a3, a3};
  }
};

// ---------------------------------------------------------------- GHS

class GhsFamily final : public Family {
 public:
  std::string name() const override { return "ghs"; }
  FamilyKind kind() const override { return FamilyKind::exponential_dispersion; }
  OpenInterval mu_domain() const override { return {-kInf, kInf}; }
  std::optional<double> fixed_phi() const override { return 1.0; }
  bool in_support(double y) const override { return std::isfinite(y); }

  // θ = arctan μ, t = yθ − ½ log(1 + μ²), a = log(½ sech(πy/2))
  LoglikTerms loglik_terms(double y, double mu, double phi) const override {
    check_args(y, mu, phi);
    const double v = 1.0 + mu * mu;
    const double x = std::abs(0.5 * kPi * y);
    const double log_cosh = x + std::log1p(std::exp(-2.0 * x)) - std::numbers::ln2;
    return {y * std::atan(mu) - 0.5 * std::log(v), (y - mu) / v, -std::numbers::ln2 - log_cosh,
            0.0};
  }
  HigherDerivatives higher_derivatives(double y, double mu, double phi) const override {
    check_args(y, mu, phi);
    const double v = 1.0 + mu * mu;
    const double r = y - mu;
    // t' = r/v, t'' = −1/v − 2μr/v², t''' = 4μ/v² − 2r/v² + 8μ²r/v³
    return {-1.0 / v - 2.0 * mu * r / (v * v),
            4.0 * mu / (v * v) - 2.0 * r / (v * v) + 8.0 * mu * mu * r / (v * v * v), 0.0, 0.0};
  }
  CumulantEval cumulants(double mu, double phi) const override {
    check_mu_phi(mu, phi);
    const double v = 1.0 + mu * mu;
    return {-1.0 / v, 4.0 * mu / (v * v), 2.0 * mu / (v * v), 0.0, 0.0, 0.0};
  }
  double sample(double mu, double phi, Rng& rng) const override {
    check_mu_phi(mu, phi);
    return ghs_variate(std::atan(mu), rng);
  }
};

// ---------------------------------------------------------------- mean-cumulant-only families

class PowerVarianceCumulants final : public Family {
 public:
  explicit PowerVarianceCumulants(double p) : p_(p) {}
  std::string name() const override { return "power-variance(" + fmt_param(p_) + ")"; }
  FamilyKind kind() const override { return FamilyKind::exponential_dispersion; }
  OpenInterval mu_domain() const override { return {0.0, kInf}; }
  std::optional<double> fixed_phi() const override { return 1.0; }
  bool has_likelihood() const override { return false; }
  bool in_support(double y) const override { return std::isfinite(y); }
  CumulantEval cumulants(double mu, double phi) const override {
    check_mu_phi(mu, phi);
    const double base = std::pow(mu, -p_);
    const double next = p_ * std::pow(mu, -(p_ + 1.0));
    return {-base, 2.0 * next, next, 0.0, 0.0, 0.0};
  }

 private:
  double p_;
};

class ExponentialVarianceCumulants final : public Family {
 public:
  explicit ExponentialVarianceCumulants(double b) : b_(b) {}
  std::string name() const override { return "exponential-variance(" + fmt_param(b_) + ")"; }
  FamilyKind kind() const override { return FamilyKind::exponential_dispersion; }
  OpenInterval mu_domain() const override { return {-kInf, kInf}; }
  std::optional<double> fixed_phi() const override { return 1.0; }
  bool has_likelihood() const override { return false; }
  bool in_support(double y) const override { return std::isfinite(y); }
  CumulantEval cumulants(double mu, double phi) const override {
    check_mu_phi(mu, phi);
    const double e = std::exp(-b_ * mu);
    return {-e, 2.0 * b_ * e, b_ * e, 0.0, 0.0, 0.0};
  }

 private:
  double b_;
};

class NegativeBinomialAsPublished final : public Family {
 public:
  std::string name() const override { return "negative-binomial(as-published)"; }
  FamilyKind kind() const override { return FamilyKind::exponential_dispersion; }
  OpenInterval mu_domain() const override { return {0.0, 1.0}; }
  std::optional<double> fixed_phi() const override { return 1.0; }
  bool has_likelihood() const override { return false; }
  bool in_support(double y) const override { return y >= 0.0 && std::isfinite(y); }
  CumulantEval cumulants(double mu, double phi) const override {
    check_mu_phi(mu, phi);
    const double q = 1.0 - mu;
    const double d2 = 1.0 / mu - 1.0 / q;
    const double d2p = -(1.0 / (mu * mu) - 1.0 / (q * q));
    const double d3 = 2.0 / ((1.0 + mu) * (1.0 + mu)) - 2.0 / (mu * mu);
    return {d2, d3, d2p, 0.0, 0.0, 0.0};
  }
};

// ---------------------------------------------------------------- constant coefficient of variation

class ConstantCvFamily : public Family {
 public:
  explicit ConstantCvFamily(double c) : c_(c) {
    if (!(c > 0.0) || !std::isfinite(c)) {
      throw std::invalid_argument("coefficient of variation must be positive");
    }
  }
  FamilyKind kind() const override { return FamilyKind::constant_cv; }
  OpenInterval mu_domain() const override { return {0.0, kInf}; }
  std::optional<double> fixed_phi() const override { return 1.0; }
  double cv() const { return c_; }

  virtual double k2() const = 0;
  virtual double k3() const = 0;

  // d₂ = −k₂μ⁻², d₃ = k₃μ⁻³, d₂' = 2k₂μ⁻³
  CumulantEval cumulants(double mu, double phi) const override {
    check_mu_phi(mu, phi);
    const double m3 = mu * mu * mu;
    return {-k2() / (mu * mu), k3() / m3, 2.0 * k2() / m3, 0.0, 0.0, 0.0};
  }

 protected:
  double c_;
};

class CvNormalFamily final : public ConstantCvFamily {
 public:
  using ConstantCvFamily::ConstantCvFamily;
  std::string name() const override { return "cv-normal(" + fmt_param(c_) + ")"; }
  bool in_support(double y) const override { return std::isfinite(y); }
  double k2() const override { return (1.0 + 2.0 * c_ * c_) / (c_ * c_); }
  double k3() const override { return (6.0 + 10.0 * c_ * c_) / (c_ * c_); }

  // t = −log μ − (y − μ)²/(2c²μ²), a = −log c − ½ log 2π
  LoglikTerms loglik_terms(double y, double mu, double phi) const override {
    check_args(y, mu, phi);
    const double c2 = c_ * c_;
    const double r = y - mu;
    const double m2 = mu * mu;
    return {-std::log(mu) - r * r / (2.0 * c2 * m2), -1.0 / mu + y * r / (c2 * m2 * mu),
            -std::log(c_) - 0.5 * kLogTwoPi, 0.0};
  }
  HigherDerivatives higher_derivatives(double y, double mu, double phi) const override {
    check_args(y, mu, phi);
    const double c2 = c_ * c_;
    const double m2 = mu * mu;
    const double m3 = m2 * mu;
    return {1.0 / m2 + (-3.0 * y * y / (m2 * m2) + 2.0 * y / m3) / c2,
            -2.0 / m3 + (12.0 * y * y / (m3 * m2) - 6.0 * y / (m2 * m2)) / c2, 0.0, 0.0};
  }
  double sample(double mu, double phi, Rng& rng) const override {
    check_mu_phi(mu, phi);
    return mu + c_ * mu * standard_normal(rng);
  }
};

class CvInverseGaussianFamily final : public ConstantCvFamily {
 public:
  using ConstantCvFamily::ConstantCvFamily;
  std::string name() const override { return "cv-inverse-gaussian(" + fmt_param(c_) + ")"; }
  bool in_support(double y) const override { return y > 0.0 && std::isfinite(y); }
  // Expected information of IG(μ, λ = μ/c²) in μ: (c⁻² + ½)μ⁻².
  double k2() const override { return (2.0 + c_ * c_) / (2.0 * c_ * c_); }
  double k3() const override { return (3.0 + c_ * c_) / (c_ * c_); }

  // t = ½ log μ − (y − μ)²/(2c²μy), a = −log c − ½ log(2π y³)
  LoglikTerms loglik_terms(double y, double mu, double phi) const override {
    check_args(y, mu, phi);
    const double c2 = c_ * c_;
    const double r = y - mu;
    return {0.5 * std::log(mu) - r * r / (2.0 * c2 * mu * y),
            0.5 / mu + (y / (mu * mu) - 1.0 / y) / (2.0 * c2),
            -std::log(c_) - 0.5 * (kLogTwoPi + 3.0 * std::log(y)), 0.0};
  }
  HigherDerivatives higher_derivatives(double y, double mu, double phi) const override {
    check_args(y, mu, phi);
    const double c2 = c_ * c_;
    const double m2 = mu * mu;
    return {-0.5 / m2 - y / (c2 * m2 * mu), 1.0 / (m2 * mu) + 3.0 * y / (c2 * m2 * m2), 0.0,
            0.0};
  }
  double sample(double mu, double phi, Rng& rng) const override {
    check_mu_phi(mu, phi);
    return inverse_gaussian_variate(mu, mu / (c_ * c_), rng);
  }
};

class CvLognormalFamily final : public ConstantCvFamily {
 public:
  explicit CvLognormalFamily(double c) : ConstantCvFamily(c), s2_(std::log1p(c * c)) {}
  std::string name() const override { return "cv-lognormal(" + fmt_param(c_) + ")"; }
  bool in_support(double y) const override { return y > 0.0 && std::isfinite(y); }
  double k2() const override { return 1.0 / s2_; }
  double k3() const override { return 3.0 / s2_; }

  // w = log y − log μ + s²/2, t = −w²/(2s²), a = −log y − ½ log(2π s²)
  LoglikTerms loglik_terms(double y, double mu, double phi) const override {
    check_args(y, mu, phi);
    const double w = std::log(y / mu) + 0.5 * s2_;
    return {-w * w / (2.0 * s2_), w / (s2_ * mu), -std::log(y) - 0.5 * (kLogTwoPi + std::log(s2_)),
            0.0};
  }
  HigherDerivatives higher_derivatives(double y, double mu, double phi) const override {
    check_args(y, mu, phi);
    const double w = std::log(y / mu) + 0.5 * s2_;
    return {-(1.0 + w) / (s2_ * mu * mu), (3.0 + 2.0 * w) / (s2_ * mu * mu * mu), 0.0, 0.0};
  }
  double sample(double mu, double phi, Rng& rng) const override {
    check_mu_phi(mu, phi);
    return mu * std::exp(-0.5 * s2_ + std::sqrt(s2_) * standard_normal(rng));
  }

 private:
  double s2_;
};

class CvWeibullFamily final : public ConstantCvFamily {
 public:
  explicit CvWeibullFamily(double c)
      : ConstantCvFamily(c), log_g_(special::log_gamma(1.0 + 1.0 / c)) {}
  std::string name() const override { return "cv-weibull(" + fmt_param(c_) + ")"; }
  bool in_support(double y) const override { return y > 0.0 && std::isfinite(y); }
  double k2() const override { return c_ * c_; }
  double k3() const override { return c_ * c_ * (c_ + 3.0); }

  // scale λ = μ/Γ(1 + 1/c), v = (y/λ)^c, t = −c log λ − v, a = log c + (c − 1) log y
  LoglikTerms loglik_terms(double y, double mu, double phi) const override {
    check_args(y, mu, phi);
    const double log_lambda = std::log(mu) - log_g_;
    const double v = std::exp(c_ * (std::log(y) - log_lambda));
    return {-c_ * log_lambda - v, c_ * (v - 1.0) / mu, std::log(c_) + (c_ - 1.0) * std::log(y),
            0.0};
  }
  HigherDerivatives higher_derivatives(double y, double mu, double phi) const override {
    check_args(y, mu, phi);
    const double v = std::exp(c_ * (std::log(y) - std::log(mu) + log_g_));
    const double m2 = mu * mu;
    return {c_ / m2 - c_ * (1.0 + c_) * v / m2,
            (-2.0 * c_ + c_ * (1.0 + c_) * (2.0 + c_) * v) / (m2 * mu), 0.0, 0.0};
  }
  double sample(double mu, double phi, Rng& rng) const override {
    check_mu_phi(mu, phi);
    const double lambda = mu * std::exp(-log_g_);
    return lambda * std::pow(-std::log(uniform_open(rng)), 1.0 / c_);
  }

 private:
  double log_g_;
};

double parse_family_param(std::string_view text, std::string_view prefix) {
  // text has the form prefix(value)
  const std::string_view inner = text.substr(prefix.size() + 1, text.size() - prefix.size() - 2);
  double v = 0.0;
  const auto res = std::from_chars(inner.data(), inner.data() + inner.size(), v);
  if (res.ec != std::errc{} || res.ptr != inner.data() + inner.size() || inner.empty()) {
    throw std::invalid_argument("bad numeric parameter in family '" + std::string(text) + "'");
  }
  return v;
}

bool has_param_form(std::string_view text, std::string_view prefix) {
  return text.size() > prefix.size() + 2 && text.substr(0, prefix.size()) == prefix &&
         text[prefix.size()] == '(' && text.back() == ')';
}

}  // namespace

FamilyPtr normal_family() {
  static const auto f = std::make_shared<const NormalFamily>();
  return f;
}
FamilyPtr poisson_family() {
  static const auto f = std::make_shared<const PoissonFamily>();
  return f;
}
FamilyPtr binomial_family() {
  static const auto f = std::make_shared<const BinomialFamily>();
  return f;
}
FamilyPtr gamma_family() {
  static const auto f = std::make_shared<const GammaFamily>();
  return f;
}
FamilyPtr inverse_gaussian_family() {
  static const auto f = std::make_shared<const InverseGaussianFamily>();
  return f;
}
FamilyPtr von_mises_family() {
  static const auto f = std::make_shared<const VonMisesFamily>();
  return f;
}
FamilyPtr reciprocal_gamma_family() {
  static const auto f = std::make_shared<const ReciprocalGammaFamily>();
  return f;
}
FamilyPtr log_gamma_family() {
  static const auto f = std::make_shared<const LogGammaFamily>();
  return f;
}
FamilyPtr reciprocal_inverse_gaussian_family() {
  static const auto f = std::make_shared<const ReciprocalInverseGaussianFamily>();
  return f;
}
FamilyPtr ghs_family() {
  static const auto f = std::make_shared<const GhsFamily>();
  return f;
}
FamilyPtr negative_binomial_as_published() {
  static const auto f = std::make_shared<const NegativeBinomialAsPublished>();
  return f;
}

FamilyPtr power_variance_family(double p) {
  if (p == 0.0) return normal_family();
  if (p == 1.0) return poisson_family();
  if (p == 2.0) return gamma_family();
  if (p == 3.0) return inverse_gaussian_family();
  if (!std::isfinite(p)) throw std::invalid_argument("power-variance exponent must be finite");
  return std::make_shared<const PowerVarianceCumulants>(p);
}

FamilyPtr exponential_variance_family(double b) {
  if (!std::isfinite(b)) throw std::invalid_argument("exponential-variance rate must be finite");
  return std::make_shared<const ExponentialVarianceCumulants>(b);
}

FamilyPtr cv_normal_family(double c) { return std::make_shared<const CvNormalFamily>(c); }
FamilyPtr cv_inverse_gaussian_family(double c) {
  return std::make_shared<const CvInverseGaussianFamily>(c);
}
FamilyPtr cv_lognormal_family(double c) { return std::make_shared<const CvLognormalFamily>(c); }
FamilyPtr cv_weibull_family(double c) { return std::make_shared<const CvWeibullFamily>(c); }

FamilyPtr make_family(std::string_view text) {
  if (text == "normal") return normal_family();
  if (text == "poisson") return poisson_family();
  if (text == "binomial") return binomial_family();
  if (text == "gamma") return gamma_family();
  if (text == "inverse-gaussian") return inverse_gaussian_family();
  if (text == "von-mises") return von_mises_family();
  if (text == "reciprocal-gamma") return reciprocal_gamma_family();
  if (text == "log-gamma") return log_gamma_family();
  if (text == "reciprocal-inverse-gaussian") return reciprocal_inverse_gaussian_family();
  if (text == "ghs") return ghs_family();
  if (text == "negative-binomial(as-published)") return negative_binomial_as_published();
  struct Parametric {
    std::string_view prefix;
    FamilyPtr (*make)(double);
  };
  static constexpr Parametric kParametric[] = {
      {"power-variance", power_variance_family},
      {"exponential-variance", exponential_variance_family},
      {"cv-normal", cv_normal_family},
      {"cv-inverse-gaussian", cv_inverse_gaussian_family},
      {"cv-lognormal", cv_lognormal_family},
      {"cv-weibull", cv_weibull_family},
  };
  for (const auto& p : kParametric) {
    if (has_param_form(text, p.prefix)) return p.make(parse_family_param(text, p.prefix));
  }
  throw std::invalid_argument("unknown family '" + std::string(text) + "'");
}

}  // namespace dispbias
