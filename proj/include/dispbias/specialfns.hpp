#pragma once

namespace dispbias::special {

/// log Γ(x) for x > 0.
double log_gamma(double x);

/// log Γ(x) − [(x − ½) log x − x + ½ log 2π], accurate without cancellation.
double stirling_remainder(double x);

/// Polygamma ψ⁽ᵐ⁾(x) = d^{m+1}/dx^{m+1} log Γ(x) for m ∈ {0, 1, 2} and x > 0.
/// Upward recurrence to x ≥ 10, then the Bernoulli asymptotic series.
double polygamma(int m, double x);

inline double digamma(double x) { return polygamma(0, x); }
inline double trigamma(double x) { return polygamma(1, x); }

/// Exponentially scaled modified Bessel functions e^{-x} I₀(x), e^{-x} I₁(x), x ≥ 0.
double bessel_i0e(double x);
double bessel_i1e(double x);

/// log I₀(x), finite for every x ≥ 0.
double log_bessel_i0(double x);

struct BesselRatioEval {
  double r;   // I₁(φ)/I₀(φ)
  double r1;  // dr/dφ
  double r2;  // d²r/dφ²
};

/// Bessel ratio with its first two derivatives. The derivatives come from
/// r' = 1 − r/φ − r², evaluated in terms of 1 − r to keep large-φ precision.
BesselRatioEval bessel_ratio(double phi);

double normal_pdf(double x);
double normal_cdf(double x);

/// Standard normal quantile, 0 < p < 1.
double normal_quantile(double p);

}  // namespace dispbias::special
