#include "dispbias/specialfns.hpp"

#include <array>
#include <cmath>
#include <numbers>
#include <string>

#include "dispbias/errors.hpp"

namespace dispbias::special {
namespace {

// B_{2k}, k = 1..8
constexpr std::array<double, 8> kBernoulli = {
    1.0 / 6.0,  -1.0 / 30.0,      1.0 / 42.0, -1.0 / 30.0,
    5.0 / 66.0, -691.0 / 2730.0, 7.0 / 6.0,  -3617.0 / 510.0};

constexpr double kAsymptoticStart = 10.0;

double psi_asymptotic(int m, double x) {
  const double inv = 1.0 / x;
  const double inv2 = inv * inv;
  double sum = 0.0;
  switch (m) {
    case 0: {
      double p = inv2;
      for (std::size_t k = 0; k < kBernoulli.size(); ++k) {
        sum += kBernoulli[k] / (2.0 * (k + 1)) * p;
        p *= inv2;
      }
      return std::log(x) - 0.5 * inv - sum;
    }
    case 1: {
      double p = inv2 * inv;
      for (double b : kBernoulli) {
        sum += b * p;
        p *= inv2;
      }
      return inv + 0.5 * inv2 + sum;
    }
    default: {
      double p = inv2 * inv2;
      for (std::size_t k = 0; k < kBernoulli.size(); ++k) {
        sum += (2.0 * (k + 1) + 1.0) * kBernoulli[k] * p;
        p *= inv2;
      }
      return -inv2 - inv2 * inv - sum;
    }
  }
}

}  // namespace

double log_gamma(double x) {
  if (!(x > 0.0) || !std::isfinite(x)) {
    throw DomainError("log_gamma requires a finite positive argument, got " + std::to_string(x));
  }
  // Shift up so the Stirling series converges; the shift product stays
  // representable because it has at most ten factors.
  double shift_log = 0.0;
  double prod = 1.0;
  while (x < kAsymptoticStart) {
    prod *= x;
    x += 1.0;
  }
  shift_log = std::log(prod);
  const double inv = 1.0 / x;
  const double inv2 = inv * inv;
  double series = 0.0;
  double p = inv;
  for (std::size_t k = 0; k < kBernoulli.size(); ++k) {
    const double two_k = 2.0 * (k + 1);
    series += kBernoulli[k] / (two_k * (two_k - 1.0)) * p;
    p *= inv2;
  }
  return (x - 0.5) * std::log(x) - x + 0.5 * std::log(2.0 * std::numbers::pi) + series -
         shift_log;
}

double stirling_remainder(double x) {
  if (!(x > 0.0) || !std::isfinite(x)) {
    throw DomainError("stirling_remainder requires a finite positive argument, got " +
                      std::to_string(x));
  }
  // S(x) = S(x + 1) + (x + ½) log(1 + 1/x) − 1 keeps every term small.
  double acc = 0.0;
  while (x < kAsymptoticStart) {
    acc += (x + 0.5) * std::log1p(1.0 / x) - 1.0;
    x += 1.0;
  }
  const double inv = 1.0 / x;
  const double inv2 = inv * inv;
  double series = 0.0;
  double p = inv;
  for (std::size_t k = 0; k < kBernoulli.size(); ++k) {
    const double two_k = 2.0 * (k + 1);
    series += kBernoulli[k] / (two_k * (two_k - 1.0)) * p;
    p *= inv2;
  }
  return acc + series;
}

double polygamma(int m, double x) {
  if (m < 0 || m > 2) {
    throw DomainError("polygamma order must be 0, 1 or 2, got " + std::to_string(m));
  }
  if (!(x > 0.0) || !std::isfinite(x)) {
    throw DomainError("polygamma requires a finite positive argument, got " + std::to_string(x));
  }
  // ψ⁽ᵐ⁾(x) = ψ⁽ᵐ⁾(x+1) − (−1)ᵐ m! / x^{m+1}
  const double sign_fact = (m == 0) ? 1.0 : (m == 1 ? -1.0 : 2.0);
  double correction = 0.0;
  while (x < kAsymptoticStart) {
    correction += sign_fact / std::pow(x, m + 1);
    x += 1.0;
  }
  return psi_asymptotic(m, x) - correction;
}

namespace {

constexpr double kBesselSeriesLimit = 15.0;

struct ScaledPair {
  double i0e;
  double i1e;
  double one_minus_r;  // 1 − I₁/I₀
};

ScaledPair bessel_series(double x) {
  const double q = 0.25 * x * x;
  double t0 = 1.0;
  double t1 = 0.5 * x;
  double s0 = t0;
  double s1 = t1;
  for (int k = 1; k < 500; ++k) {
    t0 *= q / (static_cast<double>(k) * k);
    t1 *= q / (static_cast<double>(k) * (k + 1));
    s0 += t0;
    s1 += t1;
    if (t0 < 1e-17 * s0 && t1 < 1e-17 * s1) break;
  }
  const double scale = std::exp(-x);
  return {s0 * scale, s1 * scale, (s0 - s1) / s0};
}

ScaledPair bessel_asymptotic(double x) {
  // I_ν(x) e^{-x} √(2πx) ~ Σ_k c_k(ν), c_k = c_{k-1}·(−(4ν² − (2k−1)²))/(8kx)
  double c0 = 1.0;
  double c1 = 1.0;
  double s0 = 1.0;
  double s1 = 1.0;
  double diff = 0.0;  // Σ (c_k(0) − c_k(1)), accumulated termwise
  double prev = 1.0;
  for (int k = 1; k < 200; ++k) {
    const double odd = 2.0 * k - 1.0;
    const double denom = 8.0 * k * x;
    c0 *= (odd * odd) / denom;
    c1 *= -(4.0 - odd * odd) / denom;
    const double mag = std::abs(c0) + std::abs(c1);
    if (mag > prev) break;  // series started diverging
    s0 += c0;
    s1 += c1;
    diff += c0 - c1;
    prev = mag;
    if (mag < 1e-17) break;
  }
  const double norm = 1.0 / std::sqrt(2.0 * std::numbers::pi * x);
  return {s0 * norm, s1 * norm, diff / s0};
}

ScaledPair bessel_pair(double x) {
  if (!(x >= 0.0) || !std::isfinite(x)) {
    throw DomainError("Bessel functions require a finite nonnegative argument");
  }
  return x < kBesselSeriesLimit ? bessel_series(x) : bessel_asymptotic(x);
}

}  // namespace

double bessel_i0e(double x) { return bessel_pair(x).i0e; }
double bessel_i1e(double x) { return bessel_pair(x).i1e; }

double log_bessel_i0(double x) { return x + std::log(bessel_pair(x).i0e); }

BesselRatioEval bessel_ratio(double phi) {
  if (!(phi > 0.0) || !std::isfinite(phi)) {
    throw DomainError("bessel_ratio requires a finite positive argument, got " +
                      std::to_string(phi));
  }
  if (phi < 0.01) {
    // Maclaurin series of I₁/I₀; the closed identities cancel badly here.
    const double x2 = phi * phi;
    const double r =
        phi * (0.5 + x2 * (-1.0 / 16 + x2 * (1.0 / 96 + x2 * (-11.0 / 6144 +
                                                                x2 * (19.0 / 61440)))));
    const double r1 =
        0.5 + x2 * (-3.0 / 16 + x2 * (5.0 / 96 + x2 * (-77.0 / 6144 + x2 * (171.0 / 61440))));
    const double r2 =
        phi * (-6.0 / 16 + x2 * (20.0 / 96 + x2 * (-462.0 / 6144 + x2 * (1368.0 / 61440))));
    return {r, r1, r2};
  }
  const ScaledPair p = bessel_pair(phi);
  const double s = p.one_minus_r;
  const double r = 1.0 - s;
  // 1 − r/φ − r² rewritten around s = 1 − r
  const double r1 = s * (2.0 - s) - r / phi;
  const double r2 = r / (phi * phi) - r1 * (1.0 / phi + 2.0 * r);
  return {r, r1, r2};
}

double normal_pdf(double x) {
  return std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi);
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

double normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) {
    throw DomainError("normal_quantile requires 0 < p < 1, got " + std::to_string(p));
  }
  // Acklam's rational approximation followed by one Halley refinement.
  static constexpr double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                                 -2.759285104469687e+02, 1.383577518672690e+02,
                                 -3.066479806614716e+01, 2.506628277459239e+00};
  static constexpr double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                                 -1.556989798598866e+02, 6.680131188771972e+01,
                                 -1.328068155288572e+01};
  static constexpr double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                                 -2.400758277161838e+00, -2.549732539343734e+00,
                                 4.374664141464968e+00,  2.938163982698783e+00};
  static constexpr double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                                 2.445134137142996e+00, 3.754408661907416e+00};
  constexpr double p_low = 0.02425;
  double x;
  if (p < p_low) {
    const double q = std::sqrt(-2.0 * std::log(p));
    x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  } else if (p <= 1.0 - p_low) {
    const double q = p - 0.5;
    const double r = q * q;
    x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
        (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
  } else {
    const double q = std::sqrt(-2.0 * std::log1p(-p));
    x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  const double e = normal_cdf(x) - p;
  const double u = e * std::sqrt(2.0 * std::numbers::pi) * std::exp(0.5 * x * x);
  return x - u / (1.0 + 0.5 * x * u);
}

}  // namespace dispbias::special
