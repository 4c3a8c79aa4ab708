#pragma once

// Portable variate generators driven only by the 64-bit engine output, so
// streams reproduce across standard libraries.

#include <algorithm>
#include <cmath>
#include <numbers>

#include "dispbias/rng.hpp"
#include "dispbias/specialfns.hpp"

namespace dispbias {

inline double standard_normal(Rng& rng) {
  // Marsaglia polar method; the second variate is discarded to keep draws stateless.
  for (;;) {
    const double u = 2.0 * uniform_open(rng) - 1.0;
    const double v = 2.0 * uniform_open(rng) - 1.0;
    const double s = u * u + v * v;
    if (s > 0.0 && s < 1.0) return u * std::sqrt(-2.0 * std::log(s) / s);
  }
}

inline double exponential_variate(Rng& rng) { return -std::log(uniform_open(rng)); }

/// Gamma(shape, rate 1) by Marsaglia–Tsang, with the U^{1/a} boost below shape 1.
inline double gamma_variate(double shape, Rng& rng) {
  if (shape < 1.0) {
    const double g = gamma_variate(shape + 1.0, rng);
    return g * std::exp(std::log(uniform_open(rng)) / shape);
  }
  const double d = shape - 1.0 / 3.0;
  const double c = 1.0 / std::sqrt(9.0 * d);
  for (;;) {
    double x;
    double v;
    do {
      x = standard_normal(rng);
      v = 1.0 + c * x;
    } while (v <= 0.0);
    v = v * v * v;
    const double u = uniform_open(rng);
    if (u < 1.0 - 0.0331 * x * x * x * x) return d * v;
    if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v;
  }
}

/// Poisson: multiplicative inversion for small means, Hörmann's PTRS otherwise.
inline double poisson_variate(double lambda, Rng& rng) {
  if (lambda < 10.0) {
    const double limit = std::exp(-lambda);
    double prod = uniform_open(rng);
    double k = 0.0;
    while (prod > limit) {
      prod *= uniform_open(rng);
      k += 1.0;
    }
    return k;
  }
  const double slam = std::sqrt(lambda);
  const double loglam = std::log(lambda);
  const double b = 0.931 + 2.53 * slam;
  const double a = -0.059 + 0.02483 * b;
  const double invalpha = 1.1239 + 1.1328 / (b - 3.4);
  const double vr = 0.9277 - 3.6224 / (b - 2.0);
  for (;;) {
    const double u = uniform_open(rng) - 0.5;
    const double v = uniform_open(rng);
    const double us = 0.5 - std::abs(u);
    const double k = std::floor((2.0 * a / us + b) * u + lambda + 0.43);
    if (us >= 0.07 && v <= vr) return k;
    if (k < 0.0 || (us < 0.013 && v > us)) continue;
    if (std::log(v) + std::log(invalpha) - std::log(a / (us * us) + b) <=
        -lambda + k * loglam - special::log_gamma(k + 1.0)) {
      return k;
    }
  }
}

/// Inverse Gaussian with mean μ and shape λ (Michael, Schucany and Haas).
inline double inverse_gaussian_variate(double mu, double lambda, Rng& rng) {
  const double nu = standard_normal(rng);
  const double y = nu * nu;
  const double my = mu * y;
  const double x = mu + mu * my / (2.0 * lambda) -
                   mu / (2.0 * lambda) * std::sqrt(4.0 * lambda * my + my * my);
  if (uniform_open(rng) <= mu / (mu + x)) return x;
  return mu * mu / x;
}

/// von Mises on (−π, π] by Best–Fisher rejection.
inline double von_mises_variate(double mu, double kappa, Rng& rng) {
  constexpr double pi = std::numbers::pi;
  double angle;
  if (kappa < 1e-8) {
    angle = pi * (2.0 * uniform_open(rng) - 1.0);
  } else {
    double s;
    if (kappa < 1e-5) {
      s = 1.0 / kappa + kappa;
    } else {
      const double r = 1.0 + std::sqrt(1.0 + 4.0 * kappa * kappa);
      const double rho = (r - std::sqrt(2.0 * r)) / (2.0 * kappa);
      s = (1.0 + rho * rho) / (2.0 * rho);
    }
    double w;
    for (;;) {
      const double z = std::cos(pi * uniform_open(rng));
      w = (1.0 + s * z) / (s + z);
      const double y = kappa * (s - w);
      const double v = uniform_open(rng);
      if (y * (2.0 - y) - v >= 0.0 || std::log(y / v) + 1.0 - y >= 0.0) break;
    }
    angle = std::acos(std::clamp(w, -1.0, 1.0));
    if (uniform_open(rng) < 0.5) angle = -angle;
  }
  double out = std::remainder(mu + angle, 2.0 * pi);
  if (out <= -pi) out += 2.0 * pi;
  return out;
}

/// Hyperbolic-secant exponential family with canonical parameter θ ∈ (−π/2, π/2).
/// Proposal: asymmetric Laplace dominating sech(πy/2)/2 ≤ e^{−π|y|/2}.
inline double ghs_variate(double theta, Rng& rng) {
  constexpr double half_pi = 0.5 * std::numbers::pi;
  const double rate_pos = half_pi - theta;
  const double rate_neg = half_pi + theta;
  const double p_pos = rate_neg / (rate_pos + rate_neg);
  for (;;) {
    const double y = uniform_open(rng) < p_pos ? exponential_variate(rng) / rate_pos
                                               : -exponential_variate(rng) / rate_neg;
    if (uniform_open(rng) * (1.0 + std::exp(-std::numbers::pi * std::abs(y))) <= 1.0) return y;
  }
}

}  // namespace dispbias
