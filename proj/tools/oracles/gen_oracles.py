"""High-precision reference values for the C++ tests.

Special functions come from mpmath at 40 digits. Family cumulants are
quadratures of symbolic derivatives of the full textbook log-density (no t/a
split), so the values share neither code nor algebra with the library.
"""
import json
import sys

import mpmath as mp
import sympy as sp

mp.mp.dps = 40


def polygamma_values():
    out = []
    for m in (0, 1, 2):
        for x in ("0.05", "0.5", "1", "5.5", "9.99", "10", "37.25", "1000"):
            out.append({"m": m, "x": float(x), "value": float(mp.polygamma(m, mp.mpf(x)))})
    return out


def log_gamma_values():
    return [{"x": float(x), "value": float(mp.loggamma(mp.mpf(x)))}
            for x in ("0.001", "0.5", "1", "2.5", "9.5", "10", "123.4", "1e6")]


def bessel_ratio_values():
    out = []
    for phi in ("0.001", "0.01", "0.1", "0.5", "1", "2", "5", "14.9", "15.1", "30", "100", "500"):
        p = mp.mpf(phi)
        r = lambda t: mp.besseli(1, t) / mp.besseli(0, t)
        out.append({"phi": float(p), "r": float(r(p)), "r1": float(mp.diff(r, p)),
                    "r2": float(mp.diff(r, p, 2)),
                    "log_i0": float(mp.log(mp.besseli(0, p)))})
    return out


def normal_quantile_values():
    return [{"p": float(p), "value": float(mp.sqrt(2) * mp.erfinv(2 * mp.mpf(p) - 1))}
            for p in ("1e-10", "0.001", "0.025", "0.05", "0.3", "0.5", "0.95", "0.975", "0.999999")]


# Log-densities in their textbook parameterisations, differentiated symbolically.
Y, MU, PHI = sp.symbols("y mu phi", real=True)

LOG_DENSITIES = {
    # variance 1/phi
    "normal": sp.log(PHI) / 2 - sp.log(2 * sp.pi) / 2 - PHI * (Y - MU) ** 2 / 2,
    # shape phi, mean mu
    "gamma": PHI * sp.log(PHI / MU) + (PHI - 1) * sp.log(Y) - PHI * Y / MU - sp.loggamma(PHI),
    # mean mu, shape phi
    "inverse-gaussian": (sp.log(PHI) - sp.log(2 * sp.pi) - 3 * sp.log(Y)) / 2
    - PHI * (Y - MU) ** 2 / (2 * MU ** 2 * Y),
    # 1/Y ~ Gamma(shape phi, rate phi*mu)
    "reciprocal-gamma": PHI * sp.log(PHI * MU) - (PHI + 1) * sp.log(Y) - PHI * MU / Y - sp.loggamma(PHI),
    # exp(Y - mu) ~ Gamma(shape phi, rate phi)
    "log-gamma": PHI * sp.log(PHI) + PHI * (Y - MU) - PHI * sp.exp(Y - MU) - sp.loggamma(PHI),
    "von-mises": PHI * sp.cos(Y - MU) - sp.log(2 * sp.pi * sp.besseli(0, PHI)),
}

POINTS = {
    "normal": ((1.0, 2.0), lambda mu: [-mp.inf, mu, mp.inf]),
    "gamma": ((2.0, 3.0), lambda mu: [0, mu, 10 * mu, mp.inf]),
    "inverse-gaussian": ((1.5, 2.0), lambda mu: [0, mu, 10 * mu, mp.inf]),
    "reciprocal-gamma": ((0.7, 2.5), lambda mu: [0, 1 / mu, 10 / mu, mp.inf]),
    # exp(y - mu) beyond e^6 or below e^-60 carries no mass at 40 digits
    "log-gamma": ((0.3, 1.7), lambda mu: [mu - 60, mu - 3, mu, mu + 3, mu + 6]),
    "von-mises": ((0.4, 2.0), lambda mu: [mu - mp.pi, mu, mu + mp.pi]),
}


def family_cumulants(name):
    lp = LOG_DENSITIES[name]
    (mu0, phi0), pts_of = POINTS[name]
    f = lambda expr: sp.lambdify((Y, MU, PHI), expr, "mpmath")
    dens = f(sp.exp(lp))

    def expect(expr, mu, phi):
        g = f(expr)
        return mp.quad(lambda y: dens(y, mu, phi) * g(y, mu, phi), pts_of(mu))

    mu, phi = mp.mpf(mu0), mp.mpf(phi0)
    l_mm = sp.diff(lp, MU, 2)
    l_pp = sp.diff(lp, PHI, 2)
    d2 = lambda m, p: expect(l_mm, m, p) / p
    a2 = lambda m, p: expect(l_pp, m, p)
    h = mp.mpf("1e-12")
    return {
        "family": name,
        "mu": mu0,
        "phi": phi0,
        "mass": float(expect(sp.Integer(1), mu, phi)),
        "d2": float(d2(mu, phi)),
        "d3": float(expect(sp.diff(lp, MU, 3), mu, phi) / phi),
        "d2p": float((d2(mu + h, phi) - d2(mu - h, phi)) / (2 * h)),
        "alpha2": float(a2(mu, phi)),
        "alpha3": float(expect(sp.diff(lp, PHI, 3), mu, phi)),
        "alpha2p": float((a2(mu, phi + h) - a2(mu, phi - h)) / (2 * h)),
        # E[dl/dphi] vanishes when the density and its parameterisation are right
        "score_phi": float(expect(sp.diff(lp, PHI), mu, phi)),
    }


def main():
    out = {
        "polygamma": polygamma_values(),
        "log_gamma": log_gamma_values(),
        "bessel_ratio": bessel_ratio_values(),
        "normal_quantile": normal_quantile_values(),
        "zeta3": float(mp.zeta(3)),
        "cumulants": [family_cumulants(name) for name in LOG_DENSITIES],
    }
    path = sys.argv[1] if len(sys.argv) > 1 else "tests/oracles/oracles.json"
    with open(path, "w") as f:
        json.dump(out, f, indent=2, sort_keys=True)
        f.write("\n")


if __name__ == "__main__":
    main()
