#pragma once

// Independent reference implementations for the tests. Everything here runs in
// long double and shares no code with the library.

#include <cmath>
#include <functional>
#include <numbers>

namespace oracle {

using Real = long double;

inline constexpr Real kPi = 3.14159265358979323846264338327950288L;

// Maclaurin series of erf for |x| <= 3, Laplace continued fraction for erfc beyond.
inline Real erfc_cf(Real x) {
    Real k = x;
    for (int n = 400; n >= 1; --n) k = x + (n / 2.0L) / k;
    return std::exp(-x * x) / (std::sqrt(kPi) * k);
}

inline Real erf_series(Real x) {
    const Real ax = std::fabs(x);
    if (ax > 3.0L) return std::copysign(1.0L - erfc_cf(ax), x);
    Real term = x, sum = x;
    for (int n = 1; n < 400; ++n) {
        term *= -x * x / n;
        const Real add = term / (2 * n + 1);
        sum += add;
        if (std::fabs(add) < 1e-24L * std::fabs(sum)) break;
    }
    return 2.0L / std::sqrt(kPi) * sum;
}

// erf_inv by bisection on erf_series.
inline Real erf_inv_bisect(Real y, Real tol = 1e-16L) {
    Real lo = -7.0L, hi = 7.0L;
    while (hi - lo > tol) {
        const Real mid = 0.5L * (lo + hi);
        (erf_series(mid) < y ? lo : hi) = mid;
    }
    return 0.5L * (lo + hi);
}

// Double-exponential quadrature of f(a + w) over w in (0, inf); f receives w so
// algebraic endpoint singularities keep full relative precision.
inline Real exp_sinh(const std::function<Real(Real)>& f, Real h = 1.0L / 128) {
    Real sum = 0.0L;
    for (Real t = -8.5L; t <= 5.0L; t += h) {
        const Real w = std::exp(kPi / 2 * std::sinh(t));
        const Real dw = kPi / 2 * std::cosh(t) * w;
        const Real v = f(w) * dw;
        if (std::isfinite(v)) sum += v;
    }
    return sum * h;
}

// Double-exponential quadrature on [a, b] for smooth integrands.
inline Real tanh_sinh(const std::function<Real(Real)>& f, Real a, Real b, Real h = 1.0L / 128) {
    const Real c = 0.5L * (a + b), r = 0.5L * (b - a);
    Real sum = 0.0L;
    for (Real t = -6.0L; t <= 6.0L; t += h) {
        const Real u = kPi / 2 * std::sinh(t);
        const Real ch = std::cosh(u);
        const Real x = c + r * std::tanh(u);
        const Real w = r * kPi / 2 * std::cosh(t) / (ch * ch);
        sum += f(x) * w;
    }
    return sum * h;
}

inline Real gamma_quad(Real s) {
    return exp_sinh([s](Real u) { return std::pow(u, s - 1) * std::exp(-u); });
}

inline Real upper_gamma_quad(Real s, Real x) {
    if (x == 0.0L) return gamma_quad(s);
    return exp_sinh([s, x](Real w) { return std::pow(x + w, s - 1) * std::exp(-(x + w)); });
}

inline Real erf_quad(Real x) {
    return 2.0L / std::sqrt(kPi) * tanh_sinh([](Real t) { return std::exp(-t * t); }, 0.0L, x);
}

}  // namespace oracle
