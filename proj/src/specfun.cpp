#include "qsq/specfun.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "qsq/error.hpp"

namespace qsq::specfun {
namespace {

constexpr double kEps = std::numeric_limits<double>::epsilon();
constexpr double kTiny = 1e-300;
constexpr int kMaxIter = 2000;

// Maclaurin series of erf, |x| < kErfSeriesLimit.
SpecFunResult erf_series(double x) {
    const double x2 = x * x;
    double term = x;
    double sum = x;
    double max_term = std::abs(x);
    int n = 1;
    for (; n < kMaxIter; ++n) {
        term *= -x2 / n;
        const double contrib = term / (2 * n + 1);
        sum += contrib;
        max_term = std::max(max_term, std::abs(contrib));
        if (std::abs(contrib) < 0.25 * kEps * std::abs(sum)) break;
    }
    const double scale = 2.0 / std::sqrt(std::numbers::pi);
    return {scale * sum, scale * (max_term * kEps * 2.0 + std::abs(term))};
}

// Continued fraction for e^{x^2} erfc(x) (modified Lentz), x >= 1.
SpecFunResult erfcx_cf(double x) {
    // erfc(x) = e^{-x^2}/sqrt(pi) * 1/(x + (1/2)/(x + 1/(x + (3/2)/(x + ...))))
    double f = x;
    double c = x;
    double d = 0.0;
    double delta = 0.0;
    for (int k = 1; k < kMaxIter; ++k) {
        const double a = 0.5 * k;
        d = x + a * d;
        if (std::abs(d) < kTiny) d = kTiny;
        c = x + a / c;
        if (std::abs(c) < kTiny) c = kTiny;
        d = 1.0 / d;
        delta = c * d;
        f *= delta;
        if (std::abs(delta - 1.0) < 0.5 * kEps) break;
    }
    const double value = 1.0 / (std::sqrt(std::numbers::pi) * f);
    return {value, value * (std::abs(delta - 1.0) + 4 * kEps)};
}

void require_finite(double x, const char* who) {
    if (!std::isfinite(x)) throw DomainError(std::string(who) + ": non-finite argument");
}

// Lower incomplete gamma series: gamma(s, x) = x^s e^{-x} sum x^n / (s)_{n+1}.
SpecFunResult lower_gamma_series(double s, double x) {
    double term = 1.0 / s;
    double sum = term;
    for (int n = 1; n < kMaxIter; ++n) {
        term *= x / (s + n);
        sum += term;
        if (std::abs(term) < 0.25 * kEps * std::abs(sum)) break;
    }
    const double pref = std::exp(s * std::log(x) - x);
    const double value = pref * sum;
    return {value, std::abs(value) * 8 * kEps};
}

// ln of the continued fraction factor in Gamma(s, x) = e^{-x} x^s * cf, x >= s + 1.
double log_upper_cf(double s, double x, double* rel_err) {
    double b = x + 1.0 - s;
    double c = 1.0 / kTiny;
    double d = 1.0 / b;
    double h = d;
    double delta = 0.0;
    for (int i = 1; i < kMaxIter; ++i) {
        const double an = -i * (i - s);
        b += 2.0;
        d = an * d + b;
        if (std::abs(d) < kTiny) d = kTiny;
        c = b + an / c;
        if (std::abs(c) < kTiny) c = kTiny;
        d = 1.0 / d;
        delta = d * c;
        h *= delta;
        if (std::abs(delta - 1.0) < 0.5 * kEps) break;
    }
    if (rel_err) *rel_err = std::abs(delta - 1.0) + 8 * kEps;
    return std::log(h);
}

double stirling_log_gamma(double z) {
    // z >= kStirlingShift
    const double zi = 1.0 / z;
    const double zi2 = zi * zi;
    const double series =
        zi * (1.0 / 12.0 +
              zi2 * (-1.0 / 360.0 +
                     zi2 * (1.0 / 1260.0 +
                            zi2 * (-1.0 / 1680.0 +
                                   zi2 * (1.0 / 1188.0 +
                                          zi2 * (-691.0 / 360360.0 + zi2 * (1.0 / 156.0)))))));
    return (z - 0.5) * std::log(z) - z + 0.5 * std::log(2.0 * std::numbers::pi) + series;
}

}  // namespace

double erf(double x) {
    if (std::isnan(x)) return x;
    const double ax = std::abs(x);
    double v;
    if (ax < kErfSeriesLimit) {
        v = erf_series(ax).value;
    } else if (ax > 27.0) {
        v = 1.0;
    } else {
        v = 1.0 - std::exp(-ax * ax) * erfcx_cf(ax).value;
    }
    return std::copysign(v, x);
}

double erfc(double x) {
    if (std::isnan(x)) return x;
    if (x < 0.0) return 2.0 - erfc(-x);
    if (x < kErfSeriesLimit) return 1.0 - erf_series(x).value;
    if (x > 27.3) return 0.0;
    return std::exp(-x * x) * erfcx_cf(x).value;
}

double erfcx(double x) {
    require_finite(x, "erfcx");
    if (x < kErfSeriesLimit) return std::exp(x * x) * erfc(x);
    return erfcx_cf(x).value;
}

double log_erfc(double x) {
    require_finite(x, "log_erfc");
    if (x < kErfSeriesLimit) return std::log(erfc(x));
    return -x * x + std::log(erfcx_cf(x).value);
}

double erf_inv(double y) {
    if (!(std::abs(y) < 1.0)) throw DomainError("erf_inv: argument must lie in (-1, 1)");
    if (y == 0.0) return 0.0;
    const double ay = std::abs(y);
    if (ay > 0.5) return std::copysign(erfc_inv(1.0 - ay), y);
    // Halley iteration from the leading Maclaurin terms of erf^{-1}.
    const double sp = std::sqrt(std::numbers::pi);
    double x = 0.5 * sp * (ay + std::numbers::pi / 12.0 * ay * ay * ay);
    for (int it = 0; it < 50; ++it) {
        const double f = erf(x) - ay;
        const double fp = 2.0 / sp * std::exp(-x * x);
        const double step = f / (fp + x * f);
        x -= step;
        if (std::abs(step) <= 2 * kEps * x) break;
    }
    return std::copysign(x, y);
}

double erfc_inv_from_log(double log_q) {
    if (!(log_q < 0.0)) {
        if (log_q < std::log(2.0)) return -erfc_inv_from_log(std::log(2.0 - std::exp(log_q)));
        throw DomainError("erfc_inv: argument must lie in (0, 2)");
    }
    if (log_q > std::log(0.5)) return erf_inv(1.0 - std::exp(log_q));
    // Newton on h(x) = ln erfc(x) - ln q; h is decreasing and concave for x > 0.
    double x = std::sqrt(-log_q);
    x = std::sqrt(std::max(0.25, -log_q - std::log(x * std::sqrt(std::numbers::pi))));
    const double sp = std::sqrt(std::numbers::pi);
    for (int it = 0; it < 100; ++it) {
        const double h = log_erfc(x) - log_q;
        const double hp = -2.0 / (sp * erfcx(x));
        double step = h / hp;
        if (x - step <= 0.0) step = 0.5 * x;
        x -= step;
        if (std::abs(step) <= 2 * kEps * x) break;
    }
    return x;
}

double erfc_inv(double q) {
    if (!(q > 0.0 && q < 2.0)) throw DomainError("erfc_inv: argument must lie in (0, 2)");
    if (q == 1.0) return 0.0;
    if (q > 1.0) return -erfc_inv(2.0 - q);
    if (q >= 0.5) return erf_inv(1.0 - q);
    return erfc_inv_from_log(std::log(q));
}

double log_gamma(double s) {
    if (!(s > 0.0) || !std::isfinite(s)) throw DomainError("log_gamma: requires finite s > 0");
    double shift = 0.0;
    double z = s;
    while (z < kStirlingShift) {
        shift += std::log(z);
        z += 1.0;
    }
    return stirling_log_gamma(z) - shift;
}

SpecFunResult gamma_with_error(double s) {
    if (!(s > 0.0) || !std::isfinite(s)) throw DomainError("gamma: requires finite s > 0");
    double prod = 1.0;
    double z = s;
    int shifts = 0;
    while (z < kStirlingShift) {
        prod *= z;
        z += 1.0;
        ++shifts;
    }
    const double lg = stirling_log_gamma(z);
    const double value = std::exp(lg) / prod;
    const double rel = kEps * (std::abs(lg) + shifts + 4);
    return {value, std::abs(value) * rel};
}

double gamma(double s) { return gamma_with_error(s).value; }

SpecFunResult upper_incomplete_gamma_with_error(double s, double x) {
    if (!(s > 0.0) || !std::isfinite(s)) throw DomainError("upper_incomplete_gamma: requires s > 0");
    if (!(x >= 0.0) || std::isnan(x)) throw DomainError("upper_incomplete_gamma: requires x >= 0");
    if (std::isinf(x)) return {0.0, 0.0};
    if (x == 0.0) return gamma_with_error(s);
    if (x < s + 1.0) {
        const SpecFunResult g = gamma_with_error(s);
        const SpecFunResult lower = lower_gamma_series(s, x);
        return {g.value - lower.value, g.est_abs_error + lower.est_abs_error + kEps * g.value};
    }
    double rel = 0.0;
    const double lv = -x + s * std::log(x) + log_upper_cf(s, x, &rel);
    const double value = std::exp(lv);
    return {value, value * (rel + kEps * (std::abs(lv) + 2))};
}

double upper_incomplete_gamma(double s, double x) {
    return upper_incomplete_gamma_with_error(s, x).value;
}

double log_upper_incomplete_gamma(double s, double x) {
    if (!(s > 0.0) || !std::isfinite(s)) throw DomainError("upper_incomplete_gamma: requires s > 0");
    if (!(x >= 0.0) || std::isnan(x)) throw DomainError("upper_incomplete_gamma: requires x >= 0");
    if (x < s + 1.0) return std::log(upper_incomplete_gamma(s, x));
    return -x + s * std::log(x) + log_upper_cf(s, x, nullptr);
}

double regularized_upper_gamma(double s, double x) {
    if (!(s > 0.0) || !(x >= 0.0) || !std::isfinite(s)) throw DomainError("regularized_upper_gamma: requires s > 0, x >= 0");
    if (x < s + 1.0) {
        if (x == 0.0) return 1.0;
        return 1.0 - lower_gamma_series(s, x).value / gamma(s);
    }
    return std::exp(log_regularized_upper_gamma(s, x));
}

double log_regularized_upper_gamma(double s, double x) {
    if (x < s + 1.0) return std::log(regularized_upper_gamma(s, x));
    return log_upper_incomplete_gamma(s, x) - log_gamma(s);
}

double regularized_lower_gamma(double s, double x) {
    if (!(s > 0.0) || !(x >= 0.0) || !std::isfinite(s)) throw DomainError("regularized_lower_gamma: requires s > 0, x >= 0");
    if (x == 0.0) return 0.0;
    if (x < s + 1.0) return lower_gamma_series(s, x).value / gamma(s);
    return -std::expm1(log_regularized_upper_gamma(s, x));
}

}  // namespace qsq::specfun
