#pragma once

// Real-argument special functions used by the hyper-Gaussian area formulas and
// the rescaling inversion: erf/erfc and their inverses, Euler gamma and the
// upper incomplete gamma function. All functions are pure.

namespace qsq::specfun {

struct SpecFunResult {
    double value = 0.0;
    double est_abs_error = 0.0;
};

// Below this |x| erf is summed from its Maclaurin series, above it erfc is
// evaluated from its continued fraction. Chosen on a 2000-point grid over
// [0, 6] as the point where the two routes agree best with the oracle.
inline constexpr double kErfSeriesLimit = 2.0;

// Stirling's series is used for ln Gamma(z) once z >= this shift target.
inline constexpr double kStirlingShift = 20.0;

double erf(double x);
double erfc(double x);
/// e^{x^2} erfc(x), finite for large positive x.
double erfcx(double x);
/// ln erfc(x); stays finite where erfc underflows.
double log_erfc(double x);

/// Inverse of erf on (-1, 1). Throws DomainError for |y| >= 1.
double erf_inv(double y);
/// Inverse of erfc on (0, 2). Accurate in relative terms for tiny q.
double erfc_inv(double q);
/// Solves ln erfc(x) = log_q for x; usable where q itself underflows.
double erfc_inv_from_log(double log_q);

/// Euler gamma for s > 0; relative error ~1e-14 on (0, 30].
double gamma(double s);
SpecFunResult gamma_with_error(double s);
double log_gamma(double s);

/// Gamma(s, x) = int_x^inf u^{s-1} e^{-u} du for s > 0, x >= 0.
double upper_incomplete_gamma(double s, double x);
SpecFunResult upper_incomplete_gamma_with_error(double s, double x);
/// ln Gamma(s, x); finite where Gamma(s, x) underflows.
double log_upper_incomplete_gamma(double s, double x);
/// Q(s, x) = Gamma(s, x) / Gamma(s).
double regularized_upper_gamma(double s, double x);
/// ln Q(s, x).
double log_regularized_upper_gamma(double s, double x);
/// P(s, x) = 1 - Q(s, x), accurate when P is small.
double regularized_lower_gamma(double s, double x);

}  // namespace qsq::specfun
