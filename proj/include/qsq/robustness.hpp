#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "qsq/model.hpp"
#include "qsq/ode.hpp"

namespace qsq {

enum class ScanAxis { alpha, delta, beta };

std::string to_string(ScanAxis axis);
/// Throws InputError for anything but "alpha", "delta", "beta".
ScanAxis parse_axis(const std::string& name);
PerturbationParams along(ScanAxis axis, double value);

struct RobustnessCurve {
    ScanAxis axis = ScanAxis::alpha;
    std::vector<double> values;
    std::vector<double> infidelity;
    std::string design_label;
    double pulse_area = 0.0;
};

struct AngleRateSample {
    double theta_dot = 0.0;
    double gamma_dot = 0.0;
};

/// e = -(1/2)(delta cos th - alpha gamma' sin^2 th - beta sin th cos vphi)
double error_integrand_e(const DynamicalAngles& a, const AngleRateSample& r, const PerturbationParams& p);
/// f = (1/2)[delta sin th + alpha((1/2) gamma' sin 2th - i th') + beta(cos vphi cos th - i sin vphi)] e^{i gamma}
Complex error_integrand_f(const DynamicalAngles& a, const AngleRateSample& r, const PerturbationParams& p);

/// Same integrands written with the Rabi frequency (th' = Omega sin vphi,
/// gamma' sin th = Omega cos vphi); regular at the poles.
double error_integrand_e(const DynamicalAngles& a, double rabi, const PerturbationParams& p);
Complex error_integrand_f(const DynamicalAngles& a, double rabi, const PerturbationParams& p);

/// Unperturbed angles on a uniform grid of the control window.
AngleSamples unperturbed_angles(const ControlWaveforms& controls, std::size_t samples = 2001,
                                const StepControl& step = {});

/// O1 = -i int e dt (composite Simpson on the angle grid).
Complex first_order_term(const AngleSamples& angles, const ControlWaveforms& controls, const PerturbationParams& p);
/// int f dt.
Complex f_integral(const AngleSamples& angles, const ControlWaveforms& controls, const PerturbationParams& p);
/// |int f dt|^2, the second-order infidelity.
double second_order_infidelity(const AngleSamples& angles, const ControlWaveforms& controls,
                               const PerturbationParams& p);

/// Ground-to-excited infidelity at each grid value (strictly increasing grid).
RobustnessCurve fidelity_scan(const ControlWaveforms& design, ScanAxis axis, std::span<const double> grid,
                              const StepControl& step = {});

struct SlopeFit {
    double slope = 0.0;
    double intercept = 0.0;
    double rms = 0.0;
    std::size_t points = 0;
    /// True when the infidelity does not vary over the window.
    bool flat = false;
};

/// Least-squares slope of log10(infidelity) against log10|value| for lo <= |value| <= hi.
/// Throws InputError with fewer than 3 usable points.
SlopeFit infidelity_slope(const RobustnessCurve& curve, double lo, double hi);

}  // namespace qsq
