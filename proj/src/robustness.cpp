#include "qsq/robustness.hpp"

#include <cmath>

#include "qsq/error.hpp"
#include "qsq/tdse.hpp"

namespace qsq {

std::string to_string(ScanAxis axis) {
    switch (axis) {
        case ScanAxis::alpha:
            return "alpha";
        case ScanAxis::delta:
            return "delta";
        case ScanAxis::beta:
            return "beta";
    }
    return "alpha";
}

ScanAxis parse_axis(const std::string& name) {
    if (name == "alpha") return ScanAxis::alpha;
    if (name == "delta") return ScanAxis::delta;
    if (name == "beta") return ScanAxis::beta;
    throw InputError("unknown scan axis '" + name + "' (expected alpha, delta or beta)");
}

PerturbationParams along(ScanAxis axis, double value) {
    PerturbationParams p;
    switch (axis) {
        case ScanAxis::alpha:
            p.alpha = value;
            break;
        case ScanAxis::delta:
            p.delta = value;
            break;
        case ScanAxis::beta:
            p.beta = value;
            break;
    }
    return p;
}

double error_integrand_e(const DynamicalAngles& a, const AngleRateSample& r, const PerturbationParams& p) {
    const double st = std::sin(a.theta);
    return -0.5 * (p.delta * std::cos(a.theta) - p.alpha * r.gamma_dot * st * st - p.beta * st * std::cos(a.varphi));
}

Complex error_integrand_f(const DynamicalAngles& a, const AngleRateSample& r, const PerturbationParams& p) {
    const Complex bracket =
        Complex(p.delta * std::sin(a.theta), 0.0) +
        p.alpha * Complex(0.5 * r.gamma_dot * std::sin(2.0 * a.theta), -r.theta_dot) +
        p.beta * Complex(std::cos(a.varphi) * std::cos(a.theta), -std::sin(a.varphi));
    return 0.5 * bracket * std::polar(1.0, a.gamma);
}

double error_integrand_e(const DynamicalAngles& a, double rabi, const PerturbationParams& p) {
    const double st = std::sin(a.theta);
    const double cp = std::cos(a.varphi);
    return -0.5 * (p.delta * std::cos(a.theta) - p.alpha * rabi * cp * st - p.beta * st * cp);
}

Complex error_integrand_f(const DynamicalAngles& a, double rabi, const PerturbationParams& p) {
    const double ct = std::cos(a.theta);
    const double cp = std::cos(a.varphi);
    const double sp = std::sin(a.varphi);
    const Complex bracket = Complex(p.delta * std::sin(a.theta), 0.0) +
                            p.alpha * rabi * Complex(cp * ct, -sp) + p.beta * Complex(cp * ct, -sp);
    return 0.5 * bracket * std::polar(1.0, a.gamma);
}

AngleSamples unperturbed_angles(const ControlWaveforms& controls, std::size_t samples, const StepControl& step) {
    return extract_angles(propagate(controls, {}, ground_state(), step, samples));
}

namespace {

void check_angles(const AngleSamples& a) {
    if (a.size() < 3 || a.theta.size() != a.size() || a.varphi.size() != a.size() || a.gamma.size() != a.size())
        throw InputError("error integrals need at least 3 consistent angle samples");
}

}  // namespace

Complex first_order_term(const AngleSamples& angles, const ControlWaveforms& controls, const PerturbationParams& p) {
    check_angles(angles);
    std::vector<double> e(angles.size());
    for (std::size_t i = 0; i < angles.size(); ++i)
        e[i] = error_integrand_e(angles.at(i), controls.at(angles.time[i]).rabi, p);
    return Complex(0.0, -simpson(angles.time, e));
}

Complex f_integral(const AngleSamples& angles, const ControlWaveforms& controls, const PerturbationParams& p) {
    check_angles(angles);
    std::vector<Complex> f(angles.size());
    for (std::size_t i = 0; i < angles.size(); ++i)
        f[i] = error_integrand_f(angles.at(i), controls.at(angles.time[i]).rabi, p);
    return simpson(angles.time, f);
}

double second_order_infidelity(const AngleSamples& angles, const ControlWaveforms& controls,
                               const PerturbationParams& p) {
    return std::norm(f_integral(angles, controls, p));
}

RobustnessCurve fidelity_scan(const ControlWaveforms& design, ScanAxis axis, std::span<const double> grid,
                              const StepControl& step) {
    if (grid.empty()) throw InputError("fidelity_scan: empty grid");
    for (std::size_t i = 0; i < grid.size(); ++i) {
        if (!std::isfinite(grid[i])) throw InputError("fidelity_scan: non-finite grid value");
        if (i > 0 && !(grid[i] > grid[i - 1])) throw InputError("fidelity_scan: grid must be strictly increasing");
    }
    RobustnessCurve c;
    c.axis = axis;
    c.design_label = design.label;
    c.pulse_area = design.area();
    c.values.assign(grid.begin(), grid.end());
    c.infidelity.reserve(grid.size());
    for (double v : grid) {
        try {
            const Spinor psi = evolve(design, along(axis, v), ground_state(), design.t_begin(), design.t_end(), step);
            c.infidelity.push_back(transfer_infidelity(psi, excited_state()));
        } catch (const IntegrationError& e) {
            throw IntegrationError(std::string(e.what()) + " (scan " + to_string(axis) + " = " + std::to_string(v) + ")",
                                   e.time());
        }
    }
    return c;
}

SlopeFit infidelity_slope(const RobustnessCurve& curve, double lo, double hi) {
    if (!(lo > 0.0) || !(hi > lo)) throw InputError("infidelity_slope: need 0 < lo < hi");
    std::vector<double> x, y;
    for (std::size_t i = 0; i < curve.values.size(); ++i) {
        const double v = std::abs(curve.values[i]);
        if (v < lo || v > hi || !(curve.infidelity[i] > 0.0)) continue;
        x.push_back(std::log10(v));
        y.push_back(std::log10(curve.infidelity[i]));
    }
    if (x.size() < 3) throw InputError("infidelity_slope: fewer than 3 usable points in the fit window");
    const double n = static_cast<double>(x.size());
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += x[i] / n;
        my += y[i] / n;
    }
    double sxx = 0, sxy = 0, syy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
        syy += (y[i] - my) * (y[i] - my);
    }
    SlopeFit fit;
    fit.points = x.size();
    if (sxx == 0.0) throw InputError("infidelity_slope: all points share one |value|");
    fit.flat = syy == 0.0;
    fit.slope = fit.flat ? 0.0 : sxy / sxx;
    fit.intercept = my - fit.slope * mx;
    double ss = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double r = y[i] - (fit.intercept + fit.slope * x[i]);
        ss += r * r;
    }
    fit.rms = std::sqrt(ss / n);
    return fit;
}

}  // namespace qsq
