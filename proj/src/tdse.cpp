#include "qsq/tdse.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "qsq/error.hpp"

namespace qsq {
namespace {

using Vec4 = std::array<double, 4>;
using Vec3 = std::array<double, 3>;

constexpr double kPi = std::numbers::pi;
// Pole-chart hysteresis: enter a chart below kChartEnter, leave above kChartLeave.
constexpr double kChartEnter = 0.02;
constexpr double kChartLeave = 0.05;

Vec4 pack(const Spinor& s) { return {s[0].real(), s[0].imag(), s[1].real(), s[1].imag()}; }
Spinor unpack(const Vec4& v) { return {Complex(v[0], v[1]), Complex(v[2], v[3])}; }

struct SchrodingerRhs {
    const ControlWaveforms& controls;
    PerturbationParams p;

    void operator()(double t, const Vec4& y, Vec4& dy) const {
        const ControlSample c = controls.at(t);
        const double d = 0.5 * (c.detuning + p.delta);
        const double w = 0.5 * ((1.0 + p.alpha) * c.rabi + p.beta);
        // dc1/dt = -i(-d c1 + w c2), dc2/dt = -i(w c1 + d c2)
        const double h1r = -d * y[0] + w * y[2];
        const double h1i = -d * y[1] + w * y[3];
        const double h2r = w * y[0] + d * y[2];
        const double h2i = w * y[1] + d * y[3];
        dy = {h1i, -h1r, h2i, -h2r};
    }
};

void check_window(const ControlWaveforms& controls, double t) {
    const double tol = 1e-12 * std::max(1.0, std::abs(controls.t_end() - controls.t_begin()));
    if (t < controls.t_begin() - tol || t > controls.t_end() + tol)
        throw InputError("propagation time " + std::to_string(t) + " outside the control window");
}

void check_initial(const Spinor& s) {
    if (std::abs(norm(s) - 1.0) > 1e-10) throw InputError("initial state must have unit norm (within 1e-10)");
}

// Unless the caller set one, cap the step at the control sampling interval
// (and at 1/500 of the window) so near-zero tails cannot grow the step past a pulse edge.
StepControl bounded_steps(const ControlWaveforms& controls, StepControl step) {
    if (std::isfinite(step.max_step)) return step;
    const double window = controls.t_end() - controls.t_begin();
    double spacing = 0.0;
    for (std::size_t i = 1; i < controls.size(); ++i)
        spacing = std::max(spacing, controls.time_grid[i] - controls.time_grid[i - 1]);
    step.max_step = std::min(spacing, window / 500.0);
    return step;
}

double wrap_pi(double a) {
    a = std::remainder(a, 2.0 * kPi);
    return a;
}

double nearest_branch(double angle, double reference) {
    return reference + std::remainder(angle - reference, 2.0 * kPi);
}

std::vector<double> unwrap(std::vector<double> v) {
    for (std::size_t i = 1; i < v.size(); ++i) v[i] = nearest_branch(v[i], v[i - 1]);
    return v;
}

}  // namespace

double norm(const Spinor& s) { return std::sqrt(std::norm(s[0]) + std::norm(s[1])); }

double StateTrajectory::max_norm_deviation() const {
    double m = 0.0;
    for (const auto& s : states) m = std::max(m, std::abs(norm(s) - 1.0));
    return m;
}

StateTrajectory propagate_on(const ControlWaveforms& controls, const PerturbationParams& p, const Spinor& initial,
                             std::span<const double> output_times, const StepControl& step) {
    if (!controls.exact) controls.validate();
    check_initial(initial);
    if (output_times.empty()) throw InputError("propagate: empty output grid");
    for (double t : output_times) check_window(controls, t);

    StateTrajectory traj;
    traj.time_grid.assign(output_times.begin(), output_times.end());
    traj.states.reserve(output_times.size());

    SchrodingerRhs rhs{controls, p};
    Dopri5<4> solver(bounded_steps(controls, step));
    Vec4 y = pack(initial);
    double t = output_times.front();
    traj.states.push_back(initial);
    for (std::size_t i = 1; i < output_times.size(); ++i) {
        solver.advance(rhs, t, y, output_times[i]);
        traj.states.push_back(unpack(y));
    }
    traj.populations.reserve(traj.states.size());
    for (const auto& s : traj.states) traj.populations.emplace_back(std::norm(s[0]), std::norm(s[1]));
    traj.stats = solver.stats();
    return traj;
}

StateTrajectory propagate(const ControlWaveforms& controls, const PerturbationParams& p, const Spinor& initial,
                          const StepControl& step, std::size_t samples) {
    if (!controls.exact) controls.validate();
    if (controls.size() < 2) throw InputError("propagate: controls need at least two samples");
    const auto grid = uniform_grid(controls.t_begin(), controls.t_end(), samples);
    return propagate_on(controls, p, initial, grid, step);
}

Spinor evolve(const ControlWaveforms& controls, const PerturbationParams& p, const Spinor& initial, double t_from,
              double t_to, const StepControl& step) {
    const std::array<double, 2> times{t_from, t_to};
    return propagate_on(controls, p, initial, times, step).final_state();
}

DynamicalAngles state_to_angles(const Spinor& s) {
    const double a1 = std::abs(s[0]);
    const double a2 = std::abs(s[1]);
    DynamicalAngles out;
    out.theta = 2.0 * std::atan2(a2, a1);
    constexpr double kZero = 1e-15;
    if (a2 <= kZero * a1) {
        out.varphi = 0.5 * kPi;
        out.gamma = out.varphi - 2.0 * std::arg(s[0]);
    } else if (a1 <= kZero * a2) {
        out.varphi = 0.5 * kPi;
        out.gamma = -out.varphi - 2.0 * std::arg(s[1]);
    } else {
        out.varphi = wrap_pi(std::arg(s[0]) - std::arg(s[1]));
        out.gamma = out.varphi - 2.0 * std::arg(s[0]);
    }
    return out;
}

AngleSamples extract_angles(const StateTrajectory& traj) {
    AngleSamples a;
    a.time = traj.time_grid;
    const std::size_t n = traj.states.size();
    a.theta.resize(n);
    a.varphi.resize(n);
    a.gamma.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        const DynamicalAngles d = state_to_angles(traj.states[i]);
        a.theta[i] = d.theta;
        a.varphi[i] = d.varphi;
        a.gamma[i] = d.gamma;
    }
    a.gamma = unwrap(std::move(a.gamma));
    return a;
}

namespace {

enum class Chart { north, bulk, south };

// Chart variables:
//   north: (Re b, Im b, zeta), b = c2/c1 = e^{-i varphi} tan(theta/2), zeta = arg c1 = (varphi - gamma)/2
//   bulk:  (theta, varphi, gamma)
//   south: (Re d, Im d, eta),  d = c1/c2 = e^{i varphi} cot(theta/2),  eta = arg c2 = -(varphi + gamma)/2
struct AngleRhs {
    const ControlWaveforms& controls;
    Chart chart = Chart::bulk;

    void operator()(double t, const Vec3& y, Vec3& dy) const {
        const ControlSample c = controls.at(t);
        const double om = c.rabi;
        const double de = c.detuning;
        switch (chart) {
            case Chart::bulk: {
                const double st = std::sin(y[0]);
                const double ct = std::cos(y[0]);
                const double sp = std::sin(y[1]);
                const double cp = std::cos(y[1]);
                dy[0] = om * sp;
                dy[1] = de + om * cp * ct / st;
                dy[2] = om * cp / st;
                break;
            }
            case Chart::north: {
                // db/dt = -i (Omega/2 + Delta b - (Omega/2) b^2)
                const Complex b(y[0], y[1]);
                const Complex rate = Complex(0.0, -1.0) * (0.5 * om + de * b - 0.5 * om * b * b);
                dy[0] = rate.real();
                dy[1] = rate.imag();
                dy[2] = 0.5 * de - 0.5 * om * b.real();
                break;
            }
            case Chart::south: {
                // dd/dt = -i (Omega/2 - Delta d - (Omega/2) d^2)
                const Complex d(y[0], y[1]);
                const Complex rate = Complex(0.0, -1.0) * (0.5 * om - de * d - 0.5 * om * d * d);
                dy[0] = rate.real();
                dy[1] = rate.imag();
                dy[2] = -0.5 * de - 0.5 * om * d.real();
                break;
            }
        }
    }
};

// Converts chart variables to angles; varphi is placed on the branch nearest `varphi_ref`.
DynamicalAngles chart_to_angles(Chart chart, const Vec3& y, double varphi_ref) {
    switch (chart) {
        case Chart::bulk:
            return {y[0], y[1], y[2]};
        case Chart::north: {
            const Complex b(y[0], y[1]);
            const double mag = std::abs(b);
            const double varphi = mag > 0.0 ? nearest_branch(-std::arg(b), varphi_ref) : varphi_ref;
            return {2.0 * std::atan(mag), varphi, varphi - 2.0 * y[2]};
        }
        case Chart::south: {
            const Complex d(y[0], y[1]);
            const double mag = std::abs(d);
            const double varphi = mag > 0.0 ? nearest_branch(std::arg(d), varphi_ref) : varphi_ref;
            return {kPi - 2.0 * std::atan(mag), varphi, -varphi - 2.0 * y[2]};
        }
    }
    return {};
}

Vec3 angles_to_chart(Chart chart, const DynamicalAngles& a) {
    switch (chart) {
        case Chart::bulk:
            return {a.theta, a.varphi, a.gamma};
        case Chart::north: {
            const Complex b = std::polar(std::tan(0.5 * a.theta), -a.varphi);
            return {b.real(), b.imag(), 0.5 * (a.varphi - a.gamma)};
        }
        case Chart::south: {
            const Complex d = std::polar(1.0 / std::tan(0.5 * a.theta), a.varphi);
            return {d.real(), d.imag(), -0.5 * (a.varphi + a.gamma)};
        }
    }
    return {};
}

}  // namespace

AngleSamples integrate_angle_odes(const ControlWaveforms& controls, const DynamicalAngles& initial,
                                  const StepControl& step, std::size_t samples, PoleLaunch launch) {
    if (!controls.exact) controls.validate();
    const double st0 = std::sin(initial.theta);
    const bool on_pole = std::abs(st0) < 1e-12;
    if (launch == PoleLaunch::none && on_pole)
        throw DomainError("integrate_angle_odes: cannot start on a pole (theta in {0, pi}) without a regularized launch");

    AngleRhs rhs{controls, Chart::bulk};
    if (launch == PoleLaunch::regularized) {
        if (initial.theta < kChartEnter) rhs.chart = Chart::north;
        if (initial.theta > kPi - kChartEnter) rhs.chart = Chart::south;
    }

    const auto grid = uniform_grid(controls.t_begin(), controls.t_end(), samples);
    AngleSamples out;
    out.time = grid;
    out.theta.reserve(samples);
    out.varphi.reserve(samples);
    out.gamma.reserve(samples);

    Dopri5<3> solver(bounded_steps(controls, step));
    Vec3 y = angles_to_chart(rhs.chart, initial);
    double t = grid.front();
    double varphi_ref = initial.varphi;

    auto record = [&](const DynamicalAngles& a) {
        const double wrapped = wrap_pi(a.varphi);
        out.theta.push_back(a.theta);
        out.varphi.push_back(wrapped);
        out.gamma.push_back(a.gamma - (a.varphi - wrapped));
    };
    record(initial);

    // After each accepted step decide whether the chart must change.
    auto post = [&](double, const Vec3& state) {
        const DynamicalAngles a = chart_to_angles(rhs.chart, state, varphi_ref);
        varphi_ref = a.varphi;
        if (launch == PoleLaunch::none) return false;
        switch (rhs.chart) {
            case Chart::bulk:
                return a.theta < kChartEnter || a.theta > kPi - kChartEnter;
            case Chart::north:
                return a.theta > kChartLeave;
            case Chart::south:
                return a.theta < kPi - kChartLeave;
        }
        return false;
    };

    for (std::size_t i = 1; i < samples; ++i) {
        while (!solver.advance(rhs, t, y, grid[i], post)) {
            const DynamicalAngles a = chart_to_angles(rhs.chart, y, varphi_ref);
            if (a.theta < kChartEnter)
                rhs.chart = Chart::north;
            else if (a.theta > kPi - kChartEnter)
                rhs.chart = Chart::south;
            else
                rhs.chart = Chart::bulk;
            y = angles_to_chart(rhs.chart, a);
            solver.reset();
        }
        const DynamicalAngles a = chart_to_angles(rhs.chart, y, varphi_ref);
        varphi_ref = a.varphi;
        record(a);
    }
    out.gamma = unwrap(std::move(out.gamma));
    return out;
}

double transfer_infidelity(const Spinor& final_state, const Spinor& target) {
    if (std::abs(norm(target) - 1.0) > 1e-10) throw InputError("target state must have unit norm");
    const Complex overlap = std::conj(target[0]) * final_state[0] + std::conj(target[1]) * final_state[1];
    return 1.0 - std::norm(overlap);
}

double transfer_infidelity(const StateTrajectory& traj, const Spinor& target) {
    return transfer_infidelity(traj.final_state(), target);
}

}  // namespace qsq
