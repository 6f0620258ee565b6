#include <doctest.h>

#include <cmath>
#include <numbers>

#include "qsq/error.hpp"
#include "qsq/tcap.hpp"
#include "qsq/tdse.hpp"

using namespace qsq;
constexpr double pi = std::numbers::pi;

namespace {

ControlWaveforms square(double omega, double detuning, double duration, std::size_t n = 201) {
    return sample_controls([=](double) { return ControlSample{omega, detuning}; }, 0.0, duration, n, "square");
}

}  // namespace

TEST_CASE("Rabi pi and 2pi pulses") {
    const StateTrajectory a = propagate(square(1.0, 0.0, pi), {}, ground_state());
    CHECK(std::abs(a.populations.back().second - 1.0) < 1e-10);
    CHECK(transfer_infidelity(a, excited_state()) < 1e-10);
    const StateTrajectory b = propagate(square(1.0, 0.0, 2 * pi), {}, ground_state());
    CHECK(std::abs(b.populations.back().first - 1.0) < 1e-10);
}

TEST_CASE("detuned Rabi formula") {
    for (auto [om, de, tp] : {std::array{1.0, 0.5, 2.3}, std::array{0.7, -1.9, 5.0}, std::array{2.0, 3.0, 0.4}}) {
        const StateTrajectory tr = propagate(square(om, de, tp), {}, ground_state(), {}, 401);
        const double w = std::hypot(om, de);
        for (std::size_t i = 0; i < tr.time_grid.size(); i += 50) {
            const double s = std::sin(w * tr.time_grid[i] / 2);
            CHECK(std::abs(tr.populations[i].second - om * om / (w * w) * s * s) < 1e-9);
        }
    }
}

TEST_CASE("perturbed flat pulse closed form") {
    for (double alpha : {-0.1, 0.03, 0.1}) {
        const Spinor psi = evolve(square(1.0, 0.0, pi), {alpha, 0, 0}, ground_state(), 0.0, pi);
        const double c = std::cos((1 + alpha) * pi / 2);
        CHECK(transfer_infidelity(psi, excited_state()) == doctest::Approx(c * c).epsilon(1e-9));
    }
}

TEST_CASE("trajectory invariants") {
    const ControlWaveforms c = parallel_waveforms({3.0, 1.0}, -4.0, 4.0, 801);
    const StateTrajectory tr = propagate(c, {}, ground_state());
    CHECK(tr.time_grid.size() == kDefaultSamples);
    CHECK(tr.time_grid.back() == c.t_end());
    CHECK(tr.max_norm_deviation() < 1e-10);
    for (const auto& [pg, pe] : tr.populations) CHECK(std::abs(pg + pe - 1.0) < 1e-10);
}

TEST_CASE("infidelity extremes") {
    CHECK(transfer_infidelity(excited_state(), excited_state()) == 0.0);
    CHECK(transfer_infidelity(ground_state(), excited_state()) == 1.0);
    CHECK_THROWS_AS(transfer_infidelity(ground_state(), Spinor{Complex(1, 0), Complex(1, 0)}), InputError);
}

TEST_CASE("time reversal") {
    const ControlWaveforms c = parallel_waveforms({2.5, 1.0}, -4.0, 4.0, 801);
    const Spinor init{Complex(0.6, 0.0), Complex(0.0, 0.8)};
    const Spinor fwd = evolve(c, {0.05, 0.02, -0.01}, init, c.t_begin(), c.t_end());
    const Spinor back = evolve(c, {0.05, 0.02, -0.01}, fwd, c.t_end(), c.t_begin());
    CHECK(std::abs(back[0] - init[0]) + std::abs(back[1] - init[1]) < 1e-8);
}

TEST_CASE("fixed-step order on the Rabi problem") {
    const ControlWaveforms c = square(1.0, 0.7, 6.0);
    auto error = [&](double h) {
        StepControl s;
        s.fixed_step = h;
        const Spinor psi = evolve(c, {}, ground_state(), 0.0, 6.0, s);
        const double w = std::hypot(1.0, 0.7), sn = std::sin(w * 3.0);
        return std::abs(std::norm(psi[1]) - sn * sn / (w * w));
    };
    const double e1 = error(0.2), e2 = error(0.1);
    CHECK(e1 / e2 > 16.0);
}

TEST_CASE("input validation") {
    const ControlWaveforms c = square(1.0, 0.0, 1.0);
    CHECK_THROWS_AS(propagate(c, {}, Spinor{Complex(1, 0), Complex(0.1, 0)}), InputError);
    CHECK_THROWS_AS(evolve(c, {}, ground_state(), 0.0, 2.0), InputError);
}

TEST_CASE("integration failure is reported with its time") {
    StepControl s;
    s.max_steps = 3;
    try {
        evolve(square(50.0, 0.0, 10.0), {}, ground_state(), 0.0, 10.0, s);
        FAIL("expected IntegrationError");
    } catch (const IntegrationError& e) {
        CHECK(e.time() >= 0.0);
        CHECK(e.time() < 10.0);
    }
}

TEST_CASE("extract angles") {
    CHECK(state_to_angles(ground_state()).theta == 0.0);
    const double r = std::sqrt(0.5);
    const DynamicalAngles d = state_to_angles({Complex(r, 0), Complex(r, 0)});
    CHECK(d.theta == doctest::Approx(pi / 2));
    const Spinor back = angles_to_state(d);
    CHECK(std::abs(std::abs(back[0] + back[1]) - 2 * r) < 1e-15);

    const ControlWaveforms c = parallel_waveforms({3.0, 1.0}, -4.0, 4.0, 801);
    const StateTrajectory tr = propagate(c, {}, ground_state(), {}, 801);
    const AngleSamples a = extract_angles(tr);
    for (std::size_t i = 0; i < a.size(); ++i) {
        const Spinor s = angles_to_state(a.at(i));
        const Complex ov = std::conj(s[0]) * tr.states[i][0] + std::conj(s[1]) * tr.states[i][1];
        CHECK(std::abs(std::abs(ov.real()) - 1.0) < 1e-10);
        CHECK(a.varphi[i] >= -pi);
        CHECK(a.varphi[i] <= pi);
        if (i > 0) CHECK(std::abs(a.gamma[i] - a.gamma[i - 1]) < pi);
    }
}

TEST_CASE("angle equations: resonant reduction") {
    const ControlWaveforms c = square(1.3, 0.0, 1.0);
    const AngleSamples a = integrate_angle_odes(c, {1e-3, pi / 2, 0.2}, {}, 101);
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a.theta[i] == doctest::Approx(1e-3 + 1.3 * a.time[i]).epsilon(1e-9));
        CHECK(std::abs(a.varphi[i] - pi / 2) < 1e-9);
        CHECK(std::abs(a.gamma[i] - 0.2) < 1e-9);
    }
}

TEST_CASE("angle equations refuse a pole start without the launch") {
    CHECK_THROWS_AS(integrate_angle_odes(square(1.0, 0.0, 1.0), {0.0, pi / 2, 0.0}, {}, 11, PoleLaunch::none), DomainError);
}

TEST_CASE("angle equations agree with the propagator on the hyper-Gaussian TCAP design") {
    const ParallelBase base = parallel_base_for_area(5.84, 1.0);
    const TcapDesign d = make_tcap_design(base, hg_rescale(14, 3.0, 4.0, base).rescale);
    const AngleSamples ode = integrate_angle_odes(d.controls, {0.0, pi / 2, pi / 2});
    const AngleSamples tdse = extract_angles(propagate(d.controls, {}, angles_to_state({0.0, pi / 2, pi / 2})));
    double worst = 0.0;
    for (std::size_t i = 0; i < ode.size(); ++i) worst = std::max(worst, std::abs(ode.theta[i] - tdse.theta[i]));
    CHECK(worst < 1e-5);

    // cot(varphi) = gamma_dot sin(theta) / theta_dot along the solution
    const auto th_dot = finite_difference(ode.time, ode.theta);
    const auto ga_dot = finite_difference(ode.time, ode.gamma);
    double worst_cot = 0.0;
    for (std::size_t i = 0; i < ode.size(); ++i) {
        const double s = std::sin(ode.theta[i]);
        if (s < 0.1 || std::abs(th_dot[i]) < 0.1 || std::abs(std::sin(ode.varphi[i])) < 0.1) continue;
        worst_cot = std::max(worst_cot, std::abs(ga_dot[i] * s / th_dot[i] - std::cos(ode.varphi[i]) / std::sin(ode.varphi[i])));
    }
    CHECK(worst_cot < 1e-6);
}
