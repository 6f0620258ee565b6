#include <doctest.h>

#include <cmath>
#include <numbers>

#include "oracle.hpp"
#include "qsq/error.hpp"
#include "qsq/model.hpp"
#include "qsq/specfun.hpp"
#include "qsq/tdse.hpp"

using namespace qsq;
constexpr double pi = std::numbers::pi;

TEST_CASE("hamiltonian matrix") {
    const Matrix2 h0 = hamiltonian_matrix(1.3, -0.4, {});
    CHECK(h0[0][0].real() == doctest::Approx(0.2));
    CHECK(h0[1][1].real() == doctest::Approx(-0.2));
    CHECK(h0[0][1].real() == doctest::Approx(0.65));
    CHECK(h0[0][1] == h0[1][0]);

    const Matrix2 h = hamiltonian_matrix(1.0, 0.0, {0.1, 0.3, 0.2});
    CHECK(h[0][1].real() == doctest::Approx(0.65).epsilon(1e-15));
    CHECK(h[0][0].real() == doctest::Approx(-0.15).epsilon(1e-15));
    CHECK(h[1][1].real() == doctest::Approx(0.15).epsilon(1e-15));
    CHECK(h[1][0] == std::conj(h[0][1]));

    // eigenvalues +- sqrt(Omega^2 + Delta^2) / 2
    const double om = 0.8, de = 1.7;
    const Matrix2 m = hamiltonian_matrix(om, de, {});
    const double tr = (m[0][0] + m[1][1]).real();
    const double det = (m[0][0] * m[1][1] - m[0][1] * m[1][0]).real();
    CHECK(tr == doctest::Approx(0.0));
    CHECK(std::sqrt(-det) == doctest::Approx(0.5 * std::hypot(om, de)).epsilon(1e-15));
}

TEST_CASE("hamiltonian is linear in each perturbation") {
    const double om = 1.1, de = 0.3;
    const Matrix2 base = hamiltonian_matrix(om, de, {});
    for (int axis = 0; axis < 3; ++axis) {
        PerturbationParams p1, p2;
        (axis == 0 ? p1.alpha : axis == 1 ? p1.delta : p1.beta) = 0.25;
        (axis == 0 ? p2.alpha : axis == 1 ? p2.delta : p2.beta) = 0.75;
        const Matrix2 h1 = hamiltonian_matrix(om, de, p1), h2 = hamiltonian_matrix(om, de, p2);
        for (int i = 0; i < 2; ++i)
            for (int j = 0; j < 2; ++j) CHECK(std::abs((h2[i][j] - base[i][j]) - 3.0 * (h1[i][j] - base[i][j])) < 1e-15);
    }
}

TEST_CASE("angles to state") {
    const Spinor a = angles_to_state({0.0, pi / 2, pi / 2});
    CHECK(std::abs(a[0] - Complex(1.0, 0.0)) < 1e-15);
    CHECK(std::abs(a[1]) < 1e-15);

    for (double ph : {0.0, 1.0, -2.5}) {
        const Spinor b = angles_to_state({pi, ph, 0.7 * ph});
        CHECK(std::norm(b[0]) < 1e-30);
        CHECK(std::norm(b[1]) == doctest::Approx(1.0));
    }
    const Spinor c = angles_to_state({pi / 2, 0.0, 0.0});
    CHECK(std::abs(c[0] - Complex(std::sqrt(0.5), 0.0)) < 1e-15);
    CHECK(std::abs(c[1] - Complex(std::sqrt(0.5), 0.0)) < 1e-15);

    double worst = 0.0;
    for (int i = 0; i < 500; ++i) {
        const DynamicalAngles d{pi * std::fmod(0.618 * i, 1.0), -pi + 2 * pi * std::fmod(0.414 * i, 1.0), 13.0 * std::sin(i)};
        worst = std::max(worst, std::abs(norm(angles_to_state(d)) - 1.0));
    }
    CHECK(worst < 1e-14);
}

TEST_CASE("hyper-Gaussian value and area") {
    const HyperGaussianSpec hg{2.0, 1.3, 14};
    CHECK(hg.value(0.0) == 2.0);
    CHECK(hg.value(1.3) == doctest::Approx(2.0 / std::exp(1.0)).epsilon(1e-15));
    CHECK(hg.value(-0.9) == hg.value(0.9));
    CHECK(hyper_gaussian_value(hg, 0.4) == hg.value(0.4));

    const long double num = oracle::tanh_sinh(
        [](long double t) { return 2.0L * std::exp(-std::pow(std::fabs(t) / 1.3L, 14.0L)); }, -6 * 1.3L, 6 * 1.3L,
        1.0L / 1024);
    CHECK(hg.area() == doctest::Approx(static_cast<double>(num)).epsilon(1e-8));
    CHECK(hg.area() == doctest::Approx(2.0 * 2.0 * 1.3 * specfun::gamma(1.0 / 14.0) / 14.0).epsilon(1e-15));
    CHECK(hg.cumulative_area(0.0) == doctest::Approx(0.5 * hg.area()).epsilon(1e-14));
    CHECK(hg.cumulative_area(hg.support_half_width()) == doctest::Approx(hg.area()).epsilon(1e-14));

    CHECK_THROWS_AS((HyperGaussianSpec{1.0, 1.0, 3}.validate()), InputError);
    CHECK_THROWS_AS((HyperGaussianSpec{-1.0, 1.0, 2}.validate()), InputError);
}

TEST_CASE("hyper-Gaussian matched width") {
    const HyperGaussianSpec a = hyper_gaussian_matched(14, 2.77, 5.84);
    CHECK(std::abs(a.width - 1.095) < 0.01 * 1.095);
    CHECK(a.area() == doctest::Approx(5.84).epsilon(1e-14));

    const HyperGaussianSpec b = hyper_gaussian_matched(200, 1.0, 3.0);
    CHECK(std::abs(b.width - 1.5) < 0.015);

    const HyperGaussianSpec c = hyper_gaussian_matched(2, 1.0, std::sqrt(pi));
    CHECK(c.width == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("angles to controls: resonant and chirp-free cases") {
    const double w = 1.7;
    const auto t = uniform_grid(0.0, 1.5, 301);
    std::vector<double> th(t.size()), ga(t.size(), 0.4);
    for (std::size_t i = 0; i < t.size(); ++i) th[i] = 0.1 + w * t[i];
    const ControlWaveforms c = angles_to_controls(t, th, ga);
    for (std::size_t i = 0; i < t.size(); ++i) {
        CHECK(c.rabi[i] == doctest::Approx(w).epsilon(1e-12));
        CHECK(std::abs(c.detuning[i]) < 1e-10);
    }

    std::vector<double> th2(t.size(), pi / 2), ga2(t.size());
    for (std::size_t i = 0; i < t.size(); ++i) ga2[i] = w * t[i];
    const ControlWaveforms d = angles_to_controls(t, th2, ga2);
    for (std::size_t i = 0; i < t.size(); ++i) {
        CHECK(d.rabi[i] == doctest::Approx(w).epsilon(1e-12));
        CHECK(std::abs(d.detuning[i]) < 1e-10);
    }
}

TEST_CASE("angles to controls rejects a frozen trajectory") {
    const auto t = uniform_grid(0.0, 1.0, 101);
    std::vector<double> th(t.size()), ga(t.size(), 0.0);
    for (std::size_t i = 0; i < t.size(); ++i) th[i] = 0.6 + 2.0 * (std::min(t[i] - 0.3, 0.0) + std::max(t[i] - 0.7, 0.0));
    CHECK_THROWS_AS(angles_to_controls(t, th, ga), InputError);
}

TEST_CASE("angles to controls round trip through the propagator") {
    // theta: 0 -> pi with a smooth gamma chirp; endpoints use the pole conventions
    const auto t = uniform_grid(0.0, 3.0, 3001);
    std::vector<double> th(t.size()), ga(t.size());
    for (std::size_t i = 0; i < t.size(); ++i) {
        const double u = t[i] / 3.0;
        th[i] = pi * (u - std::sin(2 * pi * u) / (2 * pi));
        ga[i] = pi / 2 + 0.8 * std::sin(pi * u) * std::sin(pi * u);
    }
    const ControlWaveforms c = angles_to_controls(t, th, ga);
    CHECK_NOTHROW(c.validate());
    const StateTrajectory tr = propagate(c, {}, angles_to_state({th[0], pi / 2, ga[0]}), {}, 301);
    const AngleSamples a = extract_angles(tr);
    double worst_theta = 0.0, worst_gamma = 0.0;
    for (std::size_t k = 10; k + 10 < a.size(); ++k) {
        const std::size_t i = k * 10;
        worst_theta = std::max(worst_theta, std::abs(a.theta[k] - th[i]));
        worst_gamma = std::max(worst_gamma, std::abs(a.gamma[k] - ga[i]));
    }
    CHECK(worst_theta < 1e-5);
    CHECK(worst_gamma < 1e-5);
}

TEST_CASE("controls container") {
    ControlWaveforms c;
    c.time_grid = {0.0, 1.0, 2.0};
    c.rabi = {1.0, 1.0, 1.0};
    c.detuning = {0.0, 2.0, 4.0};
    CHECK_NOTHROW(c.validate());
    CHECK(c.area() == doctest::Approx(2.0));
    const auto phase = c.laser_phase();
    CHECK(phase[0] == 0.0);
    CHECK(phase[2] == doctest::Approx(4.0));
    c.rabi[1] = -0.1;
    CHECK_THROWS_AS(c.validate(), InputError);
    c.rabi[1] = 1.0;
    c.time_grid[2] = 1.0;
    CHECK_THROWS_AS(c.validate(), InputError);
    c.time_grid[2] = 2.0;
    c.detuning[0] = std::nan("");
    CHECK_THROWS_AS(c.validate(), InputError);
}

TEST_CASE("numerics helpers") {
    const auto x = uniform_grid(0.0, 2.0, 201);
    std::vector<double> y(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) y[i] = std::sin(x[i]);
    CHECK(simpson(x, y) == doctest::Approx(1.0 - std::cos(2.0)).epsilon(1e-10));
    const auto d = finite_difference(x, y);
    double worst = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) worst = std::max(worst, std::abs(d[i] - std::cos(x[i])));
    CHECK(worst < 1e-8);
    CHECK(uniform_grid(-1.0, 1.0, 3)[1] == 0.0);
}
