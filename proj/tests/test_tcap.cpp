#include <doctest.h>

#include <cmath>
#include <map>
#include <numbers>

#include "qsq/error.hpp"
#include "qsq/specfun.hpp"
#include "qsq/tcap.hpp"

using namespace qsq;
constexpr double pi = std::numbers::pi;

namespace {

const ParallelBase& base() {
    static const ParallelBase b = parallel_base_for_area(5.84, 1.0);
    return b;
}

const SineOptimization& sine_opt(int n) {
    static std::map<int, SineOptimization> cache;
    auto it = cache.find(n);
    if (it == cache.end()) it = cache.emplace(n, optimize_sine_coefficients(n, 3.0, base(), -4.0, 4.0)).first;
    return it->second;
}

const HgRescale& hg() {
    static const HgRescale h = hg_rescale(14, 3.0, 4.0, base());
    return h;
}

}  // namespace

TEST_CASE("parallel controls") {
    const ControlSample c0 = parallel_controls(2.0, 1.5, 0.0);
    CHECK(c0.rabi == 2.0);
    CHECK(c0.detuning == 0.0);
    const ControlSample far = parallel_controls(2.0, 1.0, 40.0);
    CHECK(far.rabi == doctest::Approx(0.0));
    CHECK(far.detuning == doctest::Approx(2.0));
    CHECK(parallel_controls(2.0, 1.0, -40.0).detuning == doctest::Approx(-2.0));
    double worst = 0.0;
    for (int i = 0; i <= 10000; ++i) {
        const double t = -6.0 + 12.0 * i / 10000.0;
        const ControlSample c = parallel_controls(3.3, 0.8, t);
        worst = std::max(worst, std::abs(std::hypot(c.rabi, c.detuning) - 3.3) / 3.3);
    }
    CHECK(worst < 1e-14);
    CHECK(base().area() == doctest::Approx(5.84).epsilon(1e-15));
    CHECK(base().peak == doctest::Approx(5.84 / std::sqrt(pi)).epsilon(1e-15));
}

TEST_CASE("adiabatic frame") {
    const AdiabaticFrame a = adiabatic_frame(1.0, -1.0);
    CHECK(a.mixing == doctest::Approx(pi / 4));
    CHECK(a.gap == doctest::Approx(std::sqrt(2.0)));
    CHECK(adiabatic_frame(1.0, 1.0).mixing == doctest::Approx(3 * pi / 4));
    CHECK(adiabatic_frame(1.0, 0.0).mixing == doctest::Approx(pi / 2));
    CHECK(adiabatic_frame(0.0, -1.0).mixing == doctest::Approx(0.0));
}

TEST_CASE("sine expansion") {
    const RescaleValue id = sine_expansion_g(1.0, {0.0, 0.0}, -4.0, 4.0, 1.3);
    CHECK(id.g == doctest::Approx(1.3));
    CHECK(id.slope == doctest::Approx(1.0));

    // -8 / (3 pi), frozen
    CHECK(sine_constraint_target(3.0, -4.0, 4.0) == doctest::Approx(-0.8488263631567751241).epsilon(1e-15));

    const double target = sine_constraint_target(3.0, -4.0, 4.0);
    const std::vector<double> c{0.1, -0.2, (target - 0.1 + 0.4) / 3.0};
    const RescaleFunction g = sine_rescale(3.0, c, -4.0, 4.0);
    const BoundaryReport b = boundary_report(g);
    CHECK(b.max_error() < 1e-10);
    CHECK(g(g.tau_end()).g == doctest::Approx(4.0).epsilon(1e-14));
    CHECK(g(g.tau_begin()).slope == doctest::Approx(1.0).epsilon(1e-14));

    CHECK_THROWS_AS(sine_expansion_g(3.0, {0.1, 0.1}, -4.0, 4.0, 0.0), InputError);
}

TEST_CASE("sine optimization at a = 3") {
    const double p2 = sine_opt(2).peak, p3 = sine_opt(3).peak, p6 = sine_opt(6).peak;
    CHECK(p3 < p2);
    CHECK(p6 < p3);
    for (int n : {2, 3, 6}) {
        const SineOptimization& o = sine_opt(n);
        CHECK(o.peak <= o.seed_peak);
        CHECK(o.coeffs.size() == static_cast<std::size_t>(n));
        const RescaleFunction g = sine_rescale(3.0, o.coeffs, -4.0, 4.0);
        const BoundaryReport b = boundary_report(g);
        CHECK(b.max_error() < 1e-10);
        CHECK(g.min_slope(10000) > 0.0);
        CHECK(sine_peak(base(), 3.0, o.coeffs, -4.0, 4.0) == doctest::Approx(o.peak).epsilon(1e-14));
    }
}

TEST_CASE("sine optimization is the identity at a = 1") {
    const SineOptimization o = optimize_sine_coefficients(4, 1.0, base(), -4.0, 4.0);
    for (double c : o.coeffs) CHECK(c == 0.0);
    CHECK(o.peak <= base().peak);
    CHECK(o.peak > base().peak * (1.0 - 1e-5));
}

TEST_CASE("N = 6 optimum survives a grid refinement") {
    const SineOptimization& o = sine_opt(6);
    const double target = sine_constraint_target(3.0, -4.0, 4.0);
    double best = o.peak;
    for (double step : {1e-2, 1e-3}) {
        for (int code = 0; code < 243; ++code) {
            std::vector<double> c = o.coeffs;
            int k = code;
            double sum = 0.0;
            for (int j = 0; j < 5; ++j) {
                c[j] += step * (k % 3 - 1);
                k /= 3;
                sum += (j + 1) * c[j];
            }
            c[5] = (target - sum) / 6.0;
            if (sine_rescale(3.0, c, -4.0, 4.0).min_slope(4096) <= 0.0) continue;
            best = std::min(best, sine_peak(base(), 3.0, c, -4.0, 4.0));
        }
    }
    CHECK(best >= o.peak * (1.0 - 1e-3));
}

TEST_CASE("hyper-Gaussian rescaling closed forms") {
    const HgRescale& h = hg();
    CHECK(h.rescale.sigma == doctest::Approx(1.095).epsilon(0.01));
    CHECK(h.rescale.peak_ratio == doctest::Approx(0.84).epsilon(0.01));
    CHECK(h.pulse.peak == doctest::Approx(h.rescale.peak_ratio * base().peak).epsilon(1e-14));

    // both conditions of the fixed point
    const double n = 14.0, sigma = h.rescale.sigma, ratio = h.rescale.peak_ratio;
    CHECK(sigma * ratio == doctest::Approx(std::sqrt(pi) * n / (2.0 * specfun::gamma(1.0 / n))).epsilon(1e-12));
    CHECK(sigma == doctest::Approx(4.0 / (3.0 * std::pow(std::log(ratio) + 16.0, 1.0 / n))).epsilon(1e-12));
    // rescaled pulse value at the window edge equals the base pulse at t_f
    const double edge = h.rescale.tau_end();
    CHECK(h.pulse.value(edge) == doctest::Approx(base().peak * std::exp(-16.0)).epsilon(1e-10));
}

TEST_CASE("hyper-Gaussian rescaling reproduces the pulse") {
    const HgRescale& h = hg();
    const ControlWaveforms c = rescaled_controls(base(), h.rescale, 2001);
    double worst = 0.0, odd = 0.0;
    for (int i = 0; i <= 4000; ++i) {
        const double tau = -1.3 * h.pulse.width + 2.6 * h.pulse.width * i / 4000.0;
        const double want = h.pulse.value(tau);
        worst = std::max(worst, std::abs(c.exact(tau).rabi - want) / want);
        odd = std::max(odd, std::abs(h.rescale(tau).g + h.rescale(-tau).g));
    }
    CHECK(worst < 1e-8);
    CHECK(odd < 1e-10);
    CHECK(std::abs(h.rescale(0.0).g) < 1e-15);
    CHECK(std::abs(h.rescale(1e-9).slope - h.rescale(-1e-9).slope) < 1e-10);
    CHECK(h.rescale.min_slope(10000) > 0.0);
}

TEST_CASE("rescaled controls") {
    RescaleFunction id;
    const ControlWaveforms a = rescaled_controls(base(), id, 401);
    const ControlWaveforms b = parallel_waveforms(base(), -4.0, 4.0, 401);
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a.time_grid[i] == doctest::Approx(b.time_grid[i]));
        CHECK(a.rabi[i] == doctest::Approx(b.rabi[i]).epsilon(1e-15));
        CHECK(a.detuning[i] == doctest::Approx(b.detuning[i]).epsilon(1e-15));
    }

    std::vector<RescaleFunction> designs{hg().rescale};
    for (int n : {2, 3, 6}) designs.push_back(sine_rescale(3.0, sine_opt(n).coeffs, -4.0, 4.0));
    for (const RescaleFunction& g : designs) {
        const TcapDesign d = make_tcap_design(base(), g, 2001);
        CHECK(std::abs(d.rescaled_area - d.original_area) / d.original_area < 1e-6);
        double gap = 0.0;
        for (int i = 0; i <= 5000; ++i) {
            const double tau = g.tau_begin() + (g.tau_end() - g.tau_begin()) * i / 5000.0;
            const ControlSample s = d.controls.exact(tau);
            const double want = base().peak * g(tau).slope;
            gap = std::max(gap, std::abs(std::hypot(s.rabi, s.detuning) - want) / want);
        }
        CHECK(gap < 1e-10);
    }
}

TEST_CASE("exact-state equivalence") {
    CHECK(rescaling_equivalence_check(base(), RescaleFunction{}) < 1e-9);
    CHECK(rescaling_equivalence_check(base(), sine_rescale(3.0, sine_opt(6).coeffs, -4.0, 4.0)) < 1e-6);
    CHECK(rescaling_equivalence_check(base(), hg().rescale) < 1e-6);
    CHECK(rescaling_equivalence_check(base(), sine_rescale(3.0, sine_opt(2).coeffs, -4.0, 4.0), {0.05, 0.0, 0.0}) < 1e-6);
}

TEST_CASE("input checks") {
    CHECK_THROWS_AS(hg_rescale(13, 3.0, 4.0, base()), InputError);
    CHECK_THROWS_AS(hg_rescale(14, 1.0, 4.0, base()), InputError);
    CHECK_THROWS_AS(optimize_sine_coefficients(1, 3.0, base(), -4.0, 4.0), InputError);
    CHECK_THROWS_AS(parallel_base_for_area(-1.0), InputError);
}
