#include <doctest.h>

#include <cmath>

#include "qsq/optim.hpp"

using namespace qsq::optim;

TEST_CASE("lbfgs on Rosenbrock") {
    const ValueGrad f = [](const Vector& x, Vector& g) {
        const double a = 1 - x[0], b = x[1] - x[0] * x[0];
        g[0] = -2 * a - 400 * x[0] * b;
        g[1] = 200 * b;
        return a * a + 100 * b * b;
    };
    const Result r = lbfgs(f, {-1.2, 1.0});
    CHECK(r.converged);
    CHECK(r.x[0] == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(r.x[1] == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("nelder-mead on a non-smooth max") {
    const Value f = [](const Vector& x) { return std::max(std::abs(x[0] - 0.3), std::abs(x[1] + 0.7)) + 0.1 * x[0] * x[0]; };
    const Result r = nelder_mead(f, {1.0, 1.0}, {0.5, 0.5});
    CHECK(r.value <= f({1.0, 1.0}));
    CHECK(r.value < 0.01);
}

TEST_CASE("augmented lagrangian: closest point on a circle") {
    // min (x-2)^2 + (y-1)^2 s.t. x^2 + y^2 = 1 -> (2, 1)/sqrt(5)
    const ValueGrad f = [](const Vector& x, Vector& g) {
        g[0] = 2 * (x[0] - 2);
        g[1] = 2 * (x[1] - 1);
        return (x[0] - 2) * (x[0] - 2) + (x[1] - 1) * (x[1] - 1);
    };
    const Constraints c = [](const Vector& x, Vector& v, Vector& j) {
        v[0] = x[0] * x[0] + x[1] * x[1] - 1;
        j[0] = 2 * x[0];
        j[1] = 2 * x[1];
    };
    AugLagOptions opt;
    opt.constraints = 1;
    const AugLagResult r = augmented_lagrangian(f, c, {0.1, 0.1}, opt);
    CHECK(r.max_violation < 1e-9);
    CHECK(r.inner.x[0] == doctest::Approx(2 / std::sqrt(5.0)).epsilon(1e-7));
    CHECK(r.inner.x[1] == doctest::Approx(1 / std::sqrt(5.0)).epsilon(1e-7));
}
