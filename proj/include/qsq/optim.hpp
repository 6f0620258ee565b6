#pragma once

#include <cstddef>
#include <functional>
#include <vector>

namespace qsq::optim {

using Vector = std::vector<double>;

/// Value and gradient: returns f(x) and writes grad (already sized).
using ValueGrad = std::function<double(const Vector& x, Vector& grad)>;
using Value = std::function<double(const Vector& x)>;
/// Equality constraints c(x) = 0: writes c (size m) and the row-major m x n Jacobian.
using Constraints = std::function<void(const Vector& x, Vector& c, Vector& jac)>;

struct Result {
    Vector x;
    double value = 0.0;
    std::size_t iterations = 0;
    std::size_t evaluations = 0;
    bool converged = false;
};

struct LbfgsOptions {
    std::size_t memory = 12;
    std::size_t max_iterations = 5000;
    double grad_tol = 1e-9;
    /// Stop when the relative decrease over one iteration falls below this.
    double rel_decrease_tol = 1e-15;
};

Result lbfgs(const ValueGrad& f, Vector x0, const LbfgsOptions& opt = {});

struct NelderMeadOptions {
    std::size_t max_evaluations = 20000;
    double x_tol = 1e-10;
    double f_tol = 1e-12;
    /// Restarts from the best vertex with a fresh simplex; guards against collapse.
    std::size_t restarts = 2;
};

/// Minimizes f from x0 with an initial simplex of per-coordinate offsets `step`.
Result nelder_mead(const Value& f, Vector x0, const Vector& step, const NelderMeadOptions& opt = {});

struct AugLagOptions {
    std::size_t constraints = 0;
    std::size_t max_outer = 40;
    double penalty0 = 10.0;
    double penalty_growth = 5.0;
    double penalty_max = 1e10;
    double constraint_tol = 1e-10;
    LbfgsOptions inner;
};

struct AugLagResult {
    Result inner;
    Vector constraint_values;
    Vector multipliers;
    std::size_t outer_iterations = 0;
    double max_violation = 0.0;
};

/// min f(x) subject to c(x) = 0 by the method of multipliers with L-BFGS inner solves.
AugLagResult augmented_lagrangian(const ValueGrad& f, const Constraints& c, Vector x0, const AugLagOptions& opt);

}  // namespace qsq::optim
