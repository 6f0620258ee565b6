#include "qsq/optim.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <numeric>

#include "qsq/error.hpp"

namespace qsq::optim {
namespace {

double dot(const Vector& a, const Vector& b) { return std::inner_product(a.begin(), a.end(), b.begin(), 0.0); }

double inf_norm(const Vector& a) {
    double m = 0.0;
    for (double v : a) m = std::max(m, std::abs(v));
    return m;
}

}  // namespace

Result lbfgs(const ValueGrad& f, Vector x, const LbfgsOptions& opt) {
    const std::size_t n = x.size();
    Vector g(n), g_new(n), x_new(n), d(n);
    Result res;
    double fx = f(x, g);
    ++res.evaluations;
    if (!std::isfinite(fx)) throw InputError("lbfgs: non-finite objective at the starting point");

    std::deque<Vector> s_hist, y_hist;
    std::deque<double> rho_hist;
    Vector alpha(opt.memory);

    for (res.iterations = 0; res.iterations < opt.max_iterations; ++res.iterations) {
        if (inf_norm(g) <= opt.grad_tol) {
            res.converged = true;
            break;
        }
        // Two-loop recursion.
        d = g;
        const std::size_t m = s_hist.size();
        for (std::size_t k = m; k-- > 0;) {
            alpha[k] = rho_hist[k] * dot(s_hist[k], d);
            for (std::size_t i = 0; i < n; ++i) d[i] -= alpha[k] * y_hist[k][i];
        }
        if (m > 0) {
            const double scale = dot(s_hist.back(), y_hist.back()) / dot(y_hist.back(), y_hist.back());
            for (double& v : d) v *= scale;
        } else {
            const double gn = std::sqrt(dot(g, g));
            for (double& v : d) v /= std::max(gn, 1.0);
        }
        for (std::size_t k = 0; k < m; ++k) {
            const double beta = rho_hist[k] * dot(y_hist[k], d);
            for (std::size_t i = 0; i < n; ++i) d[i] += (alpha[k] - beta) * s_hist[k][i];
        }
        for (double& v : d) v = -v;
        double slope = dot(g, d);
        if (slope >= 0.0) {
            s_hist.clear();
            y_hist.clear();
            rho_hist.clear();
            for (std::size_t i = 0; i < n; ++i) d[i] = -g[i];
            slope = -dot(g, g);
        }

        // Backtracking Armijo search with a cautious expansion on the first trial.
        double step = 1.0;
        double f_new = 0.0;
        bool accepted = false;
        for (int trial = 0; trial < 60; ++trial) {
            for (std::size_t i = 0; i < n; ++i) x_new[i] = x[i] + step * d[i];
            f_new = f(x_new, g_new);
            ++res.evaluations;
            if (std::isfinite(f_new) && f_new <= fx + 1e-4 * step * slope) {
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if (!accepted) break;

        Vector s(n), y(n);
        for (std::size_t i = 0; i < n; ++i) {
            s[i] = x_new[i] - x[i];
            y[i] = g_new[i] - g[i];
        }
        const double sy = dot(s, y);
        if (sy > 1e-12 * std::sqrt(dot(s, s) * dot(y, y))) {
            if (s_hist.size() == opt.memory) {
                s_hist.pop_front();
                y_hist.pop_front();
                rho_hist.pop_front();
            }
            s_hist.push_back(std::move(s));
            y_hist.push_back(std::move(y));
            rho_hist.push_back(1.0 / sy);
        }
        const double decrease = fx - f_new;
        x.swap(x_new);
        g.swap(g_new);
        fx = f_new;
        if (decrease <= opt.rel_decrease_tol * std::max(1.0, std::abs(fx))) {
            res.converged = inf_norm(g) <= std::sqrt(opt.grad_tol);
            ++res.iterations;
            break;
        }
    }
    res.x = std::move(x);
    res.value = fx;
    return res;
}

Result nelder_mead(const Value& f, Vector x0, const Vector& step, const NelderMeadOptions& opt) {
    const std::size_t n = x0.size();
    if (step.size() != n) throw InputError("nelder_mead: step size mismatch");
    Result res;
    Vector best = x0;
    double f_best = f(best);
    ++res.evaluations;

    for (std::size_t round = 0; round <= opt.restarts; ++round) {
        std::vector<Vector> simplex(n + 1, best);
        std::vector<double> fv(n + 1, f_best);
        for (std::size_t i = 0; i < n; ++i) {
            simplex[i + 1][i] += step[i];
            fv[i + 1] = f(simplex[i + 1]);
            ++res.evaluations;
        }
        std::vector<std::size_t> order(n + 1);
        Vector centroid(n), xr(n), xe(n), xc(n);
        while (res.evaluations < opt.max_evaluations) {
            std::iota(order.begin(), order.end(), 0);
            std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return fv[a] < fv[b]; });
            const std::size_t lo = order.front(), hi = order.back(), nh = order[n - 1];
            double spread = 0.0;
            for (std::size_t k = 0; k <= n; ++k)
                for (std::size_t i = 0; i < n; ++i)
                    spread = std::max(spread, std::abs(simplex[k][i] - simplex[lo][i]));
            if (spread < opt.x_tol || std::abs(fv[hi] - fv[lo]) < opt.f_tol * (1.0 + std::abs(fv[lo]))) break;
            ++res.iterations;

            std::fill(centroid.begin(), centroid.end(), 0.0);
            for (std::size_t k = 0; k <= n; ++k)
                if (k != hi)
                    for (std::size_t i = 0; i < n; ++i) centroid[i] += simplex[k][i] / static_cast<double>(n);
            for (std::size_t i = 0; i < n; ++i) xr[i] = 2.0 * centroid[i] - simplex[hi][i];
            const double fr = f(xr);
            ++res.evaluations;
            if (fr < fv[lo]) {
                for (std::size_t i = 0; i < n; ++i) xe[i] = 3.0 * centroid[i] - 2.0 * simplex[hi][i];
                const double fe = f(xe);
                ++res.evaluations;
                if (fe < fr) {
                    simplex[hi] = xe;
                    fv[hi] = fe;
                } else {
                    simplex[hi] = xr;
                    fv[hi] = fr;
                }
                continue;
            }
            if (fr < fv[nh]) {
                simplex[hi] = xr;
                fv[hi] = fr;
                continue;
            }
            const bool outside = fr < fv[hi];
            for (std::size_t i = 0; i < n; ++i)
                xc[i] = outside ? centroid[i] + 0.5 * (xr[i] - centroid[i])
                                : centroid[i] + 0.5 * (simplex[hi][i] - centroid[i]);
            const double fc = f(xc);
            ++res.evaluations;
            if (fc < std::min(fr, fv[hi])) {
                simplex[hi] = xc;
                fv[hi] = fc;
                continue;
            }
            for (std::size_t k = 0; k <= n; ++k) {
                if (k == lo) continue;
                for (std::size_t i = 0; i < n; ++i) simplex[k][i] = simplex[lo][i] + 0.5 * (simplex[k][i] - simplex[lo][i]);
                fv[k] = f(simplex[k]);
                ++res.evaluations;
            }
        }
        const auto it = std::min_element(fv.begin(), fv.end());
        const double f_round = *it;
        const bool improved = f_round < f_best;
        if (improved) {
            f_best = f_round;
            best = simplex[static_cast<std::size_t>(it - fv.begin())];
        }
        if (res.evaluations >= opt.max_evaluations) break;
        if (round > 0 && !improved) {
            res.converged = true;
            break;
        }
    }
    res.x = std::move(best);
    res.value = f_best;
    res.converged = res.converged || res.evaluations < opt.max_evaluations;
    return res;
}

AugLagResult augmented_lagrangian(const ValueGrad& f, const Constraints& c, Vector x, const AugLagOptions& opt) {
    const std::size_t n = x.size();
    const std::size_t m = opt.constraints;
    AugLagResult out;
    out.multipliers.assign(m, 0.0);
    Vector cv(m), jac(m * n);
    double rho = opt.penalty0;
    double last_violation = std::numeric_limits<double>::infinity();

    for (out.outer_iterations = 0; out.outer_iterations < opt.max_outer; ++out.outer_iterations) {
        const Vector lambda = out.multipliers;
        ValueGrad merit = [&](const Vector& z, Vector& grad) {
            Vector cz(m), jz(m * n);
            const double fz = f(z, grad);
            c(z, cz, jz);
            double val = fz;
            for (std::size_t k = 0; k < m; ++k) {
                const double w = lambda[k] + rho * cz[k];
                val += lambda[k] * cz[k] + 0.5 * rho * cz[k] * cz[k];
                for (std::size_t i = 0; i < n; ++i) grad[i] += w * jz[k * n + i];
            }
            return val;
        };
        out.inner = lbfgs(merit, x, opt.inner);
        x = out.inner.x;
        c(x, cv, jac);
        const double violation = inf_norm(cv);
        for (std::size_t k = 0; k < m; ++k) out.multipliers[k] += rho * cv[k];
        if (violation <= opt.constraint_tol && out.inner.converged) {
            ++out.outer_iterations;
            break;
        }
        if (violation > 0.25 * last_violation) rho = std::min(rho * opt.penalty_growth, opt.penalty_max);
        last_violation = violation;
    }
    Vector g(n);
    out.inner.value = f(x, g);
    out.inner.x = x;
    c(x, cv, jac);
    out.constraint_values = cv;
    out.max_violation = inf_norm(cv);
    return out;
}

}  // namespace qsq::optim
