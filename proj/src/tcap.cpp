#include "qsq/tcap.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "qsq/error.hpp"
#include "qsq/optim.hpp"
#include "qsq/specfun.hpp"
#include "qsq/tdse.hpp"

namespace qsq {
namespace {

constexpr double kPi = std::numbers::pi;

void check_window(double contraction, double t_begin, double t_end) {
    if (!(contraction >= 1.0) || !std::isfinite(contraction)) throw InputError("contraction must be >= 1");
    if (!(t_end > t_begin) || !std::isfinite(t_begin) || !std::isfinite(t_end))
        throw InputError("rescale window must be finite with t_begin < t_end");
}

RescaleValue sine_value(double a, const std::vector<double>& c, double t_begin, double t_end, double tau) {
    const double k = 2.0 * kPi * a / (t_end - t_begin);
    const double x = k * (tau - t_begin / a);
    RescaleValue v{a * tau, a};
    for (std::size_t n = 1; n <= c.size(); ++n) {
        const double arg = static_cast<double>(n) * x;
        v.g += c[n - 1] * std::sin(arg);
        v.slope += c[n - 1] * static_cast<double>(n) * k * std::cos(arg);
    }
    return v;
}

RescaleValue hg_value(const RescaleFunction& r, double tau) {
    const double s = 1.0 / r.order;
    const double u = std::pow(std::abs(tau) / r.sigma, r.order);
    double x;
    const double p = specfun::regularized_lower_gamma(s, u);
    if (p < 0.5)
        x = specfun::erf_inv(p);
    else
        x = specfun::erfc_inv_from_log(specfun::log_regularized_upper_gamma(s, u));
    const double g = std::copysign(r.base_width * x, tau);
    return {g, r.peak_ratio * std::exp(x * x - u)};
}

std::vector<double> balance(std::vector<double> c, double target) {
    const std::size_t n = c.size();
    double partial = 0.0;
    for (std::size_t k = 1; k < n; ++k) partial += static_cast<double>(k) * c[k - 1];
    c[n - 1] = (target - partial) / static_cast<double>(n);
    return c;
}

}  // namespace

AdiabaticFrame adiabatic_frame(double omega, double detuning) { return {std::atan2(omega, -detuning), std::hypot(omega, detuning)}; }

void ParallelBase::validate() const {
    if (!(peak > 0.0) || !(width > 0.0) || !std::isfinite(peak) || !std::isfinite(width))
        throw InputError("parallel design needs positive finite peak and width");
}

double ParallelBase::area() const { return peak * width * std::sqrt(kPi); }

ControlSample parallel_controls(double peak, double width, double t) {
    if (!(width > 0.0)) throw InputError("parallel_controls: width must be positive");
    const double x = t / width;
    const double x2 = x * x;
    const double det = (x == 0.0) ? 0.0 : std::copysign(peak * std::sqrt(-std::expm1(-2.0 * x2)), x);
    return {peak * std::exp(-x2), det};
}

ControlWaveforms parallel_waveforms(const ParallelBase& base, double t_begin, double t_end, std::size_t samples) {
    base.validate();
    return sample_controls([base](double t) { return parallel_controls(base.peak, base.width, t); }, t_begin, t_end,
                           samples, "parallel");
}

ParallelBase parallel_base_for_area(double area, double width) {
    if (!(area > 0.0) || !(width > 0.0)) throw InputError("parallel_base_for_area: area and width must be positive");
    return {area / (width * std::sqrt(kPi)), width};
}

std::string to_string(RescaleKind kind) {
    switch (kind) {
        case RescaleKind::identity:
            return "identity";
        case RescaleKind::sine_expansion:
            return "sine_expansion";
        case RescaleKind::hyper_gaussian_inversion:
            return "hyper_gaussian_inversion";
    }
    return "unknown";
}

RescaleValue RescaleFunction::operator()(double tau) const {
    switch (kind) {
        case RescaleKind::identity:
            return {contraction * tau, contraction};
        case RescaleKind::sine_expansion:
            return sine_value(contraction, coeffs, t_begin, t_end, tau);
        case RescaleKind::hyper_gaussian_inversion:
            return hg_value(*this, tau);
    }
    return {};
}

double RescaleFunction::min_slope(std::size_t points) const {
    double m = std::numeric_limits<double>::infinity();
    for (double tau : uniform_grid(tau_begin(), tau_end(), points)) m = std::min(m, (*this)(tau).slope);
    return m;
}

double BoundaryReport::max_error() const {
    return std::max({std::abs(g_begin_error), std::abs(g_end_error), std::abs(slope_begin_error),
                     std::abs(slope_end_error)});
}

BoundaryReport boundary_report(const RescaleFunction& g) {
    const RescaleValue b = g(g.tau_begin());
    const RescaleValue e = g(g.tau_end());
    return {b.g - g.t_begin, e.g - g.t_end, b.slope - 1.0, e.slope - 1.0, g.min_slope()};
}

double sine_constraint_target(double contraction, double t_begin, double t_end) {
    return (1.0 - contraction) * (t_end - t_begin) / (2.0 * kPi * contraction);
}

RescaleValue sine_expansion_g(double contraction, const std::vector<double>& coeffs, double t_begin, double t_end,
                              double tau) {
    check_window(contraction, t_begin, t_end);
    double sum = 0.0;
    for (std::size_t n = 1; n <= coeffs.size(); ++n) sum += static_cast<double>(n) * coeffs[n - 1];
    const double target = sine_constraint_target(contraction, t_begin, t_end);
    if (std::abs(sum - target) > 1e-12 * std::max(1.0, std::abs(target)))
        throw InputError("sine expansion coefficients violate sum n C_n = " + std::to_string(target));
    return sine_value(contraction, coeffs, t_begin, t_end, tau);
}

RescaleFunction sine_rescale(double contraction, std::vector<double> coeffs, double t_begin, double t_end) {
    sine_expansion_g(contraction, coeffs, t_begin, t_end, t_begin / contraction);
    RescaleFunction r;
    r.kind = RescaleKind::sine_expansion;
    r.contraction = contraction;
    r.t_begin = t_begin;
    r.t_end = t_end;
    r.coeffs = std::move(coeffs);
    return r;
}

double sine_peak(const ParallelBase& base, double contraction, const std::vector<double>& coeffs, double t_begin,
                 double t_end, std::size_t grid_points) {
    double peak = 0.0;
    const double t0 = t_begin / contraction;
    const double h = (t_end - t_begin) / contraction / static_cast<double>(grid_points - 1);
    for (std::size_t i = 0; i < grid_points; ++i) {
        const RescaleValue v = sine_value(contraction, coeffs, t_begin, t_end, t0 + h * static_cast<double>(i));
        if (!(v.slope > 0.0)) return std::numeric_limits<double>::infinity();
        const double x = v.g / base.width;
        peak = std::max(peak, base.peak * v.slope * std::exp(-x * x));
    }
    return peak;
}

SineOptimization optimize_sine_coefficients(std::size_t terms, double contraction, const ParallelBase& base,
                                            double t_begin, double t_end, const SineOptimOptions& options) {
    base.validate();
    check_window(contraction, t_begin, t_end);
    if (terms < 2) throw InputError("optimize_sine_coefficients: need N >= 2");
    if (options.grid_points < 16) throw InputError("optimize_sine_coefficients: grid too coarse");
    const double target = sine_constraint_target(contraction, t_begin, t_end);

    SineOptimization out;
    if (contraction == 1.0) {
        out.coeffs.assign(terms, 0.0);
        out.peak = out.seed_peak = sine_peak(base, 1.0, out.coeffs, t_begin, t_end, options.grid_points);
        return out;
    }

    auto objective = [&](const std::vector<double>& free) {
        std::vector<double> c(free);
        c.push_back(0.0);
        ++out.evaluations;
        return sine_peak(base, contraction, balance(std::move(c), target), t_begin, t_end, options.grid_points);
    };

    std::vector<double> seed(terms);
    for (std::size_t n = 1; n <= terms; ++n) seed[n - 1] = target / (static_cast<double>(n * terms));
    out.seed_peak = sine_peak(base, contraction, seed, t_begin, t_end, options.grid_points);
    if (!std::isfinite(out.seed_peak)) throw ConvergenceError("optimize_sine_coefficients: seed is not monotone");

    std::vector<std::vector<double>> starts{seed};
    if (!options.warm_start.empty()) {
        std::vector<double> w = options.warm_start;
        w.resize(terms, 0.0);
        starts.push_back(balance(std::move(w), target));
    }
    if (options.cascade && terms > 2) {
        SineOptimOptions sub = options;
        sub.warm_start.clear();
        const SineOptimization lower =
            optimize_sine_coefficients(terms - 1, contraction, base, t_begin, t_end, sub);
        out.evaluations += lower.evaluations;
        std::vector<double> w = lower.coeffs;
        w.push_back(0.0);
        starts.push_back(std::move(w));
    }

    double best = std::numeric_limits<double>::infinity();
    std::vector<double> best_c;
    for (const auto& s : starts) {
        std::vector<double> free(s.begin(), s.end() - 1);
        std::vector<double> step(free.size());
        for (std::size_t i = 0; i < free.size(); ++i) step[i] = 0.05 * std::max(std::abs(free[i]), 0.1 * std::abs(target));
        optim::NelderMeadOptions nm;
        nm.max_evaluations = 6000 * free.size();
        nm.restarts = 4;
        const optim::Result r = optim::nelder_mead(objective, free, step, nm);
        if (r.value < best) {
            best = r.value;
            std::vector<double> c = r.x;
            c.push_back(0.0);
            best_c = balance(std::move(c), target);
        }
    }
    if (!std::isfinite(best)) throw ConvergenceError("optimize_sine_coefficients: no monotone optimum found");
    out.coeffs = best_c;
    out.peak = best;
    return out;
}

HgRescale hg_rescale(int order, double contraction, double t_final, const ParallelBase& base) {
    base.validate();
    if (order < 2 || order % 2 != 0) throw InputError("hg_rescale: order must be an even integer >= 2");
    if (!(contraction > 1.0)) throw InputError("hg_rescale: contraction must exceed 1");
    if (!(t_final > 0.0)) throw InputError("hg_rescale: t_final must be positive");
    const double n = order;
    const double tt = base.width;
    const double ratio_scale = std::sqrt(kPi) * tt * n / (2.0 * specfun::gamma(1.0 / n));
    double sigma = (t_final / contraction) * std::pow(tt / t_final, 2.0 / n);
    double ratio = ratio_scale / sigma;
    std::size_t it = 0;
    bool converged = false;
    for (; it < 200; ++it) {
        const double inner = std::log(ratio) + (t_final / tt) * (t_final / tt);
        if (!(inner > 0.0)) throw ConvergenceError("hg_rescale: fixed point left its domain");
        const double next = t_final / (contraction * std::pow(inner, 1.0 / n));
        const double change = std::abs(next - sigma) / sigma;
        sigma = next;
        ratio = ratio_scale / sigma;
        if (change < 1e-12) {
            converged = true;
            ++it;
            break;
        }
    }
    if (!converged) throw ConvergenceError("hg_rescale: fixed point did not converge in 200 iterations");

    HgRescale out;
    out.iterations = it;
    RescaleFunction& r = out.rescale;
    r.kind = RescaleKind::hyper_gaussian_inversion;
    r.contraction = contraction;
    r.t_begin = -t_final;
    r.t_end = t_final;
    r.order = order;
    r.sigma = sigma;
    r.peak_ratio = ratio;
    r.base_width = tt;
    out.pulse = HyperGaussianSpec{ratio * base.peak, sigma, order};
    return out;
}

ControlWaveforms rescaled_controls(const ParallelBase& base, const RescaleFunction& g, std::size_t samples) {
    base.validate();
    auto eval = [base, g](double tau) {
        const RescaleValue v = g(tau);
        const ControlSample c = parallel_controls(base.peak, base.width, v.g);
        return ControlSample{v.slope * c.rabi, v.slope * c.detuning};
    };
    ControlWaveforms w = sample_controls(eval, g.tau_begin(), g.tau_end(), samples, "tcap-" + to_string(g.kind));
    return w;
}

double rescaling_equivalence_check(const ParallelBase& base, const RescaleFunction& g, const PerturbationParams& p,
                                   const StepControl& step) {
    const ControlWaveforms rescaled = rescaled_controls(base, g, 3);
    const Spinor psi_r = evolve(rescaled, p, ground_state(), g.tau_begin(), g.tau_end(), step);
    const double t0 = g(g.tau_begin()).g;
    const double t1 = g(g.tau_end()).g;
    const ControlWaveforms original = parallel_waveforms(base, t0, t1, 3);
    const Spinor psi = evolve(original, p, ground_state(), t0, t1, step);
    return std::sqrt(std::norm(psi_r[0] - psi[0]) + std::norm(psi_r[1] - psi[1]));
}

TcapDesign make_tcap_design(const ParallelBase& base, const RescaleFunction& g, std::size_t samples) {
    TcapDesign d;
    d.base = base;
    d.rescale = g;
    d.controls = rescaled_controls(base, g, samples);
    const double x0 = g.t_begin / base.width;
    const double x1 = g.t_end / base.width;
    d.original_area = 0.5 * base.area() * (specfun::erf(x1) - specfun::erf(x0));
    // Fine quadrature of the rescaled pulse, independent of the output grid.
    const std::size_t fine = std::max<std::size_t>(samples, 20001) | 1;
    const auto tau = uniform_grid(g.tau_begin(), g.tau_end(), fine);
    std::vector<double> om(fine);
    for (std::size_t i = 0; i < fine; ++i) om[i] = d.controls.exact(tau[i]).rabi;
    d.rescaled_area = simpson(tau, om);
    d.peak = d.controls.peak_rabi();
    return d;
}

}  // namespace qsq
