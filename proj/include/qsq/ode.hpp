#pragma once

// Adaptive Dormand-Prince 5(4) integrator with FSAL and local extrapolation
// (the 5th-order solution is propagated). Integration may run forward or
// backward in time. Requested output times are hit exactly by shortening the
// last step of each segment.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <limits>

#include "qsq/error.hpp"

namespace qsq {

struct StepControl {
    double rtol = 1e-10;
    double atol = 1e-12;
    /// If > 0, take non-adaptive steps of this size (used for order checks).
    double fixed_step = 0.0;
    double max_step = std::numeric_limits<double>::infinity();
    std::size_t max_steps = 20'000'000;
};

struct OdeStats {
    std::size_t accepted = 0;
    std::size_t rejected = 0;
    std::size_t evaluations = 0;
};

template <std::size_t N>
class Dopri5 {
public:
    using State = std::array<double, N>;

    explicit Dopri5(StepControl control) : ctl_(control) {}

    /// Forget the current step size and FSAL stage, e.g. after the caller
    /// changed variables.
    void reset() {
        h_ = 0.0;
        fsal_ = false;
    }

    const OdeStats& stats() const { return stats_; }

    /// Advances (t, y) to t_target. After each accepted step post(t, y) runs;
    /// returning true stops early (t < t_target in the integration direction).
    template <class Rhs, class Post>
    bool advance(Rhs& f, double& t, State& y, double t_target, Post&& post) {
        if (t == t_target) return true;
        const double dir = (t_target > t) ? 1.0 : -1.0;
        if (!fsal_) {
            f(t, y, k1_);
            ++stats_.evaluations;
            fsal_ = true;
        }
        if (ctl_.fixed_step > 0.0) return advance_fixed(f, t, y, t_target, dir, post);
        if (h_ == 0.0 || (h_ > 0.0) != (dir > 0.0)) h_ = dir * initial_step(f, t, y, t_target);

        while (dir * (t_target - t) > 0.0) {
            if (stats_.accepted + stats_.rejected >= ctl_.max_steps)
                throw IntegrationError("step budget exhausted", t);
            double h = h_;
            bool clamped = false;
            if (dir * (t + h - t_target) >= 0.0) {
                h = t_target - t;
                clamped = true;
            }
            const double min_step = 16.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(t));
            if (std::abs(h) < min_step && !clamped) throw IntegrationError("step size underflow", t);

            State y_new;
            State err;
            try_step(f, t, y, h, y_new, err);
            double norm = 0.0;
            for (std::size_t i = 0; i < N; ++i) {
                const double sc = ctl_.atol + ctl_.rtol * std::max(std::abs(y[i]), std::abs(y_new[i]));
                const double r = err[i] / sc;
                norm += r * r;
            }
            norm = std::sqrt(norm / static_cast<double>(N));
            if (!std::isfinite(norm)) {
                h_ = 0.25 * h;
                ++stats_.rejected;
                if (std::abs(h_) < min_step) throw IntegrationError("non-finite state", t);
                continue;
            }
            if (norm <= 1.0) {
                ++stats_.accepted;
                t = clamped ? t_target : t + h;
                y = y_new;
                k1_ = k7_;
                if (clamped) {
                    // A truncated step says little about the next one; only shrink.
                    const double opt = (norm == 0.0) ? std::numeric_limits<double>::infinity()
                                                     : 0.9 * std::abs(h) * std::pow(norm, -0.2);
                    h_ = std::copysign(std::min(std::abs(h_), opt), dir);
                } else {
                    const double fac = (norm == 0.0) ? 5.0 : std::clamp(0.9 * std::pow(norm, -0.2), 0.2, 5.0);
                    h_ = std::copysign(std::min(std::abs(h) * fac, ctl_.max_step), dir);
                }
                if (post(t, y)) return dir * (t_target - t) <= 0.0;
            } else {
                ++stats_.rejected;
                const double fac = std::max(0.2, 0.9 * std::pow(norm, -0.2));
                h_ = h * fac;
            }
        }
        return true;
    }

    template <class Rhs>
    void advance(Rhs& f, double& t, State& y, double t_target) {
        advance(f, t, y, t_target, [](double, const State&) { return false; });
    }

private:
    template <class Rhs, class Post>
    bool advance_fixed(Rhs& f, double& t, State& y, double t_target, double dir, Post&& post) {
        const double span = std::abs(t_target - t);
        const auto steps = static_cast<std::size_t>(std::ceil(span / ctl_.fixed_step - 1e-9));
        const double h = dir * span / static_cast<double>(std::max<std::size_t>(steps, 1));
        const double t0 = t;
        for (std::size_t i = 1; i <= std::max<std::size_t>(steps, 1); ++i) {
            State y_new;
            State err;
            try_step(f, t, y, h, y_new, err);
            y = y_new;
            k1_ = k7_;
            t = (i == steps) ? t_target : t0 + h * static_cast<double>(i);
            ++stats_.accepted;
            if (post(t, y)) return i == steps;
        }
        return true;
    }

    template <class Rhs>
    double initial_step(Rhs& f, double t, const State& y, double t_target) {
        // Hairer-Norsett-Wanner starting step heuristic.
        double d0 = 0.0;
        double d1 = 0.0;
        for (std::size_t i = 0; i < N; ++i) {
            const double sc = ctl_.atol + ctl_.rtol * std::abs(y[i]);
            d0 += (y[i] / sc) * (y[i] / sc);
            d1 += (k1_[i] / sc) * (k1_[i] / sc);
        }
        d0 = std::sqrt(d0 / N);
        d1 = std::sqrt(d1 / N);
        const double dir = (t_target > t) ? 1.0 : -1.0;
        double h0 = (d0 < 1e-5 || d1 < 1e-5) ? 1e-6 : 0.01 * d0 / d1;
        h0 = std::min({h0, std::abs(t_target - t), ctl_.max_step});
        State y1;
        for (std::size_t i = 0; i < N; ++i) y1[i] = y[i] + dir * h0 * k1_[i];
        State f1{};
        f(t + dir * h0, y1, f1);
        ++stats_.evaluations;
        double d2 = 0.0;
        for (std::size_t i = 0; i < N; ++i) {
            const double sc = ctl_.atol + ctl_.rtol * std::abs(y[i]);
            const double r = (f1[i] - k1_[i]) / sc;
            d2 += r * r;
        }
        d2 = std::sqrt(d2 / N) / h0;
        const double dm = std::max(d1, d2);
        const double h1 = (dm <= 1e-15) ? std::max(1e-6, h0 * 1e-3) : std::pow(0.01 / dm, 0.2);
        return std::min({100.0 * h0, h1, std::abs(t_target - t), ctl_.max_step});
    }

    template <class Rhs>
    void try_step(Rhs& f, double t, const State& y, double h, State& y_new, State& err) {
        constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
        constexpr double a21 = 1.0 / 5;
        constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
        constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
        constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                         a54 = -212.0 / 729;
        constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                         a65 = -5103.0 / 18656;
        constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784,
                         b6 = 11.0 / 84;
        constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                         e6 = 22.0 / 525, e7 = -1.0 / 40;
        State tmp;
        const State& k1 = k1_;
        for (std::size_t i = 0; i < N; ++i) tmp[i] = y[i] + h * a21 * k1[i];
        f(t + c2 * h, tmp, k2_);
        for (std::size_t i = 0; i < N; ++i) tmp[i] = y[i] + h * (a31 * k1[i] + a32 * k2_[i]);
        f(t + c3 * h, tmp, k3_);
        for (std::size_t i = 0; i < N; ++i) tmp[i] = y[i] + h * (a41 * k1[i] + a42 * k2_[i] + a43 * k3_[i]);
        f(t + c4 * h, tmp, k4_);
        for (std::size_t i = 0; i < N; ++i)
            tmp[i] = y[i] + h * (a51 * k1[i] + a52 * k2_[i] + a53 * k3_[i] + a54 * k4_[i]);
        f(t + c5 * h, tmp, k5_);
        for (std::size_t i = 0; i < N; ++i)
            tmp[i] = y[i] + h * (a61 * k1[i] + a62 * k2_[i] + a63 * k3_[i] + a64 * k4_[i] + a65 * k5_[i]);
        f(t + h, tmp, k6_);
        for (std::size_t i = 0; i < N; ++i)
            y_new[i] = y[i] + h * (b1 * k1[i] + b3 * k3_[i] + b4 * k4_[i] + b5 * k5_[i] + b6 * k6_[i]);
        f(t + h, y_new, k7_);
        stats_.evaluations += 6;
        for (std::size_t i = 0; i < N; ++i)
            err[i] = h * (e1 * k1[i] + e3 * k3_[i] + e4 * k4_[i] + e5 * k5_[i] + e6 * k6_[i] + e7 * k7_[i]);
    }

    StepControl ctl_;
    OdeStats stats_;
    double h_ = 0.0;
    bool fsal_ = false;
    State k1_{}, k2_{}, k3_{}, k4_{}, k5_{}, k6_{}, k7_{};
};

}  // namespace qsq
