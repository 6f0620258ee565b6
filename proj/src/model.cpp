#include "qsq/model.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "qsq/error.hpp"
#include "qsq/specfun.hpp"

namespace qsq {
namespace {

constexpr double kPoleSin = 1e-12;

// Fornberg weights for the first derivative at x0 from the nodes xs.
template <std::size_t N>
std::array<double, N> first_derivative_weights(double x0, const std::array<double, N>& xs) {
    // c[j][m]: weight of node j for derivative order m (m = 0, 1).
    std::array<std::array<double, 2>, N> c{};
    double c1 = 1.0;
    double c4 = xs[0] - x0;
    c[0][0] = 1.0;
    for (std::size_t i = 1; i < N; ++i) {
        const std::size_t mn = std::min<std::size_t>(i, 1);
        double c2 = 1.0;
        const double c5 = c4;
        c4 = xs[i] - x0;
        for (std::size_t j = 0; j < i; ++j) {
            const double c3 = xs[i] - xs[j];
            c2 *= c3;
            if (j == i - 1) {
                for (std::size_t k = mn; k >= 1; --k)
                    c[i][k] = c1 * (static_cast<double>(k) * c[i - 1][k - 1] - c5 * c[i - 1][k]) / c2;
                c[i][0] = -c1 * c5 * c[i - 1][0] / c2;
            }
            for (std::size_t k = mn; k >= 1; --k)
                c[j][k] = (c4 * c[j][k] - static_cast<double>(k) * c[j][k - 1]) / c3;
            c[j][0] = c4 * c[j][0] / c3;
        }
        c1 = c2;
    }
    std::array<double, N> w{};
    for (std::size_t j = 0; j < N; ++j) w[j] = c[j][1];
    return w;
}

std::vector<double> unwrap(std::vector<double> v) {
    for (std::size_t i = 1; i < v.size(); ++i) {
        double d = v[i] - v[i - 1];
        while (d > std::numbers::pi) {
            v[i] -= 2 * std::numbers::pi;
            d -= 2 * std::numbers::pi;
        }
        while (d < -std::numbers::pi) {
            v[i] += 2 * std::numbers::pi;
            d += 2 * std::numbers::pi;
        }
    }
    return v;
}

}  // namespace

std::vector<double> uniform_grid(double a, double b, std::size_t n) {
    if (n < 2) throw InputError("uniform_grid: need at least two points");
    std::vector<double> g(n);
    const double h = (b - a) / static_cast<double>(n - 1);
    for (std::size_t i = 0; i < n; ++i) g[i] = a + h * static_cast<double>(i);
    g.back() = b;
    return g;
}

std::vector<double> finite_difference(std::span<const double> x, std::span<const double> y) {
    const std::size_t n = x.size();
    if (n != y.size() || n < 2) throw InputError("finite_difference: size mismatch or fewer than 2 points");
    std::vector<double> d(n);
    if (n < 5) {
        for (std::size_t i = 0; i < n; ++i) {
            const std::size_t lo = (i == 0) ? 0 : i - 1;
            const std::size_t hi = (i + 1 < n) ? i + 1 : i;
            d[i] = (y[hi] - y[lo]) / (x[hi] - x[lo]);
        }
        return d;
    }
    for (std::size_t i = 0; i < n; ++i) {
        std::size_t lo = (i < 2) ? 0 : i - 2;
        if (lo + 5 > n) lo = n - 5;
        std::array<double, 5> xs{};
        for (std::size_t k = 0; k < 5; ++k) xs[k] = x[lo + k];
        const auto w = first_derivative_weights(x[i], xs);
        double s = 0.0;
        for (std::size_t k = 0; k < 5; ++k) s += w[k] * y[lo + k];
        d[i] = s;
    }
    return d;
}

namespace {

template <typename T>
T simpson_impl(std::span<const double> x, std::span<const T> y) {
    const std::size_t n = x.size();
    if (n != y.size() || n < 2) throw InputError("simpson: size mismatch or fewer than 2 points");
    if (n == 2) return 0.5 * (x[1] - x[0]) * (y[0] + y[1]);
    T sum{};
    const std::size_t intervals = n - 1;
    const std::size_t paired = intervals - (intervals % 2);
    for (std::size_t i = 0; i + 2 <= paired; i += 2) {
        const double h0 = x[i + 1] - x[i];
        const double h1 = x[i + 2] - x[i + 1];
        const double hs = h0 + h1;
        sum += hs / 6.0 *
               ((2.0 - h1 / h0) * y[i] + (hs * hs / (h0 * h1)) * y[i + 1] + (2.0 - h0 / h1) * y[i + 2]);
    }
    if (intervals % 2 == 1) {
        const std::size_t i = n - 3;
        const double h0 = x[i + 1] - x[i];
        const double h1 = x[i + 2] - x[i + 1];
        sum += (2.0 * h1 * h1 + 3.0 * h0 * h1) / (6.0 * (h0 + h1)) * y[i + 2] +
               (h1 * h1 + 3.0 * h0 * h1) / (6.0 * h0) * y[i + 1] -
               (h1 * h1 * h1) / (6.0 * h0 * (h0 + h1)) * y[i];
    }
    return sum;
}

}  // namespace

double simpson(std::span<const double> x, std::span<const double> y) { return simpson_impl<double>(x, y); }

Complex simpson(std::span<const double> x, std::span<const Complex> y) { return simpson_impl<Complex>(x, y); }

void ControlWaveforms::validate() const {
    const std::size_t n = time_grid.size();
    if (n < 2) throw InputError("controls: need at least two samples");
    if (rabi.size() != n || detuning.size() != n) throw InputError("controls: column lengths differ");
    for (std::size_t i = 0; i < n; ++i) {
        if (!std::isfinite(time_grid[i]) || !std::isfinite(rabi[i]) || !std::isfinite(detuning[i]))
            throw InputError("controls: non-finite sample at index " + std::to_string(i));
        if (rabi[i] < 0.0) throw InputError("controls: negative Rabi frequency at index " + std::to_string(i));
        if (i > 0 && !(time_grid[i] > time_grid[i - 1]))
            throw InputError("controls: time grid not strictly increasing at index " + std::to_string(i));
    }
}

ControlSample ControlWaveforms::at(double t) const {
    if (exact) return exact(t);
    const std::size_t n = time_grid.size();
    if (t <= time_grid.front()) return {rabi.front(), detuning.front()};
    if (t >= time_grid.back()) return {rabi.back(), detuning.back()};
    const auto it = std::upper_bound(time_grid.begin(), time_grid.end(), t);
    const std::size_t hi = static_cast<std::size_t>(it - time_grid.begin());
    const std::size_t lo = hi - 1;
    if (interpolation == Interpolation::linear || n < 4) {
        const double w = (t - time_grid[lo]) / (time_grid[hi] - time_grid[lo]);
        return {rabi[lo] + w * (rabi[hi] - rabi[lo]), detuning[lo] + w * (detuning[hi] - detuning[lo])};
    }
    // Four-point Lagrange cubic on nodes lo-1 .. lo+2, shifted inward at the ends.
    std::size_t first = (lo == 0) ? 0 : lo - 1;
    if (first + 4 > n) first = n - 4;
    double om = 0.0;
    double de = 0.0;
    for (std::size_t j = first; j < first + 4; ++j) {
        double l = 1.0;
        for (std::size_t k = first; k < first + 4; ++k)
            if (k != j) l *= (t - time_grid[k]) / (time_grid[j] - time_grid[k]);
        om += l * rabi[j];
        de += l * detuning[j];
    }
    return {om, de};
}

std::vector<double> ControlWaveforms::laser_phase() const {
    std::vector<double> phase(time_grid.size(), 0.0);
    for (std::size_t i = 1; i < time_grid.size(); ++i)
        phase[i] = phase[i - 1] + 0.5 * (time_grid[i] - time_grid[i - 1]) * (detuning[i] + detuning[i - 1]);
    return phase;
}

double ControlWaveforms::area() const {
    std::vector<double> absr(rabi.size());
    std::transform(rabi.begin(), rabi.end(), absr.begin(), [](double v) { return std::abs(v); });
    return simpson(time_grid, absr);
}

double ControlWaveforms::peak_rabi() const {
    double m = 0.0;
    for (double v : rabi) m = std::max(m, std::abs(v));
    return m;
}

ControlWaveforms sample_controls(std::function<ControlSample(double)> exact, double t_begin, double t_end,
                                 std::size_t samples, std::string label) {
    ControlWaveforms c;
    c.time_grid = uniform_grid(t_begin, t_end, samples);
    c.rabi.resize(samples);
    c.detuning.resize(samples);
    for (std::size_t i = 0; i < samples; ++i) {
        const ControlSample s = exact(c.time_grid[i]);
        c.rabi[i] = s.rabi;
        c.detuning[i] = s.detuning;
    }
    c.label = std::move(label);
    c.exact = std::move(exact);
    c.validate();
    return c;
}

void HyperGaussianSpec::validate() const {
    if (!(peak > 0.0) || !(width > 0.0)) throw InputError("hyper-Gaussian: peak and width must be positive");
    if (order < 2 || order % 2 != 0) throw InputError("hyper-Gaussian: order must be an even integer >= 2");
}

double HyperGaussianSpec::value(double t) const { return peak * std::exp(-std::pow(std::abs(t) / width, order)); }

double HyperGaussianSpec::area() const {
    return 2.0 * peak * width * specfun::gamma(1.0 / order) / order;
}

double HyperGaussianSpec::cumulative_area(double t) const {
    const double s = 1.0 / order;
    const double u = std::pow(std::abs(t) / width, order);
    const double scale = peak * width / order;
    const double upper = specfun::upper_incomplete_gamma(s, u);
    if (t < 0.0) return scale * upper;
    return scale * (2.0 * specfun::gamma(s) - upper);
}

double HyperGaussianSpec::support_half_width() const { return width * std::pow(kTailExponent, 1.0 / order); }

Matrix2 hamiltonian_matrix(double omega, double detuning, const PerturbationParams& p) {
    const double diag = 0.5 * (detuning + p.delta);
    const double off = 0.5 * ((1.0 + p.alpha) * omega + p.beta);
    return {{{Complex(-diag, 0.0), Complex(off, 0.0)}, {Complex(off, 0.0), Complex(diag, 0.0)}}};
}

Spinor angles_to_state(const DynamicalAngles& a) {
    const double c = std::cos(0.5 * a.theta);
    const double s = std::sin(0.5 * a.theta);
    return {std::polar(c, 0.5 * (a.varphi - a.gamma)), std::polar(s, -0.5 * (a.varphi + a.gamma))};
}

HyperGaussianSpec hyper_gaussian_matched(int order, double peak, double area) {
    if (!(area > 0.0)) throw InputError("hyper_gaussian_matched: area must be positive");
    HyperGaussianSpec spec{peak, 1.0, order};
    spec.validate();
    spec.width = order * (area / peak) / (2.0 * specfun::gamma(1.0 / order));
    return spec;
}

double hyper_gaussian_value(const HyperGaussianSpec& spec, double t) { return spec.value(t); }

ControlWaveforms angles_to_controls(std::span<const double> time, std::span<const double> theta,
                                   std::span<const double> gamma) {
    const std::size_t n = time.size();
    if (theta.size() != n || gamma.size() != n || n < 2)
        throw InputError("angles_to_controls: inconsistent sample counts");
    const auto theta_dot = finite_difference(time, theta);
    const auto gamma_dot = finite_difference(time, gamma);

    std::vector<double> varphi(n);
    std::vector<double> omega(n);
    const double scale = std::max(1.0, *std::max_element(theta_dot.begin(), theta_dot.end(),
                                                         [](double a, double b) { return std::abs(a) < std::abs(b); }));
    int degenerate_run = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const double st = std::sin(theta[i]);
        const double transverse = gamma_dot[i] * st;
        omega[i] = std::hypot(theta_dot[i], transverse);
        if (std::abs(st) < kPoleSin) {
            varphi[i] = 0.5 * std::numbers::pi;
        } else {
            varphi[i] = std::atan2(theta_dot[i], transverse);
        }
        const bool interior = i > 0 && i + 1 < n;
        if (interior && omega[i] < 1e-13 * scale) {
            if (++degenerate_run >= 2)
                throw InputError("angles_to_controls: degenerate trajectory near t=" + std::to_string(time[i]));
        } else {
            degenerate_run = 0;
        }
    }
    varphi = unwrap(std::move(varphi));
    const auto varphi_dot = finite_difference(time, varphi);

    ControlWaveforms c;
    c.time_grid.assign(time.begin(), time.end());
    c.rabi = std::move(omega);
    c.detuning.resize(n);
    for (std::size_t i = 0; i < n; ++i) c.detuning[i] = varphi_dot[i] - gamma_dot[i] * std::cos(theta[i]);
    c.label = "inverse";
    return c;
}

ControlWaveforms angles_to_controls(const AngleSamples& angles, const AngleRates& rates) {
    const std::size_t n = angles.size();
    if (angles.theta.size() != n || angles.gamma.size() != n || angles.varphi.size() != n ||
        rates.theta_dot.size() != n || rates.gamma_dot.size() != n || rates.varphi_dot.size() != n || n < 2)
        throw InputError("angles_to_controls: inconsistent sample counts");
    ControlWaveforms c;
    c.time_grid = angles.time;
    c.rabi.resize(n);
    c.detuning.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        c.rabi[i] = std::hypot(rates.theta_dot[i], rates.gamma_dot[i] * std::sin(angles.theta[i]));
        c.detuning[i] = rates.varphi_dot[i] - rates.gamma_dot[i] * std::cos(angles.theta[i]);
    }
    c.label = "inverse";
    return c;
}

}  // namespace qsq
