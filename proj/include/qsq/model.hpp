#pragma once

#include <array>
#include <complex>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace qsq {

using Complex = std::complex<double>;
/// Two-level state (c1, c2) in the bare basis {|1>, |2>}; |1> is the ground state.
using Spinor = std::array<Complex, 2>;
using Matrix2 = std::array<std::array<Complex, 2>, 2>;

/// Static perturbations of the driven two-level Hamiltonian: relative Rabi
/// amplitude error, detuning offset and transverse offset.
struct PerturbationParams {
    double alpha = 0.0;
    double delta = 0.0;
    double beta = 0.0;

    bool is_zero() const { return alpha == 0.0 && delta == 0.0 && beta == 0.0; }
};

/// Mixing angle theta, internal phase varphi and global phase gamma of
///   psi = e^{-i gamma/2} (e^{i varphi/2} cos(theta/2), e^{-i varphi/2} sin(theta/2)).
struct DynamicalAngles {
    double theta = 0.0;
    double varphi = 0.0;
    double gamma = 0.0;
};

/// Sampled dynamical angles along a time grid; gamma is unwrapped.
struct AngleSamples {
    std::vector<double> time;
    std::vector<double> theta;
    std::vector<double> varphi;
    std::vector<double> gamma;

    std::size_t size() const { return time.size(); }
    DynamicalAngles at(std::size_t i) const { return {theta[i], varphi[i], gamma[i]}; }
};

/// Time derivatives of the angles on the same grid as an AngleSamples.
struct AngleRates {
    std::vector<double> theta_dot;
    std::vector<double> gamma_dot;
    std::vector<double> varphi_dot;
};

struct ControlSample {
    double rabi = 0.0;
    double detuning = 0.0;
};

enum class Interpolation { linear, cubic };

/// Rabi frequency and detuning on a time grid, optionally backed by an exact
/// evaluator. Propagators use the evaluator when present and interpolate the
/// samples otherwise.
struct ControlWaveforms {
    std::vector<double> time_grid;
    std::vector<double> rabi;
    std::vector<double> detuning;
    std::string label;
    std::function<ControlSample(double)> exact;
    Interpolation interpolation = Interpolation::cubic;

    /// Throws InputError unless the grid is strictly increasing, lengths match
    /// (>= 2), all samples are finite and rabi >= 0.
    void validate() const;

    std::size_t size() const { return time_grid.size(); }
    double t_begin() const { return time_grid.front(); }
    double t_end() const { return time_grid.back(); }

    ControlSample at(double t) const;
    /// Laser phase int_{t_i}^{t} Delta(s) ds at each grid point (trapezoid).
    std::vector<double> laser_phase() const;
    /// Pulse area int |Omega| dt over the grid (composite Simpson).
    double area() const;
    double peak_rabi() const;
};

/// Samples an exact evaluator on a uniform grid; the evaluator stays attached.
ControlWaveforms sample_controls(std::function<ControlSample(double)> exact, double t_begin,
                                 double t_end, std::size_t samples, std::string label);

/// Envelope Omega0 exp(-(t/sigma)^n) with even n >= 2.
struct HyperGaussianSpec {
    double peak = 1.0;
    double width = 1.0;
    int order = 2;

    void validate() const;
    double value(double t) const;
    /// Closed form 2 Omega0 sigma Gamma(1/n) / n.
    double area() const;
    /// int_{-inf}^{t} Omega(s) ds via the incomplete gamma function.
    double cumulative_area(double t) const;
    /// Half-width beyond which the envelope is below exp(-kTailExponent) * peak.
    double support_half_width() const;

    static constexpr double kTailExponent = 45.0;
};

/// H = (1/2) [[-(Delta+delta), (1+alpha)Omega+beta], [(1+alpha)Omega+beta, Delta+delta]], hbar = 1.
Matrix2 hamiltonian_matrix(double omega, double detuning, const PerturbationParams& p);

Spinor angles_to_state(const DynamicalAngles& a);

/// Hyper-Gaussian with the given peak whose area equals `area`.
HyperGaussianSpec hyper_gaussian_matched(int order, double peak, double area);
double hyper_gaussian_value(const HyperGaussianSpec& spec, double t);

/// Inverse controls from sampled theta(t), gamma(t): derivatives by
/// fourth-order finite differences, varphi = atan2(theta_dot, gamma_dot sin theta)
/// (pi/2 where sin theta vanishes), Omega = sqrt(theta_dot^2 + gamma_dot^2 sin^2 theta),
/// Delta = varphi_dot - gamma_dot cos theta.
ControlWaveforms angles_to_controls(std::span<const double> time, std::span<const double> theta,
                                   std::span<const double> gamma);

/// Same map when the rates are known exactly.
ControlWaveforms angles_to_controls(const AngleSamples& angles, const AngleRates& rates);

/// Fourth-order finite-difference derivative on a (possibly non-uniform)
/// grid: central five-point stencils inside, one-sided at the ends.
std::vector<double> finite_difference(std::span<const double> x, std::span<const double> y);

/// Composite Simpson rule on an arbitrary grid (pairs of intervals, with a
/// closing three-point correction for an odd interval count).
double simpson(std::span<const double> x, std::span<const double> y);
Complex simpson(std::span<const double> x, std::span<const Complex> y);

std::vector<double> uniform_grid(double a, double b, std::size_t n);

}  // namespace qsq
