#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "qsq/model.hpp"
#include "qsq/ode.hpp"

namespace qsq {

/// Adiabatic mixing angle Theta in [0, pi] (tan Theta = -Omega/Delta) and eigenvalue gap.
struct AdiabaticFrame {
    double mixing = 0.0;
    double gap = 0.0;
};

AdiabaticFrame adiabatic_frame(double omega, double detuning);

/// Gaussian parallel design: Omega = peak e^{-(t/T)^2} with a detuning that keeps the gap at `peak`.
struct ParallelBase {
    double peak = 1.0;
    double width = 1.0;

    void validate() const;
    double area() const;
};

ControlSample parallel_controls(double peak, double width, double t);
ControlWaveforms parallel_waveforms(const ParallelBase& base, double t_begin, double t_end,
                                    std::size_t samples = 2001);

/// Peak chosen so the Gaussian area peak * width * sqrt(pi) equals `area`.
ParallelBase parallel_base_for_area(double area, double width = 1.0);

enum class RescaleKind { identity, sine_expansion, hyper_gaussian_inversion };

std::string to_string(RescaleKind kind);

struct RescaleValue {
    double g = 0.0;
    double slope = 0.0;
};

/// Monotone time map t = g(tau) on [t_i / a, t_f / a].
struct RescaleFunction {
    RescaleKind kind = RescaleKind::identity;
    double contraction = 1.0;
    double t_begin = -4.0;
    double t_end = 4.0;
    /// Sine expansion coefficients C_1..C_N.
    std::vector<double> coeffs;
    /// Hyper-Gaussian inversion parameters.
    int order = 0;
    double sigma = 0.0;
    double peak_ratio = 0.0;
    double base_width = 1.0;

    double tau_begin() const { return t_begin / contraction; }
    double tau_end() const { return t_end / contraction; }
    RescaleValue operator()(double tau) const;
    /// min g' on a uniform grid of `points` over the window.
    double min_slope(std::size_t points = 10000) const;
};

/// Deviations from g(tau_i) = t_i, g(tau_f) = t_f, g'(tau_i) = g'(tau_f) = 1.
struct BoundaryReport {
    double g_begin_error = 0.0;
    double g_end_error = 0.0;
    double slope_begin_error = 0.0;
    double slope_end_error = 0.0;
    double min_slope = 0.0;

    double max_error() const;
};

BoundaryReport boundary_report(const RescaleFunction& g);

/// Required value of sum n C_n for the sine expansion.
double sine_constraint_target(double contraction, double t_begin, double t_end);

/// g and g' of aτ + sum C_n sin(2nπa(τ - t_i/a)/(t_f - t_i)); throws InputError
/// when the coefficients violate the slope condition by more than 1e-12.
RescaleValue sine_expansion_g(double contraction, const std::vector<double>& coeffs, double t_begin, double t_end,
                              double tau);

RescaleFunction sine_rescale(double contraction, std::vector<double> coeffs, double t_begin, double t_end);

struct SineOptimization {
    std::vector<double> coeffs;
    double peak = 0.0;
    /// Peak of the proportional seed C_n = S / (n N).
    double seed_peak = 0.0;
    std::size_t evaluations = 0;
};

struct SineOptimOptions {
    std::size_t grid_points = 4096;
    /// Warm start (length <= N, padded with zeros then re-balanced through C_N).
    std::vector<double> warm_start;
    /// Also start from the optimum for N - 1 (recursively), keeping the better result.
    bool cascade = true;
};

/// Peak of Omega_c on the optimization grid, +inf when g is not monotone.
double sine_peak(const ParallelBase& base, double contraction, const std::vector<double>& coeffs, double t_begin,
                 double t_end, std::size_t grid_points = 4096);

/// Minimizes the rescaled peak over C_1..C_{N-1}; C_N follows from the slope condition.
SineOptimization optimize_sine_coefficients(std::size_t terms, double contraction, const ParallelBase& base,
                                            double t_begin, double t_end, const SineOptimOptions& options = {});

struct HgRescale {
    RescaleFunction rescale;
    HyperGaussianSpec pulse;
    std::size_t iterations = 0;
};

/// Rescaling whose contracted Rabi frequency is a hyper-Gaussian of order n, window (-t_f, t_f).
HgRescale hg_rescale(int order, double contraction, double t_final, const ParallelBase& base);

/// Omega_c = peak g' Λ(g/T), Delta_c = peak g' sign(g) sqrt(1 - Λ(g/T)^2) on [t_i/a, t_f/a].
ControlWaveforms rescaled_controls(const ParallelBase& base, const RescaleFunction& g, std::size_t samples = 2001);

/// || psi_r(tau_f) - psi(g(tau_f)) || with psi started in the ground state at g(tau_i)
/// and psi_r at tau_i.
double rescaling_equivalence_check(const ParallelBase& base, const RescaleFunction& g,
                                   const PerturbationParams& p = {}, const StepControl& step = {});

struct TcapDesign {
    ParallelBase base;
    RescaleFunction rescale;
    ControlWaveforms controls;
    std::optional<HyperGaussianSpec> pulse;
    double original_area = 0.0;
    double rescaled_area = 0.0;
    double peak = 0.0;
};

/// Area of the original Gaussian on [t_i, t_f] and of the rescaled pulse by quadrature.
TcapDesign make_tcap_design(const ParallelBase& base, const RescaleFunction& g, std::size_t samples = 2001);

}  // namespace qsq
