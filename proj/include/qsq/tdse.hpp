#pragma once

#include <cstddef>
#include <span>
#include <utility>
#include <vector>

#include "qsq/model.hpp"
#include "qsq/ode.hpp"

namespace qsq {

inline constexpr std::size_t kDefaultSamples = 2001;

inline Spinor ground_state() { return {Complex(1.0, 0.0), Complex(0.0, 0.0)}; }
inline Spinor excited_state() { return {Complex(0.0, 0.0), Complex(1.0, 0.0)}; }

double norm(const Spinor& s);

/// Solution of i d/dt psi = H(t) psi sampled on an output grid.
struct StateTrajectory {
    std::vector<double> time_grid;
    std::vector<Spinor> states;
    /// (p_ground, p_excited) per sample.
    std::vector<std::pair<double, double>> populations;
    OdeStats stats;

    const Spinor& final_state() const { return states.back(); }
    /// max_k | ||psi_k|| - 1 |
    double max_norm_deviation() const;
};

/// Propagates from the first control time to the last, sampled on a uniform
/// grid of `samples` points.
StateTrajectory propagate(const ControlWaveforms& controls, const PerturbationParams& p, const Spinor& initial,
                          const StepControl& step = {}, std::size_t samples = kDefaultSamples);

/// Propagates from output_times.front() through every listed time (monotone,
/// either direction; all inside the control window).
StateTrajectory propagate_on(const ControlWaveforms& controls, const PerturbationParams& p, const Spinor& initial,
                             std::span<const double> output_times, const StepControl& step = {});

/// Final state only; t_to may precede t_from.
Spinor evolve(const ControlWaveforms& controls, const PerturbationParams& p, const Spinor& initial, double t_from,
              double t_to, const StepControl& step = {});

/// Angles of a single state. At the poles varphi takes its limit value pi/2.
DynamicalAngles state_to_angles(const Spinor& s);

/// Angles along a trajectory; varphi wrapped to [-pi, pi], gamma unwrapped.
/// angles_to_state of each sample reproduces the state up to a global sign.
AngleSamples extract_angles(const StateTrajectory& traj);

enum class PoleLaunch {
    /// Near theta = 0 or pi integrate the projective amplitude ratio instead
    /// of the singular angle equations.
    regularized,
    /// Integrate the angle equations only; starting on a pole is an error.
    none,
};

/// Integrates theta' = Omega sin(varphi), varphi' = Delta + Omega cos(varphi) cot(theta),
/// gamma' = Omega cos(varphi) / sin(theta) on a uniform output grid.
AngleSamples integrate_angle_odes(const ControlWaveforms& controls, const DynamicalAngles& initial,
                                  const StepControl& step = {}, std::size_t samples = kDefaultSamples,
                                  PoleLaunch launch = PoleLaunch::regularized);

/// 1 - |<target|psi(t_f)>|^2.
double transfer_infidelity(const Spinor& final_state, const Spinor& target);
double transfer_infidelity(const StateTrajectory& traj, const Spinor& target);

}  // namespace qsq
