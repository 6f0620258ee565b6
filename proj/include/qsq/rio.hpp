#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include "qsq/model.hpp"

namespace qsq {

using Vec3 = std::array<double, 3>;

/// Point of the unit-speed curve r(s) on the Bloch sphere, r = (sin th cos g, sin th sin g, cos th).
struct CurvePoint {
    Vec3 position{};
    Vec3 tangent{};
    double theta = 0.0;
    double gamma = 0.0;
    /// Heading of the tangent measured from e_gamma towards e_theta.
    double varphi = 0.0;
    /// Geodesic curvature, t' = -r + kappa (r x t).
    double curvature = 0.0;
};

/// Dense representation of the robust curve: nodes of the frame ODE plus
/// cubic Hermite interpolation in arc length.
class RobustCurve {
public:
    RobustCurve(double mu, double epsilon, double length, std::size_t nodes = 8193);

    double length() const { return length_; }
    double mu() const { return mu_; }
    double epsilon() const { return epsilon_; }
    double gamma_initial() const { return gamma_.front(); }
    double gamma_final() const { return gamma_.back(); }
    /// Integral of r x dr along the whole curve.
    const Vec3& moment() const { return moment_; }

    /// s is clamped to [0, length].
    CurvePoint at(double s) const;
    double curvature(const Vec3& position) const;

private:
    double mu_, epsilon_, length_, h_;
    std::vector<Vec3> r_, t_;
    std::vector<double> gamma_;
    Vec3 moment_{};
};

/// Distinct local optimum found by one multistart seed.
struct GeodesicMinimum {
    double area = 0.0;
    double gamma_final = 0.0;
    double mu = 0.0;
    double epsilon = 0.0;
    double seed_gamma_final = 0.0;
    std::size_t seeds = 1;
};

/// Area-minimizing amplitude-robust transfer path from theta = 0 (gamma_i = pi/2)
/// to theta = pi, sampled uniformly in arc length.
struct GeodesicTrajectory {
    std::vector<double> arc;
    std::vector<double> gamma_grid;
    std::vector<double> theta;
    std::vector<double> varphi;
    std::vector<double> curvature;
    double area = 0.0;
    std::array<double, 2> residuals{};
    double gamma_final = 0.0;
    /// Curvature law kappa = mu (cos(eps) x + sin(eps) y).
    double mu = 0.0;
    double epsilon = 0.0;
    /// Length of the optimized polygon before refinement.
    double polygon_area = 0.0;
    /// Optimized polygon vertices (unit vectors), gauge-rotated to gamma_i = pi/2.
    std::vector<Vec3> polygon;
    std::vector<GeodesicMinimum> minima;
    std::shared_ptr<const RobustCurve> curve;

    std::size_t size() const { return arc.size(); }
};

struct GeodesicOptions {
    std::size_t grid_points = 512;
    double tol = 1e-6;
    /// Seeds the randomized fifth multistart start.
    std::uint64_t seed = 1;
    /// Number of multistart seeds (1..5).
    std::size_t starts = 5;
};

GeodesicTrajectory solve_geodesic(std::size_t grid_points, double tol);
GeodesicTrajectory solve_geodesic(const GeodesicOptions& options);

/// Builds the trajectory for a known curvature law, sampled on grid_points.
GeodesicTrajectory geodesic_from_law(double mu, double epsilon, double length, std::size_t grid_points);

/// (Re, Im) of the amplitude-error integral int f dt at alpha = 1, written in
/// arc length: (1/2) int (cos th cos vphi - i sin vphi) e^{i gamma} ds.
std::array<double, 2> robustness_residuals(const GeodesicTrajectory& g);

/// Same integral for an arbitrary path sampled in any monotone parameter u,
/// given theta(u), gamma(u) and the path speed (dtheta/du, dgamma/du).
std::array<double, 2> path_residuals(std::span<const double> u, std::span<const double> theta,
                                     std::span<const double> gamma, std::span<const double> theta_rate,
                                     std::span<const double> gamma_rate);

/// Polygon helpers (great-circle arcs between unit vectors).
double polygon_length(std::span<const Vec3> points);
/// Exact integral of r x dr along the polygon.
Vec3 polygon_moment(std::span<const Vec3> points);

struct RioDesign {
    GeodesicTrajectory geodesic;
    HyperGaussianSpec pulse;
    bool square = false;
    AngleSamples angles;
    /// Sampled gamma(t), same grid as angles.
    std::vector<double> gamma_of_t;
    ControlWaveforms controls;
    /// max |Omega_reconstructed - Omega_pulse| / peak.
    double rabi_mismatch = 0.0;
};

/// Time parametrization by partial pulse area: int_{t_i}^{t} Omega = s(t).
RioDesign parametrize_by_pulse(const GeodesicTrajectory& g, const HyperGaussianSpec& pulse,
                               std::size_t samples = 2001);
/// Square pulse of the given peak on [0, area / peak].
RioDesign parametrize_by_square_pulse(const GeodesicTrajectory& g, double peak, std::size_t samples = 2001);

/// hG-RIO design in one call: geodesic plus hyper-Gaussian of order n and peak Omega0.
RioDesign hg_rio_design(int order, double peak, std::size_t samples = 2001, const GeodesicOptions& options = {});

/// Resonant pulse of constant Rabi frequency `peak` and area pi.
ControlWaveforms flat_pi_controls(double peak = 1.0, std::size_t samples = 2001);

}  // namespace qsq
