#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>

#include <json.hpp>

#include "qsq/model.hpp"
#include "qsq/robustness.hpp"

namespace qsq::cli {

enum ExitCode : int {
    kOk = 0,
    kBadInput = 2,
    kNoConvergence = 3,
    kIntegrationFailure = 4,
    kCheckFailed = 5,
};

/// An embedded check of `reproduce` failed; the manifest has been written.
class ReproductionFailure : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct RunConfig {
    std::string protocol = "rio";
    int n = 14;
    double a = 3.0;
    int N = 6;
    double tf = 4.0;
    /// "T": time in units of the Gaussian width, RIO peak 2.77. "omega0": RIO peak 1.
    std::string units = "T";
    /// <= 0 selects the protocol default.
    double peak = 0.0;
    double area = 0.0;
    std::size_t samples = 2001;
    std::size_t grid_points = 512;
    std::uint64_t seed = 1;
    PerturbationParams perturbation;
    std::filesystem::path out = ".";

    /// Throws InputError for unknown protocols/units or out-of-range values.
    void validate() const;
    double resolved_peak() const;
    double resolved_area() const;
    nlohmann::json to_json() const;
    /// Overlays the keys present in j onto this config.
    void merge(const nlohmann::json& j);
};

struct DesignResult {
    ControlWaveforms controls;
    nlohmann::json meta;
};

DesignResult build_design(const RunConfig& cfg);
/// Writes controls.csv and design.json under cfg.out.
DesignResult cmd_design(const RunConfig& cfg);

/// Writes trajectory.csv; returns the final infidelity against the excited state.
double cmd_simulate(const std::filesystem::path& controls_csv, const PerturbationParams& p,
                    const std::filesystem::path& out, std::size_t samples = 2001);

struct ScanSummary {
    RobustnessCurve curve;
    bool has_slope = false;
    double slope = 0.0;
};

/// Writes scan_<axis>.csv with columns value, infidelity, log10_infidelity.
ScanSummary cmd_scan(const std::filesystem::path& controls_csv, ScanAxis axis, double lo, double hi,
                     std::size_t points, const std::filesystem::path& out);

/// fig1..fig5: writes the figure's CSV bundle and manifest.json under cfg.out;
/// throws ReproductionFailure if a check fails.
nlohmann::json cmd_reproduce(const std::string& figure, const RunConfig& cfg);

/// Entry point; returns the process exit code.
int run(int argc, char** argv);

}  // namespace qsq::cli
