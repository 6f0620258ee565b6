#include "qsq/cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <numbers>

#include "qsq/csv.hpp"
#include "qsq/error.hpp"
#include "qsq/rio.hpp"
#include "qsq/tcap.hpp"
#include "qsq/tdse.hpp"

namespace qsq::cli {
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kFigurePeak = 2.77;
constexpr double kRobustArea = 5.84;
constexpr double kLargeArea = 9.22;

void write_json(const fs::path& path, const json& j) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw InputError("cannot write " + path.string());
    f << j.dump(2) << '\n';
}

json boundary_json(const BoundaryReport& b) {
    return {{"g_begin_error", b.g_begin_error},
            {"g_end_error", b.g_end_error},
            {"slope_begin_error", b.slope_begin_error},
            {"slope_end_error", b.slope_end_error},
            {"min_slope", b.min_slope}};
}

csv::Table trajectory_table(const StateTrajectory& tr, const AngleSamples& a) {
    csv::Table t;
    t.header = {"t", "p_ground", "p_excited", "re_c1", "im_c1", "re_c2", "im_c2", "theta", "varphi", "gamma"};
    t.columns.assign(t.header.size(), {});
    for (std::size_t i = 0; i < tr.states.size(); ++i) {
        const Spinor& s = tr.states[i];
        const double row[] = {tr.time_grid[i], tr.populations[i].first, tr.populations[i].second,
                              s[0].real(), s[0].imag(), s[1].real(), s[1].imag(),
                              a.theta[i], a.varphi[i], a.gamma[i]};
        for (std::size_t j = 0; j < t.header.size(); ++j) t.columns[j].push_back(row[j]);
    }
    return t;
}

csv::Table scan_table(const RobustnessCurve& c) {
    csv::Table t{{"value", "infidelity", "log10_infidelity"}, {c.values, c.infidelity, {}}};
    for (double v : c.infidelity) t.columns[2].push_back(std::log10(std::max(v, 1e-300)));
    return t;
}

json geodesic_json(const GeodesicTrajectory& g) {
    json minima = json::array();
    for (const auto& m : g.minima)
        minima.push_back({{"area", m.area},
                          {"gamma_final", m.gamma_final},
                          {"mu", m.mu},
                          {"epsilon", m.epsilon},
                          {"seed_gamma_final", m.seed_gamma_final},
                          {"seeds", m.seeds}});
    return {{"area", g.area},
            {"polygon_area", g.polygon_area},
            {"gamma_initial", g.gamma_grid.front()},
            {"gamma_final", g.gamma_final},
            {"gamma_final_over_pi", g.gamma_final / kPi},
            {"residuals", {g.residuals[0], g.residuals[1]}},
            {"curvature_law", {{"mu", g.mu}, {"epsilon", g.epsilon}}},
            {"grid_points", g.size()},
            {"minima", minima}};
}

GeodesicOptions geodesic_options(const RunConfig& cfg) {
    GeodesicOptions o;
    o.grid_points = cfg.grid_points;
    o.seed = cfg.seed;
    return o;
}

class Checks {
public:
    void add(const std::string& name, double value, const std::string& target, bool passed) {
        list_.push_back({{"name", name}, {"value", value}, {"target", target}, {"passed", passed}});
        ok_ = ok_ && passed;
    }
    bool ok() const { return ok_; }
    const json& list() const { return list_; }

private:
    json list_ = json::array();
    bool ok_ = true;
};

}  // namespace

// ---- RunConfig -----------------------------------------------------------------

void RunConfig::validate() const {
    static const char* kProtocols[] = {"rio", "tcap-sine", "tcap-hg", "flat-pi"};
    if (std::find(std::begin(kProtocols), std::end(kProtocols), protocol) == std::end(kProtocols))
        throw InputError("unknown protocol '" + protocol + "' (rio, tcap-sine, tcap-hg, flat-pi)");
    if (units != "T" && units != "omega0") throw InputError("units must be 'T' or 'omega0'");
    if (n < 2 || n % 2 != 0) throw InputError("--n must be an even integer >= 2");
    if (!(a >= 1.0) || !std::isfinite(a)) throw InputError("--a must be >= 1");
    if (protocol == "tcap-hg" && !(a > 1.0)) throw InputError("tcap-hg needs --a > 1");
    if (N < 2) throw InputError("--N must be >= 2");
    if (!(tf > 0.0) || !std::isfinite(tf)) throw InputError("--tf must be positive");
    if (samples < 2) throw InputError("--samples must be >= 2");
    if (grid_points < 64) throw InputError("--grid-points must be >= 64");
    if (!std::isfinite(peak) || !std::isfinite(area)) throw InputError("peak and area must be finite");
    if (!std::isfinite(perturbation.alpha) || !std::isfinite(perturbation.delta) || !std::isfinite(perturbation.beta))
        throw InputError("perturbations must be finite");
}

double RunConfig::resolved_peak() const {
    if (peak > 0.0) return peak;
    return units == "T" ? kFigurePeak : 1.0;
}

double RunConfig::resolved_area() const { return area > 0.0 ? area : kRobustArea; }

json RunConfig::to_json() const {
    return {{"protocol", protocol},
            {"n", n},
            {"a", a},
            {"N", N},
            {"tf", tf},
            {"units", units},
            {"peak", peak},
            {"area", area},
            {"samples", samples},
            {"grid_points", grid_points},
            {"seed", seed},
            {"alpha", perturbation.alpha},
            {"delta", perturbation.delta},
            {"beta", perturbation.beta},
            {"out", out.string()}};
}

void RunConfig::merge(const json& j) {
    if (!j.is_object()) throw InputError("config must be a JSON object");
    for (const auto& [key, value] : j.items()) {
        if (key == "protocol") protocol = value.get<std::string>();
        else if (key == "n") n = value.get<int>();
        else if (key == "a") a = value.get<double>();
        else if (key == "N") N = value.get<int>();
        else if (key == "tf") tf = value.get<double>();
        else if (key == "units") units = value.get<std::string>();
        else if (key == "peak") peak = value.get<double>();
        else if (key == "area") area = value.get<double>();
        else if (key == "samples") samples = value.get<std::size_t>();
        else if (key == "grid_points") grid_points = value.get<std::size_t>();
        else if (key == "seed") seed = value.get<std::uint64_t>();
        else if (key == "alpha") perturbation.alpha = value.get<double>();
        else if (key == "delta") perturbation.delta = value.get<double>();
        else if (key == "beta") perturbation.beta = value.get<double>();
        else if (key == "out") out = value.get<std::string>();
        else if (key == "controls" || key == "axis" || key == "min" || key == "max" || key == "points") continue;
        else throw InputError("unknown config key '" + key + "'");
    }
}

// ---- design ----------------------------------------------------------------------

DesignResult build_design(const RunConfig& cfg) {
    cfg.validate();
    DesignResult r;
    json& m = r.meta;
    m["protocol"] = cfg.protocol;
    m["config"] = cfg.to_json();
    if (cfg.protocol == "rio") {
        const double peak = cfg.resolved_peak();
        const GeodesicTrajectory g = solve_geodesic(geodesic_options(cfg));
        const RioDesign d = parametrize_by_pulse(g, hyper_gaussian_matched(cfg.n, peak, g.area), cfg.samples);
        r.controls = d.controls;
        m["geodesic"] = geodesic_json(g);
        m["pulse"] = {{"peak", d.pulse.peak}, {"sigma", d.pulse.width}, {"order", d.pulse.order}};
        m["rabi_mismatch"] = d.rabi_mismatch;
        m["varphi_initial"] = d.angles.varphi.front();
        m["varphi_final"] = d.angles.varphi.back();
    } else if (cfg.protocol == "flat-pi") {
        r.controls = flat_pi_controls(cfg.resolved_peak(), cfg.samples);
    } else {
        const ParallelBase base = parallel_base_for_area(cfg.resolved_area(), 1.0);
        RescaleFunction g;
        m["base"] = {{"peak", base.peak}, {"width", base.width}, {"area", base.area()}};
        if (cfg.protocol == "tcap-sine") {
            const SineOptimization o =
                optimize_sine_coefficients(static_cast<std::size_t>(cfg.N), cfg.a, base, -cfg.tf, cfg.tf);
            g = sine_rescale(cfg.a, o.coeffs, -cfg.tf, cfg.tf);
            m["sine"] = {{"coeffs", o.coeffs}, {"optimized_peak", o.peak}, {"seed_peak", o.seed_peak}};
        } else {
            const HgRescale h = hg_rescale(cfg.n, cfg.a, cfg.tf, base);
            g = h.rescale;
            m["hyper_gaussian"] = {{"sigma", h.rescale.sigma},
                                   {"peak_ratio", h.rescale.peak_ratio},
                                   {"peak", h.pulse.peak},
                                   {"order", h.pulse.order},
                                   {"iterations", h.iterations}};
        }
        const TcapDesign d = make_tcap_design(base, g, cfg.samples);
        r.controls = d.controls;
        m["rescale"] = {{"kind", to_string(g.kind)},
                        {"contraction", g.contraction},
                        {"window", {g.t_begin, g.t_end}},
                        {"boundary", boundary_json(boundary_report(g))}};
        m["original_area"] = d.original_area;
        m["rescaled_area"] = d.rescaled_area;
        m["equivalence_distance"] = rescaling_equivalence_check(base, g);
    }
    m["label"] = r.controls.label;
    m["area"] = r.controls.area();
    m["peak"] = r.controls.peak_rabi();
    m["duration"] = r.controls.t_end() - r.controls.t_begin();
    return r;
}

DesignResult cmd_design(const RunConfig& cfg) {
    DesignResult r = build_design(cfg);
    fs::create_directories(cfg.out);
    csv::write(cfg.out / "controls.csv", csv::controls_table(r.controls));
    write_json(cfg.out / "design.json", r.meta);
    return r;
}

// ---- simulate / scan -------------------------------------------------------------------

double cmd_simulate(const fs::path& controls_csv, const PerturbationParams& p, const fs::path& out,
                    std::size_t samples) {
    const ControlWaveforms c = csv::controls_from_table(csv::read(controls_csv), controls_csv.stem().string());
    const StateTrajectory tr = propagate(c, p, ground_state(), {}, samples);
    fs::create_directories(out);
    csv::write(out / "trajectory.csv", trajectory_table(tr, extract_angles(tr)));
    return transfer_infidelity(tr, excited_state());
}

ScanSummary cmd_scan(const fs::path& controls_csv, ScanAxis axis, double lo, double hi, std::size_t points,
                     const fs::path& out) {
    if (points < 1) throw InputError("--points must be >= 1");
    if (!(hi >= lo)) throw InputError("--max must be >= --min");
    if (points > 1 && !(hi > lo)) throw InputError("--max must exceed --min for more than one point");
    const ControlWaveforms c = csv::controls_from_table(csv::read(controls_csv), controls_csv.stem().string());
    const std::vector<double> grid = points == 1 ? std::vector<double>{lo} : uniform_grid(lo, hi, points);
    ScanSummary s;
    s.curve = fidelity_scan(c, axis, grid);
    fs::create_directories(out);
    csv::write(out / ("scan_" + to_string(axis) + ".csv"), scan_table(s.curve));
    if (axis == ScanAxis::alpha) {
        try {
            s.slope = infidelity_slope(s.curve, 1e-3, 1e-2).slope;
            s.has_slope = true;
        } catch (const InputError&) {
        }
    }
    return s;
}

// ---- reproduce ---------------------------------------------------------------------------

namespace {

json reproduce_fig1(const RunConfig& cfg, Checks& checks, json& files) {
    const GeodesicTrajectory g = solve_geodesic(geodesic_options(cfg));
    csv::Table t{{"s", "gamma", "theta", "varphi", "curvature"}, {g.arc, g.gamma_grid, g.theta, g.varphi, g.curvature}};
    csv::write(cfg.out / "geodesic.csv", t);
    files.push_back("geodesic.csv");
    checks.add("area", g.area, "5.84 +- 0.05", std::abs(g.area - kRobustArea) <= 0.05);
    checks.add("gamma_final_over_pi", g.gamma_final / kPi, "5/3 within 1%",
               std::abs(g.gamma_final - 5.0 * kPi / 3.0) <= 0.01 * 5.0 * kPi / 3.0);
    const double res = std::max(std::abs(g.residuals[0]), std::abs(g.residuals[1]));
    checks.add("robustness_residual", res, "< 1e-6", res < 1e-6);
    return geodesic_json(g);
}

json reproduce_fig2(const RunConfig& cfg, Checks& checks, json& files) {
    const GeodesicTrajectory g = solve_geodesic(geodesic_options(cfg));
    const RioDesign d = parametrize_by_pulse(g, hyper_gaussian_matched(14, kFigurePeak, g.area), cfg.samples);
    const StateTrajectory tr = propagate(d.controls, {}, ground_state(), {}, cfg.samples);
    csv::write(cfg.out / "controls.csv", csv::controls_table(d.controls));
    csv::write(cfg.out / "trajectory.csv", trajectory_table(tr, extract_angles(tr)));
    files.push_back("controls.csv");
    files.push_back("trajectory.csv");
    const double infid = transfer_infidelity(tr, excited_state());
    checks.add("infidelity", infid, "< 1e-6", infid < 1e-6);
    checks.add("rabi_mismatch", d.rabi_mismatch, "< 1e-8", d.rabi_mismatch < 1e-8);
    checks.add("sigma", d.pulse.width, "1.095 within 1%", std::abs(d.pulse.width - 1.095) <= 0.01 * 1.095);
    checks.add("norm_deviation", tr.max_norm_deviation(), "< 1e-10", tr.max_norm_deviation() < 1e-10);
    // Central plateau: the excited population stays near 1/2 and oscillates.
    const double half = 0.25 * d.pulse.support_half_width();
    double lo = 1.0, hi = 0.0;
    int turns = 0;
    for (std::size_t i = 1; i + 1 < tr.time_grid.size(); ++i) {
        if (std::abs(tr.time_grid[i]) > half) continue;
        const double p = tr.populations[i].second;
        lo = std::min(lo, p);
        hi = std::max(hi, p);
        const double d0 = p - tr.populations[i - 1].second, d1 = tr.populations[i + 1].second - p;
        if (d0 * d1 < 0.0) ++turns;
    }
    checks.add("plateau_min", lo, ">= 0.4", lo >= 0.4);
    checks.add("plateau_max", hi, "<= 0.6", hi <= 0.6);
    checks.add("plateau_turning_points", turns, ">= 2", turns >= 2);
    const double dv = std::max(std::abs(d.angles.varphi.front() - 0.5 * kPi), std::abs(d.angles.varphi.back() - 0.5 * kPi));
    checks.add("varphi_endpoints", dv, "pi/2 within 1e-3", dv < 1e-3);
    return {{"pulse", {{"peak", d.pulse.peak}, {"sigma", d.pulse.width}, {"order", d.pulse.order}}},
            {"infidelity", infid}};
}

json reproduce_fig3(const RunConfig& cfg, Checks& checks, json& files) {
    const ParallelBase base = parallel_base_for_area(kRobustArea, 1.0);
    const double a = 3.0, tf = 4.0;
    csv::write(cfg.out / "pulse_gaussian.csv", csv::controls_table(parallel_waveforms(base, -tf, tf, cfg.samples)));
    files.push_back("pulse_gaussian.csv");
    json summary = json::object();
    std::vector<double> peaks;
    auto record = [&](const std::string& name, const RescaleFunction& g) {
        const TcapDesign d = make_tcap_design(base, g, cfg.samples);
        csv::write(cfg.out / ("pulse_" + name + ".csv"), csv::controls_table(d.controls));
        files.push_back("pulse_" + name + ".csv");
        const double area_err = std::abs(d.rescaled_area - d.original_area) / d.original_area;
        const double eq = rescaling_equivalence_check(base, g);
        checks.add(name + "_area_invariance", area_err, "< 1e-6", area_err < 1e-6);
        checks.add(name + "_equivalence", eq, "< 1e-6", eq < 1e-6);
        summary[name] = {{"peak", d.peak}, {"area", d.rescaled_area}, {"equivalence", eq}};
        return d.peak;
    };
    SineOptimOptions opt;
    for (int n : {2, 3, 6}) {
        const SineOptimization o = optimize_sine_coefficients(static_cast<std::size_t>(n), a, base, -tf, tf, opt);
        const RescaleFunction g = sine_rescale(a, o.coeffs, -tf, tf);
        const BoundaryReport b = boundary_report(g);
        checks.add("sine_N" + std::to_string(n) + "_boundary", b.max_error(), "< 1e-10", b.max_error() < 1e-10);
        checks.add("sine_N" + std::to_string(n) + "_min_slope", b.min_slope, "> 0", b.min_slope > 0.0);
        peaks.push_back(record("sine_N" + std::to_string(n), g));
        summary["sine_N" + std::to_string(n)]["coeffs"] = o.coeffs;
    }
    const double hg_peak = record("hg_n14", hg_rescale(14, a, tf, base).rescale);
    checks.add("peak_N3_below_N2", peaks[1], "< " + std::to_string(peaks[0]), peaks[1] < peaks[0]);
    checks.add("peak_N6_below_N3", peaks[2], "< " + std::to_string(peaks[1]), peaks[2] < peaks[1]);
    checks.add("hg_peak_below_N2", hg_peak, "< " + std::to_string(peaks[0]), hg_peak < peaks[0]);
    return summary;
}

json reproduce_fig4(const RunConfig& cfg, Checks& checks, json& files) {
    const ParallelBase base = parallel_base_for_area(kRobustArea, 1.0);
    const HgRescale h = hg_rescale(14, 3.0, 4.0, base);
    const TcapDesign d = make_tcap_design(base, h.rescale, cfg.samples);
    const StateTrajectory tr = propagate(d.controls, {}, ground_state(), {}, cfg.samples);
    csv::write(cfg.out / "controls.csv", csv::controls_table(d.controls));
    csv::write(cfg.out / "trajectory.csv", trajectory_table(tr, extract_angles(tr)));
    files.push_back("controls.csv");
    files.push_back("trajectory.csv");
    checks.add("sigma", h.rescale.sigma, "1.095 within 1%", std::abs(h.rescale.sigma - 1.095) <= 0.01 * 1.095);
    checks.add("peak_ratio", h.rescale.peak_ratio, "0.84 within 1%", std::abs(h.rescale.peak_ratio - 0.84) <= 0.0084);
    const double area_err = std::abs(d.rescaled_area - d.original_area) / d.original_area;
    checks.add("area_invariance", area_err, "< 1e-6", area_err < 1e-6);
    const double eq = rescaling_equivalence_check(base, h.rescale);
    checks.add("equivalence", eq, "< 1e-6", eq < 1e-6);
    checks.add("norm_deviation", tr.max_norm_deviation(), "< 1e-10", tr.max_norm_deviation() < 1e-10);
    double gap_err = 0.0;
    for (double tau : d.controls.time_grid) {
        const ControlSample c = d.controls.exact(tau);
        const double want = base.peak * h.rescale(tau).slope;
        gap_err = std::max(gap_err, std::abs(std::hypot(c.rabi, c.detuning) - want) / want);
    }
    checks.add("gap_tracks_slope", gap_err, "< 1e-10", gap_err < 1e-10);
    // Monotone quasi-linear transfer while the pulse is on.
    double drop = 0.0;
    std::vector<double> xs, ys;
    for (std::size_t i = 0; i < tr.time_grid.size(); ++i) {
        if (d.controls.rabi[i] < 0.5 * d.peak) continue;
        if (!ys.empty()) drop = std::max(drop, ys.back() - tr.populations[i].second);
        xs.push_back(tr.time_grid[i]);
        ys.push_back(tr.populations[i].second);
    }
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        mx += xs[i] / static_cast<double>(xs.size());
        my += ys[i] / static_cast<double>(xs.size());
    }
    double sxy = 0, sxx = 0, syy = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        sxy += (xs[i] - mx) * (ys[i] - my);
        sxx += (xs[i] - mx) * (xs[i] - mx);
        syy += (ys[i] - my) * (ys[i] - my);
    }
    const double corr = sxy / std::sqrt(sxx * syy);
    checks.add("population_monotone_drop", drop, "<= 1e-9", drop <= 1e-9);
    checks.add("population_linearity", corr, ">= 0.99", corr >= 0.99);
    const double infid = transfer_infidelity(tr, excited_state());
    return {{"sigma", h.rescale.sigma},
            {"peak_ratio", h.rescale.peak_ratio},
            {"peak", h.pulse.peak},
            {"infidelity", infid},
            {"boundary", boundary_json(boundary_report(h.rescale))}};
}

json reproduce_fig5(const RunConfig& cfg, Checks& checks, json& files) {
    const GeodesicTrajectory g = solve_geodesic(geodesic_options(cfg));
    const RioDesign rio = parametrize_by_pulse(g, hyper_gaussian_matched(14, kFigurePeak, g.area), cfg.samples);
    const ParallelBase b1 = parallel_base_for_area(kRobustArea, 1.0);
    const ParallelBase b2 = parallel_base_for_area(kLargeArea, 1.0);
    const TcapDesign t1 = make_tcap_design(b1, hg_rescale(14, 3.0, 4.0, b1).rescale, cfg.samples);
    const TcapDesign t2 = make_tcap_design(b2, hg_rescale(14, 3.0, 4.0, b2).rescale, cfg.samples);

    const auto grid = uniform_grid(-0.2, 0.2, 161);
    const RobustnessCurve cr = fidelity_scan(rio.controls, ScanAxis::alpha, grid);
    const RobustnessCurve c1 = fidelity_scan(t1.controls, ScanAxis::alpha, grid);
    const RobustnessCurve c2 = fidelity_scan(t2.controls, ScanAxis::alpha, grid);
    csv::write(cfg.out / "scan_rio_area5.84.csv", scan_table(cr));
    csv::write(cfg.out / "scan_tcap_area5.84.csv", scan_table(c1));
    csv::write(cfg.out / "scan_tcap_area9.22.csv", scan_table(c2));
    files.push_back("scan_rio_area5.84.csv");
    files.push_back("scan_tcap_area5.84.csv");
    files.push_back("scan_tcap_area9.22.csv");

    int below = 0, within = 0, n_below = 0, n_within = 0;
    double worst_ratio_equal = 0.0, worst_ratio_large = 0.0;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const double a = grid[i];
        if (std::abs(a) > 0.15 + 1e-12) continue;
        ++n_below;
        if (cr.infidelity[i] < c1.infidelity[i]) ++below;
        worst_ratio_equal = std::max(worst_ratio_equal, cr.infidelity[i] / std::max(c1.infidelity[i], 1e-300));
        if (a > 1e-12) continue;
        ++n_within;
        if (c2.infidelity[i] <= 2.0 * cr.infidelity[i]) ++within;
        worst_ratio_large = std::max(worst_ratio_large, c2.infidelity[i] / std::max(cr.infidelity[i], 1e-300));
    }
    checks.add("rio_below_tcap_equal_area_fraction", static_cast<double>(below) / n_below, "1 (every alpha in [-0.15, 0.15])",
               below == n_below);
    checks.add("tcap_large_area_within_2x_rio_fraction", static_cast<double>(within) / n_within,
               "1 (every alpha in [-0.15, 0])", within == n_within);

    std::vector<double> slope_grid;
    for (int k = 0; k <= 10; ++k) slope_grid.push_back(1e-3 * std::pow(10.0, k / 10.0));
    const RobustnessCurve sr = fidelity_scan(rio.controls, ScanAxis::alpha, slope_grid);
    const RobustnessCurve sf = fidelity_scan(flat_pi_controls(kFigurePeak, cfg.samples), ScanAxis::alpha, slope_grid);
    csv::write(cfg.out / "slope_rio.csv", scan_table(sr));
    csv::write(cfg.out / "slope_flat_pi.csv", scan_table(sf));
    files.push_back("slope_rio.csv");
    files.push_back("slope_flat_pi.csv");
    const double s_rio = infidelity_slope(sr, 1e-3, 1e-2).slope;
    const double s_flat = infidelity_slope(sf, 1e-3, 1e-2).slope;
    checks.add("rio_slope", s_rio, "[3.7, 4.3]", s_rio >= 3.7 && s_rio <= 4.3);
    checks.add("flat_pi_slope", s_flat, "2.0 +- 0.1", std::abs(s_flat - 2.0) <= 0.1);
    return {{"areas", {{"rio", rio.controls.area()}, {"tcap_equal", t1.rescaled_area}, {"tcap_large", t2.rescaled_area}}},
            {"worst_rio_over_tcap_equal_area", worst_ratio_equal},
            {"worst_tcap_large_over_rio_left", worst_ratio_large}};
}

}  // namespace

json cmd_reproduce(const std::string& figure, const RunConfig& cfg) {
    cfg.validate();
    fs::create_directories(cfg.out);
    Checks checks;
    json files = json::array();
    json details;
    if (figure == "fig1")
        details = reproduce_fig1(cfg, checks, files);
    else if (figure == "fig2")
        details = reproduce_fig2(cfg, checks, files);
    else if (figure == "fig3")
        details = reproduce_fig3(cfg, checks, files);
    else if (figure == "fig4")
        details = reproduce_fig4(cfg, checks, files);
    else if (figure == "fig5")
        details = reproduce_fig5(cfg, checks, files);
    else
        throw InputError("unknown figure '" + figure + "' (fig1..fig5)");
    json manifest = {{"figure", figure},
                     {"files", files},
                     {"checks", checks.list()},
                     {"details", details},
                     {"config", cfg.to_json()},
                     {"passed", checks.ok()}};
    write_json(cfg.out / "manifest.json", manifest);
    if (!checks.ok()) {
        std::string failed;
        for (const auto& c : checks.list())
            if (!c["passed"].get<bool>()) failed += (failed.empty() ? "" : ", ") + c["name"].get<std::string>();
        throw ReproductionFailure(figure + ": failed checks: " + failed);
    }
    return manifest;
}

// ---- entry point ----------------------------------------------------------------------------

int run(int argc, char** argv) {
    CLI::App app{"Robust two-level control with quasi-square pulses: design, simulate, scan, reproduce"};
    app.require_subcommand(1);

    RunConfig cfg;
    std::string config_path;
    std::string out_dir = ".";
    std::string controls_path;
    std::string axis_name = "alpha";
    double lo = -0.2, hi = 0.2;
    std::size_t points = 161;
    std::string figure;

    auto common = [&](CLI::App* sub) {
        sub->add_option("--out", out_dir, "Output directory");
        sub->add_option("--config", config_path, "JSON config; flags override its keys")->check(CLI::ExistingFile);
    };

    CLI::App* design = app.add_subcommand("design", "Generate a pulse design");
    common(design);
    design->add_option("--protocol", cfg.protocol, "rio | tcap-sine | tcap-hg | flat-pi");
    design->add_option("--n", cfg.n, "Hyper-Gaussian order (even)");
    design->add_option("--a", cfg.a, "Time contraction factor");
    design->add_option("--N", cfg.N, "Number of sine terms");
    design->add_option("--tf", cfg.tf, "Half window of the uncontracted Gaussian design (units of T)");
    design->add_option("--units", cfg.units, "T (RIO peak 2.77) or omega0 (RIO peak 1)");
    design->add_option("--peak", cfg.peak, "Peak Rabi frequency for rio / flat-pi");
    design->add_option("--area", cfg.area, "Gaussian pulse area for TCAP designs (default 5.84)");
    design->add_option("--samples", cfg.samples, "Output samples");
    design->add_option("--grid-points", cfg.grid_points, "Geodesic grid points");
    design->add_option("--seed", cfg.seed, "Multistart seed");

    CLI::App* simulate = app.add_subcommand("simulate", "Propagate a controls CSV");
    common(simulate);
    simulate->add_option("--controls", controls_path, "controls.csv")->required();
    simulate->add_option("--alpha", cfg.perturbation.alpha, "Relative Rabi amplitude error");
    simulate->add_option("--delta", cfg.perturbation.delta, "Static detuning offset");
    simulate->add_option("--beta", cfg.perturbation.beta, "Static transverse offset");
    simulate->add_option("--samples", cfg.samples, "Output samples");

    CLI::App* scan = app.add_subcommand("scan", "Infidelity scan along one perturbation axis");
    common(scan);
    scan->add_option("--controls", controls_path, "controls.csv")->required();
    scan->add_option("--axis", axis_name, "alpha | delta | beta");
    scan->add_option("--min", lo, "Lower end of the scan");
    scan->add_option("--max", hi, "Upper end of the scan");
    scan->add_option("--points", points, "Number of scan points");

    CLI::App* reproduce = app.add_subcommand("reproduce", "Emit the data behind one figure");
    common(reproduce);
    reproduce->add_option("figure", figure, "fig1 | fig2 | fig3 | fig4 | fig5")->required();
    reproduce->add_option("--samples", cfg.samples, "Output samples");
    reproduce->add_option("--grid-points", cfg.grid_points, "Geodesic grid points");
    reproduce->add_option("--seed", cfg.seed, "Multistart seed");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kBadInput;
    }

    try {
        CLI::App* active = app.get_subcommands().front();
        if (!config_path.empty()) {
            std::ifstream f(config_path);
            const json j = json::parse(f);
            // Flags given on the command line win over the file.
            RunConfig flags = cfg;
            cfg.merge(j);
            auto keep = [&](const char* flag, auto member) {
                const auto opts = active->get_options();
                for (const CLI::Option* o : opts)
                    if (o->check_lname(flag) && o->count() > 0) member(cfg, flags);
            };
            keep("protocol", [](RunConfig& c, const RunConfig& f) { c.protocol = f.protocol; });
            keep("n", [](RunConfig& c, const RunConfig& f) { c.n = f.n; });
            keep("a", [](RunConfig& c, const RunConfig& f) { c.a = f.a; });
            keep("N", [](RunConfig& c, const RunConfig& f) { c.N = f.N; });
            keep("tf", [](RunConfig& c, const RunConfig& f) { c.tf = f.tf; });
            keep("units", [](RunConfig& c, const RunConfig& f) { c.units = f.units; });
            keep("peak", [](RunConfig& c, const RunConfig& f) { c.peak = f.peak; });
            keep("area", [](RunConfig& c, const RunConfig& f) { c.area = f.area; });
            keep("samples", [](RunConfig& c, const RunConfig& f) { c.samples = f.samples; });
            keep("grid-points", [](RunConfig& c, const RunConfig& f) { c.grid_points = f.grid_points; });
            keep("seed", [](RunConfig& c, const RunConfig& f) { c.seed = f.seed; });
            keep("alpha", [](RunConfig& c, const RunConfig& f) { c.perturbation.alpha = f.perturbation.alpha; });
            keep("delta", [](RunConfig& c, const RunConfig& f) { c.perturbation.delta = f.perturbation.delta; });
            keep("beta", [](RunConfig& c, const RunConfig& f) { c.perturbation.beta = f.perturbation.beta; });
            auto pick = [&](const char* key, const char* flag, auto& target) {
                if (!j.contains(key)) return;
                for (const CLI::Option* o : active->get_options())
                    if (o->check_lname(flag) && o->count() > 0) return;
                j.at(key).get_to(target);
            };
            pick("controls", "controls", controls_path);
            pick("axis", "axis", axis_name);
            pick("min", "min", lo);
            pick("max", "max", hi);
            pick("points", "points", points);
            if (j.contains("out") && active->get_option("--out")->count() == 0) out_dir = j.at("out").get<std::string>();
        }
        cfg.out = out_dir;

        if (active == design) {
            const DesignResult r = cmd_design(cfg);
            std::printf("design %s: area %.10g, peak %.10g -> %s\n", cfg.protocol.c_str(), r.meta["area"].get<double>(),
                        r.meta["peak"].get<double>(), (cfg.out / "controls.csv").string().c_str());
        } else if (active == simulate) {
            const double infid = cmd_simulate(controls_path, cfg.perturbation, cfg.out, cfg.samples);
            std::printf("%.17g\n", infid);
        } else if (active == scan) {
            const ScanSummary s = cmd_scan(controls_path, parse_axis(axis_name), lo, hi, points, cfg.out);
            std::printf("scan_%s.csv: %zu points", axis_name.c_str(), s.curve.values.size());
            if (s.has_slope) std::printf(", slope %.6f on |alpha| in [1e-3, 1e-2]", s.slope);
            std::printf("\n");
        } else {
            const json m = cmd_reproduce(figure, cfg);
            std::printf("%s: all %zu checks passed -> %s\n", figure.c_str(), m["checks"].size(),
                        (cfg.out / "manifest.json").string().c_str());
        }
        return kOk;
    } catch (const ReproductionFailure& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kCheckFailed;
    } catch (const IntegrationError& e) {
        std::fprintf(stderr, "integration failure: %s\n", e.what());
        return kIntegrationFailure;
    } catch (const ConvergenceError& e) {
        std::fprintf(stderr, "no convergence: %s\n", e.what());
        return kNoConvergence;
    } catch (const InputError& e) {
        std::fprintf(stderr, "bad input: %s\n", e.what());
        return kBadInput;
    } catch (const DomainError& e) {
        std::fprintf(stderr, "bad input: %s\n", e.what());
        return kBadInput;
    } catch (const nlohmann::json::exception& e) {
        std::fprintf(stderr, "bad config: %s\n", e.what());
        return kBadInput;
    } catch (const fs::filesystem_error& e) {
        std::fprintf(stderr, "bad input: %s\n", e.what());
        return kBadInput;
    }
}

}  // namespace qsq::cli
