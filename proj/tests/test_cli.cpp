#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>

#include "qsq/cli.hpp"
#include "qsq/csv.hpp"
#include "qsq/error.hpp"

using namespace qsq;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const fs::path kRoot = fs::current_path() / "cli_scratch";

int run_cli(std::vector<std::string> args) {
    args.insert(args.begin(), "qsquare");
    std::vector<char*> argv;
    for (auto& a : args) argv.push_back(a.data());
    return cli::run(static_cast<int>(argv.size()), argv.data());
}

std::string slurp(const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    std::ostringstream s;
    s << f.rdbuf();
    return s.str();
}

json read_json(const fs::path& p) { return json::parse(slurp(p)); }

fs::path dir(const std::string& name) {
    const fs::path d = kRoot / name;
    fs::remove_all(d);
    return d;
}

}  // namespace

TEST_CASE("csv formatting and round trip") {
    CHECK(csv::format_number(0.1) == "1.0000000000000001e-01");
    CHECK(csv::format_number(-2.0) == "-2.0000000000000000e+00");
    csv::Table t{{"a", "b"}, {{0.1, 1e-300, -3.75}, {std::numbers::pi, 2.0, 1e300}}};
    const std::string text = csv::to_string(t);
    CHECK(text.find('\r') == std::string::npos);
    CHECK(text.substr(0, 4) == "a,b\n");
    const csv::Table back = csv::parse(text);
    CHECK(back.header == t.header);
    CHECK(back.columns == t.columns);
    CHECK(csv::to_string(back) == text);
}

TEST_CASE("csv rejects malformed input") {
    CHECK_THROWS_AS(csv::parse(""), InputError);
    CHECK_THROWS_AS(csv::parse("a,b\n1,2\n3\n"), InputError);
    CHECK_THROWS_AS(csv::parse("a,b\n1,x\n"), InputError);
    CHECK_THROWS_AS(csv::parse("t,omega\n0,1\n1,1\n").column("delta"), InputError);
    CHECK_THROWS_AS(csv::controls_from_table(csv::parse("t,omega,delta\n0,1,0\n0,1,0\n")), InputError);
    CHECK_THROWS_AS(csv::read(kRoot / "missing.csv"), InputError);
}

TEST_CASE("design rio") {
    const fs::path out = dir("rio");
    REQUIRE(run_cli({"design", "--protocol", "rio", "--n", "14", "--out", out.string()}) == cli::kOk);
    const csv::Table t = csv::read(out / "controls.csv");
    CHECK(t.header == std::vector<std::string>{"t", "omega", "delta", "laser_phase"});
    const ControlWaveforms c = csv::controls_from_table(t);
    CHECK(std::abs(c.area() - 5.84) <= 0.05);
    CHECK(c.peak_rabi() == doctest::Approx(2.77).epsilon(1e-9));
    const json j = read_json(out / "design.json");
    CHECK(j["config"]["protocol"] == "rio");
    CHECK(j["config"]["n"] == 14);
    CHECK(std::abs(j["geodesic"]["residuals"][0].get<double>()) < 1e-6);
    CHECK(j["geodesic"]["gamma_final_over_pi"].get<double>() == doctest::Approx(5.0 / 3.0).epsilon(0.01));

    // Omega_0 = 1 units stretch time by 2.77
    const fs::path unit = dir("rio_omega0");
    REQUIRE(run_cli({"design", "--protocol", "rio", "--units", "omega0", "--out", unit.string()}) == cli::kOk);
    const ControlWaveforms u = csv::controls_from_table(csv::read(unit / "controls.csv"));
    CHECK(u.peak_rabi() == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(std::abs(u.area() - 5.84) <= 0.05);
}

TEST_CASE("design tcap-hg and flat-pi") {
    const fs::path hg = dir("hg");
    REQUIRE(run_cli({"design", "--protocol", "tcap-hg", "--n", "14", "--a", "3", "--tf", "4.0", "--out", hg.string()}) ==
            cli::kOk);
    const json j = read_json(hg / "design.json");
    CHECK(j["hyper_gaussian"]["sigma"].get<double>() == doctest::Approx(1.095).epsilon(0.01));
    CHECK(j["hyper_gaussian"]["peak_ratio"].get<double>() == doctest::Approx(0.84).epsilon(0.01));

    const fs::path flat = dir("flat");
    REQUIRE(run_cli({"design", "--protocol", "flat-pi", "--out", flat.string()}) == cli::kOk);
    const ControlWaveforms c = csv::controls_from_table(csv::read(flat / "controls.csv"));
    CHECK(c.area() == doctest::Approx(std::numbers::pi).epsilon(1e-12));
    for (double d : c.detuning) CHECK(d == 0.0);
}

TEST_CASE("design tcap-sine") {
    const fs::path out = dir("sine");
    REQUIRE(run_cli({"design", "--protocol", "tcap-sine", "--N", "3", "--out", out.string()}) == cli::kOk);
    const json j = read_json(out / "design.json");
    CHECK(j["sine"]["coeffs"].size() == 3);
    CHECK(j["rescale"]["boundary"]["g_end_error"].get<double>() == doctest::Approx(0.0).epsilon(1e-10));
    CHECK(j["equivalence_distance"].get<double>() < 1e-6);
}

TEST_CASE("repeated runs are byte-identical") {
    const fs::path a = dir("repeat_a"), b = dir("repeat_b");
    for (const fs::path& d : {a, b}) {
        REQUIRE(run_cli({"design", "--protocol", "tcap-hg", "--out", d.string()}) == cli::kOk);
        REQUIRE(run_cli({"simulate", "--controls", (d / "controls.csv").string(), "--alpha", "0.02", "--out", d.string()}) ==
                cli::kOk);
        REQUIRE(run_cli({"scan", "--controls", (d / "controls.csv").string(), "--min", "-0.1", "--max", "0.1", "--points",
                         "9", "--out", d.string()}) == cli::kOk);
    }
    for (const char* f : {"controls.csv", "trajectory.csv", "scan_alpha.csv"}) {
        const std::string x = slurp(a / f);
        CHECK(!x.empty());
        CHECK(x == slurp(b / f));
    }
    json ja = read_json(a / "design.json"), jb = read_json(b / "design.json");
    ja["config"].erase("out");
    jb["config"].erase("out");
    CHECK(ja == jb);
}

TEST_CASE("simulate consumes design output") {
    const fs::path d = dir("sim");
    REQUIRE(run_cli({"design", "--protocol", "rio", "--out", d.string()}) == cli::kOk);
    const double inf = cli::cmd_simulate(d / "controls.csv", {}, d);
    CHECK(inf < 1e-6);
    const csv::Table t = csv::read(d / "trajectory.csv");
    CHECK(t.header == std::vector<std::string>{"t", "p_ground", "p_excited", "re_c1", "im_c1", "re_c2", "im_c2", "theta",
                                               "varphi", "gamma"});
    CHECK(t.rows() == 2001);

    const fs::path f = dir("sim_flat");
    REQUIRE(run_cli({"design", "--protocol", "flat-pi", "--out", f.string()}) == cli::kOk);
    const double c = std::cos(1.1 * std::numbers::pi / 2);
    CHECK(cli::cmd_simulate(f / "controls.csv", {0.1, 0.0, 0.0}, f) == doctest::Approx(c * c).epsilon(1e-9));
}

TEST_CASE("scan") {
    const fs::path f = dir("scan_flat");
    REQUIRE(run_cli({"design", "--protocol", "flat-pi", "--out", f.string()}) == cli::kOk);
    const cli::ScanSummary one = cli::cmd_scan(f / "controls.csv", ScanAxis::alpha, 0.0, 0.0, 1, f);
    CHECK(one.curve.values.size() == 1);
    CHECK(one.curve.infidelity[0] == doctest::Approx(cli::cmd_simulate(f / "controls.csv", {}, f)).epsilon(1e-12));
    CHECK(csv::read(f / "scan_alpha.csv").rows() == 1);

    const cli::ScanSummary s = cli::cmd_scan(f / "controls.csv", ScanAxis::alpha, 1e-3, 1e-2, 10, f);
    CHECK(s.has_slope);
    CHECK(std::abs(s.slope - 2.0) <= 0.1);
    const csv::Table t = csv::read(f / "scan_alpha.csv");
    CHECK(t.header == std::vector<std::string>{"value", "infidelity", "log10_infidelity"});
    CHECK(t.column("log10_infidelity")[3] == doctest::Approx(std::log10(t.column("infidelity")[3])));

    REQUIRE(run_cli({"scan", "--controls", (f / "controls.csv").string(), "--axis", "delta", "--out", f.string()}) ==
            cli::kOk);
    CHECK(csv::read(f / "scan_delta.csv").rows() == 161);
}

TEST_CASE("config file with flag overrides") {
    const fs::path d = dir("config");
    fs::create_directories(d);
    {
        std::ofstream cfg(d / "cfg.json");
        cfg << R"({"protocol": "tcap-sine", "N": 2, "a": 3.0, "samples": 301})";
    }
    REQUIRE(run_cli({"design", "--config", (d / "cfg.json").string(), "--a", "2", "--out", d.string()}) == cli::kOk);
    const json j = read_json(d / "design.json");
    CHECK(j["config"]["protocol"] == "tcap-sine");
    CHECK(j["config"]["N"] == 2);
    CHECK(j["config"]["a"].get<double>() == 2.0);
    CHECK(csv::read(d / "controls.csv").rows() == 301);
}

TEST_CASE("exit codes") {
    const fs::path d = dir("codes");
    fs::create_directories(d);
    CHECK(run_cli({"design", "--protocol", "bogus", "--out", d.string()}) == cli::kBadInput);
    CHECK(run_cli({"design", "--protocol", "tcap-hg", "--a", "1", "--out", d.string()}) == cli::kBadInput);
    CHECK(run_cli({"design", "--n", "7", "--out", d.string()}) == cli::kBadInput);
    CHECK(run_cli({"simulate", "--controls", (d / "nope.csv").string(), "--out", d.string()}) == cli::kBadInput);
    {
        std::ofstream bad(d / "bad.csv");
        bad << "t,omega,delta\n0,1,0\n1,oops,0\n";
    }
    CHECK(run_cli({"simulate", "--controls", (d / "bad.csv").string(), "--out", d.string()}) == cli::kBadInput);
    CHECK(run_cli({"scan", "--controls", (d / "bad.csv").string(), "--axis", "gamma", "--out", d.string()}) ==
          cli::kBadInput);
    {
        std::ofstream cfg(d / "broken.json");
        cfg << "{ not json";
    }
    CHECK(run_cli({"design", "--config", (d / "broken.json").string(), "--out", d.string()}) == cli::kBadInput);
    {
        std::ofstream cfg(d / "unknown.json");
        cfg << R"({"colour": "blue"})";
    }
    CHECK(run_cli({"design", "--config", (d / "unknown.json").string(), "--out", d.string()}) == cli::kBadInput);
    CHECK(run_cli({"reproduce", "fig9", "--out", d.string()}) == cli::kBadInput);
    CHECK(run_cli({"frobnicate"}) == cli::kBadInput);
    CHECK(run_cli({}) == cli::kBadInput);
    {
        // a Rabi frequency far beyond the step budget
        std::ofstream hard(d / "stiff.csv");
        hard << "t,omega,delta\n0,1e13,0\n1,1e13,0\n";
    }
    CHECK(run_cli({"simulate", "--controls", (d / "stiff.csv").string(), "--out", d.string()}) ==
          cli::kIntegrationFailure);
}

TEST_CASE("reproduce writes a manifest") {
    const fs::path d = dir("fig1");
    REQUIRE(run_cli({"reproduce", "fig1", "--out", d.string()}) == cli::kOk);
    const json m = read_json(d / "manifest.json");
    CHECK(m["passed"] == true);
    CHECK(m["figure"] == "fig1");
    CHECK(fs::exists(d / "geodesic.csv"));
    for (const auto& c : m["checks"]) CHECK(c["passed"] == true);
}

TEST_CASE("installed binary") {
    const std::string bin = QSQ_CLI_BINARY;
    CHECK(std::system((bin + " --help > /dev/null").c_str()) == 0);
    const int status = std::system((bin + " design --protocol nope > /dev/null 2>&1").c_str());
    CHECK(WEXITSTATUS(status) == cli::kBadInput);
}
