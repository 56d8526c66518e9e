#include "catch_amalgamated.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

#include "qra/run_config.hpp"
#include "qra/runner.hpp"

using namespace qra;
using Catch::Matchers::WithinAbs;

namespace {

std::string slurp(const std::string& path) {
    std::ifstream f(path);
    REQUIRE(f);
    std::stringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

struct Csv {
    std::vector<std::string> comments;
    std::vector<std::string> columns;
    std::vector<std::vector<std::string>> rows;
};

Csv parse_csv(const std::string& text) {
    Csv out;
    std::stringstream ss(text);
    std::string line;
    bool header_seen = false;
    while (std::getline(ss, line)) {
        if (line.empty()) continue;
        if (line[0] == '#') {
            out.comments.push_back(line);
            continue;
        }
        std::vector<std::string> cells;
        std::stringstream ls(line);
        std::string cell;
        while (std::getline(ls, cell, ',')) cells.push_back(cell);
        if (line.back() == ',') cells.push_back("");
        if (!header_seen) {
            out.columns = cells;
            header_seen = true;
        } else {
            out.rows.push_back(cells);
        }
    }
    return out;
}

double trapezoid_mass(const Csv& csv, std::size_t time_col, std::size_t col) {
    double mass = 0.0;
    for (std::size_t i = 1; i < csv.rows.size(); ++i) {
        const double t0 = std::stod(csv.rows[i - 1][time_col]);
        const double t1 = std::stod(csv.rows[i][time_col]);
        const double g0 = std::stod(csv.rows[i - 1][col]);
        const double g1 = std::stod(csv.rows[i][col]);
        mass += 0.5 * (g0 + g1) * (t1 - t0);
    }
    return mass;
}

std::filesystem::path work_dir() {
    auto p = std::filesystem::temp_directory_path() / "qra_runner_tests";
    std::filesystem::create_directories(p);
    return p;
}

} // namespace

TEST_CASE("config round trip and strictness", "[cli]") {
    RunConfig cfg;
    cfg.kind = "mfpt-scan";
    cfg.noise_amplitude = 0.3;
    cfg.curve_parameter = "noise_amplitude";
    cfg.curve_values = {0.1, 0.2, 0.3};
    cfg.seed = 777;

    const std::string text = emit_config(cfg);
    const RunConfig back = parse_config(text);
    CHECK(back == cfg);
    CHECK(emit_config(back) == text);

    CHECK_THROWS_AS(parse_config("no_such_key = 1\n"), config_error);
    CHECK_THROWS_AS(parse_config("alpha = 0.7\nalpha = 0.8\n"), config_error);
    CHECK_THROWS_AS(parse_config("alpha 0.7\n"), config_error);
    CHECK_THROWS_AS(parse_config("alpha = abc\n"), config_error);
    try {
        parse_config("alpha = 0.7\nbogus = 1\n");
        FAIL("expected config_error");
    } catch (const config_error& e) {
        CHECK(std::string(e.what()).find("line 2") != std::string::npos);
    }

    // comments and blank lines are fine; overrides apply on a base
    const RunConfig merged = parse_config("# comment\n\nalpha = 0.9 # trailing\n", cfg);
    CHECK(merged.alpha == 0.9);
    CHECK(merged.curve_values == cfg.curve_values);
}

TEST_CASE("preset catalog", "[cli]") {
    const auto presets = list_presets();
    CHECK(presets.size() >= 11);

    bool fig4_crossing = false;
    for (const auto& p : presets)
        if (p.name == "fig4" && p.kind == "crossing") fig4_crossing = true;
    CHECK(fig4_crossing);

    // every preset resolves and round-trips through the flat document
    for (const auto& p : presets) {
        const RunConfig cfg = preset_config(p.name);
        CHECK(cfg.kind == p.kind);
        CHECK(parse_config(emit_config(cfg)) == cfg);
    }
    CHECK_THROWS_AS(preset_config("fig1"), config_error);
}

TEST_CASE("rate-table run", "[cli]") {
    RunConfig cfg;
    cfg.kind = "rate-table";
    cfg.grid_points = 40;
    cfg.out = (work_dir() / "rates.csv").string();
    const auto art = run(cfg);

    const Csv csv = parse_csv(slurp(art.csv_path));
    REQUIRE(csv.columns.size() == 4);
    CHECK(csv.columns[0] == "time[1/D0]");
    CHECK(csv.rows.size() == 40);
    // improved mode ramps from zero to the stationary value
    CHECK(std::stod(csv.rows.front()[2]) == 0.0);
    CHECK_THAT(std::stod(csv.rows.back()[2]), WithinAbs(std::stod(csv.rows.back()[1]), 1e-8));
}

TEST_CASE("density run: hygiene, determinism, reproducibility", "[cli]") {
    RunConfig cfg;
    cfg.kind = "fpt-pdf";
    cfg.grid_points = 400;
    cfg.out = (work_dir() / "pdf.csv").string();
    const auto art = run(cfg);

    const std::string bytes = slurp(art.csv_path);
    const Csv csv = parse_csv(bytes);
    REQUIRE(csv.columns.size() == 3);  // time + stationary + improved

    // time strictly increasing, cells finite
    double prev = -1.0;
    for (const auto& row : csv.rows) {
        const double t = std::stod(row[0]);
        CHECK(t > prev);
        prev = t;
        for (const auto& cell : row) {
            REQUIRE(!cell.empty());
            CHECK(std::isfinite(std::stod(cell)));
        }
    }
    // every emitted density column integrates to one on its own grid
    for (std::size_t col = 1; col < csv.columns.size(); ++col)
        CHECK_THAT(trapezoid_mass(csv, 0, col), WithinAbs(1.0, 1e-3));

    // byte-identical rerun
    const auto art2 = run(cfg);
    CHECK(slurp(art2.csv_path) == bytes);

    // the sidecar's config text reproduces the CSV byte for byte
    std::ifstream jf(art.sidecar_path);
    REQUIRE(jf);
    nlohmann::json side = nlohmann::json::parse(jf);
    RunConfig from_side = parse_config(side["config_text"].get<std::string>());
    from_side.out = (work_dir() / "pdf_repro.csv").string();
    const auto art3 = run(from_side);
    std::string repro = slurp(art3.csv_path);
    // normalize the self-referential output path comment before comparing
    auto strip_out = [](std::string s) {
        std::stringstream in(s), out;
        std::string line;
        while (std::getline(in, line))
            if (line.rfind("# out =", 0) != 0) out << line << "\n";
        return out.str();
    };
    CHECK(strip_out(repro) == strip_out(bytes));
}

TEST_CASE("scan run with curves", "[cli]") {
    RunConfig cfg;
    cfg.kind = "mfpt-scan";
    cfg.sweep = "noise-rate";
    cfg.tunneling = "dichotomous";
    cfg.curve_parameter = "noise_amplitude";
    cfg.curve_values = {0.1, 0.3};
    cfg.sweep_min = 1e-3;
    cfg.sweep_max = 1e2;
    cfg.sweep_points = 9;
    cfg.out = (work_dir() / "scan.csv").string();
    const auto art = run(cfg);

    const Csv csv = parse_csv(slurp(art.csv_path));
    // nu, two curves, two static refs, two adiabatic refs
    REQUIRE(csv.columns.size() == 7);
    CHECK(csv.rows.size() == 9);
    // larger noise amplitude decays slower in the adiabatic regime
    CHECK(std::stod(csv.rows.front()[2]) > std::stod(csv.rows.front()[1]));
}

TEST_CASE("crossing and mc-validate runs", "[cli]") {
    RunConfig cfg;
    cfg.kind = "crossing";
    cfg.delta_min = 0.2;
    cfg.delta_max = 0.3;
    cfg.delta_points = 2;
    cfg.out = (work_dir() / "crossing.csv").string();
    const auto art = run(cfg);
    const Csv csv = parse_csv(slurp(art.csv_path));
    REQUIRE(csv.rows.size() == 2);
    CHECK_THAT(std::stod(csv.rows[0][1]), WithinAbs(0.0588, 5e-4));
    CHECK_THAT(std::stod(csv.rows[0][2]), WithinAbs(std::stod(csv.rows[0][1]), 5e-4));

    RunConfig mcc;
    mcc.kind = "mc-validate";
    mcc.tunneling = "dichotomous";
    mcc.noise_amplitude = 0.3;
    mcc.noise_rate = 0.3;
    mcc.n_paths = 60;
    mcc.mc_t_end = 15.0;
    mcc.mc_grid_points = 4;
    mcc.seed = 5;
    mcc.out = (work_dir() / "mc.csv").string();
    const auto art2 = run(mcc);
    const std::string bytes = slurp(art2.csv_path);
    const Csv mcsv = parse_csv(bytes);
    REQUIRE(mcsv.columns.size() == 7);
    CHECK(mcsv.rows.size() == 4);

    // same config and seed: identical bytes; new seed: different ensemble
    run(mcc);
    CHECK(slurp(art2.csv_path) == bytes);
    mcc.seed = 6;
    run(mcc);
    CHECK(slurp(art2.csv_path) != bytes);
}

TEST_CASE("residence run", "[cli]") {
    RunConfig cfg;
    cfg.kind = "residence";
    cfg.tunneling = "periodic";
    cfg.drive_amplitude = 0.3;
    cfg.drive_frequency = 0.1;
    cfg.rate_mode = "stationary";
    cfg.entrance_points = 32;
    cfg.n_phases = 8;
    cfg.grid_points = 600;
    cfg.out = (work_dir() / "residence.csv").string();
    const auto art = run(cfg);

    const Csv csv = parse_csv(slurp(art.csv_path));
    REQUIRE(csv.columns.size() == 4);
    for (std::size_t col = 1; col < csv.columns.size(); ++col)
        CHECK_THAT(trapezoid_mass(csv, 0, col), WithinAbs(1.0, 1e-3));
    for (const auto& row : csv.rows)
        for (const auto& cell : row) CHECK(std::stod(cell) >= -1e-12);
}

TEST_CASE("config validation failures", "[cli]") {
    RunConfig cfg;
    cfg.kind = "nonsense";
    CHECK_THROWS_AS(run(cfg), config_error);

    cfg = RunConfig{};
    cfg.kind = "mfpt-scan";
    cfg.rate_mode = "improved";
    CHECK_THROWS_AS(run(cfg), config_error);

    cfg = RunConfig{};
    cfg.alpha = -1.0;
    CHECK_THROWS_AS(run(cfg), config_error);

    cfg = RunConfig{};
    cfg.tunneling = "periodic";
    cfg.drive_amplitude = 0.2;
    cfg.bias = "periodic";
    cfg.bias_amplitude = 0.1;
    CHECK_THROWS_AS(run(cfg), config_error);

    cfg = RunConfig{};
    cfg.kind = "mfpt-scan";
    cfg.sweep = "noise-rate";
    cfg.tunneling = "dichotomous";
    cfg.noise_amplitude = 0.2;
    cfg.curve_parameter = "noise_amplitude";
    cfg.curve_values = {};
    CHECK_THROWS_AS(run(cfg), config_error);
}
