// qra_main.cpp — command-line front end: one run per invocation

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include "CLI11.hpp"

#include "qra/run_config.hpp"
#include "qra/runner.hpp"
#include "qra/version.hpp"

namespace {

constexpr int exit_ok = 0;
constexpr int exit_config = 2;
constexpr int exit_numerical = 3;
constexpr int exit_incomplete = 4;

std::string read_file(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw qra::config_error("cannot read config file: " + path);
    std::stringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

struct CommonOpts {
    std::string config_path;
    std::string preset;
    std::string out;
    long threads = -1;
    long long seed = -1;
};

void add_common(CLI::App* cmd, CommonOpts& o) {
    cmd->add_option("--config", o.config_path, "flat key = value run configuration file");
    cmd->add_option("--preset", o.preset, "start from a bundled figure-data preset");
    cmd->add_option("--out", o.out, "output CSV path (sidecar JSON goes next to it)");
    cmd->add_option("--threads", o.threads, "worker cap; 0 = all hardware threads");
    cmd->add_option("--seed", o.seed, "random seed (mc-validate runs)");
}

int execute(const std::string& kind, const CommonOpts& o) {
    qra::RunConfig cfg;
    if (!o.preset.empty()) {
        cfg = qra::preset_config(o.preset);
        if (cfg.kind != kind)
            throw qra::config_error("preset '" + o.preset + "' is a " + cfg.kind
                                    + " run; invoke it as: qra " + cfg.kind + " --preset "
                                    + o.preset);
    }
    cfg.kind = kind;
    if (!o.config_path.empty()) {
        cfg = qra::parse_config(read_file(o.config_path), cfg);
        if (cfg.kind != kind)
            throw qra::config_error("config kind '" + cfg.kind
                                    + "' does not match the subcommand '" + kind + "'");
    }
    if (!o.out.empty()) cfg.out = o.out;
    if (o.threads >= 0) cfg.threads = o.threads;
    if (o.seed >= 0) cfg.seed = static_cast<unsigned long long>(o.seed);

    const auto art = qra::run(cfg);
    for (const auto& w : qra::detail::resolve(cfg).warnings)
        std::cerr << "warning: " << w << "\n";
    std::cout << art.csv_path << "\n" << art.sidecar_path << "\n";
    return exit_ok;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"quantum resonant activation toolkit"};
    app.set_version_flag("--version", qra::version);
    app.require_subcommand(1);

    const char* kinds[] = {"rate-table", "fpt-pdf", "mfpt-scan", "crossing", "residence",
                           "mc-validate"};
    const char* kind_help[] = {
        "tabulate transition rates over time",
        "first-passage-time densities for one configuration",
        "mean first-passage time sweep over a modulation rate or frequency",
        "resonant-activation crossing rate vs noise amplitude",
        "residence-time density of the driven problem",
        "Monte Carlo validation of the exact noise averaging"};

    CommonOpts opts[6];
    CLI::App* cmds[6];
    for (int i = 0; i < 6; ++i) {
        cmds[i] = app.add_subcommand(kinds[i], kind_help[i]);
        add_common(cmds[i], opts[i]);
    }

    std::string emit_name;
    CLI::App* presets = app.add_subcommand("presets", "list bundled presets");
    presets->add_option("--emit", emit_name, "print the named preset as a config document");

    CLI11_PARSE(app, argc, argv);

    try {
        if (presets->parsed()) {
            if (!emit_name.empty()) {
                std::cout << qra::emit_config(qra::preset_config(emit_name));
            } else {
                for (const auto& p : qra::list_presets())
                    std::printf("%-7s %-11s %s\n", p.name.c_str(), p.kind.c_str(),
                                p.summary.c_str());
            }
            return exit_ok;
        }
        for (int i = 0; i < 6; ++i)
            if (cmds[i]->parsed()) return execute(kinds[i], opts[i]);
        return exit_config;
    } catch (const qra::config_error& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return exit_config;
    } catch (const qra::incomplete_absorption& e) {
        std::cerr << "incomplete absorption: " << e.what()
                  << " (residual mass " << e.residual_mass() << ")\n";
        return exit_incomplete;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_numerical;
    }
}
