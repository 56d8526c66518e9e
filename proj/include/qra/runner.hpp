// runner.hpp — execute a run configuration and emit figure-ready CSV plus a
// JSON sidecar with the resolved config and diagnostics

#pragma once

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "qra/analysis.hpp"
#include "qra/dynamics.hpp"
#include "qra/mc_oracle.hpp"
#include "qra/run_config.hpp"
#include "qra/version.hpp"

namespace qra {

struct RunArtifacts {
    std::string csv_path;
    std::string sidecar_path;
};

namespace detail {

// CSV with '#'-prefixed metadata, a header row naming columns with units,
// and %.12g numeric formatting. Values must be finite; failed cells are
// emitted empty.
class CsvWriter {
public:
    explicit CsvWriter(const std::string& path) : f_(path) {
        if (!f_) throw numerical_error("cannot open output file: " + path);
    }
    void comment(const std::string& line) { f_ << "# " << line << "\n"; }
    void header(const std::vector<std::string>& names) {
        for (std::size_t i = 0; i < names.size(); ++i) f_ << (i ? "," : "") << names[i];
        f_ << "\n";
    }
    void row(const std::vector<std::optional<double>>& cells) {
        for (std::size_t i = 0; i < cells.size(); ++i) {
            if (i) f_ << ",";
            if (cells[i]) {
                if (!std::isfinite(*cells[i]))
                    throw numerical_error("CSV cell is not finite");
                char buf[40];
                std::snprintf(buf, sizeof buf, "%.12g", *cells[i]);
                f_ << buf;
            }
        }
        f_ << "\n";
    }

private:
    std::ofstream f_;
};

inline std::string sidecar_path_for(const std::string& csv_path) {
    std::filesystem::path p(csv_path);
    if (p.extension() == ".csv") p.replace_extension(".json");
    else p += ".json";
    return p.string();
}

inline std::string value_tag(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%g", v);
    return buf;
}

struct Resolved {
    BathParams bath;
    TunnelingModulation tunneling;
    BiasModulation bias;
    QuadratureConfig quad;
    SolveOptions solve;
    std::vector<std::string> warnings;
};

inline Resolved resolve(const RunConfig& c) {
    Resolved r;
    try {
        r.bath = BathParams{c.alpha, c.omega_c, c.temperature};
        r.bath.validate();

        if (c.tunneling == "static") {
            r.tunneling = TunnelingModulation::make_static();
        } else if (c.tunneling == "periodic") {
            r.tunneling = TunnelingModulation::periodic(c.drive_amplitude, c.drive_frequency,
                                                        c.phase);
        } else if (c.tunneling == "dichotomous") {
            r.tunneling = TunnelingModulation::dichotomous(c.noise_amplitude, c.noise_rate);
        } else {
            throw config_error("config: tunneling must be static | periodic | dichotomous");
        }

        if (c.bias == "zero") {
            r.bias = BiasModulation::zero();
        } else if (c.bias == "periodic") {
            r.bias = BiasModulation::periodic(c.bias_amplitude, c.bias_frequency, c.phase);
        } else {
            throw config_error("config: bias must be zero | periodic");
        }

        if (r.tunneling.kind == TunnelingModulation::Kind::Periodic
            && r.bias.kind == BiasModulation::Kind::Periodic)
            throw config_error("config: simultaneous periodic tunneling and periodic bias "
                               "modulation is not supported");

        r.quad = QuadratureConfig{c.abs_tol, c.rel_tol, c.tail_cut};
        r.quad.validate();
        r.solve = SolveOptions{c.survival_floor, c.t_cap, c.ode_rel_tol, c.ode_abs_tol};
        r.solve.validate();

        if (c.rate_mode != "stationary" && c.rate_mode != "improved" && c.rate_mode != "both")
            throw config_error("config: rate_mode must be stationary | improved | both");
        if (c.kind != "fpt-pdf" && c.rate_mode == "improved")
            throw config_error("config: improved rate mode applies to fpt-pdf runs only");
        if (c.cache_samples < 16) throw config_error("config: cache_samples must be >= 16");
        if (c.grid_points < 2) throw config_error("config: grid_points must be >= 2");
        if (c.threads < 0) throw config_error("config: threads must be >= 0");
    } catch (const config_error&) {
        throw;
    } catch (const std::exception& e) {
        throw config_error(std::string("config: ") + e.what());
    }
    r.warnings = r.bath.regime_warnings();
    return r;
}

inline DynamicsConfig dynamics_config(const RunConfig& c, const Resolved& r, RateMode mode) {
    DynamicsConfig dc;
    dc.tunneling = r.tunneling;
    dc.bias = r.bias;
    dc.bath = r.bath;
    dc.quadrature = r.quad;
    dc.mode = mode;
    dc.solve = r.solve;
    dc.cache_samples = static_cast<std::size_t>(c.cache_samples);
    return dc;
}

inline const char* curve_short_tag(const std::string& parameter) {
    if (parameter == "noise_rate") return "nu";
    if (parameter == "noise_amplitude") return "Delta";
    if (parameter == "drive_amplitude") return "Ad";
    if (parameter == "bias_amplitude") return "Aeps";
    if (parameter == "bias_frequency") return "Weps";
    if (parameter == "alpha") return "alpha";
    if (parameter == "phase") return "phi";
    throw config_error("config: unknown curve_parameter '" + parameter + "'");
}

inline void apply_curve_value(RunConfig& c, const std::string& parameter, double v) {
    if (parameter == "noise_rate") c.noise_rate = v;
    else if (parameter == "noise_amplitude") c.noise_amplitude = v;
    else if (parameter == "drive_amplitude") c.drive_amplitude = v;
    else if (parameter == "bias_amplitude") c.bias_amplitude = v;
    else if (parameter == "bias_frequency") c.bias_frequency = v;
    else if (parameter == "alpha") c.alpha = v;
    else if (parameter == "phase") c.phase = v;
    else throw config_error("config: unknown curve_parameter '" + parameter + "'");
}

// Curves = one run per value of the curve parameter; "none" is one unnamed curve.
struct Curve {
    std::string tag;  // column suffix, e.g. "_nu0.02"
    RunConfig config;
};

inline std::vector<Curve> expand_curves(const RunConfig& c) {
    std::vector<Curve> out;
    if (c.curve_parameter == "none" || c.curve_parameter.empty()) {
        out.push_back({"", c});
        return out;
    }
    if (c.curve_values.empty())
        throw config_error("config: curve_parameter set but curve_values is empty");
    for (double v : c.curve_values) {
        RunConfig cc = c;
        apply_curve_value(cc, c.curve_parameter, v);
        out.push_back({std::string("_") + curve_short_tag(c.curve_parameter) + value_tag(v), cc});
    }
    return out;
}

inline void write_config_comments(CsvWriter& csv, const RunConfig& c) {
    csv.comment(std::string("qra ") + version);
    std::stringstream ss(emit_config(c));
    std::string line;
    while (std::getline(ss, line)) csv.comment(line);
}

// ------------------------------ run kinds -----------------------------------

inline void run_rate_table(const RunConfig& c, const Resolved& r, CsvWriter& csv,
                           nlohmann::ordered_json& diag) {
    const double tau_max = decay_cutoff(0.0, r.bath, r.quad.tail_cut);
    double span = 1.5 * tau_max;
    if (r.tunneling.kind == TunnelingModulation::Kind::Periodic)
        span = std::max(span, 2.0 * r.tunneling.period());
    if (r.bias.kind == BiasModulation::Kind::Periodic)
        span = std::max(span, 2.0 * r.bias.period());

    const bool noise = r.tunneling.kind == TunnelingModulation::Kind::Dichotomous;
    std::vector<std::string> names{"time[1/D0]"};
    if (noise) {
        names.insert(names.end(), {"W0_stationary[D0]", "W1_stationary[D0]",
                                   "W0_improved[D0]", "W1_improved[D0]"});
    } else {
        names.insert(names.end(), {"W_forward_stationary[D0]", "W_forward_improved[D0]",
                                   "W_backward_stationary[D0]"});
    }
    csv.header(names);

    const long n = c.grid_points;
    for (long i = 0; i < n; ++i) {
        const double t = span * static_cast<double>(i) / static_cast<double>(n - 1);
        std::vector<std::optional<double>> row{t};
        if (noise) {
            row.push_back(noise_component_rate(t, 0, RateMode::Stationary, r.tunneling, r.bias,
                                               r.bath, r.quad));
            row.push_back(noise_component_rate(t, 1, RateMode::Stationary, r.tunneling, r.bias,
                                               r.bath, r.quad));
            row.push_back(noise_component_rate(t, 0, RateMode::Improved, r.tunneling, r.bias,
                                               r.bath, r.quad));
            row.push_back(noise_component_rate(t, 1, RateMode::Improved, r.tunneling, r.bias,
                                               r.bath, r.quad));
        } else {
            row.push_back(transition_rate(t, RateDirection::Forward, RateMode::Stationary,
                                          r.tunneling, r.bias, r.bath, r.quad));
            row.push_back(transition_rate(t, RateDirection::Forward, RateMode::Improved,
                                          r.tunneling, r.bias, r.bath, r.quad));
            row.push_back(transition_rate(t, RateDirection::Backward, RateMode::Stationary,
                                          r.tunneling, r.bias, r.bath, r.quad));
        }
        csv.row(row);
    }
    diag["memory_time"] = tau_max;
    diag["a0"] = a_nu(0.0, r.bath, r.quad);
}

inline void run_fpt_pdf(const RunConfig& c, const Resolved& r, CsvWriter& csv,
                        nlohmann::ordered_json& diag) {
    std::vector<RateMode> modes;
    if (c.rate_mode == "stationary") modes = {RateMode::Stationary};
    else if (c.rate_mode == "improved") modes = {RateMode::Improved};
    else modes = {RateMode::Stationary, RateMode::Improved};

    const auto curves = expand_curves(c);
    const bool curves_are_phases = c.curve_parameter == "phase";

    struct Column {
        std::string name;
        std::function<double(double)> eval;
        double t_end;
        double defect;
        std::vector<double> moments;
    };
    std::vector<Column> cols;

    for (const auto& mode : modes) {
        const char* mode_tag = (mode == RateMode::Stationary) ? "stationary" : "improved";
        // phase curves share one solver (and its rate cache); other curve
        // parameters change the rates and need their own solver
        std::optional<PhaseSolver> shared;
        if (curves_are_phases) shared.emplace(dynamics_config(c, r, mode));
        for (const auto& curve : curves) {
            const Resolved rc = curves_are_phases ? r : resolve(curve.config);
            PhaseSolver local = curves_are_phases
                                    ? *shared
                                    : PhaseSolver(dynamics_config(curve.config, rc, mode));
            const double phi = curve.config.phase;
            SurvivalTrace tr = local.solve(phi);
            const FptPdf pdf = fpt_pdf(tr, 2, 2);
            Column col;
            col.name = std::string("g_") + mode_tag + curve.tag + "[D0]";
            col.eval = tr.density;
            col.t_end = tr.t_end;
            col.defect = tr.residual;
            col.moments = pdf.moments;
            cols.push_back(std::move(col));
        }
    }

    double t_max = 0.0;
    for (const auto& col : cols) t_max = std::max(t_max, col.t_end);
    const auto grid = detail::pdf_grid(0.0, t_max, static_cast<std::size_t>(c.grid_points));

    std::vector<std::string> names{"time[1/D0]"};
    for (const auto& col : cols) names.push_back(col.name);
    csv.header(names);
    for (double t : grid) {
        std::vector<std::optional<double>> row{t};
        for (const auto& col : cols) row.push_back(col.eval(t));
        csv.row(row);
    }

    auto jdefects = nlohmann::ordered_json::object();
    auto jmoments = nlohmann::ordered_json::object();
    for (const auto& col : cols) {
        jdefects[col.name] = col.defect;
        jmoments[col.name] = col.moments;
    }
    diag["normalization_defect"] = jdefects;
    diag["passage_time_moments"] = jmoments;
}

inline void run_mfpt_scan(const RunConfig& c, const Resolved& r, CsvWriter& csv,
                          nlohmann::ordered_json& diag) {
    SweepKind kind;
    if (c.sweep == "noise-rate") kind = SweepKind::NoiseRate;
    else if (c.sweep == "drive-frequency") kind = SweepKind::DriveFrequencyTunneling;
    else if (c.sweep == "bias-frequency") kind = SweepKind::DriveFrequencyBias;
    else if (c.sweep == "combined") kind = SweepKind::Combined;
    else throw config_error("config: sweep must be noise-rate | drive-frequency | "
                            "bias-frequency | combined");
    if (c.sweep_points < 2) throw config_error("config: sweep_points must be >= 2");
    if (!(c.sweep_min > 0.0 && c.sweep_max > c.sweep_min))
        throw config_error("config: require 0 < sweep_min < sweep_max");

    const auto grid =
        log_grid(c.sweep_min, c.sweep_max, static_cast<std::size_t>(c.sweep_points));
    const auto curves = expand_curves(c);

    std::vector<ScanResult> results;
    long failures = 0;
    for (const auto& curve : curves) {
        const Resolved rc = resolve(curve.config);
        ScanConfig sc;
        sc.dynamics = dynamics_config(curve.config, rc, RateMode::Stationary);
        sc.kind = kind;
        sc.grid = grid;
        sc.n_phases = static_cast<std::size_t>(c.n_phases);
        sc.threads = static_cast<int>(c.threads);
        results.push_back(scan_mfpt(sc));
        for (const auto& pt : results.back().points)
            if (pt.failed) ++failures;
    }

    // noise-only analytic comparison column for combined sweeps
    std::vector<double> noise_only;
    if (kind == SweepKind::Combined) {
        noise_only.reserve(grid.size());
        for (double nu : grid)
            noise_only.push_back(mfpt_analytic(nu, r.tunneling.amplitude, r.bath, r.quad));
    }

    std::vector<std::string> names{results.front().variable + "[D0]"};
    for (std::size_t k = 0; k < curves.size(); ++k) names.push_back("t1" + curves[k].tag + "[1/D0]");
    if (!noise_only.empty()) names.push_back("t1_noise_only[1/D0]");
    for (std::size_t k = 0; k < curves.size(); ++k) {
        names.push_back("static" + curves[k].tag + "[1/D0]");
        names.push_back("adiabatic" + curves[k].tag + "[1/D0]");
    }
    csv.header(names);

    for (std::size_t i = 0; i < grid.size(); ++i) {
        std::vector<std::optional<double>> row{grid[i]};
        for (const auto& res : results) {
            if (res.points[i].failed) row.push_back(std::nullopt);
            else row.push_back(res.mfpt[i]);
        }
        if (!noise_only.empty()) row.push_back(noise_only[i]);
        for (const auto& res : results) {
            row.push_back(res.limits.static_value);
            row.push_back(res.limits.adiabatic_value);
        }
        csv.row(row);
    }

    diag["failed_points"] = failures;
    auto jnodes = nlohmann::ordered_json::array();
    for (const auto& res : results) {
        long nodes = 0;
        double max_defect = 0.0;
        for (const auto& pt : res.points) {
            nodes += pt.solver_nodes;
            max_defect = std::max(max_defect, pt.defect);
        }
        jnodes.push_back({{"solver_nodes", nodes}, {"max_defect", max_defect}});
    }
    diag["curves"] = jnodes;
}

inline void run_crossing(const RunConfig& c, const Resolved& r, CsvWriter& csv,
                         nlohmann::ordered_json& diag) {
    if (c.delta_points < 1) throw config_error("config: delta_points must be >= 1");
    if (!(c.delta_min > 0.0 && c.delta_max >= c.delta_min && c.delta_max < 1.0))
        throw config_error("config: require 0 < delta_min <= delta_max < 1");

    csv.header({"Delta[D0]", "nu_star_approx[D0]", "nu_star_exact[D0]"});
    double max_gap = 0.0;
    for (long i = 0; i < c.delta_points; ++i) {
        const double d = (c.delta_points == 1)
                             ? c.delta_min
                             : c.delta_min
                                   + (c.delta_max - c.delta_min) * static_cast<double>(i)
                                         / static_cast<double>(c.delta_points - 1);
        const double approx = crossing_rate_approx(d, r.bath, r.quad);
        const double exact = crossing_rate_exact(d, r.bath, r.quad);
        max_gap = std::max(max_gap, std::abs(approx - exact) / exact);
        csv.row({d, approx, exact});
    }
    diag["max_relative_gap"] = max_gap;
    diag["a0"] = a_nu(0.0, r.bath, r.quad);
    diag["a_reference"] = a_nu(crossing_reference_rate, r.bath, r.quad);
}

inline void run_residence(const RunConfig& c, const Resolved& r, CsvWriter& csv,
                          nlohmann::ordered_json& diag) {
    DynamicsConfig dc = dynamics_config(c, r, RateMode::Stationary);
    if (c.entrance_points < 4) throw config_error("config: entrance_points must be >= 4");

    auto res = residence_time_pdf(dc, static_cast<std::size_t>(c.entrance_points),
                                  static_cast<std::size_t>(c.grid_points),
                                  static_cast<int>(c.threads));

    PhaseSolver solver(dc);
    SurvivalTrace fixed = solver.solve(c.phase);
    auto averaged = phase_averaged_pdf(dc, static_cast<std::size_t>(c.n_phases), 2,
                                       static_cast<int>(c.threads));

    const double t_max = std::max({res.pdf.t_end, fixed.t_end, averaged.average.t_end});
    const auto grid = detail::pdf_grid(0.0, t_max, static_cast<std::size_t>(c.grid_points));

    csv.header({"time[1/D0]", "r[D0]", "g_phase0[D0]", "g_phase_avg[D0]"});
    for (double t : grid)
        csv.row({t, res.pdf.eval(t), fixed.density(t), averaged.average.eval(t)});

    diag["residence_defect"] = res.pdf.normalization_defect;
    diag["residence_moments"] = res.pdf.moments;
    diag["fixed_phase_defect"] = fixed.residual;
    diag["phase_avg_defect"] = averaged.average.normalization_defect;
    diag["entrance_weight_periods"] = res.entrance_weight.periods_to_converge;
    diag["extrapolated"] = res.extrapolated;
    diag["mfpt_phase_avg"] = averaged.mfpt;
}

inline void run_mc_validate(const RunConfig& c, const Resolved& r, CsvWriter& csv,
                            nlohmann::ordered_json& diag) {
    if (r.tunneling.kind != TunnelingModulation::Kind::Dichotomous)
        throw config_error("config: mc-validate requires dichotomous tunneling modulation");
    if (c.n_paths < 2) throw config_error("config: n_paths must be >= 2");
    if (c.mc_grid_points < 2) throw config_error("config: mc_grid_points must be >= 2");
    if (!(c.mc_t_end > 0.0)) throw config_error("config: mc_t_end must be > 0");

    McConfig mc;
    mc.tunneling = r.tunneling;
    mc.bias = r.bias;
    mc.bath = r.bath;
    mc.t_end = c.mc_t_end;
    mc.grid_points = static_cast<std::size_t>(c.mc_grid_points);
    mc.threads = static_cast<int>(c.threads);
    const McResult res = mc_survival(mc, static_cast<std::size_t>(c.n_paths), c.seed);

    // exact counterpart from the averaged equations
    SurvivalTrace exact;
    if (r.bias.kind == BiasModulation::Kind::Zero) {
        exact = analytic_trace(analytic_survival_dichotomous(r.tunneling.switch_rate,
                                                             r.tunneling.amplitude, r.bath,
                                                             r.quad),
                               r.solve);
    } else {
        DynamicsConfig dc = dynamics_config(c, r, RateMode::Stationary);
        PhaseSolver solver(dc);
        exact = solver.solve(c.phase);
    }

    csv.header({"time[1/D0]", "p_mc[1]", "p_stderr[1]", "p_exact[1]", "y_mc[1]", "y_stderr[1]",
                "y_exact[1]"});
    double max_zp = 0.0, max_zy = 0.0;
    for (std::size_t j = 0; j < res.t.size(); ++j) {
        const double pe = exact.survival(res.t[j]);
        const double ye = exact.noise_correlation ? exact.noise_correlation(res.t[j]) : 0.0;
        if (res.p_stderr[j] > 0.0)
            max_zp = std::max(max_zp, std::abs(res.p_mean[j] - pe) / res.p_stderr[j]);
        if (res.y_stderr[j] > 0.0)
            max_zy = std::max(max_zy, std::abs(res.y_mean[j] - ye) / res.y_stderr[j]);
        csv.row({res.t[j], res.p_mean[j], res.p_stderr[j], pe, res.y_mean[j], res.y_stderr[j],
                 ye});
    }
    diag["n_paths"] = res.n_paths;
    diag["max_z_survival"] = max_zp;
    diag["max_z_correlation"] = max_zy;
}

} // namespace detail

// Execute one run: validate, compute, write the CSV and its JSON sidecar.
// Identical configurations (and seed) produce byte-identical CSV files.
inline RunArtifacts run(const RunConfig& cfg) {
    const detail::Resolved r = detail::resolve(cfg);

    RunArtifacts art;
    art.csv_path = cfg.out;
    art.sidecar_path = detail::sidecar_path_for(cfg.out);

    nlohmann::ordered_json diag = nlohmann::ordered_json::object();
    {
        // achieved accuracy of the reference coefficient quadrature, recorded
        // for every run as a proxy for the rate-integral error level
        const double tau_max = decay_cutoff(0.0, r.bath, r.quad.tail_cut);
        const auto probe = integrate_adaptive(
            [&](double tau) {
                const auto q = correlation_exponent(tau, r.bath);
                return 0.5 * std::exp(-q.q_real) * std::cos(q.q_imag);
            },
            0.0, tau_max, r.quad.abs_tol, r.quad.rel_tol,
            qra::detail::rate_breakpoints(tau_max, r.bath, 0.0, 0.0));
        diag["quadrature"] = {{"memory_time", tau_max},
                              {"a0", probe.value},
                              {"a0_error_estimate", probe.error},
                              {"panels", probe.panels}};

        detail::CsvWriter csv(art.csv_path);
        detail::write_config_comments(csv, cfg);
        if (cfg.kind == "rate-table") detail::run_rate_table(cfg, r, csv, diag);
        else if (cfg.kind == "fpt-pdf") detail::run_fpt_pdf(cfg, r, csv, diag);
        else if (cfg.kind == "mfpt-scan") detail::run_mfpt_scan(cfg, r, csv, diag);
        else if (cfg.kind == "crossing") detail::run_crossing(cfg, r, csv, diag);
        else if (cfg.kind == "residence") detail::run_residence(cfg, r, csv, diag);
        else if (cfg.kind == "mc-validate") detail::run_mc_validate(cfg, r, csv, diag);
        else
            throw config_error("config: kind must be rate-table | fpt-pdf | mfpt-scan | "
                               "crossing | residence | mc-validate");
    }

    nlohmann::ordered_json side;
    side["tool"] = "qra";
    side["version"] = version;
    auto jcfg = nlohmann::ordered_json::object();
    for (const auto& f : detail::schema()) jcfg[f.key] = f.get(cfg);
    side["config"] = jcfg;
    side["config_text"] = emit_config(cfg);
    side["warnings"] = r.warnings;
    side["tolerances"] = {{"abs_tol", cfg.abs_tol},
                          {"rel_tol", cfg.rel_tol},
                          {"tail_cut", cfg.tail_cut},
                          {"ode_rel_tol", cfg.ode_rel_tol},
                          {"ode_abs_tol", cfg.ode_abs_tol},
                          {"survival_floor", cfg.survival_floor}};
    side["diagnostics"] = diag;
    side["csv"] = art.csv_path;

    std::ofstream jf(art.sidecar_path);
    if (!jf) throw numerical_error("cannot open sidecar file: " + art.sidecar_path);
    jf << side.dump(2) << "\n";
    return art;
}

} // namespace qra
