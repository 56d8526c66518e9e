// run_config.hpp — flat key=value run configurations, strict parsing, presets

#pragma once

#include <cctype>
#include <cstdio>
#include <cstdlib>
#include <map>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "qra/errors.hpp"

namespace qra {

// One run description. Every field has a default matching the reference
// parameter set (alpha = 0.7, T = 0.2, omega_c = 10, bare tunneling = 1).
struct RunConfig {
    std::string kind{"fpt-pdf"};  // rate-table | fpt-pdf | mfpt-scan | crossing | residence | mc-validate

    // bath
    double alpha{0.7};
    double temperature{0.2};
    double omega_c{10.0};

    // tunneling-element modulation
    std::string tunneling{"static"};  // static | periodic | dichotomous
    double drive_amplitude{0.0};
    double drive_frequency{0.1};
    double noise_amplitude{0.0};
    double noise_rate{0.3};
    double phase{0.0};

    // bias modulation
    std::string bias{"zero"};  // zero | periodic
    double bias_amplitude{0.0};
    double bias_frequency{0.1};

    // rate evaluation
    std::string rate_mode{"both"};  // stationary | improved | both (fpt-pdf only)
    double abs_tol{1e-10};
    double rel_tol{1e-8};
    double tail_cut{1e-12};
    long cache_samples{512};

    // survival solver
    double ode_rel_tol{1e-8};
    double ode_abs_tol{1e-12};
    double survival_floor{1e-10};
    double t_cap{1e6};

    // sweeps
    std::string sweep{"noise-rate"};  // noise-rate | drive-frequency | bias-frequency | combined
    double sweep_min{1e-4};
    double sweep_max{1e3};
    long sweep_points{40};
    long n_phases{40};
    std::string curve_parameter{"none"};  // none | noise_amplitude | drive_amplitude |
                                          // bias_amplitude | alpha | noise_rate | bias_frequency | phase
    std::vector<double> curve_values{};

    // density output
    long grid_points{1200};

    // residence
    long entrance_points{128};

    // crossing
    double delta_min{0.05};
    double delta_max{0.45};
    long delta_points{9};

    // monte carlo validation
    long n_paths{2000};
    unsigned long long seed{1};
    double mc_t_end{100.0};
    long mc_grid_points{21};

    // io / execution
    std::string out{"out.csv"};
    long threads{1};

    bool operator==(const RunConfig&) const = default;
};

namespace detail {

inline std::string trim(const std::string& s) {
    std::size_t a = 0, b = s.size();
    while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
    while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
    return s.substr(a, b - a);
}

inline std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline double parse_double(const std::string& key, const std::string& v) {
    char* end = nullptr;
    const double x = std::strtod(v.c_str(), &end);
    if (end == v.c_str() || *end != '\0')
        throw config_error("config: field '" + key + "': not a number: '" + v + "'");
    return x;
}

inline long parse_long(const std::string& key, const std::string& v) {
    char* end = nullptr;
    const long x = std::strtol(v.c_str(), &end, 10);
    if (end == v.c_str() || *end != '\0')
        throw config_error("config: field '" + key + "': not an integer: '" + v + "'");
    return x;
}

inline unsigned long long parse_ull(const std::string& key, const std::string& v) {
    char* end = nullptr;
    const unsigned long long x = std::strtoull(v.c_str(), &end, 10);
    if (end == v.c_str() || *end != '\0')
        throw config_error("config: field '" + key + "': not an unsigned integer: '" + v + "'");
    return x;
}

inline std::vector<double> parse_double_list(const std::string& key, const std::string& v) {
    std::vector<double> out;
    if (trim(v).empty()) return out;
    std::stringstream ss(v);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(parse_double(key, trim(item)));
    return out;
}

inline std::string format_double_list(const std::vector<double>& v) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) s += ",";
        s += format_double(v[i]);
    }
    return s;
}

// Field table: one row per schema key, with typed accessors. The emit order
// is the table order.
struct FieldBinding {
    const char* key;
    std::string (*get)(const RunConfig&);
    void (*set)(RunConfig&, const std::string&);
};

inline const std::vector<FieldBinding>& schema() {
    static const std::vector<FieldBinding> fields = {
#define QRA_STR_FIELD(name)                                                       \
    {#name, [](const RunConfig& c) { return c.name; },                            \
     [](RunConfig& c, const std::string& v) { c.name = v; }}
#define QRA_DBL_FIELD(name)                                                       \
    {#name, [](const RunConfig& c) { return format_double(c.name); },             \
     [](RunConfig& c, const std::string& v) { c.name = parse_double(#name, v); }}
#define QRA_LONG_FIELD(name)                                                      \
    {#name, [](const RunConfig& c) { return std::to_string(c.name); },            \
     [](RunConfig& c, const std::string& v) { c.name = parse_long(#name, v); }}
        QRA_STR_FIELD(kind),
        QRA_DBL_FIELD(alpha),
        QRA_DBL_FIELD(temperature),
        QRA_DBL_FIELD(omega_c),
        QRA_STR_FIELD(tunneling),
        QRA_DBL_FIELD(drive_amplitude),
        QRA_DBL_FIELD(drive_frequency),
        QRA_DBL_FIELD(noise_amplitude),
        QRA_DBL_FIELD(noise_rate),
        QRA_DBL_FIELD(phase),
        QRA_STR_FIELD(bias),
        QRA_DBL_FIELD(bias_amplitude),
        QRA_DBL_FIELD(bias_frequency),
        QRA_STR_FIELD(rate_mode),
        QRA_DBL_FIELD(abs_tol),
        QRA_DBL_FIELD(rel_tol),
        QRA_DBL_FIELD(tail_cut),
        QRA_LONG_FIELD(cache_samples),
        QRA_DBL_FIELD(ode_rel_tol),
        QRA_DBL_FIELD(ode_abs_tol),
        QRA_DBL_FIELD(survival_floor),
        QRA_DBL_FIELD(t_cap),
        QRA_STR_FIELD(sweep),
        QRA_DBL_FIELD(sweep_min),
        QRA_DBL_FIELD(sweep_max),
        QRA_LONG_FIELD(sweep_points),
        QRA_LONG_FIELD(n_phases),
        QRA_STR_FIELD(curve_parameter),
        {"curve_values", [](const RunConfig& c) { return format_double_list(c.curve_values); },
         [](RunConfig& c, const std::string& v) {
             c.curve_values = parse_double_list("curve_values", v);
         }},
        QRA_LONG_FIELD(grid_points),
        QRA_LONG_FIELD(entrance_points),
        QRA_DBL_FIELD(delta_min),
        QRA_DBL_FIELD(delta_max),
        QRA_LONG_FIELD(delta_points),
        QRA_LONG_FIELD(n_paths),
        {"seed", [](const RunConfig& c) { return std::to_string(c.seed); },
         [](RunConfig& c, const std::string& v) { c.seed = parse_ull("seed", v); }},
        QRA_DBL_FIELD(mc_t_end),
        QRA_LONG_FIELD(mc_grid_points),
        QRA_STR_FIELD(out),
        QRA_LONG_FIELD(threads),
#undef QRA_STR_FIELD
#undef QRA_DBL_FIELD
#undef QRA_LONG_FIELD
    };
    return fields;
}

inline const FieldBinding* find_field(const std::string& key) {
    for (const auto& f : schema())
        if (key == f.key) return &f;
    return nullptr;
}

} // namespace detail

// Parse a flat key = value document on top of a base configuration. '#'
// starts a comment; keys outside the schema and duplicate keys are rejected
// with the offending line number.
inline RunConfig parse_config(const std::string& text, RunConfig cfg = RunConfig{}) {
    std::map<std::string, int> seen;
    std::stringstream ss(text);
    std::string line;
    int lineno = 0;
    while (std::getline(ss, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = detail::trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw config_error("config line " + std::to_string(lineno) + ": expected key = value");
        const std::string key = detail::trim(line.substr(0, eq));
        const std::string value = detail::trim(line.substr(eq + 1));
        const auto* field = detail::find_field(key);
        if (!field)
            throw config_error("config line " + std::to_string(lineno) + ": unknown key '" + key
                               + "'");
        if (seen.count(key))
            throw config_error("config line " + std::to_string(lineno) + ": duplicate key '" + key
                               + "' (first at line " + std::to_string(seen[key]) + ")");
        seen[key] = lineno;
        field->set(cfg, value);
    }
    return cfg;
}

// Emit the fully resolved configuration; parse_config(emit_config(c)) == c.
inline std::string emit_config(const RunConfig& cfg) {
    std::string out;
    for (const auto& f : detail::schema()) {
        out += f.key;
        out += " = ";
        out += f.get(cfg);
        out += "\n";
    }
    return out;
}

struct PresetInfo {
    std::string name;
    std::string kind;
    std::string summary;
};

namespace detail {

struct PresetDef {
    const char* name;
    const char* summary;
    std::vector<std::pair<const char*, const char*>> overrides;
};

inline const std::vector<PresetDef>& preset_table() {
    static const std::vector<PresetDef> presets = {
        {"fig2",
         "first-passage-time density, two-state noise on the tunneling element "
         "(amplitude 0.3) at switching rates 0.02 and 0.3, zero bias",
         {{"kind", "fpt-pdf"},
          {"tunneling", "dichotomous"},
          {"noise_amplitude", "0.3"},
          {"curve_parameter", "noise_rate"},
          {"curve_values", "0.02,0.3"},
          {"out", "fig2.csv"}}},
        {"fig3",
         "mean first-passage time vs noise switching rate for noise amplitudes "
         "0.1, 0.2, 0.3 with static and adiabatic reference lines",
         {{"kind", "mfpt-scan"},
          {"sweep", "noise-rate"},
          {"tunneling", "dichotomous"},
          {"curve_parameter", "noise_amplitude"},
          {"curve_values", "0.1,0.2,0.3"},
          {"sweep_min", "1e-4"},
          {"sweep_max", "1e3"},
          {"sweep_points", "57"},
          {"out", "fig3.csv"}}},
        {"fig4",
         "crossing switching rate vs noise amplitude: frozen-coefficient "
         "approximation against the exact root of the crossing equation",
         {{"kind", "crossing"},
          {"delta_min", "0.05"},
          {"delta_max", "0.45"},
          {"delta_points", "9"},
          {"out", "fig4.csv"}}},
        {"fig5",
         "mean first-passage time vs noise switching rate at amplitude 0.2 for "
         "coupling strengths 0.6, 0.7, 0.8",
         {{"kind", "mfpt-scan"},
          {"sweep", "noise-rate"},
          {"tunneling", "dichotomous"},
          {"noise_amplitude", "0.2"},
          {"curve_parameter", "alpha"},
          {"curve_values", "0.6,0.7,0.8"},
          {"sweep_min", "1e-4"},
          {"sweep_max", "1e3"},
          {"sweep_points", "45"},
          {"out", "fig5.csv"}}},
        {"fig6",
         "first-passage-time density for a periodically driven tunneling element "
         "(amplitude 0.3, frequency 0.1) at initial phases 0, pi/2, pi",
         {{"kind", "fpt-pdf"},
          {"tunneling", "periodic"},
          {"drive_amplitude", "0.3"},
          {"drive_frequency", "0.1"},
          {"curve_parameter", "phase"},
          {"curve_values", "0,1.5707963267948966,3.141592653589793"},
          {"out", "fig6.csv"}}},
        {"fig7",
         "phase-averaged mean first-passage time vs drive frequency of the "
         "tunneling element for amplitudes 0.1, 0.2, 0.3",
         {{"kind", "mfpt-scan"},
          {"sweep", "drive-frequency"},
          {"tunneling", "periodic"},
          {"curve_parameter", "drive_amplitude"},
          {"curve_values", "0.1,0.2,0.3"},
          {"sweep_min", "3e-3"},
          {"sweep_max", "10"},
          {"sweep_points", "17"},
          {"out", "fig7.csv"}}},
        {"fig8",
         "phase-averaged mean first-passage time vs tunneling drive frequency at "
         "amplitude 0.2 for coupling strengths 0.6, 0.7, 0.8",
         {{"kind", "mfpt-scan"},
          {"sweep", "drive-frequency"},
          {"tunneling", "periodic"},
          {"drive_amplitude", "0.2"},
          {"curve_parameter", "alpha"},
          {"curve_values", "0.6,0.7,0.8"},
          {"sweep_min", "3e-3"},
          {"sweep_max", "10"},
          {"sweep_points", "15"},
          {"out", "fig8.csv"}}},
        {"fig9",
         "residence-time density against the fixed-phase and phase-averaged "
         "first-passage-time densities for the driven tunneling element",
         {{"kind", "residence"},
          {"tunneling", "periodic"},
          {"drive_amplitude", "0.3"},
          {"drive_frequency", "0.1"},
          {"phase", "0"},
          {"out", "fig9.csv"}}},
        {"fig10",
         "first-passage-time density for a periodically driven bias "
         "(amplitude 0.3, frequency 0.1) at initial phases 0, pi/2, pi",
         {{"kind", "fpt-pdf"},
          {"bias", "periodic"},
          {"bias_amplitude", "0.3"},
          {"bias_frequency", "0.1"},
          {"curve_parameter", "phase"},
          {"curve_values", "0,1.5707963267948966,3.141592653589793"},
          {"out", "fig10.csv"}}},
        {"fig11",
         "phase-averaged mean first-passage time vs bias drive frequency for "
         "bias amplitudes 0.1, 0.2, 0.3",
         {{"kind", "mfpt-scan"},
          {"sweep", "bias-frequency"},
          {"bias", "periodic"},
          {"curve_parameter", "bias_amplitude"},
          {"curve_values", "0.1,0.2,0.3"},
          {"sweep_min", "3e-3"},
          {"sweep_max", "10"},
          {"sweep_points", "17"},
          {"out", "fig11.csv"}}},
        {"fig12",
         "first-passage-time density under combined two-state noise (amplitude "
         "0.3) and periodic bias driving (amplitude 0.3, frequency 0.1, phase 0)",
         {{"kind", "fpt-pdf"},
          {"tunneling", "dichotomous"},
          {"noise_amplitude", "0.3"},
          {"bias", "periodic"},
          {"bias_amplitude", "0.3"},
          {"bias_frequency", "0.1"},
          {"phase", "0"},
          {"curve_parameter", "noise_rate"},
          {"curve_values", "0.02,0.3"},
          {"out", "fig12.csv"}}},
        {"fig13",
         "phase-averaged mean first-passage time vs noise switching rate with a "
         "simultaneously driven bias (amplitude 0.3) at frequencies 0.25 and 10, "
         "with the noise-only analytic curve for comparison",
         {{"kind", "mfpt-scan"},
          {"sweep", "combined"},
          {"tunneling", "dichotomous"},
          {"noise_amplitude", "0.2"},
          {"bias", "periodic"},
          {"bias_amplitude", "0.3"},
          {"curve_parameter", "bias_frequency"},
          {"curve_values", "0.25,10"},
          {"sweep_min", "1e-4"},
          {"sweep_max", "1e3"},
          {"sweep_points", "13"},
          {"out", "fig13.csv"}}},
    };
    return presets;
}

} // namespace detail

// Catalog of the bundled figure-data presets.
inline std::vector<PresetInfo> list_presets() {
    std::vector<PresetInfo> out;
    for (const auto& p : detail::preset_table()) {
        std::string kind = "?";
        for (const auto& [k, v] : p.overrides)
            if (std::string(k) == "kind") kind = v;
        out.push_back({p.name, kind, p.summary});
    }
    return out;
}

// Resolve a preset into a full configuration (defaults plus overrides).
inline RunConfig preset_config(const std::string& name) {
    for (const auto& p : detail::preset_table()) {
        if (name != p.name) continue;
        RunConfig cfg;
        for (const auto& [k, v] : p.overrides) {
            const auto* field = detail::find_field(k);
            if (!field) throw config_error(std::string("preset field unknown: ") + k);
            field->set(cfg, v);
        }
        return cfg;
    }
    throw config_error("unknown preset '" + name + "' (see the preset catalog)");
}

} // namespace qra
