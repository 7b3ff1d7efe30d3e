#pragma once

#include <cctype>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "surfload/field_model.hpp"
#include "surfload/source.hpp"
#include "surfload/uncertainty.hpp"

namespace surfload {

struct config_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Everything one run of the pipeline needs: trap, drive, source, probe
/// beams, and the uncertainty budget for banded curves.
struct RunConfig {
    TrapGeometry geometry{840e-6, 840e-6};
    DriveConfig drive{580.0, 2.0 * M_PI * 7.1e6, 2.0 * M_PI * 100e3, IonSpecies::ba138()};
    SourceModel source{1500.0, 40.0, 1e-3};
    PIBeams beams{50e-6, 2.0 * M_PI * 18.9e6, 6.0 * 1e4};  // i2 in W/m^2
    UncertaintySpec uncertainty = UncertaintySpec::none();
    double grid_spacing = 0.0;  // 0 = auto (null height / 200)
};

inline SourceModel default_source(const IonSpecies& species) {
    if (species.name == "sr88") return {225.0, 70.0, 1e-3};
    return {1500.0, 40.0, 1e-3};
}

inline PIBeams default_beams(const IonSpecies& species) {
    const double gamma1 = species.name == "sr88" ? 2.0 * M_PI * 32e6 : 2.0 * M_PI * 18.9e6;
    return {50e-6, gamma1, 6.0 * 1e4};
}

inline IonSpecies species_by_name(const std::string& name) {
    if (name == "ba138") return IonSpecies::ba138();
    if (name == "sr88") return IonSpecies::sr88();
    throw config_error("unknown species '" + name + "' (expected ba138 or sr88)");
}

/// Named baseline configurations for the two trap scales.
inline RunConfig preset_config(const std::string& name) {
    RunConfig cfg;
    if (name == "pcb") {
        cfg.geometry = {840e-6, 840e-6};
        cfg.drive = {580.0, 2.0 * M_PI * 7.1e6, 2.0 * M_PI * 100e3, IonSpecies::ba138()};
        cfg.uncertainty = UncertaintySpec{};
        cfg.uncertainty.e_s = 100.0;
    } else if (name == "microfab") {
        cfg.geometry = {34e-6, 127e-6};
        cfg.drive = {100.0, 2.0 * M_PI * 40e6, 2.0 * M_PI * 500e3, IonSpecies::ba138()};
        cfg.uncertainty = UncertaintySpec{};
        cfg.uncertainty.e_s = 1000.0;
    } else {
        throw config_error("unknown preset '" + name + "' (expected pcb or microfab)");
    }
    cfg.source = default_source(cfg.drive.species);
    cfg.beams = default_beams(cfg.drive.species);
    return cfg;
}

namespace detail {

inline std::string trim(const std::string& s) {
    std::size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return s.substr(b, e - b);
}

inline double parse_number(const std::string& value, const std::string& key, int line) {
    std::size_t pos = 0;
    double v;
    try {
        v = std::stod(value, &pos);
    } catch (const std::exception&) {
        throw config_error("line " + std::to_string(line) + ": key '" + key +
                           "': not a number: '" + value + "'");
    }
    if (pos != value.size())
        throw config_error("line " + std::to_string(line) + ": key '" + key +
                           "': trailing characters in '" + value + "'");
    if (!std::isfinite(v))
        throw config_error("line " + std::to_string(line) + ": key '" + key +
                           "': non-finite value");
    return v;
}

} // namespace detail

/// Parse a flat key = value config file.  Unknown keys and malformed
/// lines raise config_error naming the line and field.  Recognized keys
/// (SI units throughout, angular frequencies in Hz as ordinary
/// frequency, converted internally):
///   preset, species, strip_width, gap_rf_width, v_rf, f_rf, f_ax,
///   temperature, v_com, plume_radius, beam_waist, gamma1, intensity,
///   stray_field, dvrf_rel, dpi_rel, dt_rel, dtarget_rel, grid_spacing
inline RunConfig parse_config(std::istream& in) {
    RunConfig cfg;
    bool have_preset = false;
    bool have_species = false;
    std::string species_name = "ba138";
    std::map<std::string, double> numbers;
    std::vector<std::pair<std::string, int>> number_order;

    std::string raw;
    int line = 0;
    while (std::getline(in, raw)) {
        ++line;
        std::string text = raw;
        const auto hash = text.find('#');
        if (hash != std::string::npos) text.erase(hash);
        text = detail::trim(text);
        if (text.empty()) continue;
        const auto eq = text.find('=');
        if (eq == std::string::npos)
            throw config_error("line " + std::to_string(line) + ": expected key = value");
        const std::string key = detail::trim(text.substr(0, eq));
        const std::string value = detail::trim(text.substr(eq + 1));
        if (key.empty() || value.empty())
            throw config_error("line " + std::to_string(line) + ": empty key or value");

        if (key == "preset") {
            cfg = preset_config(value);
            have_preset = true;
        } else if (key == "species") {
            species_name = value;
            have_species = true;
        } else {
            static const char* known[] = {
                "strip_width", "gap_rf_width", "v_rf",        "f_rf",
                "f_ax",        "temperature",  "v_com",       "plume_radius",
                "beam_waist",  "gamma1",       "intensity",   "stray_field",
                "dvrf_rel",    "dpi_rel",      "dt_rel",      "dtarget_rel",
                "grid_spacing"};
            bool ok = false;
            for (const char* k : known) ok = ok || key == k;
            if (!ok)
                throw config_error("line " + std::to_string(line) + ": unknown key '" +
                                   key + "'");
            numbers[key] = detail::parse_number(value, key, line);
            number_order.emplace_back(key, line);
        }
    }
    (void)have_preset;

    if (have_species) {
        cfg.drive.species = species_by_name(species_name);
        cfg.source = default_source(cfg.drive.species);
        cfg.beams = default_beams(cfg.drive.species);
    }

    const auto get = [&](const char* key, double& slot, double scale = 1.0) {
        const auto it = numbers.find(key);
        if (it != numbers.end()) slot = it->second * scale;
    };
    get("strip_width", cfg.geometry.a);
    get("gap_rf_width", cfg.geometry.b);
    get("v_rf", cfg.drive.v_rf);
    get("f_rf", cfg.drive.omega_rf, 2.0 * M_PI);
    get("f_ax", cfg.drive.omega_ax, 2.0 * M_PI);
    get("temperature", cfg.source.temperature);
    get("v_com", cfg.source.v_com);
    get("plume_radius", cfg.source.w_a);
    get("beam_waist", cfg.beams.w0);
    get("gamma1", cfg.beams.gamma1, 2.0 * M_PI);
    get("intensity", cfg.beams.i2);
    get("stray_field", cfg.uncertainty.e_s);
    get("dvrf_rel", cfg.uncertainty.dvrf_rel);
    get("dpi_rel", cfg.uncertainty.dpi_rel);
    get("dt_rel", cfg.uncertainty.dt_rel);
    get("dtarget_rel", cfg.uncertainty.dtarget_rel);
    get("grid_spacing", cfg.grid_spacing);

    for (const auto& [key, at] : number_order) {
        const double v = numbers[key];
        const bool rel = key.rfind("d", 0) == 0 && key.size() > 4 &&
                         key.substr(key.size() - 4) == "_rel";
        if (!rel && key != "stray_field" && !(v > 0.0))
            throw config_error("line " + std::to_string(at) + ": key '" + key +
                               "': must be positive");
        if ((rel || key == "stray_field") && v < 0.0)
            throw config_error("line " + std::to_string(at) + ": key '" + key +
                               "': must be non-negative");
    }
    return cfg;
}

inline RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw config_error("cannot open config file '" + path + "'");
    return parse_config(in);
}

/// Read a CSV of observed loading rates: depth_eV,rate,sigma per line,
/// optional header.
struct RateRow {
    double depth_ev, rate, sigma;
};

namespace detail {

inline std::vector<std::vector<double>> read_numeric_csv(std::istream& in,
                                                         std::size_t columns,
                                                         const std::string& what) {
    std::vector<std::vector<double>> rows;
    std::string raw;
    int line = 0;
    while (std::getline(in, raw)) {
        ++line;
        const std::string text = trim(raw);
        if (text.empty() || text[0] == '#') continue;
        std::vector<double> fields;
        std::stringstream ss(text);
        std::string cell;
        bool numeric = true;
        while (std::getline(ss, cell, ',')) {
            cell = trim(cell);
            try {
                std::size_t pos = 0;
                fields.push_back(std::stod(cell, &pos));
                if (pos != cell.size()) numeric = false;
            } catch (const std::exception&) {
                numeric = false;
            }
            if (!numeric) break;
        }
        if (!numeric) {
            if (line == 1 && rows.empty()) continue;  // header
            throw config_error(what + " line " + std::to_string(line) +
                               ": non-numeric field '" + cell + "'");
        }
        if (fields.size() != columns)
            throw config_error(what + " line " + std::to_string(line) + ": expected " +
                               std::to_string(columns) + " fields, got " +
                               std::to_string(fields.size()));
        rows.push_back(std::move(fields));
    }
    return rows;
}

} // namespace detail

inline std::vector<RateRow> read_rate_csv(std::istream& in) {
    std::vector<RateRow> out;
    for (const auto& r : detail::read_numeric_csv(in, 3, "rate csv")) {
        if (!(r[2] > 0.0)) throw config_error("rate csv: sigma must be positive");
        out.push_back({r[0], r[1], r[2]});
    }
    return out;
}

struct TofRow {
    double time_s, counts;
};

inline std::vector<TofRow> read_tof_csv(std::istream& in) {
    std::vector<TofRow> out;
    for (const auto& r : detail::read_numeric_csv(in, 2, "tof csv"))
        out.push_back({r[0], r[1]});
    return out;
}

} // namespace surfload
