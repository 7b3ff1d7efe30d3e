// Command-line front end: trap characterization, capture-volume maps,
// loading-efficiency sweeps, time-of-flight fits, and closed-form
// regime estimates.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "surfload/analytic.hpp"
#include "surfload/config.hpp"
#include "surfload/constants.hpp"
#include "surfload/errors.hpp"
#include "surfload/field_model.hpp"
#include "surfload/loading_model.hpp"
#include "surfload/tof.hpp"
#include "surfload/uncertainty.hpp"
#include "surfload/volumes.hpp"

namespace {

constexpr int exit_usage = 2;
constexpr int exit_numerical = 3;
constexpr int exit_io = 4;

struct CommonOpts {
    std::string config_path;
    std::string preset;
    std::string species;
    double grid_spacing = 0.0;
};

void add_common(CLI::App* cmd, CommonOpts& opts) {
    cmd->add_option("--config", opts.config_path, "key = value config file");
    cmd->add_option("--preset", opts.preset, "baseline configuration (pcb or microfab)");
    cmd->add_option("--species", opts.species, "ion species (ba138 or sr88)");
    cmd->add_option("--grid-spacing", opts.grid_spacing, "grid cell size in m (0 = auto)");
}

surfload::RunConfig resolve_config(const CommonOpts& opts) {
    surfload::RunConfig cfg;
    if (!opts.preset.empty()) cfg = surfload::preset_config(opts.preset);
    if (!opts.config_path.empty()) {
        if (!opts.preset.empty())
            throw surfload::config_error("--config and --preset are mutually exclusive");
        cfg = surfload::load_config(opts.config_path);
    }
    if (!opts.species.empty()) {
        cfg.drive.species = surfload::species_by_name(opts.species);
        cfg.source = surfload::default_source(cfg.drive.species);
        cfg.beams = surfload::default_beams(cfg.drive.species);
    }
    if (opts.grid_spacing > 0.0) cfg.grid_spacing = opts.grid_spacing;
    return cfg;
}

std::ofstream open_out(const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::ios_base::failure("cannot open output file '" + path + "'");
    return out;
}

int run_geometry(const surfload::RunConfig& cfg) {
    using namespace surfload;
    const auto& g = cfg.geometry;
    const auto& d = cfg.drive;
    const double z0 = rf_null_height(g);
    const double zesc = escape_height(g);
    const auto [q, a] = mathieu_matrices(g, d, {0.0, z0});
    const SecularFrequencies sec = secular_frequencies(g, d);
    std::printf("null_height_m        %.6e\n", z0);
    std::printf("escape_height_m      %.6e\n", zesc);
    std::printf("kappa                %.6e\n", kappa(g));
    std::printf("rf_depth_eV          %.6f\n", to_ev(rf_trap_depth(g, d)));
    std::printf("true_depth_eV        %.6f\n", to_ev(true_trap_depth(g, d)));
    std::printf("threshold_voltage_V  %.3f\n", threshold_voltage(g, d));
    std::printf("q_zz                 %.6f\n", q.zz);
    std::printf("a_zz                 %.6f\n", a.zz);
    std::printf("secular_radial_Hz    %.6e\n", sec.f_radial);
    std::printf("secular_axial_Hz     %.6e\n", sec.f_axial);
    return 0;
}

int run_volumes(const surfload::RunConfig& cfg, double ke_ev, const std::string& out_prefix) {
    using namespace surfload;
    const GridSpec grid = GridSpec::for_trap(cfg.geometry, cfg.grid_spacing);
    const auto cascade = volume_cascade(cfg.geometry, cfg.drive, cfg.beams, grid,
                                        TrajectoryConfig{}, from_ev(ke_ev));
    const auto report = [&](const VolumeMask& m) {
        std::printf("%-10s cells %8zu  area_m2 %.6e\n", stage_name(m.stage), m.count(),
                    m.area());
        if (!out_prefix.empty()) {
            auto out = open_out(out_prefix + "_" + stage_name(m.stage) + ".csv");
            m.write_csv(out);
        }
    };
    report(cascade.bare);
    report(cascade.ke);
    report(cascade.ke_pi);
    report(cascade.ke_pi_mm);
    return 0;
}

int run_sweep(const surfload::RunConfig& cfg, const std::vector<double>& vrf_list,
              const std::string& out_path, const std::string& data_path) {
    using namespace surfload;
    std::vector<double> volts = vrf_list;
    if (volts.empty()) volts = {cfg.drive.v_rf};
    std::sort(volts.begin(), volts.end());

    const GridSpec grid = GridSpec::for_trap(cfg.geometry, cfg.grid_spacing);
    LoadingCurve curve = curve_band(cfg.geometry, cfg.drive, volts, cfg.beams, cfg.source,
                                    grid, TrajectoryConfig{}, cfg.uncertainty, PTrapOptions{});
    if (!data_path.empty()) {
        std::ifstream in(data_path);
        if (!in) throw std::ios_base::failure("cannot open data file '" + data_path + "'");
        std::vector<RateDatum> data;
        for (const auto& row : read_rate_csv(in))
            data.push_back({row.depth_ev, row.rate, row.sigma});
        curve.scale = fit_scale(curve, data);
        std::printf("fitted_scale %.6e\n", curve.scale);
    }
    for (const auto& s : curve.samples)
        std::printf("depth_eV %.6f  p %.6e  band [%.6e, %.6e]\n", s.depth_ev,
                    curve.scale * s.p_raw, curve.scale * s.band_lo,
                    curve.scale * s.band_hi);
    if (!out_path.empty()) {
        auto out = open_out(out_path);
        write_curve_csv(out, curve);
    }
    return 0;
}

int run_tof(const surfload::RunConfig& cfg, const std::string& data_path,
            double flight_distance, int components) {
    using namespace surfload;
    TofSetup setup;
    if (flight_distance > 0.0) setup.flight_distance = flight_distance;
    setup.probe_radius = cfg.beams.w0;

    if (data_path.empty()) {
        const TofHistogram h =
            tof_forward(cfg.source, cfg.drive.species, setup,
                        4.0 * setup.flight_distance /
                            std::max(cfg.source.v_com,
                                     std::sqrt(k_boltzmann * cfg.source.temperature /
                                               cfg.drive.species.mass)));
        for (std::size_t i = 0; i < h.bin_centers.size(); ++i)
            std::printf("%.6e,%.6e\n", h.bin_centers[i], h.counts[i]);
        return 0;
    }

    std::ifstream in(data_path);
    if (!in) throw std::ios_base::failure("cannot open data file '" + data_path + "'");
    TofHistogram hist;
    for (const auto& row : read_tof_csv(in)) {
        hist.bin_centers.push_back(row.time_s);
        hist.counts.push_back(row.counts);
    }
    if (hist.bin_centers.size() >= 2)
        setup.bin_width = hist.bin_centers[1] - hist.bin_centers[0];
    const SourceModel fit =
        tof_fit(hist, setup, cfg.drive.species, cfg.source, components);
    std::printf("temperature_K %.2f\n", fit.temperature);
    std::printf("v_com_m_s     %.2f\n", fit.v_com);
    std::printf("mean_ke_eV    %.4f\n",
                to_ev(0.5 * cfg.drive.species.mass * fit.v_com * fit.v_com));
    return 0;
}

int run_analytic(const surfload::RunConfig& cfg) {
    using namespace surfload;
    const IonSpecies& sp = cfg.drive.species;
    // large regime when the PI beam waist is small against the trap scale
    const TrapRegime regime = cfg.beams.w0 < 0.5 * rf_null_height(cfg.geometry)
                                  ? TrapRegime::large
                                  : TrapRegime::compact;
    const auto est = regime_estimate(regime, cfg.source, sp, cfg.geometry, cfg.drive);
    const double depth = rf_trap_depth(cfg.geometry, cfg.drive);
    const PLimits limits =
        regime == TrapRegime::compact
            ? p_limits_compact(cfg.source, sp, cfg.drive, cfg.geometry, depth)
            : p_limits_large(cfg.source, sp, cfg.drive, cfg.geometry, depth);
    std::printf("regime            %s\n",
                regime == TrapRegime::compact ? "compact" : "large");
    std::printf("e_opt_eV          %.4f\n", to_ev(est.e_opt));
    std::printf("e_opt_compact_eV  %.4f\n", to_ev(e_opt_compact(cfg.source, sp)));
    std::printf("e_opt_large_eV    %.4f\n",
                to_ev(e_opt_large(cfg.source, sp, cfg.geometry, cfg.drive)));
    std::printf("p_low             %.6e\n", limits.p_low);
    std::printf("p_high            %.6e\n", limits.p_high);
    std::printf("hot_plume_ratio   %.6e\n", hot_plume_ratio(cfg.source, sp, depth));
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"surface-trap ablation loading toolkit"};
    app.require_subcommand(1);

    CommonOpts opts;
    double ke_ev = 0.05;
    std::string out_path, out_prefix, data_path;
    std::vector<double> vrf_list;
    double flight_distance = 0.0;
    int components = 1;
    unsigned seed = 0;

    auto* c_geom = app.add_subcommand("geometry", "trap heights, depths, frequencies");
    add_common(c_geom, opts);

    auto* c_vol = app.add_subcommand("volumes", "capture volume cascade");
    add_common(c_vol, opts);
    c_vol->add_option("--ke", ke_ev, "ion kinetic energy in eV");
    c_vol->add_option("--out", out_prefix, "prefix for per-stage mask CSVs");

    auto* c_sweep = app.add_subcommand("sweep", "loading probability vs trap depth");
    add_common(c_sweep, opts);
    c_sweep->add_option("--vrf-list", vrf_list, "rf amplitudes in V")->expected(-1)->delimiter(',');
    c_sweep->add_option("--out", out_path, "curve CSV output");
    c_sweep->add_option("--data", data_path, "observed rates CSV (depth_eV,rate,sigma)");

    auto* c_tof = app.add_subcommand("tof", "time-of-flight forward model / fit");
    add_common(c_tof, opts);
    c_tof->add_option("--data", data_path, "histogram CSV (time_s,counts); omit to print model");
    c_tof->add_option("--flight-distance", flight_distance, "target-to-probe distance in m");
    c_tof->add_option("--components", components, "plume modes to fit (1 or 2)");

    auto* c_ana = app.add_subcommand("analytic", "closed-form regime estimates");
    add_common(c_ana, opts);

    app.add_option("--seed", seed, "rng seed for stochastic checks (unused by core model)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : exit_usage;
    }

    try {
        const surfload::RunConfig cfg = resolve_config(opts);
        if (c_geom->parsed()) return run_geometry(cfg);
        if (c_vol->parsed()) return run_volumes(cfg, ke_ev, out_prefix);
        if (c_sweep->parsed()) return run_sweep(cfg, vrf_list, out_path, data_path);
        if (c_tof->parsed()) return run_tof(cfg, data_path, flight_distance, components);
        if (c_ana->parsed()) return run_analytic(cfg);
        std::cerr << "error: no subcommand\n";
        return exit_usage;
    } catch (const surfload::config_error& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return exit_usage;
    } catch (const std::ios_base::failure& e) {
        std::cerr << "io error: " << e.what() << "\n";
        return exit_io;
    } catch (const std::invalid_argument& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return exit_usage;
    } catch (const std::exception& e) {
        std::cerr << "numerical error: " << e.what() << "\n";
        return exit_numerical;
    }
}
