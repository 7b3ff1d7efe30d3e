#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <vector>

#include "surfload/field_model.hpp"
#include "surfload/grid.hpp"
#include "surfload/loading_model.hpp"
#include "surfload/volumes.hpp"

// Parameter-uncertainty propagation: stray-field perturbation of the trap
// depth and corner evaluation of the loading curve into an error band.

namespace surfload {

struct UncertaintySpec {
    double e_s = 0.0;          // V/m, stray-field bound
    double dvrf_rel = 0.01;    // rf amplitude
    double dpi_rel = 0.10;     // second-stage PI intensity
    double dt_rel = 0.20;      // plume temperature
    double dtarget_rel = 0.10; // shot-to-shot target efficiency

    static UncertaintySpec none() { return {0.0, 0.0, 0.0, 0.0, 0.0}; }
};

struct DepthBand {
    double e_min;  // J
    double e_max;  // J
};

namespace detail {

/// Depth of a perturbed potential sampled on a grid: greedy descent to the
/// local minimum, then a bisection on the largest level whose sub-level
/// region stays off the domain boundary.  Returns 0 when no bound minimum
/// survives the perturbation.
inline double grid_depth(const GridSpec& grid, const std::vector<double>& u, std::size_t seed_ix,
                         std::size_t seed_iz, double depth_hi) {
    const std::size_t nx = grid.nx(), nz = grid.nz();
    std::size_t ix = seed_ix, iz = seed_iz;
    for (;;) {
        std::size_t best_ix = ix, best_iz = iz;
        double best = u[iz * nx + ix];
        const std::size_t nbr[4][2] = {{ix + 1, iz}, {ix - 1, iz}, {ix, iz + 1}, {ix, iz - 1}};
        for (auto& n : nbr) {
            if (n[0] >= nx || n[1] >= nz) continue;
            if (u[n[1] * nx + n[0]] < best) {
                best = u[n[1] * nx + n[0]];
                best_ix = n[0];
                best_iz = n[1];
            }
        }
        if (best_ix == ix && best_iz == iz) break;
        ix = best_ix;
        iz = best_iz;
        if (ix == 0 || ix + 1 == nx || iz == 0 || iz + 1 == nz) return 0.0;  // rolled out
    }
    const double u_min = u[iz * nx + ix];

    const auto contained = [&](double level) {
        // flood the sub-level set from the minimum; fail on boundary touch
        VolumeMask region(grid);
        std::vector<std::pair<std::size_t, std::size_t>> stack{{ix, iz}};
        region.set(ix, iz);
        while (!stack.empty()) {
            auto [cx, cz] = stack.back();
            stack.pop_back();
            if (cx == 0 || cx + 1 == nx || cz == 0 || cz + 1 == nz) return false;
            const std::size_t nbr[4][2] = {
                {cx + 1, cz}, {cx - 1, cz}, {cx, cz + 1}, {cx, cz - 1}};
            for (auto& n : nbr) {
                if (n[0] >= nx || n[1] >= nz) continue;
                if (region.at(n[0], n[1])) continue;
                if (u[n[1] * nx + n[0]] - u_min >= level) continue;
                region.set(n[0], n[1]);
                stack.push_back({n[0], n[1]});
            }
        }
        return true;
    };

    double lo = 0.0, hi = depth_hi;
    if (contained(hi)) return hi;
    for (int it = 0; it < 40 && (hi - lo) > 1e-4 * depth_hi; ++it) {
        const double mid = 0.5 * (lo + hi);
        (contained(mid) ? lo : hi) = mid;
    }
    return lo;
}

} // namespace detail

/// Min/max trap depth over the four stray-field directions {+-x, +-z}.
/// Each direction adds a linear potential e_s * x_i and the escape level
/// is re-located numerically.  The numeric barrier sits above the
/// closed-form depth (the saddle shifts off the rf-only escape height),
/// so results are reported as the closed-form depth shifted by the
/// numeric perturbed - unperturbed change, clamped at zero; the e_s = 0
/// limit is then exact and a tilt that removes the numeric barrier
/// reports a fully open trap.
inline DepthBand stray_field_depth(const TrapGeometry& geom, const DriveConfig& drive, double e_s,
                                   const GridSpec& grid) {
    if (e_s < 0.0) throw std::invalid_argument("stray_field_depth: E_s must be >= 0");
    const double unperturbed = true_trap_depth(geom, drive);
    if (!(unperturbed > 0.0)) return {0.0, 0.0};
    if (e_s == 0.0) return {unperturbed, unperturbed};

    const std::size_t nx = grid.nx(), nz = grid.nz();
    const double z0 = rf_null_height(geom);
    std::vector<double> u_base(nx * nz);
    for (std::size_t iz = 0; iz < nz; ++iz)
        for (std::size_t ix = 0; ix < nx; ++ix)
            u_base[iz * nx + ix] =
                total_potential(geom, drive, {grid.x_of(ix), grid.z_of(iz)}).u_tot;

    const double qe = drive.species.charge;
    // generous level cap: unperturbed depth plus the maximum linear tilt
    const double span = std::max(grid.x_max - grid.x_min, grid.z_max - grid.z_min);
    const double depth_hi = 2.0 * unperturbed + qe * e_s * span + 1e-25;

    const double d0 =
        detail::grid_depth(grid, u_base, grid.ix_of(0.0), grid.iz_of(z0), depth_hi);
    if (!(d0 > 0.0)) return {0.0, 0.0};

    DepthBand band{std::numeric_limits<double>::infinity(),
                   -std::numeric_limits<double>::infinity()};
    const Vec2 dirs[4] = {{1.0, 0.0}, {-1.0, 0.0}, {0.0, 1.0}, {0.0, -1.0}};
    std::vector<double> u(nx * nz);
    for (const auto& d : dirs) {
        for (std::size_t iz = 0; iz < nz; ++iz)
            for (std::size_t ix = 0; ix < nx; ++ix)
                u[iz * nx + ix] = u_base[iz * nx + ix] +
                                  qe * e_s * (d.x * grid.x_of(ix) + d.z * (grid.z_of(iz) - z0));
        const double depth =
            detail::grid_depth(grid, u, grid.ix_of(0.0), grid.iz_of(z0), depth_hi);
        const double shifted = std::max(0.0, unperturbed + (depth - d0));
        band.e_min = std::min(band.e_min, shifted);
        band.e_max = std::max(band.e_max, shifted);
    }
    return band;
}

namespace detail {

/// rf amplitude whose true depth equals the given value (J).
inline double vrf_for_true_depth(const TrapGeometry& geom, const DriveConfig& drive,
                                 double depth) {
    const double m = drive.species.mass;
    const double qe = drive.species.charge;
    const double z0 = rf_null_height(geom);
    const double zesc = escape_height(geom);
    const double rf_depth = depth + 0.25 * m * drive.omega_ax * drive.omega_ax * zesc * zesc;
    if (!(rf_depth > 0.0)) return 0.0;
    return M_PI * z0 * drive.omega_rf * std::sqrt(m * rf_depth / kappa(geom)) / qe;
}

} // namespace detail

/// Corner-propagated loading curve.  Per amplitude, p_trap is evaluated at
/// the documented corner set: central, stray-field depth extremes,
/// V_rf +- dvrf, I2 +- dpi, T +- dt; the band is the envelope of those
/// evaluations scaled by the +-dtarget multiplicative factor.
inline LoadingCurve curve_band(const TrapGeometry& geom, const DriveConfig& drive_template,
                               const std::vector<double>& vrf_list, const PIBeams& beams,
                               const SourceModel& src, const GridSpec& grid,
                               const TrajectoryConfig& traj, const UncertaintySpec& spec,
                               const PTrapOptions& opt = {}) {
    if (vrf_list.empty()) throw std::invalid_argument("curve_band: empty amplitude list");
    LoadingCurve curve;
    curve.samples.reserve(vrf_list.size());
    for (double v : vrf_list) {
        const DriveConfig drive = drive_template.with_v_rf(v);
        const double depth_ev = to_ev(rf_trap_depth(geom, drive));
        const double central = p_trap(geom, drive, beams, src, grid, traj, opt);
        double lo = central, hi = central;
        const auto fold = [&](double p) {
            lo = std::min(lo, p);
            hi = std::max(hi, p);
        };

        if (spec.e_s > 0.0) {
            const DepthBand db = stray_field_depth(geom, drive, spec.e_s, grid);
            for (double d : {db.e_min, db.e_max}) {
                if (!(d > 0.0)) {
                    fold(0.0);
                    continue;
                }
                const double veq = detail::vrf_for_true_depth(geom, drive, d);
                fold(p_trap(geom, drive.with_v_rf(veq), beams, src, grid, traj, opt));
            }
        }
        if (spec.dvrf_rel > 0.0) {
            fold(p_trap(geom, drive.with_v_rf(v * (1.0 + spec.dvrf_rel)), beams, src, grid, traj,
                        opt));
            fold(p_trap(geom, drive.with_v_rf(v * (1.0 - spec.dvrf_rel)), beams, src, grid, traj,
                        opt));
        }
        if (spec.dpi_rel > 0.0) {
            for (double s : {1.0 + spec.dpi_rel, 1.0 - spec.dpi_rel})
                fold(p_trap(geom, drive, {beams.w0, beams.gamma1, beams.i2 * s}, src, grid, traj,
                            opt));
        }
        if (spec.dt_rel > 0.0) {
            for (double s : {1.0 + spec.dt_rel, 1.0 - spec.dt_rel})
                fold(p_trap(geom, drive, beams,
                            {src.temperature * s, src.v_com, src.w_a}, grid, traj, opt));
        }
        curve.samples.push_back(
            {depth_ev, central, lo * (1.0 - spec.dtarget_rel), hi * (1.0 + spec.dtarget_rel)});
    }
    return curve;
}

} // namespace surfload
