#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <utility>
#include <vector>

#include "surfload/field_model.hpp"
#include "surfload/grid.hpp"
#include "surfload/source.hpp"

// Grid-based construction of the nested trapping cross-sections in the
// radial plane: bare isopotential region, kinetic-energy truncation,
// photo-ionization beam intersection, and micromotion stability filter.

namespace surfload {

struct TrajectoryConfig {
    std::size_t steps_per_rf_period = 50;
    double q_threshold = 0.5;  // reject trajectories exploring |Q.x_d| above this

    TrajectoryConfig() = default;
    TrajectoryConfig(std::size_t steps, double qmax) : steps_per_rf_period(steps), q_threshold(qmax) {
        if (steps < 20)
            throw std::invalid_argument("TrajectoryConfig: need >= 20 steps per rf period");
        if (!(qmax > 0.0) || !(qmax < 1.0))
            throw std::invalid_argument("TrajectoryConfig: q threshold must lie in (0, 1)");
    }
};

namespace detail {

/// Seeded 4-connected flood fill over cells satisfying admit(ix, iz).
template <class Admit>
VolumeMask flood_fill(const GridSpec& grid, VolumeStage stage, std::size_t seed_ix,
                      std::size_t seed_iz, Admit&& admit) {
    VolumeMask mask(grid, stage);
    const std::size_t nx = grid.nx(), nz = grid.nz();
    if (seed_ix >= nx || seed_iz >= nz || !admit(seed_ix, seed_iz)) return mask;
    std::vector<std::pair<std::size_t, std::size_t>> stack{{seed_ix, seed_iz}};
    mask.set(seed_ix, seed_iz);
    while (!stack.empty()) {
        auto [ix, iz] = stack.back();
        stack.pop_back();
        const std::size_t nbr[4][2] = {
            {ix + 1, iz}, {ix - 1, iz}, {ix, iz + 1}, {ix, iz - 1}};
        for (auto& n : nbr) {
            // unsigned wrap makes ix-1 at ix==0 huge, so the bound check covers it
            if (n[0] >= nx || n[1] >= nz) continue;
            if (mask.at(n[0], n[1]) || !admit(n[0], n[1])) continue;
            mask.set(n[0], n[1]);
            stack.push_back({n[0], n[1]});
        }
    }
    return mask;
}

} // namespace detail

/// Bare trapping cross-section: cells with total potential below the true
/// trap depth, connected to the rf null.  Empty when the trap is open.
inline VolumeMask bare_volume(const TrapGeometry& geom, const DriveConfig& drive,
                              const GridSpec& grid) {
    const double e_max = true_trap_depth(geom, drive);
    if (!(e_max > 0.0)) return VolumeMask(grid, VolumeStage::bare);
    const double z0 = rf_null_height(geom);
    return detail::flood_fill(grid, VolumeStage::bare, grid.ix_of(0.0), grid.iz_of(z0),
                              [&](std::size_t ix, std::size_t iz) {
                                  const RadialPoint p{grid.x_of(ix), grid.z_of(iz)};
                                  return total_potential(geom, drive, p).u_tot < e_max;
                              });
}

/// Kinetic-energy truncated cross-section: effective depth E_max - KE.
inline VolumeMask ke_volume(const TrapGeometry& geom, const DriveConfig& drive,
                            const GridSpec& grid, double ke) {
    if (ke < 0.0) throw std::invalid_argument("ke_volume: KE must be >= 0");
    const double e_max = true_trap_depth(geom, drive);
    const double e_eff = e_max - ke;
    if (!(e_max > 0.0) || !(e_eff > 0.0)) return VolumeMask(grid, VolumeStage::ke);
    const double z0 = rf_null_height(geom);
    return detail::flood_fill(grid, VolumeStage::ke, grid.ix_of(0.0), grid.iz_of(z0),
                              [&](std::size_t ix, std::size_t iz) {
                                  const RadialPoint p{grid.x_of(ix), grid.z_of(iz)};
                                  return total_potential(geom, drive, p).u_tot < e_eff;
                              });
}

/// Intersect a KE mask with the PI beam disk (hard cutoff at the 1/e^2
/// radius, centered on the rf null), keeping the component at the null.
inline VolumeMask pi_volume(const VolumeMask& mask, const PIBeams& beams,
                            const TrapGeometry& geom) {
    if (mask.stage != VolumeStage::ke)
        throw std::invalid_argument("pi_volume: expects a stage-ke mask");
    const GridSpec& grid = mask.grid;
    const double z0 = rf_null_height(geom);
    const double r2 = beams.w0 * beams.w0;
    return detail::flood_fill(grid, VolumeStage::ke_pi, grid.ix_of(0.0), grid.iz_of(z0),
                              [&](std::size_t ix, std::size_t iz) {
                                  if (!mask.at(ix, iz)) return false;
                                  const double dx = grid.x_of(ix);
                                  const double dz = grid.z_of(iz) - z0;
                                  return dx * dx + dz * dz <= r2;
                              });
}

namespace detail {

/// Outcome of propagating the approximate secular+micromotion trajectory
/// from one starting cell for a single nominal secular period.
struct TrajectoryResult {
    bool q_ok = false;       // |Q.x_d| stayed below threshold, secular frequency defined
    bool in_domain = false;  // never left the grid or hit the surface
    bool exited_mask = false;  // stepped outside the containment mask (if one was given)
    double u_peak = std::numeric_limits<double>::infinity();  // max U_tot visited (J)
};

/// Secular-envelope trajectory: the displacement from the null oscillates
/// at the nominal secular frequency of the starting cell while the
/// micromotion term 0.5 (Q.x) cos(Omega t) rides on top, with Q
/// re-evaluated at the envelope position each step.  The ion starts at
/// rest with the envelope at maximum displacement.
inline TrajectoryResult propagate_cell(const TrapGeometry& geom, const DriveConfig& drive,
                                       const GridSpec& grid, const TrajectoryConfig& traj,
                                       double x_cell, double z_cell,
                                       const VolumeMask* containment = nullptr) {
    TrajectoryResult res;
    const double z0 = rf_null_height(geom);
    const Vec2 d0{x_cell, z_cell - z0};
    const double d0_norm = std::hypot(d0.x, d0.z);
    const Vec2 d0_hat = d0_norm > 0.0 ? Vec2{d0.x / d0_norm, d0.z / d0_norm} : Vec2{0.0, 1.0};

    const auto [q_start, a_start] = mathieu_matrices(geom, drive, {x_cell, z_cell});
    const Vec2 qd0 = q_start.mul(d0_hat);
    const double q_dir0 = std::hypot(qd0.x, qd0.z);
    if (q_dir0 > traj.q_threshold) return res;

    double f;
    try {
        f = secular_from_qa(q_dir0, a_start.xx, drive.omega_rf);
    } catch (const instability_error&) {
        return res;
    }
    if (!(f > 0.0)) return res;

    const double omega_sec = 2.0 * M_PI * f;
    const double dt = 2.0 * M_PI / drive.omega_rf / static_cast<double>(traj.steps_per_rf_period);
    const auto n_steps = static_cast<std::size_t>(std::ceil(1.0 / (f * dt)));

    res.q_ok = true;
    res.in_domain = true;
    res.u_peak = -std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k <= n_steps; ++k) {
        const double t = static_cast<double>(k) * dt;
        const double env = std::sin(omega_sec * t + 0.5 * M_PI);
        const Vec2 e{env * d0.x, env * d0.z};
        const double ez_abs = z0 + e.z;
        if (!grid.contains(e.x, ez_abs)) {
            res.in_domain = false;
            return res;
        }
        const auto [q_loc, a_loc] = mathieu_matrices(geom, drive, {e.x, ez_abs});
        (void)a_loc;
        const Vec2 qd = q_loc.mul(d0_hat);
        if (std::hypot(qd.x, qd.z) > traj.q_threshold) {
            res.q_ok = false;
            return res;
        }
        const Vec2 qe = q_loc.mul(e);
        const double mm = 0.5 * std::cos(drive.omega_rf * t);
        const double px = e.x + mm * qe.x;
        const double pz = ez_abs + mm * qe.z;
        if (!grid.contains(px, pz)) {
            res.in_domain = false;
            return res;
        }
        if (containment && !containment->covers(px, pz)) {
            res.exited_mask = true;
            return res;
        }
        const double u = total_potential(geom, drive, {px, pz}).u_tot;
        if (u > res.u_peak) res.u_peak = u;
    }
    return res;
}

/// Per-cell stability ceiling over a region of interest: the largest KE
/// for which the cell's trajectory stays inside the corresponding ke mask.
/// -inf marks cells rejected for any KE.  Evaluating the trajectory once
/// per cell makes KE sweeps cheap: the trajectory itself is KE-independent
/// and only the containment threshold E_max - KE changes.
inline std::vector<double> ke_ceiling_scan(const TrapGeometry& geom, const DriveConfig& drive,
                                           const GridSpec& grid, const TrajectoryConfig& traj,
                                           const VolumeMask& candidates) {
    const double e_max = true_trap_depth(geom, drive);
    std::vector<double> ceiling(grid.nx() * grid.nz(),
                                -std::numeric_limits<double>::infinity());
    for (std::size_t iz = 0; iz < grid.nz(); ++iz) {
        for (std::size_t ix = 0; ix < grid.nx(); ++ix) {
            if (!candidates.at(ix, iz)) continue;
            const auto res = propagate_cell(geom, drive, grid, traj, grid.x_of(ix), grid.z_of(iz));
            if (!res.q_ok || !res.in_domain) continue;
            ceiling[iz * grid.nx() + ix] = e_max - res.u_peak;
        }
    }
    return ceiling;
}

} // namespace detail

/// Micromotion stability filter: a starting cell of `mask_ke_pi` survives
/// iff its approximate trajectory never leaves the stage-ke mask during
/// one nominal secular period and |Q.x_d| stays below the threshold.
/// The result keeps the connected component at the rf null.
inline VolumeMask micromotion_volume(const VolumeMask& mask_ke_pi, const VolumeMask& mask_ke,
                                     const TrapGeometry& geom, const DriveConfig& drive,
                                     const GridSpec& grid, const TrajectoryConfig& traj) {
    if (mask_ke_pi.stage != VolumeStage::ke_pi)
        throw std::invalid_argument("micromotion_volume: expects a stage-ke_pi mask");
    if (mask_ke.stage != VolumeStage::ke)
        throw std::invalid_argument("micromotion_volume: expects a stage-ke reference mask");

    VolumeMask retained(grid, VolumeStage::ke_pi_mm);
    for (std::size_t iz = 0; iz < grid.nz(); ++iz) {
        for (std::size_t ix = 0; ix < grid.nx(); ++ix) {
            if (!mask_ke_pi.at(ix, iz)) continue;
            const auto res = detail::propagate_cell(geom, drive, grid, traj, grid.x_of(ix),
                                                    grid.z_of(iz), &mask_ke);
            if (res.q_ok && res.in_domain && !res.exited_mask) retained.set(ix, iz);
        }
    }
    const double z0 = rf_null_height(geom);
    return detail::flood_fill(grid, VolumeStage::ke_pi_mm, grid.ix_of(0.0), grid.iz_of(z0),
                              [&](std::size_t ix, std::size_t iz) { return retained.at(ix, iz); });
}

struct VolumeCascade {
    VolumeMask bare;
    VolumeMask ke;
    VolumeMask ke_pi;
    VolumeMask ke_pi_mm;
};

/// All four nested masks for one (drive, KE) point.
inline VolumeCascade volume_cascade(const TrapGeometry& geom, const DriveConfig& drive,
                                    const PIBeams& beams, const GridSpec& grid,
                                    const TrajectoryConfig& traj, double ke) {
    VolumeCascade c{bare_volume(geom, drive, grid), ke_volume(geom, drive, grid, ke),
                    VolumeMask(grid, VolumeStage::ke_pi), VolumeMask(grid, VolumeStage::ke_pi_mm)};
    c.ke_pi = pi_volume(c.ke, beams, geom);
    c.ke_pi_mm = micromotion_volume(c.ke_pi, c.ke, geom, drive, grid, traj);
    return c;
}

} // namespace surfload
