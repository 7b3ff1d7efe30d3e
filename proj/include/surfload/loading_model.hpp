#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <ostream>
#include <stdexcept>
#include <vector>

#include "surfload/constants.hpp"
#include "surfload/errors.hpp"
#include "surfload/field_model.hpp"
#include "surfload/grid.hpp"
#include "surfload/source.hpp"
#include "surfload/spline.hpp"
#include "surfload/volumes.hpp"

// Velocity-integrated relative loading probability: ablation and trap
// factors weighted by the micromotion-stable trapping cross-section,
// swept over rf amplitude and fit to measured rates by a single scale.

namespace surfload {

/// Thermal plume speed density (drifted Gaussian) with the plume-area and
/// temperature normalization prefactor.  Spatial uniformity inside the
/// plume radius is absorbed into the volume overlap.
inline double ablation_factor(const SourceModel& src, const IonSpecies& species, double v) {
    if (v < 0.0) throw std::invalid_argument("ablation_factor: v must be >= 0");
    const double kt = k_boltzmann * src.temperature;
    const double dv = v - src.v_com;
    return std::exp(-species.mass * dv * dv / (2.0 * kt)) / (src.w_a * src.w_a * kt);
}

/// Photo-ionization probability factor for an atom crossing the beams at
/// speed v: saturated first stage, transit-time-limited second stage.
inline double trap_factor(const PIBeams& beams, double v) {
    if (!(v > 0.0)) throw std::invalid_argument("trap_factor: v must be positive");
    return beams.i2 * beams.w0 / v * (1.0 - std::exp(-beams.gamma1 * beams.w0 / (2.0 * v)));
}

struct PTrapOptions {
    std::size_t ke_points = 50;        // KE lattice for the stable-area cache
    std::size_t quad_intervals = 200;  // composite-Simpson intervals, even
    double v_lo_fraction = 1e-3;       // lower cutoff as a fraction of v_max
    double convergence_tol = 0.01;     // max relative change under interval doubling
};

/// Per-amplitude cache of the micromotion-stable cross-sectional area as a
/// function of incoming kinetic energy.  The per-cell trajectory is
/// KE-independent, so one scan yields every KE truncation level.
class StableAreaTable {
public:
    StableAreaTable(const TrapGeometry& geom, const DriveConfig& drive, const PIBeams& beams,
                    const GridSpec& grid, const TrajectoryConfig& traj, std::size_t ke_points = 50)
        : e_max_(true_trap_depth(geom, drive)) {
        if (!(e_max_ > 0.0)) return;
        if (ke_points < 2) throw std::invalid_argument("StableAreaTable: need >= 2 KE points");

        const std::size_t nx = grid.nx(), nz = grid.nz();
        const double z0 = rf_null_height(geom);
        const double cell_area = grid.h * grid.h;

        // Total potential over the grid, evaluated once.
        std::vector<double> u(nx * nz);
        for (std::size_t iz = 0; iz < nz; ++iz)
            for (std::size_t ix = 0; ix < nx; ++ix)
                u[iz * nx + ix] =
                    total_potential(geom, drive, {grid.x_of(ix), grid.z_of(iz)}).u_tot;

        const std::size_t null_ix = grid.ix_of(0.0), null_iz = grid.iz_of(z0);
        const VolumeMask bare =
            detail::flood_fill(grid, VolumeStage::bare, null_ix, null_iz,
                               [&](std::size_t ix, std::size_t iz) {
                                   return u[iz * nx + ix] < e_max_;
                               });

        // Trajectory scan restricted to the PI disk within the bare region.
        VolumeMask candidates(grid, VolumeStage::bare);
        const double r2 = beams.w0 * beams.w0;
        for (std::size_t iz = 0; iz < nz; ++iz) {
            for (std::size_t ix = 0; ix < nx; ++ix) {
                if (!bare.at(ix, iz)) continue;
                const double dx = grid.x_of(ix);
                const double dz = grid.z_of(iz) - z0;
                if (dx * dx + dz * dz <= r2) candidates.set(ix, iz);
            }
        }
        const std::vector<double> ceiling =
            detail::ke_ceiling_scan(geom, drive, grid, traj, candidates);

        ke_.resize(ke_points);
        area_.resize(ke_points);
        for (std::size_t j = 0; j < ke_points; ++j) {
            const double ke = e_max_ * static_cast<double>(j) / static_cast<double>(ke_points - 1);
            const double e_eff = e_max_ - ke;
            const VolumeMask stable = detail::flood_fill(
                grid, VolumeStage::ke_pi_mm, null_ix, null_iz,
                [&](std::size_t ix, std::size_t iz) {
                    const std::size_t i = iz * nx + ix;
                    return candidates.at(ix, iz) && u[i] < e_eff && ceiling[i] > ke;
                });
            ke_[j] = ke;
            area_[j] = static_cast<double>(stable.count()) * cell_area;
        }
    }

    double e_max() const { return e_max_; }

    /// Linear interpolation of the stable area in KE (J), in m^2.
    double area_at(double ke) const {
        if (ke_.empty() || ke >= e_max_) return 0.0;
        if (ke <= ke_.front()) return area_.front();
        const auto it = std::upper_bound(ke_.begin(), ke_.end(), ke);
        const std::size_t j = static_cast<std::size_t>(it - ke_.begin());
        const double t = (ke - ke_[j - 1]) / (ke_[j] - ke_[j - 1]);
        return area_[j - 1] + t * (area_[j] - area_[j - 1]);
    }

private:
    double e_max_;
    std::vector<double> ke_, area_;
};

namespace detail {

template <class F>
double simpson(F&& f, double lo, double hi, std::size_t intervals) {
    if (intervals % 2) ++intervals;
    const double h = (hi - lo) / static_cast<double>(intervals);
    double acc = f(lo) + f(hi);
    for (std::size_t k = 1; k < intervals; ++k)
        acc += f(lo + static_cast<double>(k) * h) * (k % 2 ? 4.0 : 2.0);
    return acc * h / 3.0;
}

} // namespace detail

/// Relative probability of loading one ion at the given drive point, up to
/// the overall scale factor.  Zero when the true depth is non-positive.
inline double p_trap(const TrapGeometry& geom, const DriveConfig& drive, const PIBeams& beams,
                     const SourceModel& src, const GridSpec& grid, const TrajectoryConfig& traj,
                     const PTrapOptions& opt = {}) {
    const StableAreaTable table(geom, drive, beams, grid, traj, opt.ke_points);
    if (!(table.e_max() > 0.0)) return 0.0;

    const double m = drive.species.mass;
    const double v_max = std::sqrt(2.0 * table.e_max() / m);
    const double v_lo = opt.v_lo_fraction * v_max;
    const auto integrand = [&](double v) {
        const double ke = 0.5 * m * v * v;
        const double area = table.area_at(ke);
        if (area == 0.0) return 0.0;
        return area * (1.0 - std::exp(-beams.gamma1 * beams.w0 / (2.0 * v))) / v *
               std::exp(-m * (v - src.v_com) * (v - src.v_com) /
                        (2.0 * k_boltzmann * src.temperature));
    };
    // The integrand behaves like 1/v toward the lower cutoff; integrating
    // in log-velocity flattens that spike so Simpson converges quickly.
    const auto log_integrand = [&](double u) {
        const double v = std::exp(u);
        return integrand(v) * v;
    };
    const double u_lo = std::log(v_lo), u_hi = std::log(v_max);
    const double coarse = detail::simpson(log_integrand, u_lo, u_hi, opt.quad_intervals);
    const double fine = detail::simpson(log_integrand, u_lo, u_hi, 2 * opt.quad_intervals);
    if (fine != 0.0 && std::abs(fine - coarse) / std::abs(fine) > opt.convergence_tol)
        throw accuracy_error("p_trap: velocity quadrature did not converge");
    const double prefactor =
        beams.i2 * beams.w0 / (src.w_a * src.w_a * k_boltzmann * src.temperature);
    return prefactor * fine;
}

struct CurveSample {
    double depth_ev;  // rf trap depth
    double p_raw;
    double band_lo;
    double band_hi;
};

/// Swept loading curve over rf trap depth with spline smoothing and an
/// optional uncertainty band (band defaults to the central value).
struct LoadingCurve {
    std::vector<CurveSample> samples;
    double scale = 1.0;

    CubicSpline make_spline() const {
        std::vector<double> x, y;
        x.reserve(samples.size());
        y.reserve(samples.size());
        for (const auto& s : samples) {
            x.push_back(s.depth_ev);
            y.push_back(s.p_raw);
        }
        return {std::move(x), std::move(y)};
    }

    /// Spline-smoothed model value at a depth (eV), clamped non-negative.
    double model_at(double depth_ev) const {
        if (samples.size() < 2)
            return samples.empty() ? 0.0 : std::max(0.0, samples.front().p_raw);
        return std::max(0.0, make_spline()(depth_ev));
    }
};

/// Evaluate p_trap over an ascending list of rf amplitudes; depths on the
/// curve axis are rf trap depths (Eq.-of-depth closed form).
inline LoadingCurve sweep_curve(const TrapGeometry& geom, const DriveConfig& drive_template,
                                const std::vector<double>& vrf_list, const PIBeams& beams,
                                const SourceModel& src, const GridSpec& grid,
                                const TrajectoryConfig& traj, const PTrapOptions& opt = {}) {
    if (vrf_list.empty()) throw std::invalid_argument("sweep_curve: empty amplitude list");
    for (std::size_t i = 1; i < vrf_list.size(); ++i)
        if (!(vrf_list[i] > vrf_list[i - 1]))
            throw std::invalid_argument("sweep_curve: amplitudes must be strictly ascending");
    LoadingCurve curve;
    curve.samples.reserve(vrf_list.size());
    for (double v : vrf_list) {
        const DriveConfig drive = drive_template.with_v_rf(v);
        const double depth = to_ev(rf_trap_depth(geom, drive));
        const double p = p_trap(geom, drive, beams, src, grid, traj, opt);
        curve.samples.push_back({depth, p, p, p});
    }
    return curve;
}

struct RateDatum {
    double depth_ev;
    double rate;
    double sigma;
};

/// Weighted least-squares scale factor between the smoothed model curve
/// and measured rates; the closed form of the single-parameter fit.
inline double fit_scale(const LoadingCurve& curve, const std::vector<RateDatum>& data) {
    if (data.empty()) throw std::invalid_argument("fit_scale: no data");
    double num = 0.0, den = 0.0;
    for (const auto& d : data) {
        if (!(d.sigma > 0.0)) throw std::invalid_argument("fit_scale: sigma must be positive");
        const double m = curve.model_at(d.depth_ev);
        num += m * d.rate / (d.sigma * d.sigma);
        den += m * m / (d.sigma * d.sigma);
    }
    if (den == 0.0) throw fit_error("fit_scale: model vanishes at every datum");
    return num / den;
}

/// Curve CSV: knot rows carry the raw sample; intermediate rows compare
/// the piecewise-linear raw curve against the spline.
inline void write_curve_csv(std::ostream& os, const LoadingCurve& curve,
                            std::size_t dense_per_interval = 8) {
    os << "depth_eV,p_raw,p_smoothed,band_lo,band_hi\n";
    if (curve.samples.size() < 2) {
        for (const auto& s : curve.samples)
            os << s.depth_ev << "," << s.p_raw << "," << s.p_raw << "," << s.band_lo << ","
               << s.band_hi << "\n";
        return;
    }
    const CubicSpline spline = curve.make_spline();
    for (std::size_t i = 0; i + 1 < curve.samples.size(); ++i) {
        const auto& s0 = curve.samples[i];
        const auto& s1 = curve.samples[i + 1];
        for (std::size_t k = 0; k < dense_per_interval; ++k) {
            const double t = static_cast<double>(k) / static_cast<double>(dense_per_interval);
            const double d = s0.depth_ev + t * (s1.depth_ev - s0.depth_ev);
            const double raw = s0.p_raw + t * (s1.p_raw - s0.p_raw);
            const double lo = s0.band_lo + t * (s1.band_lo - s0.band_lo);
            const double hi = s0.band_hi + t * (s1.band_hi - s0.band_hi);
            os << d << "," << raw << "," << std::max(0.0, spline(d)) << "," << lo << "," << hi
               << "\n";
        }
    }
    const auto& last = curve.samples.back();
    os << last.depth_ev << "," << last.p_raw << "," << last.p_raw << "," << last.band_lo << ","
       << last.band_hi << "\n";
}

} // namespace surfload
