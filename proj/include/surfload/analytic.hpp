#pragma once

#include <cmath>
#include <stdexcept>

#include "surfload/constants.hpp"
#include "surfload/field_model.hpp"
#include "surfload/source.hpp"

// Closed-form harmonic estimates of the loading probability limits and the
// optimal trap depth, for compact traps (PI beams large compared to the
// trapping region) and large traps (beams small, volume quasi-1D).

namespace surfload {

enum class TrapRegime { compact, large };

struct PLimits {
    double p_low;
    double p_high;
};

/// On-axis Mathieu |q| at the rf amplitude that produces the given rf trap
/// depth (J).  The two diagonal entries have equal magnitude at the null.
inline double q_at_depth(const TrapGeometry& geom, const DriveConfig& drive_template,
                         double depth) {
    if (depth < 0.0) throw std::invalid_argument("q_at_depth: depth must be >= 0");
    const double m = drive_template.species.mass;
    const double qe = drive_template.species.charge;
    const double z0 = rf_null_height(geom);
    const double v_rf = M_PI * z0 * drive_template.omega_rf * std::sqrt(m * depth / kappa(geom)) / qe;
    const auto [q, a] = mathieu_matrices(geom, drive_template.with_v_rf(v_rf), {0.0, z0});
    (void)a;
    return std::abs(q.zz);
}

/// Optimal rf trap depth (J) in the compact regime; independent of trap
/// geometry.
inline double e_opt_compact(const SourceModel& src, const IonSpecies& species) {
    const double vt = std::sqrt(k_boltzmann * src.temperature / species.mass);
    const double v = src.v_com + vt;
    return 0.5 * species.mass * v * v;
}

namespace detail {

/// Shared normalization: compact P_high equals one at the compact optimum.
inline double regime_norm(const SourceModel& src, const IonSpecies& species,
                          const TrapGeometry& geom, const DriveConfig& drive) {
    const double q_opt = q_at_depth(geom, drive, e_opt_compact(src, species));
    const double kt = k_boltzmann * src.temperature;
    const double p = std::sqrt(M_PI * kt / (2.0 * species.mass * src.v_com * src.v_com)) /
                     ((1.0 + q_opt) * (1.0 + q_opt));
    return 1.0 / p;
}

} // namespace detail

/// Low/high-depth limiting probabilities for a compact trap at the given
/// rf trap depth (J).  P_low vanishes below the drift-energy threshold.
inline PLimits p_limits_compact(const SourceModel& src, const IonSpecies& species,
                                const DriveConfig& drive, const TrapGeometry& geom,
                                double e_depth) {
    const double v_max = std::sqrt(2.0 * e_depth / species.mass);
    const double q = q_at_depth(geom, drive, e_depth);
    const double denom = (1.0 + q) * (1.0 + q);
    const double norm = detail::regime_norm(src, species, geom, drive);
    PLimits r;
    r.p_low = v_max > src.v_com ? norm * (v_max - src.v_com) / (src.v_com * denom) : 0.0;
    const double kt = k_boltzmann * src.temperature;
    r.p_high = norm * std::sqrt(M_PI * kt / (2.0 * species.mass * src.v_com * src.v_com)) / denom;
    return r;
}

/// Low/high-depth limiting probabilities for a large (quasi-1D) trap.
inline PLimits p_limits_large(const SourceModel& src, const IonSpecies& species,
                              const DriveConfig& drive, const TrapGeometry& geom,
                              double e_depth) {
    const double v_max = std::sqrt(2.0 * e_depth / species.mass);
    const double q = q_at_depth(geom, drive, e_depth);
    const double denom = 1.0 + q;
    const double norm = detail::regime_norm(src, species, geom, drive);
    const double vterm = v_max > 0.0 ? 1.0 / src.v_com - 1.0 / v_max : 0.0;
    PLimits r;
    r.p_low = v_max > src.v_com ? norm * (v_max - src.v_com) * vterm / denom : 0.0;
    const double kt = k_boltzmann * src.temperature;
    r.p_high = norm * std::sqrt(M_PI * kt / (2.0 * species.mass)) * vterm / denom;
    return r;
}

/// Optimal rf trap depth (J) in the large-trap regime: argmax of the
/// high-depth limit, with the Mathieu parameter anchored at the reference
/// depth m v0^2 / 2.
inline double e_opt_large(const SourceModel& src, const IonSpecies& species,
                          const TrapGeometry& geom, const DriveConfig& drive) {
    const double e_ref = 0.5 * species.mass * src.v_com * src.v_com;
    const double q0 = q_at_depth(geom, drive, e_ref);
    if (!(q0 > 0.0)) throw std::invalid_argument("e_opt_large: Q0 must be positive");
    const double bracket = 1.0 + std::sqrt(1.0 + 1.0 / q0);
    return e_ref * bracket * bracket;
}

/// Ratio of the trappable-atom energy scale to the plume temperature.  The
/// harmonic limits assume this is small; callers report, not enforce.
inline double hot_plume_ratio(const SourceModel& src, const IonSpecies& species, double e_depth) {
    const double v_max = std::sqrt(2.0 * std::max(0.0, e_depth) / species.mass);
    const double dv = v_max - src.v_com;
    return 0.5 * species.mass * dv * dv / (k_boltzmann * src.temperature);
}

struct RegimeEstimate {
    TrapRegime regime;
    double e_opt;  // J
};

inline RegimeEstimate regime_estimate(TrapRegime regime, const SourceModel& src,
                                      const IonSpecies& species, const TrapGeometry& geom,
                                      const DriveConfig& drive) {
    return {regime, regime == TrapRegime::compact ? e_opt_compact(src, species)
                                                  : e_opt_large(src, species, geom, drive)};
}

} // namespace surfload
