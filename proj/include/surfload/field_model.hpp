#pragma once

#include <cmath>
#include <stdexcept>
#include <string>

#include "surfload/constants.hpp"

// Closed-form potentials and derived drive quantities of the symmetric
// five-wire surface-electrode trap.  The two rf strips are modeled as
// gap-free regions held at V_rf in an infinite grounded plane; everything
// here follows from the arctangent potential of such a strip.
//
// Conventions: the rf electric-potential amplitude is in volts, all
// potential energies are in joules.  Points live in the radial xz plane
// with z measured above the electrode plane.

namespace surfload {

struct Vec2 {
    double x = 0.0;
    double z = 0.0;
};

/// Symmetric 2x2 matrix (xx, xz, zz).
struct Sym2 {
    double xx = 0.0;
    double xz = 0.0;
    double zz = 0.0;

    Vec2 mul(const Vec2& v) const { return {xx * v.x + xz * v.z, xz * v.x + zz * v.z}; }
    double trace() const { return xx + zz; }
};

struct IonSpecies {
    double mass;       // kg
    double charge;     // C
    std::string name;  // tag used by config lookups

    IonSpecies(double m, double q, std::string n = "custom") : mass(m), charge(q), name(std::move(n)) {
        if (m <= 0.0 || q <= 0.0)
            throw std::invalid_argument("IonSpecies: mass and charge must be positive");
    }

    static IonSpecies ba138() { return {138.0 * atomic_mass_unit, elementary_charge, "ba138"}; }
    static IonSpecies sr88() { return {88.0 * atomic_mass_unit, elementary_charge, "sr88"}; }
};

struct TrapGeometry {
    double a;  // m, inner separation of the rf strips
    double b;  // m, rf strip width

    TrapGeometry(double a_, double b_) : a(a_), b(b_) {
        if (!(a > 0.0) || !(b > 0.0))
            throw std::invalid_argument("TrapGeometry: a and b must be positive");
    }
};

struct DriveConfig {
    double v_rf;       // V, rf amplitude
    double omega_rf;   // rad/s
    double omega_ax;   // rad/s, axial secular angular frequency
    IonSpecies species;

    DriveConfig(double v, double om_rf, double om_ax, IonSpecies sp)
        : v_rf(v), omega_rf(om_rf), omega_ax(om_ax), species(sp) {
        if (v_rf < 0.0) throw std::invalid_argument("DriveConfig: V_rf must be >= 0");
        if (!(omega_rf > 0.0)) throw std::invalid_argument("DriveConfig: Omega_rf must be > 0");
        if (omega_ax < 0.0) throw std::invalid_argument("DriveConfig: omega_ax must be >= 0");
    }

    DriveConfig with_v_rf(double v) const { return {v, omega_rf, omega_ax, species}; }
};

struct RadialPoint {
    double x;  // m
    double z;  // m, must be > 0 for field evaluations
};

/// rf electric-potential amplitude and its exact derivatives at a point.
struct FieldSample {
    double phi;  // V
    Vec2 grad;   // V/m
    Sym2 hess;   // V/m^2
};

struct PotentialDecomposition {
    double u_ps;   // J, pseudopotential energy
    double u_dc;   // J, DC radial term
    double u_tot;  // J
};

/// Thrown when secular motion is undefined (negative radicand) or a
/// frequency inversion has no stable solution.
struct instability_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Height of the rf null above the electrode plane.
inline double rf_null_height(const TrapGeometry& g) {
    return 0.5 * std::sqrt(g.a * (g.a + 2.0 * g.b));
}

/// Height of the escape saddle point.
inline double escape_height(const TrapGeometry& g) {
    const double z0 = rf_null_height(g);
    return std::sqrt(z0 * (g.a + g.b + z0));
}

/// Dimensionless geometric depth factor of the five-wire trap.
inline double kappa(const TrapGeometry& g) {
    const double a = g.a, b = g.b;
    const double s = std::sqrt(a * (a + 2.0 * b));
    const double d = (a + b) * (a + b + s);
    return a * b * b * (a + 2.0 * b) / (4.0 * d * d);
}

namespace detail {

// One strip edge at x = e contributes atan((e-x)/z)/pi to the unit-amplitude
// potential; the derivatives below are exact.
struct EdgeTerms {
    double f, fx, fz, fxx, fxz, fzz;
};

inline EdgeTerms edge_terms(double e, double x, double z) {
    const double u = e - x;
    const double d = z * z + u * u;
    const double d2 = d * d;
    EdgeTerms t;
    t.f = std::atan2(u, z);
    t.fx = -z / d;
    t.fz = -u / d;
    t.fxx = -2.0 * z * u / d2;
    t.fxz = (z * z - u * u) / d2;
    t.fzz = 2.0 * z * u / d2;
    return t;
}

} // namespace detail

/// Superposed potential of the two rf strips [a/2, a/2+b] and
/// [-a/2-b, -a/2] held at v_rf in a grounded plane, with analytic
/// gradient and Hessian.  Only defined above the plane (z > 0).
inline FieldSample strip_potential(const TrapGeometry& g, double v_rf, const RadialPoint& p) {
    if (!(p.z > 0.0))
        throw std::domain_error("strip_potential: z must be positive");
    const double inner = 0.5 * g.a;
    const double outer = 0.5 * g.a + g.b;
    // Each strip is the difference of its two edge terms.
    const auto r2 = detail::edge_terms(outer, p.x, p.z);
    const auto r1 = detail::edge_terms(inner, p.x, p.z);
    const auto l2 = detail::edge_terms(-inner, p.x, p.z);
    const auto l1 = detail::edge_terms(-outer, p.x, p.z);
    const double c = v_rf / M_PI;
    FieldSample s;
    s.phi = c * ((r2.f - r1.f) + (l2.f - l1.f));
    s.grad.x = c * ((r2.fx - r1.fx) + (l2.fx - l1.fx));
    s.grad.z = c * ((r2.fz - r1.fz) + (l2.fz - l1.fz));
    s.hess.xx = c * ((r2.fxx - r1.fxx) + (l2.fxx - l1.fxx));
    s.hess.xz = c * ((r2.fxz - r1.fxz) + (l2.fxz - l1.fxz));
    s.hess.zz = c * ((r2.fzz - r1.fzz) + (l2.fzz - l1.fzz));
    return s;
}

/// rf-only trap depth: pseudopotential at the escape saddle.
inline double rf_trap_depth(const TrapGeometry& g, const DriveConfig& d) {
    const double z0 = rf_null_height(g);
    const double q = d.species.charge;
    const double m = d.species.mass;
    return q * q * d.v_rf * d.v_rf * kappa(g) /
           (M_PI * M_PI * m * d.omega_rf * d.omega_rf * z0 * z0);
}

/// Full depth at the escape point including the DC defocusing term.
/// Negative means the trap cannot hold an ion at rest.
inline double true_trap_depth(const TrapGeometry& g, const DriveConfig& d) {
    const double zesc = escape_height(g);
    return rf_trap_depth(g, d) - 0.25 * d.species.mass * d.omega_ax * d.omega_ax * zesc * zesc;
}

/// Minimum rf amplitude for a positive true depth at the given axial
/// confinement.  Zero axial confinement means any amplitude traps.
inline double threshold_voltage(const TrapGeometry& g, const DriveConfig& d) {
    if (d.omega_ax == 0.0) return 0.0;
    const double m = d.species.mass;
    return M_PI * m * d.omega_rf * d.omega_ax * rf_null_height(g) * escape_height(g) /
           (2.0 * d.species.charge * std::sqrt(kappa(g)));
}

/// Time-averaged pseudopotential energy q^2 |grad phi|^2 / (4 m Omega^2).
inline double pseudopotential(const TrapGeometry& g, const DriveConfig& d, const RadialPoint& p) {
    const FieldSample s = strip_potential(g, d.v_rf, p);
    const double g2 = s.grad.x * s.grad.x + s.grad.z * s.grad.z;
    const double q = d.species.charge;
    return q * q * g2 / (4.0 * d.species.mass * d.omega_rf * d.omega_rf);
}

/// Pseudopotential plus the harmonic DC radial term, with the DC
/// quadrupole centered on the rf null so that the total vanishes there.
inline PotentialDecomposition total_potential(const TrapGeometry& g, const DriveConfig& d,
                                              const RadialPoint& p) {
    PotentialDecomposition u;
    u.u_ps = pseudopotential(g, d, p);
    const double dz = p.z - rf_null_height(g);
    u.u_dc = -0.25 * d.species.mass * d.omega_ax * d.omega_ax * (p.x * p.x + dz * dz);
    u.u_tot = u.u_ps + u.u_dc;
    return u;
}

/// Dimensionless Mathieu curvature matrices at a point.  Q comes from the
/// rf potential amplitude, A from the harmonic DC term (diagonal,
/// -2 omega_ax^2 / Omega_rf^2 per radial axis).
inline std::pair<Sym2, Sym2> mathieu_matrices(const TrapGeometry& g, const DriveConfig& d,
                                              const RadialPoint& p) {
    const FieldSample s = strip_potential(g, d.v_rf, p);
    const double cq = 2.0 * d.species.charge / (d.species.mass * d.omega_rf * d.omega_rf);
    Sym2 q{cq * s.hess.xx, cq * s.hess.xz, cq * s.hess.zz};
    const double a_diag = -2.0 * d.omega_ax * d.omega_ax / (d.omega_rf * d.omega_rf);
    Sym2 a{a_diag, 0.0, a_diag};
    return {q, a};
}

struct SecularFrequencies {
    double f_radial;  // Hz
    double f_axial;   // Hz
};

namespace detail {

/// Secular frequency from a diagonal Mathieu pair, f = (Omega/4 sqrt(2) pi) sqrt(q^2 + a).
inline double secular_from_qa(double q, double a, double omega_rf) {
    const double r = q * q + a;
    if (r < 0.0)
        throw instability_error("secular frequency undefined: q^2 + a = " + std::to_string(r));
    return omega_rf / (4.0 * std::sqrt(2.0) * M_PI) * std::sqrt(r);
}

} // namespace detail

/// Secular frequencies at the rf null.  The two radial axes are degenerate
/// in |q| here (the rf Hessian is traceless and diagonal at the null).
inline SecularFrequencies secular_frequencies(const TrapGeometry& g, const DriveConfig& d) {
    const auto [q, a] = mathieu_matrices(g, d, {0.0, rf_null_height(g)});
    const double f_r = detail::secular_from_qa(q.zz, a.zz, d.omega_rf);
    return {f_r, d.omega_ax / (2.0 * M_PI)};
}

/// Invert measured secular frequencies to a drive configuration.
/// f_axial fixes omega_ax directly; f_radial then fixes |q| and hence V_rf.
inline DriveConfig vrf_from_secular(const TrapGeometry& g, double f_radial, double f_axial,
                                    double omega_rf, const IonSpecies& species) {
    if (!(f_radial > 0.0) || !(f_axial > 0.0))
        throw std::invalid_argument("vrf_from_secular: frequencies must be positive");
    const double omega_ax = 2.0 * M_PI * f_axial;
    const double a_diag = -2.0 * omega_ax * omega_ax / (omega_rf * omega_rf);
    const double s = 4.0 * std::sqrt(2.0) * M_PI * f_radial / omega_rf;
    const double q2 = s * s - a_diag;
    if (q2 <= 0.0)
        throw instability_error("vrf_from_secular: no stable inversion for given frequencies");
    // |q| is linear in V_rf; take the per-volt curvature at the null.
    const DriveConfig unit{1.0, omega_rf, omega_ax, species};
    const auto [q_unit, a_unused] = mathieu_matrices(g, unit, {0.0, rf_null_height(g)});
    (void)a_unused;
    const double q_per_volt = std::abs(q_unit.zz);
    return {std::sqrt(q2) / q_per_volt, omega_rf, omega_ax, species};
}

} // namespace surfload
