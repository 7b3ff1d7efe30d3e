#pragma once

namespace surfload {

inline constexpr double k_boltzmann = 1.380649e-23;       // J/K
inline constexpr double elementary_charge = 1.602176634e-19;  // C
inline constexpr double atomic_mass_unit = 1.66053906660e-27; // kg

/// Convert an energy in joules to electron volts.
inline constexpr double to_ev(double joules) { return joules / elementary_charge; }
inline constexpr double from_ev(double ev) { return ev * elementary_charge; }

} // namespace surfload
