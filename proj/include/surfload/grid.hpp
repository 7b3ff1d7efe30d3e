#pragma once

#include <cstddef>
#include <cstdint>
#include <ostream>
#include <stdexcept>
#include <vector>

#include "surfload/field_model.hpp"

namespace surfload {

/// Uniform cell grid over a rectangle of the radial xz plane.  Cells are
/// h-by-h squares addressed by (ix, iz); cell centers sit at half-integer
/// multiples of h from the domain corner.
struct GridSpec {
    double x_min, x_max;  // m
    double z_min, z_max;  // m, z_min must be above the electrode plane
    double h;             // m

    GridSpec(double x0, double x1, double z0, double z1, double spacing)
        : x_min(x0), x_max(x1), z_min(z0), z_max(z1), h(spacing) {
        if (!(h > 0.0)) throw std::invalid_argument("GridSpec: spacing must be positive");
        if (!(z_min > 0.0)) throw std::invalid_argument("GridSpec: z range must be above the electrode plane");
        if (!(x_max > x_min) || !(z_max > z_min))
            throw std::invalid_argument("GridSpec: empty domain");
    }

    std::size_t nx() const { return static_cast<std::size_t>((x_max - x_min) / h); }
    std::size_t nz() const { return static_cast<std::size_t>((z_max - z_min) / h); }

    double x_of(std::size_t ix) const { return x_min + (static_cast<double>(ix) + 0.5) * h; }
    double z_of(std::size_t iz) const { return z_min + (static_cast<double>(iz) + 0.5) * h; }

    bool contains(double x, double z) const {
        return x >= x_min && x < x_max && z >= z_min && z < z_max;
    }

    std::size_t ix_of(double x) const { return static_cast<std::size_t>((x - x_min) / h); }
    std::size_t iz_of(double z) const { return static_cast<std::size_t>((z - z_min) / h); }

    /// Default domain for a trap: x spanning +-2 z_esc, z from one cell
    /// above the surface to 3 z_esc, spacing z0/200.  The x range is kept
    /// symmetric in whole cells so the grid mirrors exactly about x = 0.
    static GridSpec for_trap(const TrapGeometry& g, double spacing = 0.0) {
        const double z0 = rf_null_height(g);
        const double zesc = escape_height(g);
        const double h = spacing > 0.0 ? spacing : z0 / 200.0;
        const auto half_cells = static_cast<double>(static_cast<std::size_t>(2.0 * zesc / h) + 1);
        return {-half_cells * h, half_cells * h, h, 3.0 * zesc, h};
    }
};

enum class VolumeStage : std::uint8_t { bare, ke, ke_pi, ke_pi_mm };

inline const char* stage_name(VolumeStage s) {
    switch (s) {
        case VolumeStage::bare: return "bare";
        case VolumeStage::ke: return "ke";
        case VolumeStage::ke_pi: return "ke_pi";
        case VolumeStage::ke_pi_mm: return "ke_pi_mm";
    }
    return "?";
}

/// Boolean occupancy over a GridSpec with its cross-sectional area.
struct VolumeMask {
    GridSpec grid;
    VolumeStage stage = VolumeStage::bare;
    std::vector<std::uint8_t> cells;  // nx * nz, row-major in z

    explicit VolumeMask(const GridSpec& g, VolumeStage s = VolumeStage::bare)
        : grid(g), stage(s), cells(g.nx() * g.nz(), 0) {}

    std::size_t index(std::size_t ix, std::size_t iz) const { return iz * grid.nx() + ix; }
    bool at(std::size_t ix, std::size_t iz) const { return cells[index(ix, iz)] != 0; }
    void set(std::size_t ix, std::size_t iz, bool v = true) { cells[index(ix, iz)] = v ? 1 : 0; }

    bool covers(double x, double z) const {
        if (!grid.contains(x, z)) return false;
        return at(grid.ix_of(x), grid.iz_of(z));
    }

    std::size_t count() const {
        std::size_t n = 0;
        for (auto c : cells) n += c;
        return n;
    }

    /// Occupied-cell count times h^2, in m^2.
    double area() const { return static_cast<double>(count()) * grid.h * grid.h; }

    /// Portable-bitmap-style text grid (P1), top row = largest z.
    void write_pbm(std::ostream& os) const {
        const std::size_t nx = grid.nx(), nz = grid.nz();
        os << "P1\n# stage " << stage_name(stage) << " h " << grid.h << "\n"
           << nx << " " << nz << "\n";
        for (std::size_t iz = nz; iz-- > 0;) {
            for (std::size_t ix = 0; ix < nx; ++ix)
                os << (at(ix, iz) ? '1' : '0') << (ix + 1 == nx ? '\n' : ' ');
        }
    }

    /// CSV of occupied cell-center coordinates.
    void write_csv(std::ostream& os) const {
        os << "x_m,z_m\n";
        for (std::size_t iz = 0; iz < grid.nz(); ++iz)
            for (std::size_t ix = 0; ix < grid.nx(); ++ix)
                if (at(ix, iz)) os << grid.x_of(ix) << "," << grid.z_of(iz) << "\n";
    }
};

} // namespace surfload
