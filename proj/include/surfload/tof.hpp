#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "surfload/constants.hpp"
#include "surfload/errors.hpp"
#include "surfload/field_model.hpp"
#include "surfload/source.hpp"

// Time-of-flight forward model for fluorescence of an ablated thermal
// plume crossing a probe beam, and the inverse fit extracting the plume
// temperature and drift speed from a measured arrival histogram.

namespace surfload {

struct TofSetup {
    double flight_distance = 11.4e-3;  // m, target to probe
    double probe_radius = 50e-6;       // m
    double bin_width = 2e-6;           // s
    double gate = 1.5e-6;              // s, photon collection window

    TofSetup() = default;
    TofSetup(double l, double r, double bin, double g)
        : flight_distance(l), probe_radius(r), bin_width(bin), gate(g) {
        if (!(l > 0.0) || !(r > 0.0) || !(bin > 0.0) || !(g > 0.0))
            throw std::invalid_argument("TofSetup: all parameters must be positive");
    }
};

struct TofHistogram {
    std::vector<double> bin_centers;  // s, uniform
    std::vector<double> counts;
};

/// Thermal plume speed density, unnormalized.
inline double speed_density(const SourceModel& src, const IonSpecies& species, double v) {
    const double dv = v - src.v_com;
    return std::exp(-species.mass * dv * dv / (2.0 * k_boltzmann * src.temperature));
}

/// Arrival-time density of the plume at the probe: speed density mapped
/// through t = L/v with the |dv/dt| = L/t^2 Jacobian.  Unweighted, i.e.
/// proportional to atom flux, not detected photons.
inline double arrival_density(const SourceModel& src, const IonSpecies& species,
                              const TofSetup& setup, double t) {
    if (!(t > 0.0)) return 0.0;
    const double l = setup.flight_distance;
    return speed_density(src, species, l / t) * l / (t * t);
}

/// Detected-signal density: slow atoms scatter in proportion to their
/// transit time through the probe, weighting the arrival density by 1/v.
inline double signal_density(const SourceModel& src, const IonSpecies& species,
                             const TofSetup& setup, double t) {
    if (!(t > 0.0)) return 0.0;
    return arrival_density(src, species, setup, t) * t / setup.flight_distance;
}

/// Forward histogram on the given bin centers: signal density convolved
/// with the boxcar collection gate, normalized to unit peak.
inline TofHistogram tof_forward(const SourceModel& src, const IonSpecies& species,
                                const TofSetup& setup, const std::vector<double>& bin_centers) {
    if (bin_centers.empty()) throw std::invalid_argument("tof_forward: no bins");
    TofHistogram hist;
    hist.bin_centers = bin_centers;
    hist.counts.resize(bin_centers.size());
    const int gate_samples = 8;
    for (std::size_t i = 0; i < bin_centers.size(); ++i) {
        double acc = 0.0;
        for (int k = 0; k < gate_samples; ++k) {
            const double dt =
                setup.gate * ((static_cast<double>(k) + 0.5) / gate_samples - 0.5);
            acc += signal_density(src, species, setup, bin_centers[i] + dt);
        }
        hist.counts[i] = acc / gate_samples;
    }
    const double peak = *std::max_element(hist.counts.begin(), hist.counts.end());
    if (peak > 0.0)
        for (auto& c : hist.counts) c /= peak;
    return hist;
}

/// Convenience forward histogram spanning (0, t_max] at the setup's bin
/// width.
inline TofHistogram tof_forward(const SourceModel& src, const IonSpecies& species,
                                const TofSetup& setup, double t_max) {
    std::vector<double> centers;
    for (double t = 0.5 * setup.bin_width; t <= t_max; t += setup.bin_width)
        centers.push_back(t);
    return tof_forward(src, species, setup, centers);
}

namespace detail {

/// Nelder-Mead simplex minimizer; returns the best point found.
inline std::vector<double> nelder_mead(const std::function<double(const std::vector<double>&)>& f,
                                       std::vector<double> start, double step,
                                       std::size_t max_iter, double tol) {
    const std::size_t n = start.size();
    std::vector<std::vector<double>> pts(n + 1, start);
    for (std::size_t i = 0; i < n; ++i) pts[i + 1][i] += step * (std::abs(start[i]) + 1.0);
    std::vector<double> vals(n + 1);
    for (std::size_t i = 0; i <= n; ++i) vals[i] = f(pts[i]);
    double f_scale = tol;
    for (std::size_t i = 0; i <= n; ++i) f_scale = std::max(f_scale, std::abs(vals[i]));

    for (std::size_t iter = 0; iter < max_iter; ++iter) {
        std::vector<std::size_t> order(n + 1);
        for (std::size_t i = 0; i <= n; ++i) order[i] = i;
        std::sort(order.begin(), order.end(),
                  [&](std::size_t a, std::size_t b) { return vals[a] < vals[b]; });
        // stop once the value spread is negligible against both the current
        // minimum and the problem scale set by the initial simplex; data
        // noise keeps the minimum itself from reaching zero
        if (std::abs(vals[order.back()] - vals[order.front()]) <=
            tol * (std::abs(vals[order.front()]) + f_scale))
            return pts[order.front()];

        std::vector<double> centroid(n, 0.0);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t d = 0; d < n; ++d) centroid[d] += pts[order[i]][d] / n;
        const std::size_t worst = order.back();

        const auto blend = [&](double alpha) {
            std::vector<double> p(n);
            for (std::size_t d = 0; d < n; ++d)
                p[d] = centroid[d] + alpha * (pts[worst][d] - centroid[d]);
            return p;
        };
        auto refl = blend(-1.0);
        const double f_refl = f(refl);
        if (f_refl < vals[order.front()]) {
            auto exp_p = blend(-2.0);
            const double f_exp = f(exp_p);
            pts[worst] = f_exp < f_refl ? exp_p : refl;
            vals[worst] = std::min(f_exp, f_refl);
        } else if (f_refl < vals[order[n - 1]]) {
            pts[worst] = refl;
            vals[worst] = f_refl;
        } else {
            auto con = blend(0.5);
            const double f_con = f(con);
            if (f_con < vals[worst]) {
                pts[worst] = con;
                vals[worst] = f_con;
            } else {
                for (std::size_t i = 1; i <= n; ++i) {
                    for (std::size_t d = 0; d < n; ++d)
                        pts[order[i]][d] = 0.5 * (pts[order[i]][d] + pts[order[0]][d]);
                    vals[order[i]] = f(pts[order[i]]);
                }
            }
        }
    }
    throw fit_error("nelder_mead: no convergence within iteration budget");
}

} // namespace detail

/// Least-squares fit of (T, v0, amplitude) of the forward model to a
/// measured histogram; the plume radius is passed through unchanged.
/// Set components = 2 for a two-mode plume (compound targets).
inline SourceModel tof_fit(const TofHistogram& hist, const TofSetup& setup,
                           const IonSpecies& species, const SourceModel& initial,
                           int components = 1) {
    std::size_t nonempty = 0;
    for (double c : hist.counts) nonempty += c > 0.0;
    if (nonempty < 10) throw std::invalid_argument("tof_fit: need >= 10 non-empty bins");
    if (components != 1 && components != 2)
        throw std::invalid_argument("tof_fit: components must be 1 or 2");

    const auto model_counts = [&](double t_k, double v0, double amp,
                                  std::vector<double>& out) {
        const SourceModel s{t_k, v0, initial.w_a};
        const TofHistogram m = tof_forward(s, species, setup, hist.bin_centers);
        for (std::size_t i = 0; i < out.size(); ++i) out[i] += amp * m.counts[i];
    };

    const double peak = *std::max_element(hist.counts.begin(), hist.counts.end());
    const auto sse = [&](const std::vector<double>& p) {
        std::vector<double> model(hist.counts.size(), 0.0);
        for (int c = 0; c < components; ++c) {
            const double t_k = std::exp(p[3 * c + 0]);
            const double v0 = p[3 * c + 1];
            const double amp = std::exp(p[3 * c + 2]);
            if (v0 < 0.0) return 1e300;
            model_counts(t_k, v0, amp, model);
        }
        double acc = 0.0;
        for (std::size_t i = 0; i < hist.counts.size(); ++i) {
            const double r = model[i] - hist.counts[i];
            acc += r * r;
        }
        return acc;
    };

    std::vector<double> start{std::log(initial.temperature), initial.v_com, std::log(peak)};
    if (components == 2) {
        // second mode seeded hotter and faster
        start.insert(start.end(),
                     {std::log(10.0 * initial.temperature), 4.0 * initial.v_com + 100.0,
                      std::log(0.5 * peak)});
    }
    const auto best = detail::nelder_mead(sse, start, 0.15, 4000, 1e-12);
    // dominant component = larger amplitude
    int pick = 0;
    if (components == 2 && best[5] > best[2]) pick = 1;
    return {std::exp(best[3 * pick + 0]), best[3 * pick + 1], initial.w_a};
}

} // namespace surfload
