#pragma once

#include <stdexcept>

namespace surfload {

/// Ablation plume: simplified thermal source with a drift velocity.
struct SourceModel {
    double temperature;  // K
    double v_com;        // m/s, center-of-mass speed
    double w_a;          // m, plume radius

    SourceModel(double t, double v0, double wa) : temperature(t), v_com(v0), w_a(wa) {
        if (!(t > 0.0)) throw std::invalid_argument("SourceModel: temperature must be positive");
        if (v0 < 0.0) throw std::invalid_argument("SourceModel: v_com must be >= 0");
        if (!(wa > 0.0)) throw std::invalid_argument("SourceModel: plume radius must be positive");
    }
};

/// Photo-ionization beams: saturated first stage, linear second stage.
struct PIBeams {
    double w0;       // m, 1/e^2 waist radius
    double gamma1;   // rad/s, saturated first-stage linewidth
    double i2;       // W/m^2, second-stage intensity

    PIBeams(double waist, double g1, double intensity) : w0(waist), gamma1(g1), i2(intensity) {
        if (!(waist > 0.0) || !(g1 > 0.0) || !(intensity > 0.0))
            throw std::invalid_argument("PIBeams: all parameters must be positive");
    }
};

} // namespace surfload
