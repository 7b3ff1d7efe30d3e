#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "surfload/constants.hpp"
#include "surfload/field_model.hpp"

using namespace surfload;

namespace {

const TrapGeometry pcb{840e-6, 840e-6};
const TrapGeometry microfab{34e-6, 127e-6};

DriveConfig pcb_drive(double v = 580.0) {
    return {v, 2.0 * M_PI * 7.1e6, 2.0 * M_PI * 100e3, IonSpecies::ba138()};
}

DriveConfig microfab_drive(double v = 100.0) {
    return {v, 2.0 * M_PI * 40e6, 2.0 * M_PI * 500e3, IonSpecies::ba138()};
}

} // namespace

TEST_CASE("null and escape heights, closed forms") {
    // z0 = sqrt(a(a+2b))/2, z_esc = sqrt(z0 (a+b+z0)); a = b collapses to
    // z0 = a sqrt(3)/2, checked independently of the implementation.
    const double a = 840e-6;
    CHECK(rf_null_height(pcb) == Catch::Approx(a * std::sqrt(3.0) / 2.0).epsilon(1e-12));
    CHECK(rf_null_height(pcb) == Catch::Approx(727.46e-6).epsilon(1e-3));
    CHECK(escape_height(pcb) == Catch::Approx(1323e-6).epsilon(1e-3));
    CHECK(rf_null_height(microfab) == Catch::Approx(49.477e-6).epsilon(1e-3));
    CHECK(escape_height(microfab) == Catch::Approx(102.05e-6).epsilon(1e-3));
}

TEST_CASE("geometric depth factor") {
    CHECK(kappa(pcb) == Catch::Approx(0.013465).epsilon(1e-3));
    CHECK(kappa(microfab) == Catch::Approx(0.022543).epsilon(1e-3));
    // kappa is scale-invariant
    const TrapGeometry scaled{pcb.a * 7.3, pcb.b * 7.3};
    CHECK(kappa(scaled) == Catch::Approx(kappa(pcb)).epsilon(1e-12));
}

TEST_CASE("strip potential derivatives match finite differences") {
    std::mt19937 rng(12345);
    std::uniform_real_distribution<double> ux(-2e-3, 2e-3);
    std::uniform_real_distribution<double> uz(50e-6, 3e-3);
    const double v_rf = 580.0;
    const double eps = 1e-9;

    for (int i = 0; i < 1000; ++i) {
        const double x = ux(rng), z = uz(rng);
        const auto s = strip_potential(pcb, v_rf, {x, z});
        const auto px = strip_potential(pcb, v_rf, {x + eps, z});
        const auto mx = strip_potential(pcb, v_rf, {x - eps, z});
        const auto pz = strip_potential(pcb, v_rf, {x, z + eps});
        const auto mz = strip_potential(pcb, v_rf, {x, z - eps});

        const double scale = v_rf / rf_null_height(pcb);  // typical gradient magnitude
        CHECK(std::abs((px.phi - mx.phi) / (2 * eps) - s.grad.x) < 1e-4 * scale);
        CHECK(std::abs((pz.phi - mz.phi) / (2 * eps) - s.grad.z) < 1e-4 * scale);
        const double hscale = scale / rf_null_height(pcb);
        CHECK(std::abs((px.grad.x - mx.grad.x) / (2 * eps) - s.hess.xx) < 1e-4 * hscale);
        CHECK(std::abs((pz.grad.z - mz.grad.z) / (2 * eps) - s.hess.zz) < 1e-4 * hscale);
        CHECK(std::abs((pz.grad.x - mz.grad.x) / (2 * eps) - s.hess.xz) < 1e-4 * hscale);
        // mixed partials commute
        CHECK(std::abs((px.grad.z - mx.grad.z) / (2 * eps) - s.hess.xz) < 1e-4 * hscale);
    }
}

TEST_CASE("potential harmonic above the plane") {
    // Laplace in 2D translational symmetry: phi_xx + phi_zz = 0.
    std::mt19937 rng(777);
    std::uniform_real_distribution<double> ux(-2e-3, 2e-3);
    std::uniform_real_distribution<double> uz(20e-6, 3e-3);
    for (int i = 0; i < 200; ++i) {
        const auto s = strip_potential(pcb, 580.0, {ux(rng), uz(rng)});
        const double mag = std::abs(s.hess.xx) + std::abs(s.hess.zz) + 1.0;
        CHECK(std::abs(s.hess.xx + s.hess.zz) < 1e-9 * mag);
    }
}

TEST_CASE("mirror symmetry in x") {
    const auto sp = strip_potential(microfab, 100.0, {21e-6, 60e-6});
    const auto sm = strip_potential(microfab, 100.0, {-21e-6, 60e-6});
    CHECK(sp.phi == Catch::Approx(sm.phi).epsilon(1e-12));
    CHECK(sp.grad.x == Catch::Approx(-sm.grad.x).epsilon(1e-12));
    CHECK(sp.grad.z == Catch::Approx(sm.grad.z).epsilon(1e-12));
}

TEST_CASE("potential rejects the electrode plane") {
    CHECK_THROWS_AS(strip_potential(pcb, 580.0, {0.0, 0.0}), std::domain_error);
    CHECK_THROWS_AS(strip_potential(pcb, 580.0, {0.0, -1e-6}), std::domain_error);
}

TEST_CASE("field vanishes at the rf null") {
    for (const auto& g : {pcb, microfab}) {
        const auto s = strip_potential(g, 100.0, {0.0, rf_null_height(g)});
        const double scale = 100.0 / rf_null_height(g);
        CHECK(std::abs(s.grad.x) < 1e-9 * scale);
        CHECK(std::abs(s.grad.z) < 1e-9 * scale);
    }
}

TEST_CASE("rf depth closed form vs field evaluation at the saddle") {
    // Independent oracle: the pseudopotential evaluated at (0, z_esc)
    // must agree with the closed form within 1%.
    for (const auto& [g, d] : {std::pair{pcb, pcb_drive()}, std::pair{microfab, microfab_drive()}}) {
        const double closed = rf_trap_depth(g, d);
        const double sampled = pseudopotential(g, d, {0.0, escape_height(g)});
        CHECK(sampled == Catch::Approx(closed).epsilon(0.01));
    }
}

TEST_CASE("reference depths") {
    CHECK(to_ev(rf_trap_depth(pcb, pcb_drive(580.0))) == Catch::Approx(0.31).epsilon(0.05));
    CHECK(to_ev(rf_trap_depth(microfab, microfab_drive(100.0))) ==
          Catch::Approx(0.103).epsilon(0.02));
    // depth scales as V^2
    const double d1 = rf_trap_depth(pcb, pcb_drive(300.0));
    const double d2 = rf_trap_depth(pcb, pcb_drive(600.0));
    CHECK(d2 == Catch::Approx(4.0 * d1).epsilon(1e-12));
}

TEST_CASE("true depth subtracts the axial defocusing term") {
    const auto d = microfab_drive(100.0);
    const double zesc = escape_height(microfab);
    const double dc = 0.25 * d.species.mass * d.omega_ax * d.omega_ax * zesc * zesc;
    CHECK(true_trap_depth(microfab, d) ==
          Catch::Approx(rf_trap_depth(microfab, d) - dc).epsilon(1e-12));
    CHECK(true_trap_depth(microfab, d) > 0.0);
}

TEST_CASE("threshold voltage marks the zero of the true depth") {
    for (const auto& [g, d] : {std::pair{pcb, pcb_drive()}, std::pair{microfab, microfab_drive()}}) {
        const double vth = threshold_voltage(g, d);
        CHECK(std::abs(true_trap_depth(g, d.with_v_rf(vth))) < 1e-6 * rf_trap_depth(g, d));
        CHECK(true_trap_depth(g, d.with_v_rf(1.01 * vth)) > 0.0);
        CHECK(true_trap_depth(g, d.with_v_rf(0.99 * vth)) < 0.0);
    }
    const DriveConfig no_ax{100.0, 2.0 * M_PI * 40e6, 0.0, IonSpecies::ba138()};
    CHECK(threshold_voltage(microfab, no_ax) == 0.0);
}

TEST_CASE("total potential vanishes at the null and decomposes") {
    const auto d = pcb_drive();
    const auto u0 = total_potential(pcb, d, {0.0, rf_null_height(pcb)});
    CHECK(std::abs(u0.u_tot) < 1e-9 * rf_trap_depth(pcb, d));
    const auto u = total_potential(pcb, d, {100e-6, 600e-6});
    CHECK(u.u_tot == Catch::Approx(u.u_ps + u.u_dc).epsilon(1e-12));
    CHECK(u.u_dc <= 0.0);
}

TEST_CASE("Mathieu matrices at the null") {
    const auto d = microfab_drive();
    const auto [q, a] = mathieu_matrices(microfab, d, {0.0, rf_null_height(microfab)});
    // rf Hessian at the null is traceless and diagonal
    CHECK(std::abs(q.xx + q.zz) < 1e-9 * std::abs(q.zz));
    CHECK(std::abs(q.xz) < 1e-9 * std::abs(q.zz));
    CHECK(a.xx == a.zz);
    CHECK(a.xx == Catch::Approx(-2.0 * d.omega_ax * d.omega_ax /
                                (d.omega_rf * d.omega_rf)).epsilon(1e-12));
    // q linear in V_rf
    const auto [q2, a2] = mathieu_matrices(microfab, d.with_v_rf(200.0),
                                           {0.0, rf_null_height(microfab)});
    (void)a2;
    CHECK(q2.zz == Catch::Approx(2.0 * q.zz).epsilon(1e-12));
}

TEST_CASE("secular frequencies and their inversion") {
    const auto d = microfab_drive(70.0);
    const auto sec = secular_frequencies(microfab, d);
    CHECK(sec.f_axial == Catch::Approx(500e3).epsilon(1e-9));
    CHECK(sec.f_radial > 1.9e6);
    CHECK(sec.f_radial < 3.3e6);

    const DriveConfig back = vrf_from_secular(microfab, sec.f_radial, sec.f_axial,
                                              d.omega_rf, d.species);
    CHECK(back.v_rf == Catch::Approx(70.0).epsilon(1e-6));

    CHECK_THROWS_AS(vrf_from_secular(microfab, 0.0, 1e6, d.omega_rf, d.species),
                    std::invalid_argument);
}

TEST_CASE("argument validation") {
    CHECK_THROWS_AS(TrapGeometry(0.0, 1e-4), std::invalid_argument);
    CHECK_THROWS_AS(TrapGeometry(1e-4, -1.0), std::invalid_argument);
    CHECK_THROWS_AS(DriveConfig(-1.0, 1.0, 1.0, IonSpecies::ba138()), std::invalid_argument);
    CHECK_THROWS_AS(DriveConfig(1.0, 0.0, 1.0, IonSpecies::ba138()), std::invalid_argument);
    CHECK_THROWS_AS(IonSpecies(0.0, 1.0), std::invalid_argument);
}
