#include <catch_amalgamated.hpp>

#include "modesum/errors.hpp"
#include "modesum/oscillator.hpp"
#include "oracles.hpp"
#include "random_potentials.hpp"

#include <cmath>
#include <random>
#include <sstream>

using namespace modesum;
using namespace modesum::osc;
using Catch::Approx;

namespace {

ComplexPotential constant(cplx v, Interval R) {
    return ComplexPotential([v](double) { return v; }, R, [](double) { return 0.0; });
}

ComplexPotential quadratic_minus_one(Interval R) {
    return ComplexPotential([](double s) { return cplx(s * s - 1.0, 0.0); }, R,
                            [](double s) { return 2.0 * s; });
}

}  // namespace

TEST_CASE("integrate reproduces closed forms", "[oscillator][integrate]") {
    const double tol = 1e-10;
    SECTION("constant unit potential gives cos") {
        auto tr = integrate(constant(1.0, {0.0, M_PI}), 1.0, 0.0, tol);
        REQUIRE(tr.states.front().s == 0.0);
        REQUIRE(tr.states.back().s == M_PI);
        CHECK(std::abs(tr.states.back().T + 1.0) < tol * 10);
        for (const auto& st : tr.states) CHECK(std::abs(st.T - std::cos(st.s)) < 10 * tol);
    }
    SECTION("free particle") {
        auto tr = integrate(constant(0.0, {0.0, 3.0}), 0.0, 1.0, tol);
        for (const auto& st : tr.states) {
            CHECK(std::abs(st.T - st.s) < 1e-12);
            CHECK(std::abs(st.dT - 1.0) < 1e-12);
        }
    }
    SECTION("grid is strictly increasing and spans an interval around zero") {
        auto tr = integrate(constant(2.0, {-1.5, 2.0}), 1.0, 0.5, tol);
        REQUIRE(tr.states.front().s == -1.5);
        REQUIRE(tr.states.back().s == 2.0);
        for (std::size_t i = 1; i < tr.size(); ++i) CHECK(tr[i].s > tr[i - 1].s);
        const double w = std::sqrt(2.0);
        for (const auto& st : tr.states) {
            const double exact = std::cos(w * st.s) + 0.5 / w * std::sin(w * st.s);
            CHECK(std::abs(st.T - exact) < 20 * tol);
        }
    }
}

TEST_CASE("integrate agrees with independent high-accuracy oracles", "[oscillator][integrate]") {
    // Reference values of T(s) for Λ = s² − 1, T(0) = 1, T'(0) = 0,
    // from a 30-digit Taylor-series ODE solve.
    const double frozen_T2 = 1.4716857947175749923;
    const double frozen_dT2 = -1.4782290316372652616;
    auto pot = quadratic_minus_one({0.0, 2.0});
    auto lam = [](double s) { return cplx(s * s - 1.0, 0.0); };

    auto fehlberg = oracle::solve_oscillator(lam, 1.0, 0.0, 2.0, 1e-13);
    auto richardson = oracle::rk4_richardson(lam, 1.0, 0.0, 2.0, 4000);
    CHECK(std::abs(fehlberg[0] - frozen_T2) < 1e-11);
    CHECK(std::abs(richardson[0] - frozen_T2) < 1e-11);

    auto tr = integrate(pot, 1.0, 0.0, 1e-10);
    CHECK(std::abs(tr.states.back().T - fehlberg[0]) < 1e-8);
    CHECK(std::abs(tr.states.back().dT - frozen_dT2) < 1e-8);

    const std::vector<double> pts{0.5, 1.0, 1.5, 2.0};
    IntegratorOptions opt;
    auto at = integrate(pot, 1.0, 0.0, opt, pts);
    REQUIRE(at.size() == 4);
    CHECK(std::abs(at[0].T - 1.1221155622789894276) < 1e-8);
    CHECK(std::abs(at[1].T - 1.4409019367367028685) < 1e-8);
    CHECK(std::abs(at[2].dT - 0.24668075414031415637) < 1e-8);
}

TEST_CASE("integrate error paths", "[oscillator][integrate]") {
    CHECK_THROWS_AS(integrate(constant(1.0, {0.0, 1.0}), 1.0, 0.0, 0.0), ArgumentError);
    CHECK_THROWS_AS(integrate(constant(1.0, {0.5, 1.0}), 1.0, 0.0, 1e-8), ArgumentError);
    // Λ blows up inside the interval: the stepper must stop with the last reachable s.
    ComplexPotential singular([](double s) { return cplx(1.0 / std::pow(1.0 - s, 4), 0.0); },
                              {0.0, 2.0});
    try {
        integrate(singular, 1.0, 0.0, 1e-10);
        FAIL("expected IntegrationError");
    } catch (const IntegrationError& e) {
        CHECK(e.last_reached() > 0.5);
        CHECK(e.last_reached() <= 1.0);
    }
}

TEST_CASE("energy", "[oscillator][energy]") {
    auto one = constant(1.0, {0.0, 5.0});
    CHECK(energy({0.0, 1.0, 0.0}, one) == 0.5);
    CHECK(energy({0.3, 0.0, 0.0}, quadratic_minus_one({0.0, 1.0})) == 0.0);
    auto tr = integrate(one, 1.0, 0.0, 1e-10);
    for (const auto& st : tr.states) CHECK(std::abs(energy(st, one) - 0.5) < 1e-9);
}

TEST_CASE("energy envelope", "[oscillator][energy]") {
    SECTION("constant real potential: envelope collapses to W0") {
        auto env = energy_envelope(constant(1.0, {0.0, 2.0}), 0.5);
        CHECK(env.lower(2.0) == 0.5);
        CHECK(env.upper(2.0) == 0.5);
        CHECK(env.upper(1.234) == 0.5);
        CHECK(env.lower(0.0) == env.upper(0.0));
    }
    SECTION("non-positive real part is rejected with the offending s") {
        try {
            energy_envelope(quadratic_minus_one({0.0, 2.0}), 1.0);
            FAIL("expected PreconditionError");
        } catch (const PreconditionError& e) {
            CHECK(e.where() <= 1.0);
        }
    }
    SECTION("2 + i sin s on [0,1] contains measured energies") {
        ComplexPotential pot([](double s) { return cplx(2.0, std::sin(s)); }, {0.0, 1.0},
                             [](double) { return 0.0; });
        std::mt19937_64 rng(7);
        for (int trial = 0; trial < 50; ++trial) {
            const cplx T0 = testgen::random_complex(rng);
            const cplx dT0 = testgen::random_complex(rng);
            auto tr = integrate(pot, T0, dT0, 1e-12);
            auto env = energy_envelope(pot, energy(tr.states.front(), pot));
            for (const auto& st : tr.states) {
                const double W = energy(st, pot);
                const double eps = 1e-12 * (1.0 + env.upper(st.s));
                REQUIRE(W >= env.lower(st.s) - eps);
                REQUIRE(W <= env.upper(st.s) + eps);
            }
        }
    }
    SECTION("exponent matches closed form for 2 + i s on [-1, 1]") {
        // ∫₀ˢ 2|σ|/√2 dσ = s²/√2
        ComplexPotential pot([](double s) { return cplx(2.0, s); }, {-1.0, 1.0},
                             [](double) { return 0.0; });
        auto env = energy_envelope(pot, 1.0);
        for (double s : {-1.0, -0.37, 0.0, 0.21, 0.8, 1.0})
            CHECK(env.exponent(s) == Approx(s * s / std::sqrt(2.0)).margin(1e-13));
    }
}

TEST_CASE("kappa transform", "[oscillator][kappa]") {
    SECTION("Λ ≡ −1, κ = √2") {
        auto kt = kappa_transform(constant(-1.0, {0.0, 2.0}), std::sqrt(2.0));
        for (double z : {0.0, 0.1, 0.3, 0.5, 0.65}) {
            const cplx om = kt.omega()(z);
            CHECK(om.real() == Approx(1.0 / std::pow(1.0 - 2.0 * z * z, 2)).epsilon(1e-14));
            CHECK(om.real() >= 1.0);
            CHECK(om.imag() == 0.0);
        }
    }
    SECTION("κ = 1, Λ ≡ 0") {
        auto kt = kappa_transform(constant(0.0, {-1.0, 1.0}), 1.0);
        for (double z : {-0.7, 0.0, 0.4})
            CHECK(kt.omega()(z).real() == Approx(1.0 / std::pow(1.0 - z * z, 2)).epsilon(1e-14));
    }
    SECTION("domain error outside |κz| < 1") {
        auto kt = kappa_transform(constant(0.0, {0.0, 1.0}), 2.0);
        CHECK_THROWS_AS(kt.s_of_z(0.5), ArgumentError);
        CHECK_THROWS_AS(kt.omega()(0.6), ArgumentError);
        CHECK_THROWS_AS(kappa_transform(constant(0.0, {0.0, 1.0}), 0.0), ArgumentError);
    }
    SECTION("transformed solution maps back to cosh") {
        const Interval R{0.0, 2.0};
        auto kt = kappa_transform(constant(-1.0, R), std::sqrt(2.0));
        const auto s_pts = linspace(0.0, 2.0, 41);
        std::vector<double> z_pts;
        for (double s : s_pts) z_pts.push_back(kt.z_of_s(s));
        IntegratorOptions opt;
        auto tau = integrate(kt.omega(), 1.0, 0.0, opt, z_pts);
        for (std::size_t i = 0; i < tau.size(); ++i) {
            const OscState T = kt.solution_to_T(tau[i]);
            CHECK(T.s == Approx(s_pts[i]).margin(1e-14));
            CHECK(std::abs(T.T - std::cosh(T.s)) < 1e-8 * std::cosh(T.s));
            CHECK(std::abs(T.dT - std::sinh(T.s)) < 1e-8 * std::cosh(T.s));
        }
    }
    SECTION("maps are mutually inverse") {
        auto kt = kappa_transform(quadratic_minus_one({-1.0, 2.0}), 1.3);
        const OscState st{0.7, cplx(0.3, -1.1), cplx(2.0, 0.4)};
        const OscState back = kt.solution_to_T(kt.solution_from_T(st));
        CHECK(back.s == Approx(st.s).margin(1e-14));
        CHECK(std::abs(back.T - st.T) < 1e-14);
        CHECK(std::abs(back.dT - st.dT) < 1e-13);
    }
}

TEST_CASE("bound constants", "[oscillator][bounds]") {
    SECTION("Λ ≡ 1 on [0,1]") {
        auto k = bound_constants(constant(1.0, {0.0, 1.0}));
        CHECK(k.A == 0.0);
        CHECK(k.c == 1.0);
        CHECK(k.kappa == 1.0);
        CHECK(k.B == 0.0);
        CHECK(k.D == 2.0);
        CHECK(k.e == 2.0);
        CHECK(k.L == Approx(7.2537208156940375353).epsilon(1e-14));
    }
    SECTION("Λ ≡ 0 on [0,1]") {
        auto k = bound_constants(constant(0.0, {0.0, 1.0}));
        CHECK(k.A == 0.0);
        CHECK(k.c == 0.0);
        CHECK(k.kappa == 1.0);
        CHECK(k.B == 0.0);
        CHECK(k.D == 1.0);
        CHECK(k.e == 1.0);
        CHECK(k.L == Approx(7.2537208156940375353).epsilon(1e-14));
    }
    SECTION("Λ = s² − 1 on [0,2], analytic and finite-difference derivative") {
        for (bool analytic : {true, false}) {
            ComplexPotential pot = analytic ? quadratic_minus_one({0.0, 2.0})
                                            : ComplexPotential([](double s) { return cplx(s * s - 1.0); },
                                                               Interval{0.0, 2.0});
            auto k = bound_constants(pot);
            CHECK(k.A == 0.0);
            CHECK(k.c == Approx(-1.0).margin(1e-12));
            CHECK(k.kappa == Approx(std::sqrt(2.0)).epsilon(1e-12));
            CHECK(k.e == 1.0);
            CHECK(k.D == Approx(5.0).epsilon(1e-12));
            CHECK(k.B == Approx(1.0).epsilon(1e-9));
            // refinement cross-check: a denser grid does not move the constants
            auto dense = bound_constants(pot, {8192, true});
            CHECK(dense.B == Approx(k.B).epsilon(1e-9));
        }
    }
    SECTION("invariants on random potentials") {
        std::mt19937_64 rng(11);
        for (int i = 0; i < 20; ++i) {
            auto pot = testgen::random_potential(rng, {-1.0, 1.5}, -3.0, 4.0, 2.0);
            auto k = bound_constants(pot);
            CHECK(k.kappa >= 1.0);
            CHECK(k.e >= 1.0);
            CHECK(k.D >= k.e - 1e-12);
            CHECK(k.L >= 0.0);
        }
    }
}

TEST_CASE("uniform bound", "[oscillator][bounds]") {
    auto k1 = bound_constants(constant(1.0, {0.0, 1.0}));
    CHECK(uniform_bound(k1, 0.0, 0.0) == 0.0);
    const double b = uniform_bound(k1, 1.0, 0.0);
    CHECK(b == Approx(2180.9190427290024254).epsilon(1e-12));
    auto tr = integrate(constant(1.0, {0.0, 1.0}), 1.0, 0.0, 1e-10);
    CHECK(sup_abs(tr) <= b);

    std::mt19937_64 rng(3);
    for (int i = 0; i < 100; ++i) {
        auto pot = testgen::random_potential(rng, {-0.5, 1.0}, -2.0, 3.0, 1.5);
        const cplx T0 = testgen::random_complex(rng);
        const cplx dT0 = testgen::random_complex(rng);
        auto k = bound_constants(pot);
        auto traj = integrate(pot, T0, dT0, 1e-10);
        REQUIRE(sup_abs(traj) <= uniform_bound(k, std::abs(T0), std::abs(dT0)));
    }
}

TEST_CASE("wronskian", "[oscillator][wronskian]") {
    CHECK(wronskian({0.2, 1.0, 0.0}, {0.2, 0.0, 1.0}) == cplx(1.0));
    const OscState a{0.4, cplx(1.0, 2.0), cplx(-0.5, 0.3)};
    CHECK(wronskian(a, a) == cplx(0.0));
    CHECK_THROWS_AS(wronskian({0.0, 1.0, 0.0}, {0.1, 0.0, 1.0}), ArgumentError);

    std::mt19937_64 rng(5);
    for (int i = 0; i < 10; ++i) {
        auto pot = testgen::random_potential(rng, {-1.0, 2.0}, -1.0, 5.0, 2.0);
        const auto pts = linspace(-1.0, 2.0, 61);
        IntegratorOptions opt;
        auto q = integrate(pot, testgen::random_complex(rng), testgen::random_complex(rng), opt, pts);
        auto r = integrate(pot, testgen::random_complex(rng), testgen::random_complex(rng), opt, pts);
        const cplx w0 = wronskian(q[20], r[20]);
        for (std::size_t j = 0; j < q.size(); ++j)
            CHECK(std::abs(wronskian(q[j], r[j]) - w0) < 1e-8 * std::abs(w0));
    }
}

TEST_CASE("propagate via basis", "[oscillator][wronskian]") {
    std::mt19937_64 rng(9);
    auto pot = testgen::random_potential(rng, {-1.0, 2.0}, -1.0, 5.0, 2.0);
    const auto pts = grid_through_zero({-1.0, 2.0}, 64);
    IntegratorOptions opt;
    auto Q = integrate(pot, 1.0, 0.0, opt, pts);
    auto R = integrate(pot, 0.0, 1.0, opt, pts);

    SECTION("canonical basis is linear combination") {
        auto T = propagate_via_basis(Q, R, 2.0, 3.0);
        for (std::size_t i = 0; i < T.size(); ++i) {
            CHECK(std::abs(T[i].T - (2.0 * Q[i].T + 3.0 * R[i].T)) < 1e-12 * (1 + std::abs(T[i].T)));
            CHECK(std::abs(T[i].dT - (2.0 * Q[i].dT + 3.0 * R[i].dT)) < 1e-12 * (1 + std::abs(T[i].dT)));
        }
        auto q = propagate_via_basis(Q, R, 1.0, 0.0);
        for (std::size_t i = 0; i < q.size(); ++i) CHECK(std::abs(q[i].T - Q[i].T) < 1e-14 * (1 + std::abs(Q[i].T)));
    }
    SECTION("matches direct integration and is linear") {
        for (int trial = 0; trial < 5; ++trial) {
            const cplx x0 = testgen::random_complex(rng), x1 = testgen::random_complex(rng);
            const cplx y0 = testgen::random_complex(rng), y1 = testgen::random_complex(rng);
            auto direct = integrate(pot, x0, x1, opt, pts);
            auto via = propagate_via_basis(Q, R, x0, x1);
            for (std::size_t i = 0; i < via.size(); ++i)
                CHECK(std::abs(via[i].T - direct[i].T) < 1e-8 * (1 + std::abs(direct[i].T)));

            const cplx al(0.7, -0.2), be(-1.3, 0.5);
            auto comb = propagate_via_basis(Q, R, al * x0 + be * y0, al * x1 + be * y1);
            auto vy = propagate_via_basis(Q, R, y0, y1);
            for (std::size_t i = 0; i < comb.size(); ++i) {
                const cplx expect = al * via[i].T + be * vy[i].T;
                CHECK(std::abs(comb[i].T - expect) < 1e-12 * (1 + std::abs(expect)));
            }
        }
    }
    SECTION("degenerate basis") {
        CHECK_THROWS_AS(propagate_via_basis(Q, Q, 1.0, 1.0), NumericError);
    }
}

TEST_CASE("trajectory csv", "[oscillator][io]") {
    auto pot = constant(1.0, {0.0, 1.0});
    auto tr = integrate(pot, 1.0, 0.0, 1e-8);
    std::ostringstream os;
    write_trajectory_csv(os, tr, pot);
    const std::string out = os.str();
    CHECK(out.rfind("s,re_T,im_T,re_dT,im_dT,energy\n", 0) == 0);
    CHECK(std::count(out.begin(), out.end(), '\n') == static_cast<long>(tr.size() + 1));
}
