#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "sepsplit/melnikov.hpp"
#include "sepsplit/stokes.hpp"

using namespace sepsplit;
using boost::multiprecision::exp;
using boost::multiprecision::log;
using boost::multiprecision::sqrt;

namespace {
struct PrecisionInit {
    PrecisionInit() { set_precision_bits(256); }
} init_;

const Real kNu("0.01");

// y1^2/2 + I - x1^3 with optional coupling terms
PolyHamiltonian inner_model() {
    PolyHamiltonian H;
    H.add_term({0, 2, 0, 0, 0, 0}, Rational(1, 2));
    H.add_term({0, 0, 2, 0, 0, 0}, Rational(1, 2));
    H.add_term({0, 0, 0, 2, 0, 0}, Rational(1, 2));
    H.add_term({3, 0, 0, 0, 0, 0}, Rational(-1));
    return H;
}

Cplx four_pi() { return Cplx(4 * real_pi()); }
}  // namespace

TEST_CASE("inner series of the cubic base terminates and is exact") {
    NumPoly H0 = specialize(inner_model(), 0, 0);
    InnerSeriesData s = inner_series(H0, 20);
    CHECK(s.omega0 == 1);
    CHECK(s.newton_residual == 0);
    CHECK(rabs(Real(s.c[0][2] - 2)) == 0);
    CHECK(rabs(Real(s.c[1][3] + 4)) == 0);
    Real other = 0;
    for (int i = 0; i < 4; ++i)
        for (int n = 2; n <= 20; ++n)
            if (!((i == 0 && n == 2) || (i == 1 && n == 3))) other = rmax(other, rabs(s.c[i][n]));
    CHECK(other == 0);
    for (const auto& p : s.phase) CHECK(abs(p) == 0);
    // the terminating series solves the inner equation exactly
    CHECK(max_norm(inner_series_defect(H0, s, Cplx(Real(7), Real(-7)))) < Real("1e-70"));
}

TEST_CASE("matching defect decays at the truncation order") {
    // quartic term makes the series nonterminating: defect ~ |tau|^-(M+2)
    PolyHamiltonian Hq = inner_model();
    Hq.add_term({4, 0, 0, 0, 0, 0}, Rational(1, 3));
    NumPoly H0 = specialize(Hq, 0, 0);
    Real r2 = sqrt(Real(2));
    for (int M : {12, 16}) {
        InnerSeriesData s = inner_series(H0, M);
        CHECK(s.newton_residual < Real("1e-60"));
        std::vector<Real> d;
        for (int tm : {10, 20, 40})
            d.push_back(max_norm(inner_series_defect(H0, s, Cplx(-tm / r2, -tm / r2))));
        Real slope1 = log(d[0] / d[1]) / log(Real(2));
        Real slope2 = log(d[1] / d[2]) / log(Real(2));
        CHECK(rabs(Real(slope1 - (M + 2))) < Real("0.2"));
        CHECK(rabs(Real(slope2 - (M + 2))) < Real("0.1"));
    }
}

TEST_CASE("eta0 carries the exact elliptic exponential on the cubic base") {
    NumPoly H0 = specialize(inner_model(), 0, 0);
    InnerSeriesData s = inner_series(H0, 20);
    std::vector<Real> T_list = {16, 20, 24};
    IntegratorConfig cfg;
    EtaSolution eta = solve_eta0(H0, s, Real(40), T_list, cfg);
    for (size_t j = 0; j < T_list.size(); ++j) {
        // rotation rate is exactly 1: eta0(-iT) = (0,0,1,i) e^{T}
        Cplx ex = exp(Cplx(T_list[j]));
        CHECK(abs(eta.states[j][2] - ex) < Real("1e-30") * abs(ex));
        CHECK(abs(eta.states[j][3] - iu() * ex) < Real("1e-30") * abs(ex));
        CHECK(abs(eta.states[j][0]) < Real("1e-30") * abs(ex));
    }
}

TEST_CASE("b0 of the linearly coupled inner model: closed forms") {
    StokesConfig cfg;
    SUBCASE("x1 x2 coupling: b0 = 4 pi nu") {
        PolyHamiltonian H = inner_model();
        H.add_term({1, 0, 1, 0, 0, 1}, Rational(1));
        StokesResult r = run_stokes(specialize(H, 0, kNu), cfg);
        CHECK(abs(r.b0 - four_pi() * kNu) < Real("1e-6") * abs(r.b0));
        CHECK(rabs(Real(r.fit.rate - 1)) < Real("1e-6"));
        CHECK(r.fit.residual < Real("1e-10"));
        CHECK(r.reliable);
        CHECK(!r.upper_bound);
        CHECK(r.drift < Real("1e-30"));
        CHECK(r.matching_residual < Real("1e-40"));
        // pairing constant along the descent
        Real spread = 0;
        for (const auto& [T, v] : r.samples) spread = rmax(spread, abs(v - r.b0));
        CHECK(spread < Real("1e-7") * abs(r.b0));
        // agrees with the first-order residue derivative
        PolyHamiltonian R;
        R.add_term({1, 0, 1, 0, 0, 0}, Rational(1));
        CHECK(abs(r.b0 - Cplx(kNu) * stokes_derivative(R, 1)) < Real("1e-6") * abs(r.b0));
    }
    SUBCASE("x1^2 x2 coupling: b0 = -4 pi nu / 3") {
        PolyHamiltonian H = inner_model();
        H.add_term({2, 0, 1, 0, 0, 1}, Rational(1));
        StokesResult r = run_stokes(specialize(H, 0, kNu), cfg);
        CHECK(abs(r.b0 + four_pi() * kNu / Real(3)) < Real("1e-5") * abs(r.b0));
    }
    SUBCASE("x1 y2 coupling rotates b0 by i") {
        PolyHamiltonian H = inner_model();
        H.add_term({1, 0, 0, 1, 0, 1}, Rational(1));
        StokesResult r = run_stokes(specialize(H, 0, kNu), cfg);
        CHECK(abs(r.b0 - iu() * four_pi() * kNu) < Real("1e-6") * abs(r.b0));
    }
    SUBCASE("doubled elliptic frequency: b0 = 8 pi nu, rate = 2") {
        PolyHamiltonian H;
        H.add_term({0, 2, 0, 0, 0, 0}, Rational(1, 2));
        H.add_term({0, 0, 2, 0, 0, 0}, Rational(1));
        H.add_term({0, 0, 0, 2, 0, 0}, Rational(1));
        H.add_term({3, 0, 0, 0, 0, 0}, Rational(-1));
        H.add_term({1, 0, 1, 0, 0, 1}, Rational(1));
        StokesResult r = run_stokes(specialize(H, 0, kNu), cfg);
        CHECK(r.omega0 == 2);
        CHECK(abs(r.b0 - Cplx(2) * four_pi() * kNu) < Real("1e-6") * abs(r.b0));
        CHECK(rabs(Real(r.fit.rate - 2)) < Real("1e-6"));
    }
}

TEST_CASE("b0 is invariant under matching depth, sampling window, and tolerance") {
    PolyHamiltonian H = inner_model();
    H.add_term({1, 0, 1, 0, 0, 1}, Rational(1));
    NumPoly H0 = specialize(H, 0, kNu);
    StokesConfig cfg;
    StokesResult r = run_stokes(H0, cfg);

    StokesConfig deeper = cfg;
    deeper.tau_match = 52;
    StokesResult rd = run_stokes(H0, deeper);
    // limited by the smallest-term truncation of the shallower entry,
    // ~ e^{-(1 - 1/sqrt 2) omega0 tau_match}
    CHECK(abs(rd.b0 - r.b0) < Real("1e-5") * abs(r.b0));

    StokesConfig shifted = cfg;
    shifted.T_list = {Real(18), Real(21), Real(25), Real(30), Real(34)};
    StokesResult rs = run_stokes(H0, shifted);
    CHECK(abs(rs.b0 - r.b0) < Real("1e-7") * abs(r.b0));

    StokesConfig tight = cfg;
    tight.ode.abs_tol = Real("1e-34");
    tight.ode.rel_tol = Real("1e-34");
    StokesResult rt = run_stokes(H0, tight);
    CHECK(abs(rt.b0 - r.b0) < Real("1e-7") * abs(r.b0));
}

TEST_CASE("decoupled elliptic block gives a certified null result") {
    StokesConfig cfg;
    StokesResult r = run_stokes(specialize(inner_model(), 0, 0), cfg);
    CHECK(abs(r.b0) == 0);
    CHECK(r.upper_bound);
    for (const auto& [T, v] : r.samples) CHECK(abs(v) == 0);
}

TEST_CASE("precision guard names the required depth") {
    PolyHamiltonian H = inner_model();
    H.add_term({1, 0, 1, 0, 0, 1}, Rational(1));
    StokesConfig cfg;
    cfg.T_list = {Real(300), Real(304), Real(308), Real(312)};
    CHECK_THROWS_AS(run_stokes(specialize(H, 0, kNu), cfg), ComputationError);
}

TEST_CASE("mu-family hierarchy: b_n and a_n of the coupled cubic model") {
    PolyHamiltonian H = cubic_model(1, 1, 0, 1);
    H.add_term({1, 0, 1, 0, 0, 1}, Rational(1));
    StokesConfig cfg;
    cfg.n_max = 2;
    StokesResult r = run_stokes(H, kNu, cfg);
    // b0 = -12 pi nu: the inner x1-profile is -6 tau^-2 for this orientation
    CHECK(abs(r.bn[0] + Cplx(3) * four_pi() * kNu) < Real("1e-6") * abs(r.bn[0]));
    CHECK(rabs(r.bn[0].im) < Real("1e-10"));
    // the odd hierarchy order vanishes (U1 = 0), and the scaling family has
    // no eps^4 correction
    CHECK(abs(r.bn[1]) < Real("1e-12"));
    CHECK(abs(r.bn[2]) < Real("1e-10"));
    // a0 = |b0|^2 / 2 = 72 pi^2 nu^2
    Real a0_exact = 72 * real_pi() * real_pi() * kNu * kNu;
    CHECK(rabs(Real(r.an[0] - a0_exact)) < Real("1e-5") * a0_exact);
    CHECK(r.reliable);
    CHECK(rabs(Real(r.fit.rate - 1)) < Real("1e-6"));
}

TEST_CASE("mu-family hierarchy: higher-order content is tau_match-invariant") {
    PolyHamiltonian H = cubic_model(1, 1, 0, 1);
    H.add_term({4, 0, 0, 0, 0, 0}, Rational(1, 3));
    H.add_term({1, 0, 1, 0, 0, 1}, Rational(1));
    H.add_term({2, 0, 1, 0, 0, 1}, Rational(1, 2));
    StokesConfig cfg;
    cfg.n_max = 2;
    StokesResult r40 = run_stokes(H, kNu, cfg);
    StokesConfig cfg2 = cfg;
    cfg2.tau_match = 50;
    StokesResult r50 = run_stokes(H, kNu, cfg2);
    CHECK(abs(r40.bn[0]) > 0);
    CHECK(abs(r40.bn[2]) > 0);
    CHECK(abs(r50.bn[0] - r40.bn[0]) < Real("1e-5") * abs(r40.bn[0]));
    CHECK(abs(r50.bn[2] - r40.bn[2]) < Real("1e-5") * abs(r40.bn[2]));
    CHECK(r40.reliable);
    CHECK(r50.reliable);
}
