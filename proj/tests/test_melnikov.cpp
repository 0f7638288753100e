#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "sepsplit/manifolds.hpp"
#include "sepsplit/melnikov.hpp"

using namespace sepsplit;
using boost::multiprecision::log;
using boost::multiprecision::sinh;

namespace {
struct PrecisionInit {
    PrecisionInit() { set_precision_bits(256); }
} init_;

const Real kEps("0.4");
const Real kTol("1e-20");

PolyHamiltonian base_model() { return cubic_model(1, 1, 0, 1); }

PolyHamiltonian monomial(int e1, int e2, int e3, int e4, Rational c = 1) {
    PolyHamiltonian R;
    R.add_term({e1, e2, e3, e4, 0, 0}, c);
    return R;
}
}  // namespace

TEST_CASE("residue ladder: frozen values and limits") {
    // m = 1: 4 pi omega / sinh(pi omega / eps)
    Cplx M1 = melnikov_residue(1, 1, 1, kEps);
    CHECK(rabs(M1.re - Real("0.009756612138789097980994847003215454350")) < Real("1e-36"));
    CHECK(M1.im == 0);
    // m = 2: -(8/3) pi omega (omega^2 + eps^2) / sinh(pi omega / eps)
    Cplx M2 = melnikov_residue(2, 1, 1, kEps);
    CHECK(rabs(M2.re - Real("-0.007545113387330235771969348349153284698")) < Real("1e-36"));
    // linear in c0
    Cplx M1c = melnikov_residue(1, Real(3) / 7, 1, kEps);
    CHECK(abs(M1c - M1 * Cplx(Real(3) / 7)) < Real("1e-40"));
    CHECK_THROWS_AS(melnikov_residue(0, 1, 1, kEps), ComputationError);
}

TEST_CASE("quadrature reproduces the residue ladder for m = 1, 2, 3") {
    PolyHamiltonian H = base_model();
    Real mu = kEps * kEps * kEps * kEps / 4;
    for (int m = 1; m <= 3; ++m) {
        MelnikovResult q = melnikov_quadrature(H, monomial(m, 0, 1, 0), mu, kTol);
        Cplx r = melnikov_residue(m, 1, 1, kEps);
        CHECK(abs(q.M - r) < Real("1e-10") * abs(r));
        CHECK(q.error < Real("1e-10") * abs(r));
        CHECK(std::string(q.method) == "quadrature");
    }
}

TEST_CASE("quadrature symmetries: linearity, sign flip, y2 orientation") {
    PolyHamiltonian H = base_model();
    Real mu = kEps * kEps * kEps * kEps / 4;
    // linearity: R = x1 x2 + 2 x1^2 x2
    PolyHamiltonian R12 = monomial(1, 0, 1, 0);
    R12.add_term({2, 0, 1, 0, 0, 0}, Rational(2));
    Cplx expect = melnikov_residue(1, 1, 1, kEps) + melnikov_residue(2, 2, 1, kEps);
    MelnikovResult q = melnikov_quadrature(H, R12, mu, kTol);
    CHECK(abs(q.M - expect) < Real("1e-10") * abs(expect));
    // x2 -> -x2
    MelnikovResult qn = melnikov_quadrature(H, monomial(1, 0, 1, 0, -1), mu, kTol);
    CHECK(abs(qn.M + melnikov_residue(1, 1, 1, kEps)) < Real("1e-12"));
    // y2 in place of x2 rotates the result by i
    MelnikovResult qy = melnikov_quadrature(H, monomial(1, 0, 0, 1), mu, kTol);
    CHECK(abs(qy.M - Cplx(Real(0), Real(1)) * melnikov_residue(1, 1, 1, kEps)) < Real("1e-12"));
    // no elliptic dependence: exactly zero
    MelnikovResult q0 = melnikov_quadrature(H, monomial(2, 0, 0, 0), mu, kTol);
    CHECK(abs(q0.M) == 0);
    // rejected shapes
    CHECK_THROWS_AS(melnikov_quadrature(H, monomial(0, 0, 2, 0), mu, kTol), ComputationError);
    CHECK_THROWS_AS(melnikov_quadrature(H, monomial(1, 1, 1, 0), mu, kTol), ComputationError);
}

TEST_CASE("exponential smallness across an eps sweep") {
    PolyHamiltonian H = base_model();
    PolyHamiltonian R = monomial(1, 0, 1, 0);
    // log|M| + pi omega / eps -> log(8 pi omega), flat in eps
    Real target = log(8 * real_pi());
    for (const char* es : {"0.3", "0.4", "0.5"}) {
        Real eps(es);
        Real mu = eps * eps * eps * eps / 4;
        MelnikovResult q = melnikov_quadrature(H, R, mu, kTol);
        Real shifted = log(abs(q.M)) + real_pi() / eps;
        // deviation is the e^{-2 pi omega/eps} sinh correction
        CHECK(rabs(shifted - target) < 2 * exp(-2 * real_pi() / eps));
    }
}

TEST_CASE("precision guard for strongly oscillatory regimes") {
    PolyHamiltonian H = base_model();
    CHECK_THROWS_AS(melnikov_quadrature(H, monomial(1, 0, 1, 0), Real("1e-10"), kTol),
                    ComputationError);
}

TEST_CASE("inner residue derivative: closed forms and quadrature cross-check") {
    // R0 = c0 x1 x2 gives 4 pi c0 omega0
    Cplx b1 = stokes_derivative(monomial(1, 0, 1, 0), 1);
    CHECK(rabs(b1.re - Real("12.56637061435917295385057353311801153679")) < Real("1e-33"));
    CHECK(rabs(b1.im) < Real("1e-40"));
    // R0 = x1^2 x2 gives -4 pi omega0^3 / 3
    Cplx b2 = stokes_derivative(monomial(2, 0, 1, 0), 1);
    CHECK(rabs(b2.re - Real("-4.188790204786390984616857844372670512263")) < Real("1e-33"));
    // linearity
    PolyHamiltonian R12 = monomial(1, 0, 1, 0);
    R12.add_term({2, 0, 1, 0, 0, 0}, Rational(2));
    CHECK(abs(stokes_derivative(R12, 1) - (b1 + b2 * Cplx(2))) < Real("1e-35"));
    // contour quadrature agrees, including a y1-bearing term (pole order 5)
    for (auto R : {monomial(1, 0, 1, 0), monomial(2, 0, 1, 0), monomial(1, 1, 1, 0),
                   monomial(1, 0, 0, 1)}) {
        Cplx b = stokes_derivative(R, 1);
        MelnikovResult qr = stokes_derivative_quadrature(R, 1, Real("1e-15"));
        CHECK(abs(qr.M - b) < Real("1e-12") * abs(b));
    }
    // y2 orientation rotates by i
    Cplx by = stokes_derivative(monomial(1, 0, 0, 1), 1);
    CHECK(abs(by - Cplx(Real(0), Real(1)) * b1) < Real("1e-35"));
}

TEST_CASE("first-order splitting energy agrees with the geometric measurement") {
    // decoupled elliptic block, nu x1 x2 coupling: E_e1 = nu^2 (9/8) M^2
    // (profile amplitude 3 eps^2 vs the unit-normalized residue profile)
    Real mu("0.01"), nu("0.001");
    PolyHamiltonian H = base_model();
    H.add_term({1, 0, 1, 0, 0, 1}, Rational(1));
    IntegratorConfig cfg;
    cfg.abs_tol = cfg.rel_tol = Real("1e-30");
    SplitResult r = run_split(H, mu, nu, cfg);
    Cplx M = melnikov_residue(1, 1, r.omega, r.lambda);
    Real Epred = nu * nu * Real(9) / 8 * M.re * M.re;
    CHECK(rabs(r.m.E_e1 - Epred) < Real("1e-4") * Epred);
}
