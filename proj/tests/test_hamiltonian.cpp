#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "sepsplit/hamiltonian.hpp"

using namespace sepsplit;

namespace {
struct PrecisionInit {
    PrecisionInit() { set_precision_bits(128); }
} init_;

Real eps_tol(int shift = 20) { return rpow(Real(2), -static_cast<int>(precision_bits()) + shift); }
}  // namespace

TEST_CASE("eval basic monomials") {
    PolyHamiltonian H;
    H.add_term({0, 2, 0, 0, 0, 0}, Rational(1, 2));  // y1^2/2
    CHECK(eval(H, PhasePoint(0, 2, 0, 0), 0, 0).re == 2);

    PolyHamiltonian Hi;  // omega0*I with omega0 = 1
    Hi.add_term({0, 0, 2, 0, 0, 0}, Rational(1, 2));
    Hi.add_term({0, 0, 0, 2, 0, 0}, Rational(1, 2));
    CHECK(eval(Hi, PhasePoint(0, 0, 1, 1), 0, 0).re == 1);

    PolyHamiltonian Hc;  // -mu*x1 + x1^3/3
    Hc.add_term({1, 0, 0, 0, 1, 0}, Rational(-1));
    Hc.add_term({3, 0, 0, 0, 0, 0}, Rational(1, 3));
    Real v = eval(Hc, PhasePoint(1, 0, 0, 0), 0, 0).re;
    CHECK(boost::multiprecision::abs(v - Real(1) / 3) < eps_tol());

    // origin value is exactly zero for constant-free H
    PolyHamiltonian M = cubic_model(1, 1, 0, 1);
    CHECK(eval(M, PhasePoint(0, 0, 0, 0), Real("0.37"), Real("0.11")).re == 0);
}

TEST_CASE("vector field") {
    PolyHamiltonian H;
    H.add_term({0, 2, 0, 0, 0, 0}, Rational(1, 2));
    PhasePoint f = vector_field(H, PhasePoint(0, 3, 0, 0), 0, 0);
    CHECK(f[0].re == 3);
    CHECK(abs(f[1]) == 0);
    CHECK(abs(f[2]) == 0);
    CHECK(abs(f[3]) == 0);

    PolyHamiltonian Hi;  // omega0*I
    Hi.add_term({0, 0, 2, 0, 0, 0}, Rational(1, 2));
    Hi.add_term({0, 0, 0, 2, 0, 0}, Rational(1, 2));
    PhasePoint g = vector_field(Hi, PhasePoint(0, 0, 1, 0), 0, 0);
    CHECK(abs(g[2]) == 0);
    CHECK(g[3].re == -1);

    // equilibrium of the cubic model at x1 = sqrt(mu)
    PolyHamiltonian Hc;
    Hc.add_term({0, 2, 0, 0, 0, 0}, Rational(1, 2));
    Hc.add_term({1, 0, 0, 0, 1, 0}, Rational(-1));
    Hc.add_term({3, 0, 0, 0, 0, 0}, Rational(1, 3));
    PhasePoint h = vector_field(Hc, PhasePoint(1, 0, 0, 0), 1, 0);
    CHECK(max_norm(h) < eps_tol());
}

TEST_CASE("symplectic pair") {
    PhasePoint ex1(1, 0, 0, 0), ey1(0, 1, 0, 0);
    CHECK(symplectic_pair(ex1, ey1).re == 1);
    PhasePoint u(Real("0.3"), Real("-1.2"), Real("2.5"), Real("0.7"));
    CHECK(abs(symplectic_pair(u, u)) == 0);
    // u = (0,0,1,-i), w = (0,0,1,i) -> 2i
    PhasePoint a(Cplx(0), Cplx(0), Cplx(1), Cplx(Real(0), Real(-1)));
    PhasePoint b(Cplx(0), Cplx(0), Cplx(1), Cplx(Real(0), Real(1)));
    Cplx s = symplectic_pair(a, b);
    CHECK(s.re == 0);
    CHECK(s.im == 2);
    // bilinearity
    PhasePoint w(Real(1), Real(2), Real(3), Real(4));
    Cplx lhs = symplectic_pair(u + w, a);
    Cplx rhs = symplectic_pair(u, a) + symplectic_pair(w, a);
    CHECK(abs(lhs - rhs) < eps_tol());
}

TEST_CASE("parser") {
    const char* text =
        "# cubic model\n"
        "a 1\n"
        "b 1\n"
        "c 0\n"
        "omega0 1\n"
        "0 2 0 0 0 0 1/2\n"
        "0 0 2 0 0 0 1/2\n"
        "0 0 0 2 0 0 1/2\n"
        "1 0 0 0 1 0 -1\n"
        "3 0 0 0 0 0 1/3\n";
    PolyHamiltonian H = parse_model(text);
    CHECK(H.has_constants);
    CHECK(H.omega0 == 1);
    CHECK(H.terms.size() == 5);
    PolyHamiltonian M = cubic_model(1, 1, 0, 1);
    CHECK(H.terms == M.terms);

    CHECK_THROWS_AS(parse_model("0 2 0 0 0 0 1/2\n0 2 0 0 0 0 1/3\n"), ComputationError);
    // decimal coefficients parse exactly
    PolyHamiltonian D = parse_model("1 0 0 0 0 0 0.25\n");
    CHECK(D.terms.begin()->second == Rational(1, 4));
    PolyHamiltonian E = parse_model("1 0 0 0 0 0 -2.5e-3\n");
    CHECK(E.terms.begin()->second == Rational(-1, 400));
}

TEST_CASE("find_equilibrium cubic model") {
    PolyHamiltonian H = cubic_model(1, 1, 0, 1);
    for (const char* mu_str : {"0.01", "0.0001"}) {
        Real mu(mu_str);
        EquilibriumData eq = find_equilibrium(H, mu, 0);
        Real xs = -boost::multiprecision::sqrt(mu);
        CHECK(abs(eq.location.x1() - Cplx(xs)) < eps_tol());
        // lambda = (4 mu)^{1/4}
        Real lam = boost::multiprecision::sqrt(boost::multiprecision::sqrt(4 * mu));
        CHECK(boost::multiprecision::abs(eq.lambda - lam) < eps_tol());
        CHECK(boost::multiprecision::abs(eq.omega - 1) < eps_tol());
        CHECK(eq.grad_norm < eps_tol());
    }
    EquilibriumData eq = find_equilibrium(H, Real("0.01"), 0);
    // lambda approx 0.44721 for mu = 0.01
    CHECK(boost::multiprecision::abs(eq.lambda - Real("0.447213595499957939")) < 1e-15);

    // decoupled elliptic block: v proportional to (0,0,1,i) after phase fix
    CHECK(abs(eq.v.x1()) < eps_tol());
    CHECK(abs(eq.v.y1()) < eps_tol());
    CHECK(abs(eq.v.x2() - Cplx(1)) < eps_tol());
    CHECK(abs(eq.v.y2() - Cplx(Real(0), Real(1))) < eps_tol());
    // Omega(v, conj v) = -2i
    PhasePoint vb(conj(eq.v[0]), conj(eq.v[1]), conj(eq.v[2]), conj(eq.v[3]));
    Cplx s = symplectic_pair(eq.v, vb);
    CHECK(abs(s - Cplx(Real(0), Real(-2))) < eps_tol());
    // Omega(v', v'') = 1 where v = v' + i v''
    PhasePoint vr(eq.v[0].re, eq.v[1].re, eq.v[2].re, eq.v[3].re);
    PhasePoint vi(eq.v[0].im, eq.v[1].im, eq.v[2].im, eq.v[3].im);
    CHECK(abs(symplectic_pair(vr, vi) - Cplx(1)) < eps_tol());
}

TEST_CASE("find_equilibrium eigenvector residuals and coupled model") {
    PolyHamiltonian H = cubic_model(1, 1, Rational(1, 5), Rational(7, 5));
    // add a genuine nu-perturbation R = x1*x2
    H.add_term({1, 0, 1, 0, 0, 1}, Rational(1));
    Real mu("0.02"), nu("0.005");
    EquilibriumData eq = find_equilibrium(H, mu, nu);
    FieldSystem fs = make_field_system(H, mu, nu);
    // J H'' v = i omega v
    PhasePoint Av = fs.apply_jhess(eq.location, eq.v);
    PhasePoint iwv = Cplx(Real(0), eq.omega) * eq.v;
    CHECK(max_norm(Av - iwv) < eps_tol(24));
    PhasePoint Aw = fs.apply_jhess(eq.location, eq.w_unstable);
    CHECK(max_norm(Aw - Cplx(eq.lambda) * eq.w_unstable) < eps_tol(24));
    PhasePoint As = fs.apply_jhess(eq.location, eq.w_stable);
    CHECK(max_norm(As + Cplx(eq.lambda) * eq.w_stable) < eps_tol(24));
    CHECK(eq.w_unstable.x1().re > 0);
    CHECK(eq.w_stable.x1().re > 0);
    // lambda -> 0, omega -> omega0 as mu -> 0 (monotone trend on a sweep)
    Real prev_lambda = eq.lambda;
    for (const char* m : {"0.002", "0.0002"}) {
        EquilibriumData e2 = find_equilibrium(H, Real(m), nu);
        CHECK(e2.lambda < prev_lambda);
        prev_lambda = e2.lambda;
        CHECK(boost::multiprecision::abs(e2.omega - to_real(H.omega0)) <
              boost::multiprecision::abs(eq.omega - to_real(H.omega0)) + Real("0.05"));
    }
}

TEST_CASE("vector field is the symplectic gradient") {
    PolyHamiltonian H = cubic_model(1, 1, Rational(1, 5), Rational(7, 5));
    H.add_term({2, 1, 1, 0, 0, 1}, Rational(3, 7));
    Real mu("0.02"), nu("0.01");
    FieldSystem fs = make_field_system(H, mu, nu);
    PhasePoint p(Real("0.11"), Real("-0.23"), Real("0.31"), Real("0.07"));
    PhasePoint d(Real("0.5"), Real("0.1"), Real("-0.4"), Real("0.9"));
    // dH(p)[d] = Omega(f(p), d)
    Real h = rpow(Real(2), -42);
    Cplx fd = (fs.H.eval(p + Cplx(h) * d) - fs.H.eval(p - Cplx(h) * d)) / (2 * h);
    Cplx od = symplectic_pair(fs.eval_field(p), d);
    CHECK(abs(fd - od) < Real(1e-24));
}

TEST_CASE("mu_slice") {
    PolyHamiltonian H = cubic_model(1, 1, 0, 1);
    std::vector<Rational> mu_coeffs{0, 0, Rational(1, 4)};  // mu = eps^4/4
    NumPoly H0 = mu_slice(H, 0, mu_coeffs, 0);
    // H0 = y1^2/2 + I + x1^3/3 (mu-term dropped)
    CHECK(H0.t.size() == 4);
    NumPoly H1 = mu_slice(H, 1, mu_coeffs, 0);
    CHECK(H1.t.empty());
    NumPoly H2 = mu_slice(H, 2, mu_coeffs, 0);
    // H2 = mu_2 * (-x1) = -x1/4
    REQUIRE(H2.t.size() == 1);
    CHECK(H2.t[0].e == std::array<int, 4>{1, 0, 0, 0});
    CHECK(H2.t[0].coeff == Real(-0.25));
}
