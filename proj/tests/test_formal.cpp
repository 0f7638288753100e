#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "sepsplit/formal.hpp"

using namespace sepsplit;

namespace {
struct PrecisionInit {
    PrecisionInit() { set_precision_bits(256); }
} init_;

// model A: cubic normal form, a = b = 1, c = 1/5, omega0 = 1.  Its separatrix
// is exactly x1 = eps^2 (-1/2 + 3/2 z), so every series above order 1 vanishes.
PolyHamiltonian model_a() { return cubic_model(1, 1, Rational(1, 5), 1); }

// model B: model A plus x1^4/4; all higher orders are nontrivial.
PolyHamiltonian model_b() {
    PolyHamiltonian H = model_a();
    H.add_term({4, 0, 0, 0, 0, 0}, Rational(1, 4));
    return H;
}

Cplx zpoly_eval(const ZPoly& p, const Cplx& z) {
    Cplx r;
    for (size_t i = p.size(); i-- > 0;) r = r * z + Cplx(to_real(p[i]));
    return r;
}
}  // namespace

TEST_CASE("extract_tables") {
    NormalFormTables tab = extract_tables(model_a());
    REQUIRE(tab.v.size() == 2);
    CHECK(tab.v_at(0, 3) == Rational(1, 3));
    CHECK(tab.v_at(1, 1) == Rational(-1));
    REQUIRE(tab.w.size() == 2);
    CHECK(tab.w_at(0, 0) == 1);
    CHECK(tab.w_at(0, 1) == Rational(1, 5));

    // rejects: missing kinetic term, x2*y2 cross term, x2^2/y2^2 mismatch
    PolyHamiltonian H1;
    H1.add_term({3, 0, 0, 0, 0, 0}, Rational(1, 3));
    CHECK_THROWS_AS(extract_tables(H1), ComputationError);
    PolyHamiltonian H2 = model_a();
    H2.add_term({0, 0, 1, 1, 0, 0}, Rational(1));
    CHECK_THROWS_AS(extract_tables(H2), ComputationError);
    PolyHamiltonian H3 = model_a();
    H3.add_term({1, 0, 2, 0, 0, 0}, Rational(1, 7));
    CHECK_THROWS_AS(extract_tables(H3), ComputationError);
    // nu-terms are ignored
    PolyHamiltonian H4 = model_a();
    H4.add_term({1, 0, 1, 0, 0, 1}, Rational(2));
    CHECK(extract_tables(H4).v == tab.v);
    // O(I^2) terms are ignored
    PolyHamiltonian H5 = model_a();
    H5.add_term({0, 0, 4, 0, 0, 0}, Rational(1, 4));
    H5.add_term({0, 0, 2, 2, 0, 0}, Rational(1, 2));
    H5.add_term({0, 0, 0, 4, 0, 0}, Rational(1, 4));
    CHECK(extract_tables(H5).w == tab.w);
}

TEST_CASE("formal_separatrix cubic model is exact") {
    NormalFormTables tab = extract_tables(model_a());
    FormalSeparatrix sep = formal_separatrix(tab, 8);
    REQUIRE(sep.p.size() == 9);
    CHECK(sep.p[1] == ZPoly{Rational(-1, 2), Rational(3, 2)});
    for (int k = 2; k <= 8; ++k) CHECK(sep.p[k].empty());
    CHECK(sep.mu[2] == Rational(1, 4));
    for (int k = 3; k <= 9; ++k) CHECK(sep.mu[k] == 0);
    CHECK(sep.C[3] == Rational(-1, 6));
    for (int k = 4; k <= 10; ++k) CHECK(sep.C[k] == 0);
    // q_{k,l} = -l p_{k,l}
    CHECK(sep.q[1][1] == Rational(-3, 2));
    CHECK(sep.q[1][0] == 0);

    // the truncated series solves the ODE exactly (up to roundoff)
    Cplx r = formal_ode_residual(tab, sep, Real("0.3"), Cplx(Real("0.7")), 5);
    CHECK(abs(r) < 1e-70);

    // preconditions enforced
    PolyHamiltonian bad;  // has v02 != 0
    bad.add_term({0, 2, 0, 0, 0, 0}, Rational(1, 2));
    bad.add_term({2, 0, 0, 0, 0, 0}, Rational(1, 2));
    bad.add_term({3, 0, 0, 0, 0, 0}, Rational(1, 3));
    bad.add_term({1, 0, 0, 0, 1, 0}, Rational(-1));
    CHECK_THROWS_AS(formal_separatrix(extract_tables(bad), 4), ComputationError);
}

TEST_CASE("formal_separatrix quartic model higher orders") {
    NormalFormTables tab = extract_tables(model_b());
    FormalSeparatrix sep = formal_separatrix(tab, 8);
    CHECK(sep.p[1] == ZPoly{Rational(-1, 2), Rational(3, 2)});
    CHECK(sep.p[2] == ZPoly{Rational(-3, 8), Rational(-9, 8), Rational(27, 16)});
    CHECK(sep.mu[2] == Rational(1, 4));
    CHECK(sep.mu[3] == Rational(1, 4));
    CHECK(sep.mu[4] == Rational(27, 64));
    CHECK(sep.C[4] == Rational(-9, 32));

    // residual of the order-N truncation scales like mu_{N+1} eps^{2N+2}
    // (the v11-weighted leading term; here v11 = -1)
    for (int Nt : {3, 5}) {
        Real r1 = abs(formal_ode_residual(tab, sep, Real("0.15"), Cplx(Real("0.7")), Nt));
        Real pred = to_real(sep.mu[Nt + 1]) * rpow(Real("0.15"), 2 * Nt + 2);
        CHECK(rabs(r1 / pred - 1) < Real("0.1"));
        Real r2 = abs(formal_ode_residual(tab, sep, Real("0.075"), Cplx(Real("0.7")), Nt));
        Real ratio = r1 / r2;
        Real expo = rpow(Real(2), 2 * Nt + 2);
        CHECK(rabs(ratio / expo - 1) < Real("0.1"));
    }

    // determinism: a second run reproduces identical rationals
    FormalSeparatrix sep2 = formal_separatrix(tab, 8);
    CHECK(sep2.p[5] == sep.p[5]);
    CHECK(sep2.mu[9] == sep.mu[9]);
}

TEST_CASE("formal_u") {
    NormalFormTables ta = extract_tables(model_a());
    FormalSeparatrix sa = formal_separatrix(ta, 8);
    FormalU ua = formal_u(ta, sa, 8);
    CHECK(ua.omega[0] == 1);
    CHECK(ua.omega[1] == Rational(-1, 10));  // c * p_{1,0} = (1/5)(-1/2)
    for (int k = 2; k <= 8; ++k) CHECK(ua.omega[k] == 0);
    // u_0 = 3 c tanh(s/2): int of c * 3/2 z with I_1 = 2 T_0
    REQUIRE(ua.u[0].size() == 1);
    CHECK(ua.u[0][0] == Rational(3, 5));
    for (auto& c : ua.u[1]) CHECK(c == 0);

    NormalFormTables tb = extract_tables(model_b());
    FormalSeparatrix sb = formal_separatrix(tb, 12);
    FormalU ub = formal_u(tb, sb, 12);
    CHECK(ub.omega[2] == Rational(-3, 40));
    CHECK(ub.omega[3] == Rational(-9, 80));
    CHECK(ub.omega[8] == Rational(-938223, 163840));

    // end-to-end: du/dt = dV/dI(x1, 0) along the series
    Real eps("0.1");
    Real h = rpow(Real(2), -30);
    Cplx t(Real("0.9"));
    FormalEval f0 = evaluate_formal(sb, ub, eps, t, 12);
    FormalEval fp = evaluate_formal(sb, ub, eps, t + Cplx(h), 12);
    FormalEval fm = evaluate_formal(sb, ub, eps, t - Cplx(h), 12);
    Cplx dudt = (fp.u - fm.u) / (2 * h);
    Cplx G = Cplx(1) + Cplx(to_real(Rational(1, 5))) * f0.x1;
    CHECK(abs(dudt - G) < Real(1e-17));
    CHECK(!f0.pole_warning);
    // near the singularity the evaluator warns
    Cplx tpole = iu() * (real_pi() / eps) + Cplx(Real(1));
    CHECK(evaluate_formal(sb, ub, eps, tpole, 12).pole_warning);
}

TEST_CASE("sfunc calculus") {
    // f = z + z' + s z^2 + s z' z
    SFunc f;
    f.A[1] = 1;
    f.B[0] = 1;
    f.C[2] = 1;
    f.D[1] = 1;
    Cplx s(Real("0.6"), Real("0.3"));
    Real h = rpow(Real(2), -35);
    Cplx num = (sfunc_eval(f, s + Cplx(h)) - sfunc_eval(f, s - Cplx(h))) / (2 * h);
    Cplx ana = sfunc_eval(sfunc_deriv(f), s);
    CHECK(abs(num - ana) < Real(1e-18));
}

TEST_CASE("formal_xi4") {
    NormalFormTables ta = extract_tables(model_a());
    FormalSeparatrix sa = formal_separatrix(ta, 8);
    FormalXi4 xa = formal_xi4(sa, 7);
    // closed form of the base order: v0 = p11^{-1}(-z^{-1}/2 + 15/8 (s z' + 2 z - 2/3))
    CHECK(xa.v[0].A == LaurentZ{{-1, Rational(-1, 3)}, {0, Rational(-5, 6)}, {1, Rational(5, 2)}});
    CHECK(xa.v[0].B.empty());
    CHECK(xa.v[0].C.empty());
    CHECK(xa.v[0].D == LaurentZ{{0, Rational(5, 4)}});
    // exact cubic model: all corrections vanish
    for (int k = 1; k <= 7; ++k) {
        CHECK(xa.v[k].A.empty());
        CHECK(xa.v[k].D.empty());
    }

    NormalFormTables tb = extract_tables(model_b());
    FormalSeparatrix sb = formal_separatrix(tb, 8);
    FormalXi4 xb = formal_xi4(sb, 6);
    CHECK(xb.v[1].A == LaurentZ{{-1, Rational(-1, 4)},
                                {0, Rational(13, 8)},
                                {1, Rational(-9)},
                                {2, Rational(45, 8)}});
    CHECK(xb.v[1].D == LaurentZ{{0, Rational(-57, 16)}, {1, Rational(45, 16)}});

    // Wronskian hierarchy: sum_{j+k=n+1} (p_j' v_k' - p_j'' v_k) = delta_{n0},
    // verified numerically at a complex sample point
    Cplx s(Real("0.8"), Real("0.4"));
    Cplx ch = cosh(s / Real(2)), sh = sinh(s / Real(2));
    Cplx z = Cplx(1) / (ch * ch);
    Cplx zp = -sh / (ch * ch * ch);
    for (int n = 0; n <= 6; ++n) {
        Cplx W;
        for (int j = 1; j <= n + 1; ++j) {
            int k = n + 1 - j;
            W += zpoly_eval(zpoly_dz(sb.p[j]), z) * zp * sfunc_eval(sfunc_deriv(xb.v[k]), s) -
                 zpoly_eval(zpoly_dss(sb.p[j]), z) * sfunc_eval(xb.v[k], s);
        }
        CHECK(abs(W - (n == 0 ? Cplx(1) : Cplx())) < Real(1e-65));
    }
}

TEST_CASE("reexpand_at_singularity") {
    NormalFormTables ta = extract_tables(model_a());
    FormalSeparatrix sa = formal_separatrix(ta, 8);
    FormalU ua = formal_u(ta, sa, 8);
    LaurentExpansion la = reexpand_at_singularity(sa, ua, 4, 3);
    // exact cubic: A0 = -6 tau^{-2}, B0 = 12 tau^{-3}, all higher orders empty
    CHECK(la.A[0] == std::map<int, Rational>{{-2, Rational(-6)}});
    CHECK(la.B[0] == std::map<int, Rational>{{-3, Rational(12)}});
    CHECK(la.A[1].empty());
    CHECK(la.B[1].empty());
    // U0 = 6c tau^{-1} + omega0 tau  (tanh(s/2) -> coth(sigma/2))
    CHECK(la.U[0] == std::map<int, Rational>{{-1, Rational(6, 5)}, {1, Rational(1)}});
    // U1's linear coefficient omega1 + u~_{0,1} = -1/10 + c/2 cancels exactly
    for (auto& [k, c] : la.U[1]) CHECK(c == 0);

    NormalFormTables tb = extract_tables(model_b());
    FormalSeparatrix sb = formal_separatrix(tb, 12);
    FormalU ub = formal_u(tb, sb, 12);
    LaurentExpansion lb = reexpand_at_singularity(sb, ub, 4, 3);
    // the order-1 maps vanish identically for any admissible model
    CHECK(lb.A[1].empty());
    CHECK(lb.B[1].empty());
    CHECK(lb.A[0] == std::map<int, Rational>{
                         {-8, Rational(2187, 4)}, {-6, Rational(-243, 2)}, {-4, Rational(27)}, {-2, Rational(-6)}});

    // resummation agrees with direct evaluation inside the matching annulus
    LaurentExpansion le = reexpand_at_singularity(sb, ub, 10, 4);
    Real eps("0.1");
    Cplx tau(Real(6), Real(-6));
    Cplx t = tau + iu() * real_pi() / eps;
    FormalEval fe = evaluate_formal(sb, ub, eps, t, 12, Real("0.01"));
    Cplx x1sum, y1sum, usum;
    Real ep(1);
    for (int m = 0; m <= le.mmax; ++m) {
        x1sum += Cplx(ep) * eval_tau_poly(le.A[m], tau);
        y1sum += Cplx(ep) * eval_tau_poly(le.B[m], tau);
        usum += Cplx(ep) * eval_tau_poly(le.U[m], tau);
        ep *= eps * eps;
    }
    usum += iu() * real_pi() * evaluate_omega(ub, eps, 12) / eps;
    CHECK(abs(fe.x1 - x1sum) < Real(1e-8));
    CHECK(abs(fe.y1 - y1sum) < Real(1e-8));
    CHECK(abs(fe.u - usum) < Real(1e-8));
}

TEST_CASE("evaluate_mu and rational_string") {
    NormalFormTables ta = extract_tables(model_a());
    FormalSeparatrix sa = formal_separatrix(ta, 8);
    Real eps("0.3");
    CHECK(rabs(evaluate_mu(sa, eps, 8) - rpow(eps, 4) / 4) < Real(1e-70));
    CHECK(rational_string(Rational(-3, 8)) == "-3/8");
    CHECK(rational_string(Rational(5)) == "5");
}
