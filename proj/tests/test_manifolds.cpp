#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "sepsplit/manifolds.hpp"

using namespace sepsplit;
using boost::multiprecision::sinh;
using boost::multiprecision::sqrt;

namespace {
struct PrecisionInit {
    PrecisionInit() { set_precision_bits(256); }
} init_;

IntegratorConfig tight() {
    IntegratorConfig cfg;
    cfg.abs_tol = cfg.rel_tol = Real("1e-30");
    return cfg;
}

// cubic model with the elliptic-frequency coupling c = 1/5
PolyHamiltonian model_a() { return cubic_model(1, 1, Rational(1, 5), 1); }
// decoupled elliptic block (c = 0): the Melnikov integral has no phase
// modulation and a closed form
PolyHamiltonian model_c0() { return cubic_model(1, 1, 0, 1); }

PolyHamiltonian with_coupling(PolyHamiltonian H) {
    H.add_term({1, 0, 1, 0, 0, 1}, Rational(1));  // nu * x1 * x2
    return H;
}

const Real kMu("0.01");
}  // namespace

TEST_CASE("seed matching and oversized-offset refusal") {
    ManifoldContext ctx = make_context(model_a(), kMu, 0, tight());
    Real T = Real(40) / ctx.eq.lambda;
    Real off = matched_offset(ctx, false, T);
    // amplitude 12 sqrt(mu) e^{-lambda T} / w_x1 ~ 5.6e-18
    CHECK(off > Real("1e-18"));
    CHECK(off < Real("1e-17"));
    // the loop is even in t: stable and unstable offsets coincide
    CHECK(rabs(matched_offset(ctx, true, T) - off) < Real("1e-33"));
    PhasePoint seed = seed_separatrix(ctx, false, T, off);
    // nu = 0: the (x1, y1) plane is invariant, elliptic components vanish
    CHECK(abs(seed[2]) < Real("1e-40"));
    CHECK(abs(seed[3]) < Real("1e-40"));
    // an offset inconsistent with T_seed fails the formal-series cross-check
    CHECK_THROWS_AS(seed_separatrix(ctx, false, T, Real("0.01")), ComputationError);
}

TEST_CASE("primary crossing sits at the loop apex") {
    ManifoldContext ctx = make_context(model_a(), kMu, 0, tight());
    Real T = Real(40) / ctx.eq.lambda;
    SeparatrixSolution xm = build_separatrix(ctx, false, T);
    CHECK_FALSE(xm.stable);
    // cubic loop apex x1 = -sqrt(mu) + 3 sqrt(mu) = 2 sqrt(mu), exactly
    CHECK(abs(xm.origin_state.x1() - Cplx(2 * sqrt(kMu))) < Real("1e-12"));
    CHECK(xm.sigma_residual < Real("1e-20"));
    CHECK(abs(xm.origin_state[2]) < Real("1e-40"));
    CHECK(abs(xm.origin_state[3]) < Real("1e-40"));
    // the formal time parametrization is exact for the cubic model
    CHECK(rabs(xm.T_flow - T) < Real("1e-6"));
    CHECK(xm.drift < Real("1e-30"));
    // energy equality with the equilibrium
    FieldSystem fs = make_field_system(model_a(), kMu, 0);
    CHECK(abs(fs.H.eval(xm.origin_state) - fs.H.eval(ctx.eq.location)) < Real("1e-30"));

    SeparatrixSolution xp = build_separatrix(ctx, true, T);
    CHECK(xp.stable);
    // nu = 0 homoclinic: the two crossings coincide
    CHECK(max_norm(xp.origin_state - xm.origin_state) < Real("1e-25"));
}

TEST_CASE("doubling the seed time leaves origin and basis invariant") {
    ManifoldContext ctx = make_context(model_a(), kMu, 0, tight());
    Real T1 = Real(40) / ctx.eq.lambda, T2 = Real(55) / ctx.eq.lambda;
    SeparatrixSolution a = build_separatrix(ctx, false, T1);
    SeparatrixSolution b = build_separatrix(ctx, false, T2);
    CHECK(max_norm(a.origin_state - b.origin_state) < Real("1e-14"));
    // the asymptotically normalized xi2(0) is T_seed-independent
    VariationalBasis va = build_variational_basis(ctx, a);
    VariationalBasis vb = build_variational_basis(ctx, b);
    CHECK(max_norm(va.xi2[va.i0] - vb.xi2[vb.i0]) < Real("1e-12"));
}

TEST_CASE("integrable case: basis normalization and zero splitting") {
    ManifoldContext ctx = make_context(model_a(), kMu, 0, tight());
    Real T = Real(40) / ctx.eq.lambda;
    SeparatrixSolution xm = build_separatrix(ctx, false, T);
    SeparatrixSolution xp = build_separatrix(ctx, true, T);
    VariationalBasis vb = build_variational_basis(ctx, xm);
    // pairing normalization: Omega(x~1, x~2) = Omega(xi3, xi4) = 1, rest 0
    CHECK(abs(vb.pairings[0] - Cplx(1)) < Real("1e-28"));
    CHECK(abs(vb.pairings[1] - Cplx(1)) < Real("1e-28"));
    for (int k = 2; k < 6; ++k) CHECK(abs(vb.pairings[k]) < Real("1e-28"));
    // nu = 0: xi2 stays a pure elliptic rotation (decoupled block)
    for (size_t i = 0; i < vb.times.size(); ++i) {
        CHECK(abs(vb.xi2[i][0]) < Real("1e-25"));
        CHECK(rabs(abs(vb.xi2[i][2]) - 1) < Real("1e-25"));
    }
    normalize_time_origin(ctx, xp, xm, vb);
    SplittingMeasurement m = measure_splitting(ctx, xp, xm, vb);
    // unbroken integrability: no splitting, reported as an upper bound
    CHECK(m.E_e1 < Real("1e-50"));
    CHECK(abs(m.theta1) < Real("1e-25"));
    CHECK(m.upper_bound);
}

TEST_CASE("small-nu splitting matches the Melnikov prediction (c = 0)") {
    Real nu("0.001");
    SplitResult r = run_split(with_coupling(model_c0()), kMu, nu, tight());
    CHECK(rabs(r.omega - 1) < Real("1e-5"));
    // closed form: M = 6 pi omega / sinh(pi omega / lambda), E = nu^2 M^2 / 2
    Real M = 6 * real_pi() * r.omega / sinh(real_pi() * r.omega / r.lambda);
    Real Epred = nu * nu * M * M / 2;
    CHECK(rabs(r.m.E_e1 - Epred) < Real("1e-4") * Epred);
    CHECK_FALSE(r.m.upper_bound);
    // complex-conjugate symmetry of the elliptic projections at real time
    CHECK(abs(r.m.theta2 - conj(r.m.theta1)) < Real("1e-25"));
    // flow/energy components are second order in the splitting size
    Real d2 = r.m.delta_norm * r.m.delta_norm;
    CHECK(abs(r.m.theta3) < 10 * d2);
    CHECK(abs(r.m.theta4) < 10 * d2);
    CHECK(r.m.theta1_window_variation < Real("1e-12"));
    CHECK(r.m.drift < Real("1e-30"));
}

TEST_CASE("splitting matches the first-order variational ODE (c = 1/5)") {
    // |w+(0) - w-(0)| / nu for the phase-modulated elliptic forcing, from an
    // independent high-precision solve of the first-order equation
    // w' = -i (omega0 + c x1(t)) w - i x1(t) along the unperturbed loop
    Real dw("0.019631874522064");
    Real nu("0.001");
    SplitResult r = run_split(with_coupling(model_a()), kMu, nu, tight());
    Real Epred = nu * nu * dw * dw / 2;
    CHECK(rabs(r.m.E_e1 - Epred) < Real("1e-3") * Epred);
    CHECK(abs(r.m.theta2 - conj(r.m.theta1)) < Real("1e-25"));
}

TEST_CASE("measurement invariances") {
    Real nu("0.001");
    PolyHamiltonian H = with_coupling(model_c0());
    SplitResult base = run_split(H, kMu, nu, tight());
    // longer seed time
    SplitResult longer = run_split(H, kMu, nu, tight(), Real(60));
    CHECK(rabs(longer.m.E_e1 - base.m.E_e1) < Real("1e-5") * base.m.E_e1);
    // looser tolerance
    IntegratorConfig loose = tight();
    loose.abs_tol = loose.rel_tol = Real("1e-24");
    SplitResult l = run_split(H, kMu, nu, loose);
    CHECK(rabs(l.m.E_e1 - base.m.E_e1) < Real("1e-8") * base.m.E_e1);
    // RK cross-method run (crossing search stays Taylor; transports switch)
    IntegratorConfig rk = tight();
    rk.abs_tol = rk.rel_tol = Real("1e-16");
    rk.method = OdeMethod::rk8;
    SplitResult k = run_split(H, kMu, nu, rk);
    CHECK(rabs(k.m.E_e1 - base.m.E_e1) < Real("1e-6") * base.m.E_e1);
}
