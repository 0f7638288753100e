#include "sepsplit/manifolds.hpp"

#include <algorithm>

namespace sepsplit {

namespace {

// row of the linear functional w -> Omega(u, w)
std::vector<Cplx> omega_row(const PhasePoint& u) {
    return {-u[1], u[0], -u[3], u[2]};
}

}  // namespace

ManifoldContext make_context(const PolyHamiltonian& H, const Real& mu, const Real& nu,
                             const IntegratorConfig& cfg, int N) {
    ManifoldContext ctx;
    ctx.H = H;
    ctx.mu = mu;
    ctx.nu = nu;
    ctx.cfg = cfg;
    ctx.N = N;
    ctx.fs = make_field_system(H, mu, nu);
    ctx.eq = find_equilibrium(H, mu, nu);
    ctx.tab = extract_tables(H);
    ctx.sep = formal_separatrix(ctx.tab, N);
    ctx.fu = formal_u(ctx.tab, ctx.sep, N);
    ctx.apex = evaluate_formal(ctx.sep, ctx.fu, ctx.eq.lambda, Cplx(0), N).x1.re;
    return ctx;
}

Real matched_offset(const ManifoldContext& ctx, bool stable, const Real& T_seed) {
    Real eps = ctx.eq.lambda;
    Cplx t = Cplx(stable ? T_seed : -T_seed);
    FormalEval fe = evaluate_formal(ctx.sep, ctx.fu, eps, t, ctx.N);
    // measure the amplitude against the formal limit x1(-+inf) = sum eps^{2k} p_k(0)
    // rather than the true equilibrium: the two differ by O(nu) + truncation,
    // which would otherwise swamp (and can flip the sign of) the e^{-lambda T}
    // separatrix amplitude
    Real x_inf = 0;
    for (int k = 1; k <= ctx.N && k < (int)ctx.sep.p.size(); ++k)
        if (!ctx.sep.p[k].empty())
            x_inf += rpow(eps, 2 * k) * to_real(ctx.sep.p[k][0]);
    const PhasePoint& w = stable ? ctx.eq.w_stable : ctx.eq.w_unstable;
    return (fe.x1.re - x_inf) / w.x1().re;
}

PhasePoint seed_separatrix(const ManifoldContext& ctx, bool stable, const Real& T_seed,
                           const Real& offset) {
    const PhasePoint& w = stable ? ctx.eq.w_stable : ctx.eq.w_unstable;
    PhasePoint seed = ctx.eq.location + Cplx(offset) * w;
    // independent cross-check against the formal series at t = -+T_seed
    Real eps = ctx.eq.lambda;
    FormalEval fe = evaluate_formal(ctx.sep, ctx.fu, eps, Cplx(stable ? T_seed : -T_seed), ctx.N);
    PhasePoint formal(fe.x1, fe.y1, 0, 0);
    Real diff = max_norm(seed - formal);
    Real budget = Real(10) * (rpow(eps, 2 * ctx.N + 2) + offset * offset +
                              2 * ctx.nu * (abs(ctx.eq.location.x1()) + rabs(offset))) +
                  rpow(Real(2), -(int)precision_bits() + 24);
    if (diff > budget)
        throw ComputationError("seed cross-check disagreement (offset too large)");
    return seed;
}

SeparatrixSolution build_separatrix(const ManifoldContext& ctx, bool stable,
                                    const Real& T_seed) {
    SeparatrixSolution sol;
    sol.stable = stable;
    sol.T_seed = T_seed;
    sol.seed_state = seed_separatrix(ctx, stable, T_seed, matched_offset(ctx, stable, T_seed));

    // flow toward the loop and locate the primary Sigma-crossing
    PolyOde sys = field_ode(ctx.fs);
    TaylorStepper st(sys, ctx.cfg);
    Cplx t0(stable ? T_seed : -T_seed);
    Cplx dir(stable ? Real(-1) : Real(1));
    st.set_state(t0, {sol.seed_state[0], sol.seed_state[1], sol.seed_state[2],
                      sol.seed_state[3]});
    Real traveled = 0, limit = 2 * T_seed + 10;
    Real apex_lo = ctx.apex / 2, apex_hi = ctx.apex * 3 / 2;
    Cplx h_energy = ctx.fs.H.eval(sol.seed_state);
    Real drift = 0;
    Real prev_y1 = sol.seed_state.y1().re;
    bool prev_in_window = false;
    while (true) {
        Real h = st.step(dir, Real(2));
        traveled += h;
        if (traveled > limit) throw ComputationError("no Sigma-crossing found");
        Real x1 = st.state()[0].re, y1 = st.state()[1].re;
        bool in_window = x1 > apex_lo && x1 < apex_hi;
        PhasePoint cur(st.state()[0], st.state()[1], st.state()[2], st.state()[3]);
        drift = rmax(drift, abs(ctx.fs.H.eval(cur) - h_energy));
        if ((in_window || prev_in_window) && prev_y1 * y1 <= 0 && (prev_y1 != 0 || y1 != 0)) {
            // Newton on the crossing time within the dense step
            Real hr = h * prev_y1 / (prev_y1 - y1);
            for (int it = 0; it < 80; ++it) {
                Real f = st.dense(hr)[1].re;
                Real fp = st.dense_derivative(hr)[1].re;
                if (fp == 0) break;
                Real step = f / fp;
                hr -= step;
                if (hr < 0) hr = 0;
                if (hr > h) hr = h;
                if (rabs(step) < rmax(Real(1), rabs(hr)) * rpow(Real(2), -(int)precision_bits() + 4))
                    break;
            }
            auto x = st.dense(hr);
            sol.origin_state = PhasePoint(x[0], x[1], x[2], x[3]);
            sol.sigma_residual = rabs(x[1].re);
            Cplx t_cross = st.time() - dir * (h - hr);
            sol.T_flow = abs(t_cross - t0);
            sol.drift = rmax(drift, abs(ctx.fs.H.eval(sol.origin_state) - h_energy));
            return sol;
        }
        prev_y1 = y1;
        prev_in_window = in_window;
    }
}

void normalize_time_origin(const ManifoldContext& ctx, SeparatrixSolution& plus,
                           const SeparatrixSolution& minus, const VariationalBasis& basis) {
    if (plus.stable == minus.stable)
        throw ComputationError("normalize_time_origin: need one stable and one unstable");
    const int i0 = basis.i0;
    const PhasePoint& xi3 = basis.xi3[i0];
    const PhasePoint& xi4 = basis.xi4[i0];
    Real scale4 = max_norm(xi4);
    Real floor = rpow(Real(2), -(int)precision_bits() + 16);
    // Newton on the time shift sigma: kill the flow-direction component
    // theta3(sigma) = Omega(delta(sigma), xi4(0)); the derivative
    // Omega(xdot+, xi4) ~ Omega(xi3, xi4) = 1 is well conditioned.
    bool converged = false;
    for (int it = 0; it < 40; ++it) {
        PhasePoint delta = plus.origin_state - minus.origin_state;
        Real dn = max_norm(delta);
        Real r = symplectic_pair(delta, xi4).re;
        if (rabs(r) <= rmax(dn * scale4 * Real("1e-9"), floor)) {
            converged = true;
            break;
        }
        Real d = symplectic_pair(ctx.fs.eval_field(plus.origin_state), xi4).re;
        if (d == 0) throw ComputationError("normalize_time_origin: degenerate derivative");
        Real sigma = -r / d;
        if (rabs(sigma) < floor) {
            converged = true;
            break;
        }
        Trajectory t = integrate_flow(ctx.fs, plus.origin_state,
                                      ComplexPath{Cplx(0), Cplx(sigma)}, ctx.cfg);
        plus.origin_state = t.final_state();
    }
    if (!converged) throw ComputationError("normalize_time_origin: root-solve non-convergence");
    // section postcondition: Omega(delta, xi3) = dH . delta + O(|delta|^2) must
    // be small by the energy equality H(x+) = H(x-) = H(p); the quadratic term
    // is bounded through the Hessian acting on delta itself
    PhasePoint delta = plus.origin_state - minus.origin_state;
    Real dn = max_norm(delta);
    Real quad = dn * max_norm(ctx.fs.apply_jhess(plus.origin_state, delta));
    if (abs(symplectic_pair(delta, xi3)) >
        rmax(rmax(Real("1e-3") * dn * max_norm(xi3), 2 * quad), floor))
        throw ComputationError("normalize_time_origin: section residual too large");
}

VariationalBasis build_variational_basis(const ManifoldContext& ctx,
                                         const SeparatrixSolution& minus) {
    if (minus.stable) throw ComputationError("basis must be built along x^-");
    VariationalBasis vb;
    Real W = 1 / ctx.eq.lambda;
    vb.window = W;
    Real Tf = minus.T_flow;
    std::vector<Real> ts{-Tf, -W, -W / 2, Real(0), W / 2, W};
    vb.times.assign(ts.begin(), ts.end());
    vb.i0 = 3;

    IntegratorConfig cfg = ctx.cfg;
    cfg.blowup_norm = rmax(cfg.blowup_norm, Real("1e12"));
    ComplexPath path{Cplx(-Tf), Cplx(-W), Cplx(-W / 2), Cplx(0), Cplx(W / 2), Cplx(W)};

    // base run with the two oscillatory solutions transported from the seed
    Trajectory base = integrate_flow(ctx.fs, minus.seed_state, path, cfg);
    Real omega = ctx.eq.omega;
    // xi2(t) -> e^{i omega t} v_mu as t -> -inf
    PhasePoint xi2_seed = exp(Cplx(Real(0), Real(-omega * Tf))) * ctx.eq.v;
    PhasePoint xi1_seed(conj(xi2_seed[0]), conj(xi2_seed[1]), conj(xi2_seed[2]),
                        conj(xi2_seed[3]));
    auto xi2_run = integrate_variational(ctx.fs, base, xi2_seed, cfg);
    auto xi1_run = integrate_variational(ctx.fs, base, xi1_seed, cfg);

    size_t n = base.samples.size();
    vb.xminus.resize(n);
    vb.xi1.resize(n);
    vb.xi2.resize(n);
    vb.xi3.resize(n);
    vb.xi4.assign(n, PhasePoint());
    for (size_t i = 0; i < n; ++i) {
        vb.xminus[i] = base.samples[i].second;
        vb.xi1[i] = xi1_run[i].second;
        vb.xi2[i] = xi2_run[i].second;
        vb.xi3[i] = ctx.fs.eval_field(vb.xminus[i]);
    }

    // xi4 from the pairing constraints.  The pairings are t-invariant, so the
    // constraints are imposed at t = 0 (where all magnitudes are O(1)) instead
    // of at the seed; the two prescriptions differ only by admissible
    // xi1/xi2/xi3 multiples.  Gauge: Euclidean orthogonality to xi3(0).
    const int i0 = vb.i0;
    std::vector<std::vector<Cplx>> A{omega_row(vb.xi1[i0]), omega_row(vb.xi2[i0]),
                                     omega_row(vb.xi3[i0]),
                                     {conj(vb.xi3[i0][0]), conj(vb.xi3[i0][1]),
                                      conj(vb.xi3[i0][2]), conj(vb.xi3[i0][3])}};
    std::vector<Cplx> rhs{Cplx(0), Cplx(0), Cplx(1), Cplx(0)};
    auto x4 = solve_linear(A, rhs);
    PhasePoint xi4_0(x4[0], x4[1], x4[2], x4[3]);
    vb.xi4[i0] = xi4_0;
    // transport xi4 across the window from t = 0
    {
        ComplexPath fwd{Cplx(0), Cplx(W / 2), Cplx(W)};
        Trajectory bf = integrate_flow(ctx.fs, vb.xminus[i0], fwd, cfg);
        auto xf = integrate_variational(ctx.fs, bf, xi4_0, cfg);
        vb.xi4[i0 + 1] = xf[1].second;
        vb.xi4[i0 + 2] = xf[2].second;
        ComplexPath bwd{Cplx(0), Cplx(-W / 2), Cplx(-W)};
        Trajectory bb = integrate_flow(ctx.fs, vb.xminus[i0], bwd, cfg);
        auto xb = integrate_variational(ctx.fs, bb, xi4_0, cfg);
        vb.xi4[i0 - 1] = xb[1].second;
        vb.xi4[i0 - 2] = xb[2].second;
    }

    // normalization report at t = 0 with the real combinations
    // x~1 = (xi1 + xi2)/2, x~2 = (xi2 - xi1)/(2i)
    PhasePoint x1t = Cplx(Real(1) / 2) * (vb.xi1[i0] + vb.xi2[i0]);
    PhasePoint x2t = Cplx(Real(0), Real(-0.5)) * (vb.xi2[i0] - vb.xi1[i0]);
    vb.pairings = {symplectic_pair(x1t, x2t),       symplectic_pair(vb.xi3[i0], vb.xi4[i0]),
                   symplectic_pair(x1t, vb.xi3[i0]), symplectic_pair(x1t, vb.xi4[i0]),
                   symplectic_pair(x2t, vb.xi3[i0]), symplectic_pair(x2t, vb.xi4[i0])};
    return vb;
}

SplittingMeasurement measure_splitting(const ManifoldContext& ctx,
                                       const SeparatrixSolution& plus,
                                       const SeparatrixSolution& minus,
                                       const VariationalBasis& basis) {
    SplittingMeasurement m;
    const int i0 = basis.i0;
    m.delta0 = plus.origin_state - minus.origin_state;
    m.delta_norm = max_norm(m.delta0);
    // coefficients of delta in the basis (Eq. 22 pairings):
    //   theta1 = Omega(delta, xi2)/(2i),  theta2 = -Omega(delta, xi1)/(2i),
    //   theta3 = Omega(delta, xi4),       theta4 = -Omega(delta, xi3)
    Cplx twoi(Real(0), Real(2));
    m.theta1 = symplectic_pair(m.delta0, basis.xi2[i0]) / twoi;
    m.theta2 = -(symplectic_pair(m.delta0, basis.xi1[i0]) / twoi);
    m.theta3 = symplectic_pair(m.delta0, basis.xi4[i0]);
    m.theta4 = -symplectic_pair(m.delta0, basis.xi3[i0]);
    m.E_e1 = 2 * norm_sq(m.theta1);

    // x^+ over the window
    Real W = basis.window;
    IntegratorConfig cfg = ctx.cfg;
    ComplexPath fwd{Cplx(0), Cplx(W / 2), Cplx(W)};
    ComplexPath bwd{Cplx(0), Cplx(-W / 2), Cplx(-W)};
    Trajectory pf = integrate_flow(ctx.fs, plus.origin_state, fwd, cfg);
    Trajectory pb = integrate_flow(ctx.fs, plus.origin_state, bwd, cfg);
    std::vector<std::pair<int, PhasePoint>> xplus{{i0 - 2, pb.samples[2].second},
                                                  {i0 - 1, pb.samples[1].second},
                                                  {i0 + 1, pf.samples[1].second},
                                                  {i0 + 2, pf.samples[2].second}};
    for (const auto& [i, xp] : xplus) {
        PhasePoint dt = xp - basis.xminus[i];
        Cplx th = symplectic_pair(dt, basis.xi2[i]) / twoi;
        m.theta1_window_variation = rmax(m.theta1_window_variation, abs(th - m.theta1));
    }

    m.drift = rmax(rmax(plus.drift, minus.drift), rmax(energy_drift(pf), energy_drift(pb)));
    if (m.E_e1 < Real(1000) * m.drift * m.drift) m.upper_bound = true;
    return m;
}

SplitResult run_split(const PolyHamiltonian& H, const Real& mu, const Real& nu,
                      const IntegratorConfig& cfg, const Real& T_over_lambda, int N) {
    ManifoldContext ctx = make_context(H, mu, nu, cfg, N);
    SplitResult r;
    r.mu = mu;
    r.nu = nu;
    r.lambda = ctx.eq.lambda;
    r.omega = ctx.eq.omega;
    Real T = T_over_lambda / ctx.eq.lambda;
    SeparatrixSolution xm = build_separatrix(ctx, false, T);
    SeparatrixSolution xp = build_separatrix(ctx, true, T);
    VariationalBasis vb = build_variational_basis(ctx, xm);
    normalize_time_origin(ctx, xp, xm, vb);
    r.m = measure_splitting(ctx, xp, xm, vb);
    return r;
}

}  // namespace sepsplit
