#include "sepsplit/stokes.hpp"

#include <algorithm>
#include <map>

namespace sepsplit {

namespace {

using boost::multiprecision::exp;
using boost::multiprecision::log;
using boost::multiprecision::sqrt;

// Truncated series in w = tau^-1, index = power of w.
using SerR = std::vector<Real>;

SerR ser_mul(const SerR& a, const SerR& b, int M) {
    SerR r(M + 1, Real(0));
    for (int i = 0; i <= M && i < (int)a.size(); ++i) {
        if (a[i] == 0) continue;
        for (int j = 0; i + j <= M && j < (int)b.size(); ++j)
            if (b[j] != 0) r[i + j] += a[i] * b[j];
    }
    return r;
}

// P(X(w)) truncated at order M; the component series start at order >= 2, so
// monomials of total degree d contribute from order 2d only.
SerR compose(const NumPoly& P, const std::array<SerR, 4>& X, int M) {
    SerR out(M + 1, Real(0));
    for (const auto& t : P.t) {
        int deg = t.e[0] + t.e[1] + t.e[2] + t.e[3];
        if (2 * deg > M) continue;
        SerR prod(M + 1, Real(0));
        prod[0] = t.coeff;
        for (int v = 0; v < 4; ++v)
            for (int k = 0; k < t.e[v]; ++k) prod = ser_mul(prod, X[v], M);
        for (int n = 0; n <= M; ++n) out[n] += prod[n];
    }
    return out;
}

Real ser_max(const SerR& a) {
    Real m = 0;
    for (const auto& x : a) m = rmax(m, rabs(x));
    return m;
}

// Horner evaluation of sum a[n] tau^-n (complex coefficients).
Cplx horner_inv(const std::vector<Cplx>& a, const Cplx& tau) {
    Cplx w = Cplx(1) / tau;
    Cplx v(0);
    for (int n = (int)a.size() - 1; n >= 0; --n) v = v * w + a[n];
    return v;
}

Cplx horner_inv(const SerR& a, const Cplx& tau) {
    std::vector<Cplx> c(a.size());
    for (size_t n = 0; n < a.size(); ++n) c[n] = Cplx(a[n]);
    return horner_inv(c, tau);
}

// Append to out the monomials of P over the X-variables var_base..var_base+3,
// times optional extra linear factors, scaled by scale.
void add_terms(std::vector<PolyOde::Term>& out, const NumPoly& P, int var_base,
               const Cplx& scale, std::vector<std::pair<int, int>> extra = {}) {
    for (const auto& t : P.t) {
        PolyOde::Term o;
        o.coeff = scale * Cplx(t.coeff);
        for (int v = 0; v < 4; ++v)
            if (t.e[v] > 0) o.factors.emplace_back(var_base + v, t.e[v]);
        for (const auto& f : extra) o.factors.push_back(f);
        out.push_back(std::move(o));
    }
}

PhasePoint slice(const std::vector<Cplx>& x, int base) {
    return {x[base], x[base + 1], x[base + 2], x[base + 3]};
}

Real coeff_of(const NumPoly& P, std::array<int, 4> e) {
    Real c = 0;
    for (const auto& t : P.t)
        if (t.e == e) c += t.coeff;
    return c;
}

// The pairing is tau-independent, so the samples need not reach the entry
// depth; a shallow window keeps the e^{omega0 T} amplification of integration
// noise far below the pairing value.
std::vector<Real> default_T_list(const Real& omega0) {
    Real T0 = Real(16) / omega0;
    std::vector<Real> out;
    for (int j = 0; j < 7; ++j) out.push_back(Real(T0 + Real(4 * j) / omega0));
    return out;
}

void precision_guard(const Real& omega0, const Real& Tmax) {
    Real needed = omega0 * Tmax / Real(log(Real(2))) + 64;
    if (needed > (int)precision_bits())
        throw ComputationError("descent depth needs > " +
                               needed.str(0, std::ios_base::fixed) +
                               " bits at this elliptic frequency");
}

// Limit of near-constant pairing samples: plain mean when the spread is small,
// Aitken's delta-squared on the tail otherwise.
Cplx sample_limit(const std::vector<Cplx>& v, bool& converged) {
    size_t K = v.size();
    Cplx mean(0);
    for (const auto& x : v) mean += x;
    mean = mean / Real((int)K);
    Real spread = 0;
    for (const auto& x : v) spread = rmax(spread, abs(x - mean));
    if (spread <= Real("1e-3") * abs(mean) || spread == 0) {
        converged = true;
        return mean;
    }
    Cplx limit = v[K - 1];
    Cplx d1 = v[K - 2] - v[K - 3], d2 = v[K - 1] - v[K - 2];
    if (abs(d1 - d2) > 0) limit = v[K - 1] + d2 * d2 / (d1 - d2);
    converged = true;
    for (size_t j = 2; j + 1 < K; ++j)
        if (abs(v[j + 1] - v[j]) >= abs(v[j] - v[j - 1])) converged = false;
    return limit;
}

// Three-parameter fit |d|(T) = A T^k e^{-rate T} in log space.
StokesFit decay_fit(const std::vector<Real>& T, const std::vector<Real>& mag) {
    StokesFit fit;
    std::vector<std::array<Real, 4>> rows;
    for (size_t j = 0; j < T.size(); ++j)
        if (mag[j] > 0) rows.push_back({Real(1), Real(log(T[j])), -T[j], Real(log(mag[j]))});
    if (rows.size() < 4) return fit;
    std::vector<std::vector<Real>> A(3, std::vector<Real>(3, Real(0)));
    std::vector<Real> b(3, Real(0));
    for (const auto& r : rows)
        for (int a = 0; a < 3; ++a) {
            for (int c = 0; c < 3; ++c) A[a][c] += r[a] * r[c];
            b[a] += r[a] * r[3];
        }
    try {
        std::vector<Real> p = solve_linear(std::move(A), std::move(b));
        fit.amplitude = exp(p[0]);
        fit.rate = p[2];
        for (const auto& r : rows)
            fit.residual =
                rmax(fit.residual, rabs(Real(r[3] - (p[0] + p[1] * r[1] + p[2] * r[2]))));
    } catch (const ComputationError&) {
        fit.residual = Real("1e6");
    }
    return fit;
}

// ---------------------------------------------------------------------------
// First-order elliptic response.  The inner Hamiltonian splits into an
// elliptic-invariant part (the planar base plus its action coupling, rotation
// rate g(x1, y1)) and a part linear in (x2, y2) that forces the response
// W = delta x2 + i delta y2:
//   W' = -i g(X0(tau)) W + F(X0(tau)),   F = dH/dy2 - i dH/dx2 on the plane.
// delta0 is the difference of the two sector solutions of this linear
// equation; it is a multiple of the decaying elliptic mode e^{-i U0(tau)} and
// its pairing with eta0 = (0,0,1,i) e^{i U0} is the Stokes constant.
// Elliptic degree >= 2 non-action content is rejected; degree >= 3 terms act
// beyond first order and are dropped.
// ---------------------------------------------------------------------------

struct InnerDecomp {
    NumPoly base;      // planar + action-quadratic part (elliptic plane invariant)
    NumPoly g;         // rotation rate as a polynomial in (x1, y1)
    NumPoly fre, fim;  // forcing F = fre + i fim
    bool forced = false;
};

InnerDecomp split_inner(const NumPoly& H0) {
    InnerDecomp d;
    std::map<std::pair<int, int>, Real> cx2, cy2, cxy;
    Real scale = 0;
    for (const auto& t : H0.t) scale = rmax(scale, rabs(t.coeff));
    for (const auto& t : H0.t) {
        int deg = t.e[2] + t.e[3];
        if (deg == 1) {
            d.forced = true;
            std::array<int, 4> pe{t.e[0], t.e[1], 0, 0};
            if (t.e[3] == 1)
                d.fre.t.push_back({pe, t.coeff});
            else
                d.fim.t.push_back({pe, Real(-t.coeff)});
            continue;
        }
        d.base.t.push_back(t);
        if (deg == 2) {
            auto key = std::make_pair(t.e[0], t.e[1]);
            if (t.e[2] == 2)
                cx2[key] += t.coeff;
            else if (t.e[3] == 2)
                cy2[key] += t.coeff;
            else
                cxy[key] += t.coeff;
        }
    }
    Real tol = Real("1e-35") * rmax(scale, Real(1));
    for (const auto& [k, v] : cxy)
        if (rabs(v) > tol)
            throw ComputationError("elliptic quadratic block is not action-shaped");
    for (const auto& [k, v] : cy2)
        if (!cx2.count(k) && rabs(v) > tol)
            throw ComputationError("elliptic quadratic block is not action-shaped");
    for (const auto& [k, v] : cx2) {
        Real vy = cy2.count(k) ? cy2.at(k) : Real(0);
        if (rabs(Real(v - vy)) > tol)
            throw ComputationError("elliptic quadratic block is not action-shaped");
        d.g.t.push_back({{k.first, k.second, 0, 0}, Real(2 * v)});
    }
    return d;
}

// Coefficients of the power-behaved solution of W' = -i g W + F along the
// inner series: d[n] multiplies tau^-n.  The recursion divides by i omega0 at
// every order and the coefficients grow factorially (the Borel singularity at
// i omega0 is the Stokes constant itself), so evaluation truncates at the
// smallest term.
std::vector<Cplx> w_series(const InnerDecomp& dec, const InnerSeriesData& s, int Mw) {
    SerR G = compose(dec.g, s.c, Mw);
    SerR FR = compose(dec.fre, s.c, Mw), FI = compose(dec.fim, s.c, Mw);
    std::vector<Cplx> d(Mw + 1, Cplx(0));
    Cplx iw0 = iu() * Cplx(s.omega0);
    for (int n = 0; n <= Mw; ++n) {
        Cplx rhs(FR[n], FI[n]);
        if (n >= 1) rhs = rhs + Cplx(Real(n - 1)) * d[n - 1];
        for (int m = 1; m <= n; ++m)
            if (G[m] != 0) rhs = rhs - iu() * (Cplx(G[m]) * d[n - m]);
        d[n] = rhs / iw0;
    }
    return d;
}

// Evaluate sum d[k] tau^{-(lo+k)} with the smallest-term truncation rule.
Cplx eval_w(const std::vector<Cplx>& d, int lo, const Cplx& tau) {
    Cplx w = Cplx(1) / tau;
    Cplx p = lo >= 0 ? Cplx(1) / ipow(tau, lo) : ipow(tau, -lo);
    Cplx sum(0);
    Real last(-1);
    for (size_t k = 0; k < d.size(); ++k) {
        if (!(abs(d[k]) == 0)) {
            Cplx term = d[k] * p;
            Real m = abs(term);
            if ((int)k + lo >= 6 && last >= 0 && m > last) break;
            sum = sum + term;
            last = m;
        }
        p = p * w;
    }
    return sum;
}

// Laurent-with-offset helpers for the order-eps^4 response series: arrays are
// indexed by n + OFF where n is the power of tau^-1 (n may be negative).
void add_conv(std::vector<Cplx>& out, int OFF, const SerR& a, const std::vector<Cplx>& b,
              int blo, const Cplx& scale) {
    int N = (int)out.size();
    for (int i = 0; i < (int)a.size(); ++i) {
        if (a[i] == 0) continue;
        for (int j = 0; j < (int)b.size(); ++j) {
            if (abs(b[j]) == 0) continue;
            int n = i + blo + j;
            if (n + OFF >= 0 && n + OFF < N) out[n + OFF] += scale * Cplx(a[i]) * b[j];
        }
    }
}

// Entry-series for the eps^4 elliptic response W2 driven by the formal
// hierarchy data (X2 from the re-expanded separatrix, H2 couplings).
std::pair<std::vector<Cplx>, int> w2_series(const InnerDecomp& dec, const InnerDecomp& dec2,
                                            const InnerSeriesData& s,
                                            const std::vector<Cplx>& dW,
                                            const LaurentExpansion& lx, int Mw) {
    const int OFF = 8;
    int N = OFF + Mw + 1;
    std::vector<Cplx> X2x(N, Cplx(0)), X2y(N, Cplx(0));
    for (const auto& [k, c] : lx.A[2]) {
        int n = -k;
        if (n + OFF >= 0 && n + OFF < N) X2x[n + OFF] = Cplx(to_real(c));
    }
    for (const auto& [k, c] : lx.B[2]) {
        int n = -k;
        if (n + OFF >= 0 && n + OFF < N) X2y[n + OFF] = Cplx(to_real(c));
    }
    SerR G = compose(dec.g, s.c, Mw);
    SerR G2 = compose(dec2.g, s.c, Mw);
    SerR dgx = compose(derivative(dec.g, 0), s.c, Mw);
    SerR dgy = compose(derivative(dec.g, 1), s.c, Mw);
    SerR fr2 = compose(dec2.fre, s.c, Mw), fi2 = compose(dec2.fim, s.c, Mw);
    SerR dfrx = compose(derivative(dec.fre, 0), s.c, Mw);
    SerR dfry = compose(derivative(dec.fre, 1), s.c, Mw);
    SerR dfix = compose(derivative(dec.fim, 0), s.c, Mw);
    SerR dfiy = compose(derivative(dec.fim, 1), s.c, Mw);

    // rotation-rate correction a(tau) = g2(X0) + grad g(X0) . X2
    std::vector<Cplx> a(N, Cplx(0));
    for (int n = 0; n <= Mw; ++n) a[n + OFF] += Cplx(G2[n]);
    add_conv(a, OFF, dgx, X2x, -OFF, Cplx(1));
    add_conv(a, OFF, dgy, X2y, -OFF, Cplx(1));

    // forcing H = -i a W0 + grad F . X2 + F2
    std::vector<Cplx> H(N, Cplx(0));
    {
        SerR one(1, Real(1));
        add_conv(H, OFF, one, a, -OFF, Cplx(0));  // keep sizes aligned (no-op)
        for (int i = 0; i < N; ++i) {
            if (abs(a[i]) == 0) continue;
            for (int j = 0; j < (int)dW.size(); ++j) {
                int n = (i - OFF) + j;
                if (n + OFF >= 0 && n + OFF < N)
                    H[n + OFF] += Cplx(Real(0), Real(-1)) * a[i] * dW[j];
            }
        }
    }
    add_conv(H, OFF, dfrx, X2x, -OFF, Cplx(1));
    add_conv(H, OFF, dfry, X2y, -OFF, Cplx(1));
    add_conv(H, OFF, dfix, X2x, -OFF, iu());
    add_conv(H, OFF, dfiy, X2y, -OFF, iu());
    for (int n = 0; n <= Mw; ++n) H[n + OFF] += Cplx(fr2[n], fi2[n]);

    std::vector<Cplx> e(N, Cplx(0));
    Cplx iw0 = iu() * Cplx(s.omega0);
    for (int n = -OFF; n <= Mw; ++n) {
        Cplx rhs = H[n + OFF];
        if (n - 1 >= -OFF) rhs = rhs + Cplx(Real(n - 1)) * e[n - 1 + OFF];
        for (int m = 1; m <= Mw && n - m >= -OFF; ++m)
            if (G[m] != 0) rhs = rhs - iu() * (Cplx(G[m]) * e[n - m + OFF]);
        e[n + OFF] = rhs / iw0;
    }
    return {e, -OFF};
}

}  // namespace

InnerSeriesData inner_series(const NumPoly& H0, int M) {
    if (M < 6) throw ComputationError("inner series depth too small");
    FieldSystem fs = make_field_system(H0);
    // leading balance x1 = alpha tau^-2 against the cubic term of the potential
    Real g3 = coeff_of(H0, {3, 0, 0, 0});
    if (g3 == 0) throw ComputationError("inner Hamiltonian has no cubic x1 term");
    Real alpha = Real(-2) / g3;
    // elliptic block must be a rotation at the origin
    Real wx = 2 * coeff_of(H0, {0, 0, 2, 0});
    Real wy = 2 * coeff_of(H0, {0, 0, 0, 2});
    Real wc = coeff_of(H0, {0, 0, 1, 1});
    if (wx == 0 || rabs(Real(wx - wy)) > Real("1e-40") * rabs(wx) || wc != 0)
        throw ComputationError("elliptic block of H0 is not in rotation form");

    InnerSeriesData s;
    s.M = M;
    for (int i = 0; i < 4; ++i) s.c[i].assign(M + 1, Real(0));
    s.c[0][2] = alpha;
    s.c[1][3] = -2 * alpha;

    // unknown layout: (component, order), order 2..M, with x1's tau^-3
    // coefficient pinned to zero (time-shift gauge)
    std::vector<std::pair<int, int>> unk;
    for (int n = 2; n <= M; ++n)
        for (int i = 0; i < 4; ++i)
            if (!(i == 0 && n == 3)) unk.emplace_back(i, n);
    int rows = 4 * (M - 1);  // residual orders 2..M, all components
    auto row_of = [&](int i, int k) { return 4 * (k - 2) + i; };

    Real floor_res = rpow(Real(2), -(int)precision_bits() + 32);
    Real res = 0;
    for (int iter = 0; iter < 40; ++iter) {
        // residual E = dX/dtau - J H0'(X), coefficient orders 0..M
        std::array<SerR, 4> E;
        Real scale = 1;
        for (int i = 0; i < 4; ++i) scale = rmax(scale, ser_max(s.c[i]));
        for (int i = 0; i < 4; ++i) {
            SerR F = compose(fs.field[i], s.c, M);
            E[i].assign(M + 1, Real(0));
            for (int k = 0; k <= M; ++k) {
                Real dv = (k >= 3) ? Real(-(k - 1) * s.c[i][k - 1]) : Real(0);
                E[i][k] = dv - F[k];
            }
            if (rabs(E[i][0]) + rabs(E[i][1]) > Real("1e-35") * scale)
                throw ComputationError(
                    "H0 field must vanish to second order at the origin");
        }
        res = 0;
        for (int i = 0; i < 4; ++i)
            for (int k = 2; k <= M; ++k) res = rmax(res, rabs(E[i][k]));
        res /= scale;
        if (res < floor_res) break;

        // Jacobian of the residual orders w.r.t. the unknowns
        std::array<std::array<SerR, 4>, 4> jh;
        for (int i = 0; i < 4; ++i)
            for (int j = 0; j < 4; ++j) jh[i][j] = compose(fs.jhess[i][j], s.c, M);
        std::vector<std::vector<Real>> J(rows, std::vector<Real>(unk.size(), Real(0)));
        for (size_t u = 0; u < unk.size(); ++u) {
            auto [j, n] = unk[u];
            if (n + 1 <= M) J[row_of(j, n + 1)][u] -= n;
            for (int i = 0; i < 4; ++i)
                for (int k = std::max(2, n); k <= M; ++k)
                    if (jh[i][j][k - n] != 0) J[row_of(i, k)][u] -= jh[i][j][k - n];
        }
        // drop unknowns that no retained equation sees (their first appearance
        // is beyond the truncation; exact for the kept orders)
        std::vector<size_t> keep;
        for (size_t u = 0; u < unk.size(); ++u) {
            bool nz = false;
            for (int r = 0; r < rows && !nz; ++r) nz = J[r][u] != 0;
            if (nz) keep.push_back(u);
        }
        size_t C = keep.size();
        std::vector<std::vector<Real>> A(C, std::vector<Real>(C, Real(0)));
        std::vector<Real> b(C, Real(0));
        for (int r = 0; r < rows; ++r) {
            Real e = E[r % 4][r / 4 + 2];
            for (size_t a = 0; a < C; ++a) {
                Real ja = J[r][keep[a]];
                if (ja == 0) continue;
                for (size_t c = 0; c < C; ++c) A[a][c] += ja * J[r][keep[c]];
                b[a] -= ja * e;
            }
        }
        std::vector<Real> step = solve_linear(std::move(A), std::move(b));
        Real smax = 0;
        for (size_t a = 0; a < C; ++a) {
            auto [j, n] = unk[keep[a]];
            s.c[j][n] += step[a];
            smax = rmax(smax, rabs(step[a]));
        }
        if (smax < floor_res * scale) break;
    }
    s.newton_residual = res;

    // elliptic phase: i U' = [J H0''(X)(0,0,1,i)] projected on (0,0,1,i)
    std::array<std::array<SerR, 4>, 4> jh;
    for (int i = 2; i < 4; ++i)
        for (int j = 2; j < 4; ++j) jh[i][j] = compose(fs.jhess[i][j], s.c, M);
    std::vector<Cplx> up(M + 1);  // U' coefficients
    for (int n = 0; n <= M; ++n) {
        Real a = (jh[2][2][n] + jh[3][3][n]) / 2;  // Re(i U')
        Real b = (jh[2][3][n] - jh[3][2][n]) / 2;  // Im(i U')
        up[n] = Cplx(b, -a);
    }
    if (abs(up[1]) > Real("1e-35") * (1 + abs(up[0])))
        throw ComputationError("logarithmic term in the elliptic phase");
    s.omega0 = up[0].re;
    if (s.omega0 <= 0 || rabs(up[0].im) > Real("1e-35"))
        throw ComputationError("elliptic frequency must be real positive");
    s.phase.assign(M, Cplx(0));
    for (int n = 2; n <= M; ++n) s.phase[n - 1] = Cplx(Real(Real(-1) / (n - 1))) * up[n];
    return s;
}

PhasePoint eval_inner_series(const InnerSeriesData& s, const Cplx& tau) {
    PhasePoint p;
    for (int i = 0; i < 4; ++i) p[i] = horner_inv(s.c[i], tau);
    return p;
}

Cplx inner_phase(const InnerSeriesData& s, const Cplx& tau) {
    return Cplx(s.omega0) * tau + horner_inv(s.phase, tau);
}

PhasePoint inner_series_defect(const NumPoly& H0, const InnerSeriesData& s, const Cplx& tau) {
    FieldSystem fs = make_field_system(H0);
    PhasePoint X = eval_inner_series(s, tau);
    PhasePoint F = fs.eval_field(X);
    PhasePoint D;
    for (int i = 0; i < 4; ++i) {
        std::vector<Cplx> d(s.c[i].size(), Cplx(0));
        for (size_t n = 1; n < s.c[i].size(); ++n)
            d[n] = Cplx(Real(Real(-(int)(n - 1)) * s.c[i][n - 1]));
        D[i] = horner_inv(d, tau) - F[i];
    }
    return D;
}

InnerSolution solve_inner(const NumPoly& H0, const InnerSeriesData& s, int side,
                          const Real& tau_match, const std::vector<Real>& T_list,
                          const IntegratorConfig& cfg) {
    if (T_list.empty()) throw ComputationError("empty descent list");
    FieldSystem fs = make_field_system(H0);
    Real r2 = sqrt(Real(2));
    InnerSolution sol;
    sol.side = side;
    sol.tau_entry = Cplx(Real(side) * tau_match / r2, -tau_match / r2);
    sol.matching_residual = max_norm(inner_series_defect(H0, s, sol.tau_entry));
    ComplexPath path;
    path.vertices.push_back(sol.tau_entry);
    for (const auto& T : T_list) path.vertices.push_back(Cplx(Real(0), Real(-T)));
    IntegratorConfig c = cfg;
    c.samples_per_segment = 0;
    Trajectory traj = integrate_flow(fs, eval_inner_series(s, sol.tau_entry), path, c);
    sol.drift = energy_drift(traj);
    for (size_t j = 0; j < T_list.size(); ++j) {
        sol.taus.push_back(path.vertices[j + 1]);
        sol.states.push_back(traj.samples[j + 1].second);
    }
    return sol;
}

EtaSolution solve_eta0(const NumPoly& H0, const InnerSeriesData& s, const Real& tau_match,
                       const std::vector<Real>& T_list, const IntegratorConfig& cfg) {
    FieldSystem fs = make_field_system(H0);
    Real r2 = sqrt(Real(2));
    Cplx tau0(-tau_match / r2, -tau_match / r2);
    PolyOde sys = append_variational(field_ode(fs), fs);
    PhasePoint X0 = eval_inner_series(s, tau0);
    // integrate the de-normalized eta and restore the e^{i U0(tau0)} factor
    std::vector<Cplx> start = {X0[0], X0[1], X0[2], X0[3], Cplx(0), Cplx(0), Cplx(1), iu()};
    ComplexPath path;
    path.vertices.push_back(tau0);
    for (const auto& T : T_list) path.vertices.push_back(Cplx(Real(0), Real(-T)));
    IntegratorConfig c = cfg;
    c.samples_per_segment = 0;
    auto samples = integrate_ode(sys, start, path, c);
    Cplx P0 = exp(iu() * inner_phase(s, tau0));
    EtaSolution eta;
    eta.order = 0;
    for (size_t j = 0; j < T_list.size(); ++j) {
        eta.taus.push_back(path.vertices[j + 1]);
        eta.states.push_back(P0 * slice(samples[j + 1].second, 4));
    }
    return eta;
}

StokesResult stokes_b0(const std::vector<Real>& T_list, const std::vector<PhasePoint>& delta0,
                       const std::vector<PhasePoint>& eta0) {
    if (T_list.size() != delta0.size() || T_list.size() != eta0.size() || T_list.size() < 4)
        throw ComputationError("pairing extraction needs >= 4 aligned samples");
    StokesResult r;
    size_t K = T_list.size();
    std::vector<Cplx> v(K);
    std::vector<Real> mag(K);
    bool any = false;
    for (size_t j = 0; j < K; ++j) {
        v[j] = symplectic_pair(delta0[j], eta0[j]);
        mag[j] = max_norm(delta0[j]);
        if (mag[j] > 0) any = true;
        r.samples.emplace_back(T_list[j], v[j]);
    }
    if (!any) {
        r.b0 = Cplx(0);
        r.upper_bound = true;
        r.bn = {r.b0};
        r.an = assemble_an(r.bn);
        return r;
    }
    bool converged = true;
    r.b0 = sample_limit(v, converged);
    // the decay of delta0 itself carries the exponential law: |delta0(-iT)|
    // ~ A T^k e^{-omega0 T}
    bool mono = true;
    for (size_t j = 0; j + 1 < K; ++j)
        if (mag[j + 1] >= mag[j]) mono = false;
    r.fit = decay_fit(T_list, mag);
    r.reliable = converged && mono && r.fit.residual <= Real("0.5") && r.fit.rate > 0;
    r.bn = {r.b0};
    r.an = assemble_an(r.bn);
    return r;
}

std::vector<Real> assemble_an(const std::vector<Cplx>& bn) {
    std::vector<Real> an(bn.size());
    for (size_t n = 0; n < bn.size(); ++n) {
        Cplx s(0);
        for (size_t k = 0; k <= n; ++k) s += bn[k] * conj(bn[n - k]);
        an[n] = s.re / 2;
    }
    return an;
}

namespace {

StokesResult run_stokes_core(const NumPoly& H0full, const NumPoly* H2full,
                             const LaurentExpansion* lx, const StokesConfig& cfg) {
    InnerDecomp dec = split_inner(H0full);
    Real w0 = 2 * coeff_of(dec.base, {0, 0, 2, 0});
    if (w0 <= 0) throw ComputationError("no elliptic rotation in the inner Hamiltonian");
    int Mw = cfg.M;
    if (Mw <= 0) {
        Real m = w0 * cfg.tau_match + 8;
        Mw = std::max(16, (int)m.convert_to<long>());
    }
    InnerSeriesData ser = inner_series(dec.base, Mw);
    std::vector<Real> T_list =
        cfg.T_list.empty() ? default_T_list(ser.omega0) : cfg.T_list;
    precision_guard(ser.omega0, rmax(T_list.back(), cfg.tau_match));
    int n_max = (H2full && lx) ? cfg.n_max : 0;
    size_t K = T_list.size();

    if (!dec.forced) {
        // the elliptic plane is invariant: delta0 vanishes identically
        StokesResult r;
        r.omega0 = ser.omega0;
        for (size_t j = 0; j < K; ++j) r.samples.emplace_back(T_list[j], Cplx(0));
        r.b0 = Cplx(0);
        r.upper_bound = true;
        r.bn.assign((size_t)n_max + 1, Cplx(0));
        r.an = assemble_an(r.bn);
        return r;
    }

    Real r2s = sqrt(Real(2));
    Cplx tau0m(-cfg.tau_match / r2s, -cfg.tau_match / r2s);
    Cplx tau0p(cfg.tau_match / r2s, -cfg.tau_match / r2s);

    std::vector<Cplx> dW = w_series(dec, ser, Mw);

    FieldSystem fs0 = make_field_system(dec.base);
    PolyOde sys = field_ode(fs0);
    const int vW = sys.dim;
    sys.dim += 1;
    sys.rhs.resize(sys.dim);
    add_terms(sys.rhs[vW], dec.g, 0, Cplx(Real(0), Real(-1)), {{vW, 1}});
    add_terms(sys.rhs[vW], dec.fre, 0, Cplx(1));
    add_terms(sys.rhs[vW], dec.fim, 0, iu());

    int vX2 = -1, vW2 = -1, vU2 = -1;
    InnerDecomp dec2;
    std::vector<Cplx> dW2;
    int dW2lo = 0;
    if (n_max >= 2) {
        dec2 = split_inner(*H2full);
        FieldSystem fs2 = make_field_system(dec2.base);
        vX2 = sys.dim;
        sys.dim += 4;
        sys.rhs.resize(sys.dim);
        for (int i = 0; i < 4; ++i) {
            for (int j = 0; j < 4; ++j)
                add_terms(sys.rhs[vX2 + i], fs0.jhess[i][j], 0, Cplx(1), {{vX2 + j, 1}});
            add_terms(sys.rhs[vX2 + i], fs2.field[i], 0, Cplx(1));
        }
        vW2 = sys.dim;
        sys.dim += 1;
        sys.rhs.resize(sys.dim);
        Cplx mi(Real(0), Real(-1));
        add_terms(sys.rhs[vW2], dec.g, 0, mi, {{vW2, 1}});
        add_terms(sys.rhs[vW2], dec2.g, 0, mi, {{vW, 1}});
        add_terms(sys.rhs[vW2], derivative(dec.g, 0), 0, mi, {{vX2, 1}, {vW, 1}});
        add_terms(sys.rhs[vW2], derivative(dec.g, 1), 0, mi, {{vX2 + 1, 1}, {vW, 1}});
        add_terms(sys.rhs[vW2], derivative(dec.fre, 0), 0, Cplx(1), {{vX2, 1}});
        add_terms(sys.rhs[vW2], derivative(dec.fre, 1), 0, Cplx(1), {{vX2 + 1, 1}});
        add_terms(sys.rhs[vW2], derivative(dec.fim, 0), 0, iu(), {{vX2, 1}});
        add_terms(sys.rhs[vW2], derivative(dec.fim, 1), 0, iu(), {{vX2 + 1, 1}});
        add_terms(sys.rhs[vW2], dec2.fre, 0, Cplx(1));
        add_terms(sys.rhs[vW2], dec2.fim, 0, iu());
        vU2 = sys.dim;
        sys.dim += 1;
        sys.rhs.resize(sys.dim);
        add_terms(sys.rhs[vU2], dec2.g, 0, Cplx(1));
        add_terms(sys.rhs[vU2], derivative(dec.g, 0), 0, Cplx(1), {{vX2, 1}});
        add_terms(sys.rhs[vU2], derivative(dec.g, 1), 0, Cplx(1), {{vX2 + 1, 1}});
        std::tie(dW2, dW2lo) = w2_series(dec, dec2, ser, dW, *lx, Mw);
    }

    IntegratorConfig oc = cfg.ode;
    oc.samples_per_segment = 0;
    oc.blowup_norm = rmax(oc.blowup_norm, Real("1e20"));

    auto start_state = [&](const Cplx& tau0) {
        std::vector<Cplx> s0;
        PhasePoint X0 = eval_inner_series(ser, tau0);
        for (int i = 0; i < 4; ++i) s0.push_back(X0[i]);
        s0.push_back(eval_w(dW, 0, tau0));
        if (n_max >= 2) {
            s0.push_back(eval_tau_poly(lx->A[2], tau0));
            s0.push_back(eval_tau_poly(lx->B[2], tau0));
            s0.push_back(Cplx(0));
            s0.push_back(Cplx(0));
            s0.push_back(eval_w(dW2, dW2lo, tau0));
            s0.push_back(eval_tau_poly(lx->U[2], tau0));
        }
        return s0;
    };
    auto run_side = [&](const Cplx& tau0, const IntegratorConfig& c) {
        ComplexPath path;
        path.vertices.push_back(tau0);
        for (const auto& T : T_list) path.vertices.push_back(Cplx(Real(0), -T));
        return integrate_ode(sys, start_state(tau0), path, c);
    };
    auto ms = run_side(tau0m, oc);
    auto ps = run_side(tau0p, oc);

    std::vector<PhasePoint> delta0(K), eta0(K);
    std::vector<Cplx> v0(K), v2(K), phases(K);
    Real drift = 0;
    Cplx Hm = fs0.H.eval(slice(ms[0].second, 0));
    Cplx Hp = fs0.H.eval(slice(ps[0].second, 0));
    for (size_t j = 0; j < K; ++j) {
        const auto& mx = ms[j + 1].second;
        const auto& px = ps[j + 1].second;
        drift = rmax(drift, abs(fs0.H.eval(slice(mx, 0)) - Hm));
        drift = rmax(drift, abs(fs0.H.eval(slice(px, 0)) - Hp));
        Cplx E = exp(iu() * inner_phase(ser, Cplx(Real(0), -T_list[j])));
        phases[j] = E;
        Cplx dWj = px[vW] - mx[vW];
        delta0[j] = {Cplx(0), Cplx(0), dWj / Real(2), Cplx(Real(0), Real(-1)) * dWj / Real(2)};
        eta0[j] = {Cplx(0), Cplx(0), E, iu() * E};
        v0[j] = iu() * E * dWj;
        if (n_max >= 2) v2[j] = iu() * E * (px[vW2] - mx[vW2]) + iu() * mx[vU2] * v0[j];
    }

    StokesResult r = stokes_b0(T_list, delta0, eta0);
    r.omega0 = ser.omega0;
    r.drift = drift;
    r.matching_residual = rmax(max_norm(inner_series_defect(dec.base, ser, tau0m)),
                               max_norm(inner_series_defect(dec.base, ser, tau0p)));
    if (n_max >= 1) {
        // eta1 is the constant-phase multiple i U1 of eta0 (X1 = 0, H1 = 0)
        Cplx c1 = iu() * eval_tau_poly(lx->U[1], tau0m);
        r.bn.push_back(c1 * r.b0);
    }
    if (n_max >= 2) {
        bool conv2 = true;
        Cplx b2 = sample_limit(v2, conv2);
        r.bn.push_back(b2);
        // a noisy near-zero b2 does not degrade the result
        if (!conv2 && abs(b2) > Real("1e-6") * (abs(r.b0) + abs(b2))) r.reliable = false;
    }
    r.an = assemble_an(r.bn);

    if (cfg.noise_check) {
        // integration-noise floor of the pairing: rerun both descents at a
        // tighter tolerance and compare the deepest sample
        IntegratorConfig tight = oc;
        tight.abs_tol = oc.abs_tol / 100;
        tight.rel_tol = oc.rel_tol / 100;
        auto tm = run_side(tau0m, tight);
        auto tp = run_side(tau0p, tight);
        Cplx dT = tp.back().second[vW] - tm.back().second[vW];
        r.noise = abs(iu() * phases.back() * dT - v0.back()) * 4;
        if (abs(r.b0) <= 10 * r.noise) {
            r.upper_bound = true;
            r.b0 = Cplx(0);
            r.bn[0] = Cplx(0);
            r.an = assemble_an(r.bn);
        }
    }
    return r;
}

}  // namespace

StokesResult run_stokes(const NumPoly& H0, const StokesConfig& cfg) {
    return run_stokes_core(H0, nullptr, nullptr, cfg);
}

StokesResult run_stokes(const PolyHamiltonian& H, const Real& nu, const StokesConfig& cfg) {
    NormalFormTables tab = extract_tables(H);
    FormalSeparatrix sep = formal_separatrix(tab, cfg.N);
    FormalU fu = formal_u(tab, sep, cfg.N);
    LaurentExpansion lx = reexpand_at_singularity(sep, fu, 8, 2);
    std::vector<Rational> mu_coeffs(sep.mu.begin(), sep.mu.end());
    NumPoly H0 = mu_slice(H, 0, mu_coeffs, nu);
    NumPoly H2 = mu_slice(H, 2, mu_coeffs, nu);
    return run_stokes_core(H0, &H2, &lx, cfg);
}

}  // namespace sepsplit
