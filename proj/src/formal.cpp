#include "sepsplit/formal.hpp"

#include <algorithm>
#include <sstream>
#include <tuple>

namespace sepsplit {

namespace {

// ---------------------------------------------------------------------------
// ZPoly helpers
// ---------------------------------------------------------------------------

void zp_trim(ZPoly& a) {
    while (!a.empty() && a.back() == 0) a.pop_back();
}

ZPoly zp_add(const ZPoly& a, const ZPoly& b) {
    ZPoly r(std::max(a.size(), b.size()), Rational(0));
    for (size_t i = 0; i < a.size(); ++i) r[i] += a[i];
    for (size_t i = 0; i < b.size(); ++i) r[i] += b[i];
    zp_trim(r);
    return r;
}

void zp_add_inplace(ZPoly& a, const ZPoly& b, const Rational& scale = Rational(1)) {
    if (a.size() < b.size()) a.resize(b.size(), Rational(0));
    for (size_t i = 0; i < b.size(); ++i) a[i] += scale * b[i];
    zp_trim(a);
}

ZPoly zp_mul(const ZPoly& a, const ZPoly& b) {
    if (a.empty() || b.empty()) return {};
    ZPoly r(a.size() + b.size() - 1, Rational(0));
    for (size_t i = 0; i < a.size(); ++i) {
        if (a[i] == 0) continue;
        for (size_t j = 0; j < b.size(); ++j) r[i + j] += a[i] * b[j];
    }
    zp_trim(r);
    return r;
}

ZPoly zp_scale(const ZPoly& a, const Rational& s) {
    if (s == 0) return {};
    ZPoly r = a;
    for (auto& c : r) c *= s;
    return r;
}

// d/dz
ZPoly zp_dz(const ZPoly& a) {
    if (a.size() <= 1) return {};
    ZPoly r(a.size() - 1);
    for (size_t i = 1; i < a.size(); ++i) r[i - 1] = a[i] * (int)i;
    zp_trim(r);
    return r;
}

// second s-derivative of p(z(s)) as a pure z-polynomial:
// d^2 z^l / ds^2 = l^2 z^l - l(l + 1/2) z^{l+1}
ZPoly zp_dss(const ZPoly& a) {
    ZPoly r;
    for (size_t l = 1; l < a.size(); ++l) {
        if (a[l] == 0) continue;
        ZPoly t(l + 2, Rational(0));
        t[l] = Rational((long)(l * l));
        t[l + 1] = -Rational((long)l) * (Rational(2 * (long)l + 1) / 2);
        zp_add_inplace(r, t, a[l]);
    }
    return r;
}

Cplx zp_eval(const ZPoly& a, const Cplx& z) {
    Cplx r;
    for (size_t i = a.size(); i-- > 0;) r = r * z + Cplx(to_real(a[i]));
    return r;
}

// ---------------------------------------------------------------------------
// eps^2-graded series with ZPoly coefficients
// ---------------------------------------------------------------------------

using EpsSeries = std::vector<ZPoly>;  // index n = coefficient of eps^{2n}

EpsSeries es_mul(const EpsSeries& a, const EpsSeries& b, int cap) {
    EpsSeries r(cap + 1);
    for (int i = 0; i <= cap && i < (int)a.size(); ++i) {
        if (a[i].empty()) continue;
        for (int j = 0; j + i <= cap && j < (int)b.size(); ++j) {
            if (b[j].empty()) continue;
            zp_add_inplace(r[i + j], zp_mul(a[i], b[j]));
        }
    }
    return r;
}

// scalar series (powers of mu expanded in eps^2)
std::vector<Rational> scalar_pow(const std::vector<Rational>& base, int k, int cap) {
    std::vector<Rational> r(cap + 1, Rational(0));
    r[0] = 1;
    for (int rep = 0; rep < k; ++rep) {
        std::vector<Rational> nx(cap + 1, Rational(0));
        for (int i = 0; i <= cap; ++i) {
            if (r[i] == 0) continue;
            for (int j = 0; i + j <= cap && j < (int)base.size(); ++j)
                if (base[j] != 0) nx[i + j] += r[i] * base[j];
        }
        r = nx;
    }
    return r;
}

// exact dense solve, possibly overdetermined but consistent; returns the
// unique solution or throws
std::vector<Rational> solve_rational(std::vector<std::vector<Rational>> A,
                                     std::vector<Rational> rhs) {
    const int R = (int)A.size();
    const int C = R ? (int)A[0].size() : 0;
    int row = 0;
    std::vector<int> pivot_col;
    for (int col = 0; col < C && row < R; ++col) {
        int piv = -1;
        for (int r = row; r < R; ++r)
            if (A[r][col] != 0) {
                piv = r;
                break;
            }
        if (piv < 0) throw ComputationError("formal solve: rank-deficient system");
        std::swap(A[piv], A[row]);
        std::swap(rhs[piv], rhs[row]);
        for (int r = 0; r < R; ++r) {
            if (r == row || A[r][col] == 0) continue;
            Rational f = A[r][col] / A[row][col];
            for (int cc = col; cc < C; ++cc) A[r][cc] -= f * A[row][cc];
            rhs[r] -= f * rhs[row];
        }
        pivot_col.push_back(col);
        ++row;
    }
    if (row < C) throw ComputationError("formal solve: rank-deficient system");
    for (int r = row; r < R; ++r)
        if (rhs[r] != 0) throw ComputationError("formal solve: inconsistent system");
    std::vector<Rational> x(C, Rational(0));
    for (int i = 0; i < (int)pivot_col.size(); ++i) x[pivot_col[i]] = rhs[i] / A[i][pivot_col[i]];
    return x;
}

// [eps^{2n}] of  eps^2 (x')^2 + 2 V(x, mu) + C_eps  for the candidate data
ZPoly energy_order(const NormalFormTables& tab, const std::vector<ZPoly>& p,
                   const std::vector<Rational>& mu, const std::vector<Rational>& C, int n) {
    ZPoly E;
    // eps^2 (x')^2 = sum eps^{2(j+k+1)} p_j' p_k' (z^2 - z^3)
    const ZPoly zfac{Rational(0), Rational(0), Rational(1), Rational(-1)};  // z^2 - z^3
    for (int j = 1; j < (int)p.size(); ++j) {
        int k = n - 1 - j;
        if (k < 1 || k >= (int)p.size()) continue;
        ZPoly prod = zp_mul(zp_dz(p[j]), zp_dz(p[k]));
        zp_add_inplace(E, zp_mul(prod, zfac));
    }
    // 2 V(x, mu): for each table entry v_{kl} mu^k x^l
    int lmax = 0, kmax = 0;
    for (const auto& [kl, c] : tab.v) {
        kmax = std::max(kmax, kl.first);
        lmax = std::max(lmax, kl.second);
    }
    // powers of x as eps-series up to order n
    std::vector<EpsSeries> xp(lmax + 1);
    xp[0] = EpsSeries(n + 1);
    xp[0][0] = ZPoly{Rational(1)};
    if (lmax >= 1) {
        EpsSeries x(n + 1);
        for (int k = 1; k <= n && k < (int)p.size(); ++k) x[k] = p[k];
        xp[1] = x;
        for (int l = 2; l <= lmax; ++l) xp[l] = es_mul(xp[l - 1], xp[1], n);
    }
    std::vector<Rational> mu_base(n + 1, Rational(0));
    for (int k = 2; k <= n && k < (int)mu.size(); ++k) mu_base[k] = mu[k];
    std::vector<std::vector<Rational>> mup(kmax + 1);
    for (int k = 0; k <= kmax; ++k) mup[k] = scalar_pow(mu_base, k, n);
    for (const auto& [kl, c] : tab.v) {
        auto [k, l] = kl;
        if (c == 0) continue;
        // coefficient of eps^{2n} in mu^k * x^l
        ZPoly acc;
        for (int i = 0; i <= n; ++i) {
            if (mup[k][i] == 0) continue;
            int j = n - i;
            if (j < (int)xp[l].size() && !xp[l][j].empty())
                zp_add_inplace(acc, xp[l][j], mup[k][i]);
        }
        zp_add_inplace(E, acc, 2 * c);
    }
    if (n < (int)C.size() && C[n] != 0) zp_add_inplace(E, ZPoly{C[n]});
    return E;
}

}  // namespace

ZPoly zpoly_dz(const ZPoly& a) { return zp_dz(a); }
ZPoly zpoly_dss(const ZPoly& a) { return zp_dss(a); }

NormalFormTables extract_tables(const PolyHamiltonian& H) {
    NormalFormTables tab;
    std::map<std::pair<int, int>, Rational> i_x2, i_y2;
    bool kinetic_ok = false;
    for (const auto& [key, coeff] : H.terms) {
        auto [i1, j1, i2, j2, kmu, knu] = std::tuple(key[0], key[1], key[2], key[3], key[4], key[5]);
        if (knu > 0) continue;  // perturbation part, not in the normal form
        if (j1 > 0) {
            if (i1 == 0 && j1 == 2 && i2 == 0 && j2 == 0 && kmu == 0 && coeff == Rational(1, 2)) {
                kinetic_ok = true;
                continue;
            }
            throw ComputationError("extract_tables: Hamiltonian not in normal-form shape (y1)");
        }
        if (i2 == 0 && j2 == 0) {
            tab.v[{kmu, i1}] += coeff;
            continue;
        }
        if (i2 == 2 && j2 == 0) {
            i_x2[{kmu, i1}] += coeff;
            continue;
        }
        if (i2 == 0 && j2 == 2) {
            i_y2[{kmu, i1}] += coeff;
            continue;
        }
        if (i2 % 2 == 0 && j2 % 2 == 0 && i2 + j2 >= 4) continue;  // O(I^2): irrelevant at I=0
        throw ComputationError("extract_tables: Hamiltonian not in normal-form shape (elliptic)");
    }
    if (!kinetic_ok) throw ComputationError("extract_tables: kinetic term y1^2/2 missing");
    if (i_x2 != i_y2)
        throw ComputationError("extract_tables: elliptic part is not a function of I");
    for (const auto& [kl, c] : i_x2) tab.w[kl] += 2 * c;
    for (auto it = tab.v.begin(); it != tab.v.end();)
        it = it->second == 0 ? tab.v.erase(it) : std::next(it);
    return tab;
}

FormalSeparatrix formal_separatrix(const NormalFormTables& tab, int N) {
    if (N < 1) throw ComputationError("formal_separatrix: N >= 1 required");
    if (tab.v_at(0, 0) != 0 || tab.v_at(0, 1) != 0 || tab.v_at(0, 2) != 0 ||
        tab.v_at(1, 0) != 0)
        throw ComputationError("formal_separatrix: v00 = v01 = v02 = v10 = 0 required");
    Rational v03 = tab.v_at(0, 3), v11 = tab.v_at(1, 1);
    if (v03 == 0 || v11 == 0)
        throw ComputationError("formal_separatrix: v03 * v11 != 0 required");

    FormalSeparatrix sep;
    sep.N = N;
    sep.p.assign(N + 1, ZPoly{});
    sep.mu.assign(N + 2, Rational(0));
    sep.C.assign(N + 3, Rational(0));

    // base order eps^6: (p1')^2 (z^2-z^3) + 2 v03 p1^3 + 2 v11 mu2 p1 + C3 = 0
    Rational p11 = Rational(1) / (2 * v03);
    Rational p10 = -Rational(1) / (6 * v03);
    sep.p[1] = ZPoly{p10, p11};
    sep.mu[2] = -3 * v03 * p10 * p10 / v11;
    sep.C[3] = -2 * v03 * p10 * p10 * p10 - 2 * v11 * sep.mu[2] * p10;
    {
        ZPoly E = energy_order(tab, sep.p, sep.mu, sep.C, 3);
        if (!E.empty()) throw ComputationError("formal_separatrix: base order residual nonzero");
    }

    // induction: order eps^{2n} determines p_{n-2}, mu_{n-1}, C_n
    for (int n = 4; n <= N + 2; ++n) {
        const int kp = n - 2;
        const int nunk = (kp + 1) + 2;  // p_{kp,0..kp}, mu_{n-1}, C_n
        ZPoly r0 = energy_order(tab, sep.p, sep.mu, sep.C, n);
        std::vector<ZPoly> cols(nunk);
        for (int i = 0; i < nunk; ++i) {
            auto p = sep.p;
            auto mu = sep.mu;
            auto C = sep.C;
            if (i <= kp) {
                p[kp] = ZPoly(i + 1, Rational(0));
                p[kp][i] = 1;
            } else if (i == kp + 1) {
                mu[n - 1] = 1;
            } else {
                C[n] = 1;
            }
            ZPoly Ei = energy_order(tab, p, mu, C, n);
            // column = Ei - r0
            ZPoly col = Ei;
            zp_add_inplace(col, zp_scale(r0, Rational(-1)));
            cols[i] = col;
        }
        int deg = (int)r0.size();
        for (const auto& c : cols) deg = std::max(deg, (int)c.size());
        std::vector<std::vector<Rational>> A(deg, std::vector<Rational>(nunk, Rational(0)));
        std::vector<Rational> rhs(deg, Rational(0));
        for (int r = 0; r < deg; ++r) {
            for (int i = 0; i < nunk; ++i)
                if (r < (int)cols[i].size()) A[r][i] = cols[i][r];
            if (r < (int)r0.size()) rhs[r] = -r0[r];
        }
        auto sol = solve_rational(A, rhs);
        sep.p[kp] = ZPoly(sol.begin(), sol.begin() + kp + 1);
        zp_trim(sep.p[kp]);
        sep.mu[n - 1] = sol[kp + 1];
        sep.C[n] = sol[kp + 2];
    }

    // q_{k,l} = -l p_{k,l}
    sep.q.assign(N + 1, {});
    for (int k = 1; k <= N; ++k) {
        sep.q[k].assign(k + 1, Rational(0));
        for (int l = 1; l < (int)sep.p[k].size() && l <= k; ++l) sep.q[k][l] = -l * sep.p[k][l];
    }
    return sep;
}

FormalU formal_u(const NormalFormTables& tab, const FormalSeparatrix& sep, int N) {
    if (N > sep.N) throw ComputationError("formal_u: separatrix order too low");
    FormalU fu;
    fu.N = N;
    // G = dV/dI(x, mu) as an eps-series of z-polynomials, orders 0..N
    int lmax = 0, kmax = 0;
    for (const auto& [kl, c] : tab.w) {
        kmax = std::max(kmax, kl.first);
        lmax = std::max(lmax, kl.second);
    }
    std::vector<EpsSeries> xp(std::max(lmax + 1, 1));
    xp[0] = EpsSeries(N + 1);
    xp[0][0] = ZPoly{Rational(1)};
    if (lmax >= 1) {
        EpsSeries x(N + 1);
        for (int k = 1; k <= N && k <= sep.N; ++k) x[k] = sep.p[k];
        xp[1] = x;
        for (int l = 2; l <= lmax; ++l) xp[l] = es_mul(xp[l - 1], xp[1], N);
    }
    std::vector<Rational> mu_base(N + 1, Rational(0));
    for (int k = 2; k <= N && k < (int)sep.mu.size(); ++k) mu_base[k] = sep.mu[k];
    EpsSeries G(N + 1);
    for (const auto& [kl, c] : tab.w) {
        auto [k, l] = kl;
        if (c == 0) continue;
        auto mp = scalar_pow(mu_base, k, N);
        for (int i = 0; i <= N; ++i) {
            if (mp[i] == 0) continue;
            for (int j = 0; i + j <= N && j < (int)xp[l].size(); ++j)
                if (!xp[l][j].empty()) zp_add_inplace(G[i + j], xp[l][j], c * mp[i]);
        }
    }
    // integral of z^l ds in the odd-profile basis T_j = sinh(s/2)/cosh^{2j+1}(s/2):
    // I_l = sum_j kappa[l][j] T_j  with  I_l = 2/(2l-1) (T_{l-1} + (l-1) I_{l-1})
    int Lmax = 0;
    for (const auto& g : G) Lmax = std::max(Lmax, (int)g.size() - 1);
    std::vector<std::vector<Rational>> kappa(Lmax + 1);
    for (int l = 1; l <= Lmax; ++l) {
        kappa[l].assign(l, Rational(0));
        Rational f = Rational(2) / (2 * l - 1);
        kappa[l][l - 1] = f;
        if (l >= 2)
            for (int j = 0; j < l - 1; ++j) kappa[l][j] = f * (l - 1) * kappa[l - 1][j];
    }
    fu.omega.assign(N + 1, Rational(0));
    fu.u.assign(N, {});
    for (int n = 0; n <= N; ++n) {
        if (!G[n].empty()) fu.omega[n] = G[n][0];
        if (n >= 1) {
            fu.u[n - 1].assign(n, Rational(0));
            for (int l = 1; l < (int)G[n].size(); ++l)
                for (int j = 0; j < l; ++j) fu.u[n - 1][j] += G[n][l] * kappa[l][j];
        }
    }
    return fu;
}

// ---------------------------------------------------------------------------
// SFunc algebra
// ---------------------------------------------------------------------------

namespace {

void lz_trim(LaurentZ& a) {
    for (auto it = a.begin(); it != a.end();) it = it->second == 0 ? a.erase(it) : std::next(it);
}

LaurentZ lz_add(const LaurentZ& a, const LaurentZ& b) {
    LaurentZ r = a;
    for (const auto& [k, c] : b) r[k] += c;
    lz_trim(r);
    return r;
}

LaurentZ lz_scale(const LaurentZ& a, const Rational& s) {
    if (s == 0) return {};
    LaurentZ r = a;
    for (auto& [k, c] : r) c *= s;
    return r;
}

LaurentZ lz_mul(const LaurentZ& a, const LaurentZ& b) {
    LaurentZ r;
    for (const auto& [i, ci] : a)
        for (const auto& [j, cj] : b) r[i + j] += ci * cj;
    lz_trim(r);
    return r;
}

LaurentZ lz_dz(const LaurentZ& a) {
    LaurentZ r;
    for (const auto& [k, c] : a)
        if (k != 0) r[k - 1] = c * k;
    lz_trim(r);
    return r;
}

LaurentZ lz_from_zpoly(const ZPoly& a) {
    LaurentZ r;
    for (size_t i = 0; i < a.size(); ++i)
        if (a[i] != 0) r[(int)i] = a[i];
    return r;
}

const LaurentZ& lz_z2z3() {
    static const LaurentZ v{{2, Rational(1)}, {3, Rational(-1)}};  // z^2 - z^3
    return v;
}
const LaurentZ& lz_zdd() {
    static const LaurentZ v{{1, Rational(1)}, {2, Rational(-3, 2)}};  // z - 3/2 z^2
    return v;
}

SFunc sf_add(const SFunc& a, const SFunc& b) {
    return {lz_add(a.A, b.A), lz_add(a.B, b.B), lz_add(a.C, b.C), lz_add(a.D, b.D)};
}

SFunc sf_scale(const SFunc& a, const Rational& s) {
    return {lz_scale(a.A, s), lz_scale(a.B, s), lz_scale(a.C, s), lz_scale(a.D, s)};
}

// multiply by a pure z-Laurent factor
SFunc sf_mul_lz(const SFunc& a, const LaurentZ& m) {
    return {lz_mul(a.A, m), lz_mul(a.B, m), lz_mul(a.C, m), lz_mul(a.D, m)};
}

// multiply by  P(z) * z'
SFunc sf_mul_zprime(const SFunc& a, const LaurentZ& P) {
    SFunc r;
    r.B = lz_mul(P, a.A);
    r.A = lz_mul(P, lz_mul(a.B, lz_z2z3()));
    r.D = lz_mul(P, a.C);
    r.C = lz_mul(P, lz_mul(a.D, lz_z2z3()));
    return r;
}

}  // namespace

SFunc sfunc_deriv(const SFunc& f) {
    SFunc r;
    r.A = lz_add(lz_add(lz_mul(lz_dz(f.B), lz_z2z3()), lz_mul(f.B, lz_zdd())), f.C);
    r.B = lz_add(lz_dz(f.A), f.D);
    r.C = lz_add(lz_mul(lz_dz(f.D), lz_z2z3()), lz_mul(f.D, lz_zdd()));
    r.D = lz_dz(f.C);
    return r;
}

Cplx sfunc_eval(const SFunc& f, const Cplx& s) {
    Cplx ch = cosh(s / Real(2));
    Cplx z = Cplx(1) / (ch * ch);
    Cplx zp = Cplx() - sinh(s / Real(2)) / (ch * ch * ch);
    auto ev = [&](const LaurentZ& a) {
        Cplx r;
        for (const auto& [k, c] : a) {
            Cplx t = k >= 0 ? ipow(z, k) : Cplx(1) / ipow(z, -k);
            r += Cplx(to_real(c)) * t;
        }
        return r;
    };
    return ev(f.A) + ev(f.B) * zp + s * ev(f.C) + s * zp * ev(f.D);
}

FormalXi4 formal_xi4(const FormalSeparatrix& sep, int N) {
    if (N > sep.N - 1)
        throw ComputationError("formal_xi4: requires separatrix order N+1");
    FormalXi4 x4;
    x4.N = N;
    x4.v.resize(N + 1);

    // order-n residual of sum_{j+k=n+1, j>=1, k>=0} (p_j' v_k' - p_j'' v_k) - delta_{n0}
    auto residual = [&](int n, const std::vector<SFunc>& v) {
        SFunc E;
        for (int j = 1; j <= n + 1; ++j) {
            int k = n + 1 - j;
            if (j > sep.N || k >= (int)v.size()) continue;
            LaurentZ pj_dz = lz_from_zpoly(zp_dz(sep.p[j]));   // p_j' = pj_dz * z'
            LaurentZ pj_dss = lz_from_zpoly(zp_dss(sep.p[j]));  // p_j'' pure z-poly
            E = sf_add(E, sf_mul_zprime(sfunc_deriv(v[k]), pj_dz));
            E = sf_add(E, sf_scale(sf_mul_lz(v[k], pj_dss), Rational(-1)));
        }
        if (n == 0) E.A[0] -= 1;
        lz_trim(E.A);
        return E;
    };

    for (int n = 0; n <= N; ++n) {
        // unknowns: d-part z^{-1}..z^{n+1} (n+3) then c-part z^0..z^n (n+1)
        const int nd = n + 3, nc = n + 1, nunk = nd + nc;
        std::vector<SFunc> v(x4.v.begin(), x4.v.begin() + n + 1);
        SFunc r0 = residual(n, v);
        std::vector<SFunc> cols(nunk);
        for (int i = 0; i < nunk; ++i) {
            SFunc unit;
            if (i < nd)
                unit.A[i - 1] = 1;  // z^{-1} d_{n+2}(z)
            else
                unit.D[i - nd] = 1;  // c_n(z) s z'
            v[n] = unit;
            SFunc Ei = residual(n, v);
            cols[i] = sf_add(Ei, sf_scale(r0, Rational(-1)));
        }
        // collect equation rows: every (component, z-power) present anywhere
        std::vector<std::pair<int, int>> rows;  // (component 0..3, power)
        auto collect = [&](const SFunc& f) {
            const LaurentZ* comp[4] = {&f.A, &f.B, &f.C, &f.D};
            for (int ci = 0; ci < 4; ++ci)
                for (const auto& [k, c] : *comp[ci]) {
                    (void)c;
                    if (std::find(rows.begin(), rows.end(), std::make_pair(ci, k)) == rows.end())
                        rows.emplace_back(ci, k);
                }
        };
        collect(r0);
        for (const auto& c : cols) collect(c);
        std::sort(rows.begin(), rows.end());
        auto comp_at = [](const SFunc& f, int ci, int k) -> Rational {
            const LaurentZ* comp[4] = {&f.A, &f.B, &f.C, &f.D};
            auto it = comp[ci]->find(k);
            return it == comp[ci]->end() ? Rational(0) : it->second;
        };
        std::vector<std::vector<Rational>> A(rows.size(), std::vector<Rational>(nunk));
        std::vector<Rational> rhs(rows.size());
        for (size_t r = 0; r < rows.size(); ++r) {
            for (int i = 0; i < nunk; ++i) A[r][i] = comp_at(cols[i], rows[r].first, rows[r].second);
            rhs[r] = -comp_at(r0, rows[r].first, rows[r].second);
        }
        auto sol = solve_rational(A, rhs);
        SFunc vn;
        for (int i = 0; i < nd; ++i)
            if (sol[i] != 0) vn.A[i - 1] = sol[i];
        for (int i = 0; i < nc; ++i)
            if (sol[nd + i] != 0) vn.D[i] = sol[nd + i];
        x4.v[n] = vn;
    }
    return x4;
}

// ---------------------------------------------------------------------------
// Laurent re-expansion at s = i*pi
// ---------------------------------------------------------------------------

namespace {

// dense power series in sigma with rational coefficients, index = power
using PS = std::vector<Rational>;

PS ps_mul(const PS& a, const PS& b, int K) {
    PS r(K + 1, Rational(0));
    for (int i = 0; i <= K && i < (int)a.size(); ++i) {
        if (a[i] == 0) continue;
        for (int j = 0; i + j <= K && j < (int)b.size(); ++j) r[i + j] += a[i] * b[j];
    }
    return r;
}

PS ps_inv(const PS& a, int K) {
    PS r(K + 1, Rational(0));
    r[0] = Rational(1) / a[0];
    for (int n = 1; n <= K; ++n) {
        Rational s(0);
        for (int j = 1; j <= n && j < (int)a.size(); ++j) s += a[j] * r[n - j];
        r[n] = -s / a[0];
    }
    return r;
}

}  // namespace

LaurentExpansion reexpand_at_singularity(const FormalSeparatrix& sep, const FormalU& fu, int M,
                                         int mmax) {
    LaurentExpansion le;
    le.M = M;
    le.mmax = mmax;
    le.A.resize(mmax + 1);
    le.B.resize(mmax + 1);
    le.U.resize(mmax + 1);

    const int N = sep.N;
    const int K = 2 * N + 2 * std::max(mmax, 1) + 4;  // sigma-series depth

    // S = sinh(sigma/2)/(sigma/2), invS = 1/S, csh = cosh(sigma/2)
    PS S(K + 1, Rational(0)), csh(K + 1, Rational(0));
    {
        Rational f(1);  // 1/(2m+1)! * 4^{-m}
        for (int m = 0; 2 * m <= K; ++m) {
            S[2 * m] = f;
            f /= Rational(4 * (2 * m + 2) * (2 * m + 3));
        }
        Rational g(1);
        for (int m = 0; 2 * m <= K; ++m) {
            csh[2 * m] = g;
            g /= Rational(4 * (2 * m + 1) * (2 * m + 2));
        }
    }
    PS invS = ps_inv(S, K);
    // powers of invS
    std::vector<PS> invSp(2 * N + 2);
    invSp[0] = PS(K + 1, Rational(0));
    invSp[0][0] = 1;
    for (int j = 1; j < (int)invSp.size(); ++j) invSp[j] = ps_mul(invSp[j - 1], invS, K);

    // even-profile: z^j at sigma = (-1)^j csch^{2j}(sigma/2) = (-4)^j sigma^{-2j} invS^{2j}
    // coefficient of sigma^{2l}: (-4)^j invS^{2j}[2l+2j]
    auto even_coeff = [&](int j, int l) -> Rational {
        if (j == 0) return l == 0 ? Rational(1) : Rational(0);
        int idx = 2 * l + 2 * j;
        if (idx < 0 || idx > K) return 0;
        Rational f = invSp[2 * j][idx];
        Rational sc = 1;
        for (int i = 0; i < j; ++i) sc *= -4;
        return sc * f;
    };
    // odd-profile basis T_j = sinh(s/2)/cosh^{2j+1}(s/2) at sigma:
    // (-1)^j cosh(sigma/2)/sinh^{2j+1}(sigma/2)
    //  = (-1)^j 2^{2j+1} sigma^{-(2j+1)} cosh(sigma/2) invS^{2j+1}
    // coefficient of sigma^{2l-1}: (-1)^j 2^{2j+1} (csh*invS^{2j+1})[2l+2j]
    std::vector<PS> csh_invSp(2 * N + 2);
    for (int j = 0; 2 * j + 1 < (int)invSp.size(); ++j)
        csh_invSp[j] = ps_mul(csh, invSp[2 * j + 1], K);
    auto odd_coeff = [&](int j, int l) -> Rational {
        int idx = 2 * l + 2 * j;
        if (idx < 0 || idx > K) return 0;
        Rational f = csh_invSp[j][idx];
        Rational sc = 1;
        for (int i = 0; i < j; ++i) sc *= -1;
        for (int i = 0; i < 2 * j + 1; ++i) sc *= 2;
        return sc * f;
    };

    // p~_{k,l}, q~_{k,l}, u~_{k,l}
    auto p_tilde = [&](int k, int l) -> Rational {
        if (k < 1 || k > N || l < -k) return 0;
        Rational s(0);
        for (int j = 0; j < (int)sep.p[k].size(); ++j)
            if (sep.p[k][j] != 0) s += sep.p[k][j] * even_coeff(j, l);
        return s;
    };
    auto q_tilde = [&](int k, int l) -> Rational {
        if (k < 1 || k > N || l < -k) return 0;
        Rational s(0);
        for (int j = 1; j < (int)sep.q[k].size(); ++j)
            if (sep.q[k][j] != 0) s += sep.q[k][j] * odd_coeff(j, l);
        return s;
    };
    auto u_tilde = [&](int k, int l) -> Rational {
        if (k < 0 || k >= (int)fu.u.size() || l < -k - 1) return 0;
        Rational s(0);
        for (int j = 0; j < (int)fu.u[k].size(); ++j)
            if (fu.u[k][j] != 0) s += fu.u[k][j] * odd_coeff(j, l);
        return s;
    };

    for (int m = 0; m <= mmax; ++m) {
        for (int l = -M; l <= m - 1; ++l) {
            Rational pa = p_tilde(m - l, l);
            if (pa != 0) le.A[m][2 * l] = pa;
            Rational qb = q_tilde(m - l, l);
            if (qb != 0) le.B[m][2 * l - 1] = qb;
        }
        for (int l = -M; l <= m; ++l) {
            Rational uu = u_tilde(m - l, l);
            if (uu != 0) le.U[m][2 * l - 1] += uu;
        }
        if (m < (int)fu.omega.size() && fu.omega[m] != 0) le.U[m][1] += fu.omega[m];
    }
    return le;
}

Cplx eval_tau_poly(const std::map<int, Rational>& poly, const Cplx& tau) {
    Cplx r;
    for (const auto& [k, c] : poly) {
        Cplx t = k >= 0 ? ipow(tau, k) : Cplx(1) / ipow(tau, -k);
        r += Cplx(to_real(c)) * t;
    }
    return r;
}

// ---------------------------------------------------------------------------
// Numeric evaluation
// ---------------------------------------------------------------------------

FormalEval evaluate_formal(const FormalSeparatrix& sep, const FormalU& fu, const Real& eps,
                           const Cplx& t, int N_trunc, const Real& pole_margin) {
    FormalEval out;
    Cplx s = Cplx(eps) * t;
    Cplx ip(Real(0), real_pi());
    out.pole_warning = abs(s - ip) < pole_margin || abs(s + ip) < pole_margin;

    Cplx ch = cosh(s / Real(2));
    Cplx sh = sinh(s / Real(2));
    Cplx z = Cplx(1) / (ch * ch);

    int N = std::min(N_trunc, sep.N);
    Real e2 = eps * eps;
    Real ep = e2;  // eps^{2k}
    out.x1 = Cplx();
    out.x1_dd = Cplx();
    Cplx y1;
    for (int k = 1; k <= N; ++k) {
        out.x1 += Cplx(ep) * zp_eval(sep.p[k], z);
        out.x1_dd += Cplx(ep) * zp_eval(zp_dss(sep.p[k]), z);
        // q_k
        Cplx qk;
        for (int l = 1; l < (int)sep.q[k].size(); ++l)
            if (sep.q[k][l] != 0) qk += Cplx(to_real(sep.q[k][l])) * sh / ipow(ch, 2 * l + 1);
        y1 += Cplx(ep * eps) * qk;
        ep *= e2;
    }
    out.y1 = y1;

    // u-series: omega * t + sum eps^{2k+1} u_k(s)
    Real om = 0;
    ep = 1;
    for (int k = 0; k <= N_trunc && k < (int)fu.omega.size(); ++k) {
        om += to_real(fu.omega[k]) * ep;
        ep *= e2;
    }
    Cplx u = Cplx(om) * t;
    ep = eps;
    for (int k = 0; k < std::min(N_trunc, (int)fu.u.size()); ++k) {
        Cplx uk;
        for (int l = 0; l < (int)fu.u[k].size(); ++l)
            if (fu.u[k][l] != 0) uk += Cplx(to_real(fu.u[k][l])) * sh / ipow(ch, 2 * l + 1);
        u += Cplx(ep) * uk;
        ep *= e2;
    }
    out.u = u;
    return out;
}

Real evaluate_mu(const FormalSeparatrix& sep, const Real& eps, int N_trunc) {
    Real mu = 0, ep = 1;
    Real e2 = eps * eps;
    for (int k = 0; k <= N_trunc && k < (int)sep.mu.size(); ++k) {
        mu += to_real(sep.mu[k]) * ep;
        ep *= e2;
    }
    return mu;
}

Real evaluate_omega(const FormalU& fu, const Real& eps, int N_trunc) {
    Real om = 0, ep = 1;
    Real e2 = eps * eps;
    for (int k = 0; k <= N_trunc && k < (int)fu.omega.size(); ++k) {
        om += to_real(fu.omega[k]) * ep;
        ep *= e2;
    }
    return om;
}

Cplx formal_ode_residual(const NormalFormTables& tab, const FormalSeparatrix& sep,
                         const Real& eps, const Cplx& s, int N_trunc) {
    Cplx t = s / eps;
    FormalEval fe = evaluate_formal(sep, FormalU{}, eps, t, N_trunc);
    Real mu = evaluate_mu(sep, eps, N_trunc);
    // dV/dx(x, mu)
    Cplx dV;
    for (const auto& [kl, c] : tab.v) {
        auto [k, l] = kl;
        if (l == 0 || c == 0) continue;
        Cplx term(to_real(c) * l * rpow(mu, k));
        if (l > 1) term *= ipow(fe.x1, l - 1);
        dV += term;
    }
    return Cplx(eps * eps) * fe.x1_dd + dV;
}

std::string rational_string(const Rational& r) {
    std::ostringstream os;
    os << boost::multiprecision::numerator(r);
    if (boost::multiprecision::denominator(r) != 1)
        os << "/" << boost::multiprecision::denominator(r);
    return os.str();
}

}  // namespace sepsplit
