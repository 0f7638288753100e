#include "sepsplit/melnikov.hpp"

#include <functional>
#include <vector>

namespace sepsplit {

namespace {

using boost::multiprecision::cosh;
using boost::multiprecision::exp;
using boost::multiprecision::log;
using boost::multiprecision::sinh;
using boost::multiprecision::tanh;

// tanh-sinh rule on [a, b]; returns the value, adds a refinement-difference
// estimate into err.
Cplx tanh_sinh(const std::function<Cplx(const Real&)>& f, const Real& a, const Real& b,
               const Real& tol, Real& err) {
    Real half = (b - a) / 2, mid = (a + b) / 2;
    Real pi2 = real_pi() / 2;
    auto node = [&](const Real& u, Real& w) -> Real {
        Real sh = sinh(u);
        Real ch = cosh(pi2 * sh);
        w = half * pi2 * cosh(u) / (ch * ch);
        return mid + half * tanh(pi2 * sh);
    };
    Real umax = 4;
    Cplx prev(0), cur(0);
    Real h = 1;
    // level 0
    {
        Real w;
        Real x = node(Real(0), w);
        cur = w * f(x);
        for (Real u = h; u <= umax; u += h) {
            Real wl, wr;
            Real xr = node(u, wr), xl = node(-u, wl);
            cur = cur + wr * f(xr) + wl * f(xl);
        }
        cur = h * cur;
    }
    for (int level = 1; level <= 12; ++level) {
        h /= 2;
        Cplx add(0);
        for (Real u = h; u <= umax; u += 2 * h) {
            Real wl, wr;
            Real xr = node(u, wr), xl = node(-u, wl);
            add = add + wr * f(xr) + wl * f(xl);
        }
        prev = cur;
        cur = prev * Cplx(Real(1) / 2) + h * add;
        Real diff = abs(cur - prev);
        if (level >= 4 && diff <= tol * rmax(abs(cur), Real(1)) / 8) {
            err += diff;
            return cur;
        }
    }
    err += abs(cur - prev);
    return cur;
}

struct EllipticTerm {
    int m;       // x1 power
    Cplx coeff;  // coefficient including the x2/y2 orientation factor
};

// Collect the elliptic-linear terms of R; kappa_x2 and kappa_y2 set the
// convention factors.  Terms independent of (x2, y2) contribute nothing; any
// other shape is rejected.
std::vector<EllipticTerm> elliptic_terms(const PolyHamiltonian& R, const Cplx& kx2,
                                         const Cplx& ky2, bool allow_y1) {
    std::vector<EllipticTerm> out;
    for (const auto& [key, coeff] : R.terms) {
        if (key[4] != 0 || key[5] != 0)
            throw ComputationError("perturbation must not depend on mu or nu");
        int e2 = key[2], e3 = key[3];
        if (e2 + e3 == 0) continue;  // no elliptic dependence: zero contribution
        if (e2 + e3 > 1)
            throw ComputationError("perturbation must be linear in the elliptic variables");
        if (!allow_y1 && key[1] != 0)
            throw ComputationError("y1-dependent perturbations are not supported here");
        Cplx c = Cplx(to_real(coeff)) * (e2 == 1 ? kx2 : ky2);
        out.push_back({key[0], c});
    }
    return out;
}

}  // namespace

Cplx melnikov_residue(int m, const Real& c0, const Real& omega, const Real& eps) {
    if (m < 1) throw ComputationError("melnikov_residue: m must be positive");
    Real fac = 1;
    for (int k = 2; k <= 2 * m - 1; ++k) fac *= k;
    Real num = 2 * real_pi() * c0 * rpow(Real(2), 2 * m) * omega;
    for (int k = 1; k <= m - 1; ++k) num *= omega * omega + Real(k * k) * eps * eps;
    Real arg = real_pi() * omega / eps;
    Real den = fac * (exp(arg) - exp(-arg));
    Real v = num / den;
    return Cplx((m % 2 == 1) ? v : -v);
}

MelnikovResult melnikov_quadrature(const PolyHamiltonian& H, const PolyHamiltonian& R,
                                   const Real& mu, const Real& tol) {
    NormalFormTables tab = extract_tables(H);
    EquilibriumData eq = find_equilibrium(H, mu, 0);
    Real eps = eq.lambda;

    // elliptic phase rows: dV/dI(x, 0) = sum_l w_l(mu) x^l
    std::vector<Real> wl;
    for (const auto& [key, coeff] : tab.w) {
        int l = key.second;
        if ((int)wl.size() <= l) wl.resize(l + 1, Real(0));
        wl[l] += to_real(coeff) * rpow(mu, key.first);
    }
    if (wl.empty()) throw ComputationError("no elliptic frequency row in the model");
    Real omega_t = wl[0];

    // oscillatory feasibility: the answer is ~ e^{-pi omega/eps} relative to
    // the integrand scale
    Real needed = real_pi() * omega_t / (eps * Real(log(Real(2)))) + 32;
    if (needed > (int)precision_bits())
        throw ComputationError("omega/lambda too large for the working precision (need > " +
                               needed.str(0, std::ios_base::fixed) + " bits)");

    auto terms = elliptic_terms(R, Cplx(1), Cplx(Real(0), Real(1)), false);

    // profile convention x1 -> -eps^2 z(s), z = sech^2(s/2); the phase uses
    // closed-form antiderivatives int z^l ds = 2 int (1-T^2)^{l-1} dT,
    // T = tanh(s/2)
    auto integrand = [&](const Real& s) -> Cplx {
        Real T = tanh(s / 2);
        Real z = 1 - T * T;
        Real phase = omega_t * s / eps;
        for (size_t l = 1; l < wl.size(); ++l) {
            if (wl[l] == 0) continue;
            // 2 * int (1-T^2)^{l-1} dT, binomial expansion
            Real P = 0;
            Real binom = 1;
            for (size_t j = 0; j < l; ++j) {
                Real term = binom * rpow(T, 2 * (int)j + 1) / (2 * (int)j + 1);
                P += (j % 2 == 0) ? term : -term;
                binom = binom * (int)(l - 1 - j) / (int)(j + 1);
            }
            phase += wl[l] * rpow(-eps * eps, (int)l) * 2 * P / eps;
        }
        Cplx ph(Real(boost::multiprecision::cos(phase)), Real(boost::multiprecision::sin(phase)));
        Cplx val(0);
        for (const auto& t : terms) val = val + t.coeff * Cplx(rpow(-eps * eps * z, t.m));
        return Cplx(Real(-1)) * ph * val;
    };

    MelnikovResult res;
    res.method = "quadrature";
    res.error = Real(0);
    Real S = 45;
    Cplx I = tanh_sinh(integrand, -S, S, tol, res.error);
    res.M = I / eps;
    // truncation tail: integrand decays like 4^m e^{-m s} per term
    Real tail = 0;
    for (const auto& t : terms)
        tail += abs(t.coeff) * rpow(eps * eps * 4, t.m) * exp(Real(-t.m) * S) / t.m;
    res.error += tail / eps;
    return res;
}

Cplx stokes_derivative(const PolyHamiltonian& R0, const Real& omega0) {
    // dR0/d(conj z2) = (d/dx2 + i d/dy2)/sqrt(2) evaluated on
    // X0(s) = (2 s^-2, -4 s^-3, 0, 0): a Laurent polynomial sum c_n s^{-n}
    Real rt2 = boost::multiprecision::sqrt(Real(2));
    std::vector<Cplx> cn;  // cn[n] multiplies s^{-n}
    for (const auto& [key, coeff] : R0.terms) {
        if (key[4] != 0 || key[5] != 0)
            throw ComputationError("perturbation must not depend on mu or nu");
        int e2 = key[2], e3 = key[3];
        if (e2 + e3 == 0) continue;
        if (e2 + e3 > 1)
            throw ComputationError("perturbation must be linear in the elliptic variables");
        int a = key[0], b = key[1];
        int n = 2 * a + 3 * b;
        Cplx kap = (e2 == 1) ? Cplx(1 / rt2) : Cplx(Real(0), 1 / rt2);
        Cplx c = Cplx(to_real(coeff)) * kap * Cplx(rpow(Real(2), a) * rpow(Real(-4), b));
        if ((int)cn.size() <= n) cn.resize(n + 1, Cplx(0));
        cn[n] = cn[n] + c;
    }
    // 2 pi i Res_0 e^{i omega0 s} sum c_n s^{-n} = 2 pi i sum_n c_n (i w)^{n-1}/(n-1)!,
    // rescaled by -sqrt(2) to the (x2, y2) pairing normalization of the inner
    // Stokes constant, so that b0 of H0 + nu R0 equals nu * stokes_derivative.
    Cplx res(0);
    Cplx iw(Real(0), omega0);
    Cplx pw(1);  // (i w)^{n-1} / (n-1)!
    for (size_t n = 1; n < cn.size(); ++n) {
        res = res + cn[n] * pw;
        pw = pw * iw / Real((int)n);
    }
    return Cplx(Real(0), -2 * real_pi() * rt2) * res;
}

MelnikovResult stokes_derivative_quadrature(const PolyHamiltonian& R0, const Real& omega0,
                                            const Real& tol) {
    Real rt2 = boost::multiprecision::sqrt(Real(2));
    std::vector<Cplx> cn;
    for (const auto& [key, coeff] : R0.terms) {
        if (key[4] != 0 || key[5] != 0)
            throw ComputationError("perturbation must not depend on mu or nu");
        int e2 = key[2], e3 = key[3];
        if (e2 + e3 == 0) continue;
        if (e2 + e3 > 1)
            throw ComputationError("perturbation must be linear in the elliptic variables");
        int n = 2 * key[0] + 3 * key[1];
        if (n == 0) continue;  // constant forcing: regularized to zero
        Cplx kap = (e2 == 1) ? Cplx(1 / rt2) : Cplx(Real(0), 1 / rt2);
        Cplx c = Cplx(to_real(coeff)) * kap *
                 Cplx(rpow(Real(2), key[0]) * rpow(Real(-4), key[1]));
        if ((int)cn.size() <= n) cn.resize(n + 1, Cplx(0));
        cn[n] = cn[n] + c;
    }

    MelnikovResult res;
    res.method = "quadrature";
    res.error = Real(0);
    if (cn.empty()) {
        res.M = Cplx(0);
        return res;
    }

    // finite window along Im s = -1
    Real X = 50;
    auto f = [&](const Real& x) -> Cplx {
        Cplx s(x, Real(-1));
        Cplx e = exp(Cplx(Real(0), omega0) * s);
        Cplx inv = Cplx(1) / s;
        Cplx val(0);
        Cplx p(1);
        for (size_t n = 1; n < cn.size(); ++n) {
            p = p * inv;
            val = val + cn[n] * p;
        }
        return e * val;
    };
    Cplx I = tanh_sinh(f, -X, X, tol, res.error);

    // asymptotic tails of int e^{i w s} s^{-n} ds beyond the window:
    //   right: -e^{i w s0} sum_k (n)_k / ((i w)^{k+1} s0^{n+k})
    //   left:  +e^{i w s1} sum_k (n)_k / ((i w)^{k+1} s1^{n+k})
    Cplx iw(Real(0), omega0);
    auto tail = [&](const Cplx& s_end, int sign) {
        Cplx e = exp(Cplx(Real(0), omega0) * s_end);
        Cplx total(0);
        for (size_t n = 1; n < cn.size(); ++n) {
            if (abs(cn[n]) == 0) continue;
            Cplx sp(1);
            for (size_t q = 0; q < n; ++q) sp = sp * s_end;
            Cplx term = Cplx(1) / (iw * sp);
            Cplx sum(0);
            Real prev_mag = abs(term);
            for (int k = 0; k < 60; ++k) {
                sum = sum + term;
                Cplx next = term * Real((int)n + k) / (iw * s_end);
                Real mag = abs(next);
                if (mag >= prev_mag || mag < tol * Real("1e-4")) {
                    res.error += mag;
                    break;
                }
                term = next;
                prev_mag = mag;
            }
            total = total + cn[n] * sum;
        }
        return Cplx(Real(sign)) * e * total;
    };
    Cplx right = tail(Cplx(X, Real(-1)), -1);
    Cplx left = tail(Cplx(-X, Real(-1)), +1);
    // same -sqrt(2) pairing normalization as the residue form
    res.M = Cplx(-rt2) * (I + right + left);
    res.error = res.error * rt2;
    return res;
}

}  // namespace sepsplit
