#ifndef SEPSPLIT_FORMAL_HPP
#define SEPSPLIT_FORMAL_HPP

#include "sepsplit/hamiltonian.hpp"

#include <map>
#include <utility>
#include <vector>

namespace sepsplit {

// ---------------------------------------------------------------------------
// Exact-rational formal series for the separatrix of the normal form:
//   x1 = sum_{k>=1} eps^{2k} p_k(s),  s = eps*t,  z = 1/cosh^2(s/2),
//   p_k polynomial of degree <= k in z,
//   y1 = sum eps^{2k+1} q_k(s),  q_k = sum_l q_{k,l} sinh(s/2)/cosh^{2l+1}(s/2),
//   mu = sum_{k>=2} mu_k eps^{2k},
// determined by the energy-form equation eps^2 (x')^2 + 2 V(x, mu) + C = 0.
// ---------------------------------------------------------------------------

// Polynomial in z with exact rational coefficients; index = power of z.
using ZPoly = std::vector<Rational>;

// Coefficient tables of the normal-form potential:
//   V(x, 0)      = sum v[{k,l}] mu^k x^l          (y1-free, elliptic-free part)
//   dV/dI(x, 0)  = sum w[{k,l}] mu^k x^l          (linear-in-I part)
struct NormalFormTables {
    std::map<std::pair<int, int>, Rational> v;
    std::map<std::pair<int, int>, Rational> w;

    Rational v_at(int k, int l) const {
        auto it = v.find({k, l});
        return it == v.end() ? Rational(0) : it->second;
    }
    Rational w_at(int k, int l) const {
        auto it = w.find({k, l});
        return it == w.end() ? Rational(0) : it->second;
    }
};

// Extract the tables from the nu = 0 part of a polynomial Hamiltonian that is
// already in normal-form shape: y1^2/2 + V(x1, I) with I = (x2^2+y2^2)/2.
// Rejects Hamiltonians outside this class (odd elliptic powers, x2*y2 cross
// terms, kinetic terms other than y1^2/2).
NormalFormTables extract_tables(const PolyHamiltonian& H);

struct FormalSeparatrix {
    int N = 0;                             // series order
    std::vector<ZPoly> p;                  // p[k], k = 1..N (p[0] unused)
    std::vector<std::vector<Rational>> q;  // q[k][l] = -l*p[k][l], l = 0..k
    std::vector<Rational> mu;              // mu[k], k = 2..N+1
    std::vector<Rational> C;               // C[k], k = 3..N+2
};

// Lemma-1 recursion. Preconditions: v00 = v01 = v02 = v10 = 0, v03*v11 != 0.
FormalSeparatrix formal_separatrix(const NormalFormTables& tab, int N);

// d/dz and d^2/ds^2 of a z-polynomial (the latter is again a z-polynomial by
// the profile identities (z')^2 = z^2 - z^3, z'' = z - 3/2 z^2).
ZPoly zpoly_dz(const ZPoly& a);
ZPoly zpoly_dss(const ZPoly& a);

struct FormalU {
    int N = 0;
    std::vector<Rational> omega;           // omega[k], k = 0..N
    std::vector<std::vector<Rational>> u;  // u[k][l], k = 0..N-1, l = 0..k
};

// Termwise integral u = int_0^t dV/dI(x1(t'), 0) dt'.
FormalU formal_u(const NormalFormTables& tab, const FormalSeparatrix& sep, int N);

// Laurent polynomial in z (negative powers allowed): power -> coefficient.
using LaurentZ = std::map<int, Rational>;

// Function algebra closed under d/ds used by the fourth variational solution:
//   f(s) = A(z) + B(z) z' + s C(z) + s z' D(z).
struct SFunc {
    LaurentZ A, B, C, D;
};

SFunc sfunc_deriv(const SFunc& f);
Cplx sfunc_eval(const SFunc& f, const Cplx& s);

struct FormalXi4 {
    int N = 0;
    std::vector<SFunc> v;  // v[k], k = 0..N; v_k = c_k(z) s z' + z^{-1} d_{k+2}(z)
};

// Solves the Wronskian hierarchy sum_{j+k=n+1} (p_j' v_k' - p_j'' v_k) = delta_{n0}.
// The full fourth solution is xi4 = eps^{-4} (v, eps dv/ds, 0, 0).
FormalXi4 formal_xi4(const FormalSeparatrix& sep, int N);

// Laurent re-expansion about s = i*pi, tau = t - i*pi/eps, sigma = s - i*pi:
//   A[m](tau) = [eps^{2m}] x1-series,  even powers of tau,
//   B[m](tau) = [eps^{2m}] y1-series,  odd powers,
//   U[m](tau) = [eps^{2m}] (u-series - i*pi*omega/eps), odd powers
// (the linear omega_m tau term is included in U[m] at power 1).
struct LaurentExpansion {
    int M = 0;     // truncation depth: powers of tau down to tau^{-2M}
    int mmax = 0;  // series orders m = 0..mmax
    std::vector<std::map<int, Rational>> A, B, U;
};

LaurentExpansion reexpand_at_singularity(const FormalSeparatrix& sep, const FormalU& u, int M,
                                         int mmax);

Cplx eval_tau_poly(const std::map<int, Rational>& poly, const Cplx& tau);

// ---------------------------------------------------------------------------
// Numeric evaluation of the formal series
// ---------------------------------------------------------------------------

struct FormalEval {
    Cplx x1, y1, u;
    Cplx x1_dd;         // second s-derivative of the x1-series (for residuals)
    bool pole_warning;  // set when |s -+ i*pi| < margin
};

// Partial sums at order <= N_trunc (mu evaluated with mu_k, k <= N_trunc, per
// the truncation convention of the residual-scaling diagnostics).
FormalEval evaluate_formal(const FormalSeparatrix& sep, const FormalU& u, const Real& eps,
                           const Cplx& t, int N_trunc, const Real& pole_margin = Real(0.5));

Real evaluate_mu(const FormalSeparatrix& sep, const Real& eps, int N_trunc);
Real evaluate_omega(const FormalU& u, const Real& eps, int N_trunc);

// Residual of the truncated series in the reduced second-order ODE
//   eps^2 x'' + dV/dx(x, mu_{<=N}) = 0  at the (complex) slow time s.
Cplx formal_ode_residual(const NormalFormTables& tab, const FormalSeparatrix& sep,
                         const Real& eps, const Cplx& s, int N_trunc);

std::string rational_string(const Rational& r);

}  // namespace sepsplit

#endif
