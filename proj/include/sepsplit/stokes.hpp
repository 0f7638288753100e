#ifndef SEPSPLIT_STOKES_HPP
#define SEPSPLIT_STOKES_HPP

#include "sepsplit/formal.hpp"
#include "sepsplit/ode.hpp"

namespace sepsplit {

// ---------------------------------------------------------------------------
// Inner problem at the singularity: X' = J H0'(X) in the shifted time tau,
// with X ~ alpha tau^-2 at infinity.  Both the stable and unstable inner
// solutions share one asymptotic power series in tau^-1; their difference
// delta0 is beyond all orders and is measured by the pairing with eta0.
// ---------------------------------------------------------------------------

// Asymptotic power series of the inner separatrix and of the elliptic phase:
//   X_i(tau) ~ sum_n c[i][n] tau^-n,
//   U(tau)   = omega0 tau + sum_n phase[n] tau^-n,
// gauge-fixed by pinning the tau^-3 coefficient of x1 (time-shift freedom).
struct InnerSeriesData {
    int M = 0;                               // deepest power of tau^-1
    std::array<std::vector<Real>, 4> c;      // c[i][n], n = 0..M
    std::vector<Cplx> phase;                 // phase[n], n = 0..M-1 (index 0 unused)
    Real omega0;
    Real newton_residual;                    // scaled residual of the coefficient solve
};

InnerSeriesData inner_series(const NumPoly& H0, int M);

PhasePoint eval_inner_series(const InnerSeriesData& s, const Cplx& tau);
// U0(tau) = omega0 tau + tail; exp(i U0) is the eta0 normalization
Cplx inner_phase(const InnerSeriesData& s, const Cplx& tau);
// defect d/dtau X^{(M)} - J H0'(X^{(M)}) of the truncated series at tau
PhasePoint inner_series_defect(const NumPoly& H0, const InnerSeriesData& s, const Cplx& tau);

// Inner solution on the descent path: entry on the sector bisectrix
// tau_match (side - i)/sqrt(2), then straight down the imaginary axis with
// samples at tau = -i T for each T in T_list (ascending).
struct InnerSolution {
    int side = -1;                  // -1: unstable (D-), +1: stable (D+)
    Cplx tau_entry;
    std::vector<Cplx> taus;         // -i T_j
    std::vector<PhasePoint> states;
    Real matching_residual;         // series ODE defect at the entry point
    Real drift;                     // H0 drift along the path
};

InnerSolution solve_inner(const NumPoly& H0, const InnerSeriesData& s, int side,
                          const Real& tau_match, const std::vector<Real>& T_list,
                          const IntegratorConfig& cfg);

// eta0: variational solution along the unstable inner solution with the
// asymptotic normalization eta0 ~ (0,0,1,i) e^{i U0(tau)} in D-.
struct EtaSolution {
    int order = 0;
    std::vector<Cplx> taus;
    std::vector<PhasePoint> states;
};

EtaSolution solve_eta0(const NumPoly& H0, const InnerSeriesData& s, const Real& tau_match,
                       const std::vector<Real>& T_list, const IntegratorConfig& cfg);

struct StokesFit {
    Real rate = Real(0);       // fitted exponential rate (expected ~ omega0)
    Real amplitude = Real(0);
    Real residual = Real(0);   // max log-space deviation of the fit
};

struct StokesResult {
    Real omega0;
    std::vector<std::pair<Real, Cplx>> samples;  // (T, pairing) for b0
    Cplx b0;
    StokesFit fit;
    bool reliable = true;     // monotone convergence and small fit residual
    bool upper_bound = false; // delta0 at the integration noise floor
    Real noise = Real(0);
    std::vector<Cplx> bn;     // b_0..b_{n_max}
    std::vector<Real> an;     // a_n = 1/2 sum_k Re(b_k conj b_{n-k})
    Real matching_residual = Real(0);
    Real drift = Real(0);
};

// Extrapolation core: pairing samples -> limit + exponential-convergence fit.
StokesResult stokes_b0(const std::vector<Real>& T_list, const std::vector<PhasePoint>& delta0,
                       const std::vector<PhasePoint>& eta0);

std::vector<Real> assemble_an(const std::vector<Cplx>& bn);

struct StokesConfig {
    Real tau_match = Real(40);
    std::vector<Real> T_list;  // empty: auto (7 points from 16/omega0, step 4/omega0)
    int M = 0;                 // inner-series depth; <= 0: auto (~ omega0 tau_match)
    int N = 10;                // formal order for the eps^2-hierarchy data
    int n_max = 0;             // highest b_n (<= 2; > 0 needs the mu-family entry)
    bool noise_check = true;
    IntegratorConfig ode;
};

// b0 for a bare inner Hamiltonian (no mu-expansion data needed).
StokesResult run_stokes(const NumPoly& H0, const StokesConfig& cfg);

// Full hierarchy for a mu-family in normal-form shape: H0 and H2 are the
// eps^0 and eps^4 slices (H1 = 0), the eta1/eta2 and X2 matching data come
// from the formal series, and b_0..b_{n_max}, a_n are assembled.
StokesResult run_stokes(const PolyHamiltonian& H, const Real& nu, const StokesConfig& cfg);

}  // namespace sepsplit

#endif
