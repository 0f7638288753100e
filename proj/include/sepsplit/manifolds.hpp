#ifndef SEPSPLIT_MANIFOLDS_HPP
#define SEPSPLIT_MANIFOLDS_HPP

#include "sepsplit/formal.hpp"
#include "sepsplit/ode.hpp"

namespace sepsplit {

// Shared data for one (mu, nu): equilibrium, formal series (eps = lambda_mu),
// field system and integrator settings.
struct ManifoldContext {
    PolyHamiltonian H;
    Real mu, nu;
    FieldSystem fs;
    EquilibriumData eq;
    NormalFormTables tab;
    FormalSeparatrix sep;
    FormalU fu;
    int N = 8;
    IntegratorConfig cfg;
    Real apex;  // formal x1 value at the loop apex (s = 0)
};

ManifoldContext make_context(const PolyHamiltonian& H, const Real& mu, const Real& nu,
                             const IntegratorConfig& cfg, int N = 8);

struct SeparatrixSolution {
    bool stable = false;  // false: x^- (unstable, t -> -inf), true: x^+
    Real T_seed;          // requested asymptotic seed time
    Real T_flow;          // |flow time| from seed to the origin crossing
    PhasePoint seed_state;
    PhasePoint origin_state;  // primary Sigma-crossing, time origin t = 0
    Real sigma_residual;      // |y1| at the origin
    Real drift;               // energy drift of the seed -> origin run
};

// Seed offset that matches the formal-series amplitude at t = -+T_seed.
Real matched_offset(const ManifoldContext& ctx, bool stable, const Real& T_seed);

// p_mu + offset * w_side, cross-checked against the formal series evaluated at
// t = -+T_seed; throws when the two seeds disagree beyond the truncation +
// offset^2 + nu budget ("offset too large").
PhasePoint seed_separatrix(const ManifoldContext& ctx, bool stable, const Real& T_seed,
                           const Real& offset);

// Seeds with the matched offset and flows to the primary Sigma-crossing
// (maximal x1 among crossings with |x1 - apex| < apex/2).
SeparatrixSolution build_separatrix(const ManifoldContext& ctx, bool stable,
                                    const Real& T_seed);

struct VariationalBasis {
    std::vector<Cplx> times;  // -T_flow and the window samples (0 included)
    int i0 = 0;               // index of t = 0
    std::vector<PhasePoint> xminus;               // base solution at times
    std::vector<PhasePoint> xi1, xi2, xi3, xi4;   // variational basis at times
    // pairings at t = 0 in the order
    // (x~1,x~2) (x3,x4) (x~1,x3) (x~1,x4) (x~2,x3) (x~2,x4)
    std::array<Cplx, 6> pairings;
    Real window;  // half-width 1/lambda
};

VariationalBasis build_variational_basis(const ManifoldContext& ctx,
                                         const SeparatrixSolution& minus);

// Shifts the stable time origin (1-D root-solve) to remove the flow-direction
// component theta3 = Omega(delta(0), xi4(0)) of the splitting vector; the
// energy-equality identity then makes |Omega(delta(0), xi3(0))| = O(|delta|^2),
// checked against the 1e-3 * |delta| * |xi3| section tolerance.
void normalize_time_origin(const ManifoldContext& ctx, SeparatrixSolution& plus,
                           const SeparatrixSolution& minus, const VariationalBasis& basis);

struct SplittingMeasurement {
    PhasePoint delta0;
    Cplx theta1, theta2, theta3, theta4;
    Real E_e1 = Real(0);
    Real delta_norm = Real(0);
    Real theta1_window_variation = Real(0);  // max |theta1(t) - theta1(0)|
    Real drift = Real(0);                    // worst integration drift seen
    bool upper_bound = false;                // E_e1 below the noise floor
};

SplittingMeasurement measure_splitting(const ManifoldContext& ctx,
                                       const SeparatrixSolution& plus,
                                       const SeparatrixSolution& minus,
                                       const VariationalBasis& basis);

// Full pipeline for one parameter point.
struct SplitResult {
    Real mu, nu, lambda, omega;
    SplittingMeasurement m;
};

SplitResult run_split(const PolyHamiltonian& H, const Real& mu, const Real& nu,
                      const IntegratorConfig& cfg, const Real& T_over_lambda = Real(40),
                      int N = 8);

}  // namespace sepsplit

#endif
