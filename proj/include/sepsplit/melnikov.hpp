#ifndef SEPSPLIT_MELNIKOV_HPP
#define SEPSPLIT_MELNIKOV_HPP

#include "sepsplit/formal.hpp"

namespace sepsplit {

struct MelnikovResult {
    Cplx M;
    Real error;  // truncation tail + quadrature-refinement estimate
    const char* method = "quadrature";
};

// Closed form for the perturbation R = c0 x1^m x2 in the profile normalization
// x1 -> eps^2 z(s), z = 1/cosh^2(s/2): the exact residue-ladder sum
//   M = 2 pi (-1)^{m-1} c0 2^{2m} omega prod_{k=1}^{m-1}(omega^2 + k^2 eps^2)
//       / ((2m-1)! (e^{pi omega/eps} - e^{-pi omega/eps})),
// which reduces to the leading closed form omega^{2m-1} / (2 cosh-like
// denominator) as eps -> 0.
Cplx melnikov_residue(int m, const Real& c0, const Real& omega, const Real& eps);

// Numeric Melnikov integral for a polynomial perturbation R linear in the
// elliptic variables, along the integrable separatrix of H (nu = 0), with the
// elliptic phase e^{i int dV/dI} co-integrated in closed form.  For the
// normalized cubic family this reproduces melnikov_residue to quadrature
// accuracy.
MelnikovResult melnikov_quadrature(const PolyHamiltonian& H, const PolyHamiltonian& R,
                                   const Real& mu, const Real& tol);

// d b0 / d nu at nu = 0 for H0 + nu R0: -sqrt(2) times 2 pi i times the
// residue at s = 0 of e^{i omega0 s} dR0/d(conj z2) evaluated on the inner
// separatrix X0(s) = (2 s^-2, -4 s^-3, 0, 0), z2 = (x2 + i y2)/sqrt(2); the
// -sqrt(2) factor converts to the (x2, y2) pairing normalization used by the
// Stokes extraction, so b0(H0 + nu R0) = nu * stokes_derivative + O(nu^2).
Cplx stokes_derivative(const PolyHamiltonian& R0, const Real& omega0);

// Independent cross-check: the same integral by quadrature along Im s = -1
// with asymptotic tail corrections.
MelnikovResult stokes_derivative_quadrature(const PolyHamiltonian& R0, const Real& omega0,
                                            const Real& tol);

}  // namespace sepsplit

#endif
