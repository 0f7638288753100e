#ifndef SEPSPLIT_HAMILTONIAN_HPP
#define SEPSPLIT_HAMILTONIAN_HPP

#include "sepsplit/real.hpp"

#include <array>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace sepsplit {

// Phase-space point, components ordered (x1, y1, x2, y2).
struct PhasePoint {
    std::array<Cplx, 4> c{};

    PhasePoint() = default;
    PhasePoint(Cplx x1, Cplx y1, Cplx x2, Cplx y2) : c{x1, y1, x2, y2} {}

    Cplx& operator[](int i) { return c[i]; }
    const Cplx& operator[](int i) const { return c[i]; }
    Cplx& x1() { return c[0]; }
    Cplx& y1() { return c[1]; }
    Cplx& x2() { return c[2]; }
    Cplx& y2() { return c[3]; }
    const Cplx& x1() const { return c[0]; }
    const Cplx& y1() const { return c[1]; }
    const Cplx& x2() const { return c[2]; }
    const Cplx& y2() const { return c[3]; }
};

inline PhasePoint operator+(const PhasePoint& a, const PhasePoint& b) {
    return {a[0] + b[0], a[1] + b[1], a[2] + b[2], a[3] + b[3]};
}
inline PhasePoint operator-(const PhasePoint& a, const PhasePoint& b) {
    return {a[0] - b[0], a[1] - b[1], a[2] - b[2], a[3] - b[3]};
}
inline PhasePoint operator*(const Cplx& s, const PhasePoint& a) {
    return {s * a[0], s * a[1], s * a[2], s * a[3]};
}
Real max_norm(const PhasePoint& a);

// Omega = dx1 ^ dy1 + dx2 ^ dy2
inline Cplx symplectic_pair(const PhasePoint& u, const PhasePoint& w) {
    return u[0] * w[1] - u[1] * w[0] + u[2] * w[3] - u[3] * w[2];
}

// Multi-index: exponents of (x1, y1, x2, y2, mu, nu).
using MonoKey = std::array<int, 6>;

// Polynomial Hamiltonian family H_{mu,nu} with exact rational coefficients.
struct PolyHamiltonian {
    std::map<MonoKey, Rational> terms;
    // model constants of the normal-form family (valid when has_constants)
    bool has_constants = false;
    Rational a = 0, b = 0, c = 0, omega0 = 0;

    void add_term(const MonoKey& k, const Rational& coeff);
};

// The cubic normal-form model: y1^2/2 + omega0*I - a*mu*x1 + b*x1^3/3 + c*x1*I
// with I = (x2^2 + y2^2)/2.
PolyHamiltonian cubic_model(const Rational& a, const Rational& b, const Rational& c,
                            const Rational& omega0);

// Parse the model file format:
//   lines "name value" for constants a, b, c, omega0 (value rational p/q or decimal)
//   lines "i1 j1 i2 j2 kmu knu coeff" for monomial terms
//   '#' comments and blank lines ignored.
PolyHamiltonian parse_model(const std::string& text);
PolyHamiltonian load_model(const std::string& path);

// Specialized polynomial in (x1,y1,x2,y2) with Real coefficients (mu, nu
// substituted numerically).
struct NumPoly {
    struct Term {
        std::array<int, 4> e;
        Real coeff;
    };
    std::vector<Term> t;

    Cplx eval(const PhasePoint& p) const;
    bool empty() const { return t.empty(); }
};

NumPoly specialize(const PolyHamiltonian& H, const Real& mu, const Real& nu);
NumPoly derivative(const NumPoly& P, int var);

Cplx eval(const PolyHamiltonian& H, const PhasePoint& p, const Real& mu, const Real& nu);
PhasePoint vector_field(const PolyHamiltonian& H, const PhasePoint& p, const Real& mu,
                        const Real& nu);

// Precomputed field data for one (mu, nu): Hamiltonian, symplectic gradient
// J H' and variational matrix J H'' (entries as polynomials).
struct FieldSystem {
    NumPoly H;
    std::array<NumPoly, 4> field;          // (dH/dy1, -dH/dx1, dH/dy2, -dH/dx2)
    std::array<std::array<NumPoly, 4>, 4> jhess;  // rows of J H''

    PhasePoint eval_field(const PhasePoint& p) const;
    PhasePoint apply_jhess(const PhasePoint& p, const PhasePoint& xi) const;
};

FieldSystem make_field_system(const PolyHamiltonian& H, const Real& mu, const Real& nu);
FieldSystem make_field_system(const NumPoly& H);

// mu-expansion slices for the inner equation: H_k = [eps^{2k}] H_{mu(eps),nu}
// with mu = sum_{j>=2} mu_j eps^{2j}. k=0 gives H at mu=0; k=1 vanishes;
// k=2 gives mu_2 * dH/dmu|_{mu=0}.
NumPoly mu_slice(const PolyHamiltonian& H, int k, const std::vector<Rational>& mu_coeffs,
                 const Real& nu);

struct EquilibriumData {
    PhasePoint location;  // real point
    Real lambda;          // hyperbolic exponent
    Real omega;           // elliptic frequency
    PhasePoint v;         // elliptic eigenvector, Omega(v, conj v) = -2i
    PhasePoint w_unstable;
    PhasePoint w_stable;
    Real grad_norm;       // |grad H| at location (diagnostic)
};

struct ComputationError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

EquilibriumData find_equilibrium(const PolyHamiltonian& H, const Real& mu, const Real& nu,
                                 const PhasePoint& guess);
// Seeds the Newton iteration from the cubic closed form x1 = -sqrt(a*mu/b).
EquilibriumData find_equilibrium(const PolyHamiltonian& H, const Real& mu, const Real& nu);

// Small dense linear algebra on Real / Cplx (Gaussian elimination with
// partial pivoting).  Throws ComputationError on singular systems.
std::vector<Real> solve_linear(std::vector<std::vector<Real>> A, std::vector<Real> rhs);
std::vector<Cplx> solve_linear(std::vector<std::vector<Cplx>> A, std::vector<Cplx> rhs);

}  // namespace sepsplit

#endif
