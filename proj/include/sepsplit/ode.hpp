#ifndef SEPSPLIT_ODE_HPP
#define SEPSPLIT_ODE_HPP

#include "sepsplit/hamiltonian.hpp"

namespace sepsplit {

// Piecewise-linear path in complex time, traversed vertex to vertex.
struct ComplexPath {
    std::vector<Cplx> vertices;

    ComplexPath() = default;
    ComplexPath(std::initializer_list<Cplx> v) : vertices(v) {}
    explicit ComplexPath(std::vector<Cplx> v) : vertices(std::move(v)) {}

    void validate() const;  // >= 2 vertices, consecutive distinct
    Real length() const;
};

enum class OdeMethod { taylor, rk8 };

struct IntegratorConfig {
    Real abs_tol = Real("1e-30");
    Real rel_tol = Real("1e-30");
    Real max_step = Real(0);  // 0 = uncapped
    Real blowup_norm = Real("1e6");
    OdeMethod method = OdeMethod::taylor;
    int samples_per_segment = 0;  // interior checkpoints per path segment

    void validate() const;  // tolerances representable at current precision
};

struct Trajectory {
    std::vector<std::pair<Cplx, PhasePoint>> samples;
    std::vector<Cplx> energies;  // H at each sample
    Cplx energy_reference;       // H at the start
    ComplexPath path;

    const PhasePoint& final_state() const { return samples.back().second; }
};

// ---------------------------------------------------------------------------
// Generic engine: sparse polynomial ODE over M complex variables.  The
// Hamiltonian field, its variational extension and the inner-equation systems
// are all instances.
// ---------------------------------------------------------------------------

struct PolyOde {
    struct Term {
        std::vector<std::pair<int, int>> factors;  // (variable, power >= 1)
        Cplx coeff;
    };
    int dim = 0;
    std::vector<std::vector<Term>> rhs;  // rhs[i] = dx_i/dt

    std::vector<Cplx> eval(const std::vector<Cplx>& x) const;
};

// dx/dt = J H'(x) as a PolyOde (variables 0..3)
PolyOde field_ode(const FieldSystem& fs);
// appends the linearized block: variables 4..7 obey xi' = J H''(x) xi
PolyOde append_variational(PolyOde sys, const FieldSystem& fs);

// One Taylor step with free dense output; exposed so callers can root-solve
// for section crossings inside a step.
class TaylorStepper {
  public:
    TaylorStepper(const PolyOde& sys, const IntegratorConfig& cfg);

    void set_state(const Cplx& t, std::vector<Cplx> x);
    // advance along unit direction dir by at most max_len; returns step taken
    Real step(const Cplx& dir, const Real& max_len);
    // state at fraction of the last step: offset h in [0, last step]
    std::vector<Cplx> dense(const Real& h) const;
    std::vector<Cplx> dense_derivative(const Real& h) const;  // d/dh along dir

    const Cplx& time() const { return t_; }
    const std::vector<Cplx>& state() const { return x_; }
    int order() const { return K_; }

  private:
    struct Mul {
        int a, b;
    };
    const PolyOde& sys_;
    IntegratorConfig cfg_;
    int K_;
    std::vector<Mul> muls_;  // product slots M.. in topological order
    std::vector<std::vector<std::pair<int, Cplx>>> lin_;  // per comp: (slot|-1, coeff)
    Cplx t_, dir_;
    std::vector<Cplx> x_;
    std::vector<std::vector<Cplx>> series_;  // per component, coeffs 0..K
    Real last_h_ = Real(0);

    void build_program();
    void compute_series();
};

// Integrate a generic polynomial system along a path; returns samples at all
// vertices plus cfg.samples_per_segment interior checkpoints per segment.
std::vector<std::pair<Cplx, std::vector<Cplx>>> integrate_ode(const PolyOde& sys,
                                                              const std::vector<Cplx>& start,
                                                              const ComplexPath& path,
                                                              const IntegratorConfig& cfg);

Trajectory integrate_flow(const PolyHamiltonian& H, const Real& mu, const Real& nu,
                          const PhasePoint& start, const ComplexPath& path,
                          const IntegratorConfig& cfg);
Trajectory integrate_flow(const FieldSystem& fs, const PhasePoint& start,
                          const ComplexPath& path, const IntegratorConfig& cfg);

// Linearized flow along the base trajectory (co-integrated as an 8-dim system
// from the base start; requires base.path).
std::vector<std::pair<Cplx, PhasePoint>> integrate_variational(const FieldSystem& fs,
                                                               const Trajectory& base,
                                                               const PhasePoint& xi_start,
                                                               const IntegratorConfig& cfg);

Real energy_drift(const Trajectory& traj);

}  // namespace sepsplit

#endif
