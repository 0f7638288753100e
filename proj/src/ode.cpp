#include "sepsplit/ode.hpp"

#include <algorithm>
#include <functional>
#include <map>

namespace sepsplit {

namespace {

Real vec_max_norm(const std::vector<Cplx>& x) {
    Real m = 0;
    for (const auto& c : x) m = rmax(m, abs(c));
    return m;
}

Real rpow_frac(const Real& base, int inv_exp) {
    using boost::multiprecision::exp;
    using boost::multiprecision::log;
    return exp(log(base) / inv_exp);
}

}  // namespace

void ComplexPath::validate() const {
    if (vertices.size() < 2) throw ComputationError("path needs at least 2 vertices");
    for (size_t i = 1; i < vertices.size(); ++i)
        if (abs(vertices[i] - vertices[i - 1]) == 0)
            throw ComputationError("path has coincident consecutive vertices");
}

Real ComplexPath::length() const {
    Real L = 0;
    for (size_t i = 1; i < vertices.size(); ++i) L += abs(vertices[i] - vertices[i - 1]);
    return L;
}

void IntegratorConfig::validate() const {
    Real floor = rpow(Real(2), -(int)precision_bits() + 16);
    if (!(abs_tol > floor) || !(rel_tol > floor))
        throw ComputationError("tolerances not representable at current precision");
    if (abs_tol <= 0 || rel_tol <= 0) throw ComputationError("tolerances must be positive");
}

std::vector<Cplx> PolyOde::eval(const std::vector<Cplx>& x) const {
    std::vector<Cplx> f(dim);
    for (int i = 0; i < dim; ++i) {
        for (const auto& term : rhs[i]) {
            Cplx v = term.coeff;
            for (const auto& [var, pw] : term.factors) v *= ipow(x[var], pw);
            f[i] += v;
        }
    }
    return f;
}

PolyOde field_ode(const FieldSystem& fs) {
    PolyOde sys;
    sys.dim = 4;
    sys.rhs.resize(4);
    for (int i = 0; i < 4; ++i) {
        for (const auto& term : fs.field[i].t) {
            PolyOde::Term t;
            t.coeff = Cplx(term.coeff);
            for (int v = 0; v < 4; ++v)
                if (term.e[v] > 0) t.factors.emplace_back(v, term.e[v]);
            sys.rhs[i].push_back(std::move(t));
        }
    }
    return sys;
}

PolyOde append_variational(PolyOde sys, const FieldSystem& fs) {
    int base = sys.dim;
    sys.dim += 4;
    sys.rhs.resize(sys.dim);
    for (int i = 0; i < 4; ++i) {
        for (int j = 0; j < 4; ++j) {
            for (const auto& term : fs.jhess[i][j].t) {
                PolyOde::Term t;
                t.coeff = Cplx(term.coeff);
                for (int v = 0; v < 4; ++v)
                    if (term.e[v] > 0) t.factors.emplace_back(v, term.e[v]);
                t.factors.emplace_back(base + j, 1);
                sys.rhs[base + i].push_back(std::move(t));
            }
        }
    }
    return sys;
}

// ---------------------------------------------------------------------------
// Taylor stepper
// ---------------------------------------------------------------------------

TaylorStepper::TaylorStepper(const PolyOde& sys, const IntegratorConfig& cfg)
    : sys_(sys), cfg_(cfg) {
    cfg_.validate();
    using boost::multiprecision::log;
    Real tol = cfg_.abs_tol < cfg_.rel_tol ? cfg_.abs_tol : cfg_.rel_tol;
    K_ = std::max(20, (int)(Real(log(1 / tol) / 2).convert_to<double>()) + 8);
    build_program();
}

void TaylorStepper::build_program() {
    // compile each monomial into a chain of binary products over shared slots
    std::map<std::vector<int>, int> memo;
    std::function<int(const std::vector<int>&)> slot_for =
        [&](const std::vector<int>& e) -> int {
        int total = 0, var = -1;
        for (int v = 0; v < sys_.dim; ++v) {
            total += e[v];
            if (var < 0 && e[v] > 0) var = v;
        }
        if (total == 0) return -1;
        if (total == 1) return var;
        auto it = memo.find(e);
        if (it != memo.end()) return it->second;
        auto e2 = e;
        e2[var] -= 1;
        int b = slot_for(e2);
        muls_.push_back({var, b});
        int slot = sys_.dim + (int)muls_.size() - 1;
        memo[e] = slot;
        return slot;
    };
    lin_.resize(sys_.dim);
    for (int i = 0; i < sys_.dim; ++i) {
        for (const auto& term : sys_.rhs[i]) {
            std::vector<int> e(sys_.dim, 0);
            for (const auto& [var, pw] : term.factors) e[var] += pw;
            lin_[i].emplace_back(slot_for(e), term.coeff);
        }
    }
    series_.assign(sys_.dim + muls_.size(), std::vector<Cplx>(K_ + 1));
}

void TaylorStepper::set_state(const Cplx& t, std::vector<Cplx> x) {
    if ((int)x.size() != sys_.dim) throw ComputationError("state dimension mismatch");
    t_ = t;
    x_ = std::move(x);
    last_h_ = 0;
}

void TaylorStepper::compute_series() {
    const int M = sys_.dim;
    for (int v = 0; v < M; ++v) series_[v][0] = x_[v];
    for (int k = 0; k < K_; ++k) {
        for (size_t m = 0; m < muls_.size(); ++m) {
            Cplx s;
            const auto& A = series_[muls_[m].a];
            const auto& B = series_[muls_[m].b];
            for (int i = 0; i <= k; ++i) s += A[i] * B[k - i];
            series_[M + m][k] = s;
        }
        for (int c = 0; c < M; ++c) {
            Cplx F;
            for (const auto& [slot, coeff] : lin_[c]) {
                if (slot < 0) {
                    if (k == 0) F += coeff;
                } else {
                    F += coeff * series_[slot][k];
                }
            }
            series_[c][k + 1] = dir_ * F / Real(k + 1);
        }
    }
}

Real TaylorStepper::step(const Cplx& dir, const Real& max_len) {
    if (vec_max_norm(x_) > cfg_.blowup_norm) throw ComputationError("escape/blow-up");
    dir_ = dir;
    compute_series();
    Real tol = cfg_.abs_tol + cfg_.rel_tol * vec_max_norm(x_);
    Real nK = 0, nK1 = 0;
    for (int c = 0; c < sys_.dim; ++c) {
        nK = rmax(nK, abs(series_[c][K_]));
        nK1 = rmax(nK1, abs(series_[c][K_ - 1]));
    }
    Real h_err = max_len;
    bool limited = false;
    if (nK1 > 0) {
        h_err = rpow_frac(tol / nK1, K_ - 1);
        limited = true;
    }
    if (nK > 0) {
        Real h2 = rpow_frac(tol / nK, K_);
        if (!limited || h2 < h_err) h_err = h2;
        limited = true;
    }
    if (limited) {
        h_err *= Real("0.8");
        Real floor = rmax(Real(1), abs(t_)) * rpow(Real(2), -(int)precision_bits() + 8);
        if (h_err < floor) throw ComputationError("singularity proximity");
    }
    Real h = limited ? (h_err < max_len ? h_err : max_len) : max_len;
    if (cfg_.max_step > 0 && h > cfg_.max_step) h = cfg_.max_step;
    last_h_ = h;
    x_ = dense(h);
    t_ += dir_ * h;
    return h;
}

std::vector<Cplx> TaylorStepper::dense(const Real& h) const {
    std::vector<Cplx> out(sys_.dim);
    for (int c = 0; c < sys_.dim; ++c) {
        Cplx v;
        for (int k = K_; k >= 0; --k) v = v * Cplx(h) + series_[c][k];
        out[c] = v;
    }
    return out;
}

std::vector<Cplx> TaylorStepper::dense_derivative(const Real& h) const {
    std::vector<Cplx> out(sys_.dim);
    for (int c = 0; c < sys_.dim; ++c) {
        Cplx v;
        for (int k = K_; k >= 1; --k) v = v * Cplx(h) + Real(k) * series_[c][k];
        out[c] = v;
    }
    return out;
}

// ---------------------------------------------------------------------------
// Embedded Runge-Kutta of order 8 (12-stage, 8(5,3) error estimate), used as
// an independent cross-check of the Taylor method.
// ---------------------------------------------------------------------------

namespace {

struct Rk8Tableau {
    Real a21, a31, a32, a41, a43, a51, a53, a54, a61, a64, a65, a71, a74, a75, a76;
    Real a81, a84, a85, a86, a87, a91, a94, a95, a96, a97, a98;
    Real a101, a104, a105, a106, a107, a108, a109;
    Real a111, a114, a115, a116, a117, a118, a119, a1110;
    Real a121, a124, a125, a126, a127, a128, a129, a1210, a1211;
    Real b1, b6, b7, b8, b9, b10, b11, b12;
    Real bhh1, bhh2, bhh3;
    Real er1, er6, er7, er8, er9, er10, er11, er12;

    Rk8Tableau()
        : a21("0.05260015195876773187856"),
          a31("0.01972505698453789945446"),
          a32("0.05917517095361369836338"),
          a41("0.02958758547680684918169"),
          a43("0.08876275643042054754507"),
          a51("0.24136513415926668550237"),
          a53("-0.88454947932828608534486"),
          a54("0.92483400326179200311574"),
          a61("0.03703703703703703703704"),
          a64("0.17082860872947387127960"),
          a65("0.12546768756682242501669"),
          a71("0.037109375"),
          a74("0.17025221101954403931498"),
          a75("0.06021653898045596068502"),
          a76("-0.017578125"),
          a81("0.03709200011850479271088"),
          a84("0.17038392571223999381021"),
          a85("0.10726203044637328465181"),
          a86("-0.01531943774862440175279"),
          a87("0.00827378916381402288758"),
          a91("0.62411095871607571711443"),
          a94("-3.36089262944694129406857"),
          a95("-0.86821934684172600681819"),
          a96("27.5920996994467083049416"),
          a97("20.1540675504778934086187"),
          a98("-43.4898841810699588477366"),
          a101("0.47766253643826436589043"),
          a104("-2.48811461997166764192642"),
          a105("-0.59029082683684299637145"),
          a106("21.2300514481811942347289"),
          a107("15.2792336328824235832597"),
          a108("-33.2882109689848629194453"),
          a109("-0.02033120170850862613582"),
          a111("-0.93714243008598732571704"),
          a114("5.18637242884406370830024"),
          a115("1.09143734899672957818500"),
          a116("-8.14978701074692612513997"),
          a117("-18.5200656599969598641566"),
          a118("22.7394870993505042818970"),
          a119("2.49360555267965238987089"),
          a1110("-3.04676447189821950038237"),
          a121("2.27331014751653820792360"),
          a124("-10.5344954667372501984067"),
          a125("-2.00087205822486249909676"),
          a126("-17.9589318631187989172766"),
          a127("27.9488845294199600508500"),
          a128("-2.85899827713502369474066"),
          a129("-8.87285693353062954433549"),
          a1210("12.3605671757943030647266"),
          a1211("0.64339274601576353035597"),
          b1("0.05429373411656876223805"),
          b6("4.45031289275240888144114"),
          b7("1.89151789931450038304282"),
          b8("-5.80120396001058478146721"),
          b9("0.31116436695781989440892"),
          b10("-0.15216094966251607855618"),
          b11("0.20136540080403034837478"),
          b12("0.04471061572777259051769"),
          bhh1("0.24409448818897637795276"),
          bhh2("0.73384668828161185734136"),
          bhh3("0.02205882352941176470588"),
          er1("0.01312004499419488073250"),
          er6("-1.22515644637620444072057"),
          er7("-0.49575894965725019152141"),
          er8("1.66437718245498653696153"),
          er9("-0.35032884874997368168865"),
          er10("0.33417911871301747902973"),
          er11("0.08192320648511571246571"),
          er12("-0.02235530786388629525884") {}
};

// integrates one straight segment; appends requested interior samples
void rk8_segment(const PolyOde& sys, std::vector<Cplx>& x, Cplx& t, const Cplx& dir,
                 const Real& L, const std::vector<Real>& checkpoints, size_t& next_cp,
                 const IntegratorConfig& cfg,
                 std::vector<std::pair<Cplx, std::vector<Cplx>>>& out) {
    static thread_local const Rk8Tableau T;
    const int N = sys.dim;
    auto axpy = [&](const std::vector<std::pair<const std::vector<Cplx>*, const Real*>>& parts,
                    const Real& h) {
        std::vector<Cplx> r = x;
        for (auto& [k, w] : parts)
            for (int i = 0; i < N; ++i) r[i] += Cplx(h) * (*w) * (*k)[i] * dir;
        return r;
    };
    Cplx t0 = t;
    Real sigma = 0;
    Real h = L < Real("0.05") ? L : Real("0.05");
    int rejected = 0;
    while (sigma < L) {
        if (vec_max_norm(x) > cfg.blowup_norm) throw ComputationError("escape/blow-up");
        Real target = L;
        if (next_cp < checkpoints.size() && checkpoints[next_cp] < target)
            target = checkpoints[next_cp];
        bool clamped = false;
        if (h >= target - sigma) {
            h = target - sigma;
            clamped = true;
        }
        Real floor = rmax(Real(1), abs(t)) * rpow(Real(2), -(int)precision_bits() + 8);
        if (h < floor) throw ComputationError("singularity proximity");

        auto k1 = sys.eval(x);
        auto k2 = sys.eval(axpy({{&k1, &T.a21}}, h));
        auto k3 = sys.eval(axpy({{&k1, &T.a31}, {&k2, &T.a32}}, h));
        auto k4 = sys.eval(axpy({{&k1, &T.a41}, {&k3, &T.a43}}, h));
        auto k5 = sys.eval(axpy({{&k1, &T.a51}, {&k3, &T.a53}, {&k4, &T.a54}}, h));
        auto k6 = sys.eval(axpy({{&k1, &T.a61}, {&k4, &T.a64}, {&k5, &T.a65}}, h));
        auto k7 = sys.eval(axpy({{&k1, &T.a71}, {&k4, &T.a74}, {&k5, &T.a75}, {&k6, &T.a76}}, h));
        auto k8 = sys.eval(axpy(
            {{&k1, &T.a81}, {&k4, &T.a84}, {&k5, &T.a85}, {&k6, &T.a86}, {&k7, &T.a87}}, h));
        auto k9 = sys.eval(axpy({{&k1, &T.a91},
                                 {&k4, &T.a94},
                                 {&k5, &T.a95},
                                 {&k6, &T.a96},
                                 {&k7, &T.a97},
                                 {&k8, &T.a98}},
                                h));
        auto k10 = sys.eval(axpy({{&k1, &T.a101},
                                  {&k4, &T.a104},
                                  {&k5, &T.a105},
                                  {&k6, &T.a106},
                                  {&k7, &T.a107},
                                  {&k8, &T.a108},
                                  {&k9, &T.a109}},
                                 h));
        auto k11 = sys.eval(axpy({{&k1, &T.a111},
                                  {&k4, &T.a114},
                                  {&k5, &T.a115},
                                  {&k6, &T.a116},
                                  {&k7, &T.a117},
                                  {&k8, &T.a118},
                                  {&k9, &T.a119},
                                  {&k10, &T.a1110}},
                                 h));
        auto k12 = sys.eval(axpy({{&k1, &T.a121},
                                  {&k4, &T.a124},
                                  {&k5, &T.a125},
                                  {&k6, &T.a126},
                                  {&k7, &T.a127},
                                  {&k8, &T.a128},
                                  {&k9, &T.a129},
                                  {&k10, &T.a1210},
                                  {&k11, &T.a1211}},
                                 h));
        std::vector<Cplx> k13(N), xt(N);
        for (int i = 0; i < N; ++i) {
            k13[i] = T.b1 * k1[i] + T.b6 * k6[i] + T.b7 * k7[i] + T.b8 * k8[i] + T.b9 * k9[i] +
                     T.b10 * k10[i] + T.b11 * k11[i] + T.b12 * k12[i];
            xt[i] = x[i] + Cplx(h) * k13[i] * dir;
        }
        Real err3 = 0, err5 = 0;
        for (int i = 0; i < N; ++i) {
            Real sk = cfg.abs_tol + cfg.rel_tol * rmax(abs(x[i]), abs(xt[i]));
            Cplx e3 = k13[i] - T.bhh1 * k1[i] - T.bhh2 * k9[i] - T.bhh3 * k12[i];
            Cplx e5 = T.er1 * k1[i] + T.er6 * k6[i] + T.er7 * k7[i] + T.er8 * k8[i] +
                      T.er9 * k9[i] + T.er10 * k10[i] + T.er11 * k11[i] + T.er12 * k12[i];
            err3 += norm_sq(e3) / (sk * sk);
            err5 += norm_sq(e5) / (sk * sk);
        }
        using boost::multiprecision::sqrt;
        Real den = sqrt(Real(N) * (err5 + Real("0.01") * err3));
        Real err = den == 0 ? Real(0) : err5 * h / den;
        Real fac = rpow_frac(rmax(err, Real("1e-50")), 8);
        if (err <= 1) {
            x = xt;
            sigma += h;
            t = t0 + dir * sigma;
            if (clamped && next_cp < checkpoints.size() && sigma == checkpoints[next_cp]) {
                out.emplace_back(t, x);
                ++next_cp;
            }
            Real grow = Real("0.9") / fac;
            if (grow > 6) grow = 6;
            if (grow < Real("0.333")) grow = Real("0.333");
            h = h * grow;
            if (cfg.max_step > 0 && h > cfg.max_step) h = cfg.max_step;
            rejected = 0;
        } else {
            Real shrink = Real("0.9") / fac;
            if (shrink > 1) shrink = 1;
            if (shrink < Real("0.333")) shrink = Real("0.333");
            h = h * shrink;
            if (++rejected > 60) throw ComputationError("singularity proximity");
        }
    }
}

}  // namespace

std::vector<std::pair<Cplx, std::vector<Cplx>>> integrate_ode(const PolyOde& sys,
                                                              const std::vector<Cplx>& start,
                                                              const ComplexPath& path,
                                                              const IntegratorConfig& cfg) {
    path.validate();
    cfg.validate();
    std::vector<std::pair<Cplx, std::vector<Cplx>>> out;
    std::vector<Cplx> x = start;
    Cplx t = path.vertices[0];
    out.emplace_back(t, x);

    TaylorStepper stepper(sys, cfg);
    for (size_t seg = 1; seg < path.vertices.size(); ++seg) {
        Cplx a = path.vertices[seg - 1], b = path.vertices[seg];
        Real L = abs(b - a);
        Cplx dir = (b - a) / L;
        // interior checkpoints plus segment end
        std::vector<Real> cps;
        for (int j = 1; j <= cfg.samples_per_segment; ++j)
            cps.push_back(L * Real(j) / Real(cfg.samples_per_segment + 1));
        cps.push_back(L);
        if (cfg.method == OdeMethod::rk8) {
            size_t next_cp = 0;
            rk8_segment(sys, x, t, dir, L, cps, next_cp, cfg, out);
            t = b;
            out.back().first = t;  // avoid accumulated endpoint roundoff
        } else {
            stepper.set_state(t, x);
            Real sigma = 0;
            size_t next_cp = 0;
            while (next_cp < cps.size()) {
                Real target = cps[next_cp];
                Real h = stepper.step(dir, target - sigma);
                sigma += h;
                if (sigma == target || rabs(sigma - target) < rpow(Real(2), -(int)precision_bits() + 4)) {
                    sigma = target;
                    out.emplace_back(a + dir * sigma, stepper.state());
                    ++next_cp;
                }
            }
            x = stepper.state();
            t = b;
            out.back().first = t;
        }
    }
    return out;
}

Trajectory integrate_flow(const FieldSystem& fs, const PhasePoint& start,
                          const ComplexPath& path, const IntegratorConfig& cfg) {
    PolyOde sys = field_ode(fs);
    std::vector<Cplx> x0(start.c.begin(), start.c.end());
    auto raw = integrate_ode(sys, x0, path, cfg);
    Trajectory traj;
    traj.path = path;
    for (auto& [t, x] : raw) {
        PhasePoint p(x[0], x[1], x[2], x[3]);
        traj.samples.emplace_back(t, p);
        traj.energies.push_back(fs.H.eval(p));
    }
    traj.energy_reference = traj.energies.front();
    return traj;
}

Trajectory integrate_flow(const PolyHamiltonian& H, const Real& mu, const Real& nu,
                          const PhasePoint& start, const ComplexPath& path,
                          const IntegratorConfig& cfg) {
    return integrate_flow(make_field_system(H, mu, nu), start, path, cfg);
}

std::vector<std::pair<Cplx, PhasePoint>> integrate_variational(const FieldSystem& fs,
                                                               const Trajectory& base,
                                                               const PhasePoint& xi_start,
                                                               const IntegratorConfig& cfg) {
    if (base.samples.empty()) throw ComputationError("base trajectory is empty");
    PolyOde sys = append_variational(field_ode(fs), fs);
    std::vector<Cplx> x0;
    for (const auto& c : base.samples.front().second.c) x0.push_back(c);
    for (const auto& c : xi_start.c) x0.push_back(c);
    auto raw = integrate_ode(sys, x0, base.path, cfg);
    std::vector<std::pair<Cplx, PhasePoint>> out;
    for (auto& [t, x] : raw) out.emplace_back(t, PhasePoint(x[4], x[5], x[6], x[7]));
    return out;
}

Real energy_drift(const Trajectory& traj) {
    if (traj.samples.empty()) throw ComputationError("empty trajectory");
    Real m = 0;
    for (const auto& e : traj.energies) m = rmax(m, abs(e - traj.energy_reference));
    return m;
}

}  // namespace sepsplit
