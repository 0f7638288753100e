// Command-line front end: model parsing, parameter sweeps, serialization.
//
//   sepsplit <subcommand> [flags]
//   subcommands: formal equilibrium trace split stokes melnikov verify
//   common flags: --model FILE --mu LIST --nu X --precision BITS --order N
//                 --tol X --jobs K --out FILE --format csv|json
//
// Exit codes: 0 success, 1 computation failure (error JSON on stderr),
// 2 usage error.

#include "sepsplit/manifolds.hpp"
#include "sepsplit/melnikov.hpp"
#include "sepsplit/stokes.hpp"

#include <algorithm>
#include <atomic>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <thread>
#include <vector>

namespace sepsplit {
namespace {

using boost::multiprecision::log;

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

const char* kUsage =
    "usage: sepsplit <subcommand> [flags]\n"
    "subcommands:\n"
    "  formal       exact-rational separatrix coefficient tables (JSON)\n"
    "  equilibrium  saddle-center location and exponents (JSON)\n"
    "  trace        complex-time flow samples (CSV)\n"
    "  split        splitting-energy sweep over mu (CSV/JSON)\n"
    "  stokes       inner Stokes constant extraction (JSON)\n"
    "  melnikov     residue vs quadrature Melnikov sweep over eps (CSV)\n"
    "  verify       built-in invariant suite on the bundled cubic model\n"
    "flags:\n"
    "  --model FILE     Hamiltonian file (default: built-in cubic model)\n"
    "  --mu LIST        comma-separated mu values\n"
    "  --nu X           coupling strength (default 0)\n"
    "  --precision BITS working precision, >= 64 (default 256)\n"
    "  --order N        formal series order (default 8)\n"
    "  --tol X          integrator/quadrature tolerance (default 1e-30)\n"
    "  --jobs K         sweep worker threads (default 1)\n"
    "  --out FILE       output path (default stdout)\n"
    "  --format F       csv|json for sweep output (default csv)\n"
    "  --tau-match X    [stokes] matching radius (default 40)\n"
    "  --T LIST         [stokes] descent sampling depths\n"
    "  --nmax K         [stokes] highest hierarchy order b_n (default 0)\n"
    "  --m K            [melnikov] perturbation power x1^m x2 (default 1)\n"
    "  --c0 X           [melnikov] perturbation amplitude (default 1)\n"
    "  --omega X        [melnikov] elliptic frequency (default 1)\n"
    "  --eps LIST       [melnikov] eps sweep values (default 0.3,0.4,0.5)\n"
    "  --start LIST     [trace] initial point x1,y1,x2,y2 (re:im entries)\n"
    "  --path LIST      [trace] path vertices re:im, semicolon-separated\n"
    "  --samples K      [trace] interior checkpoints per segment (default 8)\n";

struct Args {
    std::string subcommand;
    std::map<std::string, std::string> flags;

    bool has(const std::string& k) const { return flags.count(k) > 0; }
    std::string get(const std::string& k, const std::string& dflt) const {
        auto it = flags.find(k);
        return it == flags.end() ? dflt : it->second;
    }
};

Args parse_args(int argc, char** argv) {
    static const std::vector<std::string> known = {
        "model", "mu",  "nu",  "precision", "order",     "tol",  "jobs",
        "out",   "format", "tau-match", "T", "nmax", "m", "c0",  "omega",
        "eps",   "start", "path", "samples"};
    if (argc < 2) throw UsageError("missing subcommand");
    Args a;
    a.subcommand = argv[1];
    for (int i = 2; i < argc; ++i) {
        std::string f = argv[i];
        if (f.rfind("--", 0) != 0) throw UsageError("expected flag, got '" + f + "'");
        f = f.substr(2);
        if (std::find(known.begin(), known.end(), f) == known.end())
            throw UsageError("unknown flag --" + f);
        if (i + 1 >= argc) throw UsageError("flag --" + f + " needs a value");
        a.flags[f] = argv[++i];
    }
    return a;
}

std::vector<std::string> split_list(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : s) {
        if (c == sep) {
            if (!cur.empty()) out.push_back(cur);
            cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    if (!cur.empty()) out.push_back(cur);
    return out;
}

Rational parse_rational(const std::string& s) {
    if (s.find('/') != std::string::npos) return Rational(s);
    // decimal -> exact rational
    std::string t = s;
    bool neg = false;
    if (!t.empty() && (t[0] == '+' || t[0] == '-')) {
        neg = t[0] == '-';
        t = t.substr(1);
    }
    auto dot = t.find('.');
    std::string digits = t;
    int frac = 0;
    if (dot != std::string::npos) {
        digits = t.substr(0, dot) + t.substr(dot + 1);
        frac = (int)(t.size() - dot - 1);
    }
    if (digits.empty() || digits.find_first_not_of("0123456789") != std::string::npos)
        throw UsageError("malformed number '" + s + "'");
    Rational r{BigInt(digits)};
    for (int i = 0; i < frac; ++i) r /= 10;
    return neg ? Rational(-r) : r;
}

Real parse_real(const std::string& s) {
    try {
        return Real(s);
    } catch (const std::exception&) {
        throw UsageError("malformed number '" + s + "'");
    }
}

Cplx parse_cplx(const std::string& s) {
    auto parts = split_list(s, ':');
    if (parts.size() == 1) return Cplx(parse_real(parts[0]));
    if (parts.size() == 2) return Cplx(parse_real(parts[0]), parse_real(parts[1]));
    throw UsageError("malformed complex value '" + s + "' (want re or re:im)");
}

std::vector<Real> parse_real_list(const std::string& s) {
    std::vector<Real> out;
    for (const auto& v : split_list(s, ',')) out.push_back(parse_real(v));
    if (out.empty()) throw UsageError("empty list");
    return out;
}

// deterministic decimal serialization (JSON numbers beyond float64 go out as
// strings, with the precision recorded alongside)
std::string num(const Real& x) {
    std::ostringstream os;
    os << std::setprecision((int)Real::default_precision()) << x;
    return os.str();
}
std::string jnum(const Real& x) { return "\"" + num(x) + "\""; }
std::string jpair(const Cplx& z) { return "[" + jnum(z.re) + ", " + jnum(z.im) + "]"; }
std::string jrat(const Rational& q) { return "\"" + q.str() + "\""; }

struct Output {
    std::ofstream file;
    std::ostream* os = &std::cout;

    explicit Output(const std::string& path) {
        if (!path.empty()) {
            file.open(path);
            if (!file) throw UsageError("cannot open output file '" + path + "'");
            os = &file;
        }
    }
    std::ostream& stream() { return *os; }
};

PolyHamiltonian load_or_default(const Args& a) {
    if (a.has("model")) return load_model(a.get("model", ""));
    return cubic_model(1, 1, 0, 1);
}

unsigned setup_precision(const Args& a) {
    long bits = std::stol(a.get("precision", "256"));
    if (bits < 64) throw UsageError("--precision must be >= 64 bits");
    set_precision_bits((unsigned)bits);
    return (unsigned)bits;
}

IntegratorConfig integrator_config(const Args& a) {
    IntegratorConfig cfg;
    if (a.has("tol")) {
        cfg.abs_tol = parse_real(a.get("tol", ""));
        cfg.rel_tol = cfg.abs_tol;
        if (!(cfg.abs_tol > 0)) throw UsageError("--tol must be positive");
    }
    return cfg;
}

// ---------------------------------------------------------------------------

int cmd_formal(const Args& a) {
    setup_precision(a);
    int N = std::stoi(a.get("order", "8"));
    if (N < 1 || N > 64) throw UsageError("--order out of range [1, 64]");
    PolyHamiltonian H = load_or_default(a);
    NormalFormTables tab = extract_tables(H);
    FormalSeparatrix sep = formal_separatrix(tab, N);
    FormalU fu = formal_u(tab, sep, N);
    Output out(a.get("out", ""));
    auto& os = out.stream();
    os << "{\n  \"order\": " << N << ",\n  \"p\": [";
    for (int k = 1; k <= N; ++k) {
        os << (k > 1 ? ", " : "") << "[";
        for (size_t l = 0; l < sep.p[k].size(); ++l)
            os << (l ? ", " : "") << jrat(sep.p[k][l]);
        os << "]";
    }
    os << "],\n  \"q\": [";
    for (int k = 1; k <= N; ++k) {
        os << (k > 1 ? ", " : "") << "[";
        for (size_t l = 0; l < sep.q[k].size(); ++l)
            os << (l ? ", " : "") << jrat(sep.q[k][l]);
        os << "]";
    }
    os << "],\n  \"mu\": [";
    for (size_t k = 0; k < sep.mu.size(); ++k) os << (k ? ", " : "") << jrat(sep.mu[k]);
    os << "],\n  \"C\": [";
    for (size_t k = 0; k < sep.C.size(); ++k) os << (k ? ", " : "") << jrat(sep.C[k]);
    os << "],\n  \"u\": [";
    for (size_t k = 0; k < fu.u.size(); ++k) {
        os << (k ? ", " : "") << "[";
        for (size_t l = 0; l < fu.u[k].size(); ++l) os << (l ? ", " : "") << jrat(fu.u[k][l]);
        os << "]";
    }
    os << "],\n  \"omega\": [";
    for (size_t k = 0; k < fu.omega.size(); ++k) os << (k ? ", " : "") << jrat(fu.omega[k]);
    os << "]\n}\n";
    return 0;
}

int cmd_equilibrium(const Args& a) {
    unsigned bits = setup_precision(a);
    PolyHamiltonian H = load_or_default(a);
    Real mu = parse_real(a.get("mu", "0.01"));
    Real nu = parse_real(a.get("nu", "0"));
    if (!(mu > 0)) throw UsageError("--mu must be positive");
    EquilibriumData eq = find_equilibrium(H, mu, nu);
    Output out(a.get("out", ""));
    auto& os = out.stream();
    os << "{\n  \"precision_bits\": " << bits << ",\n  \"mu\": " << jnum(mu)
       << ",\n  \"nu\": " << jnum(nu) << ",\n  \"location\": [";
    for (int i = 0; i < 4; ++i) os << (i ? ", " : "") << jnum(eq.location[i].re);
    os << "],\n  \"lambda\": " << jnum(eq.lambda) << ",\n  \"omega\": " << jnum(eq.omega)
       << ",\n  \"grad_norm\": " << jnum(eq.grad_norm) << "\n}\n";
    return 0;
}

int cmd_trace(const Args& a) {
    setup_precision(a);
    PolyHamiltonian H = load_or_default(a);
    Real mu = parse_real(a.get("mu", "0.01"));
    Real nu = parse_real(a.get("nu", "0"));
    if (!a.has("start") || !a.has("path"))
        throw UsageError("trace needs --start and --path");
    auto sc = split_list(a.get("start", ""), ',');
    if (sc.size() != 4) throw UsageError("--start needs 4 components");
    PhasePoint start(parse_cplx(sc[0]), parse_cplx(sc[1]), parse_cplx(sc[2]), parse_cplx(sc[3]));
    ComplexPath path;
    for (const auto& v : split_list(a.get("path", ""), ';')) path.vertices.push_back(parse_cplx(v));
    IntegratorConfig cfg = integrator_config(a);
    cfg.samples_per_segment = std::stoi(a.get("samples", "8"));
    Trajectory traj = integrate_flow(H, mu, nu, start, path, cfg);
    Output out(a.get("out", ""));
    auto& os = out.stream();
    os << "re_t,im_t,re_x1,im_x1,re_y1,im_y1,re_x2,im_x2,re_y2,im_y2,energy_drift\n";
    for (size_t j = 0; j < traj.samples.size(); ++j) {
        const auto& [t, x] = traj.samples[j];
        os << num(t.re) << "," << num(t.im);
        for (int i = 0; i < 4; ++i) os << "," << num(x[i].re) << "," << num(x[i].im);
        os << "," << num(abs(traj.energies[j] - traj.energy_reference)) << "\n";
    }
    return 0;
}

// run fn over n sweep points with a worker pool; results land by index
void sweep(int n, int jobs, unsigned bits, const std::function<void(int)>& fn) {
    jobs = std::max(1, std::min(jobs, n));
    if (jobs == 1) {
        for (int i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<int> next(0);
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errs(jobs);
    for (int w = 0; w < jobs; ++w)
        pool.emplace_back([&, w] {
            set_precision_bits(bits);  // thread-local default
            try {
                for (int i = next++; i < n; i = next++) fn(i);
            } catch (...) {
                errs[w] = std::current_exception();
            }
        });
    for (auto& t : pool) t.join();
    for (auto& e : errs)
        if (e) std::rethrow_exception(e);
}

int cmd_split(const Args& a) {
    unsigned bits = setup_precision(a);
    PolyHamiltonian H = load_or_default(a);
    if (!a.has("mu")) throw UsageError("split needs --mu LIST");
    std::vector<Real> mus = parse_real_list(a.get("mu", ""));
    for (const auto& m : mus)
        if (!(m > 0)) throw UsageError("--mu values must be positive");
    std::sort(mus.begin(), mus.end());
    Real nu = parse_real(a.get("nu", "0"));
    int N = std::stoi(a.get("order", "8"));
    IntegratorConfig cfg = integrator_config(a);
    int jobs = std::stoi(a.get("jobs", "1"));

    std::vector<SplitResult> rows(mus.size());
    sweep((int)mus.size(), jobs, bits,
          [&](int i) { rows[i] = run_split(H, mus[i], nu, cfg, Real(40), N); });

    Output out(a.get("out", ""));
    auto& os = out.stream();
    bool json = a.get("format", "csv") == "json";
    if (json) os << "{\n  \"precision_bits\": " << bits << ",\n  \"rows\": [\n";
    else
        os << "mu,lambda,omega,abs_theta1,E_e1,theta1_window_variation,drift,upper_bound,"
              "log_E_e1_plus_2pi_omega_over_lambda\n";
    for (size_t i = 0; i < rows.size(); ++i) {
        const SplitResult& r = rows[i];
        Real shifted = 0;
        bool have_shift = r.m.E_e1 > 0;
        if (have_shift)
            shifted = log(r.m.E_e1) + 2 * real_pi() * r.omega / r.lambda;
        if (json) {
            os << "    {\"mu\": " << jnum(r.mu) << ", \"lambda\": " << jnum(r.lambda)
               << ", \"omega\": " << jnum(r.omega) << ", \"abs_theta1\": " << jnum(abs(r.m.theta1))
               << ", \"E_e1\": " << jnum(r.m.E_e1)
               << ", \"theta1_window_variation\": " << jnum(r.m.theta1_window_variation)
               << ", \"drift\": " << jnum(r.m.drift)
               << ", \"upper_bound\": " << (r.m.upper_bound ? "true" : "false")
               << ", \"log_E_e1_plus_2pi_omega_over_lambda\": "
               << (have_shift ? jnum(shifted) : std::string("null")) << "}"
               << (i + 1 < rows.size() ? "," : "") << "\n";
        } else {
            os << num(r.mu) << "," << num(r.lambda) << "," << num(r.omega) << ","
               << num(abs(r.m.theta1)) << "," << num(r.m.E_e1) << ","
               << num(r.m.theta1_window_variation) << "," << num(r.m.drift) << ","
               << (r.m.upper_bound ? 1 : 0) << "," << (have_shift ? num(shifted) : "") << "\n";
        }
    }
    if (json) os << "  ]\n}\n";
    return 0;
}

int cmd_stokes(const Args& a) {
    unsigned bits = setup_precision(a);
    PolyHamiltonian H = load_or_default(a);
    Real nu = parse_real(a.get("nu", "0"));
    StokesConfig cfg;
    cfg.ode = integrator_config(a);
    cfg.tau_match = parse_real(a.get("tau-match", "40"));
    if (!(cfg.tau_match > 0)) throw UsageError("--tau-match must be positive");
    if (a.has("T")) cfg.T_list = parse_real_list(a.get("T", ""));
    cfg.n_max = std::stoi(a.get("nmax", "0"));
    if (cfg.n_max < 0 || cfg.n_max > 2) throw UsageError("--nmax out of range [0, 2]");
    cfg.N = std::stoi(a.get("order", "10"));

    bool family = false;
    for (const auto& [key, c] : H.terms)
        if (key[4] != 0) family = true;
    StokesResult r;
    if (family) {
        r = run_stokes(H, nu, cfg);
    } else {
        cfg.n_max = 0;
        r = run_stokes(specialize(H, 0, nu), cfg);
    }

    Output out(a.get("out", ""));
    auto& os = out.stream();
    os << "{\n  \"precision_bits\": " << bits << ",\n  \"omega0\": " << jnum(r.omega0)
       << ",\n  \"b0\": " << jpair(r.b0) << ",\n  \"fit\": {\"rate\": " << jnum(r.fit.rate)
       << ", \"amplitude\": " << jnum(r.fit.amplitude)
       << ", \"residual\": " << jnum(r.fit.residual) << "},\n  \"samples\": [";
    for (size_t j = 0; j < r.samples.size(); ++j)
        os << (j ? ", " : "") << "[" << jnum(r.samples[j].first) << ", "
           << jnum(r.samples[j].second.re) << ", " << jnum(r.samples[j].second.im) << "]";
    os << "],\n  \"bn\": [";
    for (size_t n = 0; n < r.bn.size(); ++n) os << (n ? ", " : "") << jpair(r.bn[n]);
    os << "],\n  \"an\": [";
    for (size_t n = 0; n < r.an.size(); ++n) os << (n ? ", " : "") << jnum(r.an[n]);
    os << "],\n  \"a0\": " << jnum(r.an.empty() ? Real(0) : r.an[0])
       << ",\n  \"reliable\": " << (r.reliable ? "true" : "false")
       << ",\n  \"upper_bound\": " << (r.upper_bound ? "true" : "false")
       << ",\n  \"noise\": " << jnum(r.noise)
       << ",\n  \"matching_residual\": " << jnum(r.matching_residual)
       << ",\n  \"drift\": " << jnum(r.drift) << "\n}\n";
    return 0;
}

int cmd_melnikov(const Args& a) {
    unsigned bits = setup_precision(a);
    int m = std::stoi(a.get("m", "1"));
    if (m < 1 || m > 6) throw UsageError("--m out of range [1, 6]");
    Rational c0 = parse_rational(a.get("c0", "1"));
    Rational omega = parse_rational(a.get("omega", "1"));
    if (!(omega > 0)) throw UsageError("--omega must be positive");
    std::vector<Real> eps = a.has("eps") ? parse_real_list(a.get("eps", ""))
                                         : std::vector<Real>{Real("0.3"), Real("0.4"), Real("0.5")};
    std::sort(eps.begin(), eps.end());
    Real tol = parse_real(a.get("tol", "1e-20"));
    int jobs = std::stoi(a.get("jobs", "1"));

    PolyHamiltonian H = cubic_model(1, 1, 0, omega);
    PolyHamiltonian R;
    MonoKey key{m, 0, 1, 0, 0, 0};
    R.add_term(key, c0);

    struct Row {
        Cplx q, res;
        Real err;
    };
    std::vector<Row> rows(eps.size());
    sweep((int)eps.size(), jobs, bits, [&](int i) {
        Real mu = eps[i] * eps[i] * eps[i] * eps[i] / 4;
        MelnikovResult q = melnikov_quadrature(H, R, mu, tol);
        rows[i] = {q.M, melnikov_residue(m, to_real(c0), to_real(omega), eps[i]), q.error};
    });

    Output out(a.get("out", ""));
    auto& os = out.stream();
    os << "eps,M_quad_re,M_quad_im,M_res_re,M_res_im,rel_diff,quad_error\n";
    for (size_t i = 0; i < eps.size(); ++i) {
        Real rel = abs(rows[i].q - rows[i].res) / abs(rows[i].res);
        os << num(eps[i]) << "," << num(rows[i].q.re) << "," << num(rows[i].q.im) << ","
           << num(rows[i].res.re) << "," << num(rows[i].res.im) << "," << num(rel) << ","
           << num(rows[i].err) << "\n";
    }
    return 0;
}

int cmd_verify(const Args& a) {
    unsigned bits = setup_precision(a);
    (void)bits;
    PolyHamiltonian H = load_or_default(a);
    Output out(a.get("out", ""));
    auto& os = out.stream();
    int failures = 0;
    auto report = [&](const char* name, bool ok, const std::string& detail) {
        os << (ok ? "PASS" : "FAIL") << "  " << name << "  (" << detail << ")\n";
        if (!ok) ++failures;
    };

    // 1. formal series exactness on the cubic model
    {
        NormalFormTables tab = extract_tables(cubic_model(1, 1, 0, 1));
        FormalSeparatrix sep = formal_separatrix(tab, 4);
        bool ok = sep.p[1].size() == 2 && sep.p[1][0] == Rational(-1, 2) &&
                  sep.p[1][1] == Rational(3, 2);
        report("formal leading coefficients p1 = -1/2 + (3/2) z", ok,
               "p10=" + sep.p[1][0].str() + " p11=" + sep.p[1][1].str());
    }
    // 2. integrator energy conservation along the closed-form homoclinic
    {
        Real mu("0.01");
        FieldSystem fs = make_field_system(H, mu, 0);
        Real s = boost::multiprecision::sqrt(mu);
        PhasePoint apex(Cplx(2 * s), Cplx(0), Cplx(0), Cplx(0));
        IntegratorConfig cfg;
        Trajectory tr =
            integrate_flow(fs, apex, ComplexPath{Cplx(0), Cplx(20), Cplx(-20), Cplx(0)}, cfg);
        Real drift = energy_drift(tr);
        report("energy drift along the homoclinic below 1e-25", drift < Real("1e-25"),
               "drift=" + to_string(drift, 3));
    }
    // 3. melnikov residue vs quadrature at m = 1, eps = 0.4
    {
        Real eps("0.4");
        PolyHamiltonian R;
        R.add_term({1, 0, 1, 0, 0, 0}, 1);
        MelnikovResult q =
            melnikov_quadrature(cubic_model(1, 1, 0, 1), R, eps * eps * eps * eps / 4,
                                Real("1e-20"));
        Cplx res = melnikov_residue(1, 1, 1, eps);
        Real rel = abs(q.M - res) / abs(res);
        report("melnikov quadrature matches residue to 1e-8", rel < Real("1e-8"),
               "rel=" + to_string(rel, 3));
    }
    // 4. stokes closed form and null certificate
    {
        PolyHamiltonian Hi;
        Hi.add_term({0, 2, 0, 0, 0, 0}, Rational(1, 2));
        Hi.add_term({0, 0, 2, 0, 0, 0}, Rational(1, 2));
        Hi.add_term({0, 0, 0, 2, 0, 0}, Rational(1, 2));
        Hi.add_term({3, 0, 0, 0, 0, 0}, Rational(-1));
        StokesConfig cfg;
        StokesResult r0 = run_stokes(specialize(Hi, 0, 0), cfg);
        report("stokes null certificate at nu = 0", abs(r0.b0) == 0 && r0.upper_bound,
               "b0=" + to_string(abs(r0.b0), 3));
        Hi.add_term({1, 0, 1, 0, 0, 1}, 1);
        Real nu("0.01");
        StokesResult r = run_stokes(specialize(Hi, 0, nu), cfg);
        Cplx expect(4 * real_pi() * nu);
        Real rel = abs(r.b0 - expect) / abs(expect);
        report("stokes b0 matches 4 pi nu to 1e-5", rel < Real("1e-5") && r.reliable,
               "rel=" + to_string(rel, 3));
    }
    if (failures > 0) throw ComputationError(std::to_string(failures) + " verify check(s) failed");
    return 0;
}

std::string json_escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        if (c == '"' || c == '\\') out.push_back('\\');
        if (c == '\n') {
            out += "\\n";
            continue;
        }
        out.push_back(c);
    }
    return out;
}

int run(int argc, char** argv) {
    Args a;
    try {
        a = parse_args(argc, argv);
        if (a.subcommand == "formal") return cmd_formal(a);
        if (a.subcommand == "equilibrium") return cmd_equilibrium(a);
        if (a.subcommand == "trace") return cmd_trace(a);
        if (a.subcommand == "split") return cmd_split(a);
        if (a.subcommand == "stokes") return cmd_stokes(a);
        if (a.subcommand == "melnikov") return cmd_melnikov(a);
        if (a.subcommand == "verify") return cmd_verify(a);
        throw UsageError("unknown subcommand '" + a.subcommand + "'");
    } catch (const UsageError& e) {
        std::cerr << "{\"error\": \"" << json_escape(e.what()) << "\", \"kind\": \"usage\"}\n";
        std::cerr << kUsage;
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "{\"error\": \"" << json_escape(e.what())
                  << "\", \"kind\": \"computation\"}\n";
        return 1;
    }
}

}  // namespace
}  // namespace sepsplit

int main(int argc, char** argv) { return sepsplit::run(argc, argv); }
