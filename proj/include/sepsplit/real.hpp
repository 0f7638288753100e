#ifndef SEPSPLIT_REAL_HPP
#define SEPSPLIT_REAL_HPP

#include <boost/multiprecision/mpfr.hpp>
#include <boost/multiprecision/gmp.hpp>
#include <cmath>
#include <string>

namespace sepsplit {

// All floating arithmetic runs on MPFR through boost::multiprecision with a
// process-wide default precision.  Set it once at startup (and again in every
// worker thread: the default is thread-local).
using Real = boost::multiprecision::mpfr_float;
using Rational = boost::multiprecision::mpq_rational;
using BigInt = boost::multiprecision::mpz_int;

void set_precision_bits(unsigned bits);
unsigned precision_bits();

Real real_pi();
Real to_real(const Rational& q);

// Minimal complex type over Real.  std::complex does not admit user-defined
// scalar types, so the handful of operations we need live here.
struct Cplx {
    Real re, im;

    Cplx() : re(0), im(0) {}
    Cplx(const Real& r) : re(r), im(0) {}
    Cplx(double r) : re(r), im(0) {}
    Cplx(int r) : re(r), im(0) {}
    Cplx(const Real& r, const Real& i) : re(r), im(i) {}

    Cplx& operator+=(const Cplx& o) { re += o.re; im += o.im; return *this; }
    Cplx& operator-=(const Cplx& o) { re -= o.re; im -= o.im; return *this; }
    Cplx& operator*=(const Cplx& o) {
        Real r = re * o.re - im * o.im;
        im = re * o.im + im * o.re;
        re = r;
        return *this;
    }
};

inline Cplx operator+(const Cplx& a, const Cplx& b) { return {a.re + b.re, a.im + b.im}; }
inline Cplx operator-(const Cplx& a, const Cplx& b) { return {a.re - b.re, a.im - b.im}; }
inline Cplx operator-(const Cplx& a) { return {-a.re, -a.im}; }
inline Cplx operator*(const Cplx& a, const Cplx& b) {
    return {a.re * b.re - a.im * b.im, a.re * b.im + a.im * b.re};
}
inline Cplx operator*(const Real& a, const Cplx& b) { return {a * b.re, a * b.im}; }
inline Cplx operator*(const Cplx& a, const Real& b) { return {a.re * b, a.im * b}; }
inline Cplx operator/(const Cplx& a, const Real& b) { return {a.re / b, a.im / b}; }
inline Cplx operator/(const Cplx& a, const Cplx& b) {
    Real d = b.re * b.re + b.im * b.im;
    return {(a.re * b.re + a.im * b.im) / d, (a.im * b.re - a.re * b.im) / d};
}
inline bool operator==(const Cplx& a, const Cplx& b) { return a.re == b.re && a.im == b.im; }

inline Cplx conj(const Cplx& a) { return {a.re, -a.im}; }
inline Real norm_sq(const Cplx& a) { return a.re * a.re + a.im * a.im; }
inline Real abs(const Cplx& a) {
    using boost::multiprecision::sqrt;
    return sqrt(norm_sq(a));
}
inline Cplx iu() { return {Real(0), Real(1)}; }  // imaginary unit
inline Cplx exp(const Cplx& a) {
    using boost::multiprecision::exp;
    using boost::multiprecision::cos;
    using boost::multiprecision::sin;
    Real m = exp(a.re);
    return {m * cos(a.im), m * sin(a.im)};
}
inline Cplx cosh(const Cplx& a) {
    using boost::multiprecision::cosh;
    using boost::multiprecision::sinh;
    using boost::multiprecision::cos;
    using boost::multiprecision::sin;
    return {cosh(a.re) * cos(a.im), sinh(a.re) * sin(a.im)};
}
inline Cplx sinh(const Cplx& a) {
    using boost::multiprecision::cosh;
    using boost::multiprecision::sinh;
    using boost::multiprecision::cos;
    using boost::multiprecision::sin;
    return {sinh(a.re) * cos(a.im), cosh(a.re) * sin(a.im)};
}
inline Cplx sqrt(const Cplx& a) {
    using boost::multiprecision::sqrt;
    Real r = abs(a);
    if (r == 0) return Cplx();
    Real u = sqrt((r + a.re) / 2);
    if (u == 0) return {Real(0), sqrt(r)};
    return {u, a.im / (2 * u)};
}

inline Real rabs(const Real& x) { return x < 0 ? Real(-x) : x; }
inline Real rmax(const Real& a, const Real& b) { return a < b ? b : a; }

Cplx ipow(const Cplx& a, int n);  // n >= 0
Real rpow(const Real& a, int n);

std::string to_string(const Real& x, unsigned digits = 0);
std::string to_string(const Cplx& x, unsigned digits = 0);

}  // namespace sepsplit

#endif
