#include "sepsplit/real.hpp"

#include <boost/math/constants/constants.hpp>
#include <iomanip>
#include <sstream>

namespace sepsplit {

namespace {
unsigned g_bits = 128;
}

void set_precision_bits(unsigned bits) {
    g_bits = bits;
    // boost stores default precision in decimal digits
    unsigned digits = static_cast<unsigned>(bits * 0.30103) + 2;
    Real::default_precision(digits);
}

unsigned precision_bits() { return g_bits; }

Real real_pi() { return boost::math::constants::pi<Real>(); }

Real to_real(const Rational& q) {
    return Real(boost::multiprecision::numerator(q)) / Real(boost::multiprecision::denominator(q));
}

Cplx ipow(const Cplx& a, int n) {
    Cplx r(1);
    Cplx base = a;
    for (int k = n; k > 0; k >>= 1) {
        if (k & 1) r *= base;
        if (k > 1) base *= base;
    }
    return r;
}

Real rpow(const Real& a, int n) {
    bool inv = n < 0;
    if (inv) n = -n;
    Real r(1), base = a;
    for (int k = n; k > 0; k >>= 1) {
        if (k & 1) r *= base;
        if (k > 1) base *= base;
    }
    return inv ? Real(1) / r : r;
}

std::string to_string(const Real& x, unsigned digits) {
    if (digits == 0) digits = Real::default_precision();
    std::ostringstream os;
    os << std::setprecision(static_cast<int>(digits)) << std::scientific << x;
    return os.str();
}

std::string to_string(const Cplx& x, unsigned digits) {
    return to_string(x.re, digits) + (x.im < 0 ? " - " : " + ") +
           to_string(boost::multiprecision::abs(x.im), digits) + "i";
}

}  // namespace sepsplit
