#pragma once

// Exact scalar types shared across the workbench:
//   Int, Rat  -- arbitrary-precision integers / rationals
//   QMag      -- an exact absolute value, i.e. 0 or q^e with integer e.
//
// Absolute values of polynomials and Laurent numbers are always powers of q
// (or 0 for the zero element, the ord = -infinity convention), so QMag keeps
// them as bare exponents and never touches floating point.

#include <boost/multiprecision/cpp_int.hpp>
#include <compare>
#include <stdexcept>

namespace ffcm {

using Int = boost::multiprecision::cpp_int;
using Rat = boost::multiprecision::cpp_rational;

struct QMag {
    bool zero = true;
    long long e = 0;  // meaningful only when !zero

    static QMag null() { return QMag{true, 0}; }
    static QMag qpow(long long e) { return QMag{false, e}; }
    static QMag one() { return qpow(0); }

    friend bool operator==(const QMag& a, const QMag& b) {
        return a.zero == b.zero && (a.zero || a.e == b.e);
    }
    friend bool operator<(const QMag& a, const QMag& b) {
        if (a.zero) return !b.zero;
        if (b.zero) return false;
        return a.e < b.e;
    }
    friend bool operator<=(const QMag& a, const QMag& b) { return a < b || a == b; }
    friend bool operator>(const QMag& a, const QMag& b) { return b < a; }
    friend bool operator>=(const QMag& a, const QMag& b) { return b <= a; }

    friend QMag operator*(const QMag& a, const QMag& b) {
        if (a.zero || b.zero) return null();
        return qpow(a.e + b.e);
    }

    QMag pow(long long n) const {
        if (zero) {
            if (n <= 0) throw std::invalid_argument("0^n undefined for n <= 0");
            return null();
        }
        return qpow(e * n);
    }

    // exact rational rendering q^e (needs the actual q)
    Rat to_rat(int q) const {
        if (zero) return Rat(0);
        Int num = 1, den = 1;
        for (long long i = 0; i < (e >= 0 ? e : -e); ++i) (e >= 0 ? num : den) *= q;
        return Rat(num, den);
    }
};

// max |x_i| over a tuple, the coordinatewise extension used throughout
template <typename It>
QMag qmag_max(It begin, It end) {
    QMag m = QMag::null();
    for (It it = begin; it != end; ++it)
        if (m < *it) m = *it;
    return m;
}

} // namespace ffcm
