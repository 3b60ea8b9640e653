#pragma once

// K_infinity = F_q((1/t)): Laurent numbers known on an explicit coefficient
// window.  A value stores the coefficients at exponents lo..hi together with
// an `exact` flag meaning "everything below lo is zero".  Every operator
// tracks what is knowable; any query that would need a coefficient below the
// window throws precision_error instead of assuming zero.

#include "ffcm/fq.hpp"
#include "ffcm/poly.hpp"
#include "ffcm/rat.hpp"

#include <algorithm>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace ffcm {

struct precision_error : std::runtime_error {
    explicit precision_error(const std::string& what) : std::runtime_error(what) {}
};

struct Laur {
    int lo = 0;          // knowledge floor: coefficients at exponents >= lo are known
    std::vector<fel> c;  // c[i] = coefficient at exponent lo + i; top entry nonzero
    bool exact = false;  // all coefficients below lo are zero

    // highest exponent that can carry a nonzero coefficient
    int hi() const { return lo + (int)c.size() - 1; }
    bool known_zero() const { return exact && c.empty(); }

    void normalize() {
        while (!c.empty() && c.back() == 0) c.pop_back();
        if (exact) {
            // canonical exact form: lo at the lowest nonzero coefficient
            size_t skip = 0;
            while (skip < c.size() && c[skip] == 0) ++skip;
            if (skip > 0) {
                c.erase(c.begin(), c.begin() + skip);
                lo += (int)skip;
            }
            if (c.empty()) lo = 0;
        }
    }

    static Laur zero() { return Laur{0, {}, true}; }
    static Laur from_poly(const Poly& x) {
        Laur a{0, x.c, true};
        a.normalize();
        return a;
    }
    static Laur t_power(int n, fel coeff = 1) {
        if (coeff == 0) return zero();
        return Laur{n, {coeff}, true};
    }
    // an empty window with knowledge floor lo: all coefficients >= lo are zero,
    // nothing known below (the "unknown small" value)
    static Laur unknown_below(int lo) { return Laur{lo, {}, false}; }
    static Laur from_window(int lo, std::vector<fel> coeffs, bool exact) {
        Laur a{lo, std::move(coeffs), exact};
        a.normalize();
        return a;
    }

    bool knows(int expo) const { return exact || expo >= lo; }

    fel coeff_at(int expo) const {
        if (expo > hi()) return 0;
        if (expo >= lo) return c[expo - lo];
        if (exact) return 0;
        throw precision_error("coefficient at t^" + std::to_string(expo) + " is below the known window (floor t^"
                              + std::to_string(lo) + ")");
    }

    friend bool operator==(const Laur& a, const Laur& b) {
        // mathematical equality is only decidable for exact values
        if (a.exact && b.exact) return a.lo == b.lo && a.c == b.c;
        throw precision_error("equality of windowed Laurent numbers is undecidable; compare exact values");
    }
};

// ord as an exact absolute value; fails rather than guessing when the window
// shows only zeros but the value is not known exactly
inline QMag abs_value(const Laur& a) {
    if (!a.c.empty()) return QMag::qpow(a.hi());
    if (a.exact) return QMag::null();
    throw precision_error("|alpha| undecidable: window is all zero but alpha is not exact");
}

inline Laur add(const Fq& F, const Laur& a, const Laur& b) {
    if (a.known_zero()) return b;
    if (b.known_zero()) return a;
    int floor_r;
    bool exact_r = a.exact && b.exact;
    if (exact_r) floor_r = std::min(a.lo, b.lo);
    else if (a.exact) floor_r = b.lo;
    else if (b.exact) floor_r = a.lo;
    else floor_r = std::max(a.lo, b.lo);
    int top = std::max(a.hi(), b.hi());
    Laur r;
    r.lo = floor_r;
    r.exact = exact_r;
    if (top >= floor_r) {
        r.c.assign(top - floor_r + 1, 0);
        for (int k = floor_r; k <= top; ++k) r.c[k - floor_r] = F.add(a.coeff_at(k), b.coeff_at(k));
    }
    r.normalize();
    return r;
}

inline Laur neg(const Fq& F, const Laur& a) {
    Laur r = a;
    for (auto& x : r.c) x = F.neg(x);
    return r;
}

inline Laur sub(const Fq& F, const Laur& a, const Laur& b) { return add(F, a, neg(F, b)); }

inline Laur mul_scalar(const Fq& F, const Laur& a, fel s) {
    if (s == 0) return Laur::zero();
    Laur r = a;
    for (auto& x : r.c) x = F.mul(x, s);
    return r;
}

inline Laur shift(const Laur& a, int n) {  // multiply by t^n
    Laur r = a;
    r.lo += n;
    return r;
}

inline Laur mul(const Fq& F, const Laur& a, const Laur& b) {
    if (a.known_zero() || b.known_zero()) return Laur::zero();
    // unknown tails: a's tail (below a.lo) meets b's top, and vice versa
    int floor_r = std::numeric_limits<int>::min();
    bool exact_r = a.exact && b.exact;
    if (!a.exact) floor_r = std::max(floor_r, a.lo + b.hi());
    if (!b.exact) floor_r = std::max(floor_r, b.lo + a.hi());
    int lo_r = exact_r ? a.lo + b.lo : floor_r;
    int top = a.hi() + b.hi();
    Laur r;
    r.lo = lo_r;
    r.exact = exact_r;
    if (top >= lo_r && !a.c.empty() && !b.c.empty()) {
        r.c.assign(top - lo_r + 1, 0);
        for (size_t i = 0; i < a.c.size(); ++i) {
            if (a.c[i] == 0) continue;
            for (size_t j = 0; j < b.c.size(); ++j) {
                int k = a.lo + (int)i + b.lo + (int)j;
                if (k >= lo_r) r.c[k - lo_r] = F.add(r.c[k - lo_r], F.mul(a.c[i], b.c[j]));
            }
        }
    }
    r.normalize();
    return r;
}

// forget knowledge below new_lo (same value, smaller window)
inline Laur weaken(const Laur& a, int new_lo) {
    int floor_r = a.exact ? new_lo : std::max(new_lo, a.lo);
    Laur r;
    r.exact = false;
    r.lo = floor_r;
    if (a.hi() >= floor_r) {
        r.c.resize(a.hi() - floor_r + 1, 0);
        for (int k = floor_r; k <= a.hi(); ++k) r.c[k - floor_r] = a.coeff_at(k);
    }
    r.normalize();
    return r;
}

// (floor_M(alpha), frac_M(alpha)): the split at exponent M
inline std::pair<Laur, Laur> floor_frac(const Laur& a, int M) {
    if (!a.exact && a.lo > M)
        throw precision_error("floor/frac split at t^" + std::to_string(M) + " needs the window to reach that exponent");
    Laur fl;
    fl.exact = true;
    fl.lo = M;
    if (a.hi() >= M) {
        fl.c.resize(a.hi() - M + 1, 0);
        for (int k = M; k <= a.hi(); ++k) fl.c[k - M] = a.coeff_at(k);
    }
    fl.normalize();
    Laur fr;
    fr.exact = a.exact;
    fr.lo = a.lo;
    int top = std::min(a.hi(), M - 1);
    if (top >= a.lo) fr.c.assign(a.c.begin(), a.c.begin() + (top - a.lo + 1));
    fr.normalize();
    return {fl, fr};
}

// res alpha: the coefficient of t^(-1)
inline fel residue(const Laur& a) { return a.coeff_at(-1); }

// exponent of E(alpha) = e_q(res alpha)
inline int char_exponent(const Fq& F, const Laur& a) { return F.eq_exponent(residue(a)); }

// ||alpha|| = |frac_0(alpha)|, the distance to A
inline QMag norm_dist(const Laur& a) {
    for (int k = std::min(a.hi(), -1); k >= a.lo; --k)
        if (a.c[k - a.lo] != 0) return QMag::qpow(k);
    if (a.exact) return QMag::null();
    throw precision_error("||alpha|| undecidable: fractional window shows only zeros and alpha is not exact");
}

// res(alpha * g) for polynomial g without forming the product
inline fel residue_of_product(const Fq& F, const Laur& a, const Poly& g) {
    fel r = 0;
    for (int j = 0; j <= g.deg(); ++j) {
        if (g.c[j] == 0) continue;
        r = F.add(r, F.mul(g.c[j], a.coeff_at(-1 - j)));
    }
    return r;
}

// Laurent expansion of num/den (den != 0) with window floor lo.  The result
// is exact when the division terminates above the floor.
inline Laur rational_to_laurent(const Fq& F, const Poly& num, const Poly& den, int lo) {
    if (den.is_zero()) throw std::invalid_argument("division by zero in K");
    if (num.is_zero()) return Laur::zero();
    int top = num.deg() - den.deg();
    if (top < lo) return Laur::unknown_below(lo);
    // num/den = t^(-m) * (Q + rem/den) with num*t^m = Q*den + rem.  Taking
    // m = max(0, -lo) puts every requested coefficient into Q, and the
    // rem/den part sits strictly below the floor: |t^(-m) rem/den| < q^lo.
    int m = std::max(0, -lo);
    auto [Q, rem] = divmod(F, shift_t(num, m), den);
    if (rem.is_zero()) {
        // terminating division: the value is exactly t^(-m) * Q
        Laur r{-m, Q.c, true};
        r.normalize();
        return r;
    }
    Laur r;
    r.lo = lo;
    r.exact = false;
    r.c.assign(top - lo + 1, 0);
    for (int k = lo; k <= top; ++k) r.c[k - lo] = Q.coeff(k + m);
    r.normalize();
    return r;
}

inline std::string to_string(const Fq& F, const Laur& a) {
    if (a.known_zero()) return "window(0, -1): [] exact";
    std::string s = "window(" + std::to_string(a.lo) + ", " + std::to_string(a.hi()) + "): [";
    for (size_t i = 0; i < a.c.size(); ++i) {
        if (i) s += ",";
        if (F.e == 1) {
            s += std::to_string(a.c[i]);
        } else {
            auto d = F.digits(a.c[i]);
            s += "(";
            for (int j = 0; j < F.e; ++j) {
                if (j) s += " ";
                s += std::to_string(d[j]);
            }
            s += ")";
        }
    }
    s += "]";
    if (a.exact) s += " exact";
    return s;
}

} // namespace ffcm
