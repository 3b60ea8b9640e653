#pragma once

// The ring A = F_q[t]: exact arithmetic, Euclidean structure, CRT, and
// deterministic enumeration of polynomials and monic irreducibles.
//
// A Poly stores coefficients ascending in t with the leading coefficient
// nonzero (zero polynomial = empty vector).  deg(0) = -1 here; the paper's
// ord 0 = -infinity convention is carried by QMag (abs(0) = 0).

#include "ffcm/fq.hpp"
#include "ffcm/rat.hpp"

#include <algorithm>
#include <cassert>
#include <string>
#include <vector>

namespace ffcm {

struct Poly {
    std::vector<fel> c;  // ascending powers of t, trimmed

    bool is_zero() const { return c.empty(); }
    int deg() const { return (int)c.size() - 1; }
    fel coeff(int i) const { return (i >= 0 && i < (int)c.size()) ? c[i] : fel(0); }
    fel lead() const { return c.empty() ? fel(0) : c.back(); }

    void trim() {
        while (!c.empty() && c.back() == 0) c.pop_back();
    }

    static Poly zero() { return {}; }
    static Poly konst(fel a) { return a == 0 ? Poly{} : Poly{{a}}; }
    static Poly t_power(int n, fel a = 1) {
        assert(n >= 0);
        if (a == 0) return {};
        Poly r;
        r.c.assign(n + 1, 0);
        r.c[n] = a;
        return r;
    }

    friend bool operator==(const Poly& a, const Poly& b) { return a.c == b.c; }
    friend bool operator!=(const Poly& a, const Poly& b) { return !(a == b); }
    // container ordering only (maps etc), not a mathematical order
    friend bool operator<(const Poly& a, const Poly& b) {
        if (a.c.size() != b.c.size()) return a.c.size() < b.c.size();
        for (size_t i = a.c.size(); i-- > 0;)
            if (a.c[i] != b.c[i]) return a.c[i] < b.c[i];
        return false;
    }
};

inline QMag abs_value(const Poly& x) {
    return x.is_zero() ? QMag::null() : QMag::qpow(x.deg());
}

inline Poly add(const Fq& F, const Poly& a, const Poly& b) {
    Poly r;
    r.c.resize(std::max(a.c.size(), b.c.size()), 0);
    for (size_t i = 0; i < r.c.size(); ++i) r.c[i] = F.add(a.coeff((int)i), b.coeff((int)i));
    r.trim();
    return r;
}

inline Poly neg(const Fq& F, const Poly& a) {
    Poly r = a;
    for (auto& x : r.c) x = F.neg(x);
    return r;
}

inline Poly sub(const Fq& F, const Poly& a, const Poly& b) { return add(F, a, neg(F, b)); }

inline Poly mul(const Fq& F, const Poly& a, const Poly& b) {
    if (a.is_zero() || b.is_zero()) return {};
    Poly r;
    r.c.assign(a.c.size() + b.c.size() - 1, 0);
    for (size_t i = 0; i < a.c.size(); ++i) {
        if (a.c[i] == 0) continue;
        for (size_t j = 0; j < b.c.size(); ++j)
            r.c[i + j] = F.add(r.c[i + j], F.mul(a.c[i], b.c[j]));
    }
    return r;  // top coefficient is a product of nonzero elements, no trim needed
}

inline Poly mul_scalar(const Fq& F, const Poly& a, fel s) {
    if (s == 0) return {};
    Poly r = a;
    for (auto& x : r.c) x = F.mul(x, s);
    return r;
}

inline Poly shift_t(const Poly& a, int n) {
    if (a.is_zero()) return {};
    assert(n >= 0);
    Poly r;
    r.c.assign(a.c.size() + n, 0);
    std::copy(a.c.begin(), a.c.end(), r.c.begin() + n);
    return r;
}

// x = q*y + r with |r| < |y|
inline std::pair<Poly, Poly> divmod(const Fq& F, const Poly& x, const Poly& y) {
    if (y.is_zero()) throw std::invalid_argument("polynomial division by zero");
    Poly r = x, quo;
    if (x.deg() >= y.deg()) quo.c.assign(x.deg() - y.deg() + 1, 0);
    fel ylead_inv = F.inv(y.lead());
    while (!r.is_zero() && r.deg() >= y.deg()) {
        int k = r.deg() - y.deg();
        fel f = F.mul(r.lead(), ylead_inv);
        quo.c[k] = f;
        for (int i = 0; i <= y.deg(); ++i)
            r.c[i + k] = F.sub(r.c[i + k], F.mul(f, y.c[i]));
        r.trim();
    }
    quo.trim();
    return {quo, r};
}

inline Poly mod(const Fq& F, const Poly& x, const Poly& y) { return divmod(F, x, y).second; }

inline Poly monic(const Fq& F, const Poly& a) {
    if (a.is_zero() || a.lead() == 1) return a;
    return mul_scalar(F, a, F.inv(a.lead()));
}

// monic gcd; gcd(x, 0) = monic x
inline Poly gcd(const Fq& F, Poly a, Poly b) {
    while (!b.is_zero()) {
        Poly r = mod(F, a, b);
        a = b;
        b = r;
    }
    return monic(F, a);
}

// g = gcd(a,b) monic with u*a + v*b = g
inline Poly xgcd(const Fq& F, const Poly& a, const Poly& b, Poly& u, Poly& v) {
    Poly r0 = a, r1 = b;
    Poly u0 = Poly::konst(1), u1 = Poly::zero();
    Poly v0 = Poly::zero(), v1 = Poly::konst(1);
    while (!r1.is_zero()) {
        auto [q, r2] = divmod(F, r0, r1);
        Poly u2 = sub(F, u0, mul(F, q, u1));
        Poly v2 = sub(F, v0, mul(F, q, v1));
        r0 = r1; r1 = r2;
        u0 = u1; u1 = u2;
        v0 = v1; v1 = v2;
    }
    if (!r0.is_zero() && r0.lead() != 1) {
        fel s = F.inv(r0.lead());
        r0 = mul_scalar(F, r0, s);
        u0 = mul_scalar(F, u0, s);
        v0 = mul_scalar(F, v0, s);
    }
    u = u0;
    v = v0;
    return r0;
}

inline bool coprime(const Fq& F, const Poly& a, const Poly& b) {
    Poly g = gcd(F, a, b);
    return g.deg() == 0;
}

// unique b with |b| < |prod moduli| and b = value_i mod modulus_i
inline Poly crt(const Fq& F, const std::vector<std::pair<Poly, Poly>>& residues) {
    Poly b = Poly::zero(), m = Poly::konst(1);
    for (const auto& [v, mi] : residues) {
        if (mi.deg() < 1) throw std::invalid_argument("CRT modulus must be nonconstant");
        if (!(abs_value(v) < abs_value(mi))) throw std::invalid_argument("CRT residue not reduced below its modulus");
        Poly u, w;
        Poly g = xgcd(F, m, mi, u, w);
        if (g.deg() != 0) throw std::invalid_argument("CRT moduli are not pairwise coprime");
        // b' = b + m*u*(v - b), taken mod m*mi
        Poly corr = mul(F, mul(F, m, u), sub(F, v, b));
        m = mul(F, m, mi);
        b = mod(F, add(F, b, corr), m);
    }
    return b;
}

inline Poly powmod(const Fq& F, Poly base, Int n, const Poly& m) {
    Poly r = Poly::konst(1);
    base = mod(F, base, m);
    while (n > 0) {
        if ((n & 1) != 0) r = mod(F, mul(F, r, base), m);
        base = mod(F, mul(F, base, base), m);
        n >>= 1;
    }
    return r;
}

inline Poly derivative(const Fq& F, const Poly& a) {
    Poly r;
    if (a.deg() < 1) return r;
    r.c.assign(a.deg(), 0);
    for (int i = 1; i <= a.deg(); ++i)
        r.c[i - 1] = F.mul(a.c[i], F.from_int(i));
    r.trim();
    return r;
}

// --- deterministic enumeration --------------------------------------------
//
// Order everywhere: degree ascending, then by coefficient digit vectors,
// low-degree digits varying fastest.  Equivalently: the polynomial of rank r
// among those with |x| < q^P has c_i = element index (r / q^i) mod q.

inline Poly poly_of_rank(const Fq& F, unsigned long long r) {
    Poly x;
    while (r > 0) {
        x.c.push_back(fel(r % F.q));
        r /= F.q;
    }
    x.trim();
    return x;
}

inline unsigned long long rank_of_poly(const Fq& F, const Poly& x) {
    unsigned long long r = 0;
    for (size_t i = x.c.size(); i-- > 0;) r = r * F.q + x.c[i];
    return r;
}

// all x with |x| < q^P, i.e. deg x < P, in rank order (q^P of them)
inline std::vector<Poly> all_below_abs(const Fq& F, int P) {
    unsigned long long n = 1;
    for (int i = 0; i < P; ++i) n *= F.q;
    std::vector<Poly> out;
    out.reserve(n);
    for (unsigned long long r = 0; r < n; ++r) out.push_back(poly_of_rank(F, r));
    return out;
}

inline std::vector<Poly> monic_of_degree(const Fq& F, int n) {
    std::vector<Poly> out;
    unsigned long long cnt = 1;
    for (int i = 0; i < n; ++i) cnt *= F.q;
    out.reserve(cnt);
    for (unsigned long long r = 0; r < cnt; ++r) {
        Poly x = poly_of_rank(F, r);
        x.c.resize(n + 1, 0);
        x.c[n] = 1;
        out.push_back(x);
    }
    return out;
}

inline bool is_irreducible(const Fq& F, const Poly& f);

inline std::vector<Poly> monic_irreducible_of_degree(const Fq& F, int n) {
    std::vector<Poly> out;
    for (const Poly& f : monic_of_degree(F, n))
        if (is_irreducible(F, f)) out.push_back(f);
    return out;
}

// Irreducibility: trial division by low-degree monics for deg <= 8, and a
// distinct-degree sieve (gcd with t^(q^i) - t) above that.  Both are exact;
// the cutoff just keeps the common small-degree case allocation-free.
inline bool is_irreducible(const Fq& F, const Poly& f) {
    int n = f.deg();
    if (n < 1) return false;
    if (n == 1) return true;
    if (n <= 8) {
        for (int d = 1; 2 * d <= n; ++d) {
            unsigned long long cnt = 1;
            for (int i = 0; i < d; ++i) cnt *= F.q;
            for (unsigned long long r = 0; r < cnt; ++r) {
                Poly g = poly_of_rank(F, r);
                g.c.resize(d + 1, 0);
                g.c[d] = 1;
                if (mod(F, f, g).is_zero()) return false;
            }
        }
        return true;
    }
    // distinct-degree: any factor of degree i <= n/2 shows up in
    // gcd(f, t^(q^i) - t)
    Poly x = Poly::t_power(1);
    Poly power = x;
    for (int i = 1; 2 * i <= n; ++i) {
        power = powmod(F, power, Int(F.q), f);
        Poly g = gcd(F, f, sub(F, power, x));
        if (g.deg() > 0) return false;
    }
    return true;
}

// factor g into monic irreducibles (degree-ascending trial division)
inline std::vector<std::pair<Poly, int>> factor(const Fq& F, Poly g) {
    if (g.is_zero()) throw std::invalid_argument("cannot factor the zero polynomial");
    g = monic(F, g);
    std::vector<std::pair<Poly, int>> out;
    for (int d = 1; g.deg() > 0 && d <= g.deg(); ++d) {
        for (const Poly& pi : monic_of_degree(F, d)) {
            if (pi.deg() > g.deg()) break;
            if (d > 1 && !is_irreducible(F, pi)) continue;
            int e = 0;
            while (true) {
                auto [quo, rem] = divmod(F, g, pi);
                if (!rem.is_zero()) break;
                g = quo;
                ++e;
            }
            if (e > 0) out.push_back({pi, e});
            if (g.deg() < 1) break;
        }
    }
    if (g.deg() > 0) out.push_back({g, 1});  // leftover is irreducible by construction
    return out;
}

// pi-adic valuation of a nonzero polynomial
inline int ord_at(const Fq& F, Poly x, const Poly& pi) {
    if (x.is_zero()) throw std::invalid_argument("valuation of zero");
    int v = 0;
    while (true) {
        auto [quo, rem] = divmod(F, x, pi);
        if (!rem.is_zero()) return v;
        x = quo;
        ++v;
    }
}

inline std::string to_string(const Fq& F, const Poly& a) {
    if (a.is_zero()) return "[0]";
    std::string s = "[";
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
    return s + "]";
}

} // namespace ffcm
