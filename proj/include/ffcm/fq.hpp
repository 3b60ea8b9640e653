#pragma once

// Arithmetic in F_q, q = p^e, as a table-driven context object.
//
// Elements are plain integer indices ("fel"): the element with p-ary digits
// (c_0, ..., c_{e-1}) relative to the basis 1, u, ..., u^{e-1} of
// F_p[u]/(m(u)) has index sum c_i p^i.  All operations go through tables
// built once per context, so a fel is only meaningful together with its Fq.

#include <cstdint>
#include <memory>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

namespace ffcm {

using fel = std::uint16_t;

namespace detail {

inline bool is_prime(int n) {
    if (n < 2) return false;
    for (int d = 2; d * d <= n; ++d)
        if (n % d == 0) return false;
    return true;
}

} // namespace detail

class Fq {
public:
    int p = 0;  // characteristic
    int e = 0;  // extension degree
    int q = 0;  // p^e
    // modulus m(u), ascending powers of u, length e+1, monic; empty when e = 1
    std::vector<int> modulus;

    static Fq make(int q, std::vector<int> modulus_override = {}) {
        Fq F;
        int p = smallest_prime_factor(q);
        int e = 0;
        int n = q;
        while (n > 1) {
            if (n % p != 0) throw std::invalid_argument("q must be a prime power, got " + std::to_string(q));
            n /= p;
            ++e;
        }
        F.p = p;
        F.e = e;
        F.q = q;
        if (e == 1) {
            if (!modulus_override.empty()) throw std::invalid_argument("modulus override is only meaningful for q = p^e with e > 1");
        } else {
            F.modulus = modulus_override.empty() ? builtin_modulus(p, e) : modulus_override;
            F.check_modulus();
        }
        F.build_tables();
        return F;
    }

    // --- element arithmetic (table lookups) ---
    fel add(fel a, fel b) const { return add_t[size_t(a) * q + b]; }
    fel mul(fel a, fel b) const { return mul_t[size_t(a) * q + b]; }
    fel neg(fel a) const { return neg_t[a]; }
    fel sub(fel a, fel b) const { return add(a, neg(b)); }
    fel inv(fel a) const {
        if (a == 0) throw std::invalid_argument("inversion of zero in F_q");
        return inv_t[a];
    }
    fel pow(fel a, long long n) const {
        if (n < 0) return pow(inv(a), -n);
        fel r = 1, base = a;
        while (n) {
            if (n & 1) r = mul(r, base);
            base = mul(base, base);
            n >>= 1;
        }
        return r;
    }

    // trace of the extension F_q / F_p, landing in F_p (returned as 0 <= k < p)
    int trace(fel a) const { return trace_t[a]; }

    // exponent k of the additive character a -> e(tr(a)/p); same data as trace
    int eq_exponent(fel a) const { return trace_t[a]; }

    // embedding of F_p into F_q (digit c as the constant c)
    fel from_int(long long c) const {
        long long r = c % p;
        if (r < 0) r += p;
        return fel(r);
    }

    // digits (c_0, ..., c_{e-1}) of an element
    std::vector<int> digits(fel a) const {
        std::vector<int> d(e);
        for (int i = 0; i < e; ++i) { d[i] = a % p; a = fel(a / p); }
        return d;
    }
    fel from_digits(const std::vector<int>& d) const {
        if ((int)d.size() > e) throw std::invalid_argument("too many digits for F_q element");
        long long a = 0;
        for (int i = (int)d.size() - 1; i >= 0; --i) {
            if (d[i] < 0 || d[i] >= p) throw std::invalid_argument("digit out of range in F_q element");
            a = a * p + d[i];
        }
        return fel(a);
    }

    bool same_context(const Fq& o) const { return p == o.p && e == o.e && modulus == o.modulus; }

    static int smallest_prime_factor(int n) {
        if (n < 2) throw std::invalid_argument("q must be at least 2");
        for (int d = 2; d * d <= n; ++d)
            if (n % d == 0) return d;
        return n;
    }

    // built-in irreducible moduli for the shipped prime powers; ascending in u
    static std::vector<int> builtin_modulus(int p, int e) {
        if (p == 2 && e == 2) return {1, 1, 1};        // u^2+u+1
        if (p == 2 && e == 3) return {1, 1, 0, 1};     // u^3+u+1
        if (p == 2 && e == 4) return {1, 1, 0, 0, 1};     // u^4+u+1
        if (p == 2 && e == 5) return {1, 0, 1, 0, 0, 1};  // u^5+u^2+1
        if (p == 2 && e == 6) return {1, 1, 0, 0, 0, 0, 1};  // u^6+u+1
        if (p == 3 && e == 2) return {1, 0, 1};           // u^2+1
        if (p == 3 && e == 3) return {1, 2, 0, 1};        // u^3+2u+1
        if (p == 3 && e == 4) return {1, 1, 1, 1, 1};     // 5th cyclotomic, irreducible as ord_5(3) = 4
        if (p == 5 && e == 2) return {1, 1, 1};           // u^2+u+1
        throw std::invalid_argument("no built-in modulus for q = " + std::to_string(p) + "^" + std::to_string(e)
                                    + "; supply one in the field block");
    }

private:
    std::vector<fel> add_t, mul_t, neg_t, inv_t;
    std::vector<int> trace_t;

    void check_modulus() const {
        if ((int)modulus.size() != e + 1 || modulus[e] != 1)
            throw std::invalid_argument("field modulus must be monic of degree e");
        for (int c : modulus)
            if (c < 0 || c >= p) throw std::invalid_argument("field modulus digit out of range");
        // Irreducibility by trial division over F_p: test all monic divisors
        // of degree up to e/2.  e <= 4 in practice, so this is instant.
        for (int d = 1; 2 * d <= e; ++d) {
            long long count = 1;
            for (int i = 0; i < d; ++i) count *= p;
            for (long long r = 0; r < count; ++r) {
                // candidate divisor: monic, digits of r ascending
                std::vector<int> div(d + 1);
                long long rr = r;
                for (int i = 0; i < d; ++i) { div[i] = int(rr % p); rr /= p; }
                div[d] = 1;
                // remainder of modulus by div, coefficients mod p
                std::vector<int> rem = modulus;
                for (int i = e; i >= d; --i) {
                    int c = rem[i] % p;
                    if (c == 0) continue;
                    for (int j = 0; j <= d; ++j)
                        rem[i - d + j] = ((rem[i - d + j] - c * div[j]) % p + p * p) % p;
                }
                bool zero = true;
                for (int i = 0; i < d; ++i)
                    if (rem[i] % p != 0) { zero = false; break; }
                if (zero) throw std::invalid_argument("field modulus is reducible over F_p");
            }
        }
    }

    void build_tables() {
        add_t.assign(size_t(q) * q, 0);
        mul_t.assign(size_t(q) * q, 0);
        neg_t.assign(q, 0);
        inv_t.assign(q, 0);
        trace_t.assign(q, 0);

        auto digs = [&](int a) {
            std::vector<int> d(e);
            for (int i = 0; i < e; ++i) { d[i] = a % p; a /= p; }
            return d;
        };
        auto undigs = [&](const std::vector<int>& d) {
            long long a = 0;
            for (int i = e - 1; i >= 0; --i) a = a * p + (d[i] % p + p) % p;
            return fel(a);
        };

        for (int a = 0; a < q; ++a) {
            auto da = digs(a);
            for (int i = 0; i < e; ++i) da[i] = (p - da[i]) % p;
            neg_t[a] = undigs(da);
            for (int b = 0; b < q; ++b) {
                auto d1 = digs(a), d2 = digs(b);
                std::vector<int> s(e);
                for (int i = 0; i < e; ++i) s[i] = (d1[i] + d2[i]) % p;
                add_t[size_t(a) * q + b] = undigs(s);
                // multiply as polynomials in u, then reduce by the modulus
                std::vector<int> prod(2 * e - 1, 0);
                for (int i = 0; i < e; ++i)
                    for (int j = 0; j < e; ++j)
                        prod[i + j] = (prod[i + j] + d1[i] * d2[j]) % p;
                if (e > 1) {
                    for (int i = 2 * e - 2; i >= e; --i) {
                        int c = prod[i];
                        if (c == 0) continue;
                        prod[i] = 0;
                        for (int j = 0; j < e; ++j)
                            prod[i - e + j] = ((prod[i - e + j] - c * modulus[j]) % p + p * p) % p;
                    }
                }
                prod.resize(e);
                mul_t[size_t(a) * q + b] = undigs(prod);
            }
        }

        for (int a = 1; a < q; ++a) {
            for (int b = 1; b < q; ++b)
                if (mul_t[size_t(a) * q + b] == 1) { inv_t[a] = fel(b); break; }
            if (inv_t[a] == 0) throw std::logic_error("F_q inverse table construction failed");
        }

        // tr(a) = a + a^p + ... + a^(p^(e-1)); lands in F_p
        for (int a = 0; a < q; ++a) {
            fel acc = 0, frob = fel(a);
            for (int i = 0; i < e; ++i) {
                acc = add(acc, frob);
                frob = pow(frob, p);
            }
            if (acc >= fel(p)) throw std::logic_error("trace left the prime field");
            trace_t[a] = acc;
        }
    }
};

} // namespace ffcm
