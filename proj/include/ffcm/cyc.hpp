#pragma once

// Exact values in Z[zeta_p] (tensored with Q): a vector of p counts plus a
// nonnegative rational scale, value = scale * sum counts[k] * zeta_p^k.
//
// The only Z-linear relation among 1, zeta, ..., zeta^(p-1) is that the full
// sum vanishes, so subtracting the minimum count gives a canonical vector
// (min = 0); dividing out the content makes the (scale, counts) pair unique.
// Equality and zero tests are therefore exact.  Complex rendering is a
// deliberately separate, lossy view used only for magnitude comparisons,
// guarded by an interval check with one precision escalation.

#include "ffcm/rat.hpp"

#include <boost/multiprecision/cpp_bin_float.hpp>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace ffcm {

struct Cyc {
    int p = 0;
    std::vector<Int> counts;  // length p, canonical: min entry 0, content 1
    Rat scale = 1;            // nonnegative; zero value <=> counts all zero

    static Cyc zero(int p) { return Cyc{p, std::vector<Int>(p, 0), 1}; }
    static Cyc root(int p, int k) {
        Cyc v = zero(p);
        v.counts[((k % p) + p) % p] = 1;
        return v;
    }
    static Cyc from_rat(int p, const Rat& r) {
        Cyc v = zero(p);
        if (r > 0) {
            v.counts[0] = 1;
            v.scale = r;
        } else if (r < 0) {
            // -1 = zeta + zeta^2 + ... + zeta^(p-1)
            for (int k = 1; k < p; ++k) v.counts[k] = 1;
            v.scale = -r;
            v.canonicalize();
        }
        return v;
    }
    // histogram of character exponents -> sum of roots of unity
    static Cyc from_hist(int p, const std::vector<std::int64_t>& hist, const Rat& scale = 1) {
        Cyc v = zero(p);
        for (int k = 0; k < p; ++k) v.counts[k] = hist[k];
        v.scale = scale;
        v.canonicalize();
        return v;
    }

    bool is_zero() const {
        for (const Int& c : counts)
            if (c != 0) return false;
        return true;
    }

    void canonicalize() {
        Int mn = counts[0];
        for (const Int& c : counts)
            if (c < mn) mn = c;
        if (mn != 0)
            for (Int& c : counts) c -= mn;
        Int content = 0;
        for (const Int& c : counts) content = boost::multiprecision::gcd(content, c);
        if (content == 0) {
            scale = 1;  // the zero value
            return;
        }
        if (content > 1) {
            for (Int& c : counts) c /= content;
            scale *= Rat(content);
        }
        if (scale == 0) {
            for (Int& c : counts) c = 0;
            scale = 1;
        }
    }

    friend Cyc operator+(const Cyc& a, const Cyc& b) {
        if (a.p != b.p) throw std::invalid_argument("Cyc addition across different p");
        Cyc r = Cyc::zero(a.p);
        if (a.is_zero()) return b;
        if (b.is_zero()) return a;
        // common scale s = gcd of the two scales keeps counts integral
        Int an = boost::multiprecision::numerator(a.scale), ad = boost::multiprecision::denominator(a.scale);
        Int bn = boost::multiprecision::numerator(b.scale), bd = boost::multiprecision::denominator(b.scale);
        Int g = boost::multiprecision::gcd(an * bd, bn * ad);
        Rat s = Rat(g, ad * bd);
        Int fa = boost::multiprecision::numerator(Rat(a.scale / s));
        Int fb = boost::multiprecision::numerator(Rat(b.scale / s));
        for (int k = 0; k < a.p; ++k) r.counts[k] = a.counts[k] * fa + b.counts[k] * fb;
        r.scale = s;
        r.canonicalize();
        return r;
    }

    Cyc operator-() const {
        Cyc r = *this;
        for (Int& c : r.counts) c = -c;
        r.canonicalize();
        return r;
    }
    friend Cyc operator-(const Cyc& a, const Cyc& b) { return a + (-b); }

    friend Cyc operator*(const Cyc& a, const Cyc& b) {
        if (a.p != b.p) throw std::invalid_argument("Cyc multiplication across different p");
        Cyc r = Cyc::zero(a.p);
        for (int i = 0; i < a.p; ++i) {
            if (a.counts[i] == 0) continue;
            for (int j = 0; j < a.p; ++j) {
                if (b.counts[j] == 0) continue;
                r.counts[(i + j) % a.p] += a.counts[i] * b.counts[j];
            }
        }
        r.scale = a.scale * b.scale;
        r.canonicalize();
        return r;
    }

    Cyc scaled(const Rat& r) const {
        if (r == 0) return zero(p);
        Cyc v = *this;
        if (r > 0) {
            v.scale *= r;
        } else {
            v = -v;
            v.scale *= -r;
        }
        v.canonicalize();
        return v;
    }

    Cyc conj() const {
        Cyc r = zero(p);
        for (int k = 0; k < p; ++k) r.counts[(p - k) % p] = counts[k];
        r.scale = scale;
        r.canonicalize();
        return r;
    }

    friend bool operator==(const Cyc& a, const Cyc& b) {
        if (a.p != b.p) return false;
        return a.counts == b.counts && (a.is_zero() || a.scale == b.scale);
    }
    friend bool operator!=(const Cyc& a, const Cyc& b) { return !(a == b); }

    bool is_real() const { return *this == conj(); }

    // rational iff the counts at k = 1..p-1 all agree
    bool is_rational() const {
        for (int k = 2; k < p; ++k)
            if (counts[k] != counts[1]) return false;
        return true;
    }
    Rat to_rat() const {
        if (!is_rational()) throw std::invalid_argument("Cyc value is not rational");
        return scale * Rat(counts[0] - (p > 1 ? counts[1] : Int(0)));
    }

    // |value|^2 = value * conjugate, again an exact (real) Cyc
    Cyc abs_squared() const { return *this * conj(); }

    std::string str() const {
        std::string s = "(";
        for (int k = 0; k < p; ++k) {
            if (k) s += ",";
            s += counts[k].str();
        }
        s += ")";
        if (scale != 1) s += "*" + Rat(scale).str();
        return s;
    }
};

namespace detail {

template <typename Float>
std::pair<Float, Float> render_complex_impl(const Cyc& v) {
    const Float pi = 4 * atan(Float(1));
    Float re = 0, im = 0;
    for (int k = 0; k < v.p; ++k) {
        if (v.counts[k] == 0) continue;
        Float c = Float(v.counts[k].str());
        Float ang = 2 * pi * k / v.p;
        re += c * cos(ang);
        im += c * sin(ang);
    }
    Float s = Float(boost::multiprecision::numerator(v.scale).str())
              / Float(boost::multiprecision::denominator(v.scale).str());
    return {re * s, im * s};
}

} // namespace detail

using Float50 = boost::multiprecision::cpp_bin_float_50;
using Float100 = boost::multiprecision::cpp_bin_float_100;

inline std::pair<Float50, Float50> render_complex(const Cyc& v) { return detail::render_complex_impl<Float50>(v); }

// Sign of an exact real Cyc value: -1, 0, +1.  Exact zero test first, then
// interval-guarded rendering at ~166 bits, escalating once to ~332 bits.
inline int sign_real(const Cyc& v) {
    if (!v.is_real()) throw std::invalid_argument("sign of a non-real Cyc");
    if (v.is_zero()) return 0;
    if (v.is_rational()) return v.to_rat() > 0 ? 1 : -1;
    Int mass = 0;
    for (const Int& c : v.counts) mass += c;
    {
        auto [re, im] = detail::render_complex_impl<Float50>(v);
        (void)im;
        Float50 guard = Float50(mass.str()) * Float50(boost::multiprecision::numerator(v.scale).str())
                        / Float50(boost::multiprecision::denominator(v.scale).str());
        guard = ldexp(guard + 1, -140);
        if (re > guard) return 1;
        if (re < -guard) return -1;
    }
    auto [re, im] = detail::render_complex_impl<Float100>(v);
    (void)im;
    Float100 guard = Float100(mass.str()) * Float100(boost::multiprecision::numerator(v.scale).str())
                     / Float100(boost::multiprecision::denominator(v.scale).str());
    guard = ldexp(guard + 1, -310);
    if (re > guard) return 1;
    if (re < -guard) return -1;
    throw std::runtime_error("nonzero Cyc magnitude comparison stayed inside the interval guard at escalated precision");
}

// compare |a| vs |b| exactly via |.|^2 (both are real Cycs)
inline int compare_abs(const Cyc& a, const Cyc& b) {
    return sign_real(a.abs_squared() - b.abs_squared());
}

// squared magnitude as a guarded float, for report columns only
inline Float50 abs_rendered(const Cyc& v) {
    auto [re, im] = render_complex(v);
    return sqrt(re * re + im * im);
}

} // namespace ffcm
