#pragma once

// Exponential sums and integrals over A = F_q[t] and K_infinity: the linear
// sum dichotomy, complete sums S(g,a), generating sums T(alpha; m, E),
// exponential integrals I(gamma; E), and the Weyl-differencing machinery
// (qualifying-tuple counts, the eta choice, and the rank-drop criterion)
// that controls T on the minor arcs.

#include <algorithm>
#include <cstdint>
#include <functional>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "ffcm/box.hpp"
#include "ffcm/budget.hpp"
#include "ffcm/cyc.hpp"
#include "ffcm/forms.hpp"
#include "ffcm/laurent.hpp"
#include "ffcm/poly.hpp"

namespace ffcm {

namespace detail {

// exponent thresholds are rational once eta enters; |x| < q^r for integral
// deg means deg <= int_below(r), and "coeff index >= r" means >= ceil_rat(r)
inline long long floor_rat(const Rat& r) {
    Int n = boost::multiprecision::numerator(r);
    Int d = boost::multiprecision::denominator(r);
    Int fl = n / d;
    if (fl * d > n) fl -= 1;
    return (long long)fl;
}
inline long long ceil_rat(const Rat& r) { return -floor_rat(-r); }
inline long long int_below(const Rat& r) {
    long long fl = floor_rat(r);
    return Rat(fl) == r ? fl - 1 : fl;
}

// q^n as an enumeration size, with the box-enumerator overflow discipline
inline std::uint64_t checked_pow(int q, long long n, const Budget& budget) {
    std::uint64_t total = 1;
    for (long long i = 0; i < n; ++i) {
        if (total > budget.limit() / (std::uint64_t)q) throw budget_error(budget.limit() + 1, budget.limit());
        total *= (std::uint64_t)q;
    }
    return total;
}

inline Int int_pow(int q, long long n) {
    Int r = 1;
    for (long long i = 0; i < n; ++i) r *= q;
    return r;
}

} // namespace detail

// fractional norm test: ||x|| < q^r  (r may be rational)
inline bool norm_less_than(const Laur& x, const Rat& r) {
    long long lo = detail::ceil_rat(r);
    for (long long e = lo; e <= -1; ++e)
        if (x.coeff_at((int)e) != 0) return false;
    return true;
}

// --- rational tuples a/g ----------------------------------------------------

// a/g in K^R: g monic, |a_i| < |g|, gcd(a_1, ..., a_R, g) = 1
struct RationalTuple {
    std::vector<Poly> a;
    Poly g;

    static RationalTuple make(const Fq& F, std::vector<Poly> a_in, Poly g_in) {
        if (g_in.is_zero()) throw std::invalid_argument("rational tuple needs a nonzero denominator");
        if (a_in.empty()) throw std::invalid_argument("rational tuple needs at least one numerator");
        Poly c = g_in;
        for (const Poly& ai : a_in) c = gcd(F, c, ai);
        if (c.deg() > 0) {
            g_in = divmod(F, g_in, c).first;
            for (Poly& ai : a_in) ai = divmod(F, ai, c).first;
        }
        // scale numerators and denominator together so g comes out monic
        if (g_in.lead() != 1) {
            fel u = F.inv(g_in.lead());
            g_in = mul_scalar(F, g_in, u);
            for (Poly& ai : a_in) ai = mul_scalar(F, ai, u);
        }
        for (Poly& ai : a_in) ai = mod(F, ai, g_in);
        return RationalTuple{std::move(a_in), std::move(g_in)};
    }

    int R() const { return (int)a.size(); }

    // the Laurent expansion of a_i/g down to exponent lo
    Laur component(const Fq& F, int i, int lo) const { return rational_to_laurent(F, a[i], g, lo); }
};

// --- linear sums ------------------------------------------------------------

// sum of E(gamma x) over |x| < q^c: equals q^c when ||gamma|| < q^{-c}, else 0.
// Both the dichotomy and the naive summation are computed; disagreement means
// a broken invariant, not a data error.
inline Cyc linear_sum(const Fq& F, const Laur& gamma, int c, Budget& budget) {
    if (c < 0) throw std::invalid_argument("linear sum cutoff must be nonnegative");
    bool full = norm_less_than(gamma, Rat(-c));
    Cyc closed = full ? Cyc::from_rat(F.p, Rat(detail::int_pow(F.q, c))) : Cyc::zero(F.p);

    std::uint64_t total = detail::checked_pow(F.q, c, budget);
    budget.require(total);
    std::vector<std::int64_t> hist(F.p, 0);
    for (std::uint64_t r = 0; r < total; ++r) {
        budget.charge(1);
        Poly x = poly_of_rank(F, r);
        hist[F.eq_exponent(residue_of_product(F, gamma, x))] += 1;
    }
    Cyc naive = Cyc::from_hist(F.p, hist);
    if (naive != closed) throw std::runtime_error("linear sum dichotomy disagrees with enumeration");
    return closed;
}

// --- complete sums S(g, a) --------------------------------------------------

enum class SumMethod { naive, factored };

namespace detail {

// E-exponent of res(r/g) for integral r reduced mod g
inline int residue_exponent(const Fq& F, const Poly& r, const Poly& g) {
    if (r.is_zero()) return 0;
    return F.eq_exponent(residue(rational_to_laurent(F, r, g, -1)));
}

inline Cyc complete_sum_naive(const FormSystem& FS, const Poly& g, const std::vector<Poly>& a, Budget& budget) {
    const Fq& F = FS.F;
    int n = g.deg();
    std::uint64_t per = checked_pow(F.q, n, budget);
    std::uint64_t total = 1;
    for (int j = 0; j < FS.s; ++j) {
        if (total > budget.limit() / per) throw budget_error(budget.limit() + 1, budget.limit());
        total *= per;
    }
    budget.require(total);

    std::vector<std::int64_t> hist(F.p, 0);
    std::vector<std::uint64_t> ranks(FS.s, 0);
    std::vector<Poly> x(FS.s);
    while (true) {
        budget.charge(1);
        for (int j = 0; j < FS.s; ++j) x[j] = poly_of_rank(F, ranks[j]);
        std::vector<Poly> vals = FS.evaluate(x, true);
        Poly r = Poly::zero();
        for (int i = 0; i < FS.R; ++i) r = add(F, r, mul(F, a[i], vals[i]));
        hist[residue_exponent(F, mod(F, r, g), g)] += 1;
        int j = 0;
        while (j < FS.s && ++ranks[j] == per) ranks[j++] = 0;
        if (j == FS.s) break;
    }
    return Cyc::from_hist(F.p, hist);
}

} // namespace detail

// S(g, a) = sum over x mod g of E(a.F(hx+b)/g).  The factored method splits g
// into prime-power parts g_u with cofactors G_u = g/g_u and evaluates
// prod_u S(g_u, a G_u^{-1} mod g_u); the product telescopes back to S(g, a)
// because sum_u G_u (a G_u^{-1}) = a mod g and S depends on a mod g only.
inline Cyc complete_sum_S(const FormSystem& FS, const Poly& g, std::vector<Poly> a, SumMethod method,
                          Budget& budget) {
    const Fq& F = FS.F;
    if (g.is_zero() || g.lead() != 1) throw std::invalid_argument("complete sum needs a monic denominator");
    if ((int)a.size() != FS.R) throw std::invalid_argument("numerator tuple arity != R");
    for (Poly& ai : a) ai = mod(F, ai, g);

    if (method == SumMethod::naive || g.deg() == 0) return detail::complete_sum_naive(FS, g, a, budget);

    Cyc out = Cyc::from_rat(F.p, 1);
    for (const auto& [pi, e] : factor(F, g)) {
        Poly part = Poly::konst(1);
        for (int i = 0; i < e; ++i) part = mul(F, part, pi);
        Poly cof = divmod(F, g, part).first;
        Poly inv, w;
        if (xgcd(F, cof, part, inv, w).deg() != 0)
            throw std::runtime_error("prime-power cofactor not invertible; factorization is inconsistent");
        std::vector<Poly> ap(FS.R);
        for (int i = 0; i < FS.R; ++i) ap[i] = mod(F, mul(F, a[i], inv), part);
        out = out * detail::complete_sum_naive(FS, part, ap, budget);
    }
    return out;
}

// --- value histograms and local factors A(g) ----------------------------------

// Distribution of the value vector F(hx+b) mod g over all x mod g, keyed by
// component ranks.  Variables that never share a monomial are enumerated as
// separate blocks and the per-block histograms convolved, so diagonal systems
// cost s|g| evaluations instead of |g|^s.  The shift hx+b acts coordinatewise
// and cannot merge blocks.
inline std::map<std::vector<std::uint64_t>, Int> value_histogram(const FormSystem& FS, const Poly& g,
                                                                 Budget& budget) {
    const Fq& F = FS.F;
    if (g.is_zero() || g.lead() != 1) throw std::invalid_argument("value histogram needs a monic modulus");
    int n = g.deg();

    // group variables that occur in a common tensor entry
    std::vector<int> parent(FS.s);
    for (int j = 0; j < FS.s; ++j) parent[j] = j;
    std::function<int(int)> find = [&](int j) { return parent[j] == j ? j : parent[j] = find(parent[j]); };
    std::uint64_t tsize = detail::tensor_size(FS.s, FS.d);
    for (int i = 0; i < FS.R; ++i)
        for (std::uint64_t flat = 0; flat < tsize; ++flat) {
            if (FS.tensors[i][flat].is_zero()) continue;
            std::uint64_t rest = flat;
            int first = (int)(rest % FS.s);
            for (int k = 0; k < FS.d; ++k) {
                parent[find((int)(rest % FS.s))] = find(first);
                rest /= FS.s;
            }
        }
    std::vector<std::vector<int>> blocks(FS.s);
    for (int j = 0; j < FS.s; ++j) blocks[find(j)].push_back(j);

    std::vector<Poly> zero_pt(FS.s, Poly::zero());
    std::vector<Poly> base = FS.evaluate(zero_pt, true);
    auto key_of = [&](const std::vector<Poly>& vals) {
        std::vector<std::uint64_t> key(FS.R);
        for (int i = 0; i < FS.R; ++i) key[i] = rank_of_poly(F, mod(F, vals[i], g));
        return key;
    };

    // start from the value at zero and fold in one block at a time
    std::map<std::vector<std::uint64_t>, Int> hist;
    hist[key_of(base)] = 1;
    std::uint64_t per = n == 0 ? 1 : detail::checked_pow(F.q, n, budget);
    for (const std::vector<int>& blk : blocks) {
        if (blk.empty()) continue;
        std::uint64_t total = 1;
        for (std::size_t k = 0; k < blk.size(); ++k) {
            if (total > budget.limit() / per) throw budget_error(budget.limit() + 1, budget.limit());
            total *= per;
        }
        budget.require(total);

        // offsets F(h x_blk + b) - F(b) carried by this block alone
        std::map<std::vector<std::uint64_t>, Int> offs;
        std::vector<std::uint64_t> ranks(blk.size(), 0);
        std::vector<Poly> x = zero_pt;
        while (true) {
            budget.charge(1);
            for (std::size_t k = 0; k < blk.size(); ++k) x[blk[k]] = poly_of_rank(F, ranks[k]);
            std::vector<Poly> vals = FS.evaluate(x, true);
            for (int i = 0; i < FS.R; ++i) vals[i] = sub(F, vals[i], base[i]);
            offs[key_of(vals)] += 1;
            std::size_t k = 0;
            while (k < blk.size() && ++ranks[k] == per) ranks[k++] = 0;
            if (k == blk.size()) break;
        }

        std::map<std::vector<std::uint64_t>, Int> next;
        for (const auto& [k1, c1] : hist)
            for (const auto& [k2, c2] : offs) {
                budget.charge(1);
                std::vector<std::uint64_t> key(FS.R);
                for (int i = 0; i < FS.R; ++i)
                    key[i] = rank_of_poly(F, mod(F, add(F, poly_of_rank(F, k1[i]), poly_of_rank(F, k2[i])), g));
                next[key] += c1 * c2;
            }
        hist.swap(next);
    }
    return hist;
}

// A(g) = |g|^{-s} sum over coprime tuples a of S(g, a).  The x-sums are folded
// into the value histogram first, so the cost is the histogram cost plus
// (#coprime a)(#distinct values) instead of |g|^{s+R}.
inline Cyc local_factor_A(const FormSystem& FS, const Poly& g, Budget& budget) {
    const Fq& F = FS.F;
    if (g.is_zero() || g.lead() != 1) throw std::invalid_argument("local factor needs a monic denominator");
    int n = g.deg();
    if (n == 0) return Cyc::from_rat(F.p, 1);

    std::map<std::vector<std::uint64_t>, Int> values = value_histogram(FS, g, budget);
    std::uint64_t per = detail::checked_pow(F.q, n, budget);

    std::vector<Int> weight(F.p, 0);
    std::vector<std::uint64_t> aranks(FS.R, 0);
    std::vector<Poly> a(FS.R);
    while (true) {
        for (int i = 0; i < FS.R; ++i) a[i] = poly_of_rank(F, aranks[i]);
        Poly c = g;
        for (int i = 0; i < FS.R && c.deg() > 0; ++i) c = gcd(F, c, a[i]);
        if (c.deg() == 0) {
            for (const auto& [key, count] : values) {
                budget.charge(1);
                Poly r = Poly::zero();
                for (int i = 0; i < FS.R; ++i) r = add(F, r, mul(F, a[i], poly_of_rank(F, key[i])));
                weight[detail::residue_exponent(F, mod(F, r, g), g)] += count;
            }
        }
        int i = 0;
        while (i < FS.R && ++aranks[i] == per) aranks[i++] = 0;
        if (i == FS.R) break;
    }
    Cyc out = Cyc::zero(F.p);
    Rat scale = Rat(1, detail::int_pow(F.q, (long long)FS.s * n));
    for (int k = 0; k < F.p; ++k)
        if (weight[k] != 0) out = out + Cyc::root(F.p, k).scaled(Rat(weight[k]) * scale);
    return out;
}

// --- generating sums T(alpha; m, E) ------------------------------------------

// sum of E(alpha.F(hx+b)) over integral x in mE.  Each coordinate constraint
// |x_i - m c_i| < q^{deg m + rho_i} pins the coefficients of x_i at exponents
// >= e_i to those of m c_i and leaves max(e_i, 0) low digits free; when
// e_i <= 0, the fractional coefficients of m c_i in [e_i, -1] must vanish or
// the range is empty.
inline Cyc generating_sum_T(const FormSystem& FS, const std::vector<Laur>& alpha, const Poly& m, const Box& E,
                            Budget& budget) {
    const Fq& F = FS.F;
    if ((int)alpha.size() != FS.R) throw std::invalid_argument("alpha arity != R");
    if (E.dim() != FS.s) throw std::invalid_argument("box dimension != s");
    if (m.is_zero() || m.lead() != 1) throw std::invalid_argument("scaling polynomial must be monic");

    std::vector<Poly> fixed(FS.s);
    std::vector<int> free_digits(FS.s);
    std::uint64_t total = 1;
    for (int i = 0; i < FS.s; ++i) {
        Laur gi = mul(F, Laur::from_poly(m), E.center[i]);
        int ei = m.deg() + E.radius_e[i];
        for (int e = ei; e <= -1; ++e)
            if (gi.coeff_at(e) != 0) return Cyc::zero(F.p);  // no integral point this coordinate
        Poly fx;
        fx.c.assign(std::max(gi.hi() + 1, 0), 0);
        for (int e = std::max(ei, 0); e <= gi.hi(); ++e) fx.c[e] = gi.coeff_at(e);
        fx.trim();
        fixed[i] = fx;
        free_digits[i] = std::max(ei, 0);
        std::uint64_t per = detail::checked_pow(F.q, free_digits[i], budget);
        if (total > budget.limit() / per) throw budget_error(budget.limit() + 1, budget.limit());
        total *= per;
    }
    budget.require(total);

    std::vector<std::uint64_t> per(FS.s);
    for (int i = 0; i < FS.s; ++i) per[i] = detail::checked_pow(F.q, free_digits[i], budget);

    std::vector<std::int64_t> hist(F.p, 0);
    std::vector<std::uint64_t> ranks(FS.s, 0);
    std::vector<Poly> x(FS.s);
    while (true) {
        budget.charge(1);
        for (int i = 0; i < FS.s; ++i) {
            Poly low = poly_of_rank(F, ranks[i]);  // digits at exponents < free_digits[i]
            x[i] = add(F, fixed[i], low);
        }
        std::vector<Poly> vals = FS.evaluate(x, true);
        fel res = 0;
        for (int i = 0; i < FS.R; ++i) res = F.add(res, residue_of_product(F, alpha[i], vals[i]));
        hist[F.eq_exponent(res)] += 1;
        int i = 0;
        while (i < FS.s && ++ranks[i] == per[i]) ranks[i++] = 0;
        if (i == FS.s) break;
    }
    return Cyc::from_hist(F.p, hist);
}

// --- exponential integrals I(gamma; E) ---------------------------------------

// I(gamma; E) = integral over E of E(gamma.F(sigma)).  The unshifted system F
// is evaluated here; shifts enter I only through the gamma argument.
inline Cyc exp_integral_I(const FormSystem& FS, const std::vector<Laur>& gamma, const Box& E, Budget& budget) {
    const Fq& F = FS.F;
    if ((int)gamma.size() != FS.R) throw std::invalid_argument("gamma arity != R");
    if (E.dim() != FS.s) throw std::invalid_argument("box dimension != s");

    bool all_zero = true;
    int g_hi = 0;
    for (const Laur& gi : gamma)
        if (!gi.known_zero()) {
            g_hi = all_zero ? gi.hi() : std::max(g_hi, gi.hi());
            all_zero = false;
        }
    int depth = 1;
    if (!all_zero) {
        int box_top = E.radius_e[0] - 1;
        for (int i = 0; i < FS.s; ++i) {
            box_top = std::max(box_top, E.radius_e[i] - 1);
            if (!E.center[i].known_zero()) box_top = std::max(box_top, E.center[i].hi());
        }
        depth = std::max({1, g_hi + FS.delta_e + 1, g_hi + FS.delta_e + (FS.d - 1) * box_top + 1});
    }

    auto f = [&](const std::vector<Laur>& sigma) -> int {
        std::vector<Laur> vals = FS.evaluate_laurent(sigma, false);
        Laur w = Laur::zero();
        for (int i = 0; i < FS.R; ++i) w = add(F, w, mul(F, gamma[i], vals[i]));
        return char_exponent(F, w);
    };
    return integrate_box_char_audited(F, f, E, depth, budget);
}

// --- Weyl differencing audit -------------------------------------------------

// Exact two-sided form of the differencing inequality at m = t^Q, E = T^s:
//   |U(alpha)|^{2^{d-1}} <= q^{Q(2^{d-1}-d+1)s} N
// where N counts (d-1)-tuples below q^Q whose differenced character is trivial
// on all of |x| < q^Q (every Upsilon_j equal to q^Q rather than 0).
struct WeylAudit {
    Cyc U;                     // exact U(alpha)
    Cyc lhs;                   // |U|^{2^{d-1}}, an exact real value
    Rat rhs;                   // q^{Q(2^{d-1}-d+1)s} * qualifying
    long long qualifying = 0;  // tuples with all Upsilon_j nonzero
};

namespace detail {

// walk all (d-1)-tuples of vectors in A^s with per-slot degree caps, calling
// visit(xs); cap -1 means the zero vector only
template <typename Visit>
void for_each_tuple(const Fq& F, int s, int slots, const std::vector<long long>& cap, Budget& budget,
                    const Visit& visit) {
    std::vector<std::uint64_t> per(slots);
    std::uint64_t total = 1;
    for (int u = 0; u < slots; ++u) {
        per[u] = checked_pow(F.q, (cap[u] + 1) * s, budget);
        if (total > budget.limit() / per[u]) throw budget_error(budget.limit() + 1, budget.limit());
        total *= per[u];
    }
    budget.require(total);

    std::vector<std::uint64_t> percoord(slots);
    for (int u = 0; u < slots; ++u) percoord[u] = checked_pow(F.q, cap[u] + 1, budget);
    std::vector<std::uint64_t> ranks(slots * s, 0);
    std::vector<std::vector<Poly>> xs(slots, std::vector<Poly>(s));
    while (true) {
        budget.charge(1);
        for (int u = 0; u < slots; ++u)
            for (int j = 0; j < s; ++j) xs[u][j] = poly_of_rank(F, ranks[u * s + j]);
        visit(xs);
        int k = 0;
        while (k < slots * s && ++ranks[k] == percoord[k / s]) ranks[k++] = 0;
        if (k == slots * s) break;
    }
}

} // namespace detail

inline WeylAudit weyl_difference_audit(const FormSystem& FS, const std::vector<Laur>& alpha, int Q, Budget& budget) {
    const Fq& F = FS.F;
    if (Q < 1) throw std::invalid_argument("differencing audit needs Q >= 1");
    if (F.p <= FS.d) throw std::invalid_argument("differencing needs p > d");

    WeylAudit out;
    out.U = generating_sum_T(FS, alpha, Poly::t_power(Q), Box::torus(FS.s), budget);
    out.lhs = out.U.abs_squared();
    for (int i = 1; i < (1 << (FS.d - 2)); ++i) out.lhs = out.lhs * out.U.abs_squared();

    std::vector<long long> cap(FS.d - 1, Q - 1);
    detail::for_each_tuple(F, FS.s, FS.d - 1, cap, budget, [&](const std::vector<std::vector<Poly>>& xs) {
        for (int j = 0; j < FS.s; ++j) {
            Laur cj = Laur::zero();
            for (int i = 0; i < FS.R; ++i)
                cj = add(F, cj, mul(F, alpha[i], Laur::from_poly(FS.psi(i, j, xs))));
            if (!norm_less_than(cj, Rat(-Q))) return;
        }
        out.qualifying += 1;
    });

    long long rhs_e = (long long)Q * ((1LL << (FS.d - 1)) - FS.d + 1) * FS.s;
    out.rhs = Rat(detail::int_pow(F.q, rhs_e)) * Rat(out.qualifying);
    Cyc slack = Cyc::from_rat(F.p, out.rhs) - out.lhs;
    if (sign_real(slack) < 0) throw std::runtime_error("weyl differencing inequality violated");
    return out;
}

// --- N_eta counts and the eta choice -----------------------------------------

// Count (d-1)-tuples with |x^(u)| < q^{Q eta} in the first v slots, < q^Q in
// the rest, and ||alpha Psi||_j < q^{Q(v eta - v - 1)} for every j.  The
// visitor variant exposes each counted tuple for rank auditing.
inline long long count_N_eta_visit(const FormSystem& FS, const std::vector<Laur>& alpha, int Q, int v,
                                   const Rat& eta, Budget& budget,
                                   const std::function<void(const std::vector<std::vector<Poly>>&)>& visit) {
    const Fq& F = FS.F;
    if (Q < 1) throw std::invalid_argument("tuple count needs Q >= 1");
    if (v < 0 || v > FS.d - 1) throw std::invalid_argument("differenced slot count v out of range");
    if (eta < 0 || eta > 1) throw std::invalid_argument("eta must lie in [0, 1]");
    if (F.p <= FS.d) throw std::invalid_argument("differencing needs p > d");
    if ((int)alpha.size() != FS.R) throw std::invalid_argument("alpha arity != R");

    std::vector<long long> cap(FS.d - 1);
    for (int u = 0; u < FS.d - 1; ++u)
        cap[u] = u < v ? detail::int_below(Rat(Q) * eta) : Q - 1;
    Rat thr = Rat(Q) * (Rat(v) * eta - v - 1);

    long long count = 0;
    detail::for_each_tuple(F, FS.s, FS.d - 1, cap, budget, [&](const std::vector<std::vector<Poly>>& xs) {
        for (int j = 0; j < FS.s; ++j) {
            Laur cj = Laur::zero();
            for (int i = 0; i < FS.R; ++i)
                cj = add(F, cj, mul(F, alpha[i], Laur::from_poly(FS.psi(i, j, xs))));
            if (!norm_less_than(cj, thr)) return;
        }
        count += 1;
        if (visit) visit(xs);
    });
    return count;
}

inline long long count_N_eta(const FormSystem& FS, const std::vector<Laur>& alpha, int Q, int v, const Rat& eta,
                             Budget& budget) {
    return count_N_eta_visit(FS, alpha, Q, v, eta, budget, nullptr);
}

// The largest eta <= 1 making the rank-drop lemma applicable to tuples counted
// at v = d-1:  q^{R(d-1)Q eta} = q^{-1} min(four explicit magnitudes) built
// from g, beta, Q and the multilinear coefficient bound kappa.  Negative
// choices are clamped to 0 (and flagged), since N_eta only makes sense there.
struct EtaChoice {
    Rat eta;
    long long m_star = 0;    // exponent of the minimum before the q^{-1} slack
    bool beta_zero = false;  // second magnitude absent (it is infinite)
    bool clamped = false;
};

inline EtaChoice choose_eta(const FormSystem& FS, const Poly& g, const std::vector<Laur>& beta, int Q) {
    if (g.is_zero() || g.lead() != 1) throw std::invalid_argument("eta choice needs a monic denominator");
    if ((int)beta.size() != FS.R) throw std::invalid_argument("beta arity != R");
    if (Q < 1) throw std::invalid_argument("eta choice needs Q >= 1");

    long long R = FS.R, d = FS.d, kappa = FS.kappa_e();
    EtaChoice out;
    QMag babs = QMag::null();
    for (const Laur& bi : beta)
        if (!bi.known_zero()) {
            QMag m = abs_value(bi);
            if (babs < m) babs = m;
        }
    out.beta_zero = babs.zero;

    long long m_star = R * (d - 1) * Q;
    m_star = std::min(m_star, R * d * Q - R * g.deg());
    if (!out.beta_zero) m_star = std::min(m_star, -R * (kappa + g.deg() + babs.e));
    long long extra = out.beta_zero ? 0 : std::max<long long>(0, kappa + d * Q + babs.e);
    m_star = std::min(m_star, g.deg() - R * kappa + extra);

    out.m_star = m_star;
    out.eta = Rat(m_star - 1, R * (d - 1) * Q);
    if (out.eta < 0) {
        out.eta = 0;
        out.clamped = true;
    }
    return out;
}

// --- rank drop from simultaneous smallness ------------------------------------

// Hypotheses: alpha = a/g + beta with beta in T^R, |g beta| < q^{-M}, every
// |Phi_ij| < q^M, ||alpha Phi|| < q^{-Y} and q^Y > |g|.  Then a Phi = 0 mod g
// nontrivially, so rank of Phi mod g drops below R.  If moreover |g| >= q^{RM}
// or |g alpha - a| >= q^{(R-1)M - Y}, the rank over K drops too.
struct RankDropReport {
    int rank_mod_g = 0;
    int rank_generic = 0;
    bool hyp_core = false;   // the four basic hypotheses
    bool hyp_extra = false;  // one of the two additional alternatives
};

inline RankDropReport rank_drop_test(const Fq& F, const std::vector<std::vector<Poly>>& Phi,
                                     const RationalTuple& frac, const std::vector<Laur>& beta, const Rat& M_e,
                                     const Rat& Y_e) {
    int R = frac.R();
    if ((int)Phi.size() != R) throw std::invalid_argument("matrix row count != R");
    if ((int)beta.size() != R) throw std::invalid_argument("beta arity != R");
    int s = (int)Phi[0].size();
    for (const Laur& bi : beta)
        if (!bi.known_zero() && abs_value(bi) >= QMag::one())
            throw std::invalid_argument("beta must lie in the open unit torus");

    RankDropReport rep;
    rep.rank_mod_g = rank_mod(F, Phi, frac.g);
    rep.rank_generic = rank_generic(F, Phi);

    int phi_deg = -1;
    bool entries_ok = true;
    for (const auto& row : Phi)
        for (const Poly& e : row) {
            phi_deg = std::max(phi_deg, e.deg());
            if (!e.is_zero() && !(Rat(e.deg()) < M_e)) entries_ok = false;
        }

    QMag gbeta = QMag::null();
    for (const Laur& bi : beta)
        if (!bi.known_zero()) {
            QMag m = abs_value(mul(F, Laur::from_poly(frac.g), bi));
            if (gbeta < m) gbeta = m;
        }
    bool gbeta_ok = gbeta.zero || Rat(gbeta.e) < -M_e;

    // alpha Phi needs the expansion of a_i/g deep enough for the norm window
    long long lo = detail::ceil_rat(-Y_e) - std::max(phi_deg, 0) - 1;
    bool norm_ok = true;
    for (int j = 0; j < s && norm_ok; ++j) {
        Laur cj = Laur::zero();
        for (int i = 0; i < R; ++i) {
            Laur ai = add(F, frac.component(F, i, (int)lo), beta[i]);
            cj = add(F, cj, mul(F, ai, Laur::from_poly(Phi[i][j])));
        }
        if (!norm_less_than(cj, -Y_e)) norm_ok = false;
    }

    rep.hyp_core = entries_ok && gbeta_ok && norm_ok && Rat(frac.g.deg()) < Y_e;
    rep.hyp_extra = Rat(frac.g.deg()) >= Rat(R) * M_e
                    || (!gbeta.zero && Rat(gbeta.e) >= Rat(R - 1) * M_e - Y_e);

    if (rep.hyp_core && rep.rank_mod_g >= R)
        throw std::runtime_error("rank mod g failed to drop under the smallness hypotheses");
    if (rep.hyp_core && rep.hyp_extra && rep.rank_generic >= R)
        throw std::runtime_error("generic rank failed to drop under the strengthened hypotheses");
    return rep;
}

// --- minor arc diagnostics (two-sided, never asserted) -------------------------

// The comparison chain |U| <= (differencing bound) <= (Weyl bound) carries
// unquantified constants in the middle steps, so this only reports numbers:
// |U(alpha)|^{2^{d-1}}, the eta-choice tuple bound, and the closed-form Weyl
// bound with exponent K/(R(d-1)).
struct MinorArcDiagnostic {
    Rat eta;
    long long N_count = 0;
    Float50 U_abs = 0;         // |U(alpha)|
    Float50 diff_bound = 0;    // (q^{Qs})^{2^{d-1} - eta(d-1)} N, root 2^{d-1} taken
    Float50 weyl_bound = 0;    // Lemma-form closed bound on |U|
};

namespace detail {

inline Float50 rat_to_float(const Rat& r) {
    return Float50(boost::multiprecision::numerator(r).str()) / Float50(boost::multiprecision::denominator(r).str());
}

} // namespace detail

inline MinorArcDiagnostic minor_arc_diagnostic(const FormSystem& FS, const RationalTuple& frac,
                                               const std::vector<Laur>& beta, int Q, Budget& budget) {
    const Fq& F = FS.F;
    EtaChoice choice = choose_eta(FS, frac.g, beta, Q);

    MinorArcDiagnostic out;
    out.eta = choice.eta;

    std::vector<Laur> alpha(FS.R);
    long long lo = -(long long)FS.d * Q - FS.kappa_e() - 2 * Q - 4;  // deep enough for every norm window here
    for (int i = 0; i < FS.R; ++i) alpha[i] = add(F, frac.component(F, i, (int)lo), beta[i]);

    out.N_count = count_N_eta(FS, alpha, Q, FS.d - 1, choice.eta, budget);
    Cyc U = generating_sum_T(FS, alpha, Poly::t_power(Q), Box::torus(FS.s), budget);
    auto [re, im] = render_complex(U);
    out.U_abs = sqrt(re * re + im * im);

    using std::pow;
    Float50 qf(F.q);
    Rat diff_e = Rat((long long)Q * FS.s) * (Rat(1LL << (FS.d - 1)) - choice.eta * (FS.d - 1));
    Float50 lhs_pow = pow(qf, detail::rat_to_float(diff_e)) * Float50(out.N_count);
    out.diff_bound = pow(lhs_pow, Float50(1) / Float50(1LL << (FS.d - 1)));

    QMag gbeta = QMag::null();
    for (const Laur& bi : beta)
        if (!bi.known_zero()) {
            QMag m = abs_value(mul(F, Laur::from_poly(frac.g), bi));
            if (gbeta < m) gbeta = m;
        }
    Rat gb = gbeta.to_rat(F.q);
    Rat Qs = Rat(detail::int_pow(F.q, Q));
    Rat gabs = Rat(detail::int_pow(F.q, frac.g.deg()));
    auto rpow = [](Rat base, int n) {
        Rat r = 1;
        for (int i = 0; i < n; ++i) r *= base;
        return r;
    };
    Rat bracket = (rpow(Qs, FS.R) + rpow(gabs, FS.R) + rpow(Qs, FS.R * FS.d) * rpow(gb, FS.R)) / rpow(Qs, FS.R * FS.d)
                  + Rat(1) / (gabs + rpow(Qs, FS.d) * gb);
    Rat K = Rat(FS.s - FS.sing_dim, 1LL << (FS.d - 1));
    Float50 expo = detail::rat_to_float(K / Rat((long long)FS.R * (FS.d - 1)));
    out.weyl_bound = pow(qf, Float50(Q * FS.s)) * pow(detail::rat_to_float(bracket), expo);
    return out;
}

} // namespace ffcm
