#pragma once
// Congruence counting M(g), elementary-divisor ranks over pi-power moduli,
// Hensel lifting with exact per-level counts, and partial singular series.

#include <limits>
#include <map>
#include <optional>
#include <set>

#include "ffcm/exp_sums.hpp"

namespace ffcm {

constexpr long long val_unbounded = std::numeric_limits<long long>::max();

inline long long pi_valuation(const Fq& F, const Poly& x, const Poly& pi) {
    if (x.is_zero()) return val_unbounded;
    return ord_at(F, x, pi);
}

namespace detail {

inline Poly pi_power(const Fq& F, const Poly& pi, int k) {
    Poly out = Poly::konst(1);
    for (int i = 0; i < k; ++i) out = mul(F, out, pi);
    return out;
}

} // namespace detail

// Valuations of the elementary divisors of m over the local ring at pi, in
// nondecreasing order, val_unbounded marking divisors that vanish.  Unit-pivot
// elimination: pick an entry of least valuation, scale the other rows by its
// pi-unit part and subtract.  Scaling by pi-units is invertible locally, so
// divisor valuations are unchanged; clearing the pivot row afterwards would
// not touch the complement, so it is skipped.
inline std::vector<long long> elementary_divisors(const Fq& F, std::vector<std::vector<Poly>> m, const Poly& pi) {
    if (m.empty() || m[0].empty()) return {};
    int rows = (int)m.size(), cols = (int)m[0].size();
    int steps = std::min(rows, cols);
    std::vector<char> row_done(rows, 0), col_done(cols, 0);
    std::vector<long long> out;
    for (int step = 0; step < steps; ++step) {
        long long best = val_unbounded;
        int pr = -1, pc = -1;
        for (int i = 0; i < rows; ++i) {
            if (row_done[i]) continue;
            for (int j = 0; j < cols; ++j) {
                if (col_done[j]) continue;
                long long v = pi_valuation(F, m[i][j], pi);
                if (v < best) { best = v; pr = i; pc = j; }
            }
        }
        if (best == val_unbounded) break;
        out.push_back(best);
        Poly pw = detail::pi_power(F, pi, (int)best);
        Poly u = divmod(F, m[pr][pc], pw).first;
        for (int i = 0; i < rows; ++i) {
            if (row_done[i] || i == pr) continue;
            Poly f = divmod(F, m[i][pc], pw).first;
            for (int j = 0; j < cols; ++j) {
                if (col_done[j]) continue;
                m[i][j] = sub(F, mul(F, u, m[i][j]), mul(F, f, m[pr][j]));
            }
        }
        row_done[pr] = 1;
        col_done[pc] = 1;
    }
    while ((int)out.size() < steps) out.push_back(val_unbounded);
    return out;
}

// rank over A/(pi^j) in the elementary-divisor sense: divisors of valuation
// below j survive.  j = 0 means mod 1, where everything has rank 0.
inline int rank_mod_power(const Fq& F, const std::vector<std::vector<Poly>>& m, const Poly& pi, int j) {
    if (j < 0) throw std::invalid_argument("modulus exponent must be nonnegative");
    int rank = 0;
    for (long long e : elementary_divisors(F, m, pi))
        if (e < j) ++rank;
    return rank;
}

namespace detail {

// the Jacobian of the shifted system vanishes to order exactly l-1 at x, in
// the sense that its reduction is singular mod pi^{l-1} but of full rank mod
// pi^l
inline bool rank_window_holds(const Fq& F, const std::vector<std::vector<Poly>>& jac, const Poly& pi, int l) {
    int R = (int)jac.size();
    return rank_mod_power(F, jac, pi, l) == R && rank_mod_power(F, jac, pi, l - 1) < R;
}

} // namespace detail

// --- congruence counting ------------------------------------------------------

// number of residue vectors x mod g with F(hx+b) = 0 mod g
inline Int count_congruence_M(const FormSystem& FS, const Poly& g, Budget& budget) {
    if (g.is_zero() || g.lead() != 1) throw std::invalid_argument("congruence count needs a monic modulus");
    if (g.deg() == 0) return 1;
    std::map<std::vector<std::uint64_t>, Int> hist = value_histogram(FS, g, budget);
    auto it = hist.find(std::vector<std::uint64_t>(FS.R, 0));
    return it == hist.end() ? Int(0) : it->second;
}

struct LocalIdentity {
    Int lhs = 0;
    Rat rhs = 0;
};

// M(pi^k) against |pi|^{k(s-R)} sum of A(pi^nu) for nu <= k: both sides exact,
// equality asserted.
inline LocalIdentity local_sum_identity_check(const FormSystem& FS, const Poly& pi, int k, Budget& budget) {
    const Fq& F = FS.F;
    if (k < 0) throw std::invalid_argument("level k must be nonnegative");
    if (pi.is_zero() || pi.lead() != 1 || (k > 0 && !is_irreducible(F, pi)))
        throw std::invalid_argument("identity check needs a monic irreducible modulus");
    LocalIdentity out;
    out.lhs = count_congruence_M(FS, detail::pi_power(F, pi, k), budget);
    Cyc acc = Cyc::zero(F.p);
    for (int nu = 0; nu <= k; ++nu) acc = acc + local_factor_A(FS, detail::pi_power(F, pi, nu), budget);
    out.rhs = Rat(detail::int_pow(F.q, (long long)k * pi.deg() * (FS.s - FS.R))) * acc.to_rat();
    if (Rat(out.lhs) != out.rhs) throw std::runtime_error("local solution count identity fails");
    return out;
}

struct LocalDensityTable {
    Poly pi;
    struct Row {
        int k = 0;
        Int M = 0;
        Rat normalized = 0;  // M(pi^k) |pi|^{-k(s-R)}
        Rat diff = 0;        // increment over the previous row, equals A(pi^k)
    };
    std::vector<Row> rows;
};

// densities at one place, k = 0..k_max.  The increments are checked against
// the local factors, which is the partial-sum identity in telescoped form.
inline LocalDensityTable local_density_table(const FormSystem& FS, const Poly& pi, int k_max, Budget& budget) {
    const Fq& F = FS.F;
    if (pi.is_zero() || pi.lead() != 1 || !is_irreducible(F, pi))
        throw std::invalid_argument("density table needs a monic irreducible modulus");
    if (k_max < 0) throw std::invalid_argument("k_max must be nonnegative");
    LocalDensityTable tab;
    tab.pi = pi;
    Rat prev = 0;
    for (int k = 0; k <= k_max; ++k) {
        LocalDensityTable::Row row;
        row.k = k;
        row.M = count_congruence_M(FS, detail::pi_power(F, pi, k), budget);
        row.normalized = Rat(row.M) / Rat(detail::int_pow(F.q, (long long)k * pi.deg() * (FS.s - FS.R)));
        row.diff = row.normalized - prev;
        if (row.diff != local_factor_A(FS, detail::pi_power(F, pi, k), budget).to_rat())
            throw std::runtime_error("local density increment disagrees with the local factor");
        prev = row.normalized;
        tab.rows.push_back(row);
    }
    return tab;
}

// --- Hensel lifting -------------------------------------------------------------

struct HenselReport {
    int l = 1;
    Int node_floor = 0;             // |pi|^{s-R}, the guaranteed children per node
    std::vector<Int> level_nodes;   // distinct solutions mod pi^{2l-1+nu}, nu = 0..nu_max
    std::vector<Int> min_children;  // smallest child count over the nodes of each level
};

// Start from a witness x mod pi^{2l-1} solving F(hx+b) = 0 whose Jacobian
// vanishes mod pi^{l-1} but has full rank mod pi^l.  Each lift level adjoins
// pi^{l+nu} v with v mod pi and keeps the solutions of the congruence one
// power higher; every node must produce at least |pi|^{s-R} children.
inline HenselReport hensel_lift(const FormSystem& FS, const Poly& pi, std::vector<Poly> x0, int l, int nu_max,
                                Budget& budget) {
    const Fq& F = FS.F;
    if (pi.is_zero() || pi.lead() != 1 || !is_irreducible(F, pi))
        throw std::invalid_argument("hensel lifting needs a monic irreducible modulus");
    if (l < 1) throw std::invalid_argument("witness level l must be positive");
    if (nu_max < 0) throw std::invalid_argument("lift depth must be nonnegative");
    if ((int)x0.size() != FS.s) throw std::invalid_argument("point arity != s");

    Poly m0 = detail::pi_power(F, pi, 2 * l - 1);
    for (Poly& xi : x0) xi = mod(F, xi, m0);
    for (const Poly& v : FS.evaluate(x0, true))
        if (!mod(F, v, m0).is_zero())
            throw std::invalid_argument("witness does not solve the congruences mod pi^(2l-1)");
    if (!detail::rank_window_holds(F, FS.jacobian(x0, true), pi, l))
        throw std::invalid_argument("witness Jacobian rank window fails");

    HenselReport rep;
    rep.l = l;
    rep.node_floor = detail::int_pow(F.q, (long long)pi.deg() * (FS.s - FS.R));
    rep.level_nodes = {Int(1)};

    std::vector<std::vector<Poly>> nodes = {x0};
    std::uint64_t vper = detail::checked_pow(F.q, pi.deg(), budget);
    for (int nu = 0; nu < nu_max; ++nu) {
        Poly step = detail::pi_power(F, pi, l + nu);
        Poly target = detail::pi_power(F, pi, 2 * l + nu);
        std::vector<std::vector<Poly>> next;
        std::set<std::vector<std::uint64_t>> seen;
        Int level_min = -1;
        for (const std::vector<Poly>& y : nodes) {
            Int children = 0;
            std::vector<std::uint64_t> ranks(FS.s, 0);
            std::vector<Poly> cand(FS.s);
            while (true) {
                budget.charge(1);
                for (int j = 0; j < FS.s; ++j)
                    cand[j] = mod(F, add(F, y[j], mul(F, step, poly_of_rank(F, ranks[j]))), target);
                bool solves = true;
                for (const Poly& v : FS.evaluate(cand, true))
                    if (!mod(F, v, target).is_zero()) { solves = false; break; }
                if (solves && detail::rank_window_holds(F, FS.jacobian(cand, true), pi, l)) {
                    children += 1;
                    std::vector<std::uint64_t> key(FS.s);
                    for (int j = 0; j < FS.s; ++j) key[j] = rank_of_poly(F, cand[j]);
                    if (seen.insert(key).second) next.push_back(cand);
                }
                int j = 0;
                while (j < FS.s && ++ranks[j] == vper) ranks[j++] = 0;
                if (j == FS.s) break;
            }
            if (children < rep.node_floor)
                throw std::runtime_error("hensel node has fewer lifts than the guaranteed floor");
            if (level_min < 0 || children < level_min) level_min = children;
        }
        nodes.swap(next);
        rep.level_nodes.push_back(Int((long long)nodes.size()));
        rep.min_children.push_back(level_min);
    }
    return rep;
}

struct LocalWitness {
    std::vector<Poly> x;
    int l = 1;
};

// search residues mod pi^{2l-1} for a hensel witness, raising l until the
// modulus exponent passes search_depth.  Exhaustion is reported as absence,
// which proves nothing beyond the searched depth.
inline std::optional<LocalWitness> find_nonsingular_local_point(const FormSystem& FS, const Poly& pi,
                                                                int search_depth, Budget& budget) {
    const Fq& F = FS.F;
    if (pi.is_zero() || pi.lead() != 1 || !is_irreducible(F, pi))
        throw std::invalid_argument("witness search needs a monic irreducible modulus");
    if (search_depth < 1) throw std::invalid_argument("search depth must be positive");
    for (int l = 1; 2 * l - 1 <= search_depth; ++l) {
        Poly m = detail::pi_power(F, pi, 2 * l - 1);
        std::uint64_t per = detail::checked_pow(F.q, m.deg(), budget);
        std::vector<std::uint64_t> ranks(FS.s, 0);
        std::vector<Poly> x(FS.s);
        while (true) {
            budget.charge(1);
            for (int j = 0; j < FS.s; ++j) x[j] = poly_of_rank(F, ranks[j]);
            bool solves = true;
            for (const Poly& v : FS.evaluate(x, true))
                if (!mod(F, v, m).is_zero()) { solves = false; break; }
            if (solves && detail::rank_window_holds(F, FS.jacobian(x, true), pi, l))
                return LocalWitness{x, l};
            int j = 0;
            while (j < FS.s && ++ranks[j] == per) ranks[j++] = 0;
            if (j == FS.s) break;
        }
    }
    return std::nullopt;
}

// --- singular series ------------------------------------------------------------

enum class SeriesMode { direct, euler };

struct SeriesPartial {
    Rat value = 0;
    Rat tail_exponent = 0;  // R + 1 - K/(R(d-1)); the tail shrinks only if negative
    bool tail_vacuous = false;
};

// direct: sum of A(g) over monic |g| < q^Y.  euler: product of truncated local
// factors 1 + A(pi) + ... + A(pi^k_max) over monic irreducible pi of degree up
// to the cutoff.  Either way the value is an exact rational.
inline SeriesPartial singular_series_partial(const FormSystem& FS, int Y, SeriesMode mode, Budget& budget,
                                             int prime_degree_cutoff = 0, int k_max = 0) {
    const Fq& F = FS.F;
    SeriesPartial out;
    Rat K = Rat(FS.s - FS.sing_dim, 1LL << (FS.d - 1));
    out.tail_exponent = Rat(FS.R + 1) - K / Rat((long long)FS.R * (FS.d - 1));
    out.tail_vacuous = !(K > Rat((long long)FS.R * (FS.R + 1) * (FS.d - 1)));
    if (mode == SeriesMode::direct) {
        if (Y < 1) throw std::invalid_argument("direct sum needs Y >= 1");
        Cyc acc = Cyc::zero(F.p);
        for (int n = 0; n < Y; ++n)
            for (const Poly& g : monic_of_degree(F, n)) acc = acc + local_factor_A(FS, g, budget);
        out.value = acc.to_rat();
    } else {
        if (prime_degree_cutoff < 1 || k_max < 1)
            throw std::invalid_argument("euler mode needs a prime-degree cutoff and k_max");
        Rat prod = 1;
        for (int n = 1; n <= prime_degree_cutoff; ++n)
            for (const Poly& pi : monic_irreducible_of_degree(F, n)) {
                Cyc omega = Cyc::from_rat(F.p, 1);
                for (int nu = 1; nu <= k_max; ++nu)
                    omega = omega + local_factor_A(FS, detail::pi_power(F, pi, nu), budget);
                prod *= omega.to_rat();
            }
        out.value = prod;
    }
    return out;
}

} // namespace ffcm
