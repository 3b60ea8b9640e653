#pragma once
// Dirichlet approximation, membership in the two major-arc families, the
// pruning schedule with its exponent ledger, and the exact factorization of
// the generating sum on a major arc.

#include "ffcm/exp_sums.hpp"

#include <optional>

namespace ffcm {

namespace detail {

// |x| < q^thr, scanning only coefficients at exponents >= thr; unknown
// coefficients in that range raise precision_error
inline bool abs_below(const Laur& x, long long thr) {
    if (x.known_zero()) return true;
    for (long long e = thr; e <= x.hi(); ++e)
        if (x.coeff_at((int)e) != 0) return false;
    return true;
}

} // namespace detail

// --- Dirichlet approximation ---------------------------------------------------

// Simultaneous rational approximation: for alpha in K_inf^R and Y >= 0 there
// is a/g with g monic, gcd(a_1, ..., a_R, g) = 1, |g| <= q^Y and
// |g alpha - a|^R < q^{-Y}.  With N = floor(Y/R), vanishing of the t^{-l}
// coefficients (1 <= l <= N) of every fractional part {g alpha_i} imposes NR
// homogeneous linear conditions on the NR+1 coefficients of g, so a nonzero g
// exists; the first free column of the reduced system is set to one, which
// makes the output deterministic.  Integral parts survive normalization, so
// integral alpha comes back as (1, alpha).
inline RationalTuple dirichlet_approx(const Fq& F, const std::vector<Laur>& alpha, const Rat& Y) {
    if (alpha.empty()) throw std::invalid_argument("dirichlet approximation needs at least one component");
    if (Y < 0) throw std::invalid_argument("dirichlet approximation needs Y >= 0");
    int R = (int)alpha.size();
    long long N = detail::floor_rat(Y / R);
    int cols = (int)(N * (long long)R) + 1;

    std::vector<std::vector<fel>> m;
    for (int i = 0; i < R; ++i)
        for (long long l = 1; l <= N; ++l) {
            std::vector<fel> row(cols);
            for (int j = 0; j < cols; ++j) row[j] = alpha[i].coeff_at((int)(-l - j));
            m.push_back(row);
        }

    // reduced echelon form, pivot columns in increasing order
    std::vector<int> pivot_col;
    int rk = 0;
    for (int c = 0; c < cols && rk < (int)m.size(); ++c) {
        int pr = -1;
        for (int i = rk; i < (int)m.size(); ++i)
            if (m[i][c] != 0) { pr = i; break; }
        if (pr < 0) continue;
        std::swap(m[rk], m[pr]);
        fel u = F.inv(m[rk][c]);
        for (int j = c; j < cols; ++j) m[rk][j] = F.mul(u, m[rk][j]);
        for (int i = 0; i < (int)m.size(); ++i) {
            if (i == rk || m[i][c] == 0) continue;
            fel f = m[i][c];
            for (int j = c; j < cols; ++j) m[i][j] = F.sub(m[i][j], F.mul(f, m[rk][j]));
        }
        pivot_col.push_back(c);
        ++rk;
    }

    // at most NR pivots among NR+1 columns, so a free column always exists
    int free_col = 0;
    while (std::find(pivot_col.begin(), pivot_col.end(), free_col) != pivot_col.end()) ++free_col;
    std::vector<fel> gc(cols, 0);
    gc[free_col] = 1;
    for (std::size_t k = 0; k < pivot_col.size(); ++k) gc[pivot_col[k]] = F.neg(m[k][free_col]);
    Poly g;
    g.c = gc;
    g.trim();

    std::vector<Poly> a(R);
    std::vector<Laur> w(R);
    for (int i = 0; i < R; ++i) {
        Laur gi = mul(F, Laur::from_poly(g), alpha[i]);
        Poly ai;
        ai.c.assign(std::max(gi.hi() + 1, 0), 0);
        for (int e = 0; e <= gi.hi(); ++e) ai.c[e] = gi.coeff_at(e);
        ai.trim();
        a[i] = ai;
        w[i] = sub(F, gi, Laur::from_poly(ai));
    }

    // both stated bounds hold by construction; failure is a broken invariant,
    // not bad input (|g alpha - a| < q^{-N} forces |.|^R <= q^{-R(N+1)} < q^{-Y})
    if (Rat(g.deg()) > Y) throw std::runtime_error("dirichlet denominator exceeds its degree bound");
    for (int i = 0; i < R; ++i)
        if (!detail::abs_below(w[i], -N)) throw std::runtime_error("dirichlet approximation misses its quality bound");

    Poly c = g;
    for (const Poly& ai : a) c = gcd(F, c, ai);
    if (c.deg() > 0) {
        g = divmod(F, g, c).first;
        for (Poly& ai : a) ai = divmod(F, ai, c).first;
    }
    fel u = F.inv(g.lead());
    if (u != 1) {
        g = mul_scalar(F, g, u);
        for (Poly& ai : a) ai = mul_scalar(F, ai, u);
    }
    return RationalTuple{std::move(a), std::move(g)};
}

// --- the pruning schedule and its exponents -------------------------------------

struct ArcParams {
    int s = 0, R = 0, d = 0, sing_dim = 0;
    int P = 0;
    int Delta = 0;    // max coefficient degree over the forms
    int h_degree = 0;
    int N = 0;        // box exponent fed to the factorization hypotheses
    Rat K;            // (s - sing_dim) / 2^{d-1}
    Rat k;            // s - sing_dim - R(R+1)(d-1) 2^{d-1}
    Rat L;            // differencing exponent, taken equal to K
    std::vector<Rat> thetas;   // theta_0 < ... < theta_T
    std::vector<Rat> delta_r;  // delta_0, ..., delta_{T-1}, delta_T
    Rat delta;                 // min over delta_r
    bool vacuous = false;      // K <= R(R+1)(d-1): no positive delta exists
};

// Build the theta schedule and all pruning exponents.  theta_0 and theta_T are
// forced; the interior points are uniformly spaced with T minimal against the
// gap condition, which keeps the construction deterministic.  The closed-form
// lower bound delta > (K - R(R+1)(d-1)) / (4R(d-1)) is asserted, never assumed.
inline ArcParams exponent_ledger(const Fq& F, int s, int R, int d, int sing_dim, int P, int Delta, int N,
                                 int h_degree) {
    if (R < 1 || s < R) throw std::invalid_argument("need s >= R >= 1");
    if (d < 2) throw std::invalid_argument("need degree d >= 2");
    if (F.p <= d) throw std::invalid_argument("pruning schedule needs p > d");
    if (sing_dim < 0 || sing_dim > s) throw std::invalid_argument("singular dimension out of range");
    if (P < 1) throw std::invalid_argument("need P >= 1");
    if (Delta < 0 || h_degree < 0 || N < 0) throw std::invalid_argument("negative exponent parameter");

    ArcParams out;
    out.s = s;
    out.R = R;
    out.d = d;
    out.sing_dim = sing_dim;
    out.P = P;
    out.Delta = Delta;
    out.h_degree = h_degree;
    out.N = N;
    out.K = Rat(s - sing_dim, 1LL << (d - 1));
    out.k = Rat(s - sing_dim) - Rat((long long)R * (R + 1) * (d - 1) * (1LL << (d - 1)));
    out.L = out.K;

    Rat th0(1, 2LL * R * (d - 1));
    Rat thT((long long)d, (long long)(R + 1) * (d - 1));
    Rat bound((long long)R * (R + 1) * (d - 1));
    if (!(out.K > bound)) {
        out.vacuous = true;
        out.thetas = {th0, thT};
        out.delta = 0;
        return out;
    }

    Rat gap_cap = (Rat(1) - bound / out.K) * th0 / 2;
    long long T = detail::floor_rat((thT - th0) / gap_cap) + 1;
    for (long long r = 0; r <= T; ++r) out.thetas.push_back(th0 + Rat(r) * (thT - th0) / Rat(T));
    for (long long r = 0; r < T; ++r) {
        Rat dr = out.K * out.thetas[r] - bound * out.thetas[r + 1];
        if (!(dr > 0)) throw std::runtime_error("pruning schedule produced a nonpositive exponent");
        out.delta_r.push_back(dr);
    }
    out.delta_r.push_back(out.K * thT - Rat((long long)R * d));
    out.delta = out.delta_r[0];
    for (const Rat& dr : out.delta_r) out.delta = std::min(out.delta, dr);
    if (!(out.delta > (out.K - bound) / Rat(4LL * R * (d - 1))))
        throw std::runtime_error("pruning exponent fails its closed-form lower bound");
    return out;
}

// --- arc membership --------------------------------------------------------------

enum class ArcFamily { M_theta, N_arcs };

// Decide whether alpha lies in M(theta) or in the union of the N arcs, and
// return the canonical witnessing a/g if so.  The N family always uses
// theta_0 from the schedule.  The candidate is the Dirichlet approximation at
// the family's degree cap rather than a scan over all denominators; at the
// scales exercised here the two agree (the tests compare against full scans).
inline std::optional<RationalTuple> arc_membership(const Fq& F, const std::vector<Laur>& alpha,
                                                   const ArcParams& params, ArcFamily family, Rat theta = Rat(0)) {
    if ((int)alpha.size() != params.R) throw std::invalid_argument("alpha arity != R");
    for (const Laur& ai : alpha)
        if (!ai.known_zero() && ai.hi() >= 0) throw std::invalid_argument("arc membership expects alpha in the torus");
    if (family == ArcFamily::N_arcs) theta = params.thetas.front();
    if (!(theta > 0)) throw std::invalid_argument("theta must be positive");

    Rat g_exp = Rat((long long)params.R * (params.d - 1)) * theta * params.P;
    long long cap = detail::int_below(g_exp);
    if (cap < 0) return std::nullopt;  // no admissible denominator at all

    RationalTuple cand = dirichlet_approx(F, alpha, Rat((long long)params.R * cap));
    if (!(Rat(cand.g.deg()) < g_exp)) return std::nullopt;

    Rat thr = Rat(-params.Delta - (long long)params.d * params.h_degree)
              + (Rat(-params.d) + Rat((long long)params.R * (params.d - 1)) * theta) * Rat(params.P);
    if (family == ArcFamily::N_arcs) thr += cand.g.deg();
    long long thr_i = detail::ceil_rat(thr);
    for (int i = 0; i < params.R; ++i) {
        Laur w = sub(F, mul(F, Laur::from_poly(cand.g), alpha[i]), Laur::from_poly(cand.a[i]));
        if (!detail::abs_below(w, thr_i)) return std::nullopt;
    }
    return cand;
}

// --- major arc factorization ------------------------------------------------------

struct MajorArcFactorization {
    bool hypotheses_ok = false;
    Cyc lhs;  // T(alpha; n, B) enumerated directly
    Cyc rhs;  // q^{s(Q - deg g)} S(g, a) I(h^d n^d beta; B)
};

// Exact factorization of the generating sum for alpha = a/g + beta.  B must
// be a hypercube in T^s of sidelength q^{-M}; the hypotheses are
// deg g < Q - M and |g alpha - a| < q^{-Delta - d deg h + (1-d)Q} with
// Q = deg n.  When they fail the check is skipped and reported as such; when
// they hold, both sides are computed independently and must agree exactly.
inline MajorArcFactorization major_arc_factorization_check(const FormSystem& FS, const std::vector<Laur>& alpha,
                                                           const RationalTuple& frac, const Poly& n, const Box& B,
                                                           Budget& budget) {
    const Fq& F = FS.F;
    if ((int)alpha.size() != FS.R || frac.R() != FS.R) throw std::invalid_argument("alpha arity != R");
    if (B.dim() != FS.s) throw std::invalid_argument("box dimension != s");
    if (n.is_zero() || n.lead() != 1) throw std::invalid_argument("scaling polynomial must be monic");
    for (int u = 1; u < FS.s; ++u)
        if (B.radius_e[u] != B.radius_e[0]) throw std::invalid_argument("factorization box must be a hypercube");
    if (B.radius_e[0] > 0) throw std::invalid_argument("factorization box must fit inside the torus");
    for (const Laur& c : B.center)
        if (!c.known_zero() && c.hi() >= 0) throw std::invalid_argument("factorization box must fit inside the torus");

    int Q = n.deg();
    int M = -B.radius_e[0];

    MajorArcFactorization out;
    out.lhs = Cyc::zero(F.p);
    out.rhs = Cyc::zero(F.p);
    long long thr = -(long long)FS.delta_e - (long long)FS.d * FS.h.deg() + (long long)(1 - FS.d) * Q;
    bool ok = frac.g.deg() < Q - M;
    for (int i = 0; i < FS.R && ok; ++i) {
        Laur w = sub(F, mul(F, Laur::from_poly(frac.g), alpha[i]), Laur::from_poly(frac.a[i]));
        ok = detail::abs_below(w, thr);
    }
    out.hypotheses_ok = ok;
    if (!ok) return out;

    out.lhs = generating_sum_T(FS, alpha, n, B, budget);

    int box_top = -M - 1;
    for (const Laur& c : B.center)
        if (!c.known_zero()) box_top = std::max(box_top, c.hi());
    // beta needs enough window for every residue inside I(h^d n^d beta; B)
    int lo_b = -1 - FS.delta_e - FS.d * box_top - FS.d * (FS.h.deg() + Q) - 2;

    Poly scale = Poly::konst(1);
    for (int i = 0; i < FS.d; ++i) scale = mul(F, scale, FS.h);
    for (int i = 0; i < FS.d; ++i) scale = mul(F, scale, n);
    std::vector<Laur> gam(FS.R);
    for (int i = 0; i < FS.R; ++i) {
        Laur beta = sub(F, alpha[i], frac.component(F, i, lo_b));
        gam[i] = mul(F, Laur::from_poly(scale), beta);
    }

    Cyc fac = Cyc::from_rat(F.p, Rat(detail::int_pow(F.q, (long long)FS.s * (Q - frac.g.deg()))));
    out.rhs = fac * complete_sum_S(FS, frac.g, frac.a, SumMethod::factored, budget) * exp_integral_I(FS, gam, B, budget);
    if (out.lhs != out.rhs) throw std::runtime_error("major arc factorization identity fails");
    return out;
}

} // namespace ffcm
