#pragma once
// Lattices over the Laurent field: exact basis reduction by polynomial column
// operations, successive minima, ball counting, adjoint duality, and the block
// lattice that controls counts of solutions to symmetric linear inequalities.

#include "ffcm/exp_sums.hpp"

#include <algorithm>
#include <functional>
#include <optional>
#include <utility>

namespace ffcm {

// A lattice is the integral span of the columns of an invertible matrix whose
// entries are exact finite Laurent polynomials.  After reduction the columns
// have pairwise distinct pivot rows (the first row attaining each column's top
// degree), so no integral combination can cancel every leading term: the norm
// of sum v_nu X^(nu) is exactly max |v_nu| q^(R_nu), and the sorted column
// degrees R_1 <= ... <= R_D are the successive minima.
struct LatticeBasis {
    int D = 0;
    std::vector<std::vector<Laur>> cols;  // cols[nu][u]: row u of column nu
    bool reduced = false;
    long long det_e = 0;      // exponent of |det|, cached by reduction
    std::vector<int> minima;  // minima exponents, ascending (reduced only)
    std::vector<int> pivot;   // pivot row of each reduced column

    static LatticeBasis make(int D, std::vector<std::vector<Laur>> columns) {
        if (D < 1) throw std::invalid_argument("lattice dimension must be positive");
        if ((int)columns.size() != D) throw std::invalid_argument("lattice needs D columns");
        for (const auto& col : columns) {
            if ((int)col.size() != D) throw std::invalid_argument("lattice columns must have D rows");
            for (const Laur& e : col)
                if (!e.exact) throw std::invalid_argument("lattice entries must be exact Laurent polynomials");
        }
        LatticeBasis out;
        out.D = D;
        out.cols = std::move(columns);
        return out;
    }
};

// sup norm of a vector, null for the zero vector
inline QMag vector_norm(const std::vector<Laur>& x) {
    QMag best = QMag::null();
    for (const Laur& e : x) {
        QMag v = abs_value(e);
        if (best < v) best = v;
    }
    return best;
}

inline std::vector<Laur> lattice_point(const Fq& F, const LatticeBasis& L, const std::vector<Poly>& v) {
    if ((int)v.size() != L.D) throw std::invalid_argument("coefficient arity != D");
    std::vector<Laur> x(L.D, Laur::zero());
    for (int nu = 0; nu < L.D; ++nu) {
        if (v[nu].is_zero()) continue;
        Laur w = Laur::from_poly(v[nu]);
        for (int u = 0; u < L.D; ++u) x[u] = add(F, x[u], mul(F, w, L.cols[nu][u]));
    }
    return x;
}

// exact determinant by cofactor expansion; fine at the dimensions used here
inline Laur determinant(const Fq& F, const LatticeBasis& L, Budget& budget) {
    std::vector<int> rows(L.D);
    for (int u = 0; u < L.D; ++u) rows[u] = u;
    // expand along column nu over the still-unused rows
    std::function<Laur(int, const std::vector<int>&)> expand = [&](int nu, const std::vector<int>& live) -> Laur {
        budget.charge((std::uint64_t)live.size() + 1);
        if (live.empty()) return Laur::from_poly(Poly::konst(1));
        Laur acc = Laur::zero();
        for (std::size_t k = 0; k < live.size(); ++k) {
            int u = live[k];
            if (L.cols[nu][u].known_zero()) continue;
            std::vector<int> rest = live;
            rest.erase(rest.begin() + k);
            Laur term = mul(F, L.cols[nu][u], expand(nu + 1, rest));
            if (k % 2 == 1) term = neg(F, term);
            acc = add(F, acc, term);
        }
        return acc;
    };
    return expand(0, rows);
}

inline long long det_exponent(const Fq& F, const LatticeBasis& L, Budget& budget) {
    QMag m = abs_value(determinant(F, L, budget));
    if (m.zero) throw std::invalid_argument("singular matrix");
    return m.e;
}

namespace detail {

// one nonzero kernel vector of a matrix over F_q, or nullopt if none exists;
// the first free column is set to one, making the choice deterministic
inline std::optional<std::vector<fel>> kernel_vector(const Fq& F, std::vector<std::vector<fel>>& m, int cols) {
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
    int free_col = 0;
    while (free_col < cols && std::find(pivot_col.begin(), pivot_col.end(), free_col) != pivot_col.end()) ++free_col;
    if (free_col == cols) return std::nullopt;
    std::vector<fel> x(cols, 0);
    x[free_col] = 1;
    for (std::size_t k = 0; k < pivot_col.size(); ++k) x[pivot_col[k]] = F.neg(m[k][free_col]);
    return x;
}

}  // namespace detail

// Column reduction.  A global t-power scale makes every entry polynomial
// (scaling the whole lattice shifts all minima uniformly); repeated
// subtraction of monomial column multiples removes pivot-row collisions.
// Each step either lowers a column degree or, at constant degree, moves that
// column's pivot strictly down (rows above a shared pivot sit below the top
// degree in both columns), so the loop terminates.  Columns then sort by
// (degree, pivot row) and scale back.
inline LatticeBasis reduce_basis(const Fq& F, const LatticeBasis& L, Budget& budget) {
    long long de = det_exponent(F, L, budget);  // rejects singular input

    int k = 0;
    for (const auto& col : L.cols)
        for (const Laur& e : col)
            if (!e.known_zero()) k = std::max(k, -e.lo);

    std::vector<std::vector<Poly>> P(L.D, std::vector<Poly>(L.D));
    for (int nu = 0; nu < L.D; ++nu)
        for (int u = 0; u < L.D; ++u) {
            Laur s = mul(F, L.cols[nu][u], Laur::t_power(k));
            Poly p;
            if (!s.known_zero()) {
                p.c.assign(s.hi() + 1, 0);
                for (int e = std::max(s.lo, 0); e <= s.hi(); ++e) p.c[e] = s.coeff_at(e);
                p.trim();
            }
            P[nu][u] = p;
        }

    std::vector<int> deg(L.D), piv(L.D);
    auto rescan = [&](int nu) {
        deg[nu] = -1;
        piv[nu] = -1;
        for (int u = 0; u < L.D; ++u)
            if (!P[nu][u].is_zero() && P[nu][u].deg() > deg[nu]) {
                deg[nu] = P[nu][u].deg();
                piv[nu] = u;
            }
        if (deg[nu] < 0) throw std::runtime_error("column vanished while reducing a nonsingular matrix");
    };
    for (int nu = 0; nu < L.D; ++nu) rescan(nu);

    for (;;) {
        int row = -1;
        for (int r = 0; r < L.D && row < 0; ++r) {
            int seen = 0;
            for (int nu = 0; nu < L.D; ++nu) seen += piv[nu] == r;
            if (seen > 1) row = r;
        }
        if (row < 0) break;
        int a = -1, b = -1;
        for (int nu = 0; nu < L.D; ++nu)
            if (piv[nu] == row && (a < 0 || deg[nu] < deg[a])) a = nu;
        for (int nu = 0; nu < L.D; ++nu)
            if (piv[nu] == row && nu != a && (b < 0 || deg[nu] > deg[b])) b = nu;
        fel w = F.mul(P[b][row].lead(), F.inv(P[a][row].lead()));
        int sh = deg[b] - deg[a];
        for (int u = 0; u < L.D; ++u) P[b][u] = sub(F, P[b][u], mul_scalar(F, shift_t(P[a][u], sh), w));
        budget.charge((std::uint64_t)L.D);
        rescan(b);
    }

    std::vector<int> order(L.D);
    for (int nu = 0; nu < L.D; ++nu) order[nu] = nu;
    std::sort(order.begin(), order.end(),
              [&](int x, int y) { return deg[x] != deg[y] ? deg[x] < deg[y] : piv[x] < piv[y]; });

    LatticeBasis out;
    out.D = L.D;
    out.cols.assign(L.D, std::vector<Laur>(L.D, Laur::zero()));
    out.reduced = true;
    out.det_e = de;
    out.minima.resize(L.D);
    out.pivot.resize(L.D);
    for (int nu = 0; nu < L.D; ++nu) {
        int src = order[nu];
        for (int u = 0; u < L.D; ++u) out.cols[nu][u] = mul(F, Laur::from_poly(P[src][u]), Laur::t_power(-k));
        out.minima[nu] = deg[src] - k;
        out.pivot[nu] = piv[src];
    }
    return out;
}

struct MinkowskiReport {
    long long det_e = 0;
    std::vector<int> minima;
};

// the product of the successive minima must equal the determinant exactly
inline MinkowskiReport minkowski_audit(const Fq& F, const LatticeBasis& L, Budget& budget) {
    LatticeBasis r = L.reduced ? L : reduce_basis(F, L, budget);
    long long sum = 0;
    for (int m : r.minima) sum += m;
    if (sum != r.det_e) throw std::runtime_error("successive minima product differs from the lattice determinant");
    return {r.det_e, r.minima};
}

// Constructive counterpart of the box-point existence theorem: a box centered
// at zero with volume exceeding the determinant contains a nonzero lattice
// point, found here by solving for coefficient vectors whose image vanishes
// at and above every box radius.  Any box point has coefficient degrees
// bounded by the largest radius minus the matching minimum, so the solve
// space covers the whole intersection and emptiness is a broken invariant.
inline std::vector<Laur> nonzero_point_in_box(const Fq& F, const LatticeBasis& L, const Box& box, Budget& budget) {
    LatticeBasis r = L.reduced ? L : reduce_basis(F, L, budget);
    if (box.dim() != r.D) throw std::invalid_argument("box dimension != D");
    for (const Laur& c : box.center)
        if (!c.known_zero()) throw std::invalid_argument("box must be centered at zero");
    long long vol = 0;
    int rho_max = box.radius_e[0];
    for (int e : box.radius_e) {
        vol += e;
        rho_max = std::max(rho_max, e);
    }
    if (!(vol > r.det_e)) throw std::invalid_argument("box volume must exceed the lattice determinant");

    std::vector<int> cap(r.D);
    std::vector<std::pair<int, int>> unknowns;  // (column, coefficient exponent)
    for (int nu = 0; nu < r.D; ++nu) {
        cap[nu] = rho_max - 1 - r.minima[nu];
        for (int j = 0; j <= cap[nu]; ++j) unknowns.push_back({nu, j});
    }

    std::vector<std::vector<fel>> m;
    for (int u = 0; u < r.D; ++u) {
        int top = box.radius_e[u] - 1;
        for (int nu = 0; nu < r.D; ++nu)
            if (cap[nu] >= 0 && !r.cols[nu][u].known_zero()) top = std::max(top, cap[nu] + r.cols[nu][u].hi());
        for (int e = box.radius_e[u]; e <= top; ++e) {
            std::vector<fel> row(unknowns.size());
            for (std::size_t w = 0; w < unknowns.size(); ++w)
                row[w] = r.cols[unknowns[w].first][u].coeff_at(e - unknowns[w].second);
            m.push_back(row);
        }
    }
    budget.charge((std::uint64_t)m.size() * ((std::uint64_t)unknowns.size() + 1));

    auto sol = detail::kernel_vector(F, m, (int)unknowns.size());
    if (!sol) throw std::runtime_error("no lattice point found inside a box exceeding the determinant");
    std::vector<Poly> v(r.D);
    for (std::size_t w = 0; w < unknowns.size(); ++w) {
        auto [nu, j] = unknowns[w];
        if ((*sol)[w] == 0) continue;
        if ((int)v[nu].c.size() <= j) v[nu].c.resize(j + 1, 0);
        v[nu].c[j] = (*sol)[w];
    }
    for (Poly& p : v) p.trim();

    std::vector<Laur> x = lattice_point(F, r, v);
    if (vector_norm(x).zero) throw std::runtime_error("kernel vector produced the zero lattice point");
    for (int u = 0; u < r.D; ++u)
        if (!x[u].known_zero() && x[u].hi() >= box.radius_e[u])
            throw std::runtime_error("constructed point escapes the box");
    return x;
}

struct BallCount {
    Int formula;
    Int enumerated;
};

// #{x in lattice : |x| < q^U} two ways: the closed form from the minima, and
// an enumeration over reduced-basis coefficients with one digit of margin
// beyond the range the formula predicts (a cancellation bug would surface as
// extra points on the margin layer)
inline BallCount count_ball(const Fq& F, const LatticeBasis& L, int U, Budget& budget) {
    if (!L.reduced) {
        LatticeBasis r = reduce_basis(F, L, budget);
        return count_ball(F, r, U, budget);
    }
    Int formula = 1;
    for (int R : L.minima)
        if (R <= U) formula *= detail::int_pow(F.q, U - R);

    std::uint64_t total = 1;
    std::vector<int> digits(L.D);
    for (int nu = 0; nu < L.D; ++nu) {
        digits[nu] = std::max(0, U - L.minima[nu] + 1);
        std::uint64_t per = detail::checked_pow(F.q, digits[nu], budget);
        if (total > budget.limit() / per) throw budget_error(budget.limit() + 1, budget.limit());
        total *= per;
    }
    budget.require(total);

    Int enumerated = 0;
    QMag bound = QMag::qpow(U);
    for (std::uint64_t rep = 0; rep < total; ++rep) {
        budget.charge(1);
        std::uint64_t rest = rep;
        std::vector<Poly> v(L.D);
        for (int nu = 0; nu < L.D; ++nu) {
            v[nu].c.assign(std::max(digits[nu], 1), 0);
            for (int j = 0; j < digits[nu]; ++j) {
                v[nu].c[j] = F.from_int((int)(rest % F.q));
                rest /= F.q;
            }
            v[nu].trim();
        }
        if (vector_norm(lattice_point(F, L, v)) < bound) ++enumerated;
    }
    return {formula, enumerated};
}

namespace detail {

// cofactor matrix entry: sign times the minor with row u and column nu removed
inline Laur lattice_cofactor(const Fq& F, const LatticeBasis& L, int u, int nu, Budget& budget) {
    LatticeBasis minor;
    minor.D = L.D - 1;
    for (int c = 0; c < L.D; ++c) {
        if (c == nu) continue;
        std::vector<Laur> col;
        for (int r = 0; r < L.D; ++r)
            if (r != u) col.push_back(L.cols[c][r]);
        minor.cols.push_back(std::move(col));
    }
    Laur d = minor.D == 0 ? Laur::from_poly(Poly::konst(1)) : determinant(F, minor, budget);
    return (u + nu) % 2 == 1 ? neg(F, d) : d;
}

}  // namespace detail

// The adjoint lattice (inverse-transpose).  Its defining identity
// Lambda^T adj = det I is asserted in exact arithmetic, and its minima must
// mirror the original's: R_nu + S_{D-nu+1} = 0.  The literal basis is
// returned when the determinant divides every cofactor, which holds whenever
// the determinant is a monomial (every lattice the harness builds); otherwise
// only the minima are reported, read off the det-scaled adjoint, whose
// entries always stay finite.
struct AdjointDuality {
    std::optional<LatticeBasis> M;  // reduced inverse-transpose, when representable
    std::vector<int> minima;        // minima exponents of the adjoint, ascending
};

inline AdjointDuality adjoint(const Fq& F, const LatticeBasis& L, Budget& budget) {
    LatticeBasis r = L.reduced ? L : reduce_basis(F, L, budget);
    Laur det = determinant(F, r, budget);
    if (abs_value(det).zero) throw std::invalid_argument("singular matrix");

    // C = cofactor matrix of r, so that r^T C = det I
    std::vector<std::vector<Laur>> C(r.D, std::vector<Laur>(r.D));
    for (int nu = 0; nu < r.D; ++nu)
        for (int u = 0; u < r.D; ++u) C[nu][u] = detail::lattice_cofactor(F, r, u, nu, budget);
    for (int i = 0; i < r.D; ++i)
        for (int j = 0; j < r.D; ++j) {
            Laur dot = Laur::zero();
            for (int u = 0; u < r.D; ++u) dot = add(F, dot, mul(F, r.cols[i][u], C[j][u]));
            if (!(dot == (i == j ? det : Laur::zero()))) throw std::runtime_error("adjugate identity fails");
        }

    // exact division of each cofactor by the determinant, in polynomial form;
    // the scaled determinant has nonzero constant term, so divisibility in
    // the Laurent ring reduces to plain polynomial divisibility
    Poly detp;
    detp.c.assign(det.c.begin(), det.c.end());
    bool literal = true;
    std::vector<std::vector<Laur>> Mcols(r.D, std::vector<Laur>(r.D, Laur::zero()));
    for (int nu = 0; nu < r.D && literal; ++nu)
        for (int u = 0; u < r.D && literal; ++u) {
            if (C[nu][u].known_zero()) continue;
            Poly num;
            num.c.assign(C[nu][u].c.begin(), C[nu][u].c.end());
            auto [quo, rem] = divmod(F, num, detp);
            if (!rem.is_zero()) literal = false;
            else Mcols[nu][u] = mul(F, Laur::from_poly(quo), Laur::t_power(C[nu][u].lo - det.lo));
        }

    AdjointDuality out;
    if (literal) {
        LatticeBasis M = reduce_basis(F, LatticeBasis::make(r.D, std::move(Mcols)), budget);
        out.minima = M.minima;
        // pairings of basis vectors across the two lattices land in A
        for (int i = 0; i < r.D; ++i)
            for (int j = 0; j < r.D; ++j) {
                Laur dot = Laur::zero();
                for (int u = 0; u < r.D; ++u) dot = add(F, dot, mul(F, r.cols[i][u], M.cols[j][u]));
                for (int e = dot.lo; e <= -1; ++e)
                    if (dot.coeff_at(e) != 0) throw std::runtime_error("adjoint basis pairing is not integral");
            }
        out.M = std::move(M);
    } else {
        // det-scaled adjoint: minima shift uniformly by the determinant exponent
        LatticeBasis S = reduce_basis(F, LatticeBasis::make(r.D, std::move(C)), budget);
        out.minima.resize(r.D);
        for (int nu = 0; nu < r.D; ++nu) out.minima[nu] = (int)(S.minima[nu] - r.det_e);
    }
    for (int nu = 0; nu < r.D; ++nu)
        if (r.minima[nu] + out.minima[r.D - 1 - nu] != 0) throw std::runtime_error("adjoint duality fails");
    return out;
}

// the 2s-dimensional block lattice [[t^-b I, 0], [t^b gamma, t^b I]] attached
// to a symmetric matrix; it is its own adjoint up to sign and coordinate
// swaps, so its minima must satisfy R_nu + R_{2s-nu+1} = 0
inline LatticeBasis build_weyl_lattice(const Fq& F, const std::vector<std::vector<Laur>>& gamma, int b,
                                       Budget& budget) {
    int s = (int)gamma.size();
    if (s < 1) throw std::invalid_argument("need a nonempty symmetric matrix");
    for (const auto& row : gamma) {
        if ((int)row.size() != s) throw std::invalid_argument("gamma must be square");
        for (const Laur& e : row)
            if (!e.exact) throw std::invalid_argument("gamma entries must be exact Laurent polynomials");
    }
    for (int i = 0; i < s; ++i)
        for (int j = i + 1; j < s; ++j)
            if (!(gamma[i][j] == gamma[j][i])) throw std::invalid_argument("gamma must be symmetric");

    std::vector<std::vector<Laur>> cols(2 * s, std::vector<Laur>(2 * s, Laur::zero()));
    for (int i = 0; i < s; ++i) {
        cols[i][i] = Laur::t_power(-b);
        for (int j = 0; j < s; ++j) cols[i][s + j] = mul(F, gamma[j][i], Laur::t_power(b));
        cols[s + i][s + i] = Laur::t_power(b);
    }
    LatticeBasis L = reduce_basis(F, LatticeBasis::make(2 * s, std::move(cols)), budget);
    for (int nu = 0; nu < 2 * s; ++nu)
        if (L.minima[nu] + L.minima[2 * s - 1 - nu] != 0)
            throw std::runtime_error("block lattice self-duality fails");
    return L;
}

// #{u in A^2s : |u_i| < q^(a+Z) for i <= s, |L_i(u) + u_{s+i}| < q^(Z-a)}
// where L_i(u) = sum_j gamma_ij u_j.  The trailing variables only shift the
// polynomial part of L_i, so they contribute a closed-form factor per prefix
// and only u_1..u_s are enumerated.
inline Int weyl_inequality_count(const Fq& F, const std::vector<std::vector<Laur>>& gamma, const Rat& a, const Rat& Z,
                                 Budget& budget) {
    int s = (int)gamma.size();
    if (s < 1) throw std::invalid_argument("need a nonempty symmetric matrix");
    for (const auto& row : gamma)
        if ((int)row.size() != s) throw std::invalid_argument("gamma must be square");

    long long cap = detail::int_below(a + Z);
    int digits = (int)std::max(0LL, cap + 1);
    std::uint64_t total = detail::checked_pow(F.q, (long long)s * digits, budget);
    budget.require(total);

    Int tail = detail::int_pow(F.q, std::max(0LL, detail::int_below(Z - a) + 1));
    Int count = 0;
    for (std::uint64_t rep = 0; rep < total; ++rep) {
        budget.charge(1);
        std::uint64_t rest = rep;
        std::vector<Poly> u(s);
        for (int i = 0; i < s; ++i) {
            u[i].c.assign(std::max(digits, 1), 0);
            for (int j = 0; j < digits; ++j) {
                u[i].c[j] = F.from_int((int)(rest % F.q));
                rest /= F.q;
            }
            u[i].trim();
        }
        bool ok = true;
        for (int i = 0; i < s && ok; ++i) {
            Laur Li = Laur::zero();
            for (int j = 0; j < s; ++j) Li = add(F, Li, mul(F, gamma[i][j], Laur::from_poly(u[j])));
            ok = norm_less_than(Li, Z - a);
        }
        if (ok) count += tail;
    }
    return count;
}

}  // namespace ffcm
