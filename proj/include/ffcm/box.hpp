#pragma once

// Boxes in K_infinity^D and exact Haar integration of depth-bounded locally
// constant functions.
//
// A box is a product of balls |alpha_u - center_u| < q^(radius_e[u]) (an
// additive coset).  With the normalization vol(T) = 1, its volume is
// q^(sum radius_e).  A function of constancy depth m only reads coefficients
// at exponents >= -m, so the Haar integral is the exact finite average over
// representatives whose free coefficients run over exponents [-m, R_u - 1],
// scaled by the volume.  Every reported integral is audited by recomputing
// at depth m+1; disagreement means the declared depth was wrong and is an
// error, never a warning.

#include "ffcm/budget.hpp"
#include "ffcm/cyc.hpp"
#include "ffcm/laurent.hpp"

#include <functional>
#include <stdexcept>
#include <vector>

namespace ffcm {

struct Box {
    std::vector<Laur> center;  // exact Laurent numbers
    std::vector<int> radius_e; // per-coordinate radius exponent R_u

    int dim() const { return (int)center.size(); }

    static Box torus(int D) {  // T^D: |alpha_u| < 1
        Box b;
        b.center.assign(D, Laur::zero());
        b.radius_e.assign(D, 0);
        return b;
    }
    static Box ball(int D, int radius_exponent) {  // |alpha| < q^r coordinatewise
        Box b;
        b.center.assign(D, Laur::zero());
        b.radius_e.assign(D, radius_exponent);
        return b;
    }
    static Box around(std::vector<Laur> center, int radius_exponent) {
        Box b;
        b.radius_e.assign(center.size(), radius_exponent);
        b.center = std::move(center);
        return b;
    }

    long long volume_exponent() const {
        long long s = 0;
        for (int r : radius_e) s += r;
        return s;
    }
    Rat volume(int q) const { return QMag::qpow(volume_exponent()).to_rat(q); }

    bool contains(const Fq& F, const std::vector<Laur>& x) const {
        if ((int)x.size() != dim()) throw std::invalid_argument("dimension mismatch in box membership");
        for (int u = 0; u < dim(); ++u) {
            Laur d = sub(F, x[u], center[u]);
            if (!(abs_value(d) < QMag::qpow(radius_e[u]))) return false;
        }
        return true;
    }
};

namespace detail {

// Odometer over the free coefficient slots of a box at depth m.  Each slot is
// (coordinate, exponent); representatives are center + sum c_slot t^expo.
template <typename Fn>
void for_each_representative(const Fq& F, const Box& box, int m, Budget& budget, Fn&& visit) {
    struct Slot { int coord, expo; };
    std::vector<Slot> slots;
    for (int u = 0; u < box.dim(); ++u)
        for (int e = -m; e <= box.radius_e[u] - 1; ++e) slots.push_back({u, e});
    std::uint64_t total = 1;
    for (size_t i = 0; i < slots.size(); ++i) {
        if (total > budget.limit() / F.q) throw budget_error(budget.limit() + 1, budget.limit());
        total *= F.q;
    }
    budget.require(total);

    std::vector<fel> digit(slots.size(), 0);
    std::vector<Laur> point(box.center.begin(), box.center.end());
    while (true) {
        // build the representative for the current digits
        for (int u = 0; u < box.dim(); ++u) point[u] = box.center[u];
        for (size_t i = 0; i < slots.size(); ++i) {
            if (digit[i] == 0) continue;
            point[slots[i].coord] = add(F, point[slots[i].coord], Laur::t_power(slots[i].expo, digit[i]));
        }
        budget.charge(1);
        visit(point);
        size_t i = 0;
        while (i < digit.size()) {
            if (++digit[i] < F.q) break;
            digit[i] = 0;
            ++i;
        }
        if (i == digit.size()) break;
    }
}

inline std::uint64_t representative_count(const Fq& F, const Box& box, int m) {
    std::uint64_t total = 1;
    for (int u = 0; u < box.dim(); ++u)
        for (int e = -m; e <= box.radius_e[u] - 1; ++e) total *= F.q;
    return total;
}

} // namespace detail

// Exact Haar integral of a character-exponent integrand (the common case:
// f(alpha) = E(...) given by its exponent).  Exponent -1 in the callback
// means "the integrand contributes 0 there" and is not used by any caller
// yet; all paper integrands are characters, hence nonzero roots of unity.
inline Cyc integrate_box_char(const Fq& F, const std::function<int(const std::vector<Laur>&)>& exponent_of,
                              const Box& box, int m, Budget& budget) {
    if (m < 0) throw std::invalid_argument("constancy depth must be >= 0");
    std::vector<std::int64_t> hist(F.p, 0);
    detail::for_each_representative(F, box, m, budget, [&](const std::vector<Laur>& x) { hist[exponent_of(x)]++; });
    std::uint64_t grid = detail::representative_count(F, box, m);
    Rat scale = QMag::qpow(box.volume_exponent()).to_rat(F.q) / Rat(grid);
    return Cyc::from_hist(F.p, hist, scale);
}

// General exact Haar integral of a Cyc-valued depth-m integrand.
inline Cyc integrate_box(const Fq& F, const std::function<Cyc(const std::vector<Laur>&)>& f, const Box& box, int m,
                         Budget& budget) {
    if (m < 0) throw std::invalid_argument("constancy depth must be >= 0");
    Cyc sum = Cyc::zero(F.p);
    detail::for_each_representative(F, box, m, budget, [&](const std::vector<Laur>& x) { sum = sum + f(x); });
    std::uint64_t grid = detail::representative_count(F, box, m);
    Rat scale = QMag::qpow(box.volume_exponent()).to_rat(F.q) / Rat(grid);
    return sum.scaled(scale);
}

// Depth audit: the declared depth and depth+1 must agree exactly.
inline Cyc integrate_box_audited(const Fq& F, const std::function<Cyc(const std::vector<Laur>&)>& f, const Box& box,
                                 int m, Budget& budget) {
    Cyc at_m = integrate_box(F, f, box, m, budget);
    Cyc at_m1 = integrate_box(F, f, box, m + 1, budget);
    if (!(at_m == at_m1))
        throw std::runtime_error("refinement instability: declared constancy depth " + std::to_string(m)
                                 + " is insufficient for this integrand");
    return at_m;
}

inline Cyc integrate_box_char_audited(const Fq& F, const std::function<int(const std::vector<Laur>&)>& exponent_of,
                                      const Box& box, int m, Budget& budget) {
    Cyc at_m = integrate_box_char(F, exponent_of, box, m, budget);
    Cyc at_m1 = integrate_box_char(F, exponent_of, box, m + 1, budget);
    if (!(at_m == at_m1))
        throw std::runtime_error("refinement instability: declared constancy depth " + std::to_string(m)
                                 + " is insufficient for this integrand");
    return at_m;
}

// --- exact matrices over K_infinity (finite Laurent-polynomial entries) ----

using LaurMatrix = std::vector<std::vector<Laur>>;

inline Laur matrix_det(const Fq& F, const LaurMatrix& M) {
    int D = (int)M.size();
    if (D == 1) return M[0][0];
    Laur det = Laur::zero();
    for (int j = 0; j < D; ++j) {
        if (M[0][j].known_zero()) continue;
        LaurMatrix minor;
        for (int i = 1; i < D; ++i) {
            std::vector<Laur> row;
            for (int k = 0; k < D; ++k)
                if (k != j) row.push_back(M[i][k]);
            minor.push_back(std::move(row));
        }
        Laur term = mul(F, M[0][j], matrix_det(F, minor));
        if (j % 2) term = neg(F, term);
        det = add(F, det, term);
    }
    return det;
}

inline std::vector<Laur> matrix_apply(const Fq& F, const LaurMatrix& M, const std::vector<Laur>& x) {
    int D = (int)M.size();
    std::vector<Laur> y(D, Laur::zero());
    for (int i = 0; i < D; ++i)
        for (int j = 0; j < D; ++j)
            if (!M[i][j].known_zero()) y[i] = add(F, y[i], mul(F, M[i][j], x[j]));
    return y;
}

// Inverse of an exact matrix whose determinant is a t-monomial (the diagonal,
// unipotent and permutation cases of the change-of-variables theorem, and
// products thereof).  Division by a monomial keeps entries exact.
inline LaurMatrix matrix_inverse_monomial_det(const Fq& F, const LaurMatrix& M) {
    int D = (int)M.size();
    Laur det = matrix_det(F, M);
    if (det.known_zero()) throw std::invalid_argument("matrix is singular");
    if (det.c.size() != 1)
        throw std::invalid_argument("matrix inverse requires a monomial determinant for exactness");
    int det_e = det.lo;
    fel det_c_inv = F.inv(det.c[0]);
    LaurMatrix inv(D, std::vector<Laur>(D, Laur::zero()));
    for (int i = 0; i < D; ++i) {
        for (int j = 0; j < D; ++j) {
            // cofactor C_ji / det
            LaurMatrix minor;
            for (int r = 0; r < D; ++r) {
                if (r == j) continue;
                std::vector<Laur> row;
                for (int c = 0; c < D; ++c)
                    if (c != i) row.push_back(M[r][c]);
                minor.push_back(std::move(row));
            }
            Laur cof = (D == 1) ? Laur::t_power(0) : matrix_det(F, minor);
            if ((i + j) % 2) cof = neg(F, cof);
            inv[i][j] = shift(mul_scalar(F, cof, det_c_inv), -det_e);
        }
    }
    return inv;
}

// Both sides of the linear change-of-variables identity
//   int_Gamma f = |det M| * int_{M gamma in Gamma} f(M gamma) dgamma.
// f is given with its constancy depth; M must be exact and invertible with a
// monomial determinant.  Only linear substitutions exist here: a power map
// alpha = gamma^N is not measure-linear and is rejected by construction (the
// API simply offers no such operation).
inline std::pair<Cyc, Cyc> change_of_variables_check(const Fq& F,
                                                     const std::function<Cyc(const std::vector<Laur>&)>& f, int depth_m,
                                                     const Box& box, const LaurMatrix& M, Budget& budget) {
    int D = box.dim();
    if ((int)M.size() != D) throw std::invalid_argument("matrix dimension mismatch");
    Cyc lhs = integrate_box_audited(F, f, box, depth_m, budget);

    LaurMatrix Minv = matrix_inverse_monomial_det(F, M);
    // bounding box for M^{-1}(Gamma): center M^{-1} zeta, radius exponents
    // from the inverse's entry sizes
    std::vector<Laur> center_inv = matrix_apply(F, Minv, box.center);
    std::vector<int> radius_inv(D, 0);
    for (int u = 0; u < D; ++u) {
        bool any = false;
        int r = 0;
        for (int v = 0; v < D; ++v) {
            if (Minv[u][v].known_zero()) continue;
            int cand = Minv[u][v].hi() + box.radius_e[v];
            if (!any || cand > r) r = cand;
            any = true;
        }
        if (!any) throw std::invalid_argument("matrix inverse has a zero row");
        radius_inv[u] = r;
    }
    Box bounding;
    bounding.center = center_inv;
    bounding.radius_e = radius_inv;

    int entries_hi = 0;
    for (const auto& row : M)
        for (const Laur& e : row)
            if (!e.known_zero()) entries_hi = std::max(entries_hi, e.hi());
    int min_radius = box.radius_e[0];
    for (int r : box.radius_e) min_radius = std::min(min_radius, r);
    int depth_pullback = std::max(1, depth_m + std::max(0, entries_hi) + std::max(0, -min_radius) + 1);

    auto pullback = [&](const std::vector<Laur>& gamma) {
        std::vector<Laur> alpha = matrix_apply(F, M, gamma);
        if (!box.contains(F, alpha)) return Cyc::zero(F.p);
        return f(alpha);
    };
    Cyc integral = integrate_box_audited(F, pullback, bounding, depth_pullback, budget);
    QMag absdet = abs_value(matrix_det(F, M));
    Cyc rhs = integral.scaled(absdet.to_rat(F.q));
    return {lhs, rhs};
}

// Character integrands are the common case; wrap the exponent as a root of unity.
inline std::pair<Cyc, Cyc> change_of_variables_check(const Fq& F,
                                                     const std::function<int(const std::vector<Laur>&)>& exponent_of,
                                                     int depth_m, const Box& box, const LaurMatrix& M, Budget& budget) {
    auto f = [&](const std::vector<Laur>& x) { return Cyc::root(F.p, exponent_of(x)); };
    return change_of_variables_check(F, std::function<Cyc(const std::vector<Laur>&)>(f), depth_m, box, M, budget);
}

} // namespace ffcm
