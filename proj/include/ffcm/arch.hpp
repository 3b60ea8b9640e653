#pragma once
// The place at infinity: nonsingular real points found through coefficient
// reversal, exact volumes of approximate-solution slabs, and the singular
// integral by two independent routes that must agree.

#include "ffcm/box.hpp"
#include "ffcm/local.hpp"

namespace ffcm {

// Substituting sigma = u tau with u = 1/t maps the torus onto tuples integral
// in u: F(sigma) = u^{d-delta} Ftilde(tau), where Ftilde carries the
// coefficient polynomials written backwards (a t^k contributes a u^{delta-k}).
// Real solutions in T^s therefore correspond to u-adic integral solutions of
// the reversed system, and the residue machinery applies verbatim with the
// polynomial variable read as u.  Shifts play no role at the infinite place
// and are dropped.  Reversal at the shared delta preserves the coprimality of
// each form's coefficients, so the result is a valid system as constructed.
inline FormSystem reversed_system(const FormSystem& FS) {
    FormSystem out = FS;
    out.h = Poly::konst(1);
    out.b.assign(FS.s, Poly::zero());
    out.delta_e = 0;
    for (std::vector<Poly>& tensor : out.tensors)
        for (Poly& a : tensor) {
            if (a.is_zero()) continue;
            Poly r;
            r.c.assign(FS.delta_e + 1, 0);
            for (int k = 0; k <= a.deg(); ++k) r.c[FS.delta_e - k] = a.c[k];
            r.trim();
            a = r;
            out.delta_e = std::max(out.delta_e, a.deg());
        }
    return out;
}

struct RealWitness {
    std::vector<Laur> xi;   // box center; no coordinate is zero after nudging
    int N = 1;              // the box is |sigma - xi| < q^{-N}
    int l = 1;              // rank-window level of the underlying residue
    std::vector<Poly> tau;  // reversed-system residues mod u^{2l-1}
    Rat tube_const = 0;     // vol M_B(Y) >= tube_const q^{-RY} once Y >= y_min
    int y_min = 0;

    Box box() const { return Box::around(xi, -N); }
};

// Search residues of the reversed system for a witness with the rank window
// at some level l, then read it back as a torus point.  The box is the ball
// where all lifted solution classes live; its volume certificate is computed
// from the lifting floor.  Zero coordinates of the center are nudged by one
// digit below the residue precision: the box and its solution classes are
// unchanged, but every center coordinate becomes nonzero, which downstream
// arc factorizations want.  Absence is exhaustion of the searched depth, not
// an insolubility proof.
inline std::optional<RealWitness> find_nonsingular_real_point(const FormSystem& FS, int search_depth,
                                                              Budget& budget) {
    FormSystem rev = reversed_system(FS);
    Poly u = Poly::t_power(1);
    std::optional<LocalWitness> w = find_nonsingular_local_point(rev, u, search_depth, budget);
    if (!w) return std::nullopt;
    int m = 2 * w->l - 1;
    RealWitness out;
    out.l = w->l;
    out.N = w->l;
    out.tau = w->x;
    out.xi.reserve(FS.s);
    for (const Poly& tj : w->x) {
        if (tj.is_zero()) {
            out.xi.push_back(Laur::t_power(-(m + 1)));
            continue;
        }
        std::vector<fel> window(m, 0);
        for (int k = 0; k <= tj.deg(); ++k) window[m - 1 - k] = tj.c[k];
        out.xi.push_back(Laur::from_window(-m, window, true));
    }
    out.y_min = m + FS.d - 1;
    out.tube_const = QMag::qpow((long long)FS.R * (m + FS.d - 1) - (long long)m * FS.s).to_rat(FS.F.q);
    return out;
}

// Certified lower bound for vol M_B(Y) over the witness box: run the lifting
// tree of the reversed system until each solution class mod u^{m+nu} sits
// inside the slab |F| < delta q^{-Y}, then add up the class volumes.  The
// per-node floor inside hensel_lift is what makes this a certificate.
inline Rat tube_volume_floor(const FormSystem& FS, const RealWitness& w, int Y, Budget& budget) {
    FormSystem rev = reversed_system(FS);
    Poly u = Poly::t_power(1);
    int m = 2 * w.l - 1;
    int nu = std::max(0, Y - FS.d - m + 1);
    HenselReport rep = hensel_lift(rev, u, w.tau, w.l, nu, budget);
    return Rat(rep.level_nodes[nu]) * QMag::qpow(-(long long)(m + nu) * FS.s).to_rat(FS.F.q);
}

struct RealSolutionSlice {
    int Y = 0;
    int depth = 0;   // slab depth the count was taken at; depth+1 must agree
    Int count = 0;   // depth-m coefficient slabs of the box meeting the bound
    Rat volume = 0;  // count q^{-depth s}, the Haar volume of the counted set
};

namespace detail {

inline std::vector<int> laur_key(const std::vector<Laur>& vals) {
    std::vector<int> key;
    for (const Laur& v : vals) {
        key.push_back(v.lo);
        key.push_back((int)v.c.size());
        for (fel x : v.c) key.push_back((int)x);
    }
    return key;
}

// Count depth-m slabs sigma of the box with |F_i(sigma)| < q^{delta - Y} for
// every i.  Variables that never share a monomial contribute additively, so
// their slabs are enumerated separately and the value histograms convolved,
// exactly as in value_histogram.
inline Int slab_count(const FormSystem& FS, const Box& B, int Y, int mdepth, Budget& budget) {
    const Fq& F = FS.F;
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

    struct Slot {
        std::vector<Laur> vals;
        Int cnt = 0;
    };
    std::map<std::vector<int>, Slot> hist;
    std::vector<Laur> zeros(FS.R, Laur::zero());
    hist[laur_key(zeros)] = {zeros, 1};
    for (const std::vector<int>& blk : blocks) {
        if (blk.empty()) continue;
        Box sub;
        for (int j : blk) {
            sub.center.push_back(B.center[j]);
            sub.radius_e.push_back(B.radius_e[j]);
        }
        std::map<std::vector<int>, Slot> offs;
        detail::for_each_representative(F, sub, mdepth, budget, [&](const std::vector<Laur>& pt) {
            std::vector<Laur> x(FS.s, Laur::zero());
            for (std::size_t k = 0; k < blk.size(); ++k) x[blk[k]] = pt[k];
            std::vector<Laur> vals = FS.evaluate_laurent(x, false);
            Slot& slot = offs[laur_key(vals)];
            if (slot.cnt == 0) slot.vals = vals;
            slot.cnt += 1;
        });
        std::map<std::vector<int>, Slot> next;
        for (const auto& [k1, s1] : hist)
            for (const auto& [k2, s2] : offs) {
                budget.charge(1);
                std::vector<Laur> sum(FS.R);
                for (int i = 0; i < FS.R; ++i) sum[i] = add(F, s1.vals[i], s2.vals[i]);
                Slot& slot = next[laur_key(sum)];
                if (slot.cnt == 0) slot.vals = sum;
                slot.cnt += s1.cnt * s2.cnt;
            }
        hist.swap(next);
    }

    Int count = 0;
    QMag bound = QMag::qpow(FS.delta_e - Y);
    for (const auto& [key, slot] : hist) {
        bool inside = true;
        for (int i = 0; i < FS.R; ++i)
            if (!(abs_value(slot.vals[i]) < bound)) { inside = false; break; }
        if (inside) count += slot.cnt;
    }
    return count;
}

inline int box_top_exponent(const FormSystem& FS, const Box& B) {
    int top = B.radius_e[0] - 1;
    for (int u = 0; u < FS.s; ++u) {
        top = std::max(top, B.radius_e[u] - 1);
        if (!B.center[u].known_zero()) top = std::max(top, B.center[u].hi());
    }
    return top;
}

} // namespace detail

// Exact Haar volume of {sigma in B : |F(sigma)| < delta q^{-Y}}.  Points of a
// depth-m slab differ by less than q^{-m}, which moves the values by at most
// q^{delta - m - 1 + (d-1) top}, so the membership test is slab-constant from
// m = Y + (d-1) top on.  The declared depth and depth+1 are both computed and
// must agree exactly.
inline RealSolutionSlice volume_MB(const FormSystem& FS, const Box& B, int Y, Budget& budget) {
    if (B.dim() != FS.s) throw std::invalid_argument("box dimension != s");
    int depth = std::max(1, Y + (FS.d - 1) * detail::box_top_exponent(FS, B));
    Int c0 = detail::slab_count(FS, B, Y, depth, budget);
    Int c1 = detail::slab_count(FS, B, Y, depth + 1, budget);
    Rat v0 = Rat(c0) * QMag::qpow(-(long long)depth * FS.s).to_rat(FS.F.q);
    Rat v1 = Rat(c1) * QMag::qpow(-(long long)(depth + 1) * FS.s).to_rat(FS.F.q);
    if (v0 != v1)
        throw std::runtime_error("refinement instability: slab depth " + std::to_string(depth)
                                 + " is insufficient for this volume");
    RealSolutionSlice out;
    out.Y = Y;
    out.depth = depth;
    out.count = c0;
    out.volume = v0;
    return out;
}

enum class JRoute { geometric, fubini };

// J(Y) two ways.  Geometric: delta^{-R} q^{RY} vol M_B(Y).  Fubini: integrate
// I(gamma; B) over the gamma ball |gamma| < delta^{-1} q^Y.  Both are exact
// rationals and agree; the character integral over gamma is constant on
// gamma-slabs of depth delta + d top + 1 because |F| is bounded on B.
inline Rat singular_integral_J(const FormSystem& FS, const Box& B, int Y, JRoute route, Budget& budget) {
    const Fq& F = FS.F;
    if (B.dim() != FS.s) throw std::invalid_argument("box dimension != s");
    if (route == JRoute::geometric) {
        RealSolutionSlice slice = volume_MB(FS, B, Y, budget);
        return QMag::qpow((long long)FS.R * (Y - FS.delta_e)).to_rat(F.q) * slice.volume;
    }
    Box gamma_ball = Box::ball(FS.R, Y - FS.delta_e);
    int depth_gamma = std::max(1, FS.delta_e + FS.d * detail::box_top_exponent(FS, B) + 1);
    auto f = [&](const std::vector<Laur>& gamma) { return exp_integral_I(FS, gamma, B, budget); };
    return integrate_box_audited(F, f, gamma_ball, depth_gamma, budget).to_rat();
}

struct JTailReport {
    struct Row {
        int Y = 0;
        Rat volume = 0;
        Rat J = 0;
        Rat diff = 0;  // J minus the previous row's J; zero on the first row
    };
    std::vector<Row> rows;
    Rat tail_exponent = 0;      // R - K/(R(d-1)); the tail shrinks only if negative
    bool tail_vacuous = false;  // set unless K > R^2 (d-1)
};

// J(Y) over a list of thresholds with successive differences.  No limit is
// claimed; the tail exponent is reported for context and flagged vacuous when
// the convergence condition fails.
inline JTailReport J_tail_report(const FormSystem& FS, const Box& B, const std::vector<int>& Y_list,
                                 Budget& budget) {
    JTailReport rep;
    Rat K = Rat(FS.s - FS.sing_dim, 1LL << (FS.d - 1));
    rep.tail_exponent = Rat(FS.R) - K / Rat((long long)FS.R * (FS.d - 1));
    rep.tail_vacuous = !(K > Rat((long long)FS.R * FS.R * (FS.d - 1)));
    Rat prev = 0;
    for (std::size_t i = 0; i < Y_list.size(); ++i) {
        JTailReport::Row row;
        row.Y = Y_list[i];
        RealSolutionSlice slice = volume_MB(FS, B, row.Y, budget);
        row.volume = slice.volume;
        row.J = QMag::qpow((long long)FS.R * (row.Y - FS.delta_e)).to_rat(FS.F.q) * slice.volume;
        row.diff = i == 0 ? Rat(0) : row.J - prev;
        prev = row.J;
        rep.rows.push_back(row);
    }
    return rep;
}

} // namespace ffcm
