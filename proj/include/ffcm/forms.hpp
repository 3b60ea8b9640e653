#pragma once
// Systems of R homogeneous degree-d forms in s variables over A = F_q[t],
// with an optional affine shift x -> hx + b baked into the same object.
// Coefficients live in dense symmetric d-way tensors so that multilinear
// operations (Weyl differencing, Jacobians) fall out by contraction.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "ffcm/budget.hpp"
#include "ffcm/laurent.hpp"
#include "ffcm/poly.hpp"

namespace ffcm {

// one term c * prod x_i^{e_i} of a form given in sparse input notation
struct Monomial {
    std::vector<int> exps;
    Poly coeff;
};
using MonomialForm = std::vector<Monomial>;

namespace detail {

// flat layout of a d-way tensor over s variables: index tuple (j_1,...,j_d)
// lives at sum j_k s^k
inline std::vector<int> tuple_of_flat(std::uint64_t flat, int s, int d) {
    std::vector<int> j(d);
    for (int k = 0; k < d; ++k) {
        j[k] = (int)(flat % s);
        flat /= s;
    }
    return j;
}

inline std::uint64_t tensor_size(int s, int d) {
    std::uint64_t n = 1;
    for (int k = 0; k < d; ++k) n *= (std::uint64_t)s;
    return n;
}

// multinomial coefficient d! / prod(e_i!) reduced mod p; valid since p > d
inline fel multinomial_mod_p(const Fq& F, int d, const std::vector<int>& exps) {
    if (F.p <= d) throw std::invalid_argument("multinomial inversion needs p > d");
    auto fact = [&](int n) {
        fel r = F.from_int(1);
        for (int i = 2; i <= n; ++i) r = F.mul(r, F.from_int(i));
        return r;
    };
    fel denom = F.from_int(1);
    for (int e : exps) denom = F.mul(denom, fact(e));
    return F.mul(fact(d), F.inv(denom));
}

} // namespace detail

// Spread sparse monomials over the symmetric tensor: each monomial with
// exponent pattern e contributes coeff / (d!/prod e_i!) to every index tuple
// realizing that pattern, so contracting the tensor reproduces the form.
inline std::vector<Poly> symmetrize(const Fq& F, int s, int d, const MonomialForm& form) {
    if (F.p <= d) throw std::invalid_argument("symmetrize needs p > d");
    if (d < 1) throw std::invalid_argument("degree must be positive");
    std::map<std::vector<int>, Poly> terms;
    for (const Monomial& m : form) {
        if ((int)m.exps.size() != s) throw std::invalid_argument("monomial arity != s");
        int total = 0;
        for (int e : m.exps) {
            if (e < 0) throw std::invalid_argument("negative exponent");
            total += e;
        }
        if (total != d) throw std::invalid_argument("form is not homogeneous of the stated degree");
        auto it = terms.find(m.exps);
        if (it == terms.end())
            terms.emplace(m.exps, m.coeff);
        else
            it->second = add(F, it->second, m.coeff);
    }
    std::vector<Poly> tensor(detail::tensor_size(s, d), Poly::zero());
    for (std::uint64_t flat = 0; flat < tensor.size(); ++flat) {
        std::vector<int> exps(s, 0);
        for (int j : detail::tuple_of_flat(flat, s, d)) exps[j]++;
        auto it = terms.find(exps);
        if (it == terms.end() || it->second.is_zero()) continue;
        tensor[flat] = mul_scalar(F, it->second, F.inv(detail::multinomial_mod_p(F, d, exps)));
    }
    return tensor;
}

// Contract a symmetric tensor with the same vector in every slot.
inline Poly contract(const Fq& F, int s, int d, const std::vector<Poly>& tensor, const std::vector<Poly>& x) {
    if ((int)x.size() != s) throw std::invalid_argument("point arity != s");
    Poly acc = Poly::zero();
    for (std::uint64_t flat = 0; flat < tensor.size(); ++flat) {
        if (tensor[flat].is_zero()) continue;
        Poly term = tensor[flat];
        std::uint64_t rest = flat;
        for (int k = 0; k < d; ++k) {
            term = mul(F, term, x[rest % s]);
            rest /= s;
        }
        acc = add(F, acc, term);
    }
    return acc;
}

struct FormSystem {
    Fq F;
    int s = 0, R = 0, d = 0;
    std::vector<std::vector<Poly>> tensors;  // one flat symmetric tensor per form
    Poly h;                                  // monic; h = 1, b = 0 means no shift
    std::vector<Poly> b;
    int sing_dim = 0;     // declared dimension of the affine singular locus
    int delta_e = 0;      // max degree over all form coefficients

    static FormSystem make(const Fq& F, int s, int R, int d, const std::vector<MonomialForm>& forms,
                           Poly h_in = Poly::konst(1), std::vector<Poly> b_in = {}, int sing_dim_in = 0) {
        if (R < 1 || s < R) throw std::invalid_argument("need s >= R >= 1");
        if (d < 2) throw std::invalid_argument("need degree d >= 2");
        if ((int)forms.size() != R) throw std::invalid_argument("form count != R");
        if (h_in.is_zero() || h_in.lead() != 1) throw std::invalid_argument("shift scale h must be monic");
        if (b_in.empty()) b_in.assign(s, Poly::zero());
        if ((int)b_in.size() != s) throw std::invalid_argument("shift offset arity != s");
        for (const Poly& bi : b_in)
            if (!(abs_value(bi) < abs_value(h_in))) throw std::invalid_argument("need |b_i| < |h|");

        FormSystem FS;
        FS.F = F;
        FS.s = s;
        FS.R = R;
        FS.d = d;
        FS.h = h_in;
        FS.b = b_in;
        FS.sing_dim = sing_dim_in;
        FS.delta_e = 0;
        for (const MonomialForm& form : forms) {
            if (form.empty()) throw std::invalid_argument("form has no terms");
            // normalization used throughout: the coefficients of each form
            // have no common factor
            Poly g = Poly::zero();
            for (const Monomial& m : form) g = gcd(F, g, m.coeff);
            if (g != Poly::konst(1)) throw std::invalid_argument("form coefficients must be coprime");
            for (const Monomial& m : form) FS.delta_e = std::max(FS.delta_e, m.coeff.deg());
            FS.tensors.push_back(symmetrize(F, s, d, form));
        }
        return FS;
    }

    bool shifted_trivial() const { return h == Poly::konst(1) && std::all_of(b.begin(), b.end(), [](const Poly& x) { return x.is_zero(); }); }

    // max |coefficient| of the multilinear forms, as a q-power exponent:
    // they carry d! (a unit) times h^d times the tensor entries
    int kappa_e() const { return d * h.deg() + delta_e; }

    // F(x), or the shifted G(x) = F(hx + b)
    std::vector<Poly> evaluate(const std::vector<Poly>& x, bool shifted) const {
        if ((int)x.size() != s) throw std::invalid_argument("point arity != s");
        std::vector<Poly> y = x;
        if (shifted)
            for (int j = 0; j < s; ++j) y[j] = add(F, mul(F, h, x[j]), b[j]);
        std::vector<Poly> out;
        out.reserve(R);
        for (int i = 0; i < R; ++i) out.push_back(contract(F, s, d, tensors[i], y));
        return out;
    }

    // same contraction carried out over K_infinity; precision flows through
    // the Laurent arithmetic and surfaces as precision_error on extraction
    std::vector<Laur> evaluate_laurent(const std::vector<Laur>& x, bool shifted) const {
        if ((int)x.size() != s) throw std::invalid_argument("point arity != s");
        std::vector<Laur> y = x;
        if (shifted) {
            Laur hl = Laur::from_poly(h);
            for (int j = 0; j < s; ++j) y[j] = add(F, mul(F, hl, x[j]), Laur::from_poly(b[j]));
        }
        std::vector<Laur> out;
        out.reserve(R);
        for (int i = 0; i < R; ++i) {
            Laur acc = Laur::zero();
            for (std::uint64_t flat = 0; flat < tensors[i].size(); ++flat) {
                if (tensors[i][flat].is_zero()) continue;
                Laur term = Laur::from_poly(tensors[i][flat]);
                std::uint64_t rest = flat;
                for (int k = 0; k < d; ++k) {
                    term = mul(F, term, y[rest % s]);
                    rest /= s;
                }
                acc = add(F, acc, term);
            }
            out.push_back(acc);
        }
        return out;
    }

    // Psi_j^{(i)} evaluated on d-1 integral vectors. The tensor of the
    // degree-d part of G is h^d times the stored one, hence the final scaling.
    Poly psi(int i, int j, const std::vector<std::vector<Poly>>& xs) const {
        if (F.p <= d) throw std::invalid_argument("multilinear forms need p > d");
        if (i < 0 || i >= R || j < 0 || j >= s) throw std::invalid_argument("psi index out of range");
        if ((int)xs.size() != d - 1) throw std::invalid_argument("psi takes d-1 vectors");
        for (const auto& x : xs)
            if ((int)x.size() != s) throw std::invalid_argument("point arity != s");
        Poly acc = Poly::zero();
        // tuples with last slot pinned to j occupy a contiguous stride
        std::uint64_t block = detail::tensor_size(s, d - 1);
        for (std::uint64_t flat = 0; flat < block; ++flat) {
            std::uint64_t full = flat + (std::uint64_t)j * block;
            if (tensors[i][full].is_zero()) continue;
            Poly term = tensors[i][full];
            std::uint64_t rest = flat;
            for (int k = 0; k < d - 1; ++k) {
                term = mul(F, term, xs[k][rest % s]);
                rest /= s;
            }
            acc = add(F, acc, term);
        }
        fel dfact = F.from_int(1);
        for (int n = 2; n <= d; ++n) dfact = F.mul(dfact, F.from_int(n));
        acc = mul_scalar(F, acc, dfact);
        Poly hd = Poly::konst(1);
        for (int k = 0; k < d; ++k) hd = mul(F, hd, h);
        return mul(F, hd, acc);
    }

    // full R x s matrix of multilinear forms at one (d-1)-tuple
    std::vector<std::vector<Poly>> psi_matrix(const std::vector<std::vector<Poly>>& xs) const {
        std::vector<std::vector<Poly>> m(R, std::vector<Poly>(s));
        for (int i = 0; i < R; ++i)
            for (int j = 0; j < s; ++j) m[i][j] = psi(i, j, xs);
        return m;
    }

    // matrix of partial derivatives; shifted gives (d/dx_j) F_i(hx + b)
    std::vector<std::vector<Poly>> jacobian(const std::vector<Poly>& x, bool shifted) const {
        if ((int)x.size() != s) throw std::invalid_argument("point arity != s");
        std::vector<Poly> y = x;
        if (shifted)
            for (int j = 0; j < s; ++j) y[j] = add(F, mul(F, h, x[j]), b[j]);
        std::vector<std::vector<Poly>> m(R, std::vector<Poly>(s, Poly::zero()));
        fel dscale = F.from_int(d % F.p);
        std::uint64_t block = detail::tensor_size(s, d - 1);
        for (int i = 0; i < R; ++i)
            for (int j = 0; j < s; ++j) {
                Poly acc = Poly::zero();
                for (std::uint64_t flat = 0; flat < block; ++flat) {
                    std::uint64_t full = flat + (std::uint64_t)j * block;
                    if (tensors[i][full].is_zero()) continue;
                    Poly term = tensors[i][full];
                    std::uint64_t rest = flat;
                    for (int k = 0; k < d - 1; ++k) {
                        term = mul(F, term, y[rest % s]);
                        rest /= s;
                    }
                    acc = add(F, acc, term);
                }
                acc = mul_scalar(F, acc, dscale);
                if (shifted) acc = mul(F, h, acc);
                m[i][j] = acc;
            }
        return m;
    }
};

namespace detail {

// determinant of the submatrix picked by (rows, cols), by Laplace expansion;
// the matrices here are at most 5x5
inline Poly submatrix_det(const Fq& F, const std::vector<std::vector<Poly>>& m, const std::vector<int>& rows,
                          const std::vector<int>& cols) {
    int n = (int)rows.size();
    if (n == 1) return m[rows[0]][cols[0]];
    Poly acc = Poly::zero();
    std::vector<int> subrows(rows.begin() + 1, rows.end());
    for (int k = 0; k < n; ++k) {
        if (m[rows[0]][cols[k]].is_zero()) continue;
        std::vector<int> subcols;
        for (int l = 0; l < n; ++l)
            if (l != k) subcols.push_back(cols[l]);
        Poly minor = submatrix_det(F, m, subrows, subcols);
        Poly term = mul(F, m[rows[0]][cols[k]], minor);
        if (k % 2) term = neg(F, term);
        acc = add(F, acc, term);
    }
    return acc;
}

// visit all size-r index subsets of {0..n-1}
inline void for_each_combination(int n, int r, const std::function<void(const std::vector<int>&)>& visit) {
    std::vector<int> idx(r);
    for (int i = 0; i < r; ++i) idx[i] = i;
    while (true) {
        visit(idx);
        int k = r - 1;
        while (k >= 0 && idx[k] == n - r + k) --k;
        if (k < 0) return;
        idx[k]++;
        for (int l = k + 1; l < r; ++l) idx[l] = idx[l - 1] + 1;
    }
}

} // namespace detail

// Rank over the fraction field: the largest r with a nonvanishing r x r minor.
inline int rank_generic(const Fq& F, const std::vector<std::vector<Poly>>& m) {
    int rows = (int)m.size();
    if (rows == 0) return 0;
    int cols = (int)m[0].size();
    for (int r = std::min(rows, cols); r >= 1; --r) {
        bool found = false;
        detail::for_each_combination(rows, r, [&](const std::vector<int>& ri) {
            if (found) return;
            detail::for_each_combination(cols, r, [&](const std::vector<int>& ci) {
                if (found) return;
                if (!detail::submatrix_det(F, m, ri, ci).is_zero()) found = true;
            });
        });
        if (found) return r;
    }
    return 0;
}

// Rank mod g in the determinantal sense: largest r such that some r x r minor
// is not divisible by g. For irreducible g this is the rank over A/(g); for
// composite g it is exactly the notion required by the inequalities-to-
// equations lemma (all R x R minors divisible by g when the rank is < R).
inline int rank_mod(const Fq& F, const std::vector<std::vector<Poly>>& m, const Poly& g) {
    if (g.is_zero()) throw std::invalid_argument("rank_mod needs a nonzero modulus");
    if (g.deg() == 0) return 0;  // everything is 0 mod a unit
    int rows = (int)m.size();
    if (rows == 0) return 0;
    int cols = (int)m[0].size();
    for (int r = std::min(rows, cols); r >= 1; --r) {
        bool found = false;
        detail::for_each_combination(rows, r, [&](const std::vector<int>& ri) {
            if (found) return;
            detail::for_each_combination(cols, r, [&](const std::vector<int>& ci) {
                if (found) return;
                if (!mod(F, detail::submatrix_det(F, m, ri, ci), g).is_zero()) found = true;
            });
        });
        if (found) return r;
    }
    return 0;
}

// --- singular locus probing ------------------------------------------------

// Embedding of F_q into F_{q^times}, realized by locating a root of the base
// field's defining modulus in the extension.
struct FieldEmbedding {
    Fq ext;
    std::vector<fel> image;  // indexed by base element
    fel operator()(fel c) const { return image[c]; }
    Poly map_poly(const Poly& a) const {
        Poly r;
        r.c.reserve(a.c.size());
        for (fel c : a.c) r.c.push_back(image[c]);
        r.trim();
        return r;
    }
};

inline FieldEmbedding embed_field(const Fq& base, int times) {
    if (times < 1) throw std::invalid_argument("extension degree must be >= 1");
    FieldEmbedding E;
    long long qq = 1;
    for (int i = 0; i < times * base.e; ++i) qq *= base.p;
    E.ext = Fq::make((int)qq);
    // find an image of the base generator: any root of the base modulus
    fel root = 0;
    if (base.e == 1) {
        root = 0;  // unused; prime fields embed by value
    } else {
        bool ok = false;
        for (int cand = 0; cand < E.ext.q && !ok; ++cand) {
            fel v = E.ext.from_int(0);
            for (int i = base.e; i >= 0; --i) {
                int coeff = base.modulus[i];
                v = E.ext.add(E.ext.mul(v, (fel)cand), E.ext.from_int(coeff));
            }
            if (v == 0) {
                root = (fel)cand;
                ok = true;
            }
        }
        if (!ok) throw std::logic_error("no root of base modulus in extension");
    }
    E.image.resize(base.q);
    for (int c = 0; c < base.q; ++c) {
        std::vector<int> digits = base.digits((fel)c);
        fel v = 0;
        fel rpow = E.ext.from_int(1);
        for (int i = 0; i < (int)digits.size(); ++i) {
            v = E.ext.add(v, E.ext.mul(E.ext.from_int(digits[i]), rpow));
            if (base.e > 1) rpow = E.ext.mul(rpow, root);
        }
        E.image[(std::size_t)c] = v;
    }
    return E;
}

struct SingEstimate {
    int dim = 0;
    bool enumerated = false;
    std::vector<long long> counts;  // singular points over F_{q^e}, e = 1, 2, ...
    std::string note;
};

// Probe the declared singular dimension by counting points x in F_{q^e}^s
// with F(x) = 0 and rank of the Jacobian < R, then reading off the growth
// exponent. This is a plausibility check for the config, not a proof; exact
// dimension over the algebraic closure stays a declared input.
inline SingEstimate sing_dim_estimate(const FormSystem& FS, int max_extension, Budget& budget) {
    SingEstimate est;
    est.dim = FS.sing_dim;
    for (int e = 1; e <= max_extension; ++e) {
        // q^(e s) points in the affine space over the extension
        double logpts = (double)e * FS.s * std::log2((double)FS.F.q);
        if (logpts > 62) break;
        std::uint64_t pts = 1;
        for (int i = 0; i < e * FS.s; ++i) pts *= (std::uint64_t)FS.F.q;
        if (budget.used() + pts > budget.limit()) break;
        budget.charge(pts);

        FieldEmbedding E = embed_field(FS.F, e);
        std::vector<std::vector<Poly>> etensors;
        for (const auto& tensor : FS.tensors) {
            std::vector<Poly> te;
            te.reserve(tensor.size());
            for (const Poly& a : tensor) te.push_back(E.map_poly(a));
            etensors.push_back(std::move(te));
        }
        FormSystem probe;  // same system, coefficients pushed into the extension
        probe.F = E.ext;
        probe.s = FS.s;
        probe.R = FS.R;
        probe.d = FS.d;
        probe.tensors = etensors;
        probe.h = Poly::konst(1);
        probe.b.assign(FS.s, Poly::zero());

        long long count = 0;
        std::vector<fel> x(FS.s, 0);
        while (true) {
            std::vector<Poly> pt;
            pt.reserve(FS.s);
            for (fel c : x) pt.push_back(Poly::konst(c));
            std::vector<Poly> vals = probe.evaluate(pt, false);
            bool vanish = std::all_of(vals.begin(), vals.end(), [](const Poly& v) { return v.is_zero(); });
            if (vanish && rank_generic(E.ext, probe.jacobian(pt, false)) < FS.R) ++count;
            int k = 0;
            while (k < FS.s && ++x[k] == E.ext.q) x[k++] = 0;
            if (k == FS.s) break;
        }
        est.counts.push_back(count);
        est.enumerated = true;
    }
    if (!est.enumerated) {
        est.note = "declared (enumeration infeasible within budget)";
        return est;
    }
    int e = (int)est.counts.size();
    long long n = est.counts.back();
    double fitted = n <= 1 ? 0.0 : std::log((double)n) / (e * std::log((double)FS.F.q));
    est.dim = (int)std::lround(fitted);
    est.note = "fitted from point counts over extensions up to degree " + std::to_string(e);
    return est;
}

} // namespace ffcm
