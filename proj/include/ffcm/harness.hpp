// End-to-end drivers: exact solution counts over scaled boxes, the
// orthogonality cross-check recovering the same count from an integral, trend
// tables against the predicted leading constant, the weak-approximation
// witness search, and config-declared pipelines with fixed report schemas.
#pragma once

#include "ffcm/arch.hpp"
#include "ffcm/arcs.hpp"
#include "ffcm/io.hpp"
#include "ffcm/lattice.hpp"
#include "ffcm/local.hpp"

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <optional>
#include <sstream>

namespace ffcm {

namespace detail {

inline Poly t_power_poly(int k) {
    if (k < 0) throw std::invalid_argument("t power must be >= 0");
    Poly p;
    p.c.assign(k + 1, 0);
    p.c[k] = 1;
    return p;
}

} // namespace detail

// --- direct counting over n * B ---------------------------------------------

struct EnumeratedCount {
    Int count = 0;
    std::uint64_t points = 0;  // candidates enumerated
};

// number of integral x in n*B with F(hx+b) = 0, by testing every candidate.
// The coordinate range |x_i - n c_i| < q^{deg n + rho_i} pins the coefficients
// of x_i at exponents >= e_i = deg n + rho_i and frees max(e_i, 0) low digits;
// when e_i <= 0 the fractional coefficients of n c_i in [e_i, -1] must vanish
// or the range is empty.
inline EnumeratedCount brute_count_detail(const FormSystem& FS, const Poly& n, const Box& B, Budget& budget) {
    const Fq& F = FS.F;
    if (B.dim() != FS.s) throw std::invalid_argument("box dimension != s");
    if (n.is_zero() || n.lead() != 1) throw std::invalid_argument("scaling polynomial must be monic");

    std::vector<Poly> fixed(FS.s);
    std::vector<int> digits(FS.s);
    std::uint64_t total = 1;
    for (int i = 0; i < FS.s; ++i) {
        Laur gi = mul(F, Laur::from_poly(n), B.center[i]);
        int ei = n.deg() + B.radius_e[i];
        for (int e = ei; e <= -1; ++e)
            if (gi.coeff_at(e) != 0) return {};  // no integral point fits this coordinate
        Poly fx;
        fx.c.assign(std::max(gi.hi() + 1, 0), 0);
        for (int e = std::max(ei, 0); e <= gi.hi(); ++e) fx.c[e] = gi.coeff_at(e);
        fx.trim();
        fixed[i] = fx;
        digits[i] = std::max(ei, 0);
        std::uint64_t per = detail::checked_pow(F.q, digits[i], budget);
        if (total > budget.limit() / per) throw budget_error(budget.limit() + 1, budget.limit());
        total *= per;
    }
    budget.require(total);

    std::vector<std::uint64_t> per(FS.s);
    for (int i = 0; i < FS.s; ++i) per[i] = detail::checked_pow(F.q, digits[i], budget);
    EnumeratedCount out;
    std::vector<std::uint64_t> ranks(FS.s, 0);
    std::vector<Poly> x(FS.s);
    while (true) {
        budget.charge(1);
        out.points += 1;
        for (int i = 0; i < FS.s; ++i) x[i] = add(F, fixed[i], poly_of_rank(F, ranks[i]));
        std::vector<Poly> vals = FS.evaluate(x, true);
        bool zero = true;
        for (const Poly& v : vals) zero = zero && v.is_zero();
        if (zero) out.count += 1;
        int i = 0;
        while (i < FS.s && ++ranks[i] == per[i]) ranks[i++] = 0;
        if (i == FS.s) break;
    }
    return out;
}

inline Int brute_count(const FormSystem& FS, const Poly& n, const Box& B, Budget& budget) {
    return brute_count_detail(FS, n, B, budget).count;
}

// --- the orthogonality cross-check -------------------------------------------

// the same count recovered as the integral of T(alpha; n, B) over the torus.
// T is constant once alpha is pinned one exponent past the top degree any
// value F(hx+b) reaches on the range, so the integral is a finite average;
// the audited integrator recomputes one level deeper and insists on equality.
inline Int oracle_integral_count(const FormSystem& FS, const Poly& n, const Box& B, Budget& budget) {
    const Fq& F = FS.F;
    if (B.dim() != FS.s) throw std::invalid_argument("box dimension != s");
    if (n.is_zero() || n.lead() != 1) throw std::invalid_argument("scaling polynomial must be monic");

    int xd = -1;
    for (int i = 0; i < FS.s; ++i) {
        xd = std::max(xd, n.deg() + B.radius_e[i] - 1);
        if (!B.center[i].known_zero()) xd = std::max(xd, n.deg() + B.center[i].hi());
    }
    long long top = FS.delta_e + (long long)FS.d * (FS.h.deg() + xd);
    int m = (int)std::max(0LL, top + 1);

    auto f = [&](const std::vector<Laur>& alpha) { return generating_sum_T(FS, alpha, n, B, budget); };
    Cyc avg = integrate_box_audited(F, f, Box::torus(FS.R), m, budget);
    if (!avg.is_rational()) throw std::runtime_error("orthogonality average is not rational");
    Rat r = avg.to_rat();
    if (denominator(r) != 1) throw std::runtime_error("orthogonality average is not an integer");
    return numerator(r);
}

// --- trend against the predicted leading constant ----------------------------

struct CountReport {
    int P = 0;
    Int rho = 0;
    Rat normalized = 0;       // rho |h|^{Rd} / |n|^{s-Rd}
    Rat predicted = 0;        // product of the two truncated densities at Y
    Rat ratio = 0;            // normalized / predicted; 0 when predicted vanishes
    Rat error_exponent = 0;   // proven decay rate of the relative error
    bool outside_hypotheses = false;  // too few variables: no decay is claimed
    std::uint64_t points = 0;         // enumeration volume behind rho
    double seconds = 0;               // wall clock; kept out of report files
};

// counts over n = t^P, B the unit torus, for each P, next to the density
// product truncated at Y.  No convergence is asserted: the table is evidence,
// the flag says when the error term is not even conjectured to shrink.
inline std::vector<CountReport> asymptotic_report(const FormSystem& FS, const std::vector<int>& P_list, int Y,
                                                  Budget& budget) {
    const Fq& F = FS.F;
    if (P_list.empty()) throw std::invalid_argument("need at least one P");
    for (int P : P_list)
        if (P < 1) throw std::invalid_argument("need P >= 1");

    long long kk = (long long)(FS.s - FS.sing_dim)
                   - (long long)FS.R * (FS.R + 1) * (FS.d - 1) * (1LL << (FS.d - 1));
    Rat err_exp = Rat(kk, (1LL << (FS.d + 1)) * (long long)FS.R * (FS.d - 1));
    bool outside = kk <= 0;

    Rat series = singular_series_partial(FS, Y, SeriesMode::direct, budget).value;
    Rat integral = singular_integral_J(FS, Box::torus(FS.s), Y, JRoute::geometric, budget);
    Rat predicted = series * integral;

    Box B = Box::torus(FS.s);
    std::vector<Laur> origin(FS.s, Laur::zero());
    std::vector<Poly> at_b = FS.evaluate(std::vector<Poly>(FS.s, Poly::zero()), true);
    bool b_solves = true;
    for (const Poly& v : at_b) b_solves = b_solves && v.is_zero();

    std::vector<CountReport> out;
    for (int P : P_list) {
        auto t0 = std::chrono::steady_clock::now();
        EnumeratedCount ec = brute_count_detail(FS, detail::t_power_poly(P), B, budget);
        CountReport row;
        row.P = P;
        row.rho = ec.count;
        row.points = ec.points;
        long long ex = (long long)FS.h.deg() * FS.R * FS.d
                       - (long long)P * ((long long)FS.s - (long long)FS.R * FS.d);
        row.normalized = Rat(ec.count) * QMag::qpow(ex).to_rat(F.q);
        row.predicted = predicted;
        row.ratio = predicted == 0 ? Rat(0) : row.normalized / predicted;
        row.error_exponent = err_exp;
        row.outside_hypotheses = outside;
        row.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        if (B.contains(F, origin) && b_solves && row.rho < 1)
            throw std::runtime_error("count report lost the solution at the origin");
        out.push_back(std::move(row));
    }
    return out;
}

// --- weak approximation -------------------------------------------------------

struct WeakApproxPlace {
    Poly pi;                    // monic irreducible
    int N = 1;                  // demanded closeness exponent: |zeta - r|_pi <= |pi|^{-N}
    std::vector<Poly> residue;  // a solution of the system mod pi^N, one entry per variable
};

struct WeakApproxRequest {
    std::vector<Laur> zeta_inf;            // target at the infinite place
    int N_inf = 1;                         // demanded closeness: |zeta - zeta_inf| < q^{-N_inf}
    std::vector<WeakApproxPlace> places;
    std::uint64_t search_budget = 200000;  // candidates tested before reporting failure
};

struct WeakApproxWitness {
    Poly h;                   // product of the pi^N; 1 when there are no finite places
    std::vector<Poly> b;      // CRT lift of the finite-place targets
    Poly n;                   // monic denominator with n = 1 mod h
    std::vector<Poly> xi0;    // integral point with F(h xi0 + b) = 0
    std::vector<Poly> num;    // h xi0 + b; the witness is zeta = num / n
    std::uint64_t tried = 0;  // candidates evaluated across all denominators
};

// Searches for a rational point zeta on F = 0 with |zeta - zeta_inf| < q^{-N_inf}
// and |zeta - residue_i|_{pi_i} <= |pi_i|^{-N_i} at every declared place.  The
// denominators n = t^{m - deg h} h + 1 are tried in ascending degree m; for each
// the integral candidates xi0 live in the box |xi0 - n zeta_inf / h| < q^{m - deg h - N_inf}
// per coordinate, and zeta = (h xi0 + b) / n.  The admissible degree is not
// effective, so exhausting the search budget yields an empty result rather
// than a verdict.  A found witness is verified exactly at every place; both
// closeness checks failing after an exact solve would mean the construction
// itself is broken, hence runtime_error there.
inline std::optional<WeakApproxWitness> weak_approx_construct(const FormSystem& FS, const WeakApproxRequest& req,
                                                              Budget& budget) {
    const Fq& F = FS.F;
    if (!FS.shifted_trivial())
        throw std::invalid_argument("weak approximation starts from an unshifted system");
    if (FS.sing_dim != 0)
        throw std::invalid_argument("weak approximation needs a declared nonsingular system");
    if ((int)req.zeta_inf.size() != FS.s) throw std::invalid_argument("target arity != s");
    if (req.N_inf < 1) throw std::invalid_argument("need N_inf >= 1");
    for (const Laur& z : req.zeta_inf)
        if (!z.exact && z.lo > -req.N_inf)
            throw std::invalid_argument("target at infinity must be known to depth N_inf");

    // places: monic irreducible, distinct, each residue an exact local solution
    std::vector<Poly> mods;                       // pi^N per place
    std::vector<std::vector<Poly>> res_reduced;   // residues mod pi^N
    for (std::size_t i = 0; i < req.places.size(); ++i) {
        const WeakApproxPlace& pl = req.places[i];
        if (pl.pi.is_zero() || pl.pi.lead() != 1 || !is_irreducible(F, pl.pi))
            throw std::invalid_argument("place must be a monic irreducible");
        if (pl.N < 1) throw std::invalid_argument("place exponent must be >= 1");
        if ((int)pl.residue.size() != FS.s) throw std::invalid_argument("place residue arity != s");
        for (std::size_t j = 0; j < i; ++j)
            if (sub(F, pl.pi, req.places[j].pi).is_zero())
                throw std::invalid_argument("places must be distinct");
        Poly mod = detail::pi_power(F, pl.pi, pl.N);
        std::vector<Poly> r(FS.s);
        for (int j = 0; j < FS.s; ++j) r[j] = divmod(F, pl.residue[j], mod).second;
        for (const Poly& v : FS.evaluate(r, false))
            if (!divmod(F, v, mod).second.is_zero())
                throw std::invalid_argument("declared residue does not solve the system at its place");
        mods.push_back(mod);
        res_reduced.push_back(std::move(r));
    }

    // already rational and exactly on the zero set, nothing to approximate
    if (req.places.empty()) {
        bool exact_on = true;
        for (const Laur& z : req.zeta_inf) exact_on = exact_on && z.exact;
        if (exact_on)
            for (const Laur& v : FS.evaluate_laurent(req.zeta_inf, false)) exact_on = exact_on && v.known_zero();
        if (exact_on) {
            int m = 0;
            for (const Laur& z : req.zeta_inf)
                if (!z.known_zero()) m = std::max(m, -z.lo);
            WeakApproxWitness w;
            w.h = Poly::konst(1);
            w.b.assign(FS.s, Poly::zero());
            w.n = detail::t_power_poly(m);
            w.num.resize(FS.s);
            for (int j = 0; j < FS.s; ++j) {
                const Laur& z = req.zeta_inf[j];
                Poly p;
                if (!z.known_zero()) {
                    p.c.assign(z.hi() + m + 1, 0);
                    for (int e = z.lo; e <= z.hi(); ++e) p.c[e + m] = z.coeff_at(e);
                    p.trim();
                }
                w.num[j] = p;
            }
            w.xi0 = w.num;
            return w;
        }
    }

    Poly h = Poly::konst(1);
    for (const Poly& mod : mods) h = mul(F, h, mod);
    int dh = h.deg();

    for (const Laur& z : req.zeta_inf)
        if (!(abs_value(z) < QMag::qpow(dh)))
            throw std::invalid_argument("target at infinity must satisfy |zeta| < |h|");

    // necessary for any solution this close to exist: the system must nearly
    // vanish at the target, to the depth the multilinear bound allows
    {
        long long cap = FS.delta_e + (long long)(FS.d - 1) * (dh - 1) - req.N_inf;
        for (const Laur& v : FS.evaluate_laurent(req.zeta_inf, false))
            if (!v.known_zero() && !(abs_value(v) < QMag::qpow(cap + 1)))
                throw std::invalid_argument("target at infinity is not approximately on the zero set to depth N_inf");
    }

    std::vector<Poly> b(FS.s, Poly::zero());
    if (!req.places.empty()) {
        for (int j = 0; j < FS.s; ++j) {
            std::vector<std::pair<Poly, Poly>> parts;
            for (std::size_t i = 0; i < mods.size(); ++i) parts.push_back({res_reduced[i][j], mods[i]});
            b[j] = crt(F, parts);
        }
    }
    int db = 0;
    bool b_zero = true;
    for (const Poly& bj : b)
        if (!bj.is_zero()) {
            b_zero = false;
            db = std::max(db, bj.deg());
        }

    std::uint64_t tried = 0;
    int m_min = std::max(std::max(dh, 1), b_zero ? 0 : db + req.N_inf + 1);
    for (int m = m_min;; ++m) {
        Poly n = add(F, mul(F, h, detail::t_power_poly(m - dh)), Poly::konst(1));
        int rho = m - dh - req.N_inf;

        // candidate box around n zeta_inf / h, coordinate by coordinate
        std::vector<Poly> base(FS.s);
        std::vector<int> digits(FS.s);
        bool feasible = true;
        for (int j = 0; j < FS.s && feasible; ++j) {
            Laur nz = mul(F, Laur::from_poly(n), req.zeta_inf[j]);
            Laur c;
            if (nz.known_zero()) {
                c = Laur::zero();
            } else if (dh == 0) {
                c = nz;
            } else {
                int lo_inv = std::min(rho, 0) - std::max(nz.hi(), 0) - 1;
                c = mul(F, nz, rational_to_laurent(F, Poly::konst(1), h, lo_inv));
            }
            if (rho <= 0)
                for (int e = rho; e <= -1 && feasible; ++e)
                    if (c.coeff_at(e) != 0) feasible = false;
            Poly p;
            if (!c.known_zero() && c.hi() >= 0) {
                p.c.assign(c.hi() + 1, 0);
                for (int e = std::max(rho, 0); e <= c.hi(); ++e) p.c[e] = c.coeff_at(e);
                p.trim();
            }
            base[j] = p;
            digits[j] = std::max(rho, 0);
        }
        if (!feasible) continue;

        std::uint64_t total = 1;
        bool affordable = true;
        for (int j = 0; j < FS.s && affordable; ++j)
            for (int i = 0; i < digits[j] && affordable; ++i) {
                if (total > req.search_budget / (std::uint64_t)F.q) affordable = false;
                else total *= (std::uint64_t)F.q;
            }
        if (!affordable || tried + total > req.search_budget) return std::nullopt;
        budget.require(total);

        std::vector<std::uint64_t> per(FS.s);
        for (int j = 0; j < FS.s; ++j) per[j] = detail::checked_pow(F.q, digits[j], budget);
        std::vector<std::uint64_t> ranks(FS.s, 0);
        std::vector<Poly> x(FS.s), y(FS.s);
        while (true) {
            budget.charge(1);
            ++tried;
            for (int j = 0; j < FS.s; ++j) {
                x[j] = add(F, base[j], poly_of_rank(F, ranks[j]));
                y[j] = add(F, mul(F, h, x[j]), b[j]);
            }
            std::vector<Poly> vals = FS.evaluate(y, false);
            bool zero = true;
            for (const Poly& v : vals) zero = zero && v.is_zero();
            if (zero) {
                WeakApproxWitness w;
                w.h = h;
                w.b = b;
                w.n = n;
                w.xi0 = x;
                w.num = y;
                w.tried = tried;
                for (int j = 0; j < FS.s; ++j) {
                    Laur zj = rational_to_laurent(F, y[j], n, -req.N_inf - 1);
                    Laur diff = sub(F, zj, req.zeta_inf[j]);
                    for (int e = -req.N_inf; e <= diff.hi(); ++e)
                        if (diff.coeff_at(e) != 0)
                            throw std::runtime_error("witness misses its target at infinity");
                }
                for (std::size_t i = 0; i < req.places.size(); ++i)
                    for (int j = 0; j < FS.s; ++j) {
                        Poly wj = sub(F, y[j], mul(F, n, res_reduced[i][j]));
                        if (!wj.is_zero() && pi_valuation(F, wj, req.places[i].pi) < req.places[i].N)
                            throw std::runtime_error("witness misses its target at a finite place");
                    }
                return w;
            }
            int j = 0;
            while (j < FS.s && ++ranks[j] == per[j]) ranks[j++] = 0;
            if (j == FS.s) break;
        }
    }
}

// --- config-declared pipelines ------------------------------------------------

struct StageOutput {
    std::string name;     // section name as declared
    std::string csv;      // full report contents, fixed schema per stage kind
    std::string summary;  // one line of plain text
};

namespace detail {

inline void check_stage_keys(const ConfigSection& st, std::initializer_list<const char*> allowed) {
    for (const ConfigEntry& e : st.entries) {
        bool ok = false;
        for (const char* k : allowed) ok = ok || e.key == k;
        if (!ok) throw parse_error(e.line, "stage [" + st.name + "]: unknown key '" + e.key + "'");
    }
}

// wraps expression errors with the key and line they came from
template <typename Fn>
auto parse_value(const ConfigEntry& e, Fn&& fn) -> decltype(fn(e.value)) {
    try {
        return fn(e.value);
    } catch (const parse_error& err) {
        throw parse_error(e.line, "key '" + e.key + "': " + err.what());
    }
}

inline std::string csv_safe(std::string s) {
    for (char& c : s)
        if (c == ',') c = ';';
    return s;
}

} // namespace detail

inline StageOutput run_stage(const Config& cfg, const ConfigSection& st, Budget& budget) {
    std::optional<FormSystem> slot;
    auto sys = [&]() -> const FormSystem& {
        if (!slot) slot = system_from_config(cfg);
        return *slot;
    };
    std::ostringstream csv, note;

    if (st.name == "count") {
        detail::check_stage_keys(st, {"P", "Y"});
        const FormSystem& FS = sys();
        std::vector<int> P = config_int_list(config_get(st.entries, "P", st.line));
        int Y = 2;
        if (const ConfigEntry* e = config_find(st.entries, "Y")) Y = (int)config_int(*e);
        std::vector<CountReport> rows = asymptotic_report(FS, P, Y, budget);
        csv << "P,rho,normalized,predicted,ratio,error_exponent,outside_hypotheses\n";
        for (const CountReport& r : rows)
            csv << r.P << ',' << r.rho.str() << ',' << r.normalized.str() << ',' << r.predicted.str() << ','
                << r.ratio.str() << ',' << r.error_exponent.str() << ',' << (r.outside_hypotheses ? 1 : 0) << '\n';
        note << "count: " << rows.size() << " row(s), predicted constant " << rows.front().predicted.str();
        if (rows.front().outside_hypotheses) note << " (outside the proven hypotheses: no decay claimed)";
    } else if (st.name == "oracle") {
        detail::check_stage_keys(st, {"P"});
        const FormSystem& FS = sys();
        std::vector<int> P = config_int_list(config_get(st.entries, "P", st.line));
        csv << "P,brute,integral\n";
        for (int p : P) {
            if (p < 1) throw parse_error(config_get(st.entries, "P", st.line).line, "key 'P': need P >= 1");
            Int bc = brute_count(FS, detail::t_power_poly(p), Box::torus(FS.s), budget);
            Int oc = oracle_integral_count(FS, detail::t_power_poly(p), Box::torus(FS.s), budget);
            if (bc != oc) throw std::runtime_error("orthogonality count differs from direct enumeration");
            csv << p << ',' << bc.str() << ',' << oc.str() << '\n';
        }
        note << "oracle: counts agree at " << P.size() << " value(s) of P";
    } else if (st.name == "local") {
        detail::check_stage_keys(st, {"pi", "k"});
        const FormSystem& FS = sys();
        const ConfigEntry& pie = config_get(st.entries, "pi", st.line);
        int k = 2;
        if (const ConfigEntry* e = config_find(st.entries, "k")) k = (int)config_int(*e);
        csv << "pi,k,M,normalized,diff\n";
        int count = 0;
        for (const std::string& part : split_list(pie.value)) {
            Poly pi = detail::parse_value(pie, [&](const std::string&) { return parse_poly(FS.F, part); });
            LocalDensityTable tab = local_density_table(FS, pi, k, budget);
            for (const auto& r : tab.rows)
                csv << poly_str(FS.F, pi) << ',' << r.k << ',' << r.M.str() << ',' << r.normalized.str() << ','
                    << r.diff.str() << '\n';
            ++count;
        }
        note << "local: density tables at " << count << " place(s) up to exponent " << k;
    } else if (st.name == "arch") {
        detail::check_stage_keys(st, {"Y"});
        const FormSystem& FS = sys();
        std::vector<int> Ys = config_int_list(config_get(st.entries, "Y", st.line));
        csv << "Y,volume,J_geometric,J_fubini,diff\n";
        Rat prev = 0;
        bool first = true;
        for (int Y : Ys) {
            RealSolutionSlice sl = volume_MB(FS, Box::torus(FS.s), Y, budget);
            Rat jg = singular_integral_J(FS, Box::torus(FS.s), Y, JRoute::geometric, budget);
            Rat jf = singular_integral_J(FS, Box::torus(FS.s), Y, JRoute::fubini, budget);
            if (jg != jf) throw std::runtime_error("integral routes disagree");
            Rat diff = first ? Rat(0) : jg - prev;
            csv << Y << ',' << sl.volume.str() << ',' << jg.str() << ',' << jf.str() << ',' << diff.str() << '\n';
            prev = jg;
            first = false;
        }
        note << "arch: both integral routes agree at " << Ys.size() << " threshold(s)";
    } else if (st.name == "arcs") {
        detail::check_stage_keys(st, {"P", "N"});
        const FormSystem& FS = sys();
        int P = (int)config_int(config_get(st.entries, "P", st.line));
        int N = 1;
        if (const ConfigEntry* e = config_find(st.entries, "N")) N = (int)config_int(*e);
        ArcParams ap = exponent_ledger(FS.F, FS.s, FS.R, FS.d, FS.sing_dim, P, FS.delta_e, N, FS.h.deg());
        csv << "field,index,value\n";
        csv << "K,0," << ap.K.str() << '\n';
        csv << "k,0," << ap.k.str() << '\n';
        csv << "L,0," << ap.L.str() << '\n';
        csv << "delta,0," << ap.delta.str() << '\n';
        csv << "vacuous,0," << (ap.vacuous ? 1 : 0) << '\n';
        for (std::size_t i = 0; i < ap.thetas.size(); ++i) csv << "theta," << i << ',' << ap.thetas[i].str() << '\n';
        for (std::size_t i = 0; i < ap.delta_r.size(); ++i) csv << "delta_r," << i << ',' << ap.delta_r[i].str() << '\n';
        note << "arcs: " << ap.thetas.size() << " dissection level(s), min saving " << ap.delta.str()
             << (ap.vacuous ? " (vacuous)" : "");
    } else if (st.name == "sum") {
        detail::check_stage_keys(st, {"g", "a", "method"});
        const FormSystem& FS = sys();
        const ConfigEntry& ge = config_get(st.entries, "g", st.line);
        const ConfigEntry& ae = config_get(st.entries, "a", st.line);
        Poly g = detail::parse_value(ge, [&](const std::string& v) { return parse_poly(FS.F, v); });
        std::vector<Poly> a;
        for (const std::string& part : split_list(ae.value))
            a.push_back(detail::parse_value(ae, [&](const std::string&) { return parse_poly(FS.F, part); }));
        if ((int)a.size() != FS.R) throw parse_error(ae.line, "key 'a': expected " + std::to_string(FS.R) + " components");
        SumMethod meth = SumMethod::factored;
        if (const ConfigEntry* e = config_find(st.entries, "method")) {
            if (e->value == "naive") meth = SumMethod::naive;
            else if (e->value == "factored") meth = SumMethod::factored;
            else throw parse_error(e->line, "key 'method': expected naive or factored");
        }
        Cyc S = complete_sum_S(FS, g, a, meth, budget);
        std::string val = S.is_rational() ? S.to_rat().str() : detail::csv_safe(S.str());
        csv << "g,a,method,value\n";
        csv << poly_str(FS.F, g) << ',';
        for (std::size_t i = 0; i < a.size(); ++i) csv << (i ? ";" : "") << poly_str(FS.F, a[i]);
        csv << ',' << (meth == SumMethod::naive ? "naive" : "factored") << ',' << val << '\n';
        note << "sum: S(g,a) = " << val;
    } else if (st.name == "lattice") {
        detail::check_stage_keys(st, {"cols"});
        Fq F = Fq::make((int)config_int(config_get(cfg.globals, "q", 0)));
        const ConfigEntry& ce = config_get(st.entries, "cols", st.line);
        std::vector<std::vector<Laur>> cols;
        for (const std::string& colpart : split_list(ce.value, ';')) {
            std::vector<Laur> col;
            for (const std::string& ent : split_list(colpart))
                col.push_back(detail::parse_value(ce, [&](const std::string&) { return parse_laurent(F, ent); }));
            cols.push_back(std::move(col));
        }
        LatticeBasis L = LatticeBasis::make((int)cols.size(), cols);
        LatticeBasis red = reduce_basis(F, L, budget);
        minkowski_audit(F, L, budget);
        AdjointDuality ad = adjoint(F, L, budget);
        csv << "nu,minimum,pivot,dual_minimum\n";
        for (int nu = 0; nu < red.D; ++nu)
            csv << nu << ',' << red.minima[nu] << ',' << red.pivot[nu] << ',' << ad.minima[nu] << '\n';
        note << "lattice: determinant exponent " << red.det_e << ", minima sorted and dual-paired";
    } else if (st.name == "weak-approx") {
        detail::check_stage_keys(st, {"target", "Ninf", "place", "search"});
        const FormSystem& FS = sys();
        WeakApproxRequest req;
        const ConfigEntry& te = config_get(st.entries, "target", st.line);
        for (const std::string& part : split_list(te.value))
            req.zeta_inf.push_back(detail::parse_value(te, [&](const std::string&) { return parse_laurent(FS.F, part); }));
        if (const ConfigEntry* e = config_find(st.entries, "Ninf")) req.N_inf = (int)config_int(*e);
        if (const ConfigEntry* e = config_find(st.entries, "search")) req.search_budget = (std::uint64_t)config_int(*e);
        for (const ConfigEntry* e : config_all(st.entries, "place")) {
            std::vector<std::string> parts = split_list(e->value, ':');
            if (parts.size() != 3) throw parse_error(e->line, "key 'place': expected pi : N : residues");
            WeakApproxPlace pl;
            pl.pi = detail::parse_value(*e, [&](const std::string&) { return parse_poly(FS.F, parts[0]); });
            pl.N = (int)config_int(ConfigEntry{"place", parts[1], e->line});
            for (const std::string& r : split_list(parts[2]))
                pl.residue.push_back(detail::parse_value(*e, [&](const std::string&) { return parse_poly(FS.F, r); }));
            req.places.push_back(std::move(pl));
        }
        std::optional<WeakApproxWitness> w = weak_approx_construct(FS, req, budget);
        csv << "field,value\n";
        csv << "found," << (w ? 1 : 0) << '\n';
        if (w) {
            csv << "tried," << w->tried << '\n';
            csv << "h," << poly_str(FS.F, w->h) << '\n';
            csv << "n," << poly_str(FS.F, w->n) << '\n';
            auto join = [&](const std::vector<Poly>& v) {
                std::string s;
                for (std::size_t i = 0; i < v.size(); ++i) s += (i ? ";" : "") + poly_str(FS.F, v[i]);
                return s;
            };
            csv << "b," << join(w->b) << '\n';
            csv << "xi0," << join(w->xi0) << '\n';
            std::string z;
            for (std::size_t i = 0; i < w->num.size(); ++i)
                z += (i ? ";(" : "(") + poly_str(FS.F, w->num[i]) + ")/(" + poly_str(FS.F, w->n) + ")";
            csv << "zeta," << z << '\n';
            note << "weak-approx: witness found after " << w->tried << " candidate(s)";
        } else {
            csv << "search," << req.search_budget << '\n';
            note << "weak-approx: no witness within " << req.search_budget << " candidate(s)";
        }
    } else {
        throw parse_error(st.line, "unknown stage [" + st.name + "]");
    }
    return {st.name, csv.str(), note.str()};
}

struct RunBundle {
    std::vector<StageOutput> stages;
    std::vector<std::string> files;  // filled when reports are written to disk
};

inline RunBundle run_stages(const Config& cfg, Budget& budget) {
    RunBundle out;
    for (const ConfigSection& st : cfg.stages) out.stages.push_back(run_stage(cfg, st, budget));
    return out;
}

// executes every declared stage in file order and writes one report per
// stage; an empty pipeline is a successful no-op
inline RunBundle run_config(const Config& cfg, const std::string& out_dir, Budget& budget) {
    RunBundle out = run_stages(cfg, budget);
    if (out.stages.empty()) return out;
    std::filesystem::create_directories(out_dir);
    for (std::size_t i = 0; i < out.stages.size(); ++i) {
        std::string name = out.stages[i].name;
        for (char& c : name)
            if (c == '-') c = '_';
        std::ostringstream fn;
        fn << out_dir << '/' << std::setw(2) << std::setfill('0') << (i + 1) << '_' << name << ".csv";
        std::ofstream f(fn.str(), std::ios::binary);
        if (!f) throw std::runtime_error("cannot write " + fn.str());
        f << out.stages[i].csv;
        out.files.push_back(fn.str());
    }
    return out;
}

} // namespace ffcm
