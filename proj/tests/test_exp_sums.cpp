#include <catch2/catch_amalgamated.hpp>

#include "ffcm/exp_sums.hpp"

using namespace ffcm;

namespace {

Poly P(const Fq& F, std::initializer_list<int> digits) {
    Poly out;
    for (int d : digits) out.c.push_back(F.from_int(d));
    out.trim();
    return out;
}

Laur W(int lo, std::initializer_list<int> coeffs, bool exact = true) {
    return Laur::from_window(lo, std::vector<fel>(coeffs.begin(), coeffs.end()), exact);
}

// x1^2 - x2^2 over F_3, s = 2, R = 1, d = 2
FormSystem hyperbola(const Fq& F) {
    MonomialForm f = {{{2, 0}, Poly::konst(1)}, {{0, 2}, Poly::konst(2)}};
    return FormSystem::make(F, 2, 1, 2, {f});
}

// sum of n squares, s = n, R = 1, d = 2
FormSystem squares(const Fq& F, int n) {
    MonomialForm f;
    for (int i = 0; i < n; ++i) {
        std::vector<int> e(n, 0);
        e[i] = 2;
        f.push_back({e, Poly::konst(1)});
    }
    return FormSystem::make(F, n, 1, 2, {f});
}

}  // namespace

TEST_CASE("linear sum dichotomy matches enumeration", "[exp_sums]") {
    Fq F = Fq::make(3);
    Budget B;

    REQUIRE(linear_sum(F, W(-2, {1, 0}), 1, B) == Cyc::from_rat(3, Rat(3)));
    REQUIRE(linear_sum(F, W(-1, {1}), 1, B).is_zero());
    REQUIRE(linear_sum(F, W(-1, {2}), 0, B) == Cyc::from_rat(3, Rat(1)));
    REQUIRE(linear_sum(F, Laur::zero(), 2, B) == Cyc::from_rat(3, Rat(9)));

    // every window of width 4 against the closed form, cutoffs 0..2
    for (int c = 0; c <= 2; ++c) {
        for (int r = 0; r < 81; ++r) {
            int v = r;
            std::vector<fel> cs(4);
            for (int k = 0; k < 4; ++k) { cs[k] = v % 3; v /= 3; }
            Laur gamma = Laur::from_window(-4, cs, true);
            bool small = true;
            for (int e = -c; e <= -1; ++e)
                if (cs[e + 4] != 0) small = false;
            Cyc expect = small ? Cyc::from_rat(3, Rat(c == 0 ? 1 : (c == 1 ? 3 : 9))) : Cyc::zero(3);
            REQUIRE(linear_sum(F, gamma, c, B) == expect);
        }
    }

    // a window that stops above the needed exponent is an error, not a zero
    REQUIRE_THROWS_AS(linear_sum(F, W(-1, {0}, false), 2, B), precision_error);
}

TEST_CASE("rational tuples reduce to lowest terms", "[exp_sums]") {
    Fq F = Fq::make(3);

    // (t^2 + t)/(t^2 + 2t) = (t+1)/(t+2), then reduced mod the denominator
    RationalTuple r = RationalTuple::make(F, {P(F, {0, 1, 1})}, P(F, {0, 2, 1}));
    REQUIRE(r.g == P(F, {2, 1}));
    REQUIRE(r.a[0] == P(F, {2}));

    // non-monic denominators are rescaled: 1/(2t) = 2/t
    RationalTuple u = RationalTuple::make(F, {Poly::konst(F.from_int(1))}, P(F, {0, 2}));
    REQUIRE(u.g == P(F, {0, 1}));
    REQUIRE(u.a[0] == P(F, {2}));

    REQUIRE_THROWS_AS(RationalTuple::make(F, {Poly::konst(1)}, Poly::zero()), std::invalid_argument);
}

TEST_CASE("complete sums match hand values", "[exp_sums]") {
    Fq F = Fq::make(3);
    Budget B;
    FormSystem sq1 = squares(F, 1);
    FormSystem hyp = hyperbola(F);

    // S(1, 0) = 1 for any system
    REQUIRE(complete_sum_S(sq1, Poly::konst(1), {Poly::zero()}, SumMethod::naive, B) == Cyc::from_rat(3, Rat(1)));
    REQUIRE(complete_sum_S(hyp, Poly::konst(1), {Poly::zero()}, SumMethod::factored, B) == Cyc::from_rat(3, Rat(1)));

    // quadratic Gauss sum mod t: x^2 hits 0 once and 1 twice
    Poly t = Poly::t_power(1);
    Cyc gauss = Cyc::from_hist(3, {1, 2, 0});
    REQUIRE(complete_sum_S(sq1, t, {Poly::konst(1)}, SumMethod::naive, B) == gauss);
    REQUIRE(complete_sum_S(sq1, t, {Poly::konst(1)}, SumMethod::factored, B) == gauss);

    // the hyperbola sum is |gauss|^2 = 3
    REQUIRE(complete_sum_S(hyp, t, {Poly::konst(1)}, SumMethod::naive, B) == Cyc::from_rat(3, Rat(3)));

    // S depends on a mod g only
    REQUIRE(complete_sum_S(sq1, t, {P(F, {1, 2, 1})}, SumMethod::naive, B) == gauss);

    // the shift enters through G = F(hx + b): (tx+1)^2 = 1 mod t
    MonomialForm f = {{{2}, Poly::konst(1)}};
    FormSystem shifted = FormSystem::make(F, 1, 1, 2, {f}, P(F, {0, 1}), {Poly::konst(1)});
    REQUIRE(complete_sum_S(shifted, t, {Poly::konst(1)}, SumMethod::naive, B) == Cyc::from_hist(3, {0, 3, 0}));

    // factored equals naive on a composite modulus, all residues a
    Poly g = mul(F, t, P(F, {1, 1}));
    for (int r = 0; r < 9; ++r) {
        Poly a = poly_of_rank(F, (unsigned long long)r);
        REQUIRE(complete_sum_S(hyp, g, {a}, SumMethod::factored, B)
                == complete_sum_S(hyp, g, {a}, SumMethod::naive, B));
    }

    REQUIRE_THROWS_AS(complete_sum_S(sq1, P(F, {1, 2}), {Poly::zero()}, SumMethod::naive, B),
                      std::invalid_argument);
}

TEST_CASE("complete sums are multiplicative over coprime moduli", "[exp_sums]") {
    Fq F = Fq::make(3);
    Budget B;
    FormSystem hyp = hyperbola(F);

    struct Pair { Poly g1, g2, a1, a2; };
    std::vector<Pair> cases = {
        {P(F, {0, 1}), P(F, {1, 1}), Poly::konst(1), Poly::konst(2)},
        {P(F, {0, 1}), P(F, {1, 0, 1}), Poly::konst(2), P(F, {0, 1})},
        {P(F, {2, 1}), P(F, {2, 1, 1}), P(F, {1, 1}), Poly::konst(1)},
    };
    for (const Pair& c : cases) {
        Cyc lhs = complete_sum_S(hyp, c.g1, {c.a1}, SumMethod::naive, B)
                  * complete_sum_S(hyp, c.g2, {c.a2}, SumMethod::naive, B);
        Poly g = mul(F, c.g1, c.g2);
        Poly a = add(F, mul(F, c.g1, c.a2), mul(F, c.g2, c.a1));
        REQUIRE(lhs == complete_sum_S(hyp, g, {a}, SumMethod::naive, B));
    }
}

TEST_CASE("local factor values", "[exp_sums]") {
    Fq F = Fq::make(3);
    Budget B;
    FormSystem sq1 = squares(F, 1);
    FormSystem hyp = hyperbola(F);
    Poly t = Poly::t_power(1);

    REQUIRE(local_factor_A(sq1, Poly::konst(1), B) == Cyc::from_rat(3, Rat(1)));
    REQUIRE(local_factor_A(hyp, Poly::konst(1), B) == Cyc::from_rat(3, Rat(1)));

    // x^2: the two Gauss sums at a = 1, 2 cancel
    REQUIRE(local_factor_A(sq1, t, B).is_zero());

    // x1^2 - x2^2: each unit a contributes |g|^{-2} * 3
    REQUIRE(local_factor_A(hyp, t, B) == Cyc::from_rat(3, Rat(2, 3)));
    REQUIRE(local_factor_A(hyp, P(F, {1, 1}), B) == Cyc::from_rat(3, Rat(2, 3)));
}

TEST_CASE("generating sums over boxes", "[exp_sums]") {
    Fq F = Fq::make(3);
    Budget B;
    FormSystem sq1 = squares(F, 1);
    FormSystem hyp = hyperbola(F);
    Poly t = Poly::t_power(1);

    // alpha = 0 counts the points of m E
    REQUIRE(generating_sum_T(sq1, {Laur::zero()}, Poly::t_power(2), Box::torus(1), B) == Cyc::from_rat(3, Rat(9)));
    REQUIRE(generating_sum_T(hyp, {Laur::zero()}, t, Box::torus(2), B) == Cyc::from_rat(3, Rat(9)));
    REQUIRE(generating_sum_T(sq1, {Laur::zero()}, Poly::t_power(2), Box::ball(1, -1), B) == Cyc::from_rat(3, Rat(3)));

    // T(t^{-1}; t, T) is the Gauss sum, and deg-2 scaling repeats each class 3 times
    Cyc gauss = Cyc::from_hist(3, {1, 2, 0});
    REQUIRE(generating_sum_T(sq1, {W(-1, {1})}, t, Box::torus(1), B) == gauss);
    REQUIRE(generating_sum_T(sq1, {W(-1, {1})}, Poly::t_power(2), Box::torus(1), B) == Cyc::from_hist(3, {3, 6, 0}));

    // m E can miss the integers entirely
    Box off = Box::around({W(-1, {1})}, -2);
    REQUIRE(generating_sum_T(sq1, {Laur::zero()}, Poly::konst(1), off, B).is_zero());

    // or pin x to the single integer 1 when m = t
    REQUIRE(generating_sum_T(sq1, {Laur::zero()}, t, off, B) == Cyc::from_rat(3, Rat(1)));

    // a center known only down to t^{-1} cannot decide a depth-2 pin
    Box shallow = Box::around({W(-1, {0}, false)}, -2);
    REQUIRE_THROWS_AS(generating_sum_T(sq1, {Laur::zero()}, Poly::konst(1), shallow, B), precision_error);

    Budget tiny(10);
    REQUIRE_THROWS_AS(generating_sum_T(hyp, {Laur::zero()}, Poly::t_power(3), Box::torus(2), tiny), budget_error);
}

TEST_CASE("exponential integrals at rational points", "[exp_sums]") {
    Fq F = Fq::make(3);
    Budget B;
    FormSystem sq1 = squares(F, 1);
    FormSystem hyp = hyperbola(F);

    // gamma = 0 integrates the characteristic function of E
    REQUIRE(exp_integral_I(sq1, {Laur::zero()}, Box::torus(1), B) == Cyc::from_rat(3, Rat(1)));
    REQUIRE(exp_integral_I(hyp, {Laur::zero()}, Box::torus(2), B) == Cyc::from_rat(3, Rat(1)));
    REQUIRE(exp_integral_I(sq1, {Laur::zero()}, Box::ball(1, -1), B) == Cyc::from_rat(3, Rat(1, 3)));

    // int E(t sigma^2) over the torus = (1/3)(1 + 2 zeta)
    REQUIRE(exp_integral_I(sq1, {Laur::from_poly(Poly::t_power(1))}, Box::torus(1), B)
            == Cyc::from_hist(3, {1, 2, 0}, Rat(1, 3)));

    // |gamma| < 1 makes the phase invisible at integral scale
    REQUIRE(exp_integral_I(sq1, {W(-1, {1})}, Box::torus(1), B) == Cyc::from_rat(3, Rat(1)));

    // the integral uses the unshifted form even when the system carries a shift
    MonomialForm f = {{{2}, Poly::konst(1)}};
    FormSystem shifted = FormSystem::make(F, 1, 1, 2, {f}, Poly::t_power(1), {Poly::konst(1)});
    REQUIRE(exp_integral_I(shifted, {Laur::from_poly(Poly::t_power(1))}, Box::torus(1), B)
            == Cyc::from_hist(3, {1, 2, 0}, Rat(1, 3)));
}

TEST_CASE("weyl differencing audit", "[exp_sums]") {
    Fq F = Fq::make(3);
    Budget B;
    FormSystem sq1 = squares(F, 1);
    FormSystem hyp = hyperbola(F);

    // exact equality witness: F = x^2, alpha = t^{-1}, Q = 1
    WeylAudit a = weyl_difference_audit(sq1, {W(-1, {1})}, 1, B);
    REQUIRE(a.U == Cyc::from_hist(3, {1, 2, 0}));
    REQUIRE(a.lhs == Cyc::from_rat(3, Rat(3)));
    REQUIRE(a.rhs == Rat(3));
    REQUIRE(a.qualifying == 1);

    // alpha = 0 saturates the bound with every tuple qualifying
    WeylAudit z = weyl_difference_audit(hyp, {Laur::zero()}, 1, B);
    REQUIRE(z.U == Cyc::from_rat(3, Rat(9)));
    REQUIRE(z.lhs == Cyc::from_rat(3, Rat(81)));
    REQUIRE(z.qualifying == 9);
    REQUIRE(z.rhs == Rat(81));

    // the hyperbola at t^{-1} also meets the bound exactly
    WeylAudit h = weyl_difference_audit(hyp, {W(-1, {1})}, 1, B);
    REQUIRE(h.lhs == Cyc::from_rat(3, Rat(9)));
    REQUIRE(h.qualifying == 1);
    REQUIRE(h.rhs == Rat(9));

    // a d = 3 system needs p > 3; the audit still certifies lhs <= rhs internally
    Fq F5 = Fq::make(5);
    MonomialForm cubes = {{{3, 0}, Poly::konst(1)}, {{0, 3}, Poly::konst(1)}};
    FormSystem cub = FormSystem::make(F5, 2, 1, 3, {cubes});
    WeylAudit c = weyl_difference_audit(cub, {Laur::from_window(-1, {F5.from_int(1)}, true)}, 1, B);
    REQUIRE(c.qualifying >= 1);
    REQUIRE(c.rhs == Rat(625) * c.qualifying);
}

TEST_CASE("qualifying tuple counts", "[exp_sums]") {
    Fq F = Fq::make(3);
    Budget B;
    FormSystem hyp = hyperbola(F);

    // alpha = 0, v = 0: every tuple below the cap qualifies
    REQUIRE(count_N_eta(hyp, {Laur::zero()}, 1, 0, Rat(0), B) == 9);
    REQUIRE(count_N_eta(hyp, {Laur::zero()}, 2, 0, Rat(0), B) == 81);

    // eta = 0 at v = d-1 pins the differenced slot to the zero tuple
    REQUIRE(count_N_eta(hyp, {Laur::zero()}, 1, 1, Rat(0), B) == 1);
    REQUIRE(count_N_eta(hyp, {W(-1, {1})}, 1, 1, Rat(0), B) == 1);

    // v = 0 count agrees with the weyl audit's qualifying count
    WeylAudit a = weyl_difference_audit(hyp, {W(-1, {1})}, 1, B);
    long long n0 = count_N_eta(hyp, {W(-1, {1})}, 1, 0, Rat(0), B);
    REQUIRE(n0 == a.qualifying);
    REQUIRE(n0 == 1);

    // the visitor sees exactly the counted tuples
    std::vector<std::vector<std::vector<Poly>>> seen;
    count_N_eta_visit(hyp, {W(-1, {1})}, 1, 0, Rat(0), B,
                      [&](const std::vector<std::vector<Poly>>& xs) { seen.push_back(xs); });
    REQUIRE(seen.size() == 1);
    REQUIRE(seen[0][0][0].is_zero());
    REQUIRE(seen[0][0][1].is_zero());

    REQUIRE_THROWS_AS(count_N_eta(hyp, {Laur::zero()}, 1, 2, Rat(0), B), std::invalid_argument);
    REQUIRE_THROWS_AS(count_N_eta(hyp, {Laur::zero()}, 1, 0, Rat(3, 2), B), std::invalid_argument);
}

TEST_CASE("eta choice from approximation data", "[exp_sums]") {
    Fq F = Fq::make(3);
    FormSystem hyp = hyperbola(F);
    Poly t = Poly::t_power(1);

    EtaChoice e1 = choose_eta(hyp, t, {Laur::zero()}, 1);
    REQUIRE(e1.m_star == 1);
    REQUIRE(e1.eta == Rat(0));
    REQUIRE(e1.beta_zero);
    REQUIRE_FALSE(e1.clamped);

    // an integral alpha gives nothing to work with
    EtaChoice e2 = choose_eta(hyp, Poly::konst(1), {Laur::zero()}, 1);
    REQUIRE(e2.clamped);
    REQUIRE(e2.eta == Rat(0));

    // deg g = 2, Q = 3: the denominator term wins, eta = 1/3
    EtaChoice e3 = choose_eta(hyp, P(F, {1, 0, 1}), {Laur::zero()}, 3);
    REQUIRE(e3.m_star == 2);
    REQUIRE(e3.eta == Rat(1, 3));

    // a nonzero beta feeds the distance terms
    EtaChoice e4 = choose_eta(hyp, t, {W(-3, {1})}, 2);
    REQUIRE_FALSE(e4.beta_zero);
    REQUIRE(e4.m_star == 2);
    REQUIRE(e4.eta == Rat(1, 2));

    // a large coefficient bound kappa can close the window entirely
    MonomialForm f = {{{2}, Poly::konst(1)}};
    FormSystem shifted = FormSystem::make(F, 1, 1, 2, {f}, t, {Poly::konst(1)});
    EtaChoice e5 = choose_eta(shifted, t, {Laur::zero()}, 2);
    REQUIRE(e5.clamped);
}

TEST_CASE("counted tuples have singular multilinear matrices", "[exp_sums]") {
    Fq F = Fq::make(3);
    Budget B;
    FormSystem hyp = hyperbola(F);

    // every tuple counted at the chosen eta (v = d-1) must make Psi drop rank
    struct Inst { Poly a, g; Laur beta; int Q; };
    std::vector<Inst> insts = {
        {Poly::konst(1), Poly::t_power(1), Laur::zero(), 1},
        {Poly::konst(1), Poly::t_power(1), Laur::zero(), 2},
        {Poly::konst(2), P(F, {1, 1}), W(-4, {1}), 2},
        {Poly::t_power(1), P(F, {1, 0, 1}), Laur::zero(), 3},
        {Poly::konst(1), P(F, {1, 0, 1}), W(-6, {2}), 3},
    };
    for (const Inst& inst : insts) {
        RationalTuple frac = RationalTuple::make(F, {inst.a}, inst.g);
        EtaChoice choice = choose_eta(hyp, frac.g, {inst.beta}, inst.Q);
        Laur alpha = add(F, frac.component(F, 0, -14), inst.beta);
        long long checked = 0;
        count_N_eta_visit(hyp, {alpha}, inst.Q, hyp.d - 1, choice.eta, B,
                          [&](const std::vector<std::vector<Poly>>& xs) {
                              REQUIRE(rank_generic(F, hyp.psi_matrix(xs)) < hyp.R);
                              ++checked;
                          });
        REQUIRE(checked >= 1);  // the zero tuple always qualifies
    }
}

TEST_CASE("rank drop under smallness hypotheses", "[exp_sums]") {
    Fq F = Fq::make(3);
    Poly t = Poly::t_power(1);

    // Phi = (t), alpha = 1/t: t Phi = t^2, so a Phi = 0 mod g and rank drops
    RationalTuple f1 = RationalTuple::make(F, {Poly::konst(1)}, t);
    RankDropReport r1 = rank_drop_test(F, {{t}}, f1, {Laur::zero()}, Rat(2), Rat(2));
    REQUIRE(r1.hyp_core);
    REQUIRE(r1.rank_mod_g == 0);
    REQUIRE(r1.rank_generic == 1);
    REQUIRE_FALSE(r1.hyp_extra);

    // rank drops over K when |g| >= q^{RM}: rows (1,1) and (2,2) are dependent
    RationalTuple f2 = RationalTuple::make(F, {Poly::konst(1), Poly::konst(1)}, t);
    std::vector<std::vector<Poly>> dep = {{Poly::konst(1), Poly::konst(1)}, {Poly::konst(2), Poly::konst(2)}};
    RankDropReport r2 = rank_drop_test(F, dep, f2, {Laur::zero(), Laur::zero()}, Rat(1, 2), Rat(2));
    REQUIRE(r2.hyp_core);
    REQUIRE(r2.hyp_extra);
    REQUIRE(r2.rank_generic == 1);

    // identity matrix: the norm hypothesis fails, so full rank is no violation
    std::vector<std::vector<Poly>> id = {{Poly::konst(1), Poly::zero()}, {Poly::zero(), Poly::konst(1)}};
    RankDropReport r3 = rank_drop_test(F, id, f2, {Laur::zero(), Laur::zero()}, Rat(1, 2), Rat(2));
    REQUIRE_FALSE(r3.hyp_core);
    REQUIRE(r3.rank_mod_g == 2);
    REQUIRE(r3.rank_generic == 2);

    REQUIRE_THROWS_AS(rank_drop_test(F, {{t}}, f1, {Laur::from_poly(t)}, Rat(2), Rat(2)),
                      std::invalid_argument);
}

TEST_CASE("minor arc diagnostic reports finite bounds", "[exp_sums]") {
    Fq F = Fq::make(3);
    Budget B;
    FormSystem hyp = hyperbola(F);

    RationalTuple frac = RationalTuple::make(F, {Poly::konst(1)}, Poly::t_power(1));
    MinorArcDiagnostic d = minor_arc_diagnostic(hyp, frac, {Laur::zero()}, 2, B);
    REQUIRE(d.N_count >= 1);
    REQUIRE(d.U_abs >= 0);
    REQUIRE(d.U_abs <= Float50("81.0001"));  // trivial bound q^{Qs}
    REQUIRE(d.diff_bound > 0);
    REQUIRE(d.weyl_bound > 0);
}
