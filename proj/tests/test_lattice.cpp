#include <catch2/catch_amalgamated.hpp>

#include "ffcm/lattice.hpp"

#include <random>

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

// random exact entry with top exponent in [emin, emax], zero one time in five
Laur rand_entry(const Fq& F, std::mt19937& rng, int emin, int emax) {
    if (std::uniform_int_distribution<int>(0, 4)(rng) == 0) return Laur::zero();
    int top = std::uniform_int_distribution<int>(emin, emax)(rng);
    int len = std::uniform_int_distribution<int>(1, top - emin + 1)(rng);
    std::vector<fel> c(len);
    for (auto& x : c) x = F.from_int(std::uniform_int_distribution<int>(0, F.q - 1)(rng));
    c.back() = F.from_int(std::uniform_int_distribution<int>(1, F.q - 1)(rng));
    return Laur::from_window(top - len + 1, c, true);
}

LatticeBasis rand_lattice(const Fq& F, std::mt19937& rng, int D, int emin, int emax) {
    std::vector<std::vector<Laur>> cols(D, std::vector<Laur>(D));
    for (auto& col : cols)
        for (auto& e : col) e = rand_entry(F, rng, emin, emax);
    return LatticeBasis::make(D, std::move(cols));
}

Poly rand_poly(const Fq& F, std::mt19937& rng, int maxdeg) {
    int d = std::uniform_int_distribution<int>(-1, maxdeg)(rng);
    if (d < 0) return Poly{};
    Poly p;
    p.c.assign(d + 1, 0);
    for (int j = 0; j <= d; ++j) p.c[j] = F.from_int(std::uniform_int_distribution<int>(0, F.q - 1)(rng));
    p.c[d] = F.from_int(std::uniform_int_distribution<int>(1, F.q - 1)(rng));
    return p;
}

// diag(t^-1, t): already in reduced position, determinant 1
LatticeBasis skew_diag(const Fq& F) {
    return LatticeBasis::make(2, {{W(-1, {1}), Laur::zero()}, {Laur::zero(), W(1, {1})}});
}

// columns (1,1) and (0,t): distinct pivots, determinant t
LatticeBasis staircase(const Fq& F) {
    return LatticeBasis::make(
        2, {{Laur::from_poly(P(F, {1})), Laur::from_poly(P(F, {1}))}, {Laur::zero(), W(1, {1})}});
}

LatticeBasis identity_lattice(const Fq& F, int D) {
    std::vector<std::vector<Laur>> cols(D, std::vector<Laur>(D, Laur::zero()));
    for (int nu = 0; nu < D; ++nu) cols[nu][nu] = Laur::from_poly(P(F, {1}));
    return LatticeBasis::make(D, std::move(cols));
}

}  // namespace

TEST_CASE("basis reduction finds the successive minima on pinned lattices", "[lattice]") {
    Fq F = Fq::make(3);
    Budget budget;

    SECTION("a diagonal basis is left in place") {
        LatticeBasis r = reduce_basis(F, skew_diag(F), budget);
        REQUIRE(r.reduced);
        REQUIRE(r.det_e == 0);
        REQUIRE(r.minima == std::vector<int>{-1, 1});
        REQUIRE(r.pivot == std::vector<int>{0, 1});
        REQUIRE(r.cols[0][0] == W(-1, {1}));
        REQUIRE(r.cols[0][1].known_zero());
        REQUIRE(r.cols[1][0].known_zero());
        REQUIRE(r.cols[1][1] == W(1, {1}));
    }

    SECTION("the identity has all minima equal to one") {
        LatticeBasis r = reduce_basis(F, identity_lattice(F, 3), budget);
        REQUIRE(r.det_e == 0);
        REQUIRE(r.minima == std::vector<int>{0, 0, 0});
    }

    SECTION("a unimodular shear reduces to the identity") {
        LatticeBasis L = LatticeBasis::make(
            2, {{Laur::from_poly(P(F, {1})), Laur::from_poly(P(F, {0, 0, 1}))}, {Laur::zero(), Laur::from_poly(P(F, {1}))}});
        LatticeBasis r = reduce_basis(F, L, budget);
        REQUIRE(r.det_e == 0);
        REQUIRE(r.minima == std::vector<int>{0, 0});
        REQUIRE(r.cols[0][0] == W(0, {1}));
        REQUIRE(r.cols[0][1].known_zero());
        REQUIRE(r.cols[1][0].known_zero());
        REQUIRE(r.cols[1][1] == W(0, {1}));
    }

    SECTION("distinct pivots survive even when a triangular basis cannot achieve them") {
        // columns (1,1) and (0,t): the first minimum 1 lives on a vector with
        // equal coordinates, so no upper-triangular basis realizes it
        LatticeBasis r = reduce_basis(F, staircase(F), budget);
        REQUIRE(r.det_e == 1);
        REQUIRE(r.minima == std::vector<int>{0, 1});
        REQUIRE(r.pivot == std::vector<int>{0, 1});
        REQUIRE(r.cols[0][0] == W(0, {1}));
        REQUIRE(r.cols[0][1] == W(0, {1}));
    }

    SECTION("a permutation basis sorts into diagonal order") {
        LatticeBasis L = LatticeBasis::make(
            2, {{Laur::zero(), Laur::from_poly(P(F, {1}))}, {Laur::from_poly(P(F, {1})), Laur::zero()}});
        LatticeBasis r = reduce_basis(F, L, budget);
        REQUIRE(r.minima == std::vector<int>{0, 0});
        REQUIRE(r.cols[0][0] == W(0, {1}));
        REQUIRE(r.cols[0][1].known_zero());
        REQUIRE(r.cols[1][1] == W(0, {1}));
    }

    SECTION("rejects bad input") {
        LatticeBasis singular = LatticeBasis::make(
            2, {{Laur::from_poly(P(F, {1})), Laur::from_poly(P(F, {1}))},
                {Laur::from_poly(P(F, {1})), Laur::from_poly(P(F, {1}))}});
        REQUIRE_THROWS_AS(reduce_basis(F, singular, budget), std::invalid_argument);
        REQUIRE_THROWS_AS(LatticeBasis::make(2, {{Laur::zero()}, {Laur::zero(), Laur::zero()}}),
                          std::invalid_argument);
        REQUIRE_THROWS_AS(LatticeBasis::make(1, {{Laur::unknown_below(0)}}), std::invalid_argument);
        REQUIRE_THROWS_AS(LatticeBasis::make(0, {}), std::invalid_argument);
    }
}

TEST_CASE("basis reduction is deterministic and idempotent", "[lattice]") {
    Fq F = Fq::make(3);
    Budget budget;
    std::mt19937 rng(9001);

    int done = 0, attempts = 0;
    while (done < 40) {
        REQUIRE(++attempts < 1000);
        int D = std::uniform_int_distribution<int>(1, 3)(rng);
        LatticeBasis L = rand_lattice(F, rng, D, -2, 2);
        LatticeBasis r1, r2;
        try {
            r1 = reduce_basis(F, L, budget);
        } catch (const std::invalid_argument&) {
            continue;  // singular draw
        }
        r2 = reduce_basis(F, L, budget);
        LatticeBasis rr = reduce_basis(F, r1, budget);
        REQUIRE(r1.minima == r2.minima);
        REQUIRE(r1.minima == rr.minima);
        REQUIRE(r1.pivot == rr.pivot);
        for (int nu = 0; nu < D; ++nu)
            for (int u = 0; u < D; ++u) {
                REQUIRE(r1.cols[nu][u] == r2.cols[nu][u]);
                REQUIRE(r1.cols[nu][u] == rr.cols[nu][u]);
            }
        ++done;
    }
}

TEST_CASE("reduced bases certify the norm of integral combinations", "[lattice]") {
    Fq F = Fq::make(3);
    Budget budget;

    SECTION("cancellation inside a coordinate does not disturb the norm") {
        LatticeBasis r = reduce_basis(F, staircase(F), budget);
        // t*(1,1) + 2*(0,t) = (t, 0): one coordinate collapses, the norm holds
        std::vector<Laur> x = lattice_point(F, r, {P(F, {0, 1}), P(F, {2})});
        REQUIRE(x[0] == W(1, {1}));
        REQUIRE(x[1].known_zero());
        REQUIRE(vector_norm(x) == QMag::qpow(1));
    }

    SECTION("the norm equals the largest scaled coefficient on random input") {
        std::mt19937 rng(412);
        int done = 0, attempts = 0;
        while (done < 100) {
            REQUIRE(++attempts < 2000);
            int D = std::uniform_int_distribution<int>(1, 3)(rng);
            LatticeBasis r;
            try {
                r = reduce_basis(F, rand_lattice(F, rng, D, -2, 2), budget);
            } catch (const std::invalid_argument&) {
                continue;
            }
            std::vector<Poly> v(D);
            for (auto& p : v) p = rand_poly(F, rng, 2);
            QMag expect = QMag::null();
            for (int nu = 0; nu < D; ++nu) {
                if (v[nu].is_zero()) continue;
                QMag term = QMag::qpow(v[nu].deg() + r.minima[nu]);
                if (expect < term) expect = term;
            }
            REQUIRE(vector_norm(lattice_point(F, r, v)) == expect);
            ++done;
        }
    }

    SECTION("arity is checked") {
        LatticeBasis r = reduce_basis(F, identity_lattice(F, 2), budget);
        REQUIRE_THROWS_AS(lattice_point(F, r, {P(F, {1})}), std::invalid_argument);
    }
}

TEST_CASE("random lattices satisfy the determinant and duality audits", "[lattice]") {
    Fq F = Fq::make(3);
    std::mt19937 rng(777);

    int done = 0, attempts = 0, counted = 0;
    while (done < 200) {
        REQUIRE(++attempts < 4000);
        Budget budget;
        int D = std::uniform_int_distribution<int>(1, 4)(rng);
        LatticeBasis r;
        try {
            r = reduce_basis(F, rand_lattice(F, rng, D, -3, 3), budget);
        } catch (const std::invalid_argument&) {
            continue;
        }

        MinkowskiReport report = minkowski_audit(F, r, budget);
        long long sum = 0;
        for (int m : report.minima) sum += m;
        REQUIRE(sum == report.det_e);

        AdjointDuality dual = adjoint(F, r, budget);
        for (int nu = 0; nu < D; ++nu) REQUIRE(r.minima[nu] + dual.minima[D - 1 - nu] == 0);

        for (int U = r.minima.front() - 1; U <= r.minima.back() + 1; ++U) {
            std::uint64_t predicted = 1;
            for (int R : r.minima)
                for (int j = 0; j < U - R + 1 && predicted <= 3000; ++j) predicted *= F.q;
            if (predicted > 3000) continue;
            BallCount bc = count_ball(F, r, U, budget);
            REQUIRE(bc.formula == bc.enumerated);
            ++counted;
        }
        ++done;
    }
    REQUIRE(counted >= 400);
}

TEST_CASE("ball counts agree with the closed form on pinned lattices", "[lattice]") {
    Fq F = Fq::make(3);
    Budget budget;

    SECTION("diagonal with one short and one long direction") {
        LatticeBasis r = reduce_basis(F, skew_diag(F), budget);
        BallCount below = count_ball(F, r, -2, budget);
        REQUIRE(below.formula == 1);
        REQUIRE(below.enumerated == 1);
        BallCount at_first = count_ball(F, r, -1, budget);
        REQUIRE(at_first.formula == 1);
        REQUIRE(at_first.enumerated == 1);
        BallCount unit = count_ball(F, r, 0, budget);
        REQUIRE(unit.formula == 3);
        REQUIRE(unit.enumerated == 3);
        BallCount wide = count_ball(F, r, 2, budget);
        REQUIRE(wide.formula == 81);
        REQUIRE(wide.enumerated == 81);
    }

    SECTION("equal-coordinate pivot forces cancellation bookkeeping") {
        BallCount bc = count_ball(F, staircase(F), 1, budget);
        REQUIRE(bc.formula == 3);
        REQUIRE(bc.enumerated == 3);
    }

    SECTION("identity") {
        BallCount bc = count_ball(F, identity_lattice(F, 2), 1, budget);
        REQUIRE(bc.formula == 9);
        REQUIRE(bc.enumerated == 9);
    }
}

TEST_CASE("boxes larger than the determinant yield a nonzero lattice point", "[lattice]") {
    Fq F = Fq::make(3);
    Budget budget;

    SECTION("identity lattice, unit-exceeding ball") {
        std::vector<Laur> x = nonzero_point_in_box(F, identity_lattice(F, 2), Box::ball(2, 1), budget);
        REQUIRE(x[0] == W(0, {1}));
        REQUIRE(x[1].known_zero());
    }

    SECTION("asymmetric box picks up the short direction") {
        Box box;
        box.center.assign(2, Laur::zero());
        box.radius_e = {0, 2};
        std::vector<Laur> x = nonzero_point_in_box(F, skew_diag(F), box, budget);
        REQUIRE(x[0] == W(-1, {1}));
        REQUIRE(x[1].known_zero());
    }

    SECTION("volume at most the determinant is rejected") {
        REQUIRE_THROWS_AS(nonzero_point_in_box(F, identity_lattice(F, 2), Box::torus(2), budget),
                          std::invalid_argument);
        REQUIRE_THROWS_AS(
            nonzero_point_in_box(F, identity_lattice(F, 2), Box::around({Laur::from_poly(P(F, {1})), Laur::zero()}, 1),
                                 budget),
            std::invalid_argument);
        REQUIRE_THROWS_AS(nonzero_point_in_box(F, identity_lattice(F, 2), Box::ball(3, 1), budget),
                          std::invalid_argument);
    }

    SECTION("random boxes with volume one above the determinant") {
        std::mt19937 rng(1518);
        int done = 0, attempts = 0;
        while (done < 60) {
            REQUIRE(++attempts < 1200);
            Budget local;
            int D = std::uniform_int_distribution<int>(1, 3)(rng);
            LatticeBasis r;
            try {
                r = reduce_basis(F, rand_lattice(F, rng, D, -2, 2), local);
            } catch (const std::invalid_argument&) {
                continue;
            }
            Box box;
            box.center.assign(D, Laur::zero());
            box.radius_e.assign(D, 0);
            long long vol = 0;
            for (int u = 0; u < D; ++u) {
                box.radius_e[u] = std::uniform_int_distribution<int>(-2, 2)(rng);
                vol += box.radius_e[u];
            }
            box.radius_e[0] += (int)(r.det_e + 1 - vol);
            std::vector<Laur> x = nonzero_point_in_box(F, r, box, local);
            REQUIRE_FALSE(vector_norm(x).zero);
            for (int u = 0; u < D; ++u) REQUIRE(abs_value(x[u]) < QMag::qpow(box.radius_e[u]));
            ++done;
        }
    }
}

TEST_CASE("adjoint lattices mirror the minima", "[lattice]") {
    Fq F = Fq::make(3);
    Budget budget;

    SECTION("diagonal inverts entrywise") {
        AdjointDuality dual = adjoint(F, skew_diag(F), budget);
        REQUIRE(dual.minima == std::vector<int>{-1, 1});
        REQUIRE(dual.M.has_value());
        REQUIRE(dual.M->cols[0][0].known_zero());
        REQUIRE(dual.M->cols[0][1] == W(-1, {1}));
        REQUIRE(dual.M->cols[1][0] == W(1, {1}));
        REQUIRE(dual.M->cols[1][1].known_zero());
    }

    SECTION("identity is its own adjoint") {
        AdjointDuality dual = adjoint(F, identity_lattice(F, 3), budget);
        REQUIRE(dual.minima == std::vector<int>{0, 0, 0});
        REQUIRE(dual.M.has_value());
    }

    SECTION("monomial determinant keeps the inverse-transpose representable") {
        AdjointDuality dual = adjoint(F, staircase(F), budget);
        REQUIRE(dual.minima == std::vector<int>{-1, 0});
        REQUIRE(dual.M.has_value());
        REQUIRE(dual.M->cols[0][0] == W(-1, {2}));
        REQUIRE(dual.M->cols[0][1] == W(-1, {1}));
        REQUIRE(dual.M->cols[1][0].known_zero());
        REQUIRE(dual.M->cols[1][1] == W(0, {1}));
    }

    SECTION("non-monomial determinant still certifies duality without a literal basis") {
        LatticeBasis L = LatticeBasis::make(
            2, {{Laur::from_poly(P(F, {1})), Laur::zero()}, {Laur::zero(), Laur::from_poly(P(F, {1, 1}))}});
        AdjointDuality dual = adjoint(F, L, budget);
        REQUIRE_FALSE(dual.M.has_value());
        REQUIRE(dual.minima == std::vector<int>{-1, 0});
    }
}

TEST_CASE("block lattices from symmetric data are self-dual", "[lattice]") {
    Fq F = Fq::make(3);
    Budget budget;

    SECTION("zero form gives the identity block") {
        std::vector<std::vector<Laur>> gamma(2, std::vector<Laur>(2, Laur::zero()));
        LatticeBasis L = build_weyl_lattice(F, gamma, 0, budget);
        REQUIRE(L.D == 4);
        REQUIRE(L.det_e == 0);
        REQUIRE(L.minima == std::vector<int>{0, 0, 0, 0});
    }

    SECTION("one variable with a fractional coefficient") {
        std::vector<std::vector<Laur>> gamma = {{W(-1, {1})}};
        LatticeBasis L = build_weyl_lattice(F, gamma, 1, budget);
        REQUIRE(L.det_e == 0);
        REQUIRE(L.minima == std::vector<int>{0, 0});
    }

    SECTION("negative scaling exponent spreads the minima") {
        std::vector<std::vector<Laur>> gamma = {{Laur::zero()}};
        LatticeBasis L = build_weyl_lattice(F, gamma, -1, budget);
        REQUIRE(L.minima == std::vector<int>{-1, 1});
    }

    SECTION("rejects bad input") {
        std::vector<std::vector<Laur>> lopsided = {{Laur::zero(), W(-1, {1})}, {Laur::zero(), Laur::zero()}};
        REQUIRE_THROWS_AS(build_weyl_lattice(F, lopsided, 0, budget), std::invalid_argument);
        REQUIRE_THROWS_AS(build_weyl_lattice(F, {}, 0, budget), std::invalid_argument);
        std::vector<std::vector<Laur>> inexact = {{Laur::unknown_below(0)}};
        REQUIRE_THROWS_AS(build_weyl_lattice(F, inexact, 0, budget), std::invalid_argument);
    }
}

TEST_CASE("inequality counts sit inside the ball-count sandwich", "[lattice]") {
    Fq F = Fq::make(3);
    Budget budget;
    std::vector<std::vector<Laur>> gamma = {{W(-1, {1})}};
    LatticeBasis L = build_weyl_lattice(F, gamma, 1, budget);

    SECTION("integral height matches the lattice count exactly") {
        Int m = weyl_inequality_count(F, gamma, Rat(1), Rat(0), budget);
        REQUIRE(m == 1);
        REQUIRE(m == count_ball(F, L, 0, budget).formula);
        REQUIRE(count_ball(F, L, -1, budget).formula <= m);
        REQUIRE(m <= count_ball(F, L, 1, budget).formula);

        Int wide = weyl_inequality_count(F, gamma, Rat(1), Rat(1), budget);
        REQUIRE(wide == 9);
        REQUIRE(wide == count_ball(F, L, 1, budget).formula);
    }

    SECTION("fractional height lands strictly between the lattice counts") {
        Int m = weyl_inequality_count(F, gamma, Rat(1, 2), Rat(0), budget);
        REQUIRE(m == 3);
        REQUIRE(count_ball(F, L, -1, budget).formula <= m);
        REQUIRE(m <= count_ball(F, L, 1, budget).formula);
        // the comparison constant is real: the count differs from the
        // integral-height lattice count at the same width
        REQUIRE(m != count_ball(F, L, 0, budget).formula);
    }

    SECTION("empty prefix range still counts the free tail") {
        REQUIRE(weyl_inequality_count(F, gamma, Rat(-1), Rat(0), budget) == 3);
    }

    SECTION("two independent variables multiply") {
        std::vector<std::vector<Laur>> g2 = {{W(-1, {1}), Laur::zero()}, {Laur::zero(), W(-1, {1})}};
        LatticeBasis L2 = build_weyl_lattice(F, g2, 1, budget);
        REQUIRE(L2.minima == std::vector<int>{0, 0, 0, 0});
        Int m = weyl_inequality_count(F, g2, Rat(1), Rat(0), budget);
        REQUIRE(m == 1);
        REQUIRE(m == count_ball(F, L2, 0, budget).formula);
    }
}
