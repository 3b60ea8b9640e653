#include <catch2/catch_amalgamated.hpp>

#include "ffcm/cyc.hpp"

using namespace ffcm;

TEST_CASE("canonical form of root combinations", "[cyc]") {
    // 1 + zeta + zeta^2 = 0 in Z[zeta_3]
    Cyc a = Cyc::from_hist(3, {1, 1, 1});
    REQUIRE(a.is_zero());
    REQUIRE(a == Cyc::zero(3));
    // subtracting the minimum count normalizes: (3,1,1) ~ 2 + (1,1,1) ~ 2
    Cyc b = Cyc::from_hist(3, {3, 1, 1});
    REQUIRE(b.is_rational());
    REQUIRE(b.to_rat() == Rat(2));
    // content moves into the scale
    Cyc c = Cyc::from_hist(3, {4, 0, 2});
    REQUIRE(c.counts[0] == 2);
    REQUIRE(c.counts[2] == 1);
    REQUIRE(c.scale == Rat(2));
    REQUIRE(c == Cyc::from_hist(3, {2, 0, 1}, Rat(2)));
}

TEST_CASE("ring operations", "[cyc]") {
    Cyc z = Cyc::root(3, 1);
    Cyc zb = Cyc::root(3, 2);
    REQUIRE(z * zb == Cyc::from_rat(3, Rat(1)));     // zeta * conj(zeta) = 1
    REQUIRE(z + zb + Cyc::from_rat(3, 1) == Cyc::zero(3));
    REQUIRE(z.conj() == zb);
    // (1 + 2 zeta)(1 + 2 conj(zeta)) = 1 + 2(zeta+conj zeta) + 4 = 5 - 2 = 3
    Cyc u = Cyc::from_rat(3, 1) + Cyc::root(3, 1).scaled(2);
    REQUIRE(u * u.conj() == Cyc::from_rat(3, 3));
    REQUIRE(u.abs_squared() == u * u.conj());
    REQUIRE_FALSE(u.is_real());
    REQUIRE((u + u.conj()).is_real());
    // subtraction and negation
    REQUIRE((u - u).is_zero());
    REQUIRE((-u + u).is_zero());
    // mixed p is a contract error
    REQUIRE_THROWS_AS(Cyc::root(3, 1) + Cyc::root(5, 1), std::invalid_argument);
}

TEST_CASE("rational detection and extraction", "[cyc]") {
    Cyc r = Cyc::from_rat(5, Rat(-7, 3));
    REQUIRE(r.is_rational());
    REQUIRE(r.to_rat() == Rat(-7, 3));
    // equal counts on all nontrivial roots collapse to a rational
    Cyc s = Cyc::from_hist(5, {4, 1, 1, 1, 1});
    REQUIRE(s.is_rational());
    REQUIRE(s.to_rat() == Rat(3));
    Cyc t = Cyc::root(5, 1) + Cyc::root(5, 4);
    REQUIRE_FALSE(t.is_rational());
    REQUIRE_THROWS_AS(t.to_rat(), std::logic_error);
}

TEST_CASE("exact sign of real values", "[cyc]") {
    REQUIRE(sign_real(Cyc::zero(5)) == 0);
    REQUIRE(sign_real(Cyc::from_rat(5, Rat(3, 7))) == 1);
    REQUIRE(sign_real(Cyc::from_rat(5, Rat(-2))) == -1);
    // zeta + zeta^4 = 2 cos(2 pi / 5) > 0, zeta^2 + zeta^3 = 2 cos(4 pi / 5) < 0
    REQUIRE(sign_real(Cyc::root(5, 1) + Cyc::root(5, 4)) == 1);
    REQUIRE(sign_real(Cyc::root(5, 2) + Cyc::root(5, 3)) == -1);
    // non-real input is a contract error
    REQUIRE_THROWS_AS(sign_real(Cyc::root(3, 1)), std::logic_error);
}

TEST_CASE("magnitude comparison and rendering", "[cyc]") {
    Cyc u = Cyc::from_rat(3, 1) + Cyc::root(3, 1).scaled(2);  // |u|^2 = 3
    REQUIRE(u.abs_squared().to_rat() == Rat(3));
    REQUIRE(compare_abs(u, Cyc::from_rat(3, 2)) < 0);          // sqrt(3) < 2
    REQUIRE(compare_abs(u, Cyc::from_rat(3, 1)) > 0);
    REQUIRE(compare_abs(u, u.conj()) == 0);
    // rendered magnitude is close to sqrt(3)
    Float50 m = abs_rendered(u);
    REQUIRE(m > Float50("1.73204"));
    REQUIRE(m < Float50("1.73206"));
    // p = 2: zeta_2 = -1, plain signed rationals
    Cyc w = Cyc::from_rat(2, 1) + Cyc::root(2, 1);  // 1 + (-1) = 0
    REQUIRE(w.is_zero());
    REQUIRE(sign_real(Cyc::root(2, 1)) == -1);
    REQUIRE(render_complex(Cyc::from_hist(2, {3, 1})).first == Float50(2));
}
