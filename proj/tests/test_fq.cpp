#include <catch2/catch_amalgamated.hpp>

#include "ffcm/fq.hpp"

using namespace ffcm;

TEST_CASE("prime field arithmetic", "[fq]") {
    Fq F = Fq::make(3);
    REQUIRE(F.p == 3);
    REQUIRE(F.e == 1);
    // 1 + 2 = 0 in characteristic 3
    REQUIRE(F.add(1, 2) == 0);
    // 2 * 2 = 4 = 1, so 2 is its own inverse
    REQUIRE(F.inv(2) == 2);
    REQUIRE(F.mul(2, F.inv(2)) == 1);
    REQUIRE_THROWS_AS(F.inv(0), std::invalid_argument);
    // trace is the identity when e = 1
    REQUIRE(F.trace(2) == 2);
    REQUIRE(F.eq_exponent(2) == 2);
    REQUIRE(F.trace(0) == 0);
}

TEST_CASE("F_4 via u^2+u+1", "[fq]") {
    Fq F = Fq::make(4);
    fel u = F.from_digits({0, 1});
    fel u_plus_1 = F.from_digits({1, 1});
    // u^2 = u + 1 after reduction by the modulus
    REQUIRE(F.mul(u, u) == u_plus_1);
    // tr(u) = u + u^2 = u + (u+1) = 1
    REQUIRE(F.trace(u) == 1);
    REQUIRE(F.eq_exponent(u) == 1);
    // trace restricted to F_p is multiplication by e: tr(1) = 2*1 = 0 in F_2
    REQUIRE(F.trace(1) == 0);
}

TEST_CASE("field axioms, exhaustive for q <= 9", "[fq]") {
    for (int q : {2, 3, 4, 5, 7, 8, 9}) {
        Fq F = Fq::make(q);
        for (int a = 0; a < q; ++a) {
            REQUIRE(F.add(fel(a), 0) == fel(a));
            REQUIRE(F.mul(fel(a), 1) == fel(a));
            REQUIRE(F.add(fel(a), F.neg(fel(a))) == 0);
            if (a != 0) REQUIRE(F.mul(fel(a), F.inv(fel(a))) == 1);
            for (int b = 0; b < q; ++b) {
                REQUIRE(F.add(fel(a), fel(b)) == F.add(fel(b), fel(a)));
                REQUIRE(F.mul(fel(a), fel(b)) == F.mul(fel(b), fel(a)));
                for (int c = 0; c < q; ++c) {
                    REQUIRE(F.add(F.add(fel(a), fel(b)), fel(c)) == F.add(fel(a), F.add(fel(b), fel(c))));
                    REQUIRE(F.mul(F.mul(fel(a), fel(b)), fel(c)) == F.mul(fel(a), F.mul(fel(b), fel(c))));
                    REQUIRE(F.mul(fel(a), F.add(fel(b), fel(c)))
                            == F.add(F.mul(fel(a), fel(b)), F.mul(fel(a), fel(c))));
                }
            }
        }
    }
}

TEST_CASE("character exponent is additive", "[fq]") {
    for (int q : {3, 4, 8, 9}) {
        Fq F = Fq::make(q);
        for (int a = 0; a < q; ++a)
            for (int b = 0; b < q; ++b)
                REQUIRE(F.eq_exponent(F.add(fel(a), fel(b)))
                        == (F.eq_exponent(fel(a)) + F.eq_exponent(fel(b))) % F.p);
    }
}

TEST_CASE("trace is F_p-linear", "[fq]") {
    Fq F = Fq::make(9);
    for (int c = 0; c < 3; ++c)
        for (int a = 0; a < 9; ++a) {
            fel ca = F.mul(F.from_int(c), fel(a));
            REQUIRE(F.trace(ca) == (c * F.trace(fel(a))) % 3);
        }
    // additivity
    for (int a = 0; a < 9; ++a)
        for (int b = 0; b < 9; ++b)
            REQUIRE(F.trace(F.add(fel(a), fel(b))) == (F.trace(fel(a)) + F.trace(fel(b))) % 3);
}

TEST_CASE("built-in moduli exist and are validated", "[fq]") {
    for (int q : {4, 8, 9, 16, 25, 27}) {
        Fq F = Fq::make(q);
        REQUIRE(F.q == q);
        // spot-check: u * u^(q-2)... every nonzero element has an inverse
        for (int a = 1; a < q; ++a) REQUIRE(F.mul(fel(a), F.inv(fel(a))) == 1);
    }
    // u^2 + 2u + 1 = (u+1)^2 is reducible over F_3
    REQUIRE_THROWS_AS(Fq::make(9, {1, 2, 1}), std::invalid_argument);
    // override with a different irreducible: u^2 + u + 2 over F_3
    Fq F = Fq::make(9, {2, 1, 1});
    fel u = F.from_digits({0, 1});
    // u^2 = -u - 2 = 2u + 1
    REQUIRE(F.mul(u, u) == F.from_digits({1, 2}));
}

TEST_CASE("digit round trip and context checks", "[fq]") {
    Fq F = Fq::make(27);
    for (int a = 0; a < 27; ++a) REQUIRE(F.from_digits(F.digits(fel(a))) == fel(a));
    REQUIRE_THROWS_AS(Fq::make(12), std::invalid_argument);
    REQUIRE_THROWS_AS(Fq::make(1), std::invalid_argument);
    Fq F3 = Fq::make(3);
    Fq F3b = Fq::make(3);
    REQUIRE(F3.same_context(F3b));
    REQUIRE_FALSE(F3.same_context(F));
}
