#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "costar/scalar_io.hpp"
#include "test_util.hpp"

using namespace costar;
using namespace costar::testutil;

TEST_CASE("gaussian rational field axioms on the generators") {
    CRat i = CRat::unit_i();
    CHECK(i * i == CRat(-1));
    CHECK((CRat(1) + i) * (CRat(1) - i) == CRat(2));
    CHECK(i.inv() == -i);
    CHECK(inv_i_pow(1) == -i);
    CHECK(inv_i_pow(2) == CRat(-1));
    CHECK(inv_i_pow(3) == i);
    CHECK(inv_i_pow(4) == CRat(1));

    Rng rng(11);
    for (int t = 0; t < 200; ++t) {
        CRat a = rand_crat(rng), b = rand_crat(rng), c = rand_crat(rng);
        CHECK(a * (b + c) == a * b + a * c);
        CHECK((a * b).conj() == a.conj() * b.conj());
        if (!b.is_zero()) CHECK(a / b * b == a);
    }
    CHECK(CRat(Rat(9, 4)).sqrt_real() == CRat(Rat(3, 2)));
    CHECK_THROWS(CRat(Rat(2)).sqrt_real());
    CHECK_THROWS(CRat(Rat(-1)).sqrt_real());
}

TEST_CASE("polynomial ring operations") {
    VarTable vt = VarTable::chart_vars(2);
    Poly x = Poly::variable(2, 0), y = Poly::variable(2, 1);
    Poly one = Poly::constant(2, CRat(1));

    SUBCASE("difference of squares factors through exact division") {
        Poly p = x * x - y * y;
        CHECK(p.div_exact(x - y) == x + y);
        CHECK(p.div_exact(x + y) == x - y);
        CHECK_THROWS(p.div_exact(x + one));
    }

    SUBCASE("derivative satisfies the Leibniz rule") {
        Rng rng(12);
        for (int t = 0; t < 60; ++t) {
            Poly f = rand_poly(rng, 2, 3, 4), g = rand_poly(rng, 2, 3, 4);
            for (int k = 0; k < 2; ++k)
                CHECK((f * g).derivative(k) == f.derivative(k) * g + f * g.derivative(k));
        }
    }

    SUBCASE("gcd recovers constructed common factors") {
        Rng rng(13);
        for (int t = 0; t < 40; ++t) {
            Poly u = rand_poly_nonzero(rng, 2, 2, 3);
            Poly v = rand_poly_nonzero(rng, 2, 2, 3);
            Poly w = rand_poly_nonzero(rng, 2, 2, 3);
            Poly g = poly_gcd(u * w, v * w);
            CHECK(g.divisible_by(w.scaled(w.leading().second.inv())));
            Poly a = (u * w).div_exact(g), b = (v * w).div_exact(g);
            CHECK(poly_gcd(a, b).is_constant());
        }
    }

    SUBCASE("gcd of coprime inputs is 1") {
        Poly a = x * x + one;  // irreducible over Q, and gcd(x^2+1, x+y) = 1
        CHECK(poly_gcd(a, x + y).is_constant());
    }

    SUBCASE("exact square root") {
        Poly s = (x + y * y).pow(2).scaled(CRat(Rat(9, 4)));
        Poly r = s.sqrt_exact();
        CHECK(r * r == s);
        CHECK_THROWS((x * y + one).sqrt_exact());
        CHECK_THROWS(s.scaled(CRat(2)).sqrt_exact());
    }
}

TEST_CASE("rational functions are canonical and exact") {
    VarTable vt = VarTable::chart_vars(2);
    auto q1 = RatFun::variable(2, 0), q2 = RatFun::variable(2, 1);

    SUBCASE("normalization collapses common factors") {
        // (q1^2 - q2^2)/(q1 - q2) == q1 + q2 as canonical representatives.
        RatFun f = (q1 * q1 - q2 * q2) / (q1 - q2);
        CHECK(f == q1 + q2);
        CHECK(f.is_polynomial());
    }

    SUBCASE("field laws on random elements") {
        Rng rng(14);
        for (int t = 0; t < 50; ++t) {
            RatFun a = rand_ratfun(rng, 2), b = rand_ratfun(rng, 2), c = rand_ratfun(rng, 2);
            CHECK(a * (b + c) == a * b + a * c);
            if (!b.is_zero()) CHECK(a / b * b == a);
            CHECK((a - a).is_zero());
        }
    }

    SUBCASE("partial derivatives: quotient rule against an independent expansion") {
        Rng rng(15);
        for (int t = 0; t < 40; ++t) {
            RatFun f = rand_ratfun(rng, 2), g = rand_ratfun(rng, 2);
            for (int k = 0; k < 2; ++k) {
                CHECK((f * g).partial(k) == f.partial(k) * g + f * g.partial(k));
                CHECK((f + g).partial(k) == f.partial(k) + g.partial(k));
            }
        }
        // Mixed partials commute.
        RatFun h = q1 * q1 * q2 / (RatFun::constant(2, CRat(1)) + q2 * q2);
        CHECK(h.partial(0).partial(1) == h.partial(1).partial(0));
    }

    SUBCASE("substitution is a homomorphism") {
        Rng rng(16);
        for (int t = 0; t < 25; ++t) {
            RatFun f = rand_ratfun(rng, 2), g = rand_ratfun(rng, 2);
            RatFun v = rand_ratfun(rng, 2);
            CHECK((f * g).subst(0, v) == f.subst(0, v) * g.subst(0, v));
            CHECK((f + g).subst(0, v) == f.subst(0, v) + g.subst(0, v));
        }
    }

    SUBCASE("integer powers, including negative") {
        RatFun f = q1 + q2 * q2;
        CHECK(f.pow(3) == f * f * f);
        CHECK(f.pow(-2) * f * f == RatFun::constant(2, CRat(1)));
        CHECK(f.pow(0) == RatFun::constant(2, CRat(1)));
    }

    SUBCASE("square roots of perfect squares") {
        RatFun m = (q1 * q1 + RatFun::constant(2, CRat(1))).pow(2) / (q2 * q2).pow(2);
        RatFun s = m.scaled(CRat(Rat(16))).sqrt_exact();
        CHECK(s * s == m.scaled(CRat(Rat(16))));
        CHECK_THROWS(m.scaled(CRat(2)).sqrt_exact());
    }
}

TEST_CASE("expression parser") {
    VarTable vt = VarTable::chart_vars(2);
    auto q1 = RatFun::variable(2, 0), q2 = RatFun::variable(2, 1);

    CHECK(parse_ratfun("(q1^2 - q2^2)/(q1^2 - 2*q1*q2 + q2^2)", vt) == (q1 + q2) / (q1 - q2));
    CHECK(parse_ratfun("1/2 + 1/2", vt) == RatFun::constant(2, CRat(1)));
    CHECK(parse_ratfun("i^2", vt) == RatFun::constant(2, CRat(-1)));
    CHECK(parse_ratfun("q1^-2", vt) == RatFun::constant(2, CRat(1)) / (q1 * q1));
    CHECK(parse_ratfun(" - q2 + q1 ", vt) == q1 - q2);
    CHECK(parse_ratfun("3*i*q1", vt) == q1.scaled(CRat(Rat(0), Rat(3))));

    CHECK_THROWS(parse_ratfun("q3", vt));
    CHECK_THROWS(parse_ratfun("q1 +", vt));
    CHECK_THROWS(parse_ratfun("(q1", vt));
    CHECK_THROWS(parse_ratfun("q1 $ q2", vt));
    CHECK_THROWS(parse_ratfun("1/(q1 - q1)", vt));

    SUBCASE("print/parse round trip") {
        Rng rng(17);
        for (int t = 0; t < 60; ++t) {
            RatFun f = rand_ratfun(rng, 2);
            CHECK(parse_ratfun(f.str(vt.names), vt) == f);
        }
    }

    SUBCASE("parameters participate as extra variables") {
        VarTable vt2 = VarTable::chart_vars(1);
        int s = vt2.add_param("s");
        RatFun f = parse_ratfun("s^2*q1", vt2);
        CHECK(f == RatFun::variable(vt2.nv(), s).pow(2) * RatFun::variable(vt2.nv(), 0));
        CHECK(f.partial(0) == RatFun::variable(vt2.nv(), s).pow(2));
    }
}
