#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#define COSTAR_TESTUTIL_STAR
#include "costar/mompoly.hpp"
#include "costar/scalar_io.hpp"
#include "test_util.hpp"

using namespace costar;
using namespace costar::testutil;

namespace {

ChartSpec flat() { return load_chart(std::string(COSTAR_CHART_DIR) + "/flat2.json"); }
ChartSpec hyp() { return load_chart(std::string(COSTAR_CHART_DIR) + "/halfplane.json"); }
ChartSpec sph() { return load_chart(std::string(COSTAR_CHART_DIR) + "/sphere2.json"); }

MomentumPolynomial p(int i) { return MomentumPolynomial::p_var(2, 2, i); }
MomentumPolynomial q(int i) { return MomentumPolynomial::pi_star(2, RatFun::variable(2, i)); }
MomentumPolynomial lam() {
    return MomentumPolynomial::pi_star(2, RatFun::constant(2, CRat(1))).lambda_scaled(1);
}

}  // namespace

TEST_CASE("phase-space polynomial arithmetic") {
    Rng rng(60);
    for (int t = 0; t < 30; ++t) {
        MomentumPolynomial f = rand_mompoly(rng, 2, 2, 2, 1, 3, true);
        MomentumPolynomial g = rand_mompoly(rng, 2, 2, 2, 1, 3, true);
        MomentumPolynomial h = rand_mompoly(rng, 2, 2, 2, 1, 3, true);
        CHECK(f * g == g * f);
        CHECK((f * g) * h == f * (g * h));
        CHECK(f * (g + h) == f * g + f * h);
        CHECK(f.conj().conj() == f);
        CHECK((f * g).conj() == f.conj() * g.conj());
        // the homogeneity operator is a derivation of the pointwise product
        CHECK((f * g).h_apply() == f.h_apply() * g + f * g.h_apply());
    }
    CHECK(p(0).pdeg() == 1);
    CHECK(lam().max_lambda() == 1);
    CHECK((q(0) * p(0)).h_apply() == q(0) * p(0));
    CHECK(lam().h_apply() == lam());
}

TEST_CASE("canonical Poisson structure") {
    CHECK(poisson(q(0), p(0)) == MomentumPolynomial::pi_star(2, RatFun::constant(2, CRat(1))));
    CHECK(poisson(q(0), p(1)).is_zero());
    CHECK(poisson(q(0), q(1)).is_zero());
    CHECK(poisson(p(0), p(1)).is_zero());

    Rng rng(61);
    for (int t = 0; t < 20; ++t) {
        MomentumPolynomial u = rand_mompoly(rng, 2, 2);
        MomentumPolynomial v = rand_mompoly(rng, 2, 2);
        MomentumPolynomial w = rand_mompoly(rng, 2, 2);
        CHECK(poisson(u, v) == -poisson(v, u));
        CHECK(poisson(u, v * w) == poisson(u, v) * w + v * poisson(u, w));
        MomentumPolynomial jac = poisson(u, poisson(v, w)) + poisson(v, poisson(w, u)) +
                                 poisson(w, poisson(u, v));
        CHECK(jac.is_zero());
    }
}

TEST_CASE("substituting the momenta") {
    Rng rng(62);
    std::vector<MomentumPolynomial> id{p(0), p(1)};
    for (int t = 0; t < 10; ++t) {
        MomentumPolynomial f = rand_mompoly(rng, 2, 2);
        CHECK(f.subst_p(id) == f);
    }
    // p1 -> p1 - q2 is an algebra map
    std::vector<MomentumPolynomial> sh{p(0) - q(1), p(1)};
    for (int t = 0; t < 10; ++t) {
        MomentumPolynomial f = rand_mompoly(rng, 2, 2);
        MomentumPolynomial g = rand_mompoly(rng, 2, 2);
        CHECK((f * g).subst_p(sh) == f.subst_p(sh) * g.subst_p(sh));
    }
    CHECK(p(0).subst_p(sh) == p(0) - q(1));
}

TEST_CASE("tensor hat isomorphism") {
    SUBCASE("basis examples") {
        SymTensor d1{2, {}};
        d1.comps.emplace(MKey{Exp{1, 0}, 0}, RatFun::constant(2, CRat(1)));
        SymTensor d2{2, {}};
        d2.comps.emplace(MKey{Exp{0, 1}, 0}, RatFun::constant(2, CRat(1)));
        CHECK(hat(vee(d1, d2)) == p(0) * p(1));
        CHECK(hat(vee(d1, d1)) == p(0) * p(0));
        // degree zero: plain pull-back
        SymTensor f0{2, {}};
        f0.comps.emplace(MKey{Exp{0, 0}, 0}, RatFun::variable(2, 0));
        CHECK(hat(f0) == q(0));
    }

    SUBCASE("round trips and multiplicativity") {
        Rng rng(63);
        for (int t = 0; t < 25; ++t) {
            MomentumPolynomial f = rand_mompoly(rng, 2, 2);
            MomentumPolynomial g = rand_mompoly(rng, 2, 2);
            CHECK(hat(unhat(f)) == f);
            CHECK(unhat(hat(unhat(f))) == unhat(f));
            CHECK(hat(vee(unhat(f), unhat(g))) == f * g);
        }
    }

    SUBCASE("free Hamiltonian of the half-plane metric") {
        ChartSpec c = hyp();
        std::vector<RatFun> ginv = metric_inverse(c);
        SymTensor gs{2, {}};
        gs.comps.emplace(MKey{Exp{2, 0}, 0}, ginv[0]);
        gs.comps.emplace(MKey{Exp{1, 1}, 0}, ginv[1]);
        gs.comps.emplace(MKey{Exp{0, 2}, 0}, ginv[3]);
        // (q2)^2/2 (p1^2 + p2^2)
        RatFun half_q2sq = RatFun::variable(2, 1).pow(2).scaled(CRat(Rat(1, 2)));
        MomentumPolynomial want =
            (p(0) * p(0) + p(1) * p(1)).fun_scaled(half_q2sq);
        CHECK(hat(gs) == want);
    }
}

TEST_CASE("differential operators on the base") {
    Rng rng(64);
    int nv = 2;
    DiffOpQ d1 = DiffOpQ::partial(2, nv, 0);
    DiffOpQ mq2 = DiffOpQ::mult(2, RatFun::variable(nv, 1));
    DiffOpQ mq1 = DiffOpQ::mult(2, RatFun::variable(nv, 0));
    CHECK(compose(d1, mq1) - compose(mq1, d1) == DiffOpQ::identity(2, nv));
    CHECK(compose(d1, mq2) == compose(mq2, d1));

    for (int t = 0; t < 15; ++t) {
        DiffOpQ A(2), B(2), C(2);
        for (int j = 0; j < 2; ++j) {
            MKey k{Exp{uint16_t(rand_int(rng, 0, 2)), uint16_t(rand_int(rng, 0, 1))},
                   int(rand_int(rng, 0, 1))};
            A.add_term(k, RatFun(rand_poly_nonzero(rng, nv, 2, 2, false)));
            k.m = Exp{uint16_t(rand_int(rng, 0, 1)), uint16_t(rand_int(rng, 0, 2))};
            B.add_term(k, RatFun(rand_poly_nonzero(rng, nv, 2, 2, false)));
            C.add_term(k, RatFun(rand_poly_nonzero(rng, nv, 2, 2, false)));
        }
        CHECK(compose(compose(A, B), C) == compose(A, compose(B, C)));
        RatFun psi = rand_ratfun(rng, nv);
        CHECK(compose(A, B).apply(psi) == A.apply(B.apply(psi)));
        CHECK((A + B).apply(psi) == A.apply(psi) + B.apply(psi));
    }
}

TEST_CASE("the order-transport operator") {
    ChartSpec f = flat(), h = hyp(), s = sph();
    Rng rng(65);

    SUBCASE("flat examples") {
        CHECK(delta_apply(q(0) * q(0), f).is_zero());
        MomentumPolynomial one = MomentumPolynomial::pi_star(2, RatFun::constant(2, CRat(1)));
        CHECK(delta_apply(p(0) * q(0), f) == one);
        // N(p1 q1) = p1 q1 + lambda/(2i)
        CHECK(N_apply(p(0) * q(0), f) ==
              p(0) * q(0) + one.lambda_scaled(1).scaled(CRat(Rat(0), Rat(-1, 2))));
    }

    SUBCASE("degree bookkeeping") {
        for (int t = 0; t < 15; ++t) {
            MomentumPolynomial g = rand_mompoly(rng, 2, 2, 3);
            MomentumPolynomial dg = delta_apply(g, h);
            if (!dg.is_zero()) CHECK(dg.pdeg() == g.pdeg() - 1);
            // H(Delta g) = Delta(H g) - Delta g
            CHECK(delta_apply(g.h_apply(), h) - delta_apply(g, h).h_apply() ==
                  delta_apply(g, h));
        }
    }

    SUBCASE("exponential inverse pair and reality") {
        for (const ChartSpec& c : {h, s}) {
            for (int t = 0; t < 12; ++t) {
                MomentumPolynomial g = rand_mompoly(rng, 2, 2, 3, 1, 3, true);
                CHECK(N_apply(N_apply(g, c), c, -1) == g);
                CHECK(N_apply(g, c).conj() == N_apply(g.conj(), c, -1));
                CHECK(N_apply(g.h_apply(), c) == N_apply(g, c).h_apply());
            }
        }
    }

    SUBCASE("momentum-independent functions are fixed") {
        for (int t = 0; t < 8; ++t) {
            MomentumPolynomial chi =
                MomentumPolynomial::pi_star(2, rand_ratfun(rng, 2));
            CHECK(delta_apply(chi, s).is_zero());
            CHECK(N_apply(chi, s) == chi);
        }
    }
}
