#pragma once

#include "costar/ratfun.hpp"

#include <random>

namespace costar::testutil {

// All randomized tests draw from mt19937_64 with fixed seeds so failures are
// reproducible and runs are byte-identical across platforms.
using Rng = std::mt19937_64;

inline long rand_int(Rng& rng, long lo, long hi) {
    return lo + long(rng() % (unsigned long)(hi - lo + 1));
}

inline CRat rand_crat(Rng& rng, bool allow_imag = true) {
    Rat re(rand_int(rng, -4, 4), rand_int(rng, 1, 3));
    re.canonicalize();
    Rat im(0);
    if (allow_imag && rng() % 3 == 0) {
        im = Rat(rand_int(rng, -3, 3), rand_int(rng, 1, 2));
        im.canonicalize();
    }
    return CRat(re, im);
}

inline Poly rand_poly(Rng& rng, int nv, int max_deg, int max_terms, bool allow_imag = true) {
    Poly p(nv);
    int terms = int(rand_int(rng, 1, max_terms));
    for (int t = 0; t < terms; ++t) {
        Exp e(size_t(nv), 0);
        for (int k = 0; k < nv; ++k) e[size_t(k)] = uint16_t(rand_int(rng, 0, max_deg));
        p.add_term(e, rand_crat(rng, allow_imag));
    }
    return p;
}

inline Poly rand_poly_nonzero(Rng& rng, int nv, int max_deg, int max_terms, bool allow_imag = true) {
    while (true) {
        Poly p = rand_poly(rng, nv, max_deg, max_terms, allow_imag);
        if (!p.is_zero()) return p;
    }
}

inline RatFun rand_ratfun(Rng& rng, int nv, int max_deg = 2, int max_terms = 3) {
    Poly n = rand_poly(rng, nv, max_deg, max_terms);
    Poly d = rand_poly_nonzero(rng, nv, 1, 2);
    return RatFun(n, d);
}

}  // namespace costar::testutil

#ifdef COSTAR_TESTUTIL_FEDOSOV
#include <bit>

#include "costar/fedosov.hpp"

namespace costar::testutil {

// Random fibre-algebra element with small degrees and polynomial
// coefficients; gcds on rational coefficients would dominate otherwise.
inline FedosovElement rand_fedosov(Rng& rng, int n, int max_sd = 2, int max_e = 1,
                                   int max_terms = 3) {
    FedosovElement f(n);
    int terms = int(rand_int(rng, 1, max_terms));
    for (int t = 0; t < terms; ++t) {
        FKey k;
        k.s.assign(size_t(n), 0);
        k.d.assign(size_t(n), 0);
        for (int tries = int(rand_int(rng, 0, max_sd)); tries > 0; --tries)
            k.s[size_t(rand_int(rng, 0, n - 1))]++;
        for (int tries = int(rand_int(rng, 0, max_sd)); tries > 0; --tries)
            k.d[size_t(rand_int(rng, 0, n - 1))]++;
        k.a = uint32_t(rand_int(rng, 0, (1 << n) - 1));
        k.e = int(rand_int(rng, 0, max_e));
        f.add_term(k, RatFun(rand_poly_nonzero(rng, n, 2, 2, false)));
    }
    return f;
}

// Same, but every term shares one antisymmetric parity.
inline FedosovElement rand_fedosov_parity(Rng& rng, int n, int parity) {
    while (true) {
        FedosovElement f = rand_fedosov(rng, n);
        FedosovElement out(n);
        for (auto& [k, c] : f.terms())
            if (std::popcount(k.a) % 2 == parity) out.add_term(k, c);
        if (!out.is_zero()) return out;
    }
}

}  // namespace costar::testutil
#endif

#ifdef COSTAR_TESTUTIL_STAR
#include "costar/mompoly.hpp"

namespace costar::testutil {

// Random phase-space polynomial: small p-degrees and lambda powers,
// polynomial q-coefficients.
inline MomentumPolynomial rand_mompoly(Rng& rng, int n, int nv, int max_p = 2, int max_e = 1,
                                       int max_terms = 3, bool allow_imag = false) {
    MomentumPolynomial f(n);
    int terms = int(rand_int(rng, 1, max_terms));
    for (int t = 0; t < terms; ++t) {
        MKey k{Exp(size_t(n), 0), int(rand_int(rng, 0, max_e))};
        for (int tries = int(rand_int(rng, 0, max_p)); tries > 0; --tries)
            k.m[size_t(rand_int(rng, 0, n - 1))]++;
        f.add_term(k, RatFun(rand_poly_nonzero(rng, nv, 2, 2, allow_imag)));
    }
    return f;
}

// Random lambda-free momentum polynomial of exact p-homogeneity degree d.
inline MomentumPolynomial rand_mompoly_homog(Rng& rng, int n, int nv, int d, int max_terms = 3) {
    MomentumPolynomial f(n);
    int terms = int(rand_int(rng, 1, max_terms));
    for (int t = 0; t < terms; ++t) {
        MKey k{Exp(size_t(n), 0), 0};
        for (int j = 0; j < d; ++j) k.m[size_t(rand_int(rng, 0, n - 1))]++;
        f.add_term(k, RatFun(rand_poly_nonzero(rng, nv, 2, 2, false)));
    }
    return f;
}

}  // namespace costar::testutil
#endif
