#pragma once

#include <gmpxx.h>

#include <cstdint>
#include <stdexcept>
#include <string>

namespace costar {

using Rat = mpq_class;

// Complex rational number a + b*i, the coefficient field for everything in this
// library.  Exact, always canonical (mpq_class keeps fractions reduced).
struct CRat {
    Rat re, im;

    CRat() : re(0), im(0) {}
    CRat(long v) : re(v), im(0) {}
    CRat(const Rat& r) : re(r), im(0) {}
    CRat(Rat r, Rat i) : re(std::move(r)), im(std::move(i)) {}

    static CRat unit_i() { return CRat(Rat(0), Rat(1)); }
    static CRat from_ratio(long p, long q) {
        if (q == 0) throw std::invalid_argument("rational with zero denominator");
        Rat r(p, q);
        r.canonicalize();
        return CRat(r);
    }

    bool is_zero() const { return sgn(re) == 0 && sgn(im) == 0; }
    bool is_real() const { return sgn(im) == 0; }
    bool is_one() const { return re == 1 && sgn(im) == 0; }

    CRat conj() const { return CRat(re, -im); }
    Rat norm2() const { return re * re + im * im; }

    CRat operator-() const { return CRat(-re, -im); }
    CRat& operator+=(const CRat& o) { re += o.re; im += o.im; return *this; }
    CRat& operator-=(const CRat& o) { re -= o.re; im -= o.im; return *this; }
    CRat& operator*=(const CRat& o) {
        Rat r = re * o.re - im * o.im;
        Rat i = re * o.im + im * o.re;
        re = std::move(r);
        im = std::move(i);
        return *this;
    }
    CRat inv() const {
        Rat n = norm2();
        if (sgn(n) == 0) throw std::domain_error("division by zero");
        return CRat(re / n, -im / n);
    }
    CRat& operator/=(const CRat& o) { return *this *= o.inv(); }

    friend CRat operator+(CRat a, const CRat& b) { return a += b; }
    friend CRat operator-(CRat a, const CRat& b) { return a -= b; }
    friend CRat operator*(CRat a, const CRat& b) { return a *= b; }
    friend CRat operator/(CRat a, const CRat& b) { return a /= b; }
    friend bool operator==(const CRat& a, const CRat& b) { return a.re == b.re && a.im == b.im; }
    friend bool operator!=(const CRat& a, const CRat& b) { return !(a == b); }

    // Total order (lexicographic on (re, im)); used for canonical term ordering.
    int cmp(const CRat& o) const {
        int c = ::cmp(re, o.re);
        if (c != 0) return c;
        return ::cmp(im, o.im);
    }

    CRat pow(long k) const {
        if (k < 0) return inv().pow(-k);
        CRat acc(1), base = *this;
        while (k > 0) {
            if (k & 1) acc *= base;
            base *= base;
            k >>= 1;
        }
        return acc;
    }

    // Exact square root of a nonnegative real rational; throws otherwise.
    CRat sqrt_real() const;

    std::string str() const;
};

// (1/i)^k = (-i)^k, a frequently needed unit.
inline CRat inv_i_pow(long k) {
    switch (((k % 4) + 4) % 4) {
        case 0: return CRat(1);
        case 1: return CRat(Rat(0), Rat(-1));
        case 2: return CRat(-1);
        default: return CRat(Rat(0), Rat(1));
    }
}

}  // namespace costar
