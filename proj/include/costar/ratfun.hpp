#pragma once

#include "costar/poly.hpp"

#include <string>
#include <vector>

namespace costar {

// Rational function num/den over Q(i) in a fixed variable set, kept in the
// unique reduced form: gcd(num, den) = 1 and den monic in lex order.  Equality
// of values is therefore equality of representations.
class RatFun {
  public:
    RatFun() : num_(0), den_(0) {}
    explicit RatFun(int nv) : num_(nv), den_(Poly::constant(nv, CRat(1))) {}
    RatFun(Poly num, Poly den);
    explicit RatFun(const Poly& p) : num_(p), den_(Poly::constant(p.nv(), CRat(1))) {}

    static RatFun constant(int nv, const CRat& c) { return RatFun(Poly::constant(nv, c)); }
    static RatFun variable(int nv, int k) { return RatFun(Poly::variable(nv, k)); }

    int nv() const { return num_.nv(); }
    bool is_zero() const { return num_.is_zero(); }
    bool is_constant() const { return num_.is_constant() && den_.is_constant(); }
    CRat constant_value() const { return num_.constant_value() / den_.constant_value(); }
    bool is_polynomial() const { return den_.is_constant(); }
    const Poly& num() const { return num_; }
    const Poly& den() const { return den_; }

    RatFun operator-() const;
    RatFun& operator+=(const RatFun& o) { *this = *this + o; return *this; }
    RatFun& operator-=(const RatFun& o) { *this = *this - o; return *this; }
    RatFun& operator*=(const RatFun& o) { *this = *this * o; return *this; }
    RatFun& operator/=(const RatFun& o) { *this = *this / o; return *this; }
    friend RatFun operator+(const RatFun& a, const RatFun& b);
    friend RatFun operator-(const RatFun& a, const RatFun& b);
    friend RatFun operator*(const RatFun& a, const RatFun& b);
    friend RatFun operator/(const RatFun& a, const RatFun& b);
    RatFun scaled(const CRat& c) const;
    RatFun inv() const;
    RatFun pow(int k) const;

    friend bool operator==(const RatFun& a, const RatFun& b) { return a.num_ == b.num_ && a.den_ == b.den_; }
    friend bool operator!=(const RatFun& a, const RatFun& b) { return !(a == b); }
    int cmp(const RatFun& o) const {
        int c = num_.cmp(o.num_);
        return c != 0 ? c : den_.cmp(o.den_);
    }

    RatFun partial(int var) const;
    RatFun conj() const { return RatFun(num_.conj(), den_.conj()); }
    RatFun subst(int var, const RatFun& value) const;
    RatFun extended(int new_nv) const { return RatFun(num_.extended(new_nv), den_.extended(new_nv)); }

    // Exact square root; throws if the function is not a perfect square of a
    // rational function (numerator and denominator both perfect squares).
    RatFun sqrt_exact() const;

    std::string str(const std::vector<std::string>& names) const;

  private:
    Poly num_, den_;
    void reduce();
    // Assembles num/den known to be coprime already; only unit-normalizes.
    // The arithmetic operators use this to avoid recomputing large gcds.
    static RatFun from_coprime(Poly num, Poly den);
    static RatFun add_impl(const RatFun& a, const RatFun& b, bool negate);
};

}  // namespace costar
