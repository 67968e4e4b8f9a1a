#include "costar/ratfun.hpp"

#include <sstream>

namespace costar {

RatFun::RatFun(Poly num, Poly den) : num_(std::move(num)), den_(std::move(den)) {
    if (den_.is_zero()) throw std::domain_error("rational function with zero denominator");
    reduce();
}

void RatFun::reduce() {
    if (num_.is_zero()) {
        den_ = Poly::constant(num_.nv(), CRat(1));
        return;
    }
    if (!den_.is_constant()) {
        Poly g = poly_gcd(num_, den_);
        if (!g.is_constant()) {
            num_ = num_.div_exact(g);
            den_ = den_.div_exact(g);
        }
    }
    CRat lead = den_.leading().second;
    if (!lead.is_one()) {
        CRat inv = lead.inv();
        num_ = num_.scaled(inv);
        den_ = den_.scaled(inv);
    }
}

RatFun RatFun::from_coprime(Poly num, Poly den) {
    RatFun r;
    r.num_ = std::move(num);
    r.den_ = std::move(den);
    if (r.num_.is_zero()) {
        r.den_ = Poly::constant(r.num_.nv(), CRat(1));
        return r;
    }
    CRat lead = r.den_.leading().second;
    if (!lead.is_one()) {
        CRat inv = lead.inv();
        r.num_ = r.num_.scaled(inv);
        r.den_ = r.den_.scaled(inv);
    }
    return r;
}

RatFun RatFun::operator-() const {
    RatFun r = *this;
    r.num_ = -r.num_;
    return r;
}

// Sums of reduced fractions only pick up cancellation from the common part of
// the denominators: with d1 = g*u, d2 = g*v, g = gcd(d1, d2), the sum is
// (n1*v + n2*u) / (u*v*g) and every common factor of numerator and denominator
// divides g.  This keeps the expensive gcd confined to small operands.
RatFun RatFun::add_impl(const RatFun& a, const RatFun& b, bool negate) {
    const Poly& n1 = a.num();
    Poly n2 = negate ? -b.num() : b.num();
    if (n1.is_zero()) return RatFun::from_coprime(std::move(n2), b.den());
    if (n2.is_zero()) return a;
    if (a.den() == b.den()) {
        Poly t = n1 + n2;
        if (t.is_zero() || a.den().is_constant())
            return RatFun::from_coprime(std::move(t), a.den());
        Poly h = poly_gcd(t, a.den());
        if (h.is_constant()) return RatFun::from_coprime(std::move(t), a.den());
        return RatFun::from_coprime(t.div_exact(h), a.den().div_exact(h));
    }
    Poly g = poly_gcd(a.den(), b.den());
    if (g.is_constant())
        return RatFun::from_coprime(n1 * b.den() + n2 * a.den(), a.den() * b.den());
    Poly u = a.den().div_exact(g), v = b.den().div_exact(g);
    Poly t = n1 * v + n2 * u;
    if (t.is_zero()) return RatFun(a.nv());
    Poly h = poly_gcd(t, g);
    if (h.is_constant()) return RatFun::from_coprime(std::move(t), u * v * g);
    return RatFun::from_coprime(t.div_exact(h), u * v * g.div_exact(h));
}

RatFun operator+(const RatFun& a, const RatFun& b) { return RatFun::add_impl(a, b, false); }

RatFun operator-(const RatFun& a, const RatFun& b) { return RatFun::add_impl(a, b, true); }

RatFun operator*(const RatFun& a, const RatFun& b) {
    if (a.num_.is_zero() || b.num_.is_zero()) return RatFun(a.nv());
    // Cross-reduce; the surviving parts are pairwise coprime, so the product
    // needs no further reduction.
    Poly g1 = poly_gcd(a.num_, b.den_);
    Poly g2 = poly_gcd(b.num_, a.den_);
    Poly n1 = g1.is_constant() ? a.num_ : a.num_.div_exact(g1);
    Poly d2 = g1.is_constant() ? b.den_ : b.den_.div_exact(g1);
    Poly n2 = g2.is_constant() ? b.num_ : b.num_.div_exact(g2);
    Poly d1 = g2.is_constant() ? a.den_ : a.den_.div_exact(g2);
    return RatFun::from_coprime(n1 * n2, d1 * d2);
}

RatFun operator/(const RatFun& a, const RatFun& b) {
    if (b.num_.is_zero()) throw std::domain_error("division by zero rational function");
    return a * b.inv();
}

RatFun RatFun::scaled(const CRat& c) const {
    if (c.is_zero()) return RatFun(nv());
    RatFun r = *this;
    r.num_ = r.num_.scaled(c);
    return r;
}

RatFun RatFun::inv() const {
    if (num_.is_zero()) throw std::domain_error("inverse of zero rational function");
    return from_coprime(den_, num_);
}

RatFun RatFun::pow(int k) const {
    if (k < 0) return inv().pow(-k);
    // num and den are coprime, so no reduction is needed on powers.
    RatFun r(nv());
    r.num_ = num_.pow(k);
    r.den_ = den_.pow(k);
    CRat lead = r.den_.is_zero() ? CRat(1) : r.den_.leading().second;
    if (!lead.is_one()) {
        CRat inv = lead.inv();
        r.num_ = r.num_.scaled(inv);
        r.den_ = r.den_.scaled(inv);
    }
    return r;
}

RatFun RatFun::partial(int var) const {
    // (n/d)' = (n'd - nd')/d^2, with the common case d' = 0 kept cheap.
    Poly dd = den_.derivative(var);
    if (dd.is_zero()) return RatFun(num_.derivative(var), den_);
    // Deflate by e = gcd(d, d'): (n/d)' = (n'*s - n*(d'/e)) / (d*s) with
    // s = d/e, which keeps repeated denominator factors from inflating the
    // quotient-rule numerator.
    Poly e = poly_gcd(den_, dd);
    if (e.is_constant())
        return RatFun(num_.derivative(var) * den_ - num_ * dd, den_ * den_);
    Poly s = den_.div_exact(e);
    return RatFun(num_.derivative(var) * s - num_ * dd.div_exact(e), den_ * s);
}

RatFun RatFun::subst(int var, const RatFun& value) const {
    // Substitute into numerator and denominator with a shared denominator
    // power: p(x) -> sum c_e * vn^e * vd^(D-e) / vd^D.
    auto lift = [&](const Poly& p) {
        int d = p.degree(var);
        if (d <= 0) return std::pair<Poly, int>(p.extended(value.nv()), 0);
        Poly acc(value.nv());
        for (auto& [e, c] : p.terms()) {
            Exp e2 = e;
            int k = e2[var];
            e2[var] = 0;
            Poly t = Poly::monomial(p.nv(), e2, c).extended(value.nv());
            t *= value.num().pow(k) * value.den().pow(d - k);
            acc += t;
        }
        return std::pair<Poly, int>(acc, d);
    };
    auto [n2, dn] = lift(num_);
    auto [d2, dd] = lift(den_);
    // num/den = n2 / vd^dn over d2 / vd^dd.
    if (dn > dd)
        d2 *= value.den().pow(dn - dd);
    else if (dd > dn)
        n2 *= value.den().pow(dd - dn);
    return RatFun(n2, d2);
}

RatFun RatFun::sqrt_exact() const {
    if (num_.is_zero()) return RatFun(nv());
    RatFun r(nv());
    Poly sn = num_.sqrt_exact();
    Poly sd = den_.sqrt_exact();
    return RatFun(sn, sd);
}

std::string RatFun::str(const std::vector<std::string>& names) const {
    if (den_.is_constant() && den_.constant_value().is_one()) {
        if (num_.is_constant() || num_.terms().size() == 1) return num_.str(names);
        return "(" + num_.str(names) + ")";
    }
    std::ostringstream os;
    os << "(" << num_.str(names) << ")/(" << den_.str(names) << ")";
    return os.str();
}

}  // namespace costar
