#pragma once

#include "costar/rational.hpp"

#include <functional>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace costar {

// Support classes for formal series in one parameter with rational exponents.
// Every class requires a smallest exponent; they differ in which supports are
// admissable:
//   Power   - integer exponents >= 0
//   Laurent - integer exponents, bounded below
//   NP      - rational exponents with a common denominator (Newton-Puiseux)
//   CNP     - rational exponents, finitely many in every bounded window
// NP is not Cauchy-complete, which is why fixed-point iteration rejects it;
// for lazily represented CNP supports the admissibility certificate covers the
// stored prefix [order, truncation] only.
enum class SeriesClass { Power, Laurent, NP, CNP };

inline const char* series_class_name(SeriesClass c) {
    switch (c) {
        case SeriesClass::Power: return "power";
        case SeriesClass::Laurent: return "laurent";
        case SeriesClass::NP: return "np";
        default: return "cnp";
    }
}

struct RatLess {
    bool operator()(const Rat& a, const Rat& b) const { return cmp(a, b) < 0; }
};

// Ultrametric distance 2^(-o); represented exactly by the exponent o since
// 2^(-o) is irrational for non-integer rational o.  Comparisons invert the
// exponent order.
struct SeriesDistance {
    bool zero = true;
    Rat exponent;  // meaningful when !zero

    static SeriesDistance at(const Rat& o) { return SeriesDistance{false, o}; }

    friend bool operator==(const SeriesDistance& a, const SeriesDistance& b) {
        return a.zero == b.zero && (a.zero || a.exponent == b.exponent);
    }
    friend bool operator<(const SeriesDistance& a, const SeriesDistance& b) {
        if (a.zero) return !b.zero;
        if (b.zero) return false;
        return cmp(a.exponent, b.exponent) > 0;
    }
    friend bool operator<=(const SeriesDistance& a, const SeriesDistance& b) { return a < b || a == b; }

    // Exact rational value; only integer exponents have one.
    Rat value() const {
        if (zero) return Rat(0);
        if (exponent.get_den() != 1) throw std::domain_error("2^(-p/q) is not rational");
        long e = exponent.get_num().get_si();
        Rat v(1);
        mpz_class two_abs;
        mpz_ui_pow_ui(two_abs.get_mpz_t(), 2, static_cast<unsigned long>(e < 0 ? -e : e));
        return e >= 0 ? Rat(1, two_abs) : Rat(two_abs, 1);
    }
};

template <class C>
class FormalSeries {
  public:
    using Coeffs = std::map<Rat, C, RatLess>;

    FormalSeries() : cls_(SeriesClass::Power) {}
    explicit FormalSeries(SeriesClass cls, std::optional<Rat> truncation = std::nullopt)
        : cls_(cls), trunc_(std::move(truncation)) {}

    SeriesClass cls() const { return cls_; }
    const std::optional<Rat>& truncation() const { return trunc_; }
    const Coeffs& coeffs() const { return coeffs_; }
    bool is_zero() const { return coeffs_.empty(); }

    void set_coeff(const Rat& e, C c) {
        check_admissable(e);
        if (trunc_ && cmp(e, *trunc_) > 0) return;
        if (c == C{})
            coeffs_.erase(e);
        else
            coeffs_.insert_or_assign(e, std::move(c));
    }

    const C* coeff(const Rat& e) const {
        auto it = coeffs_.find(e);
        return it == coeffs_.end() ? nullptr : &it->second;
    }

    // Smallest exponent in the support; nullopt means "no terms up to the
    // truncation", i.e. order +infinity as far as this representation knows.
    std::optional<Rat> order() const {
        if (coeffs_.empty()) return std::nullopt;
        return coeffs_.begin()->first;
    }

    FormalSeries truncated(const Rat& K) const {
        FormalSeries r(cls_, trunc_ ? (cmp(*trunc_, K) < 0 ? *trunc_ : K) : K);
        for (auto& [e, c] : coeffs_) {
            if (cmp(e, *r.trunc_) > 0) break;
            r.coeffs_.emplace(e, c);
        }
        return r;
    }

    FormalSeries operator-() const {
        FormalSeries r(cls_, trunc_);
        for (auto& [e, c] : coeffs_) r.coeffs_.emplace(e, -c);
        return r;
    }

    friend FormalSeries operator+(const FormalSeries& a, const FormalSeries& b) {
        FormalSeries r(join_class(a.cls_, b.cls_), min_trunc(a.trunc_, b.trunc_));
        r.coeffs_ = a.coeffs_;
        for (auto& [e, c] : b.coeffs_) {
            auto it = r.coeffs_.find(e);
            if (it == r.coeffs_.end())
                r.coeffs_.emplace(e, c);
            else {
                it->second = it->second + c;
                if (it->second == C{}) r.coeffs_.erase(it);
            }
        }
        r.apply_trunc();
        return r;
    }

    friend FormalSeries operator-(const FormalSeries& a, const FormalSeries& b) { return a + (-b); }

    // Cauchy product.  The reliable window shrinks with the operands' orders:
    // terms beyond min(Ka + o(b), Kb + o(a)) would need dropped coefficients.
    friend FormalSeries operator*(const FormalSeries& a, const FormalSeries& b) {
        std::optional<Rat> t;
        if (a.trunc_ && !b.coeffs_.empty()) t = min_trunc(t, Rat(*a.trunc_ + b.coeffs_.begin()->first));
        if (b.trunc_ && !a.coeffs_.empty()) t = min_trunc(t, Rat(*b.trunc_ + a.coeffs_.begin()->first));
        if ((a.trunc_ || b.trunc_) && !t) t = min_trunc(a.trunc_, b.trunc_);
        FormalSeries r(join_class(a.cls_, b.cls_), t);
        for (auto& [ea, ca] : a.coeffs_)
            for (auto& [eb, cb] : b.coeffs_) {
                Rat e = ea + eb;
                if (r.trunc_ && cmp(e, *r.trunc_) > 0) continue;
                C prod = ca * cb;
                if (prod == C{}) continue;
                auto it = r.coeffs_.find(e);
                if (it == r.coeffs_.end())
                    r.coeffs_.emplace(e, std::move(prod));
                else {
                    it->second = it->second + prod;
                    if (it->second == C{}) r.coeffs_.erase(it);
                }
            }
        return r;
    }

    friend bool operator==(const FormalSeries& a, const FormalSeries& b) {
        return a.coeffs_ == b.coeffs_;
    }

    static SeriesDistance distance(const FormalSeries& a, const FormalSeries& b) {
        FormalSeries d = a - b;
        auto o = d.order();
        if (!o) return SeriesDistance{};
        return SeriesDistance::at(*o);
    }

  private:
    SeriesClass cls_;
    std::optional<Rat> trunc_;
    Coeffs coeffs_;

    void check_admissable(const Rat& e) const {
        switch (cls_) {
            case SeriesClass::Power:
                if (e.get_den() != 1 || sgn(e) < 0)
                    throw std::domain_error("power series exponents must be integers >= 0");
                break;
            case SeriesClass::Laurent:
                if (e.get_den() != 1) throw std::domain_error("laurent exponents must be integers");
                break;
            default:
                break;  // NP/CNP: any rational; the stored prefix is always locally finite
        }
    }

    void apply_trunc() {
        if (!trunc_) return;
        auto it = coeffs_.upper_bound(*trunc_);
        coeffs_.erase(it, coeffs_.end());
    }

    static SeriesClass join_class(SeriesClass a, SeriesClass b) { return a < b ? b : a; }

    static std::optional<Rat> min_trunc(const std::optional<Rat>& a, const std::optional<Rat>& b) {
        if (!a) return b;
        if (!b) return a;
        return cmp(*a, *b) < 0 ? a : b;
    }
};

// Positivity in the ordered sense for scalar coefficient modules: a series is
// positive iff its lowest-order coefficient is a positive real rational.
inline bool is_positive(const FormalSeries<CRat>& f) {
    auto o = f.order();
    if (!o) return false;
    const CRat& c = *f.coeff(*o);
    return c.is_real() && sgn(c.re) > 0;
}

// Multiplicative inverse of a scalar series up to the truncation K, by the
// usual geometric expansion around the lowest term.
FormalSeries<CRat> series_inverse(const FormalSeries<CRat>& f, const Rat& K);

// A self-map of series that raises order by at least `gain` > 0 on
// differences; the contraction data for fixed-point iteration.
template <class C>
struct DegreeRaisingMap {
    Rat gain;
    std::function<FormalSeries<C>(const FormalSeries<C>&)> apply;
};

// Banach fixed point at truncation K.  Rejects Newton-Puiseux series (not
// Cauchy-complete) and maps whose iterates fail to raise order.
template <class C>
FormalSeries<C> fixed_point(const DegreeRaisingMap<C>& T, const FormalSeries<C>& seed, const Rat& K) {
    if (seed.cls() == SeriesClass::NP)
        throw std::domain_error("fixed-point iteration is unavailable for Newton-Puiseux series: "
                                "the class is not Cauchy-complete");
    if (sgn(T.gain) <= 0) throw std::domain_error("degree-raising gain must be positive");
    FormalSeries<C> v = seed.truncated(K);
    std::optional<Rat> prev;
    while (true) {
        FormalSeries<C> next = T.apply(v).truncated(K);
        auto diff = FormalSeries<C>::distance(next, v);
        v = std::move(next);
        if (diff.zero) return v;
        if (cmp(diff.exponent, K) > 0) return v;
        if (prev && cmp(diff.exponent, *prev) <= 0)
            throw std::domain_error("map does not raise series order; fixed-point iteration aborted");
        prev = diff.exponent;
    }
}

// Lift a linear map on coefficients to a map on series.  Only lifted maps are
// guaranteed to respect the series structure; a coefficient-level homomorphism
// does not automatically extend further than this.
template <class C>
FormalSeries<C> lift_linear(const std::function<C(const C&)>& F, const FormalSeries<C>& f) {
    FormalSeries<C> r(f.cls(), f.truncation());
    for (auto& [e, c] : f.coeffs()) r.set_coeff(e, F(c));
    return r;
}

}  // namespace costar
