#pragma once

#include "costar/rational.hpp"

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace costar {

// Exponent vector; entry k is the exponent of variable k.
using Exp = std::vector<uint16_t>;

inline int exp_total(const Exp& e) {
    int t = 0;
    for (auto v : e) t += v;
    return t;
}

struct LexLess {
    bool operator()(const Exp& a, const Exp& b) const {
        // Same variable count is an invariant of every call site.
        for (size_t k = 0; k < a.size(); ++k)
            if (a[k] != b[k]) return a[k] < b[k];
        return false;
    }
};

// Sparse multivariate polynomial over the Gaussian rationals, canonical by
// construction: terms sorted in lex order, no zero coefficients stored.
class Poly {
  public:
    using Terms = std::map<Exp, CRat, LexLess>;

    Poly() : nv_(0) {}
    explicit Poly(int nv) : nv_(nv) {}

    static Poly constant(int nv, const CRat& c);
    static Poly variable(int nv, int k);
    static Poly monomial(int nv, Exp e, const CRat& c);

    int nv() const { return nv_; }
    bool is_zero() const { return terms_.empty(); }
    bool is_constant() const { return terms_.empty() || (terms_.size() == 1 && exp_total(terms_.begin()->first) == 0); }
    CRat constant_value() const;  // requires is_constant()
    const Terms& terms() const { return terms_; }

    int degree(int var) const;
    int total_degree() const;
    // Leading term in lex order (largest exponent vector).
    const std::pair<const Exp, CRat>& leading() const;

    Poly operator-() const;
    Poly& operator+=(const Poly& o);
    Poly& operator-=(const Poly& o);
    friend Poly operator+(Poly a, const Poly& b) { return a += b; }
    friend Poly operator-(Poly a, const Poly& b) { return a -= b; }
    friend Poly operator*(const Poly& a, const Poly& b);
    Poly& operator*=(const Poly& o) { *this = *this * o; return *this; }
    Poly scaled(const CRat& c) const;
    Poly pow(int k) const;

    friend bool operator==(const Poly& a, const Poly& b) { return a.nv_ == b.nv_ && a.terms_ == b.terms_; }
    friend bool operator!=(const Poly& a, const Poly& b) { return !(a == b); }
    int cmp(const Poly& o) const;  // total order for use as container key

    Poly derivative(int var) const;
    Poly conj() const;
    Poly subst(int var, const Poly& value) const;  // value may use more variables
    Poly extended(int new_nv) const;               // pad exponent vectors

    // Exact division; throws std::domain_error if not divisible.
    Poly div_exact(const Poly& d) const;
    bool divisible_by(const Poly& d) const;

    // Exact square root of a perfect square with real coefficients; throws if
    // the polynomial is not of that form.
    Poly sqrt_exact() const;

    void add_term(const Exp& e, const CRat& c);  // accumulate, dropping zeros

    std::string str(const std::vector<std::string>& names) const;

  private:
    int nv_;
    Terms terms_;
};

// gcd over Q(i)[x1..xn], unit-normalized to monic leading coefficient.
Poly poly_gcd(const Poly& a, const Poly& b);

}  // namespace costar
