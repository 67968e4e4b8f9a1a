#pragma once

// The fibrewise algebra underlying the star-product construction: formal
// power series in symmetric dq-factors (s), dual-symmetric dq-derivations (d),
// an exterior factor (a, as a bitmask), and the deformation parameter
// (lambda-exponent e), with rational-function coefficients on the chart.
//
// Degrees in play, per term:
//   deg_s = |s|, deg_s* = |d|, deg_a = popcount(a), deg_lambda = e,
//   Deg = 2e + |s| + |d|   (the total degree used for truncation),
//   H-weight = |d| + e     (the homogeneity weight).

#include <climits>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "costar/chart.hpp"
#include "costar/poly.hpp"
#include "costar/ratfun.hpp"
#include "costar/vars.hpp"

namespace costar {

struct FKey {
    Exp s;       // multiset of symmetric dq factors, length n
    Exp d;       // multiset of dual-symmetric factors, length n
    uint32_t a;  // bitmask of antisymmetric dq factors
    int e;       // lambda exponent
};

inline int fkey_deg(const FKey& k) { return 2 * k.e + exp_total(k.s) + exp_total(k.d); }
inline int fkey_hweight(const FKey& k) { return exp_total(k.d) + k.e; }

struct FKeyLess {
    bool operator()(const FKey& x, const FKey& y) const {
        if (x.e != y.e) return x.e < y.e;
        if (x.a != y.a) return x.a < y.a;
        if (LexLess{}(x.d, y.d)) return true;
        if (LexLess{}(y.d, x.d)) return false;
        return LexLess{}(x.s, y.s);
    }
};

class FedosovElement {
   public:
    using Terms = std::map<FKey, RatFun, FKeyLess>;

    FedosovElement() = default;
    explicit FedosovElement(int n) : n_(n) {}

    static FedosovElement scalar(int n, const RatFun& c);
    static FedosovElement monomial(int n, FKey k, const RatFun& c);

    int n() const { return n_; }
    bool is_zero() const { return terms_.empty(); }
    const Terms& terms() const { return terms_; }

    void add_term(const FKey& k, const RatFun& c);

    FedosovElement& operator+=(const FedosovElement& o);
    FedosovElement& operator-=(const FedosovElement& o);
    friend FedosovElement operator+(FedosovElement x, const FedosovElement& y) { return x += y; }
    friend FedosovElement operator-(FedosovElement x, const FedosovElement& y) { return x -= y; }
    FedosovElement operator-() const;
    FedosovElement scaled(const CRat& c) const;

    // Zero elements compare equal regardless of how they were made.
    friend bool operator==(const FedosovElement& x, const FedosovElement& y) {
        if (x.terms_.size() != y.terms_.size()) return false;
        auto it = x.terms_.begin(), jt = y.terms_.begin();
        for (; it != x.terms_.end(); ++it, ++jt) {
            const FKeyLess lt{};
            if (lt(it->first, jt->first) || lt(jt->first, it->first)) return false;
            if (!(it->second == jt->second)) return false;
        }
        return true;
    }
    friend bool operator!=(const FedosovElement& x, const FedosovElement& y) { return !(x == y); }

    FedosovElement truncated(int K) const;        // keep Deg <= K
    FedosovElement deg_component(int k) const;    // Deg == k part
    int max_deg() const;                          // -1 for zero
    FedosovElement h_apply() const;               // H = deg_s* + deg_lambda, termwise
    FedosovElement lambda_scaled(int shift) const;  // multiply by lambda^shift

    std::string dump(const VarTable& vt) const;

   private:
    int n_ = 0;
    Terms terms_;
};

// --- fibrewise products ---------------------------------------------------

// Undeformed supercommutative product.
FedosovElement mul(const FedosovElement& F, const FedosovElement& G);

// Deformed fibrewise product: r-fold pairings of dual-symmetric factors of F
// with symmetric factors of G, weighted by (lambda/i)^r / r!.  Terms of
// Deg > K are dropped (Deg is additive for this product, so truncation is a
// grading cutoff, not an approximation of lower orders).
FedosovElement circ_S(const FedosovElement& F, const FedosovElement& G, int K = INT_MAX);

// Graded commutator A cir F - (-1)^{|A||F|} F cir A; A must be homogeneous in
// the antisymmetric parity.
FedosovElement graded_commutator(const FedosovElement& A, const FedosovElement& F,
                                 int K = INT_MAX);

// Fibrewise Poisson bracket sum_l (d_{y_l}F d_{z^l}G - d_{z^l}F d_{y_l}G)
// with the undeformed product.
FedosovElement fib_poisson(const FedosovElement& F, const FedosovElement& G);

// Exact division: (i/lambda) F.  Throws std::domain_error if any term is
// lambda-free (that always indicates a grading bug in the caller).
FedosovElement i_over_lambda(const FedosovElement& F);

// --- the differentials ----------------------------------------------------

FedosovElement delta(const FedosovElement& F);
FedosovElement delta_star(const FedosovElement& F);
FedosovElement delta_inv(const FedosovElement& F);  // delta*/(deg_s+deg_a), 0 on scalars
FedosovElement sigma(const FedosovElement& F);      // |s| = |a| = 0 part
FedosovElement proj_P(const FedosovElement& F);     // kills |d| > 0 terms

FedosovElement nabla(const FedosovElement& F, const ChartSpec& spec);

// R_S = -1/2 R^l_{kij} (dq^k) (z^l) dq^i ^ dq^j; degrees (1,1,2,0).
FedosovElement build_R_S(const ChartSpec& spec);

// --- the r_S recursion and the flat derivation ----------------------------

struct RSolution {
    FedosovElement r;
    int deg = 0;  // r is complete for all Deg <= deg
};

// Solves delta r = nabla r + R_S + (i/lambda) r cir r with delta^{-1} r = 0,
// through total degree Kdeg, by two independent recursions (the commutator
// form and the fibrewise-Poisson form); they must agree exactly.
RSolution solve_r_S(const ChartSpec& spec, int Kdeg);

// Same element, obtained through the generic ultrametric fixed-point driver;
// used to cross-check the recursion against the series machinery.
FedosovElement solve_r_S_fixed_point(const ChartSpec& spec, int Kdeg);

// D_S F = -delta F + nabla F + (i/lambda) ad(r_S) F, truncated at Deg <= K.
// Requires rs.deg >= K + 2 so the commutator term is complete at every kept
// degree.
FedosovElement D_S(const FedosovElement& F, const RSolution& rs, const ChartSpec& spec, int K);

}  // namespace costar
