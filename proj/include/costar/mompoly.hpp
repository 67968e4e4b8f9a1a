#pragma once

#include "costar/chart.hpp"

#include <map>
#include <string>

namespace costar {

// Key of one phase-space term: p-exponent multiset m (length n) and the
// lambda exponent e.  The q-dependence lives in the RatFun coefficient.
struct MKey {
    Exp m;
    int e = 0;
};

struct MKeyLess {
    bool operator()(const MKey& x, const MKey& y) const {
        if (x.e != y.e) return x.e < y.e;
        return LexLess{}(x.m, y.m);
    }
};

// A function on the cotangent chart that is polynomial in the momenta and in
// lambda: sum of lambda^e * c(q) * p^m.  This is the universal input type for
// the star products; general smooth functions are out of scope because the
// bidifferential layers are already determined here.
class MomentumPolynomial {
   public:
    using Terms = std::map<MKey, RatFun, MKeyLess>;

    MomentumPolynomial() = default;
    explicit MomentumPolynomial(int n) : n_(n) {}

    // chi(q), pulled back to the chart; chi uses the chart variable table.
    static MomentumPolynomial pi_star(int n, const RatFun& chi);
    static MomentumPolynomial monomial(int n, MKey k, const RatFun& c);
    static MomentumPolynomial p_var(int n, int nv, int i);  // the momentum p_{i+1}

    int n() const { return n_; }
    bool is_zero() const { return terms_.empty(); }
    const Terms& terms() const { return terms_; }

    void add_term(const MKey& k, const RatFun& c);

    MomentumPolynomial& operator+=(const MomentumPolynomial& o);
    MomentumPolynomial& operator-=(const MomentumPolynomial& o);
    friend MomentumPolynomial operator+(MomentumPolynomial x, const MomentumPolynomial& y) {
        return x += y;
    }
    friend MomentumPolynomial operator-(MomentumPolynomial x, const MomentumPolynomial& y) {
        return x -= y;
    }
    MomentumPolynomial operator-() const;
    friend MomentumPolynomial operator*(const MomentumPolynomial& x, const MomentumPolynomial& y);
    MomentumPolynomial scaled(const CRat& c) const;
    MomentumPolynomial fun_scaled(const RatFun& c) const;  // multiply by a function of q
    MomentumPolynomial conj() const;                       // q, p, lambda are real

    friend bool operator==(const MomentumPolynomial& x, const MomentumPolynomial& y) {
        if (x.terms_.size() != y.terms_.size()) return false;
        auto it = x.terms_.begin(), jt = y.terms_.begin();
        for (; it != x.terms_.end(); ++it, ++jt) {
            const MKeyLess lt{};
            if (lt(it->first, jt->first) || lt(jt->first, it->first)) return false;
            if (!(it->second == jt->second)) return false;
        }
        return true;
    }
    friend bool operator!=(const MomentumPolynomial& x, const MomentumPolynomial& y) {
        return !(x == y);
    }

    MomentumPolynomial partial_q(int i) const;
    MomentumPolynomial partial_p(int i) const;

    int pdeg() const;        // max |m|, -1 for zero
    int max_lambda() const;  // max e, -1 for zero
    MomentumPolynomial lambda_coeff(int e) const;    // lambda-free slice at lambda^e
    MomentumPolynomial lambda_scaled(int shift) const;
    MomentumPolynomial lambda_truncated(int K) const;  // keep e <= K
    MomentumPolynomial h_apply() const;    // H = lambda d_lambda + Euler: (e+|m|) termwise
    MomentumPolynomial euler_apply() const;  // |m| termwise
    MomentumPolynomial i_star() const;     // restriction to the zero section (p = 0)

    // Substitute p_i -> value simultaneously for all i; values are momentum
    // polynomials (used for fibre-affine pullbacks).
    MomentumPolynomial subst_p(const std::vector<MomentumPolynomial>& values) const;

    std::string dump(const VarTable& vt) const;

   private:
    int n_ = 0;
    Terms terms_;
};

// {u,v} = d_{q^i}u d_{p_i}v - d_{p_i}u d_{q^i}v.
MomentumPolynomial poisson(const MomentumPolynomial& u, const MomentumPolynomial& v);

// Symmetric contravariant tensor with lambda-graded components.  comps maps
// the index multiset m (and lambda exponent) to the tensor value on any tuple
// ordering of m.
struct SymTensor {
    int n = 0;
    std::map<MKey, RatFun, MKeyLess> comps;

    friend bool operator==(const SymTensor& x, const SymTensor& y) {
        if (x.comps.size() != y.comps.size()) return false;
        auto it = x.comps.begin(), jt = y.comps.begin();
        for (; it != x.comps.end(); ++it, ++jt) {
            const MKeyLess lt{};
            if (lt(it->first, jt->first) || lt(jt->first, it->first)) return false;
            if (!(it->second == jt->second)) return false;
        }
        return true;
    }
    friend bool operator!=(const SymTensor& x, const SymTensor& y) { return !(x == y); }
};

// hat(T)(alpha) = (1/k!) T(alpha,..,alpha) per degree: the p^m coefficient is
// T^m / prod_i m_i!.  Mutually inverse with unhat; hat(vee(S,T)) = hat(S)hat(T).
MomentumPolynomial hat(const SymTensor& T);
SymTensor unhat(const MomentumPolynomial& f);
SymTensor vee(const SymTensor& S, const SymTensor& T);

// Differential operator on functions of q: sum of lambda^e * c(q) * d^m/dq^m
// with symmetrized (multiset) derivative slots.
class DiffOpQ {
   public:
    using Terms = std::map<MKey, RatFun, MKeyLess>;

    DiffOpQ() = default;
    explicit DiffOpQ(int n) : n_(n) {}

    static DiffOpQ identity(int n, int nv);
    static DiffOpQ partial(int n, int nv, int i);
    static DiffOpQ mult(int n, const RatFun& c);  // multiplication operator

    int n() const { return n_; }
    bool is_zero() const { return terms_.empty(); }
    const Terms& terms() const { return terms_; }

    void add_term(const MKey& k, const RatFun& c);

    DiffOpQ& operator+=(const DiffOpQ& o);
    DiffOpQ& operator-=(const DiffOpQ& o);
    friend DiffOpQ operator+(DiffOpQ x, const DiffOpQ& y) { return x += y; }
    friend DiffOpQ operator-(DiffOpQ x, const DiffOpQ& y) { return x -= y; }
    DiffOpQ operator-() const;
    DiffOpQ scaled(const CRat& c) const;
    DiffOpQ fun_scaled(const RatFun& c) const;  // multiply coefficients on the left
    DiffOpQ lambda_scaled(int shift) const;
    DiffOpQ lambda_truncated(int K) const;
    DiffOpQ conj() const;

    friend bool operator==(const DiffOpQ& x, const DiffOpQ& y) {
        if (x.terms_.size() != y.terms_.size()) return false;
        auto it = x.terms_.begin(), jt = y.terms_.begin();
        for (; it != x.terms_.end(); ++it, ++jt) {
            const MKeyLess lt{};
            if (lt(it->first, jt->first) || lt(jt->first, it->first)) return false;
            if (!(it->second == jt->second)) return false;
        }
        return true;
    }
    friend bool operator!=(const DiffOpQ& x, const DiffOpQ& y) { return !(x == y); }

    // Apply to a lambda-graded function of q (a momentum polynomial of
    // p-degree <= 0); the result is again p-free.
    MomentumPolynomial apply(const MomentumPolynomial& psi) const;
    MomentumPolynomial apply(const RatFun& psi) const;

    std::string dump(const VarTable& vt) const;

   private:
    int n_ = 0;
    Terms terms_;
};

// Operator product: compose(A, B) psi = A(B(psi)), expanded by Leibniz.
DiffOpQ compose(const DiffOpQ& A, const DiffOpQ& B);

// The homogeneous second-order operator whose exponential transports standard
// ordering to Weyl ordering:
// Delta = d_p d_q + p_r Gamma^r_{ij} d_{p_i} d_{p_j}
//       + Gamma^i_{ij} d_{p_j} + alpha_j d_{p_j}.
MomentumPolynomial delta_apply(const MomentumPolynomial& f, const ChartSpec& spec);

// N^{dir} f = exp(dir (lambda/2i) Delta) f, exact: Delta lowers the momentum
// degree, so the series terminates.
MomentumPolynomial N_apply(const MomentumPolynomial& f, const ChartSpec& spec, int dir = +1);

}  // namespace costar
