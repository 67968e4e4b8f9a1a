#include "costar/mompoly.hpp"

#include "costar/scalar_io.hpp"

#include <sstream>
#include <stdexcept>

namespace costar {

namespace {

Exp exp_add(const Exp& a, const Exp& b) {
    Exp r = a;
    for (size_t i = 0; i < r.size(); ++i) r[i] = uint16_t(r[i] + b[i]);
    return r;
}

Rat multiset_factorial(const Exp& m) {
    Rat f(1);
    for (uint16_t mi : m)
        for (int j = 2; j <= mi; ++j) f *= Rat(j);
    return f;
}

}  // namespace

MomentumPolynomial MomentumPolynomial::pi_star(int n, const RatFun& chi) {
    MomentumPolynomial f(n);
    f.add_term(MKey{Exp(size_t(n), 0), 0}, chi);
    return f;
}

MomentumPolynomial MomentumPolynomial::monomial(int n, MKey k, const RatFun& c) {
    MomentumPolynomial f(n);
    f.add_term(k, c);
    return f;
}

MomentumPolynomial MomentumPolynomial::p_var(int n, int nv, int i) {
    MKey k{Exp(size_t(n), 0), 0};
    k.m[size_t(i)] = 1;
    return monomial(n, k, RatFun::constant(nv, CRat(1)));
}

void MomentumPolynomial::add_term(const MKey& k, const RatFun& c) {
    if (c.is_zero()) return;
    auto [it, fresh] = terms_.try_emplace(k, c);
    if (!fresh) {
        it->second += c;
        if (it->second.is_zero()) terms_.erase(it);
    }
}

MomentumPolynomial& MomentumPolynomial::operator+=(const MomentumPolynomial& o) {
    if (n_ == 0) n_ = o.n_;
    for (auto& [k, c] : o.terms_) add_term(k, c);
    return *this;
}

MomentumPolynomial& MomentumPolynomial::operator-=(const MomentumPolynomial& o) {
    if (n_ == 0) n_ = o.n_;
    for (auto& [k, c] : o.terms_) add_term(k, -c);
    return *this;
}

MomentumPolynomial MomentumPolynomial::operator-() const {
    MomentumPolynomial f(n_);
    for (auto& [k, c] : terms_) f.terms_.emplace(k, -c);
    return f;
}

MomentumPolynomial operator*(const MomentumPolynomial& x, const MomentumPolynomial& y) {
    MomentumPolynomial f(x.n_ ? x.n_ : y.n_);
    for (auto& [kx, cx] : x.terms_)
        for (auto& [ky, cy] : y.terms_)
            f.add_term(MKey{exp_add(kx.m, ky.m), kx.e + ky.e}, cx * cy);
    return f;
}

MomentumPolynomial MomentumPolynomial::scaled(const CRat& c) const {
    MomentumPolynomial f(n_);
    if (c.is_zero()) return f;
    for (auto& [k, v] : terms_) f.terms_.emplace(k, v.scaled(c));
    return f;
}

MomentumPolynomial MomentumPolynomial::fun_scaled(const RatFun& c) const {
    MomentumPolynomial f(n_);
    for (auto& [k, v] : terms_) f.add_term(k, v * c);
    return f;
}

MomentumPolynomial MomentumPolynomial::conj() const {
    MomentumPolynomial f(n_);
    for (auto& [k, v] : terms_) f.terms_.emplace(k, v.conj());
    return f;
}

MomentumPolynomial MomentumPolynomial::partial_q(int i) const {
    MomentumPolynomial f(n_);
    for (auto& [k, v] : terms_) f.add_term(k, v.partial(i));
    return f;
}

MomentumPolynomial MomentumPolynomial::partial_p(int i) const {
    MomentumPolynomial f(n_);
    for (auto& [k, v] : terms_) {
        if (k.m[size_t(i)] == 0) continue;
        MKey k2 = k;
        k2.m[size_t(i)]--;
        f.add_term(k2, v.scaled(CRat(Rat(k.m[size_t(i)]))));
    }
    return f;
}

int MomentumPolynomial::pdeg() const {
    int d = -1;
    for (auto& [k, v] : terms_) d = std::max(d, exp_total(k.m));
    return d;
}

int MomentumPolynomial::max_lambda() const {
    int e = -1;
    for (auto& [k, v] : terms_) e = std::max(e, k.e);
    return e;
}

MomentumPolynomial MomentumPolynomial::lambda_coeff(int e) const {
    MomentumPolynomial f(n_);
    for (auto& [k, v] : terms_)
        if (k.e == e) f.terms_.emplace(MKey{k.m, 0}, v);
    return f;
}

MomentumPolynomial MomentumPolynomial::lambda_scaled(int shift) const {
    MomentumPolynomial f(n_);
    for (auto& [k, v] : terms_) {
        MKey k2 = k;
        k2.e += shift;
        if (k2.e < 0) throw std::domain_error("negative lambda exponent");
        f.terms_.emplace(k2, v);
    }
    return f;
}

MomentumPolynomial MomentumPolynomial::lambda_truncated(int K) const {
    MomentumPolynomial f(n_);
    for (auto& [k, v] : terms_)
        if (k.e <= K) f.terms_.emplace(k, v);
    return f;
}

MomentumPolynomial MomentumPolynomial::h_apply() const {
    MomentumPolynomial f(n_);
    for (auto& [k, v] : terms_) {
        int w = k.e + exp_total(k.m);
        if (w != 0) f.terms_.emplace(k, v.scaled(CRat(Rat(w))));
    }
    return f;
}

MomentumPolynomial MomentumPolynomial::euler_apply() const {
    MomentumPolynomial f(n_);
    for (auto& [k, v] : terms_) {
        int w = exp_total(k.m);
        if (w != 0) f.terms_.emplace(k, v.scaled(CRat(Rat(w))));
    }
    return f;
}

MomentumPolynomial MomentumPolynomial::i_star() const {
    MomentumPolynomial f(n_);
    for (auto& [k, v] : terms_)
        if (exp_total(k.m) == 0) f.terms_.emplace(k, v);
    return f;
}

MomentumPolynomial MomentumPolynomial::subst_p(
    const std::vector<MomentumPolynomial>& values) const {
    if (int(values.size()) != n_) throw std::invalid_argument("subst_p needs one value per p");
    MomentumPolynomial out(n_);
    for (auto& [k, v] : terms_) {
        MomentumPolynomial t = pi_star(n_, v).lambda_scaled(k.e);
        for (int i = 0; i < n_; ++i)
            for (int j = 0; j < k.m[size_t(i)]; ++j) t = t * values[size_t(i)];
        out += t;
    }
    return out;
}

std::string MomentumPolynomial::dump(const VarTable& vt) const {
    if (terms_.empty()) return "0";
    std::ostringstream os;
    bool first = true;
    for (auto& [k, v] : terms_) {
        if (!first) os << "\n";
        first = false;
        os << "l^" << k.e;
        for (int i = 0; i < n_; ++i)
            if (k.m[size_t(i)] > 0) {
                os << " p" << (i + 1);
                if (k.m[size_t(i)] > 1) os << "^" << k.m[size_t(i)];
            }
        os << ": " << v.str(vt.names);
    }
    return os.str();
}

MomentumPolynomial poisson(const MomentumPolynomial& u, const MomentumPolynomial& v) {
    MomentumPolynomial out(u.n() ? u.n() : v.n());
    for (int i = 0; i < out.n(); ++i) {
        out += u.partial_q(i) * v.partial_p(i);
        out -= u.partial_p(i) * v.partial_q(i);
    }
    return out;
}

MomentumPolynomial hat(const SymTensor& T) {
    MomentumPolynomial f(T.n);
    for (auto& [k, v] : T.comps)
        f.add_term(k, v.scaled(CRat(Rat(1) / multiset_factorial(k.m))));
    return f;
}

SymTensor unhat(const MomentumPolynomial& f) {
    SymTensor T;
    T.n = f.n();
    for (auto& [k, v] : f.terms()) {
        RatFun c = v.scaled(CRat(multiset_factorial(k.m)));
        if (!c.is_zero()) T.comps.emplace(k, c);
    }
    return T;
}

SymTensor vee(const SymTensor& S, const SymTensor& T) {
    SymTensor R;
    R.n = S.n ? S.n : T.n;
    for (auto& [ks, cs] : S.comps)
        for (auto& [kt, ct] : T.comps) {
            MKey k{exp_add(ks.m, kt.m), ks.e + kt.e};
            Rat mult = multiset_factorial(k.m) /
                       (multiset_factorial(ks.m) * multiset_factorial(kt.m));
            RatFun c = (cs * ct).scaled(CRat(mult));
            if (c.is_zero()) continue;
            auto [it, fresh] = R.comps.try_emplace(k, c);
            if (!fresh) {
                it->second += c;
                if (it->second.is_zero()) R.comps.erase(it);
            }
        }
    return R;
}

DiffOpQ DiffOpQ::identity(int n, int nv) {
    DiffOpQ op(n);
    op.add_term(MKey{Exp(size_t(n), 0), 0}, RatFun::constant(nv, CRat(1)));
    return op;
}

DiffOpQ DiffOpQ::partial(int n, int nv, int i) {
    DiffOpQ op(n);
    MKey k{Exp(size_t(n), 0), 0};
    k.m[size_t(i)] = 1;
    op.add_term(k, RatFun::constant(nv, CRat(1)));
    return op;
}

DiffOpQ DiffOpQ::mult(int n, const RatFun& c) {
    DiffOpQ op(n);
    op.add_term(MKey{Exp(size_t(n), 0), 0}, c);
    return op;
}

void DiffOpQ::add_term(const MKey& k, const RatFun& c) {
    if (c.is_zero()) return;
    auto [it, fresh] = terms_.try_emplace(k, c);
    if (!fresh) {
        it->second += c;
        if (it->second.is_zero()) terms_.erase(it);
    }
}

DiffOpQ& DiffOpQ::operator+=(const DiffOpQ& o) {
    if (n_ == 0) n_ = o.n_;
    for (auto& [k, c] : o.terms_) add_term(k, c);
    return *this;
}

DiffOpQ& DiffOpQ::operator-=(const DiffOpQ& o) {
    if (n_ == 0) n_ = o.n_;
    for (auto& [k, c] : o.terms_) add_term(k, -c);
    return *this;
}

DiffOpQ DiffOpQ::operator-() const {
    DiffOpQ op(n_);
    for (auto& [k, c] : terms_) op.terms_.emplace(k, -c);
    return op;
}

DiffOpQ DiffOpQ::scaled(const CRat& c) const {
    DiffOpQ op(n_);
    if (c.is_zero()) return op;
    for (auto& [k, v] : terms_) op.terms_.emplace(k, v.scaled(c));
    return op;
}

DiffOpQ DiffOpQ::fun_scaled(const RatFun& c) const {
    DiffOpQ op(n_);
    for (auto& [k, v] : terms_) op.add_term(k, v * c);
    return op;
}

DiffOpQ DiffOpQ::lambda_scaled(int shift) const {
    DiffOpQ op(n_);
    for (auto& [k, v] : terms_) {
        MKey k2 = k;
        k2.e += shift;
        if (k2.e < 0) throw std::domain_error("negative lambda exponent");
        op.terms_.emplace(k2, v);
    }
    return op;
}

DiffOpQ DiffOpQ::lambda_truncated(int K) const {
    DiffOpQ op(n_);
    for (auto& [k, v] : terms_)
        if (k.e <= K) op.terms_.emplace(k, v);
    return op;
}

DiffOpQ DiffOpQ::conj() const {
    DiffOpQ op(n_);
    for (auto& [k, v] : terms_) op.terms_.emplace(k, v.conj());
    return op;
}

MomentumPolynomial DiffOpQ::apply(const MomentumPolynomial& psi) const {
    if (psi.pdeg() > 0) throw std::invalid_argument("DiffOpQ acts on functions of q only");
    MomentumPolynomial out(n_);
    for (auto& [k, c] : terms_)
        for (auto& [kp, cp] : psi.terms()) {
            RatFun d = cp;
            for (int i = 0; i < n_ && !d.is_zero(); ++i)
                for (int j = 0; j < k.m[size_t(i)] && !d.is_zero(); ++j) d = d.partial(i);
            out.add_term(MKey{Exp(size_t(n_), 0), k.e + kp.e}, c * d);
        }
    return out;
}

MomentumPolynomial DiffOpQ::apply(const RatFun& psi) const {
    return apply(MomentumPolynomial::pi_star(n_, psi));
}

std::string DiffOpQ::dump(const VarTable& vt) const {
    if (terms_.empty()) return "0";
    std::ostringstream os;
    bool first = true;
    for (auto& [k, v] : terms_) {
        if (!first) os << "\n";
        first = false;
        os << "l^" << k.e;
        for (int i = 0; i < n_; ++i)
            if (k.m[size_t(i)] > 0) {
                os << " d" << (i + 1);
                if (k.m[size_t(i)] > 1) os << "^" << k.m[size_t(i)];
            }
        os << ": " << v.str(vt.names);
    }
    return os.str();
}

DiffOpQ compose(const DiffOpQ& A, const DiffOpQ& B) {
    int n = A.n() ? A.n() : B.n();
    DiffOpQ out(n);
    for (auto& [ka, ca] : A.terms())
        for (auto& [kb, cb] : B.terms()) {
            // d^{ma} (cb d^{mb} .) by Leibniz: choose which of the ma slots
            // hit the coefficient cb.
            Exp k(size_t(n), 0);
            while (true) {
                bool ok = true;
                for (size_t i = 0; i < k.size(); ++i)
                    if (k[i] > ka.m[i]) ok = false;
                if (ok) {
                    Rat binom(1);
                    RatFun d = cb;
                    for (int i = 0; i < n; ++i) {
                        // C(ma_i, k_i)
                        for (int j = 0; j < k[size_t(i)]; ++j) {
                            binom *= Rat(ka.m[size_t(i)] - j);
                            binom /= Rat(j + 1);
                            d = d.partial(i);
                        }
                    }
                    Exp m = ka.m;
                    for (size_t i = 0; i < m.size(); ++i)
                        m[i] = uint16_t(m[i] - k[i] + kb.m[i]);
                    out.add_term(MKey{m, ka.e + kb.e}, (ca * d).scaled(CRat(binom)));
                }
                // odometer over k <= ka.m
                size_t pos = 0;
                while (pos < k.size()) {
                    if (k[pos] < ka.m[pos]) {
                        k[pos]++;
                        break;
                    }
                    k[pos] = 0;
                    pos++;
                }
                if (pos == k.size()) break;
            }
        }
    return out;
}

MomentumPolynomial delta_apply(const MomentumPolynomial& f, const ChartSpec& spec) {
    int n = spec.n;
    int nv = spec.vars.nv();
    std::vector<RatFun> alpha = spec.effective_alpha();
    MomentumPolynomial out(n);
    for (int i = 0; i < n; ++i) out += f.partial_p(i).partial_q(i);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            MomentumPolynomial fij = f.partial_p(i).partial_p(j);
            if (fij.is_zero()) continue;
            for (int r = 0; r < n; ++r) {
                const RatFun& g = spec.gamma_at(r, i, j);
                if (g.is_zero()) continue;
                out += (MomentumPolynomial::p_var(n, nv, r) * fij).fun_scaled(g);
            }
        }
    for (int j = 0; j < n; ++j) {
        RatFun c = alpha[size_t(j)];
        for (int i = 0; i < n; ++i) c += spec.gamma_at(i, i, j);
        if (!c.is_zero()) out += f.partial_p(j).fun_scaled(c);
    }
    return out;
}

MomentumPolynomial N_apply(const MomentumPolynomial& f, const ChartSpec& spec, int dir) {
    if (dir != 1 && dir != -1) throw std::invalid_argument("N_apply direction must be +-1");
    // 1/(2i) = -i/2
    const CRat base = CRat(Rat(0), Rat(-1, 2)) * CRat(Rat(dir));
    MomentumPolynomial acc = f, term = f;
    for (int k = 1; !term.is_zero(); ++k) {
        term = delta_apply(term, spec);
        if (term.is_zero()) break;
        term = term.lambda_scaled(1).scaled(base * CRat(Rat(1, k)));
        acc += term;
    }
    return acc;
}

}  // namespace costar
