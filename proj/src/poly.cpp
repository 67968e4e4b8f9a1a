#include "costar/poly.hpp"

#include <algorithm>
#include <optional>
#include <sstream>

namespace costar {

std::string CRat::str() const {
    std::ostringstream os;
    if (sgn(im) == 0) {
        os << re;
    } else if (sgn(re) == 0) {
        if (im == 1)
            os << "i";
        else if (im == -1)
            os << "-i";
        else
            os << im << "*i";
    } else {
        os << "(" << re;
        if (sgn(im) > 0) os << "+";
        if (im == 1)
            os << "i";
        else if (im == -1)
            os << "-i";
        else
            os << im << "*i";
        os << ")";
    }
    return os.str();
}

static Rat rat_sqrt_exact(const Rat& r) {
    if (sgn(r) < 0) throw std::domain_error("square root of negative rational");
    mpz_class num = r.get_num(), den = r.get_den();
    if (mpz_perfect_square_p(num.get_mpz_t()) == 0 || mpz_perfect_square_p(den.get_mpz_t()) == 0)
        throw std::domain_error("rational is not a perfect square");
    mpz_class sn, sd;
    mpz_sqrt(sn.get_mpz_t(), num.get_mpz_t());
    mpz_sqrt(sd.get_mpz_t(), den.get_mpz_t());
    return Rat(sn, sd);
}

CRat CRat::sqrt_real() const {
    if (sgn(im) != 0) throw std::domain_error("square root of non-real value");
    return CRat(rat_sqrt_exact(re));
}

Poly Poly::constant(int nv, const CRat& c) {
    Poly p(nv);
    if (!c.is_zero()) p.terms_.emplace(Exp(nv, 0), c);
    return p;
}

Poly Poly::variable(int nv, int k) {
    Poly p(nv);
    Exp e(nv, 0);
    e[k] = 1;
    p.terms_.emplace(std::move(e), CRat(1));
    return p;
}

Poly Poly::monomial(int nv, Exp e, const CRat& c) {
    Poly p(nv);
    if (!c.is_zero()) p.terms_.emplace(std::move(e), c);
    return p;
}

CRat Poly::constant_value() const {
    if (terms_.empty()) return CRat(0);
    return terms_.begin()->second;
}

int Poly::degree(int var) const {
    int d = -1;
    for (auto& [e, c] : terms_) d = std::max(d, int(e[var]));
    return d;  // -1 for the zero polynomial
}

int Poly::total_degree() const {
    int d = -1;
    for (auto& [e, c] : terms_) d = std::max(d, exp_total(e));
    return d;
}

const std::pair<const Exp, CRat>& Poly::leading() const {
    if (terms_.empty()) throw std::domain_error("leading term of zero polynomial");
    return *terms_.rbegin();
}

Poly Poly::operator-() const {
    Poly r(nv_);
    for (auto& [e, c] : terms_) r.terms_.emplace(e, -c);
    return r;
}

void Poly::add_term(const Exp& e, const CRat& c) {
    if (c.is_zero()) return;
    auto it = terms_.find(e);
    if (it == terms_.end()) {
        terms_.emplace(e, c);
    } else {
        it->second += c;
        if (it->second.is_zero()) terms_.erase(it);
    }
}

Poly& Poly::operator+=(const Poly& o) {
    for (auto& [e, c] : o.terms_) add_term(e, c);
    return *this;
}

Poly& Poly::operator-=(const Poly& o) {
    for (auto& [e, c] : o.terms_) add_term(e, -c);
    return *this;
}

Poly operator*(const Poly& a, const Poly& b) {
    Poly r(a.nv_);
    if (a.terms_.empty() || b.terms_.empty()) return r;
    Exp e(a.nv_, 0);
    for (auto& [ea, ca] : a.terms_) {
        for (auto& [eb, cb] : b.terms_) {
            for (int k = 0; k < a.nv_; ++k) e[k] = uint16_t(ea[k] + eb[k]);
            r.add_term(e, ca * cb);
        }
    }
    return r;
}

Poly Poly::scaled(const CRat& c) const {
    Poly r(nv_);
    if (c.is_zero()) return r;
    for (auto& [e, k] : terms_) r.terms_.emplace(e, k * c);
    return r;
}

Poly Poly::pow(int k) const {
    if (k < 0) throw std::domain_error("negative power of a polynomial");
    Poly acc = Poly::constant(nv_, CRat(1));
    Poly base = *this;
    while (k > 0) {
        if (k & 1) acc *= base;
        if (k >>= 1) base *= base;
    }
    return acc;
}

int Poly::cmp(const Poly& o) const {
    auto i = terms_.begin();
    auto j = o.terms_.begin();
    LexLess less;
    for (; i != terms_.end() && j != o.terms_.end(); ++i, ++j) {
        if (less(i->first, j->first)) return -1;
        if (less(j->first, i->first)) return 1;
        int c = i->second.cmp(j->second);
        if (c != 0) return c;
    }
    if (i != terms_.end()) return 1;
    if (j != o.terms_.end()) return -1;
    return 0;
}

Poly Poly::derivative(int var) const {
    Poly r(nv_);
    for (auto& [e, c] : terms_) {
        if (e[var] == 0) continue;
        Exp e2 = e;
        e2[var] -= 1;
        r.add_term(e2, c * CRat(long(e[var])));
    }
    return r;
}

Poly Poly::conj() const {
    Poly r(nv_);
    for (auto& [e, c] : terms_) r.terms_.emplace(e, c.conj());
    return r;
}

Poly Poly::subst(int var, const Poly& value) const {
    int nv2 = value.nv();
    Poly r(nv2);
    for (auto& [e, c] : terms_) {
        Exp e2(nv2, 0);
        for (int k = 0; k < nv_; ++k)
            if (k != var) e2[k] = e[k];
        Poly t = Poly::monomial(nv2, e2, c);
        if (e[var] > 0) t *= value.pow(e[var]);
        r += t;
    }
    return r;
}

Poly Poly::extended(int new_nv) const {
    if (new_nv < nv_) throw std::invalid_argument("extended() cannot drop variables");
    Poly r(new_nv);
    for (auto& [e, c] : terms_) {
        Exp e2(new_nv, 0);
        std::copy(e.begin(), e.end(), e2.begin());
        r.terms_.emplace(std::move(e2), c);
    }
    return r;
}

static bool exp_divides(const Exp& d, const Exp& e) {
    for (size_t k = 0; k < d.size(); ++k)
        if (d[k] > e[k]) return false;
    return true;
}

Poly Poly::div_exact(const Poly& d) const {
    if (d.is_zero()) throw std::domain_error("division by zero polynomial");
    Poly rem = *this, quot(nv_);
    const auto& [de, dc] = d.leading();
    CRat dinv = dc.inv();
    while (!rem.is_zero()) {
        const auto& [re, rc] = rem.leading();
        if (!exp_divides(de, re)) throw std::domain_error("polynomial division is not exact");
        Exp q = re;
        for (int k = 0; k < nv_; ++k) q[k] = uint16_t(q[k] - de[k]);
        CRat qc = rc * dinv;
        quot.add_term(q, qc);
        rem -= d * Poly::monomial(nv_, q, qc);
    }
    return quot;
}

bool Poly::divisible_by(const Poly& d) const {
    if (d.is_zero()) return false;
    Poly rem = *this;
    const auto& [de, dc] = d.leading();
    CRat dinv = dc.inv();
    while (!rem.is_zero()) {
        const auto& [re, rc] = rem.leading();
        if (!exp_divides(de, re)) return false;
        Exp q = re;
        for (size_t k = 0; k < q.size(); ++k) q[k] = uint16_t(q[k] - de[k]);
        rem -= d * Poly::monomial(nv_, q, rc * dinv);
    }
    return true;
}

Poly Poly::sqrt_exact() const {
    if (is_zero()) return Poly(nv_);
    const auto& [le, lc] = leading();
    for (auto v : le)
        if (v % 2) throw std::domain_error("not a perfect square (leading exponent)");
    Exp re = le;
    for (auto& v : re) v = uint16_t(v / 2);
    Poly root = Poly::monomial(nv_, re, lc.sqrt_real());
    // Peel leading terms of the residual; each step cancels the current lex
    // leader, which strictly decreases, so this terminates.
    Poly lead2 = root.scaled(CRat(2));
    while (true) {
        Poly res = *this - root * root;
        if (res.is_zero()) return root;
        const auto& [ge, gc] = res.leading();
        const auto& [he, hc] = lead2.leading();
        if (!exp_divides(he, ge)) throw std::domain_error("not a perfect square");
        Exp q = ge;
        for (size_t k = 0; k < q.size(); ++k) q[k] = uint16_t(q[k] - he[k]);
        LexLess less;
        if (!less(q, re)) throw std::domain_error("not a perfect square");
        root.add_term(q, gc * hc.inv());
        lead2 = root.scaled(CRat(2));
    }
}

// ---------------------------------------------------------------------------
// gcd via primitive pseudo-remainder sequences, recursing on the main variable.

namespace {

// View p as a univariate polynomial in `var` with Poly coefficients.
std::vector<Poly> coeffs_in(const Poly& p, int var) {
    std::vector<Poly> cs(size_t(p.degree(var) + 1), Poly(p.nv()));
    for (auto& [e, c] : p.terms()) {
        Exp e2 = e;
        int d = e2[var];
        e2[var] = 0;
        cs[size_t(d)].add_term(e2, c);
    }
    return cs;
}

Poly assemble_in(const std::vector<Poly>& cs, int var, int nv) {
    Poly r(nv);
    for (size_t d = 0; d < cs.size(); ++d) {
        for (auto& [e, c] : cs[d].terms()) {
            Exp e2 = e;
            e2[var] = uint16_t(e2[var] + d);
            r.add_term(e2, c);
        }
    }
    return r;
}

int main_variable(const Poly& a, const Poly& b) {
    for (int k = a.nv() - 1; k >= 0; --k)
        if (a.degree(k) > 0 || b.degree(k) > 0) return k;
    return -1;
}

Poly content_in(const Poly& p, int var) {
    Poly g(p.nv());
    for (auto& c : coeffs_in(p, var)) {
        if (c.is_zero()) continue;
        g = g.is_zero() ? c : poly_gcd(g, c);
        if (g.is_constant()) break;
    }
    return g;
}

// Divides out the positive rational that makes the coefficients integral and
// collectively coprime.  A gcd over the field is only defined up to scalars,
// and without this the pseudo-remainder sequence inflates its integers beyond
// anything the polynomial content extraction can recover.
Poly scalar_primitive(const Poly& p) {
    mpz_class g = 0, l = 1;
    auto feed = [&](const Rat& r) {
        if (sgn(r) == 0) return;
        mpz_class num = abs(r.get_num());
        g = (g == 0) ? num : gcd(g, num);
        l = lcm(l, r.get_den());
    };
    for (auto& [e, c] : p.terms()) {
        feed(c.re);
        feed(c.im);
    }
    if (g == 0 || (g == 1 && l == 1)) return p;
    Rat s(l, g);
    s.canonicalize();
    return p.scaled(CRat(s));
}

// ---- heuristic gcd: evaluate, gcd the Gaussian integers, lift the digits ---

mpz_class round_div(const mpz_class& x, const mpz_class& n) {
    mpz_class q, num = 2 * x + n, den = 2 * n;
    mpz_fdiv_q(q.get_mpz_t(), num.get_mpz_t(), den.get_mpz_t());
    return q;
}

// gcd in the Gaussian integers by Euclid with nearest-integer rounding; the
// norm at least halves per step.  Unit factors are irrelevant to the caller.
CRat gaussian_gcd(const CRat& x, const CRat& y) {
    mpz_class ar = x.re.get_num(), ai = x.im.get_num();
    mpz_class br = y.re.get_num(), bi = y.im.get_num();
    mpz_class na = ar * ar + ai * ai, nb = br * br + bi * bi;
    if (na == 0) return y;
    if (nb == 0) return x;
    if (gcd(na, nb) == 1) return CRat(1);
    while (br != 0 || bi != 0) {
        mpz_class n = br * br + bi * bi;
        mpz_class qre = round_div(ar * br + ai * bi, n);
        mpz_class qim = round_div(ai * br - ar * bi, n);
        mpz_class rre = ar - qre * br + qim * bi;
        mpz_class rim = ai - qre * bi - qim * br;
        ar = br;
        ai = bi;
        br = rre;
        bi = rim;
    }
    return CRat(Rat(ar), Rat(ai));
}

mpz_class coeff_height(const Poly& p) {
    mpz_class h = 0;
    for (auto& [e, c] : p.terms()) {
        mpz_class hr = abs(c.re.get_num()), hi = abs(c.im.get_num());
        if (hr > h) h = hr;
        if (hi > h) h = hi;
    }
    return h;
}

Poly eval_var(const Poly& p, int var, const mpz_class& xi) {
    if (p.is_zero()) return p;
    auto cs = coeffs_in(p, var);
    Poly r = cs.back();
    CRat s{Rat(xi)};
    for (int k = int(cs.size()) - 2; k >= 0; --k) r = r.scaled(s) + cs[k];
    return r;
}

// Reads g back as a polynomial in var from its balanced base-xi digits.
std::optional<Poly> lift_digits(const Poly& g, int var, const mpz_class& xi) {
    Poly out(g.nv());
    Poly rem = g;
    for (int k = 0; !rem.is_zero(); ++k) {
        if (k > 512) return std::nullopt;
        Poly next(g.nv());
        for (auto& [e, c] : rem.terms()) {
            mpz_class re = c.re.get_num(), im = c.im.get_num();
            mpz_class dre, dim;
            mpz_fdiv_r(dre.get_mpz_t(), re.get_mpz_t(), xi.get_mpz_t());
            mpz_fdiv_r(dim.get_mpz_t(), im.get_mpz_t(), xi.get_mpz_t());
            if (2 * dre >= xi) dre -= xi;
            if (2 * dim >= xi) dim -= xi;
            if (dre != 0 || dim != 0) {
                Exp e2 = e;
                e2[var] = uint16_t(k);
                out.add_term(e2, CRat(Rat(dre), Rat(dim)));
            }
            mpz_class qre = re - dre, qim = im - dim;
            mpz_divexact(qre.get_mpz_t(), qre.get_mpz_t(), xi.get_mpz_t());
            mpz_divexact(qim.get_mpz_t(), qim.get_mpz_t(), xi.get_mpz_t());
            if (qre != 0 || qim != 0) next.add_term(e, CRat(Rat(qre), Rat(qim)));
        }
        rem = std::move(next);
    }
    return out;
}

// One evaluation tower at the given retry round.  The candidate it returns
// is unverified; the caller's division check is the correctness gate.
std::optional<Poly> heu_pass(const Poly& a, const Poly& b, int round) {
    int var = main_variable(a, b);
    if (var < 0) {
        CRat ca = a.is_zero() ? CRat(0) : a.terms().begin()->second;
        CRat cb = b.is_zero() ? CRat(0) : b.terms().begin()->second;
        return Poly::constant(a.nv(), gaussian_gcd(ca, cb));
    }
    mpz_class ha = coeff_height(a), hb = coeff_height(b);
    mpz_class xi = 2 * std::min(ha, hb) + 2;
    for (int k = 0; k < round; ++k) xi = xi * sqrt(xi) + 29;
    if (xi < 4) xi = 4;
    size_t dmax = size_t(std::max(a.degree(var), b.degree(var)));
    if (mpz_sizeinbase(xi.get_mpz_t(), 2) * (dmax + 1) > (1u << 21))
        return std::nullopt;
    Poly av = eval_var(a, var, xi), bv = eval_var(b, var, xi);
    // The evaluation point is scaled to the smaller operand's coefficients,
    // so the other operand can vanish at it; retry at the next scale.
    if (av.is_zero() || bv.is_zero()) return std::nullopt;
    auto sub = heu_pass(av, bv, round);
    if (!sub) return std::nullopt;
    return lift_digits(*sub, var, xi);
}

std::optional<Poly> heu_gcd(const Poly& a0, const Poly& b0) {
    Poly a = scalar_primitive(a0), b = scalar_primitive(b0);
    for (int round = 0; round < 4; ++round) {
        auto g = heu_pass(a, b, round);
        if (!g) continue;
        Poly G = scalar_primitive(*g);
        if (G.is_constant()) return Poly::constant(a.nv(), CRat(1));
        bool fits = true;
        for (int v = 0; fits && v < a.nv(); ++v)
            fits = G.degree(v) <= std::min(a.degree(v), b.degree(v));
        if (fits && a.divisible_by(G) && b.divisible_by(G)) return G;
    }
    return std::nullopt;
}

// Pseudo-remainder of a by b in the variable var (deg_var a >= deg_var b > -1).
Poly pseudo_rem(const Poly& a, const Poly& b, int var) {
    auto ac = coeffs_in(a, var);
    auto bc = coeffs_in(b, var);
    int da = int(ac.size()) - 1, db = int(bc.size()) - 1;
    const Poly& lb = bc[size_t(db)];
    for (int d = da; d >= db; --d) {
        Poly top = ac[size_t(d)];
        if (!top.is_zero()) {
            // r <- lb*r - top*x^(d-db)*b, with the x^d coefficient zeroed below.
            for (int k = 0; k < d; ++k)
                if (!ac[size_t(k)].is_zero()) ac[size_t(k)] *= lb;
            for (int k = 0; k < db; ++k) {
                if (bc[size_t(k)].is_zero()) continue;
                size_t at = size_t(d - db + k);
                ac[at] -= top * bc[size_t(k)];
            }
        }
        ac[size_t(d)] = Poly(a.nv());
    }
    ac.resize(size_t(db));
    return assemble_in(ac, var, a.nv());
}

}  // namespace

Poly poly_gcd(const Poly& a, const Poly& b) {
    if (a.is_zero() && b.is_zero()) return Poly(a.nv());
    auto monic = [](const Poly& p) { return p.scaled(p.leading().second.inv()); };
    if (a.is_zero()) return monic(b);
    if (b.is_zero()) return monic(a);

    // Common monomial factor first; it is cheap and keeps the PRS small.
    int nv = a.nv();
    Exp ma(a.terms().begin()->first), mb(b.terms().begin()->first);
    for (auto& [e, c] : a.terms())
        for (int k = 0; k < nv; ++k) ma[k] = std::min(ma[k], e[k]);
    for (auto& [e, c] : b.terms())
        for (int k = 0; k < nv; ++k) mb[k] = std::min(mb[k], e[k]);
    Exp mg(size_t(nv), 0);
    bool strip = false;
    for (int k = 0; k < nv; ++k) {
        mg[k] = std::min(ma[k], mb[k]);
        if (ma[k] || mb[k]) strip = true;
    }
    if (strip) {
        Poly a2 = a.div_exact(Poly::monomial(nv, ma, CRat(1)));
        Poly b2 = b.div_exact(Poly::monomial(nv, mb, CRat(1)));
        Poly g = poly_gcd(a2, b2);
        return g * Poly::monomial(nv, mg, CRat(1));
    }

    if (a.is_constant() || b.is_constant()) return Poly::constant(nv, CRat(1));

    // Heuristic pass: evaluate at a large integer, take a Gaussian-integer
    // gcd, and lift its balanced digit expansion back to a polynomial.  A
    // lift that divides both operands is their gcd; the pseudo-remainder
    // fallback below only sees the cases this misses.
    if (auto hg = heu_gcd(a, b)) return monic(*hg);

    int var = main_variable(a, b);
    if (a.degree(var) == 0 || b.degree(var) == 0) {
        // One operand does not involve the main variable: gcd divides the
        // other's coefficients in that variable.
        const Poly& flat = a.degree(var) == 0 ? a : b;
        const Poly& tall = a.degree(var) == 0 ? b : a;
        return poly_gcd(flat, content_in(tall, var));
    }

    Poly ca = content_in(a, var), cb = content_in(b, var);
    Poly cg = poly_gcd(ca, cb);
    Poly u = scalar_primitive(a.div_exact(ca)), v = scalar_primitive(b.div_exact(cb));
    if (u.degree(var) < v.degree(var)) std::swap(u, v);
    // Repeated factors (conformal-factor powers in particular) make the
    // remainder chain long and dense.  Peel the squarefree part of the
    // smaller operand first: if it is coprime to the other operand, so is
    // the whole operand, and otherwise the found factor shrinks both sides.
    if (v.degree(var) >= 4) {
        Poly e = poly_gcd(v, v.derivative(var));
        if (!e.is_constant()) {
            Poly g1 = poly_gcd(u, v.div_exact(e));
            if (g1.is_constant()) return monic(cg);
            return monic(cg * (g1 * poly_gcd(u.div_exact(g1), v.div_exact(g1))));
        }
    }
    while (true) {
        Poly r = pseudo_rem(u, v, var);
        if (r.is_zero()) break;
        r = scalar_primitive(r);
        Poly cr = content_in(r, var);
        u = std::move(v);
        v = scalar_primitive(r.div_exact(cr));
    }
    // A common quick exit: coprime primitive parts.
    if (v.degree(var) == 0) return monic(cg);
    return monic(cg * v);
}

std::string Poly::str(const std::vector<std::string>& names) const {
    if (terms_.empty()) return "0";
    std::ostringstream os;
    bool first = true;
    // Print leading (largest) terms first.
    for (auto it = terms_.rbegin(); it != terms_.rend(); ++it) {
        const auto& [e, c] = *it;
        std::string cs = c.str();
        bool neg = cs.size() && cs[0] == '-';
        if (first) {
            if (neg) os << "-", cs = cs.substr(1);
        } else {
            os << (neg ? " - " : " + ");
            if (neg) cs = cs.substr(1);
        }
        first = false;
        bool any_var = exp_total(e) > 0;
        bool coeff_is_one = (cs == "1");
        if (!any_var || !coeff_is_one) os << cs;
        bool need_star = !any_var ? false : !coeff_is_one;
        for (int k = 0; k < nv_; ++k) {
            if (e[k] == 0) continue;
            if (need_star) os << "*";
            need_star = true;
            os << names[size_t(k)];
            if (e[k] > 1) os << "^" << int(e[k]);
        }
    }
    return os.str();
}

}  // namespace costar
