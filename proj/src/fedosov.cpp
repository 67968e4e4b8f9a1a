#include "costar/fedosov.hpp"

#include <bit>
#include <sstream>
#include <stdexcept>

#include "costar/series.hpp"

namespace costar {

namespace {

int par_sign(int count) { return (count % 2 == 0) ? 1 : -1; }

// dq^l wedged from the left onto the mask a; sign 0 flags a collision.
std::pair<int, uint32_t> wedge_left(int l, uint32_t a) {
    uint32_t bit = 1u << l;
    if (a & bit) return {0, 0};
    return {par_sign(std::popcount(a & (bit - 1))), a | bit};
}

// (a1) wedge (a2), counting crossings.
std::pair<int, uint32_t> wedge_merge(uint32_t a1, uint32_t a2) {
    if (a1 & a2) return {0, 0};
    int inv = 0;
    for (uint32_t rest = a2; rest; rest &= rest - 1)
        inv += std::popcount(a1 >> (std::countr_zero(rest) + 1));
    return {par_sign(inv), a1 | a2};
}

// Interior product with d_l.
std::pair<int, uint32_t> contract_a(int l, uint32_t a) {
    uint32_t bit = 1u << l;
    if (!(a & bit)) return {0, 0};
    return {par_sign(std::popcount(a & (bit - 1))), a & ~bit};
}

Exp exp_add(const Exp& a, const Exp& b) {
    Exp r = a;
    for (size_t i = 0; i < r.size(); ++i) r[i] = static_cast<uint16_t>(r[i] + b[i]);
    return r;
}

Rat falling(int m, int k) {
    Rat r(1);
    for (int j = 0; j < k; ++j) r *= (m - j);
    return r;
}

Rat fact(int k) {
    Rat r(1);
    for (int j = 2; j <= k; ++j) r *= j;
    return r;
}

int a_parity(const FedosovElement& A) {
    int p = -1;
    for (auto& [k, c] : A.terms()) {
        int q = std::popcount(k.a) % 2;
        if (p < 0) p = q;
        else if (p != q)
            throw std::invalid_argument("graded commutator needs a parity-homogeneous left operand");
    }
    return p < 0 ? 0 : p;
}

}  // namespace

FedosovElement FedosovElement::scalar(int n, const RatFun& c) {
    FedosovElement f(n);
    f.add_term(FKey{Exp(n, 0), Exp(n, 0), 0, 0}, c);
    return f;
}

FedosovElement FedosovElement::monomial(int n, FKey k, const RatFun& c) {
    FedosovElement f(n);
    f.add_term(k, c);
    return f;
}

void FedosovElement::add_term(const FKey& k, const RatFun& c) {
    if (c.is_zero()) return;
    auto [it, fresh] = terms_.emplace(k, c);
    if (!fresh) {
        it->second = it->second + c;
        if (it->second.is_zero()) terms_.erase(it);
    }
}

FedosovElement& FedosovElement::operator+=(const FedosovElement& o) {
    if (n_ == 0) n_ = o.n_;
    for (auto& [k, c] : o.terms_) add_term(k, c);
    return *this;
}

FedosovElement& FedosovElement::operator-=(const FedosovElement& o) {
    if (n_ == 0) n_ = o.n_;
    for (auto& [k, c] : o.terms_) add_term(k, -c);
    return *this;
}

FedosovElement FedosovElement::operator-() const {
    FedosovElement r(n_);
    for (auto& [k, c] : terms_) r.terms_.emplace(k, -c);
    return r;
}

FedosovElement FedosovElement::scaled(const CRat& c) const {
    FedosovElement r(n_);
    if (c.is_zero()) return r;
    for (auto& [k, v] : terms_) r.terms_.emplace(k, v.scaled(c));
    return r;
}

FedosovElement FedosovElement::truncated(int K) const {
    FedosovElement r(n_);
    for (auto& [k, c] : terms_)
        if (fkey_deg(k) <= K) r.terms_.emplace(k, c);
    return r;
}

FedosovElement FedosovElement::deg_component(int kdeg) const {
    FedosovElement r(n_);
    for (auto& [k, c] : terms_)
        if (fkey_deg(k) == kdeg) r.terms_.emplace(k, c);
    return r;
}

int FedosovElement::max_deg() const {
    int m = -1;
    for (auto& [k, c] : terms_) m = std::max(m, fkey_deg(k));
    return m;
}

FedosovElement FedosovElement::h_apply() const {
    FedosovElement r(n_);
    for (auto& [k, c] : terms_) {
        int w = fkey_hweight(k);
        if (w != 0) r.terms_.emplace(k, c.scaled(CRat(Rat(w))));
    }
    return r;
}

FedosovElement FedosovElement::lambda_scaled(int shift) const {
    FedosovElement r(n_);
    for (auto& [k, c] : terms_) {
        FKey k2 = k;
        k2.e += shift;
        if (k2.e < 0) throw std::domain_error("negative lambda exponent");
        r.terms_.emplace(k2, c);
    }
    return r;
}

std::string FedosovElement::dump(const VarTable& vt) const {
    std::ostringstream out;
    bool first = true;
    for (auto& [k, c] : terms_) {
        if (!first) out << "\n";
        first = false;
        auto put_multiset = [&](const Exp& m) {
            out << "[";
            bool f2 = true;
            for (size_t i = 0; i < m.size(); ++i)
                for (int j = 0; j < m[i]; ++j) {
                    if (!f2) out << ", ";
                    f2 = false;
                    out << (i + 1);
                }
            out << "]";
        };
        out << "{s: ";
        put_multiset(k.s);
        out << ", d: ";
        put_multiset(k.d);
        out << ", a: [";
        bool f3 = true;
        for (uint32_t rest = k.a; rest; rest &= rest - 1) {
            if (!f3) out << ", ";
            f3 = false;
            out << (std::countr_zero(rest) + 1);
        }
        out << "], lambda: " << k.e << ", coeff: " << c.str(vt.names) << "}";
    }
    if (first) out << "0";
    return out.str();
}

// --- products ---------------------------------------------------------------

FedosovElement mul(const FedosovElement& F, const FedosovElement& G) {
    FedosovElement out(F.n() ? F.n() : G.n());
    for (auto& [kf, cf] : F.terms())
        for (auto& [kg, cg] : G.terms()) {
            auto [sgn, amask] = wedge_merge(kf.a, kg.a);
            if (sgn == 0) continue;
            RatFun c = cf * cg;
            if (sgn < 0) c = -c;
            out.add_term(FKey{exp_add(kf.s, kg.s), exp_add(kf.d, kg.d), amask, kf.e + kg.e}, c);
        }
    return out;
}

FedosovElement circ_S(const FedosovElement& F, const FedosovElement& G, int K) {
    FedosovElement out(F.n() ? F.n() : G.n());
    for (auto& [kf, cf] : F.terms()) {
        int degf = fkey_deg(kf);
        for (auto& [kg, cg] : G.terms()) {
            if (degf + fkey_deg(kg) > K) continue;  // Deg is additive for circ_S
            auto [sgn, amask] = wedge_merge(kf.a, kg.a);
            if (sgn == 0) continue;
            RatFun base = cf * cg;
            if (sgn < 0) base = -base;

            size_t n = kf.d.size();
            Exp cap(n, 0), v(n, 0);
            for (size_t i = 0; i < n; ++i) cap[i] = std::min(kf.d[i], kg.s[i]);
            while (true) {
                int tv = exp_total(v);
                Rat w(1);
                for (size_t i = 0; i < n; ++i)
                    if (v[i]) w *= falling(kf.d[i], v[i]) * falling(kg.s[i], v[i]) / fact(v[i]);
                Exp s = exp_add(kf.s, kg.s), d = exp_add(kf.d, kg.d);
                for (size_t i = 0; i < n; ++i) {
                    s[i] = static_cast<uint16_t>(s[i] - v[i]);
                    d[i] = static_cast<uint16_t>(d[i] - v[i]);
                }
                out.add_term(FKey{std::move(s), std::move(d), amask, kf.e + kg.e + tv},
                             base.scaled(CRat(w) * inv_i_pow(tv)));

                size_t i = 0;
                while (i < n && v[i] == cap[i]) v[i++] = 0;
                if (i == n) break;
                v[i]++;
            }
        }
    }
    return out;
}

FedosovElement graded_commutator(const FedosovElement& A, const FedosovElement& F, int K) {
    if (A.is_zero() || F.is_zero()) return FedosovElement(A.n() ? A.n() : F.n());
    int pa = a_parity(A);
    FedosovElement out = circ_S(A, F, K);
    FedosovElement feven(F.n()), fodd(F.n());
    for (auto& [k, c] : F.terms())
        (std::popcount(k.a) % 2 == 0 ? feven : fodd).add_term(k, c);
    out -= circ_S(feven, A, K);
    FedosovElement oa = circ_S(fodd, A, K);
    if (pa == 1)
        out += oa;
    else
        out -= oa;
    return out;
}

namespace {

FedosovElement dy(const FedosovElement& F, int l) {
    FedosovElement r(F.n());
    for (auto& [k, c] : F.terms()) {
        if (k.s[l] == 0) continue;
        FKey k2 = k;
        k2.s[l]--;
        r.add_term(k2, c.scaled(CRat(Rat(k.s[l]))));
    }
    return r;
}

FedosovElement dz(const FedosovElement& F, int l) {
    FedosovElement r(F.n());
    for (auto& [k, c] : F.terms()) {
        if (k.d[l] == 0) continue;
        FKey k2 = k;
        k2.d[l]--;
        r.add_term(k2, c.scaled(CRat(Rat(k.d[l]))));
    }
    return r;
}

}  // namespace

FedosovElement fib_poisson(const FedosovElement& F, const FedosovElement& G) {
    FedosovElement out(F.n() ? F.n() : G.n());
    int n = F.n() ? F.n() : G.n();
    for (int l = 0; l < n; ++l) {
        out += mul(dy(F, l), dz(G, l));
        out -= mul(dz(F, l), dy(G, l));
    }
    return out;
}

FedosovElement i_over_lambda(const FedosovElement& F) {
    FedosovElement r(F.n());
    for (auto& [k, c] : F.terms()) {
        if (k.e < 1)
            throw std::domain_error("element not divisible by lambda: grading bug in caller");
        FKey k2 = k;
        k2.e--;
        r.add_term(k2, c.scaled(CRat::unit_i()));
    }
    return r;
}

// --- differentials ----------------------------------------------------------

FedosovElement delta(const FedosovElement& F) {
    FedosovElement r(F.n());
    for (auto& [k, c] : F.terms())
        for (size_t l = 0; l < k.s.size(); ++l) {
            if (k.s[l] == 0) continue;
            auto [sgn, a2] = wedge_left((int)l, k.a);
            if (sgn == 0) continue;
            FKey k2 = k;
            k2.s[l]--;
            k2.a = a2;
            r.add_term(k2, c.scaled(CRat(Rat(sgn * k.s[l]))));
        }
    return r;
}

FedosovElement delta_star(const FedosovElement& F) {
    FedosovElement r(F.n());
    for (auto& [k, c] : F.terms())
        for (uint32_t rest = k.a; rest; rest &= rest - 1) {
            int l = std::countr_zero(rest);
            auto [sgn, a2] = contract_a(l, k.a);
            FKey k2 = k;
            k2.s[l]++;
            k2.a = a2;
            r.add_term(k2, sgn < 0 ? -c : c);
        }
    return r;
}

FedosovElement delta_inv(const FedosovElement& F) {
    FedosovElement r(F.n());
    for (auto& [k, c] : F.terms()) {
        int tot = exp_total(k.s) + std::popcount(k.a);
        if (tot == 0) continue;
        for (uint32_t rest = k.a; rest; rest &= rest - 1) {
            int l = std::countr_zero(rest);
            auto [sgn, a2] = contract_a(l, k.a);
            FKey k2 = k;
            k2.s[l]++;
            k2.a = a2;
            r.add_term(k2, c.scaled(CRat(Rat(sgn, tot))));
        }
    }
    return r;
}

FedosovElement sigma(const FedosovElement& F) {
    FedosovElement r(F.n());
    for (auto& [k, c] : F.terms())
        if (exp_total(k.s) == 0 && k.a == 0) r.add_term(k, c);
    return r;
}

FedosovElement proj_P(const FedosovElement& F) {
    FedosovElement r(F.n());
    for (auto& [k, c] : F.terms())
        if (exp_total(k.d) == 0) r.add_term(k, c);
    return r;
}

FedosovElement nabla(const FedosovElement& F, const ChartSpec& spec) {
    int n = spec.n;
    FedosovElement r(n);
    if (F.is_zero()) return r;
    int nv = F.terms().begin()->second.nv();
    // Lift the symbols once if the coefficients carry extra parameters.
    std::vector<RatFun> gam;
    gam.reserve(spec.gamma.size());
    for (const RatFun& g : spec.gamma) gam.push_back(g.nv() == nv ? g : g.extended(nv));
    auto G = [&](int k, int i, int j) -> const RatFun& { return gam[(k * n + i) * n + j]; };

    for (auto& [k, c] : F.terms()) {
        for (int l = 0; l < n; ++l) {
            // Coefficient derivative: straight dq^l wedge.
            {
                RatFun dc = c.partial(l);
                if (!dc.is_zero()) {
                    auto [sgn, a2] = wedge_left(l, k.a);
                    if (sgn != 0) {
                        FKey k2 = k;
                        k2.a = a2;
                        r.add_term(k2, sgn < 0 ? -dc : dc);
                    }
                }
            }
            auto [osgn, oa] = wedge_left(l, k.a);
            if (osgn != 0) {
                // Symmetric slots: y_i -> -Gamma^i_{lk} y_k.
                for (int i = 0; i < n; ++i) {
                    if (k.s[i] == 0) continue;
                    for (int kk = 0; kk < n; ++kk) {
                        const RatFun& g = G(i, l, kk);
                        if (g.is_zero()) continue;
                        FKey k2 = k;
                        k2.s[i]--;
                        k2.s[kk]++;
                        k2.a = oa;
                        r.add_term(k2, (g * c).scaled(CRat(Rat(-osgn * k.s[i]))));
                    }
                }
                // Dual-symmetric slots: z^i -> +Gamma^k_{li} z^k.
                for (int i = 0; i < n; ++i) {
                    if (k.d[i] == 0) continue;
                    for (int kk = 0; kk < n; ++kk) {
                        const RatFun& g = G(kk, l, i);
                        if (g.is_zero()) continue;
                        FKey k2 = k;
                        k2.d[i]--;
                        k2.d[kk]++;
                        k2.a = oa;
                        r.add_term(k2, (g * c).scaled(CRat(Rat(osgn * k.d[i]))));
                    }
                }
            }
            // Exterior slots: dq^i -> -Gamma^i_{lk} dq^k, then the outer dq^l.
            for (uint32_t rest = k.a; rest; rest &= rest - 1) {
                int i = std::countr_zero(rest);
                auto [sg1, a1] = contract_a(i, k.a);
                for (int kk = 0; kk < n; ++kk) {
                    const RatFun& g = G(i, l, kk);
                    if (g.is_zero()) continue;
                    auto [sg2, a2] = wedge_left(kk, a1);
                    if (sg2 == 0) continue;
                    auto [sg3, a3] = wedge_left(l, a2);
                    if (sg3 == 0) continue;
                    FKey k2 = k;
                    k2.a = a3;
                    r.add_term(k2, (g * c).scaled(CRat(Rat(-sg1 * sg2 * sg3))));
                }
            }
        }
    }
    return r;
}

FedosovElement build_R_S(const ChartSpec& spec) {
    int n = spec.n;
    CurvatureTensor R = curvature(spec);
    FedosovElement out(n);
    for (int l = 0; l < n; ++l)
        for (int k = 0; k < n; ++k)
            for (int i = 0; i < n; ++i)
                for (int j = i + 1; j < n; ++j) {
                    const RatFun& c = R.at(l, k, i, j);
                    if (c.is_zero()) continue;
                    Exp s(n, 0), d(n, 0);
                    s[k] = 1;
                    d[l] = 1;
                    out.add_term(FKey{std::move(s), std::move(d),
                                      (1u << i) | (1u << j), 0},
                                 -c);
                }
    return out;
}

// --- r_S --------------------------------------------------------------------

RSolution solve_r_S(const ChartSpec& spec, int Kdeg) {
    if (Kdeg < 3) throw std::invalid_argument("solve_r_S needs Kdeg >= 3");
    int n = spec.n;
    FedosovElement RS = build_R_S(spec);

    // Components by total degree, via two independent recursions: the
    // commutator route (deformed product plus exact lambda division) and the
    // fibrewise-Poisson route.  Any discrepancy is a hard error.
    std::vector<FedosovElement> rA(Kdeg + 1, FedosovElement(n));
    std::vector<FedosovElement> rB(Kdeg + 1, FedosovElement(n));
    rA[3] = rB[3] = delta_inv(RS);
    for (int k = 3; k + 1 <= Kdeg; ++k) {
        FedosovElement xA = nabla(rA[k], spec);
        FedosovElement xB = nabla(rB[k], spec);
        // The lambda-free parts of the squared terms only cancel across the
        // whole convolution, so sum first and divide once.
        FedosovElement sq(n);
        for (int l = 3; l <= k - 1; ++l) {
            int m = k + 2 - l;
            if (m < 3 || m > k) continue;
            sq += circ_S(rA[l], rA[m]);
            xB += fib_poisson(rB[l], rB[m]).scaled(CRat(Rat(-1, 2)));
        }
        if (!sq.is_zero()) xA += i_over_lambda(sq);
        rA[k + 1] = delta_inv(xA);
        rB[k + 1] = delta_inv(xB);
        if (!(rA[k + 1] == rB[k + 1]))
            throw std::domain_error("r_S recursions disagree at degree " + std::to_string(k + 1));
    }

    RSolution out;
    out.r = FedosovElement(n);
    for (int k = 3; k <= Kdeg; ++k) out.r += rA[k];
    out.deg = Kdeg;
    return out;
}

FedosovElement solve_r_S_fixed_point(const ChartSpec& spec, int Kdeg) {
    if (Kdeg < 3) throw std::invalid_argument("solve_r_S_fixed_point needs Kdeg >= 3");
    int n = spec.n;
    FedosovElement RS = build_R_S(spec);
    using FS = FormalSeries<FedosovElement>;

    auto split = [&](const FedosovElement& x) {
        FS out(SeriesClass::Power, Rat(Kdeg));
        for (int k = 0; k <= Kdeg; ++k) {
            FedosovElement comp = x.deg_component(k);
            if (!comp.is_zero()) out.set_coeff(Rat(k), comp);
        }
        return out;
    };
    DegreeRaisingMap<FedosovElement> T{Rat(1), [&](const FS& v) {
        FedosovElement full(n);
        for (auto& [e, comp] : v.coeffs()) {
            (void)e;
            full += comp;
        }
        FedosovElement sq = circ_S(full, full, Kdeg + 1);
        FedosovElement img = delta_inv(RS + nabla(full, spec) + i_over_lambda(sq));
        return split(img.truncated(Kdeg));
    }};

    FS fp = fixed_point(T, FS(SeriesClass::Power, Rat(Kdeg)), Rat(Kdeg));
    FedosovElement out(n);
    for (auto& [e, comp] : fp.coeffs()) {
        (void)e;
        out += comp;
    }
    return out;
}

FedosovElement D_S(const FedosovElement& F, const RSolution& rs, const ChartSpec& spec, int K) {
    if (rs.deg < K + 2)
        throw std::invalid_argument("r_S solved to insufficient degree for this truncation");
    FedosovElement out = nabla(F, spec) - delta(F);
    if (!rs.r.is_zero()) out += i_over_lambda(graded_commutator(rs.r, F, K + 2));
    return out.truncated(K);
}

}  // namespace costar
