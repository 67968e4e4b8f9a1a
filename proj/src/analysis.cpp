#include "costar/analysis.hpp"

#include <map>
#include <stdexcept>
#include <string>
#include <utility>

namespace costar {

namespace {

MomentumPolynomial trim(const MomentumPolynomial& f, int K) {
    return K >= 0 ? f.lambda_truncated(K) : f;
}

int coeff_nv(const MomentumPolynomial& f, int fallback) {
    return f.is_zero() ? fallback : f.terms().begin()->second.nv();
}

// sum_j a_j d^{beta_j} S rewritten as sum_i d_{q^i} V^i + R S by repeatedly
// peeling one derivative:
//   a d^beta S = d_i(a d^{beta - e_i} S) - (d_i a) d^{beta - e_i} S.
// S and the coefficients are lambda-graded functions of q.
struct IbpSplit {
    std::vector<MomentumPolynomial> V;
    MomentumPolynomial R;
};

IbpSplit ibp_split(std::map<Exp, MomentumPolynomial, LexLess> items, const MomentumPolynomial& S,
                   int n) {
    IbpSplit out{std::vector<MomentumPolynomial>(size_t(n), MomentumPolynomial(n)),
                 MomentumPolynomial(n)};
    std::map<Exp, MomentumPolynomial, LexLess> dS;
    dS.emplace(Exp(size_t(n), 0), S);
    auto deriv_of = [&](const Exp& beta) -> const MomentumPolynomial& {
        auto self = [&](const Exp& b, auto& rec) -> const MomentumPolynomial& {
            auto it = dS.find(b);
            if (it != dS.end()) return it->second;
            Exp prev = b;
            int i = 0;
            while (prev[size_t(i)] == 0) ++i;
            prev[size_t(i)]--;
            MomentumPolynomial d = rec(prev, rec).partial_q(i);
            return dS.emplace(b, std::move(d)).first->second;
        };
        return self(beta, self);
    };
    while (!items.empty()) {
        auto it = std::prev(items.end());
        Exp beta = it->first;
        MomentumPolynomial a = it->second;
        items.erase(it);
        if (a.is_zero()) continue;
        if (exp_total(beta) == 0) {
            out.R += a;
            continue;
        }
        int i = 0;
        while (beta[size_t(i)] == 0) ++i;
        Exp beta1 = beta;
        beta1[size_t(i)]--;
        out.V[size_t(i)] += a * deriv_of(beta1);
        MomentumPolynomial carry = -a.partial_q(i);
        if (!carry.is_zero()) {
            auto [jt, fresh] = items.emplace(beta1, carry);
            if (!fresh) jt->second += carry;
        }
    }
    return out;
}

// Certificate for (i*(N^{dir} f) - i*f) m as a coordinate divergence.  It
// rests on the exact identity
//   i*(Delta h) m = sum_i d_{q^i}(m i*(d_{p_i} h)),
// which holds because alpha_j + Gamma^i_{ij} = (d_j m)/m, so expanding the
// exponential gives potentials V^i = sum_{k>=1} (dir lambda/2i)^k / k!
// m i*(d_{p_i} Delta^{k-1} f).
DivergenceCertificate n_shift_certificate(const MomentumPolynomial& f, const ChartSpec& spec,
                                          int dir, int K) {
    const RatFun& m = spec.density_or_throw();
    int n = spec.n;
    DivergenceCertificate cert;
    cert.dq.assign(size_t(n), MomentumPolynomial(n));
    MomentumPolynomial h = f;
    CRat c(1);
    for (int k = 1; !h.is_zero(); ++k) {
        c *= CRat(Rat(0), Rat(-dir, 2 * k));  // times dir / (2 i k)
        for (int i = 0; i < n; ++i)
            cert.dq[size_t(i)] += h.partial_p(i).i_star().fun_scaled(m).lambda_scaled(k).scaled(c);
        h = delta_apply(h, spec);
    }
    cert.target = (N_apply(f, spec, dir).i_star() - f.i_star()).fun_scaled(m);
    cert.target = trim(cert.target, K);
    for (auto& v : cert.dq) v = trim(v, K);
    if (!cert.verify()) throw std::domain_error("ordering-shift certificate failed to verify");
    return cert;
}

Rat multiset_factorial(const Exp& m) {
    Rat f(1);
    for (auto v : m)
        for (int j = 2; j <= int(v); ++j) f *= j;
    return f;
}

Rat pow2(int k) {
    Rat r(1);
    for (int j = 0; j < k; ++j) r *= 2;
    return r;
}

long binom(long a, long b) {
    long r = 1;
    for (long j = 1; j <= b; ++j) r = r * (a - b + j) / j;
    return r;
}

// All componentwise sub-multisets u <= m.
std::vector<Exp> sub_multisets(const Exp& m) {
    std::vector<Exp> out{Exp(m.size(), 0)};
    for (size_t i = 0; i < m.size(); ++i) {
        std::vector<Exp> next;
        for (const auto& u : out)
            for (uint16_t v = 0; v <= m[i]; ++v) {
                Exp w = u;
                w[i] = v;
                next.push_back(w);
            }
        out = std::move(next);
    }
    return out;
}

}  // namespace

MomentumPolynomial DivergenceCertificate::divergence() const {
    MomentumPolynomial out(target.n());
    for (size_t i = 0; i < dp.size(); ++i) out += dp[i].partial_p(int(i));
    for (size_t i = 0; i < dq.size(); ++i) out += dq[i].partial_q(int(i));
    return out;
}

bool DivergenceCertificate::verify() const { return divergence() == target; }

GNSWitness gns_witness(const MomentumPolynomial& f, const ChartSpec& spec) {
    return GNSWitness{f, N_apply(f, spec, +1).i_star()};
}

DivergenceCertificate adjoint_certificate(const MomentumPolynomial& f, const RatFun& phi,
                                          const RatFun& psi, const ChartSpec& spec, int K,
                                          bool weyl) {
    const RatFun& m = spec.density_or_throw();
    int n = spec.n;
    DiffOpQ A = weyl ? rho_W(f, spec) : rho_S(f, spec);
    MomentumPolynomial fadj = weyl ? f.conj() : N_apply(N_apply(f.conj(), spec, +1), spec, +1);
    DiffOpQ B = weyl ? rho_W(fadj, spec) : rho_S(fadj, spec);

    MomentumPolynomial cphi = MomentumPolynomial::pi_star(n, phi.conj());
    RatFun psim = psi * m;

    // conj(A phi) psi m expanded over the terms of A.
    std::map<Exp, MomentumPolynomial, LexLess> items;
    for (const auto& [k, cc] : A.terms()) {
        MomentumPolynomial a =
            MomentumPolynomial::monomial(n, MKey{Exp(size_t(n), 0), k.e}, cc.conj() * psim);
        auto [it, fresh] = items.emplace(k.m, a);
        if (!fresh) it->second += a;
    }
    IbpSplit split = ibp_split(std::move(items), cphi, n);

    MomentumPolynomial adj_side = B.apply(psi).fun_scaled(m);
    if (!(split.R == adj_side))
        throw std::domain_error("adjoint symmetry violated: integrated-by-parts residual "
                                "does not match the adjoint operator");

    DivergenceCertificate cert;
    cert.target = trim(A.apply(phi).conj().fun_scaled(psim) - adj_side * cphi, K);
    cert.dq.reserve(size_t(n));
    for (auto& v : split.V) cert.dq.push_back(trim(v, K));
    if (!cert.verify()) throw std::domain_error("adjoint certificate failed to verify");
    return cert;
}

OmegaCertificates omega_identities(const MomentumPolynomial& f, const MomentumPolynomial& g,
                                   const ChartSpec& spec, const RSolution& rs, int K) {
    const RatFun& m = spec.density_or_throw();
    int n = spec.n;
    OmegaCertificates out;
    out.n_shift = n_shift_certificate(f, spec, +1, K);

    // (i*(N(f star_W g)) - i*(N^{-1}f) i*(Ng)) m: since N intertwines the
    // orderings, N(f star_W g) = (Nf) star_S (Ng), whose boundary value is
    // rho_S(Nf) applied to i*(Ng) (the standard representation is a
    // homomorphism; checked below).  Integrating rho_S(Nf) by parts against
    // the density leaves exactly the residual i*(N^{-1}f) m, so the split
    // potentials certify the identity on the nose.
    MomentumPolynomial u = N_apply(f, spec, +1);
    MomentumPolynomial w = N_apply(g, spec, +1);
    MomentumPolynomial iw = w.i_star();

    DiffOpQ rsu = rho_S(u, spec);
    std::map<Exp, MomentumPolynomial, LexLess> items;
    for (const auto& [k, cc] : rsu.terms()) {
        MomentumPolynomial a =
            MomentumPolynomial::monomial(n, MKey{Exp(size_t(n), 0), k.e}, cc * m);
        auto [it, fresh] = items.emplace(k.m, a);
        if (!fresh) it->second += a;
    }
    IbpSplit split = ibp_split(std::move(items), iw, n);
    if (!(split.R == N_apply(f, spec, -1).i_star().fun_scaled(m)))
        throw std::domain_error("state adjoint identity violated: integrated-by-parts "
                                "residual does not match i*(N^{-1}f) m");
    MomentumPolynomial P = star_S(u, w, spec, rs, K);
    if (!(trim(P.i_star(), K) == trim(rsu.apply(iw), K)))
        throw std::domain_error("standard representation is not a homomorphism on this input");

    out.w_product.target =
        trim((P.i_star() - N_apply(f, spec, -1).i_star() * iw).fun_scaled(m), K);
    out.w_product.dq.reserve(size_t(n));
    for (int i = 0; i < n; ++i) out.w_product.dq.push_back(trim(split.V[size_t(i)], K));
    if (!out.w_product.verify())
        throw std::domain_error("state product certificate failed to verify");

    // Positivity: the integrand for the pair (conj f, f) is conj(h) h.
    out.positivity_h = u.i_star();
    MomentumPolynomial other = N_apply(f.conj(), spec, -1).i_star();
    if (!(other == out.positivity_h.conj()))
        throw std::domain_error("positivity integrand is not a square");
    out.positivity_integrand = out.positivity_h.conj() * out.positivity_h;
    return out;
}

MomentumPolynomial gns_schroedinger_check(const MomentumPolynomial& f, const RatFun& chi,
                                          const ChartSpec& spec, const RSolution& rs, int K) {
    int n = spec.n;
    MomentumPolynomial lhs =
        N_apply(star_W(f, MomentumPolynomial::pi_star(n, chi), spec, rs, -1), spec, +1).i_star();
    MomentumPolynomial rhs = rho_W(f, spec).apply(chi);
    return trim(lhs - rhs, K);
}

MomentumPolynomial time_reversal_apply(const MomentumPolynomial& f) {
    MomentumPolynomial out(f.n());
    for (const auto& [k, c] : f.terms()) out.add_term(k, exp_total(k.m) % 2 ? -c : c);
    return out;
}

MomentumPolynomial time_reversal_check(const MomentumPolynomial& f, const MomentumPolynomial& g,
                                       const ChartSpec& spec, const RSolution& rs, int K) {
    MomentumPolynomial lhs = time_reversal_apply(star_W(f, g, spec, rs, K));
    MomentumPolynomial rhs = star_W(time_reversal_apply(g), time_reversal_apply(f), spec, rs, K);
    return trim(lhs - rhs, K);
}

DiffOpQ time_reversal_gns(const MomentumPolynomial& f, const ChartSpec& spec) {
    return rho_W(time_reversal_apply(f), spec) - rho_W(f.conj(), spec).conj();
}

AffineMap AffineMap::identity(int n) {
    AffineMap out;
    out.n = n;
    out.M.assign(size_t(n), std::vector<Rat>(size_t(n), Rat(0)));
    for (int i = 0; i < n; ++i) out.M[size_t(i)][size_t(i)] = 1;
    out.c.assign(size_t(n), Rat(0));
    return out;
}

AffineMap AffineMap::translation(int n, const std::vector<Rat>& shift) {
    AffineMap out = identity(n);
    out.c = shift;
    return out;
}

AffineMap AffineMap::linear(int n, const std::vector<std::vector<Rat>>& M) {
    AffineMap out = identity(n);
    out.M = M;
    return out;
}

Rat AffineMap::det() const {
    std::vector<std::vector<Rat>> a = M;
    Rat d(1);
    for (int col = 0; col < n; ++col) {
        int piv = -1;
        for (int r = col; r < n; ++r)
            if (sgn(a[size_t(r)][size_t(col)]) != 0) {
                piv = r;
                break;
            }
        if (piv < 0) return Rat(0);
        if (piv != col) {
            std::swap(a[size_t(piv)], a[size_t(col)]);
            d = -d;
        }
        d *= a[size_t(col)][size_t(col)];
        for (int r = col + 1; r < n; ++r) {
            Rat fct = a[size_t(r)][size_t(col)] / a[size_t(col)][size_t(col)];
            for (int cc = col; cc < n; ++cc) a[size_t(r)][size_t(cc)] -= fct * a[size_t(col)][size_t(cc)];
        }
    }
    return d;
}

AffineMap AffineMap::inverse() const {
    std::vector<std::vector<Rat>> a = M;
    AffineMap out = identity(n);
    for (int col = 0; col < n; ++col) {
        int piv = -1;
        for (int r = col; r < n; ++r)
            if (sgn(a[size_t(r)][size_t(col)]) != 0) {
                piv = r;
                break;
            }
        if (piv < 0) throw std::invalid_argument("affine chart map is singular");
        std::swap(a[size_t(piv)], a[size_t(col)]);
        std::swap(out.M[size_t(piv)], out.M[size_t(col)]);
        Rat lead = a[size_t(col)][size_t(col)];
        for (int cc = 0; cc < n; ++cc) {
            a[size_t(col)][size_t(cc)] /= lead;
            out.M[size_t(col)][size_t(cc)] /= lead;
        }
        for (int r = 0; r < n; ++r) {
            if (r == col) continue;
            Rat fct = a[size_t(r)][size_t(col)];
            if (sgn(fct) == 0) continue;
            for (int cc = 0; cc < n; ++cc) {
                a[size_t(r)][size_t(cc)] -= fct * a[size_t(col)][size_t(cc)];
                out.M[size_t(r)][size_t(cc)] -= fct * out.M[size_t(col)][size_t(cc)];
            }
        }
    }
    for (int i = 0; i < n; ++i) {
        Rat s(0);
        for (int j = 0; j < n; ++j) s += out.M[size_t(i)][size_t(j)] * c[size_t(j)];
        out.c[size_t(i)] = -s;
    }
    return out;
}

namespace {

Poly poly_pullback(const Poly& p, const std::vector<Poly>& img) {
    Poly out(p.nv());
    for (const auto& [e, cc] : p.terms()) {
        Poly t = Poly::constant(p.nv(), cc);
        for (size_t k = 0; k < e.size(); ++k)
            if (e[k]) t *= img[k].pow(int(e[k]));
        out += t;
    }
    return out;
}

}  // namespace

RatFun affine_pullback(const RatFun& h, const AffineMap& phi) {
    int nv = h.nv();
    std::vector<Poly> img;
    img.reserve(size_t(nv));
    for (int k = 0; k < nv; ++k) {
        if (k < phi.n) {
            Poly t = Poly::constant(nv, CRat(phi.c[size_t(k)]));
            for (int j = 0; j < phi.n; ++j)
                if (sgn(phi.M[size_t(k)][size_t(j)]) != 0)
                    t += Poly::variable(nv, j).scaled(CRat(phi.M[size_t(k)][size_t(j)]));
            img.push_back(t);
        } else {
            img.push_back(Poly::variable(nv, k));
        }
    }
    return RatFun(poly_pullback(h.num(), img), poly_pullback(h.den(), img));
}

MomentumPolynomial cotangent_pullback(const MomentumPolynomial& f, const AffineMap& phi) {
    int n = f.n();
    int nv = coeff_nv(f, n);
    AffineMap inv = phi.inverse();
    std::vector<MomentumPolynomial> vals;
    vals.reserve(size_t(n));
    for (int i = 0; i < n; ++i) {
        MomentumPolynomial v(n);
        for (int j = 0; j < n; ++j)
            if (sgn(inv.M[size_t(j)][size_t(i)]) != 0)
                v += MomentumPolynomial::p_var(n, nv, j).scaled(CRat(inv.M[size_t(j)][size_t(i)]));
        vals.push_back(v);
    }
    MomentumPolynomial pulled(n);
    for (const auto& [k, c] : f.terms()) pulled.add_term(k, affine_pullback(c, phi));
    return pulled.subst_p(vals);
}

DiffOpQ conjugate_by_pullback(const DiffOpQ& D, const AffineMap& phi) {
    int n = D.n();
    AffineMap inv = phi.inverse();
    int nv = phi.n;
    if (!D.terms().empty()) nv = D.terms().begin()->second.nv();
    // (U D U^{-1}) chi = (D(chi . phi^{-1})) . phi with U chi = chi . phi:
    // coefficients transform by phi, derivative slots by the inverse matrix,
    // d_i(chi . phi^{-1}) = sum_l (M^{-1})[l][i] (d_l chi) . phi^{-1},
    // encoded on momentum monomials to expand the multinomials.
    std::vector<MomentumPolynomial> slot;
    slot.reserve(size_t(n));
    for (int i = 0; i < n; ++i) {
        MomentumPolynomial v(n);
        for (int l = 0; l < n; ++l)
            if (sgn(inv.M[size_t(l)][size_t(i)]) != 0)
                v += MomentumPolynomial::p_var(n, nv, l).scaled(CRat(inv.M[size_t(l)][size_t(i)]));
        slot.push_back(v);
    }
    DiffOpQ out(n);
    for (const auto& [k, c] : D.terms()) {
        RatFun cp = affine_pullback(c, phi);
        MomentumPolynomial mono =
            MomentumPolynomial::monomial(n, MKey{k.m, 0}, RatFun::constant(nv, CRat(1)));
        MomentumPolynomial expanded = mono.subst_p(slot);
        for (const auto& [mk, a] : expanded.terms()) out.add_term(MKey{mk.m, k.e}, cp * a);
    }
    return out;
}

std::vector<RatFun> connection_invariance_residuals(const AffineMap& phi, const ChartSpec& spec) {
    int n = spec.n;
    std::vector<RatFun> out;
    for (int k = 0; k < n; ++k)
        for (int i = 0; i < n; ++i)
            for (int j = i; j < n; ++j) {
                RatFun r(n);
                for (int a = 0; a < n; ++a)
                    for (int b = 0; b < n; ++b) {
                        Rat w = phi.M[size_t(a)][size_t(i)] * phi.M[size_t(b)][size_t(j)];
                        if (sgn(w) != 0)
                            r += affine_pullback(spec.gamma_at(k, a, b), phi).scaled(CRat(w));
                    }
                for (int l = 0; l < n; ++l)
                    if (sgn(phi.M[size_t(k)][size_t(l)]) != 0)
                        r -= spec.gamma_at(l, i, j).scaled(CRat(phi.M[size_t(k)][size_t(l)]));
                out.push_back(r);
            }
    return out;
}

std::vector<RatFun> alpha_invariance_residuals(const AffineMap& phi, const ChartSpec& spec) {
    int n = spec.n;
    std::vector<RatFun> al = spec.effective_alpha();
    std::vector<RatFun> out;
    for (int i = 0; i < n; ++i) {
        RatFun r(n);
        for (int a = 0; a < n; ++a)
            if (sgn(phi.M[size_t(a)][size_t(i)]) != 0)
                r += affine_pullback(al[size_t(a)], phi).scaled(CRat(phi.M[size_t(a)][size_t(i)]));
        r -= al[size_t(i)];
        out.push_back(r);
    }
    return out;
}

RatFun density_invariance_residual(const AffineMap& phi, const ChartSpec& spec) {
    const RatFun& m = spec.density_or_throw();
    return affine_pullback(m, phi).scaled(CRat(abs(phi.det()))) - m;
}

DiffeoCheck diffeo_automorphism_check(const AffineMap& phi, const MomentumPolynomial& f,
                                      const MomentumPolynomial& g, const ChartSpec& spec,
                                      const RSolution& rs, int K) {
    int n = spec.n;
    std::vector<RatFun> conn = connection_invariance_residuals(phi, spec);
    size_t idx = 0;
    for (int k = 0; k < n; ++k)
        for (int i = 0; i < n; ++i)
            for (int j = i; j < n; ++j, ++idx)
                if (!conn[idx].is_zero())
                    throw std::invalid_argument(
                        "chart map does not preserve the connection: residual at Gamma^" +
                        std::to_string(k + 1) + "_{" + std::to_string(i + 1) + "," +
                        std::to_string(j + 1) + "} = " + conn[idx].str(spec.vars.names));

    DiffeoCheck out;
    MomentumPolynomial Af = cotangent_pullback(f, phi);
    MomentumPolynomial Ag = cotangent_pullback(g, phi);
    out.star_s_residual = trim(cotangent_pullback(star_S(f, g, spec, rs, K), phi) -
                                   star_S(Af, Ag, spec, rs, K),
                               K);

    bool alpha_inv = true;
    for (const auto& r : alpha_invariance_residuals(phi, spec))
        if (!r.is_zero()) alpha_inv = false;
    if (alpha_inv)
        out.star_w_residual = trim(cotangent_pullback(star_W(f, g, spec, rs, K), phi) -
                                       star_W(Af, Ag, spec, rs, K),
                                   K);
    if (alpha_inv && spec.density.has_value() && density_invariance_residual(phi, spec).is_zero())
        out.gns_residual = rho_W(Af, spec) - conjugate_by_pullback(rho_W(f, spec), phi);
    return out;
}

SymbolCalculusCheck symbol_calculus_check(const SymTensor& T, const RatFun& phi,
                                          const RatFun& psi, const ChartSpec& spec) {
    int n = spec.n;
    for (const auto& gm : spec.gamma)
        if (!gm.is_zero())
            throw std::invalid_argument("symbol calculus comparison requires a flat chart");
    const RatFun& m = spec.density_or_throw();
    MomentumPolynomial That = hat(T);

    // Closed derivative form of the standard-ordered operator.
    MomentumPolynomial closed(n);
    for (const auto& [k, Tm] : T.comps) {
        int deg = exp_total(k.m);
        RatFun d = phi;
        for (int i = 0; i < n; ++i)
            for (int rep = 0; rep < int(k.m[size_t(i)]); ++rep) d = d.partial(i);
        CRat scal = inv_i_pow(deg) * CRat(Rat(1) / multiset_factorial(k.m));
        closed.add_term(MKey{Exp(size_t(n), 0), k.e + deg}, (Tm * d).scaled(scal));
    }
    SymbolCalculusCheck out;
    out.standard_residual = closed - rho_S(That, spec).apply(phi);

    // Symmetrized bilinear kernel, expanded over sub-multisets, against the
    // matrix-element integrand of the Weyl-ordered operator.
    MomentumPolynomial cphi = MomentumPolynomial::pi_star(n, phi.conj());
    std::map<Exp, MomentumPolynomial, LexLess> items;
    for (const auto& [k, Tm] : T.comps) {
        int deg = exp_total(k.m);
        RatFun cm = (Tm * m).scaled(inv_i_pow(deg) *
                                    CRat(Rat(1) / (multiset_factorial(k.m) * pow2(deg))));
        for (const auto& u : sub_multisets(k.m)) {
            long mult = 1;
            for (size_t i = 0; i < u.size(); ++i) mult *= binom(long(k.m[i]), long(u[i]));
            if (exp_total(u) % 2) mult = -mult;
            RatFun dpsi = psi;
            for (int i = 0; i < n; ++i)
                for (int rep = 0; rep < int(k.m[size_t(i)]) - int(u[size_t(i)]); ++rep)
                    dpsi = dpsi.partial(i);
            MomentumPolynomial a = MomentumPolynomial::monomial(
                n, MKey{Exp(size_t(n), 0), k.e + deg}, cm.scaled(CRat(Rat(mult))) * dpsi);
            auto [it, fresh] = items.emplace(u, a);
            if (!fresh) it->second += a;
        }
    }
    MomentumPolynomial kernel(n);
    for (const auto& [beta, a] : items) {
        MomentumPolynomial d = cphi;
        for (int i = 0; i < n; ++i)
            for (int rep = 0; rep < int(beta[size_t(i)]); ++rep) d = d.partial_q(i);
        kernel += a * d;
    }
    IbpSplit split = ibp_split(std::move(items), cphi, n);
    MomentumPolynomial rw = rho_W(That, spec).apply(psi).fun_scaled(m);
    if (!(split.R == rw))
        throw std::domain_error("Weyl kernel does not reproduce the Weyl representation");
    out.weyl_kernel.target = kernel - rw * cphi;
    out.weyl_kernel.dq = std::move(split.V);
    if (!out.weyl_kernel.verify())
        throw std::domain_error("Weyl kernel certificate failed to verify");
    return out;
}

DivergenceCertificate homogeneous_divergence_form(const PhaseOp& D, int r,
                                                  const MomentumPolynomial& g) {
    if (r < 1) throw std::invalid_argument("homogeneity degree must be at least 1");
    int n = D.n;
    for (const auto& [key, c] : D.terms) {
        int I = 0;
        for (int i = 0; i < n; ++i) I += key[size_t(n + i)];
        for (const auto& [mk, cc] : c.terms())
            if (exp_total(mk.m) != I - r)
                throw std::invalid_argument("operator is not homogeneous of degree -" +
                                            std::to_string(r));
    }
    DivergenceCertificate cert;
    cert.dp.assign(size_t(n), MomentumPolynomial(g.n()));
    cert.target = phase_op_apply(D, g);

    auto apply_key = [&](const Exp& key) {
        MomentumPolynomial d = g;
        for (int j = 0; j < n; ++j)
            for (int rep = 0; rep < int(key[size_t(j)]); ++rep) d = d.partial_q(j);
        for (int j = 0; j < n; ++j)
            for (int rep = 0; rep < int(key[size_t(n + j)]); ++rep) d = d.partial_p(j);
        return d;
    };

    std::map<Exp, MomentumPolynomial, LexLess> work(D.terms.begin(), D.terms.end());
    while (!work.empty()) {
        auto it = std::prev(work.end());
        Exp key = it->first;
        MomentumPolynomial c = it->second;
        work.erase(it);
        if (c.is_zero()) continue;
        int i = -1;
        for (int j = n - 1; j >= 0; --j)
            if (key[size_t(n + j)] > 0) {
                i = j;
                break;
            }
        if (i < 0) throw std::logic_error("homogeneous peel reached a derivative-free term");
        Exp key1 = key;
        key1[size_t(n + i)]--;
        cert.dp[size_t(i)] += c * apply_key(key1);
        MomentumPolynomial carry = -c.partial_p(i);
        if (!carry.is_zero()) {
            auto [jt, fresh] = work.emplace(key1, carry);
            if (!fresh) jt->second += carry;
        }
    }
    if (!cert.verify())
        throw std::domain_error("homogeneous divergence certificate failed to verify");
    return cert;
}

namespace {

// Accumulator for the trace certificate.  commutator(l, g, shift, sign)
// adds potentials for sign * lambda^shift [l, g] through total order K,
// recursing on the momentum degree of l via
//   [t, g] = [X, S star g] + [S, g star X] - [X star S - t, g]
// for a top monomial t = X S + lower lambda orders.
struct TraceBuilder {
    const ChartSpec& spec;
    const RSolution& rs;
    bool weyl;
    int K;
    int n;
    int nv;
    std::vector<MomentumPolynomial> A, B;

    TraceBuilder(const ChartSpec& s, const RSolution& r, bool w, int k, int dim, int vars)
        : spec(s), rs(r), weyl(w), K(k), n(dim), nv(vars),
          A(size_t(dim), MomentumPolynomial(dim)), B(size_t(dim), MomentumPolynomial(dim)) {}

    MomentumPolynomial st(const MomentumPolynomial& x, const MomentumPolynomial& y) const {
        return weyl ? star_W(x, y, spec, rs, K) : star_S(x, y, spec, rs, K);
    }

    void commutator(const MomentumPolynomial& l, const MomentumPolynomial& g, int shift,
                    int sign) {
        if (l.is_zero() || g.is_zero() || shift + 1 > K) return;
        int deg = l.pdeg();
        if (deg <= 1) {
            base(l, g, shift, sign);
            return;
        }
        MKey key;
        RatFun c;
        for (const auto& [k, cc] : l.terms())
            if (exp_total(k.m) == deg) {
                key = k;
                c = cc;
                break;
            }
        MomentumPolynomial t = MomentumPolynomial::monomial(n, key, c);
        MomentumPolynomial rest = l - t;
        if (!rest.is_zero()) commutator(rest, g, shift, sign);
        int i = 0;
        while (key.m[size_t(i)] == 0) ++i;
        MomentumPolynomial X = MomentumPolynomial::p_var(n, nv, i);
        MKey skey = key;
        skey.m[size_t(i)]--;
        MomentumPolynomial S = MomentumPolynomial::monomial(n, skey, c);
        commutator(X, st(S, g), shift, sign);
        commutator(S, st(g, X), shift, sign);
        MomentumPolynomial corr = st(X, S) - t;
        for (int a = 1; a <= corr.max_lambda(); ++a) {
            MomentumPolynomial ca = corr.lambda_coeff(a);
            if (!ca.is_zero()) commutator(ca, g, shift + a, -sign);
        }
    }

    // l of momentum degree <= 1: the lambda^1 layer is i {l, g} in divergence
    // form; every higher layer of the commutator is a homogeneous operator of
    // negative degree acting on g and yields momentum-direction potentials.
    void base(const MomentumPolynomial& l, const MomentumPolynomial& g, int shift, int sign) {
        CRat iu = CRat(Rat(0), Rat(sign));
        for (int i = 0; i < n; ++i) {
            add(B, i, (l * g.partial_p(i)).scaled(iu), shift + 1);
            add(A, i, (l * g.partial_q(i)).scaled(-iu), shift + 1);
        }
        for (int d = 0; d <= 1; ++d) {
            MomentumPolynomial ld(n);
            for (const auto& [k, cc] : l.terms())
                if (exp_total(k.m) == d) ld.add_term(k, cc);
            if (ld.is_zero()) continue;
            for (int r = 2; r + shift <= K; ++r) {
                PhaseOp D = reconstruct_phase_op(
                    [&](const MomentumPolynomial& wmono) {
                        return star_layer(ld, wmono, r, spec, rs, weyl) -
                               star_layer(wmono, ld, r, spec, rs, weyl);
                    },
                    n, nv, r);
                if (D.terms.empty()) continue;
                for (int b = 0; r + b + shift <= K; ++b) {
                    MomentumPolynomial gb = g.lambda_coeff(b);
                    if (gb.is_zero()) continue;
                    DivergenceCertificate cert = homogeneous_divergence_form(D, r - d, gb);
                    for (int i = 0; i < n; ++i)
                        if (!cert.dp[size_t(i)].is_zero())
                            add(A, i, cert.dp[size_t(i)].scaled(CRat(Rat(sign))),
                                shift + r + b);
                }
            }
        }
    }

    void add(std::vector<MomentumPolynomial>& pots, int i, const MomentumPolynomial& v,
             int shift) {
        pots[size_t(i)] += v.lambda_scaled(shift).lambda_truncated(K);
    }
};

}  // namespace

DivergenceCertificate trace_certificate(const MomentumPolynomial& f, const MomentumPolynomial& g,
                                        const ChartSpec& spec, const RSolution& rs, int K,
                                        bool weyl) {
    if (K < 0) throw std::invalid_argument("trace certificate needs a finite lambda order");
    int n = f.n();
    TraceBuilder tb(spec, rs, weyl, K, n, coeff_nv(f, coeff_nv(g, spec.n)));
    for (int a = 0; a <= f.max_lambda(); ++a) {
        MomentumPolynomial fa = f.lambda_coeff(a);
        if (!fa.is_zero()) tb.commutator(fa, g, a, +1);
    }
    DivergenceCertificate cert;
    cert.target = (tb.st(f, g) - tb.st(g, f)).lambda_truncated(K);
    cert.dp = std::move(tb.A);
    cert.dq = std::move(tb.B);
    if (!cert.verify()) throw std::domain_error("trace certificate failed to verify");
    return cert;
}

}  // namespace costar
