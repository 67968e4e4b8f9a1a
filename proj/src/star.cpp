#include "costar/star.hpp"

#include <stdexcept>

namespace costar {

namespace {

bool exp_le(const Exp& a, const Exp& b) {
    for (size_t i = 0; i < a.size(); ++i)
        if (a[i] > b[i]) return false;
    return true;
}

Rat multiset_factorial(const Exp& m) {
    Rat f(1);
    for (uint16_t mi : m)
        for (int j = 2; j <= mi; ++j) f *= Rat(j);
    return f;
}

// prod_i a_i (a_i - 1) ... (a_i - b_i + 1)
Rat falling_product(const Exp& a, const Exp& b) {
    Rat f(1);
    for (size_t i = 0; i < a.size(); ++i)
        for (int j = 0; j < b[i]; ++j) f *= Rat(a[i] - j);
    return f;
}

}  // namespace

FedosovElement embed_fiber(const MomentumPolynomial& f) {
    int n = f.n();
    FedosovElement F(n);
    for (auto& [k, c] : f.terms())
        F.add_term(FKey{Exp(size_t(n), 0), k.m, 0, k.e}, c);
    return F;
}

MomentumPolynomial extract_fiber(const FedosovElement& F) {
    MomentumPolynomial f(F.n());
    for (auto& [k, c] : F.terms()) {
        if (exp_total(k.s) != 0 || k.a != 0)
            throw std::invalid_argument("extract_fiber: element has symbol factors");
        f.add_term(MKey{k.d, k.e}, c);
    }
    return f;
}

FedosovElement tau_S(const MomentumPolynomial& T, const RSolution& rs, const ChartSpec& spec,
                     int W) {
    if (rs.deg < W + 1)
        throw std::invalid_argument("tau_S: r_S solved to insufficient degree");
    int n = spec.n;
    FedosovElement out(n);
    for (int e = 0; e <= T.max_lambda(); ++e) {
        MomentumPolynomial Te = T.lambda_coeff(e);
        if (Te.is_zero()) continue;
        std::vector<FedosovElement> g(size_t(W) + 1, FedosovElement(n));
        g[0] = embed_fiber(Te);
        for (int k = 0; k + 1 <= W; ++k) {
            FedosovElement x = nabla(g[size_t(k)], spec);
            FedosovElement ad(n);
            for (int t = 1; t <= k; ++t) {
                FedosovElement rt = rs.r.deg_component(t + 2);
                if (rt.is_zero()) continue;
                ad += graded_commutator(rt, g[size_t(k - t)]);
            }
            if (!ad.is_zero()) x += i_over_lambda(ad);
            g[size_t(k) + 1] = delta_inv(x);
        }
        FedosovElement full(n);
        for (auto& ge : g) full += ge;
        out += full.lambda_scaled(e);
    }
    return out;
}

MomentumPolynomial sigma_circ(const FedosovElement& F, const FedosovElement& G) {
    // Only F-terms without symbol factors and G-terms whose entire symmetric
    // part is consumed by the pairing survive the projection; everything else
    // ends up with leftover symmetric or exterior degree.
    MomentumPolynomial out(F.n() ? F.n() : G.n());
    for (auto& [kf, cf] : F.terms()) {
        if (exp_total(kf.s) != 0 || kf.a != 0) continue;
        for (auto& [kg, cg] : G.terms()) {
            if (kg.a != 0) continue;
            if (!exp_le(kg.s, kf.d)) continue;
            int v = exp_total(kg.s);
            Rat w = falling_product(kf.d, kg.s);
            Exp m = kf.d;
            for (size_t i = 0; i < m.size(); ++i) m[i] = uint16_t(m[i] - kg.s[i] + kg.d[i]);
            out.add_term(MKey{m, kf.e + kg.e + v}, (cf * cg).scaled(inv_i_pow(v) * CRat(w)));
        }
    }
    return out;
}

MomentumPolynomial star_S(const MomentumPolynomial& f, const MomentumPolynomial& g,
                          const ChartSpec& spec, const RSolution& rs, int K) {
    MomentumPolynomial out(spec.n);
    if (f.is_zero() || g.is_zero()) return out;
    int W = f.pdeg() + g.pdeg();
    out = sigma_circ(tau_S(f, rs, spec, W), tau_S(g, rs, spec, W));
    if (K >= 0) out = out.lambda_truncated(K);
    return out;
}

MomentumPolynomial star_W(const MomentumPolynomial& f, const MomentumPolynomial& g,
                          const ChartSpec& spec, const RSolution& rs, int K) {
    MomentumPolynomial out =
        N_apply(star_S(N_apply(f, spec), N_apply(g, spec), spec, rs), spec, -1);
    if (K >= 0) out = out.lambda_truncated(K);
    return out;
}

namespace {

using CovOps = std::map<Exp, DiffOpQ, LexLess>;

// One application of the derivation y^l nabla_l to a y-graded family of
// operators (the operator version of the iterated covariant differential).
CovOps cov_ops_step(const CovOps& cur, const ChartSpec& spec) {
    int n = spec.n;
    int nv = spec.vars.nv();
    CovOps next;
    auto acc = [&next](const Exp& m, const DiffOpQ& op) {
        if (op.is_zero()) return;
        auto [it, fresh] = next.try_emplace(m, op);
        if (!fresh) it->second += op;
    };
    for (auto& [M, op] : cur)
        for (int l = 0; l < n; ++l) {
            Exp up = M;
            up[size_t(l)]++;
            acc(up, compose(DiffOpQ::partial(n, nv, l), op));
            for (int i = 0; i < n; ++i) {
                if (M[size_t(i)] == 0) continue;
                for (int k = 0; k < n; ++k) {
                    const RatFun& gam = spec.gamma_at(i, l, k);
                    if (gam.is_zero()) continue;
                    Exp m2 = up;
                    m2[size_t(i)]--;
                    m2[size_t(k)]++;
                    acc(m2, op.fun_scaled(gam.scaled(CRat(Rat(-M[size_t(i)])))));
                }
            }
        }
    for (auto it = next.begin(); it != next.end();)
        it = it->second.is_zero() ? next.erase(it) : std::next(it);
    return next;
}

}  // namespace

DiffOpQ rho_S(const MomentumPolynomial& f, const ChartSpec& spec) {
    int n = spec.n;
    int nv = spec.vars.nv();
    DiffOpQ out(n);
    int P = f.pdeg();
    CovOps cur{{Exp(size_t(n), 0), DiffOpQ::identity(n, nv)}};
    Rat rfact(1);
    for (int r = 0; r <= P; ++r) {
        if (r > 0) rfact *= Rat(r);
        for (auto& [M, op] : cur) {
            MomentumPolynomial dpf = f;
            for (int i = 0; i < n; ++i)
                for (int j = 0; j < M[size_t(i)]; ++j) dpf = dpf.partial_p(i);
            MomentumPolynomial ev = dpf.i_star();
            if (ev.is_zero()) continue;
            CRat scale = inv_i_pow(r) * CRat(Rat(1) / rfact);
            for (auto& [ke, ce] : ev.terms())
                out += op.fun_scaled(ce).lambda_scaled(ke.e + r).scaled(scale);
        }
        if (r < P) cur = cov_ops_step(cur, spec);
    }
    return out;
}

DiffOpQ rho_W(const MomentumPolynomial& f, const ChartSpec& spec) {
    return rho_S(N_apply(f, spec), spec);
}

MomentumPolynomial rho_fiber_apply(const MomentumPolynomial& T, const MomentumPolynomial& psi,
                                   const RSolution& rs, const ChartSpec& spec) {
    if (psi.pdeg() > 0)
        throw std::invalid_argument("rho_fiber_apply: the state must be a function of q");
    int W = std::max(T.pdeg(), 0);
    FedosovElement tT = tau_S(T, rs, spec, W);
    FedosovElement tP = tau_S(psi, rs, spec, W);
    return sigma_circ(tT, tP).i_star();
}

MomentumPolynomial star_layer(const MomentumPolynomial& f, const MomentumPolynomial& g, int r,
                              const ChartSpec& spec, const RSolution& rs, bool weyl) {
    if (f.max_lambda() > 0 || g.max_lambda() > 0)
        throw std::invalid_argument("star_layer expects lambda-free arguments");
    MomentumPolynomial prod = weyl ? star_W(f, g, spec, rs) : star_S(f, g, spec, rs);
    return prod.lambda_coeff(r);
}

MomentumPolynomial phase_monomial(int n, int nv, const Exp& alpha) {
    Exp qe(size_t(nv), 0);
    for (int i = 0; i < n; ++i) qe[size_t(i)] = alpha[size_t(i)];
    Exp pe(alpha.begin() + n, alpha.end());
    return MomentumPolynomial::monomial(n, MKey{pe, 0},
                                        RatFun(Poly::monomial(nv, qe, CRat(1))));
}

MomentumPolynomial phase_op_apply(const PhaseOp& op, const MomentumPolynomial& f) {
    int n = op.n;
    MomentumPolynomial out(n);
    for (auto& [key, coef] : op.terms) {
        MomentumPolynomial d = f;
        for (int i = 0; i < n && !d.is_zero(); ++i)
            for (int j = 0; j < key[size_t(i)]; ++j) d = d.partial_q(i);
        for (int i = 0; i < n && !d.is_zero(); ++i)
            for (int j = 0; j < key[size_t(n + i)]; ++j) d = d.partial_p(i);
        if (!d.is_zero()) out += coef * d;
    }
    return out;
}

PhaseOp reconstruct_phase_op(
    const std::function<MomentumPolynomial(const MomentumPolynomial&)>& L, int n, int nv,
    int max_order) {
    PhaseOp op;
    op.n = n;
    size_t slots = size_t(2 * n);
    // All multi-indices of total degree d, for d = 0..max_order, so every
    // componentwise-smaller index is already resolved when alpha is reached.
    for (int d = 0; d <= max_order; ++d) {
        Exp alpha(slots, 0);
        while (true) {
            if (exp_total(alpha) == d) {
                MomentumPolynomial residual = L(phase_monomial(n, nv, alpha));
                for (auto& [beta, coef] : op.terms) {
                    if (!exp_le(beta, alpha)) continue;
                    Exp rest = alpha;
                    for (size_t i = 0; i < slots; ++i) rest[i] = uint16_t(rest[i] - beta[i]);
                    residual -= (coef * phase_monomial(n, nv, rest))
                                    .scaled(CRat(falling_product(alpha, beta)));
                }
                if (!residual.is_zero())
                    op.terms.emplace(alpha,
                                     residual.scaled(CRat(Rat(1) / multiset_factorial(alpha))));
            }
            size_t pos = 0;
            while (pos < slots) {
                if (alpha[pos] < uint16_t(d)) {
                    alpha[pos]++;
                    break;
                }
                alpha[pos] = 0;
                pos++;
            }
            if (pos == slots) break;
        }
    }
    return op;
}

}  // namespace costar
