#pragma once

#include "costar/fedosov.hpp"
#include "costar/mompoly.hpp"

#include <functional>

namespace costar {

// Identify p-monomials with dual-symmetric fibre monomials: p^m lambda^e with
// coefficient c(q) <-> c(q) z^m lambda^e.  extract_fiber requires every term
// to be free of symmetric and exterior factors.
FedosovElement embed_fiber(const MomentumPolynomial& f);
MomentumPolynomial extract_fiber(const FedosovElement& F);

// Fedosov-Taylor series of T: the unique flat section with sigma(tau_S(T)) =
// T, computed grade by grade where the grade of a term is deg_s + deg_lambda
// (the input sits at grade 0).  Complete through grade W; each grade is
// exact.  Requires rs.deg >= W + 1.
FedosovElement tau_S(const MomentumPolynomial& T, const RSolution& rs, const ChartSpec& spec,
                     int W);

// sigma(F circ_S G) pushed back to a momentum polynomial, computed without
// materializing the parts of the fibre product that sigma discards.
MomentumPolynomial sigma_circ(const FedosovElement& F, const FedosovElement& G);

// The standard-ordered product.  Exact: the Taylor grade is driven to
// pdeg(f) + pdeg(g), past which homogeneity makes every contribution vanish.
// K >= 0 truncates the result in lambda (a pure output trim); K < 0 keeps
// everything.
MomentumPolynomial star_S(const MomentumPolynomial& f, const MomentumPolynomial& g,
                          const ChartSpec& spec, const RSolution& rs, int K = -1);

// The Weyl-ordered product N^{-1}((Nf) star_S (Ng)).
MomentumPolynomial star_W(const MomentumPolynomial& f, const MomentumPolynomial& g,
                          const ChartSpec& spec, const RSolution& rs, int K = -1);

// The standard-ordered representation on functions of q, assembled as an
// explicit differential operator: rho_S(f) psi = sum_m (lambda/i)^{|m|}
// i*(d_p^m f) T_m(psi) / prod m_i! where T_m are the components of the
// normalized iterated covariant differentials (1/r!) D^r.  Exact and finite.
DiffOpQ rho_S(const MomentumPolynomial& f, const ChartSpec& spec);

// Weyl-ordered representation rho_W(f) = rho_S(Nf).
DiffOpQ rho_W(const MomentumPolynomial& f, const ChartSpec& spec);

// Independent route to rho_S(T) psi through the fibrewise representation:
// project the fibre product of the Taylor series of T and psi to symbol
// degree zero.  Must agree with rho_S(T).apply(psi).
MomentumPolynomial rho_fiber_apply(const MomentumPolynomial& T, const MomentumPolynomial& psi,
                                   const RSolution& rs, const ChartSpec& spec);

// lambda^r bidifferential layer of the product: f star g = sum_r lambda^r
// C_r(f, g) for lambda-free f, g.
MomentumPolynomial star_layer(const MomentumPolynomial& f, const MomentumPolynomial& g, int r,
                              const ChartSpec& spec, const RSolution& rs, bool weyl);

// A differential operator in the 2n phase-space variables with momentum-
// polynomial coefficients; the key holds the q-derivative multiset followed
// by the p-derivative multiset.
struct PhaseOp {
    int n = 0;
    std::map<Exp, MomentumPolynomial, LexLess> terms;  // key length 2n
};

MomentumPolynomial phase_op_apply(const PhaseOp& op, const MomentumPolynomial& f);

// Triangular reconstruction of a linear map on momentum polynomials as a
// phase-space differential operator of order <= max_order, from its values
// on the monomials q^a p^b.  The caller checks validity by re-applying the
// result to inputs outside the spanning family.
PhaseOp reconstruct_phase_op(
    const std::function<MomentumPolynomial(const MomentumPolynomial&)>& L, int n, int nv,
    int max_order);

// Phase-space monomial q^a p^b from a combined multi-index (length 2n).
MomentumPolynomial phase_monomial(int n, int nv, const Exp& alpha);

}  // namespace costar
