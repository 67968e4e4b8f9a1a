#pragma once

// Integrand-level analysis on top of the homogeneous star products: GNS data
// for the density-induced state (witnesses, adjoint symmetry, the
// Schroedinger realization), time-reversal and affine point symmetries,
// closed-form symbol calculus on flat charts, and trace certificates for the
// star commutator.  Integrals over the chart never appear: every statement
// that classically reads "the integral of X vanishes" is produced here as an
// exact identity X = sum_i d_{p_i} A^i + sum_i d_{q^i} V^i, which yields the
// integral statement for any inputs that decay at the boundary.

#include "costar/star.hpp"

#include <optional>
#include <vector>

namespace costar {

// An exact divergence certificate: target = sum_i d_{p_i} dp[i]
// + sum_i d_{q^i} dq[i].  Constructions in this module always verify before
// returning, but verify() recomputes from scratch so callers never have to
// trust the construction path.
struct DivergenceCertificate {
    MomentumPolynomial target;
    std::vector<MomentumPolynomial> dp;  // empty or one potential per momentum
    std::vector<MomentumPolynomial> dq;  // empty or one potential per coordinate

    MomentumPolynomial divergence() const;
    bool verify() const;
};

// The positive linear functional induced by the chart density sends f to the
// integral of i*(Nf) against the density.  Its Gel'fand ideal is therefore
// cut out by the function i*(Nf) on the chart, recorded here as a witness.
struct GNSWitness {
    MomentumPolynomial f;
    MomentumPolynomial image;  // i*(Nf), a lambda-graded function of q
    bool in_gelfand_ideal() const { return image.is_zero(); }
};

GNSWitness gns_witness(const MomentumPolynomial& f, const ChartSpec& spec);

// Adjoint symmetry of the representations with respect to the density
// pairing <phi, psi> = integral of conj(phi) psi against the density.
// Returns the certificate
//   conj(rho(f) phi) psi m - conj(phi) (rho(f*) psi) m = sum_i d_{q^i} V^i
// where m is the density coefficient and the formal adjoint f* is
// N^2 conj(f) in standard ordering (weyl = false) and conj(f) in Weyl
// ordering (weyl = true).  Throws std::domain_error if the residual left
// after moving every derivative off conj(phi) fails to match the adjoint
// side, since that would falsify the operator symmetry itself.  Truncates
// target and potentials in lambda at K (K < 0 keeps everything).
DivergenceCertificate adjoint_certificate(const MomentumPolynomial& f, const RatFun& phi,
                                          const RatFun& psi, const ChartSpec& spec, int K,
                                          bool weyl);

// Identities of the density-induced state (the state evaluates h as the
// integral of i*(Nh) against the density, so products enter through
// N(f star_W g) = (Nf) star_S (Ng)).
//   n_shift:    (i*(Nf) - i*f) m                        = sum_i d_{q^i} V^i
//   w_product:  (i*(N(f star_W g)) - i*(N^{-1}f) i*(Ng)) m = sum_i d_{q^i} V^i
//   positivity: the w_product integrand for the pair (conj(f), f) collapses
//               to conj(h) h with h = i*(Nf) -- a manifest square, so the
//               state is formally positive.  positivity_integrand holds the
//               verified product.
struct OmegaCertificates {
    DivergenceCertificate n_shift;
    DivergenceCertificate w_product;
    MomentumPolynomial positivity_h;          // h = i*(Nf)
    MomentumPolynomial positivity_integrand;  // conj(h) h
};

OmegaCertificates omega_identities(const MomentumPolynomial& f, const MomentumPolynomial& g,
                                   const ChartSpec& spec, const RSolution& rs, int K);

// The GNS representation of the density state, realized on functions of q:
// residual of i*N(f star_W pi*chi) - rho_W(f) chi, identically zero.  The
// result is exact; K >= 0 additionally truncates in lambda.
MomentumPolynomial gns_schroedinger_check(const MomentumPolynomial& f, const RatFun& chi,
                                          const ChartSpec& spec, const RSolution& rs, int K);

// Time reversal: the pullback of (q, p) -> (q, -p).
MomentumPolynomial time_reversal_apply(const MomentumPolynomial& f);

// Residual of A_T(f star_W g) - (A_T g) star_W (A_T f); identically zero, so
// time reversal is an anti-automorphism of the Weyl-ordered product.
MomentumPolynomial time_reversal_check(const MomentumPolynomial& f, const MomentumPolynomial& g,
                                       const ChartSpec& spec, const RSolution& rs, int K);

// Operator residual of rho_W(A_T f) - conj . rho_W(conj f) . conj: on the
// representation space time reversal acts by plain complex conjugation.
DiffOpQ time_reversal_gns(const MomentumPolynomial& f, const ChartSpec& spec);

// Invertible affine chart map q^i -> sum_j M[i][j] q^j + c[i].
struct AffineMap {
    int n = 0;
    std::vector<std::vector<Rat>> M;
    std::vector<Rat> c;

    static AffineMap identity(int n);
    static AffineMap translation(int n, const std::vector<Rat>& shift);
    static AffineMap linear(int n, const std::vector<std::vector<Rat>>& M);

    Rat det() const;
    AffineMap inverse() const;  // throws std::invalid_argument if singular
};

// h(phi(q)): substitute the affine images into a function of q.
RatFun affine_pullback(const RatFun& h, const AffineMap& phi);

// The cotangent lift acts on phase-space functions by
// (A_phi f)(q, p) = f(phi(q), M^{-T} p); it is the pullback of the canonical
// point transformation covering phi.
MomentumPolynomial cotangent_pullback(const MomentumPolynomial& f, const AffineMap& phi);

// Conjugate of a coordinate differential operator by the pullback unitary
// (U_phi chi)(q) = chi(phi(q)): the result sends chi to (D(chi . phi^{-1}))
// composed with phi, so multiplication by u becomes multiplication by
// u . phi, matching the cotangent pullback of the symbol.
DiffOpQ conjugate_by_pullback(const DiffOpQ& D, const AffineMap& phi);

// Invariance residuals of the chart data under phi; the map preserves the
// connection / the one-form alpha / the density exactly when every entry is
// zero.
std::vector<RatFun> connection_invariance_residuals(const AffineMap& phi, const ChartSpec& spec);
std::vector<RatFun> alpha_invariance_residuals(const AffineMap& phi, const ChartSpec& spec);
RatFun density_invariance_residual(const AffineMap& phi, const ChartSpec& spec);

// Automorphism checks for a connection-preserving affine map.
//   star_s_residual: A_phi(f star_S g) - (A_phi f) star_S (A_phi g), always
//     produced; identically zero.
//   star_w_residual: same for star_W; produced when alpha is invariant.
//   gns_residual:    rho_W(A_phi f) - U_phi^{-1} rho_W(f) U_phi; produced
//     when the density (hence also alpha) is invariant.
// Throws std::invalid_argument naming the first failing residual if the
// connection is not invariant under phi.
struct DiffeoCheck {
    MomentumPolynomial star_s_residual;
    std::optional<MomentumPolynomial> star_w_residual;
    std::optional<DiffOpQ> gns_residual;
};

DiffeoCheck diffeo_automorphism_check(const AffineMap& phi, const MomentumPolynomial& f,
                                      const MomentumPolynomial& g, const ChartSpec& spec,
                                      const RSolution& rs, int K);

// Symbol calculus on a flat chart (all Christoffel symbols zero; throws
// std::invalid_argument otherwise).  standard_residual compares the closed
// derivative form
//   sum over index multisets of (lambda/i)^k T^{i_1..i_k}/(k-multiplicities!)
//   d^k phi / dq^{i_1}..dq^{i_k}
// with rho_S(hat T) phi; it is identically zero.  weyl_kernel certifies that
// the symmetrized bilinear kernel
//   (lambda/2i)^k (1/k!) T^{i_1..i_k} sum_r (-1)^r C(k,r)
//   d^r conj(phi) d^{k-r} psi
// times the density differs from conj(phi) (rho_W(hat T) psi) times the
// density by an exact q-divergence, so both define the same matrix elements.
struct SymbolCalculusCheck {
    MomentumPolynomial standard_residual;
    DivergenceCertificate weyl_kernel;
};

SymbolCalculusCheck symbol_calculus_check(const SymTensor& T, const RatFun& phi,
                                          const RatFun& psi, const ChartSpec& spec);

// For a phase-space differential operator D that is homogeneous of degree -r
// (r >= 1) with respect to the fibre Euler operator -- termwise, the
// coefficient of d_{p_I} d_{q^K} must be homogeneous in p of degree |I| - r
// -- rewrite D(g) as a pure momentum divergence sum_i d_{p_i} A^i by
// repeatedly peeling one momentum derivative.  Throws std::invalid_argument
// if D is not homogeneous of that degree.
DivergenceCertificate homogeneous_divergence_form(const PhaseOp& D, int r,
                                                  const MomentumPolynomial& g);

// Trace certificate: writes f star g - g star f, through lambda order K, as
// sum_i d_{p_i} A^i + sum_i d_{q^i} B^i.  The lambda^1 layer uses the
// divergence form of the Poisson bracket,
//   {u, v} = d_{q^i}(u d_{p_i} v) - d_{p_i}(u d_{q^i} v),
// higher layers of commutators with functions at most linear in p use
// homogeneous_divergence_form on the reconstructed bidifferential layers, and
// general f is reduced to those cases through the product identity
// [u star v, g] = [u, v star g] + [v, g star u].  The certificate is verified
// before returning; failure throws std::domain_error.
DivergenceCertificate trace_certificate(const MomentumPolynomial& f, const MomentumPolynomial& g,
                                        const ChartSpec& spec, const RSolution& rs, int K,
                                        bool weyl);

}  // namespace costar
