#pragma once

// Geometry of a single configuration chart: a torsion-free connection given by
// its Christoffel symbols, an optional metric with its Levi-Civita derivation,
// an optional positive density with its induced one-form, curvature, the
// symmetric covariant derivative, and the classical Riemannian oracles
// (Laplace-Beltrami, metric divergence) used to cross-check the operator
// calculus built on top.

#include <optional>
#include <string>
#include <vector>

#include "costar/poly.hpp"
#include "costar/ratfun.hpp"
#include "costar/vars.hpp"

namespace costar {

struct CurvatureTensor;

struct ChartSpec {
    int n = 0;
    VarTable vars;                           // q1..qn
    std::vector<RatFun> gamma;               // [k][i][j], n^3 entries, symmetric in (i,j)
    std::optional<std::vector<RatFun>> metric;   // [i][j], n^2 entries, symmetric
    std::optional<std::vector<RatFun>> alpha;    // [j], n entries
    std::optional<RatFun> density;           // chart coefficient m of the density

    const RatFun& gamma_at(int k, int i, int j) const { return gamma[(k * n + i) * n + j]; }
    RatFun& gamma_at(int k, int i, int j) { return gamma[(k * n + i) * n + j]; }
    const RatFun& g_at(int i, int j) const { return (*metric)[i * n + j]; }

    bool has_metric() const { return metric.has_value(); }

    // The one-form entering the Weyl-layer operators: alpha if given, else
    // derived from the density.  Throws if neither is available.
    std::vector<RatFun> effective_alpha() const;

    // The density, required by trace and representation-theoretic integrands.
    const RatFun& density_or_throw() const;

    // Full consistency check; throws std::domain_error describing the first
    // violated identity.  Called by the loaders.
    void validate() const;
};

struct CurvatureTensor {
    int n = 0;
    std::vector<RatFun> R;  // [l][k][i][j], n^4 entries

    const RatFun& at(int l, int k, int i, int j) const {
        return R[((l * n + k) * n + i) * n + j];
    }
    RatFun& at(int l, int k, int i, int j) { return R[((l * n + k) * n + i) * n + j]; }

    // tr R(e_i, e_j) = R^l_{l i j}
    RatFun trace(int i, int j) const;
};

// Fully symmetric covariant tensor of a fixed degree, indexed by multisets of
// coordinate indices (an exponent vector M with |M| = degree).  Missing
// components are zero.
struct SymCovTensor {
    int n = 0;
    int degree = 0;
    std::map<Exp, RatFun, LexLess> comps;

    RatFun component(const Exp& m) const;
};

// R^l_{kij} = d_i Gamma^l_{jk} - d_j Gamma^l_{ik}
//           + Gamma^l_{im} Gamma^m_{jk} - Gamma^l_{jm} Gamma^m_{ik}
CurvatureTensor curvature(const ChartSpec& spec);

// Christoffel symbols of the metric; checks nabla g = 0 before returning.
std::vector<RatFun> levi_civita(const ChartSpec& spec);

// alpha_j = (d_j m)/m - Gamma^i_{ij}
std::vector<RatFun> alpha_from_density(const ChartSpec& spec);

// Residuals tr R(e_i,e_j) + (d alpha)(e_i,e_j), one per pair i<j; all must be
// zero for consistent chart data.
std::vector<RatFun> check_alpha(const ChartSpec& spec);

// r-fold symmetric covariant derivative of a function on the chart,
// D = dq^k v nabla_k.  In a flat chart this is the symmetrized tensor of
// r-th partials.
SymCovTensor sym_cov_pow(const RatFun& psi, int r, const ChartSpec& spec);

// Independent Riemannian oracles (never used by the star-product pipeline).
RatFun laplace_beltrami(const RatFun& psi, const ChartSpec& spec);
RatFun divergence(const std::vector<RatFun>& X, const ChartSpec& spec);

// det g, its exact square root, and the inverse metric.
RatFun metric_det(const ChartSpec& spec);
RatFun sqrt_det_metric(const ChartSpec& spec);
std::vector<RatFun> metric_inverse(const ChartSpec& spec);

// Sectional curvature of the coordinate plane (i,j), via the metric:
// K = g_{l i} R^l_{j i j} / (g_ii g_jj - g_ij^2).
RatFun sectional_curvature(const ChartSpec& spec, int i, int j);

// Loaders.  Chart files are JSON: { "dim": n, "gamma": {"k;i,j": expr},
// "metric": {"i,j": expr}?, "alpha": [expr]?, "density": expr? } with 1-based
// indices; omitted gamma/metric entries are zero.  Validates on load.
ChartSpec chart_from_json_text(const std::string& text);
ChartSpec load_chart(const std::string& path);

}  // namespace costar
