#include "costar/chart.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

#include "costar/scalar_io.hpp"

namespace costar {

namespace {

RatFun lift(const RatFun& f, int nv) { return f.nv() == nv ? f : f.extended(nv); }

// Solve the n x n system over the rational-function field by Gauss-Jordan
// elimination; returns the inverse.  Throws on a singular matrix.
std::vector<RatFun> invert_matrix(const std::vector<RatFun>& a, int n) {
    std::vector<RatFun> m = a;
    int nv = a.at(0).nv();
    std::vector<RatFun> inv(n * n, RatFun(nv));
    for (int i = 0; i < n; ++i) inv[i * n + i] = RatFun::constant(nv, CRat(1));

    for (int col = 0; col < n; ++col) {
        int piv = -1;
        for (int r = col; r < n; ++r)
            if (!m[r * n + col].is_zero()) { piv = r; break; }
        if (piv < 0) throw std::domain_error("singular metric");
        if (piv != col)
            for (int c = 0; c < n; ++c) {
                std::swap(m[piv * n + c], m[col * n + c]);
                std::swap(inv[piv * n + c], inv[col * n + c]);
            }
        RatFun d = m[col * n + col].inv();
        for (int c = 0; c < n; ++c) {
            m[col * n + c] = m[col * n + c] * d;
            inv[col * n + c] = inv[col * n + c] * d;
        }
        for (int r = 0; r < n; ++r) {
            if (r == col || m[r * n + col].is_zero()) continue;
            RatFun f = m[r * n + col];
            for (int c = 0; c < n; ++c) {
                m[r * n + c] = m[r * n + c] - f * m[col * n + c];
                inv[r * n + c] = inv[r * n + c] - f * inv[col * n + c];
            }
        }
    }
    return inv;
}

Rat multiset_factorial(const Exp& m) {
    Rat f(1);
    for (uint16_t e : m)
        for (uint16_t k = 2; k <= e; ++k) f *= k;
    return f;
}

Rat factorial(int r) {
    Rat f(1);
    for (int k = 2; k <= r; ++k) f *= k;
    return f;
}

}  // namespace

std::vector<RatFun> ChartSpec::effective_alpha() const {
    if (alpha) return *alpha;
    if (density) return alpha_from_density(*this);
    throw std::domain_error("chart provides neither alpha nor a density");
}

const RatFun& ChartSpec::density_or_throw() const {
    if (!density) throw std::domain_error("chart provides no density");
    return *density;
}

RatFun CurvatureTensor::trace(int i, int j) const {
    RatFun t(R.at(0).nv());
    for (int l = 0; l < n; ++l) t = t + at(l, l, i, j);
    return t;
}

RatFun SymCovTensor::component(const Exp& m) const {
    auto it = comps.find(m);
    return it == comps.end() ? RatFun(n) : it->second;
}

CurvatureTensor curvature(const ChartSpec& spec) {
    int n = spec.n;
    CurvatureTensor R;
    R.n = n;
    R.R.assign(n * n * n * n, RatFun(n));
    for (int l = 0; l < n; ++l)
        for (int k = 0; k < n; ++k)
            for (int i = 0; i < n; ++i)
                for (int j = i + 1; j < n; ++j) {
                    RatFun v = spec.gamma_at(l, j, k).partial(i) - spec.gamma_at(l, i, k).partial(j);
                    for (int m = 0; m < n; ++m)
                        v = v + spec.gamma_at(l, i, m) * spec.gamma_at(m, j, k)
                              - spec.gamma_at(l, j, m) * spec.gamma_at(m, i, k);
                    R.at(l, k, i, j) = v;
                    R.at(l, k, j, i) = -v;
                }
    return R;
}

std::vector<RatFun> levi_civita(const ChartSpec& spec) {
    if (!spec.metric) throw std::domain_error("levi_civita needs a metric");
    int n = spec.n;
    std::vector<RatFun> ginv = metric_inverse(spec);
    std::vector<RatFun> gamma(n * n * n, RatFun(n));
    for (int k = 0; k < n; ++k)
        for (int i = 0; i < n; ++i)
            for (int j = i; j < n; ++j) {
                RatFun v(n);
                for (int l = 0; l < n; ++l)
                    v = v + ginv[k * n + l] * (spec.g_at(j, l).partial(i) + spec.g_at(i, l).partial(j) -
                                               spec.g_at(i, j).partial(l));
                v = v.scaled(CRat(Rat(1, 2)));
                gamma[(k * n + i) * n + j] = v;
                gamma[(k * n + j) * n + i] = v;
            }

    // Metric compatibility is a theorem here, but it is cheap insurance
    // against sign slips in the formula above: nabla g must vanish.
    for (int k = 0; k < n; ++k)
        for (int i = 0; i < n; ++i)
            for (int j = i; j < n; ++j) {
                RatFun v = spec.g_at(i, j).partial(k);
                for (int m = 0; m < n; ++m)
                    v = v - gamma[(m * n + k) * n + i] * spec.g_at(m, j)
                          - gamma[(m * n + k) * n + j] * spec.g_at(i, m);
                if (!v.is_zero()) throw std::domain_error("levi_civita: nabla g != 0");
            }
    return gamma;
}

std::vector<RatFun> alpha_from_density(const ChartSpec& spec) {
    const RatFun& m = spec.density_or_throw();
    int n = spec.n;
    std::vector<RatFun> a(n, RatFun(n));
    RatFun minv = m.inv();
    for (int j = 0; j < n; ++j) {
        RatFun v = m.partial(j) * minv;
        for (int i = 0; i < n; ++i) v = v - spec.gamma_at(i, i, j);
        a[j] = v;
    }
    return a;
}

std::vector<RatFun> check_alpha(const ChartSpec& spec) {
    if (!spec.alpha) throw std::domain_error("check_alpha needs alpha");
    int n = spec.n;
    CurvatureTensor R = curvature(spec);
    std::vector<RatFun> res;
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j) {
            RatFun dalpha = (*spec.alpha)[j].partial(i) - (*spec.alpha)[i].partial(j);
            res.push_back(R.trace(i, j) + dalpha);
        }
    return res;
}

SymCovTensor sym_cov_pow(const RatFun& psi, int r, const ChartSpec& spec) {
    if (r < 0) throw std::invalid_argument("sym_cov_pow: negative degree");
    int n = spec.n;
    int nv = psi.nv();

    // Work with the generating-polynomial coefficients c_M of
    // u = sum_M c_M y^M, on which D acts as the derivation
    // y_l * (coefficient d_l  +  y_i -> -Gamma^i_{lk} y_k).
    // The tensor components are then T_M = (M! / r!) c_M.
    std::map<Exp, RatFun, LexLess> c;
    c.emplace(Exp(n, 0), psi);
    for (int step = 0; step < r; ++step) {
        std::map<Exp, RatFun, LexLess> next;
        auto add = [&](const Exp& m, const RatFun& v) {
            auto [it, fresh] = next.emplace(m, v);
            if (!fresh) it->second = it->second + v;
        };
        for (auto& [m, coef] : c) {
            for (int l = 0; l < n; ++l) {
                Exp ml = m;
                ml[l]++;
                RatFun dc = coef.partial(l);
                if (!dc.is_zero()) add(ml, dc);
                for (int i = 0; i < n; ++i) {
                    if (m[i] == 0) continue;
                    for (int k = 0; k < n; ++k) {
                        const RatFun& gam = spec.gamma_at(i, l, k);
                        if (gam.is_zero()) continue;
                        Exp m2 = ml;
                        m2[i]--;
                        m2[k]++;
                        add(m2, (lift(gam, nv) * coef).scaled(CRat(-Rat(m[i]))));
                    }
                }
            }
        }
        c = std::move(next);
    }

    SymCovTensor t;
    t.n = n;
    t.degree = r;
    Rat rf = factorial(r);
    for (auto& [m, coef] : c) {
        if (coef.is_zero()) continue;
        t.comps.emplace(m, coef.scaled(CRat(multiset_factorial(m) / rf)));
    }
    return t;
}

RatFun metric_det(const ChartSpec& spec) {
    if (!spec.metric) throw std::domain_error("no metric");
    int n = spec.n;
    // Elimination determinant; n stays small here.
    std::vector<RatFun> m = *spec.metric;
    RatFun det = RatFun::constant(m.at(0).nv(), CRat(1));
    for (int col = 0; col < n; ++col) {
        int piv = -1;
        for (int r = col; r < n; ++r)
            if (!m[r * n + col].is_zero()) { piv = r; break; }
        if (piv < 0) return RatFun(m.at(0).nv());
        if (piv != col) {
            for (int c = 0; c < n; ++c) std::swap(m[piv * n + c], m[col * n + c]);
            det = -det;
        }
        det = det * m[col * n + col];
        RatFun d = m[col * n + col].inv();
        for (int r = col + 1; r < n; ++r) {
            if (m[r * n + col].is_zero()) continue;
            RatFun f = m[r * n + col] * d;
            for (int c = col; c < n; ++c) m[r * n + c] = m[r * n + c] - f * m[col * n + c];
        }
    }
    return det;
}

RatFun sqrt_det_metric(const ChartSpec& spec) {
    RatFun det = metric_det(spec);
    try {
        return det.sqrt_exact();
    } catch (const std::domain_error&) {
        throw std::domain_error("det g is not the square of a rational function");
    }
}

std::vector<RatFun> metric_inverse(const ChartSpec& spec) {
    if (!spec.metric) throw std::domain_error("no metric");
    return invert_matrix(*spec.metric, spec.n);
}

RatFun laplace_beltrami(const RatFun& psi, const ChartSpec& spec) {
    int n = spec.n;
    int nv = psi.nv();
    RatFun sg = lift(sqrt_det_metric(spec), nv);
    std::vector<RatFun> ginv = metric_inverse(spec);
    RatFun acc(nv);
    for (int i = 0; i < n; ++i) {
        RatFun flux(nv);
        for (int j = 0; j < n; ++j) flux = flux + sg * lift(ginv[i * n + j], nv) * psi.partial(j);
        acc = acc + flux.partial(i);
    }
    return acc * sg.inv();
}

RatFun divergence(const std::vector<RatFun>& X, const ChartSpec& spec) {
    int n = spec.n;
    if ((int)X.size() != n) throw std::invalid_argument("divergence: wrong component count");
    int nv = X.at(0).nv();
    RatFun sg = lift(sqrt_det_metric(spec), nv);
    RatFun acc(nv);
    for (int i = 0; i < n; ++i) acc = acc + (sg * X[i]).partial(i);
    return acc * sg.inv();
}

RatFun sectional_curvature(const ChartSpec& spec, int i, int j) {
    if (!spec.metric) throw std::domain_error("no metric");
    CurvatureTensor R = curvature(spec);
    int n = spec.n;
    RatFun num(n);
    for (int l = 0; l < n; ++l) num = num + spec.g_at(l, i) * R.at(l, j, i, j);
    RatFun den = spec.g_at(i, i) * spec.g_at(j, j) - spec.g_at(i, j) * spec.g_at(i, j);
    return num * den.inv();
}

void ChartSpec::validate() const {
    int nn = n;
    if (nn <= 0) throw std::domain_error("chart dimension must be positive");
    if ((int)gamma.size() != nn * nn * nn) throw std::domain_error("gamma has wrong shape");

    for (int k = 0; k < nn; ++k)
        for (int i = 0; i < nn; ++i)
            for (int j = i + 1; j < nn; ++j)
                if (!(gamma_at(k, i, j) == gamma_at(k, j, i)))
                    throw std::domain_error("gamma is not symmetric in its lower indices");

    if (metric) {
        if ((int)metric->size() != nn * nn) throw std::domain_error("metric has wrong shape");
        for (int i = 0; i < nn; ++i)
            for (int j = i + 1; j < nn; ++j)
                if (!(g_at(i, j) == g_at(j, i))) throw std::domain_error("metric is not symmetric");
        if (metric_det(*this).is_zero()) throw std::domain_error("metric is singular");
    }
    if (alpha && (int)alpha->size() != nn) throw std::domain_error("alpha has wrong shape");

    // Curvature antisymmetry is built into the computation; the first Bianchi
    // identity is a real constraint check on torsion-freeness.
    CurvatureTensor R = curvature(*this);
    for (int l = 0; l < nn; ++l)
        for (int k = 0; k < nn; ++k)
            for (int i = 0; i < nn; ++i)
                for (int j = 0; j < nn; ++j) {
                    RatFun b = R.at(l, k, i, j) + R.at(l, i, j, k) + R.at(l, j, k, i);
                    if (!b.is_zero()) throw std::domain_error("first Bianchi identity fails");
                }

    if (alpha) {
        for (const RatFun& r : check_alpha(*this))
            if (!r.is_zero())
                throw std::domain_error("d alpha != -tr R: inconsistent chart data");
    }
    if (alpha && density) {
        std::vector<RatFun> derived = alpha_from_density(*this);
        for (int j = 0; j < nn; ++j)
            if (!((*alpha)[j] == derived[j]))
                throw std::domain_error("alpha disagrees with the one induced by the density");
    }
}

namespace {

std::pair<int, std::pair<int, int>> parse_gamma_key(const std::string& key, int n) {
    std::istringstream in(key);
    int k, i, j;
    char semi, comma;
    if (!(in >> k >> semi >> i >> comma >> j) || semi != ';' || comma != ',' || !(in >> std::ws).eof())
        throw std::invalid_argument("bad gamma key '" + key + "' (expected \"k;i,j\")");
    if (k < 1 || k > n || i < 1 || i > n || j < 1 || j > n)
        throw std::invalid_argument("gamma key '" + key + "' out of range");
    return {k - 1, {i - 1, j - 1}};
}

std::pair<int, int> parse_pair_key(const std::string& key, int n) {
    std::istringstream in(key);
    int i, j;
    char comma;
    if (!(in >> i >> comma >> j) || comma != ',' || !(in >> std::ws).eof())
        throw std::invalid_argument("bad metric key '" + key + "' (expected \"i,j\")");
    if (i < 1 || i > n || j < 1 || j > n)
        throw std::invalid_argument("metric key '" + key + "' out of range");
    return {i - 1, j - 1};
}

}  // namespace

ChartSpec chart_from_json_text(const std::string& text) {
    nlohmann::json doc = nlohmann::json::parse(text);
    if (!doc.is_object() || !doc.contains("dim"))
        throw std::invalid_argument("chart file must be an object with a \"dim\" field");
    ChartSpec spec;
    spec.n = doc["dim"].get<int>();
    if (spec.n <= 0) throw std::invalid_argument("chart dimension must be positive");
    int n = spec.n;
    spec.vars = VarTable::chart_vars(n);
    spec.gamma.assign(n * n * n, RatFun(n));

    if (doc.contains("gamma")) {
        std::vector<bool> seen(n * n * n, false);
        for (auto& [key, val] : doc["gamma"].items()) {
            auto [k, ij] = parse_gamma_key(key, n);
            auto [i, j] = ij;
            RatFun f = parse_ratfun(val.get<std::string>(), spec.vars);
            int at = (k * n + i) * n + j, ta = (k * n + j) * n + i;
            if ((seen[at] && !(spec.gamma[at] == f)) || (seen[ta] && !(spec.gamma[ta] == f)))
                throw std::invalid_argument("gamma entry " + key + " conflicts with its mirror");
            spec.gamma[at] = f;
            spec.gamma[ta] = f;
            seen[at] = seen[ta] = true;
        }
    }
    if (doc.contains("metric")) {
        std::vector<RatFun> g(n * n, RatFun(n));
        std::vector<bool> seen(n * n, false);
        for (auto& [key, val] : doc["metric"].items()) {
            auto [i, j] = parse_pair_key(key, n);
            RatFun f = parse_ratfun(val.get<std::string>(), spec.vars);
            if ((seen[i * n + j] && !(g[i * n + j] == f)) || (seen[j * n + i] && !(g[j * n + i] == f)))
                throw std::invalid_argument("metric entry " + key + " conflicts with its mirror");
            g[i * n + j] = f;
            g[j * n + i] = f;
            seen[i * n + j] = seen[j * n + i] = true;
        }
        spec.metric = std::move(g);
    }
    if (doc.contains("alpha")) {
        auto& arr = doc["alpha"];
        if (!arr.is_array() || (int)arr.size() != n)
            throw std::invalid_argument("alpha must be an array of dim expressions");
        std::vector<RatFun> a;
        for (auto& v : arr) a.push_back(parse_ratfun(v.get<std::string>(), spec.vars));
        spec.alpha = std::move(a);
    }
    if (doc.contains("density")) {
        RatFun m = parse_ratfun(doc["density"].get<std::string>(), spec.vars);
        if (m.is_zero()) throw std::invalid_argument("density must be nonzero");
        spec.density = std::move(m);
    }

    spec.validate();
    return spec;
}

ChartSpec load_chart(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("cannot open chart file: " + path);
    std::stringstream buf;
    buf << in.rdbuf();
    return chart_from_json_text(buf.str());
}

}  // namespace costar
