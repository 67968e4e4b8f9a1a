#include "costar/series.hpp"

namespace costar {

FormalSeries<CRat> series_inverse(const FormalSeries<CRat>& f, const Rat& K) {
    auto o = f.order();
    if (!o) throw std::domain_error("inverse of (a truncation of) the zero series");
    CRat c0 = *f.coeff(*o);

    SeriesClass cls = f.cls();
    if (cls == SeriesClass::Power && sgn(*o) > 0) cls = SeriesClass::Laurent;

    // f = c0 * x^o * (1 + u); build sum_j (-u)^j to the needed relative order.
    Rat rel = K + *o;
    FormalSeries<CRat> u(cls, rel);
    CRat c0inv = c0.inv();
    for (auto& [e, c] : f.coeffs()) {
        if (e == *o) continue;
        u.set_coeff(e - *o, c * c0inv);
    }
    FormalSeries<CRat> geom(cls, rel);
    geom.set_coeff(Rat(0), CRat(1));
    FormalSeries<CRat> pw = geom;
    FormalSeries<CRat> mu = -u;
    while (true) {
        pw = (pw * mu).truncated(rel);
        if (pw.is_zero()) break;
        geom = geom + pw;
    }

    FormalSeries<CRat> r(cls, K);
    for (auto& [e, c] : geom.coeffs()) r.set_coeff(e - *o, c * c0inv);
    return r;
}

}  // namespace costar
