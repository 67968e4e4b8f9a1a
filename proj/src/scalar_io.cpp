#include "costar/scalar_io.hpp"

#include "costar/parse.hpp"

namespace costar {

namespace {

struct RatFunAlgebra {
    using value_type = RatFun;
    const VarTable& vt;

    RatFun from_int(const std::string& digits) const {
        Rat r(digits);
        return RatFun::constant(vt.nv(), CRat(r));
    }

    RatFun from_symbol(const std::string& name) const {
        if (name == "i") return RatFun::constant(vt.nv(), CRat::unit_i());
        return RatFun::variable(vt.nv(), vt.index_or_throw(name));
    }
};

}  // namespace

RatFun parse_ratfun(const std::string& text, const VarTable& vt) {
    RatFunAlgebra alg{vt};
    return ExprParser<RatFunAlgebra>(alg, text).parse();
}

}  // namespace costar
