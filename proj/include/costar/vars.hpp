#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace costar {

// Variable universe for a computation: the first `coords` entries are the
// chart coordinates q1..qn; anything after that is a formal parameter (s, t,
// an energy constant, ...) that derivatives in the coordinates ignore.
struct VarTable {
    int coords = 0;
    std::vector<std::string> names;  // size >= coords

    static VarTable chart_vars(int n) {
        VarTable vt;
        vt.coords = n;
        for (int k = 1; k <= n; ++k) vt.names.push_back("q" + std::to_string(k));
        return vt;
    }

    int nv() const { return int(names.size()); }

    int add_param(const std::string& name) {
        if (find(name) >= 0) throw std::invalid_argument("duplicate variable name: " + name);
        names.push_back(name);
        return nv() - 1;
    }

    int find(const std::string& name) const {
        for (size_t k = 0; k < names.size(); ++k)
            if (names[k] == name) return int(k);
        return -1;
    }

    int index_or_throw(const std::string& name) const {
        int k = find(name);
        if (k < 0) throw std::invalid_argument("unknown variable: " + name);
        return k;
    }
};

}  // namespace costar
