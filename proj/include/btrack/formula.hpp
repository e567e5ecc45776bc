#pragma once

#include <algorithm>
#include <cstdint>
#include <functional>
#include <vector>

#include "error.hpp"

namespace btrack {

// Value lookup used during formula evaluation. Returns the value index
// assigned to a variable, or -1 when unassigned.
using ValueLookup = std::function<int(int)>;

// Boolean expression tree over variable/value literals. Two extra node
// kinds keep the benchmark encodings compact: VarEq asserts two variables
// hold the same value index, CountTrue counts how many boolean variables
// are set to value index 1.
struct Formula {
    enum class Kind : uint8_t { True, False, Lit, Not, And, Or, VarEq, CountTrue };

    Kind kind = Kind::True;
    int var = -1;
    int value = -1;
    bool positive = true; // Lit: == vs !=
    int var2 = -1;        // VarEq
    int count = 0;        // CountTrue target
    std::vector<int> vars;
    std::vector<Formula> children;

    static Formula t() { return Formula{}; }
    static Formula f() {
        Formula x;
        x.kind = Kind::False;
        return x;
    }
    static Formula lit(int var, int value, bool positive = true) {
        Formula x;
        x.kind = Kind::Lit;
        x.var = var;
        x.value = value;
        x.positive = positive;
        return x;
    }
    static Formula negate(Formula inner) {
        Formula x;
        x.kind = Kind::Not;
        x.children.push_back(std::move(inner));
        return x;
    }
    static Formula conj(std::vector<Formula> cs) {
        Formula x;
        x.kind = Kind::And;
        x.children = std::move(cs);
        return x;
    }
    static Formula disj(std::vector<Formula> cs) {
        Formula x;
        x.kind = Kind::Or;
        x.children = std::move(cs);
        return x;
    }
    static Formula var_eq(int a, int b) {
        Formula x;
        x.kind = Kind::VarEq;
        x.var = a;
        x.var2 = b;
        return x;
    }
    static Formula count_true(std::vector<int> vs, int k) {
        Formula x;
        x.kind = Kind::CountTrue;
        x.vars = std::move(vs);
        x.count = k;
        return x;
    }

    void collect_vars(std::vector<int>& out) const {
        switch (kind) {
            case Kind::True:
            case Kind::False: break;
            case Kind::Lit: out.push_back(var); break;
            case Kind::VarEq:
                out.push_back(var);
                out.push_back(var2);
                break;
            case Kind::CountTrue:
                out.insert(out.end(), vars.begin(), vars.end());
                break;
            default:
                for (const auto& c : children) c.collect_vars(out);
        }
    }

    std::vector<int> scope() const {
        std::vector<int> vs;
        collect_vars(vs);
        std::sort(vs.begin(), vs.end());
        vs.erase(std::unique(vs.begin(), vs.end()), vs.end());
        return vs;
    }
};

template <typename Lookup>
inline int lookup_or_fail(const Lookup& get, int var) {
    int v = get(var);
    if (v < 0) fail(Errc::incomplete_valuation, "variable #" + std::to_string(var) + " unassigned in formula scope");
    return v;
}

template <typename Lookup>
inline bool eval_formula_with(const Formula& f, const Lookup& get) {
    switch (f.kind) {
        case Formula::Kind::True: return true;
        case Formula::Kind::False: return false;
        case Formula::Kind::Lit: {
            bool eq = lookup_or_fail(get, f.var) == f.value;
            return f.positive ? eq : !eq;
        }
        case Formula::Kind::Not: return !eval_formula_with(f.children[0], get);
        case Formula::Kind::And:
            for (const auto& c : f.children)
                if (!eval_formula_with(c, get)) return false;
            return true;
        case Formula::Kind::Or:
            for (const auto& c : f.children)
                if (eval_formula_with(c, get)) return true;
            return false;
        case Formula::Kind::VarEq: return lookup_or_fail(get, f.var) == lookup_or_fail(get, f.var2);
        case Formula::Kind::CountTrue: {
            int n = 0;
            for (int v : f.vars)
                if (lookup_or_fail(get, v) == 1) ++n;
            return n == f.count;
        }
    }
    return false;
}

inline bool eval_formula(const Formula& f, const ValueLookup& get) { return eval_formula_with(f, get); }

// dense fast path used by the tracking hot loops
inline bool eval_formula(const Formula& f, const std::vector<int>& assign) {
    return eval_formula_with(f, [&](int v) { return assign[size_t(v)]; });
}

} // namespace btrack
