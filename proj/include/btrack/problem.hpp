#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "formula.hpp"

namespace btrack {

enum class VarKind : uint8_t { State, Observable, Defined };

struct Variable {
    std::string name;
    VarKind kind = VarKind::State;
    std::vector<std::string> domain;

    // Defined variables only: a total function from valuations over `scope`
    // to a domain value, given as one formula per value (first match wins;
    // the validator checks the cases are exhaustive).
    std::vector<int> scope;
    std::vector<Formula> cases;

    bool is_boolean() const { return domain.size() == 2 && domain[0] == "false" && domain[1] == "true"; }
    int value_index(const std::string& v) const {
        for (size_t i = 0; i < domain.size(); ++i)
            if (domain[i] == v) return int(i);
        return -1;
    }
};

struct Literal {
    int var = -1;
    int value = -1;
    bool positive = true; // true: var == value, false: var != value

    bool operator==(const Literal& o) const {
        return var == o.var && value == o.value && positive == o.positive;
    }
};

// C -> E1 | ... | En. Deterministic iff heads.size() == 1.
struct ConditionalEffect {
    std::vector<Literal> condition;
    std::vector<std::vector<Literal>> heads;

    bool deterministic() const { return heads.size() == 1; }
};

struct Action {
    std::string name;
    std::vector<Literal> precondition;
    std::vector<ConditionalEffect> effects;
    bool is_noop = false;
};

// W_a(Y=y): states where observing Y=y is possible after action a.
// action < 0 means the rule applies to every action.
struct SensorRule {
    int action = -1;
    int observable = -1;
    int value = -1;
    Formula formula;
};

struct StateConstraint {
    Formula formula;
    std::vector<int> scope;
};

struct Violation {
    std::string code;
    std::string where;
};

struct Problem {
    std::string name;
    std::vector<Variable> vars;
    // Initial situation as clauses over literals; valid problems carry unit
    // clauses only (the validator reports anything else).
    std::vector<std::vector<Literal>> initial;
    std::vector<Action> actions;
    std::vector<Literal> goal;
    std::vector<SensorRule> sensors;
    std::vector<StateConstraint> constraints;

    std::map<std::string, int> var_index;
    std::map<std::string, int> action_index;

    int add_var(Variable v) {
        int idx = int(vars.size());
        var_index[v.name] = idx;
        vars.push_back(std::move(v));
        return idx;
    }
    int add_action(Action a) {
        int idx = int(actions.size());
        action_index[a.name] = idx;
        actions.push_back(std::move(a));
        return idx;
    }
    int add_bool_var(const std::string& name, VarKind kind) {
        Variable v;
        v.name = name;
        v.kind = kind;
        v.domain = {"false", "true"};
        return add_var(std::move(v));
    }

    int find_var(const std::string& n) const {
        auto it = var_index.find(n);
        return it == var_index.end() ? -1 : it->second;
    }
    int find_action(const std::string& n) const {
        auto it = action_index.find(n);
        return it == action_index.end() ? -1 : it->second;
    }

    size_t domain_size(int var) const { return vars[size_t(var)].domain.size(); }
    bool is_state(int var) const { return vars[size_t(var)].kind == VarKind::State; }
    bool is_observable(int var) const { return vars[size_t(var)].kind == VarKind::Observable; }
    bool is_defined(int var) const { return vars[size_t(var)].kind == VarKind::Defined; }

    std::vector<int> state_vars() const {
        std::vector<int> out;
        for (size_t i = 0; i < vars.size(); ++i)
            if (vars[i].kind == VarKind::State) out.push_back(int(i));
        return out;
    }
    std::vector<int> observable_vars() const {
        std::vector<int> out;
        for (size_t i = 0; i < vars.size(); ++i)
            if (vars[i].kind == VarKind::Observable) out.push_back(int(i));
        return out;
    }

    // != on a binary domain is rewritten to == of the other value.
    Literal make_literal(int var, int value, bool positive = true) const {
        const auto& d = vars[size_t(var)].domain;
        if (!positive && d.size() == 2) return Literal{var, value == 0 ? 1 : 0, true};
        return Literal{var, value, positive};
    }
    Literal make_literal(const std::string& var, const std::string& value, bool positive = true) const {
        int v = find_var(var);
        if (v < 0) fail(Errc::parse_error, "unknown variable " + var);
        int val = vars[size_t(v)].value_index(value);
        if (val < 0) fail(Errc::parse_error, "value " + value + " not in domain of " + var);
        return make_literal(v, val, positive);
    }

    std::string literal_str(const Literal& l) const {
        return vars[size_t(l.var)].name + (l.positive ? "=" : "!=") + vars[size_t(l.var)].domain[size_t(l.value)];
    }

    // Sensor rule lookup: action-specific rules shadow wildcard rules for the
    // same observable.
    const SensorRule* sensor_rule(int action, int observable, int value) const {
        const SensorRule* wildcard = nullptr;
        for (const auto& r : sensors) {
            if (r.observable != observable || r.value != value) continue;
            if (r.action == action) return &r;
            if (r.action < 0) wildcard = &r;
        }
        return wildcard;
    }

    bool has_sensor_for(int action, int observable) const {
        for (const auto& r : sensors)
            if (r.observable == observable && (r.action == action || r.action < 0)) return true;
        return false;
    }
};

inline bool literal_holds(const Literal& l, const ValueLookup& get) {
    bool eq = lookup_or_fail(get, l.var) == l.value;
    return l.positive ? eq : !eq;
}

// Value sets satisfying a conjunction of literals for one variable; empty
// optional means no literal constrains it.
inline std::optional<std::vector<int>> allowed_values(const Problem& p, const std::vector<Literal>& lits, int var) {
    bool touched = false;
    std::vector<bool> ok(p.domain_size(var), true);
    for (const auto& l : lits) {
        if (l.var != var) continue;
        touched = true;
        for (size_t v = 0; v < ok.size(); ++v) {
            bool eq = int(v) == l.value;
            if (!(l.positive ? eq : !eq)) ok[v] = false;
        }
    }
    if (!touched) return std::nullopt;
    std::vector<int> vals;
    for (size_t v = 0; v < ok.size(); ++v)
        if (ok[v]) vals.push_back(int(v));
    return vals;
}

} // namespace btrack
