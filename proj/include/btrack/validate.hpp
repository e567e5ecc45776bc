#pragma once

#include "causal_graph.hpp"
#include "relation.hpp"
#include "rng.hpp"

namespace btrack {

namespace detail {

// Iterates all valuations over `vars` when the product of domain sizes is
// at most `cap`; otherwise falls back to seeded random sampling (which can
// miss violations but never invents one).
template <typename Fn>
inline void for_each_valuation(const Problem& p, const std::vector<int>& vars, size_t cap, Fn fn) {
    size_t total = 1;
    bool overflow = false;
    for (int v : vars) {
        total *= p.domain_size(v);
        if (total > cap) {
            overflow = true;
            break;
        }
    }
    std::vector<int> assign(p.vars.size(), -1);
    if (!overflow) {
        std::vector<size_t> odo(vars.size(), 0);
        for (size_t n = 0; n < total; ++n) {
            for (size_t c = 0; c < vars.size(); ++c) assign[size_t(vars[c])] = int(odo[c]);
            if (!fn(assign)) return;
            for (size_t c = vars.size(); c-- > 0;) {
                if (++odo[c] < p.domain_size(vars[c])) break;
                odo[c] = 0;
            }
        }
        return;
    }
    Rng rng(0x5eed5a17u);
    for (int n = 0; n < 4096; ++n) {
        for (int v : vars) assign[size_t(v)] = int(rng.below(p.domain_size(v)));
        if (!fn(assign)) return;
    }
}

} // namespace detail

// Checks the representational assumptions the tracking algorithms rely on.
// Returns one report per violation; empty means the problem conforms.
inline std::vector<Violation> validate(const Problem& p) {
    std::vector<Violation> out;

    // (a) initial situation given by unit literals
    for (size_t i = 0; i < p.initial.size(); ++i)
        if (p.initial[i].size() != 1)
            out.push_back({"non-unit initial clause", "initial clause #" + std::to_string(i)});

    // (b) non-deterministic heads mention a single variable
    for (const auto& a : p.actions)
        for (size_t e = 0; e < a.effects.size(); ++e) {
            const auto& eff = a.effects[e];
            if (eff.heads.empty()) {
                out.push_back({"effect without heads", a.name + " effect #" + std::to_string(e)});
                continue;
            }
            if (eff.deterministic()) continue;
            std::set<int> head_vars;
            for (const auto& h : eff.heads)
                for (const auto& l : h) head_vars.insert(l.var);
            if (head_vars.size() != 1)
                out.push_back({"non-det head spans " + std::to_string(head_vars.size()) + " variables",
                               a.name + " effect #" + std::to_string(e)});
        }

    // kind restrictions
    for (const auto& a : p.actions) {
        for (const auto& l : a.precondition)
            if (p.is_observable(l.var))
                out.push_back({"precondition over observable variable", a.name});
        for (const auto& eff : a.effects) {
            for (const auto& l : eff.condition)
                if (!p.is_state(l.var)) out.push_back({"effect condition over non-state variable", a.name});
            for (const auto& h : eff.heads)
                for (const auto& l : h) {
                    if (!p.is_state(l.var)) out.push_back({"effect head over non-state variable", a.name});
                    if (!l.positive) out.push_back({"negative effect head literal", a.name});
                }
        }
    }
    for (const auto& r : p.sensors) {
        if (!p.is_observable(r.observable))
            out.push_back({"sensor rule on non-observable", p.vars[size_t(r.observable)].name});
        for (int v : r.formula.scope())
            if (!p.is_state(v))
                out.push_back({"sensor formula over non-state variable", p.vars[size_t(r.observable)].name});
    }
    for (size_t c = 0; c < p.constraints.size(); ++c) {
        if (p.constraints[c].scope != p.constraints[c].formula.scope())
            out.push_back({"constraint scope mismatch", "constraint #" + std::to_string(c)});
        for (int v : p.constraints[c].formula.scope())
            if (!p.is_state(v)) out.push_back({"constraint over non-state variable", "constraint #" + std::to_string(c)});
    }
    for (size_t i = 0; i < p.vars.size(); ++i) {
        const auto& v = p.vars[i];
        if (v.domain.empty()) out.push_back({"empty domain", v.name});
        if (v.kind != VarKind::Defined) continue;
        if (v.cases.size() != v.domain.size()) {
            out.push_back({"defined variable without one case per value", v.name});
            continue;
        }
        for (int s : v.scope)
            if (!p.is_state(s)) out.push_back({"defined variable scope over non-state variable", v.name});
        // totality over the definition scope
        bool total = true;
        detail::for_each_valuation(p, v.scope, size_t(1) << 22, [&](const std::vector<int>& assign) {
            bool any = false;
            for (const auto& f : v.cases)
                if (eval_formula(f, assign)) {
                    any = true;
                    break;
                }
            if (!any) total = false;
            return total;
        });
        if (!total) out.push_back({"defined variable cases not exhaustive", v.name});
    }

    // (d) sensor exhaustiveness per (action, observable)
    struct GroupKey {
        int action, obs;
        bool operator<(const GroupKey& o) const { return std::tie(action, obs) < std::tie(o.action, o.obs); }
    };
    std::map<GroupKey, std::vector<const SensorRule*>> groups;
    for (const auto& r : p.sensors) groups[{r.action, r.observable}].push_back(&r);
    for (const auto& [key, rules] : groups) {
        std::set<int> sc;
        for (const auto* r : rules)
            for (int v : r->formula.scope()) sc.insert(v);
        std::vector<int> scope(sc.begin(), sc.end());
        bool exhaustive = true;
        detail::for_each_valuation(p, scope, size_t(1) << 24, [&](const std::vector<int>& assign) {
            bool any = false;
            for (const auto* r : rules)
                if (eval_formula(r->formula, assign)) {
                    any = true;
                    break;
                }
            if (!any) exhaustive = false;
            return exhaustive;
        });
        if (!exhaustive) {
            std::string where = p.vars[size_t(key.obs)].name + " under " +
                                (key.action < 0 ? std::string("*") : p.actions[size_t(key.action)].name);
            out.push_back({"sensor rules not exhaustive", where});
        }
    }

    // (c) every observable relevant to some precondition or goal variable
    {
        CausalGraph g(p);
        std::set<int> reached;
        for (int t : g.precondition_goal_vars())
            for (int v : g.relevant(t)) reached.insert(v);
        for (size_t i = 0; i < p.vars.size(); ++i)
            if (p.vars[i].kind == VarKind::Observable && !reached.count(int(i)))
                out.push_back({"observable not relevant to any precondition/goal variable", p.vars[i].name});
    }

    return out;
}

namespace detail {

inline Formula remap_formula(const Formula& f, const std::vector<int>& map) {
    Formula out = f;
    if (out.var >= 0) out.var = map[size_t(out.var)];
    if (out.var2 >= 0) out.var2 = map[size_t(out.var2)];
    for (auto& v : out.vars) v = map[size_t(v)];
    out.children.clear();
    for (const auto& c : f.children) out.children.push_back(remap_formula(c, map));
    return out;
}

// Reifies a relation as a disjunction of row conjunctions.
inline Formula relation_to_formula(const Relation& r) {
    if (r.width() == 0) return r.empty() ? Formula::f() : Formula::t();
    std::vector<Formula> rows;
    for (size_t i = 0; i < r.size(); ++i) {
        std::vector<Formula> lits;
        for (size_t c = 0; c < r.width(); ++c) lits.push_back(Formula::lit(r.scope[c], r.row(i)[c]));
        rows.push_back(Formula::conj(std::move(lits)));
    }
    if (rows.empty()) return Formula::f();
    return Formula::disj(std::move(rows));
}

// Logical projection of a formula onto the kept variables: satisfied exactly
// by the valuations extendable to a model of the original.
inline Formula project_formula(const Problem& p, const Formula& f, const std::vector<bool>& keep) {
    std::vector<int> fvars = f.scope();
    bool all_kept = true;
    for (int v : fvars)
        if (!keep[size_t(v)]) {
            all_kept = false;
            break;
        }
    if (all_kept) return f;
    std::vector<int> kept_scope;
    for (int v : fvars)
        if (keep[size_t(v)]) kept_scope.push_back(v);
    Relation rel = compile_formula(p, f, kept_scope);
    return relation_to_formula(rel);
}

} // namespace detail

// Projection of the problem onto a subset of its state variables (Def. of
// projected problems): formulas are logically projected, observables are
// retained, conditions/heads keep their in-scope literals.
inline Problem project_problem(const Problem& p, const std::vector<int>& scope) {
    std::vector<bool> keep(p.vars.size(), false);
    for (int v : scope) {
        if (v < 0 || v >= int(p.vars.size()) || !p.is_state(v))
            fail(Errc::invalid_scope, "projection scope must contain declared state variables only");
        keep[size_t(v)] = true;
    }
    // defined variables survive when their definition scope survives
    for (size_t i = 0; i < p.vars.size(); ++i) {
        if (p.vars[i].kind == VarKind::Defined) {
            bool ok = true;
            for (int s : p.vars[i].scope)
                if (!keep[size_t(s)]) ok = false;
            keep[i] = ok;
        } else if (p.vars[i].kind == VarKind::Observable) {
            keep[i] = true;
        }
    }

    Problem out;
    out.name = p.name + "#proj";
    std::vector<int> map(p.vars.size(), -1);
    for (size_t i = 0; i < p.vars.size(); ++i) {
        if (!keep[i]) continue;
        Variable v = p.vars[i];
        map[i] = int(out.vars.size());
        out.add_var(std::move(v));
    }
    for (size_t i = 0; i < p.vars.size(); ++i)
        if (keep[i] && p.vars[i].kind == VarKind::Defined) {
            auto& v = out.vars[size_t(map[i])];
            for (auto& s : v.scope) s = map[size_t(s)];
            for (auto& c : v.cases) c = detail::remap_formula(c, map);
        }

    auto remap_lit = [&](const Literal& l) { return Literal{map[size_t(l.var)], l.value, l.positive}; };

    for (const auto& clause : p.initial) {
        std::vector<Literal> kept_lits;
        for (const auto& l : clause)
            if (keep[size_t(l.var)]) kept_lits.push_back(remap_lit(l));
        if (!kept_lits.empty() && kept_lits.size() == clause.size()) out.initial.push_back(kept_lits);
    }

    for (const auto& a : p.actions) {
        Action na;
        na.name = a.name;
        na.is_noop = a.is_noop;
        for (const auto& l : a.precondition)
            if (keep[size_t(l.var)]) na.precondition.push_back(remap_lit(l));
        for (const auto& eff : a.effects) {
            ConditionalEffect ne;
            bool condition_sat = true;
            std::set<int> cond_vars;
            for (const auto& l : eff.condition) cond_vars.insert(l.var);
            for (int cv : cond_vars) {
                auto vals = allowed_values(p, eff.condition, cv);
                if (vals && vals->empty()) condition_sat = false;
                if (keep[size_t(cv)])
                    for (const auto& l : eff.condition)
                        if (l.var == cv) ne.condition.push_back(remap_lit(l));
            }
            if (!condition_sat) continue;
            for (const auto& h : eff.heads) {
                std::vector<Literal> nh;
                for (const auto& l : h)
                    if (keep[size_t(l.var)]) nh.push_back(remap_lit(l));
                if (!nh.empty()) ne.heads.push_back(std::move(nh));
            }
            if (!ne.heads.empty()) na.effects.push_back(std::move(ne));
        }
        out.add_action(std::move(na));
    }

    for (const auto& l : p.goal)
        if (keep[size_t(l.var)]) out.goal.push_back(remap_lit(l));

    for (const auto& r : p.sensors) {
        SensorRule nr;
        nr.action = r.action;
        nr.observable = map[size_t(r.observable)];
        nr.value = r.value;
        nr.formula = detail::remap_formula(detail::project_formula(p, r.formula, keep), map);
        out.sensors.push_back(std::move(nr));
    }

    for (const auto& c : p.constraints) {
        Formula pf = detail::project_formula(p, c.formula, keep);
        if (pf.kind == Formula::Kind::True) continue;
        StateConstraint nc;
        nc.formula = detail::remap_formula(pf, map);
        nc.scope = nc.formula.scope();
        out.constraints.push_back(std::move(nc));
    }

    return out;
}

} // namespace btrack
