#pragma once

#include <json.hpp>

#include "problem.hpp"

namespace btrack {

using Json = nlohmann::json;

namespace jsonio {

inline Json formula_to_json(const Problem& p, const Formula& f) {
    switch (f.kind) {
        case Formula::Kind::True: return Json(true);
        case Formula::Kind::False: return Json(false);
        case Formula::Kind::Lit: {
            Json a = Json::array();
            a.push_back(f.positive ? "=" : "!=");
            a.push_back(p.vars[size_t(f.var)].name);
            a.push_back(p.vars[size_t(f.var)].domain[size_t(f.value)]);
            return a;
        }
        case Formula::Kind::Not: {
            Json a = Json::array();
            a.push_back("not");
            a.push_back(formula_to_json(p, f.children[0]));
            return a;
        }
        case Formula::Kind::And:
        case Formula::Kind::Or: {
            Json a = Json::array();
            a.push_back(f.kind == Formula::Kind::And ? "and" : "or");
            for (const auto& c : f.children) a.push_back(formula_to_json(p, c));
            return a;
        }
        case Formula::Kind::VarEq: {
            Json a = Json::array();
            a.push_back("==");
            a.push_back(p.vars[size_t(f.var)].name);
            a.push_back(p.vars[size_t(f.var2)].name);
            return a;
        }
        case Formula::Kind::CountTrue: {
            Json a = Json::array();
            a.push_back("count-true");
            a.push_back(f.count);
            for (int v : f.vars) a.push_back(p.vars[size_t(v)].name);
            return a;
        }
    }
    return Json(nullptr);
}

inline Formula formula_from_json(const Problem& p, const Json& j) {
    if (j.is_boolean()) return j.get<bool>() ? Formula::t() : Formula::f();
    if (!j.is_array() || j.empty() || !j[0].is_string()) fail(Errc::parse_error, "malformed formula: " + j.dump());
    const std::string op = j[0].get<std::string>();
    auto var_of = [&](const Json& x) {
        int v = p.find_var(x.get<std::string>());
        if (v < 0) fail(Errc::parse_error, "unknown variable " + x.get<std::string>());
        return v;
    };
    if (op == "=" || op == "!=") {
        if (j.size() != 3) fail(Errc::parse_error, "literal needs [op, var, value]");
        int v = var_of(j[1]);
        int val = p.vars[size_t(v)].value_index(j[2].is_string() ? j[2].get<std::string>() : j[2].dump());
        if (val < 0) fail(Errc::parse_error, "value " + j[2].dump() + " not in domain of " + p.vars[size_t(v)].name);
        return Formula::lit(v, val, op == "=");
    }
    if (op == "not") {
        if (j.size() != 2) fail(Errc::parse_error, "not needs one operand");
        return Formula::negate(formula_from_json(p, j[1]));
    }
    if (op == "and" || op == "or") {
        std::vector<Formula> cs;
        for (size_t i = 1; i < j.size(); ++i) cs.push_back(formula_from_json(p, j[i]));
        return op == "and" ? Formula::conj(std::move(cs)) : Formula::disj(std::move(cs));
    }
    if (op == "==") {
        if (j.size() != 3) fail(Errc::parse_error, "== needs two variables");
        return Formula::var_eq(var_of(j[1]), var_of(j[2]));
    }
    if (op == "count-true") {
        if (j.size() < 2 || !j[1].is_number_integer()) fail(Errc::parse_error, "count-true needs a count");
        std::vector<int> vs;
        for (size_t i = 2; i < j.size(); ++i) {
            int v = var_of(j[i]);
            if (!p.vars[size_t(v)].is_boolean()) fail(Errc::parse_error, "count-true over non-boolean variable");
            vs.push_back(v);
        }
        return Formula::count_true(std::move(vs), j[1].get<int>());
    }
    fail(Errc::parse_error, "unknown formula operator " + op);
}

inline Json literal_to_json(const Problem& p, const Literal& l) {
    Json a = Json::array();
    a.push_back(l.positive ? "=" : "!=");
    a.push_back(p.vars[size_t(l.var)].name);
    a.push_back(p.vars[size_t(l.var)].domain[size_t(l.value)]);
    return a;
}

inline Literal literal_from_json(const Problem& p, const Json& j) {
    Formula f = formula_from_json(p, j);
    if (f.kind != Formula::Kind::Lit) fail(Errc::parse_error, "expected a literal: " + j.dump());
    return p.make_literal(f.var, f.value, f.positive);
}

} // namespace jsonio

inline Json problem_to_json(const Problem& p) {
    Json j;
    j["format"] = "btp-problem/1";
    j["name"] = p.name;
    Json vars = Json::array();
    for (const auto& v : p.vars) {
        Json jv;
        jv["name"] = v.name;
        jv["kind"] = v.kind == VarKind::State ? "state" : v.kind == VarKind::Observable ? "observable" : "defined";
        jv["domain"] = v.domain;
        if (v.kind == VarKind::Defined) {
            Json sc = Json::array();
            for (int s : v.scope) sc.push_back(p.vars[size_t(s)].name);
            jv["scope"] = sc;
            Json cases;
            for (size_t c = 0; c < v.cases.size(); ++c)
                cases[v.domain[c]] = jsonio::formula_to_json(p, v.cases[c]);
            jv["cases"] = cases;
        }
        vars.push_back(jv);
    }
    j["variables"] = vars;
    Json init = Json::array();
    for (const auto& clause : p.initial) {
        if (clause.size() == 1)
            init.push_back(jsonio::literal_to_json(p, clause[0]));
        else {
            Json c = Json::array();
            for (const auto& l : clause) c.push_back(jsonio::literal_to_json(p, l));
            init.push_back(c);
        }
    }
    j["initial"] = init;
    Json acts = Json::array();
    for (const auto& a : p.actions) {
        Json ja;
        ja["name"] = a.name;
        if (a.is_noop) ja["noop"] = true;
        Json pre = Json::array();
        for (const auto& l : a.precondition) pre.push_back(jsonio::literal_to_json(p, l));
        ja["precondition"] = pre;
        Json effs = Json::array();
        for (const auto& e : a.effects) {
            Json je;
            Json cond = Json::array();
            for (const auto& l : e.condition) cond.push_back(jsonio::literal_to_json(p, l));
            je["condition"] = cond;
            Json heads = Json::array();
            for (const auto& h : e.heads) {
                Json jh = Json::array();
                for (const auto& l : h) jh.push_back(jsonio::literal_to_json(p, l));
                heads.push_back(jh);
            }
            je["heads"] = heads;
            effs.push_back(je);
        }
        ja["effects"] = effs;
        acts.push_back(ja);
    }
    j["actions"] = acts;
    Json sensors = Json::array();
    for (const auto& r : p.sensors) {
        Json jr;
        jr["action"] = r.action < 0 ? "*" : p.actions[size_t(r.action)].name;
        jr["observable"] = p.vars[size_t(r.observable)].name;
        jr["value"] = p.vars[size_t(r.observable)].domain[size_t(r.value)];
        jr["formula"] = jsonio::formula_to_json(p, r.formula);
        sensors.push_back(jr);
    }
    j["sensors"] = sensors;
    Json cons = Json::array();
    for (const auto& c : p.constraints) cons.push_back(jsonio::formula_to_json(p, c.formula));
    j["constraints"] = cons;
    Json goal = Json::array();
    for (const auto& l : p.goal) goal.push_back(jsonio::literal_to_json(p, l));
    j["goal"] = goal;
    return j;
}

inline Problem problem_from_json(const Json& j) {
    if (!j.is_object() || j.value("format", "") != "btp-problem/1")
        fail(Errc::parse_error, "expected a btp-problem/1 document");
    Problem p;
    p.name = j.value("name", "unnamed");
    if (!j.contains("variables")) fail(Errc::parse_error, "missing variables");
    // first pass: declare variables so formulas can resolve names
    for (const auto& jv : j["variables"]) {
        Variable v;
        v.name = jv.at("name").get<std::string>();
        const std::string kind = jv.value("kind", "state");
        v.kind = kind == "state"        ? VarKind::State
                 : kind == "observable" ? VarKind::Observable
                 : kind == "defined"    ? VarKind::Defined
                                        : VarKind::State;
        if (kind != "state" && kind != "observable" && kind != "defined")
            fail(Errc::parse_error, "unknown variable kind " + kind);
        for (const auto& d : jv.at("domain")) v.domain.push_back(d.is_string() ? d.get<std::string>() : d.dump());
        if (v.domain.empty()) fail(Errc::parse_error, "empty domain for " + v.name);
        if (p.find_var(v.name) >= 0) fail(Errc::parse_error, "duplicate variable " + v.name);
        p.add_var(std::move(v));
    }
    // second pass: defined-variable cases
    for (const auto& jv : j["variables"]) {
        if (jv.value("kind", "state") != "defined") continue;
        int idx = p.find_var(jv.at("name").get<std::string>());
        auto& v = p.vars[size_t(idx)];
        for (const auto& s : jv.at("scope")) {
            int sv = p.find_var(s.get<std::string>());
            if (sv < 0) fail(Errc::parse_error, "unknown scope variable " + s.get<std::string>());
            v.scope.push_back(sv);
        }
        const auto& cases = jv.at("cases");
        for (const auto& val : v.domain) {
            if (!cases.contains(val)) fail(Errc::parse_error, "defined variable " + v.name + " misses case " + val);
            v.cases.push_back(jsonio::formula_from_json(p, cases.at(val)));
        }
    }
    for (const auto& jc : j.value("initial", Json::array())) {
        std::vector<Literal> clause;
        if (jc.is_array() && !jc.empty() && jc[0].is_array())
            for (const auto& jl : jc) clause.push_back(jsonio::literal_from_json(p, jl));
        else
            clause.push_back(jsonio::literal_from_json(p, jc));
        p.initial.push_back(std::move(clause));
    }
    for (const auto& ja : j.value("actions", Json::array())) {
        Action a;
        a.name = ja.at("name").get<std::string>();
        a.is_noop = ja.value("noop", false);
        for (const auto& jl : ja.value("precondition", Json::array()))
            a.precondition.push_back(jsonio::literal_from_json(p, jl));
        for (const auto& je : ja.value("effects", Json::array())) {
            ConditionalEffect e;
            for (const auto& jl : je.value("condition", Json::array()))
                e.condition.push_back(jsonio::literal_from_json(p, jl));
            for (const auto& jh : je.at("heads")) {
                std::vector<Literal> h;
                for (const auto& jl : jh) h.push_back(jsonio::literal_from_json(p, jl));
                e.heads.push_back(std::move(h));
            }
            a.effects.push_back(std::move(e));
        }
        if (p.find_action(a.name) >= 0) fail(Errc::parse_error, "duplicate action " + a.name);
        p.add_action(std::move(a));
    }
    for (const auto& jr : j.value("sensors", Json::array())) {
        SensorRule r;
        const std::string an = jr.at("action").get<std::string>();
        if (an == "*")
            r.action = -1;
        else {
            r.action = p.find_action(an);
            if (r.action < 0) fail(Errc::parse_error, "unknown action " + an);
        }
        r.observable = p.find_var(jr.at("observable").get<std::string>());
        if (r.observable < 0) fail(Errc::parse_error, "unknown observable");
        const std::string val = jr.at("value").get<std::string>();
        r.value = p.vars[size_t(r.observable)].value_index(val);
        if (r.value < 0) fail(Errc::parse_error, "value " + val + " not in observable domain");
        r.formula = jsonio::formula_from_json(p, jr.at("formula"));
        p.sensors.push_back(std::move(r));
    }
    for (const auto& jc : j.value("constraints", Json::array())) {
        StateConstraint c;
        c.formula = jsonio::formula_from_json(p, jc);
        c.scope = c.formula.scope();
        p.constraints.push_back(std::move(c));
    }
    for (const auto& jl : j.value("goal", Json::array())) p.goal.push_back(jsonio::literal_from_json(p, jl));
    return p;
}

} // namespace btrack
