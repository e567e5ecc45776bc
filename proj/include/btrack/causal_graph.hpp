#pragma once

#include <sstream>

#include "problem.hpp"

namespace btrack {

struct Decomposition {
    std::vector<int> targets;            // variable or constraint-node indices
    std::vector<std::vector<int>> beams; // per target: sorted state vars
    std::vector<bool> constraint_target; // true for beams owned by a state constraint
    std::map<int, int> beam_of;          // target -> beam index

    const std::vector<int>& beam(int target) const { return beams[size_t(beam_of.at(target))]; }
};

struct WidthReport {
    std::vector<int> width;        // per precondition/goal var: |relevant ∩ state \ determined|
    std::vector<int> causal_width; // per causal target: |CR ∩ state \ determined|
    std::vector<int> beam_size;    // per causal target: |CR ∩ state|
    std::vector<int> width_targets;
    std::vector<int> causal_targets;
    int problem_width = 0;           // max width over precondition/goal vars
    int problem_causal_width = 0;    // max causal width (non-determined count)
    int effective_causal_width = 0;  // max causal beam size, constraint beams ignored
};

// Immediate-cause graph over problem variables. State constraints are
// represented as synthetic always-observed nodes appended after the real
// variables: they couple their scopes for the relevance closure but are
// excluded from decomposition targets and width reporting.
class CausalGraph {
  public:
    explicit CausalGraph(const Problem& p) : p_(&p) {
        const int nv = int(p.vars.size());
        n_ = nv + int(p.constraints.size());
        parents_.assign(size_t(n_), {});
        auto add_edge = [&](int from, int to) {
            if (from == to) return;
            auto& v = parents_[size_t(to)];
            if (std::find(v.begin(), v.end(), from) == v.end()) v.push_back(from);
        };
        for (const auto& a : p.actions)
            for (const auto& e : a.effects)
                for (const auto& head : e.heads)
                    for (const auto& hl : head)
                        for (const auto& cl : e.condition) add_edge(cl.var, hl.var);
        for (const auto& r : p.sensors)
            for (int v : r.formula.scope()) add_edge(v, r.observable);
        for (int x = 0; x < nv; ++x)
            if (p.vars[size_t(x)].kind == VarKind::Defined)
                for (int s : p.vars[size_t(x)].scope) add_edge(s, x);
        for (size_t c = 0; c < p.constraints.size(); ++c)
            for (int v : p.constraints[c].scope) add_edge(v, nv + int(c));
        for (auto& v : parents_) std::sort(v.begin(), v.end());

        compute_determined();
        build_relevance_edges();
    }

    const Problem& problem() const { return *p_; }
    int node_count() const { return n_; }
    bool is_constraint_node(int x) const { return x >= int(p_->vars.size()); }
    bool is_observation_like(int x) const {
        return is_constraint_node(x) || p_->vars[size_t(x)].kind == VarKind::Observable;
    }
    const std::vector<int>& parents(int x) const { return parents_[size_t(x)]; }

    // Reflexive-transitive closure of the immediate-cause relation into x.
    std::vector<int> causally_relevant(int x) const {
        check_var(x);
        return ancestors(parents_, x);
    }

    // Closure under causal edges plus evidential edges (an observable is
    // relevant to everything causally relevant to it).
    std::vector<int> relevant(int x) const {
        check_var(x);
        return ancestors(rel_parents_, x);
    }

    const std::vector<bool>& determined() const { return determined_; }
    bool is_determined(int x) const { return x < int(determined_.size()) && determined_[size_t(x)]; }

    std::vector<int> determined_vars() const {
        std::vector<int> out;
        for (size_t i = 0; i < determined_.size(); ++i)
            if (determined_[i]) out.push_back(int(i));
        return out;
    }

    // Variables appearing in some action precondition or in the goal.
    std::vector<int> precondition_goal_vars() const {
        std::set<int> s;
        for (const auto& a : p_->actions)
            for (const auto& l : a.precondition) s.insert(l.var);
        for (const auto& l : p_->goal) s.insert(l.var);
        return {s.begin(), s.end()};
    }

    Decomposition factored_decomposition() const {
        Decomposition d;
        d.targets = precondition_goal_vars();
        for (int t : d.targets) {
            d.beam_of[t] = int(d.beams.size());
            d.beams.push_back(state_subset(relevant(t)));
            d.constraint_target.push_back(false);
        }
        return d;
    }

    // Targets are the precondition, goal, and observable variables. State
    // constraints whose closure is small and not already inside some beam get
    // a beam of their own (the always-true dummy observable reading); those
    // beams are flagged and ignored by width reporting.
    Decomposition causal_decomposition(size_t constraint_beam_budget = 1u << 16) const {
        Decomposition d;
        std::set<int> ts;
        for (int t : precondition_goal_vars()) ts.insert(t);
        for (size_t i = 0; i < p_->vars.size(); ++i)
            if (p_->vars[i].kind == VarKind::Observable) ts.insert(int(i));
        d.targets.assign(ts.begin(), ts.end());
        for (int t : d.targets) {
            d.beam_of[t] = int(d.beams.size());
            d.beams.push_back(state_subset(causally_relevant(t)));
            d.constraint_target.push_back(false);
        }
        for (size_t c = 0; c < p_->constraints.size(); ++c) {
            int node = int(p_->vars.size()) + int(c);
            std::vector<int> beam = state_subset(causally_relevant(node));
            const auto& csc = p_->constraints[c].scope;
            bool contained = false;
            for (size_t b = 0; b < d.beams.size() && !contained; ++b)
                contained = std::includes(d.beams[b].begin(), d.beams[b].end(), csc.begin(), csc.end());
            if (contained) continue;
            size_t tuples = 1;
            bool small = true;
            for (int v : beam) {
                if (determined_[size_t(v)]) continue;
                tuples *= p_->domain_size(v);
                if (tuples > constraint_beam_budget) {
                    small = false;
                    break;
                }
            }
            if (!small) continue;
            d.beam_of[node] = int(d.beams.size());
            d.targets.push_back(node);
            d.beams.push_back(std::move(beam));
            d.constraint_target.push_back(true);
        }
        return d;
    }

    WidthReport widths() const {
        WidthReport r;
        r.width_targets = precondition_goal_vars();
        for (int t : r.width_targets) {
            int w = count_nondetermined(state_subset(relevant(t)));
            r.width.push_back(w);
            r.problem_width = std::max(r.problem_width, w);
        }
        Decomposition c = causal_decomposition();
        for (size_t i = 0; i < c.targets.size(); ++i) {
            if (c.constraint_target[i]) continue;
            int wc = count_nondetermined(c.beams[i]);
            r.causal_targets.push_back(c.targets[i]);
            r.causal_width.push_back(wc);
            r.beam_size.push_back(int(c.beams[i].size()));
            r.problem_causal_width = std::max(r.problem_causal_width, wc);
            r.effective_causal_width = std::max(r.effective_causal_width, int(c.beams[i].size()));
        }
        return r;
    }

    std::string dot() const {
        std::ostringstream os;
        os << "digraph causal {\n  rankdir=LR;\n";
        for (size_t i = 0; i < p_->vars.size(); ++i) {
            const auto& v = p_->vars[i];
            const char* shape = v.kind == VarKind::Observable ? "ellipse"
                                : v.kind == VarKind::Defined  ? "diamond"
                                                              : "box";
            os << "  \"" << v.name << "\" [shape=" << shape << "];\n";
        }
        for (int x = 0; x < int(p_->vars.size()); ++x)
            for (int pa : parents_[size_t(x)])
                if (!is_constraint_node(pa))
                    os << "  \"" << p_->vars[size_t(pa)].name << "\" -> \"" << p_->vars[size_t(x)].name << "\";\n";
        os << "}\n";
        return os.str();
    }

  private:
    void check_var(int x) const {
        if (x < 0 || x >= n_) fail(Errc::unqueryable, "unknown variable #" + std::to_string(x));
    }

    static std::vector<int> ancestors(const std::vector<std::vector<int>>& padj, int x) {
        std::vector<int> out;
        std::vector<bool> seen(padj.size(), false);
        std::vector<int> stack{x};
        seen[size_t(x)] = true;
        while (!stack.empty()) {
            int v = stack.back();
            stack.pop_back();
            out.push_back(v);
            for (int pa : padj[size_t(v)])
                if (!seen[size_t(pa)]) {
                    seen[size_t(pa)] = true;
                    stack.push_back(pa);
                }
        }
        std::sort(out.begin(), out.end());
        return out;
    }

    std::vector<int> state_subset(const std::vector<int>& vs) const {
        std::vector<int> out;
        for (int v : vs)
            if (v < int(p_->vars.size()) && p_->vars[size_t(v)].kind == VarKind::State) out.push_back(v);
        return out;
    }

    int count_nondetermined(const std::vector<int>& state_vars) const {
        int n = 0;
        for (int v : state_vars)
            if (!determined_[size_t(v)]) ++n;
        return n;
    }

    // Maximal set of state variables that are initially known, appear only in
    // heads of deterministic effects, and whose writing effects have bodies
    // inside the set.
    void compute_determined() {
        const size_t nv = p_->vars.size();
        determined_.assign(nv, false);
        std::vector<bool> known(nv, false);
        for (const auto& clause : p_->initial)
            if (clause.size() == 1 && clause[0].positive) known[size_t(clause[0].var)] = true;
        for (size_t i = 0; i < nv; ++i)
            determined_[i] = known[i] && p_->vars[i].kind == VarKind::State;
        for (const auto& a : p_->actions)
            for (const auto& e : a.effects)
                if (!e.deterministic())
                    for (const auto& head : e.heads)
                        for (const auto& hl : head) determined_[size_t(hl.var)] = false;
        bool changed = true;
        while (changed) {
            changed = false;
            for (const auto& a : p_->actions)
                for (const auto& e : a.effects) {
                    if (!e.deterministic()) continue;
                    bool body_ok = true;
                    for (const auto& cl : e.condition)
                        if (!determined_[size_t(cl.var)]) {
                            body_ok = false;
                            break;
                        }
                    if (body_ok) continue;
                    for (const auto& hl : e.heads[0])
                        if (determined_[size_t(hl.var)]) {
                            determined_[size_t(hl.var)] = false;
                            changed = true;
                        }
                }
        }
    }

    // Relevance digraph parents: causal parents plus, for every observable or
    // constraint node y, an edge y -> z for each z causally relevant to y.
    void build_relevance_edges() {
        rel_parents_ = parents_;
        for (int y = 0; y < n_; ++y) {
            if (!is_observation_like(y)) continue;
            for (int z : ancestors(parents_, y)) {
                if (z == y) continue;
                auto& v = rel_parents_[size_t(z)];
                if (std::find(v.begin(), v.end(), y) == v.end()) v.push_back(y);
            }
        }
        for (auto& v : rel_parents_) std::sort(v.begin(), v.end());
    }

    const Problem* p_;
    int n_ = 0;
    std::vector<std::vector<int>> parents_;     // immediate causes
    std::vector<std::vector<int>> rel_parents_; // relevance digraph
    std::vector<bool> determined_;
};

} // namespace btrack
