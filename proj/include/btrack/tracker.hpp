#pragma once

#include <chrono>
#include <deque>
#include <optional>

#include "causal_graph.hpp"
#include "relation.hpp"
#include "rng.hpp"
#include "validate.hpp"

namespace btrack {

enum class Algorithm { Flat, Factored, Decoupled, Cbt, Beam };

inline const char* algorithm_name(Algorithm a) {
    switch (a) {
        case Algorithm::Flat: return "flat";
        case Algorithm::Factored: return "factored";
        case Algorithm::Decoupled: return "decoupled";
        case Algorithm::Cbt: return "cbt";
        case Algorithm::Beam: return "beam";
    }
    return "?";
}

inline std::optional<Algorithm> algorithm_from_name(const std::string& s) {
    for (Algorithm a : {Algorithm::Flat, Algorithm::Factored, Algorithm::Decoupled, Algorithm::Cbt, Algorithm::Beam})
        if (s == algorithm_name(a)) return a;
    return std::nullopt;
}

enum class Truth { KnownFalse, Unknown, KnownTrue };

// One step of a generalized execution: an action followed by a (possibly
// partial) observation given as a literal sequence. A full observation is the
// literal sequence of all observables; the literals after the first behave as
// if separated by NO-OP actions.
struct ExecStep {
    int action = -1;
    std::vector<std::pair<int, int>> obs; // (observable var, value index)
};

struct TrackerOptions {
    bool strict_preconditions = false;
    size_t max_tuples = 4u << 20;
    std::optional<uint64_t> worklist_seed; // randomize fixed-point order (tests)
    // Trackers for the same problem can share the folded initial constraint
    // join (single-threaded use only).
    std::shared_ptr<std::map<std::vector<int>, Relation>> shared_fold_cache;
};

namespace detail {

struct CompiledLit {
    int col;
    uint16_t value;
    bool positive;
};

inline bool row_sat(const uint16_t* r, const std::vector<CompiledLit>& lits) {
    for (const auto& l : lits) {
        bool eq = r[l.col] == l.value;
        if ((l.positive && !eq) || (!l.positive && eq)) return false;
    }
    return true;
}

struct EffectRow {
    std::vector<Literal> known_cond; // over determined vars
    std::vector<CompiledLit> cond;   // over beam columns
    std::vector<std::vector<std::pair<int, uint16_t>>> heads;
};

struct CompiledAction {
    std::vector<CompiledLit> pre; // in-beam precondition literals
    std::vector<EffectRow> rows;
    std::vector<int> refilter; // constraints whose scope this action can write
};

} // namespace detail

// Tracks beliefs for a validated problem with one of five algorithms. The
// problem must outlive the tracker. Determined variables are kept in a known
// assignment updated per action; beam relations range over the remaining
// variables of each beam.
class Tracker {
  public:
    Tracker(const Problem& p, Algorithm algo, TrackerOptions opt = {})
        : p_(&p), graph_(p), algo_(algo), opt_(opt) {
        scratch_.assign(p_->vars.size(), -1);
        const bool prof = std::getenv("BTRACK_PROF") != nullptr;
        auto t0 = std::chrono::steady_clock::now();
        auto lap = [&](const char* what) {
            if (!prof) return;
            auto t1 = std::chrono::steady_clock::now();
            fprintf(stderr, "[%s] %s %.3fs\n", algorithm_name(algo_), what,
                    std::chrono::duration<double>(t1 - t0).count());
            t0 = t1;
        };
        lap("graph");
        build_decomposition();
        lap("decomposition");
        build_known();
        compile_beams();
        lap("compile");
        compile_constraints();
        lap("constraints");
        init_beliefs();
        lap("init");
    }

    const Problem& problem() const { return *p_; }
    Algorithm algorithm() const { return algo_; }
    const CausalGraph& graph() const { return graph_; }
    size_t beam_count() const { return beams_.size(); }
    int beam_target(size_t i) const { return beams_[i].target; }
    bool beam_is_constraint(size_t i) const { return beams_[i].constraint_beam; }
    const std::vector<int>& beam_scope(size_t i) const { return beams_[i].scope; }
    const std::vector<int>& beam_full_scope(size_t i) const { return beams_[i].full_scope; }
    const Relation& beam_belief(size_t i) const { return beams_[i].belief; }
    int step_count() const { return step_; }

    int known_value(int var) const { return known_[size_t(var)]; }
    bool is_determined(int var) const { return graph_.is_determined(var); }

    int beam_index_of(int target) const {
        for (size_t b = 0; b < beams_.size(); ++b)
            if (beams_[b].target == target) return int(b);
        return -1;
    }

    void step(const ExecStep& s) {
        if (s.action < 0 || s.action >= int(p_->actions.size()))
            fail(Errc::inapplicable_action, "unknown action id");
        const Action& act = p_->actions[size_t(s.action)];

        if (opt_.strict_preconditions) {
            for (const auto& l : act.precondition)
                if (query_literal(l) != Truth::KnownTrue)
                    fail(Errc::inapplicable_action, act.name + ": precondition not known to hold");
        }
        for (const auto& l : act.precondition) {
            if (!graph_.is_determined(l.var)) continue;
            bool eq = known_[size_t(l.var)] == l.value;
            if (!(l.positive ? eq : !eq))
                fail(Errc::inapplicable_action, act.name + ": " + p_->literal_str(l) + " is false");
        }

        std::vector<int> new_known = advance_known(s.action);
        bool known_changed = new_known != known_;
        std::vector<bool> changed(beams_.size(), false);

        for (size_t b = 0; b < beams_.size(); ++b) {
            auto it = beams_[b].actions.find(s.action);
            if (it == beams_[b].actions.end()) continue;
            const auto& ca = it->second;
            if (!ca.pre.empty()) {
                Relation filtered = beams_[b].belief.filter(
                    [&](const uint16_t* r) { return detail::row_sat(r, ca.pre); });
                if (filtered.empty())
                    fail(Errc::inapplicable_action, act.name + ": precondition known false in beam " + beam_name(b));
                if (filtered.size() != beams_[b].belief.size()) {
                    beams_[b].belief = std::move(filtered);
                    changed[b] = true;
                }
            }
            if (!ca.rows.empty()) {
                Relation next = progress_beam(b, ca);
                if (next != beams_[b].belief) {
                    if (next.empty()) fail(Errc::impossible_execution, "progress emptied beam " + beam_name(b));
                    beams_[b].belief = std::move(next);
                    changed[b] = true;
                }
            }
        }
        known_ = std::move(new_known);

        for (size_t b = 0; b < beams_.size(); ++b) {
            auto it = beams_[b].actions.find(s.action);
            if (it != beams_[b].actions.end())
                for (int c : it->second.refilter)
                    if (filter_beam_by_formula(b, p_->constraints[size_t(c)].formula)) changed[b] = true;
            if (known_changed && constraints_dynamic_)
                for (int c : beams_[b].det_refilter)
                    if (filter_beam_by_formula(b, p_->constraints[size_t(c)].formula)) changed[b] = true;
            if (beams_[b].belief.empty())
                fail(Errc::impossible_execution, "state constraints emptied beam " + beam_name(b));
        }

        for (const auto& [y, v] : s.obs) {
            const SensorRule* rule = p_->sensor_rule(s.action, y, v);
            if (!rule)
                fail(Errc::sensor_model_bug, "no sensor rule for " + p_->vars[size_t(y)].name + " under " + act.name);
            for (int b : obs_overlap_[size_t(y)]) {
                if (filter_beam_by_formula(size_t(b), rule->formula)) changed[size_t(b)] = true;
                if (beams_[size_t(b)].belief.empty())
                    fail(Errc::impossible_execution,
                         "observation " + p_->literal_str(Literal{y, v, true}) + " emptied beam " + beam_name(size_t(b)));
            }
        }

        if (algo_ == Algorithm::Cbt)
            cbt_rebuild();
        else if (algo_ == Algorithm::Beam)
            beam_fixpoint(changed);

        for (size_t b = 0; b < beams_.size(); ++b)
            if (changed[b]) ++beams_[b].version;
        ++step_;
    }

    // ---- query layer -------------------------------------------------------

    Truth query_literal(const Literal& l) const {
        const Variable& v = p_->vars[size_t(l.var)];
        if (v.kind == VarKind::Defined) return query_defined(l);
        if (graph_.is_determined(l.var)) {
            bool eq = known_[size_t(l.var)] == l.value;
            return (l.positive ? eq : !eq) ? Truth::KnownTrue : Truth::KnownFalse;
        }
        if (var_beams_[size_t(l.var)].empty()) fail(Errc::unqueryable, v.name + " is in no beam");
        for (int b : var_beams_[size_t(l.var)]) {
            const auto& counts = beam_counts(size_t(b));
            int col = beams_[size_t(b)].belief.col_of(l.var);
            size_t n = beams_[size_t(b)].belief.size();
            if (n == 0) continue;
            size_t eq = counts[size_t(col)][size_t(l.value)];
            size_t sat = l.positive ? eq : n - eq;
            if (sat == n) return Truth::KnownTrue;
            if (sat == 0) return Truth::KnownFalse;
        }
        return Truth::Unknown;
    }

    bool is_applicable(int action) const {
        for (const auto& l : p_->actions[size_t(action)].precondition)
            if (query_literal(l) != Truth::KnownTrue) return false;
        return true;
    }

    bool goal_achieved() const {
        for (const auto& l : p_->goal)
            if (query_literal(l) != Truth::KnownTrue) return false;
        return true;
    }

    std::vector<int> possible_observations(int action, int observable) const {
        std::vector<int> out;
        for (size_t v = 0; v < p_->domain_size(observable); ++v) {
            const SensorRule* rule = p_->sensor_rule(action, observable, int(v));
            if (!rule) continue;
            int b = covering_beam(rule->formula, observable);
            if (b < 0) fail(Errc::unqueryable, "no beam covers sensor formula of " + p_->vars[size_t(observable)].name);
            if (formula_possible(size_t(b), rule->formula)) out.push_back(int(v));
        }
        return out;
    }

    // Fraction of tuples satisfying the literal, taken from the beam whose
    // estimate is farthest from 1/2; certainty (0 or 1) wins outright and ties
    // break toward the earlier beam.
    double marginal(const Literal& l) const {
        const Variable& v = p_->vars[size_t(l.var)];
        if (v.kind == VarKind::Defined) {
            double best = 0.5;
            bool found = false;
            for (size_t b = 0; b < beams_.size(); ++b) {
                if (!scope_covers(beams_[b].belief.scope, v.scope)) continue;
                double f = defined_fraction(b, l);
                found = true;
                if (std::abs(f - 0.5) > std::abs(best - 0.5)) best = f;
                if (best == 0.0 || best == 1.0) return best;
            }
            if (!found) fail(Errc::unqueryable, v.name + " definition scope covered by no beam");
            return best;
        }
        if (graph_.is_determined(l.var)) {
            bool eq = known_[size_t(l.var)] == l.value;
            return (l.positive ? eq : !eq) ? 1.0 : 0.0;
        }
        if (var_beams_[size_t(l.var)].empty()) fail(Errc::unqueryable, v.name + " is in no beam");
        double best = 0.5;
        for (int b : var_beams_[size_t(l.var)]) {
            const auto& counts = beam_counts(size_t(b));
            int col = beams_[size_t(b)].belief.col_of(l.var);
            size_t n = beams_[size_t(b)].belief.size();
            if (n == 0) continue;
            size_t eq = counts[size_t(col)][size_t(l.value)];
            double f = double(l.positive ? eq : n - eq) / double(n);
            if (f == 0.0 || f == 1.0) return f;
            if (std::abs(f - 0.5) > std::abs(best - 0.5)) best = f;
        }
        return best;
    }

    // ---- introspection ----------------------------------------------------

    void dump(std::ostream& os) const {
        for (size_t b = 0; b < beams_.size(); ++b) {
            os << "beam " << beam_name(b) << " [" << beams_[b].belief.size() << " tuples]\n";
            beams_[b].belief.dump(*p_, os);
        }
        os << "known:";
        for (size_t v = 0; v < known_.size(); ++v)
            if (known_[v] >= 0) os << ' ' << p_->vars[v].name << '=' << p_->vars[v].domain[size_t(known_[v])];
        os << '\n';
    }

    uint64_t belief_hash() const {
        uint64_t h = 1469598103934665603ULL;
        auto mix = [&](uint64_t x) {
            h ^= x;
            h *= 1099511628211ULL;
        };
        for (const auto& b : beams_) mix(b.belief.fingerprint());
        for (int v : known_) mix(uint64_t(v) + 7);
        return h;
    }

    size_t total_tuples() const {
        size_t n = 0;
        for (const auto& b : beams_) n += b.belief.size();
        return n;
    }

    std::string beam_name(size_t b) const {
        int t = beams_[b].target;
        if (t < 0) return "<flat>";
        if (t >= int(p_->vars.size())) return "<constraint#" + std::to_string(t - int(p_->vars.size())) + ">";
        return p_->vars[size_t(t)].name;
    }

  private:
    struct Beam {
        int target = -1;
        bool constraint_beam = false;
        std::vector<int> full_scope; // including determined vars
        std::vector<int> scope;      // tracked (non-determined) vars
        Relation belief;
        std::map<int, detail::CompiledAction> actions;
        std::vector<int> constraints;   // constraint ids overlapping scope
        std::vector<int> det_refilter;  // constraints mentioning determined vars
        uint64_t version = 0;
        mutable std::vector<std::vector<uint32_t>> counts;
        mutable uint64_t counts_version = ~0ull;
    };

    struct DetEffect {
        std::vector<Literal> cond;
        std::vector<std::pair<int, int>> writes;
    };

    struct Pair {
        int dst, src;
        std::vector<int> constraints; // enforced on the joint scope
    };

    struct CbtClass {
        std::vector<int> members;     // beam indices
        std::vector<int> constraints; // covered constraint ids
    };

    // ---- construction ------------------------------------------------------

    void build_decomposition() {
        Decomposition d;
        if (algo_ == Algorithm::Flat) {
            Beam b;
            b.target = -1;
            for (int v : p_->state_vars()) {
                b.full_scope.push_back(v);
                if (!graph_.is_determined(v)) b.scope.push_back(v);
            }
            beams_.push_back(std::move(b));
        } else {
            d = algo_ == Algorithm::Factored ? graph_.factored_decomposition() : graph_.causal_decomposition();
            for (size_t i = 0; i < d.targets.size(); ++i) {
                Beam b;
                b.target = d.targets[i];
                b.constraint_beam = d.constraint_target[i];
                b.full_scope = d.beams[i];
                for (int v : b.full_scope)
                    if (!graph_.is_determined(v)) b.scope.push_back(v);
                beams_.push_back(std::move(b));
            }
        }
        var_beams_.assign(p_->vars.size(), {});
        for (size_t b = 0; b < beams_.size(); ++b)
            for (int v : beams_[b].scope) var_beams_[size_t(v)].push_back(int(b));
    }

    void build_known() {
        known_.assign(p_->vars.size(), -1);
        for (const auto& clause : p_->initial) {
            if (clause.size() != 1 || !clause[0].positive) continue;
            if (graph_.is_determined(clause[0].var)) known_[size_t(clause[0].var)] = clause[0].value;
        }
        for (size_t v = 0; v < p_->vars.size(); ++v)
            if (graph_.is_determined(int(v)) && known_[v] < 0)
                fail(Errc::inconsistent_initial_state, "determined variable without initial value: " + p_->vars[v].name);

        for (size_t a = 0; a < p_->actions.size(); ++a) {
            std::vector<DetEffect> des;
            for (const auto& eff : p_->actions[a].effects) {
                if (!eff.deterministic()) continue;
                DetEffect de;
                bool det_head = false;
                for (const auto& l : eff.heads[0])
                    if (graph_.is_determined(l.var)) {
                        det_head = true;
                        de.writes.emplace_back(l.var, l.value);
                    }
                if (!det_head) continue;
                de.cond = eff.condition;
                des.push_back(std::move(de));
            }
            if (!des.empty()) det_effects_[int(a)] = std::move(des);
        }
    }

    std::vector<int> advance_known(int action) const {
        auto it = det_effects_.find(action);
        if (it == det_effects_.end()) return known_;
        std::vector<int> nk = known_;
        std::vector<bool> written(known_.size(), false);
        for (const auto& de : it->second) {
            bool fire = true;
            for (const auto& l : de.cond) {
                bool eq = known_[size_t(l.var)] == l.value;
                if (!(l.positive ? eq : !eq)) {
                    fire = false;
                    break;
                }
            }
            if (!fire) continue;
            for (const auto& [var, val] : de.writes) {
                if (written[size_t(var)] && nk[size_t(var)] != val)
                    fail(Errc::inconsistent_effect,
                         "conflicting deterministic writes to " + p_->vars[size_t(var)].name);
                written[size_t(var)] = true;
                nk[size_t(var)] = val;
            }
        }
        return nk;
    }

    void compile_beams() {
        for (auto& b : beams_) {
            std::vector<int> col_of(p_->vars.size(), -1);
            for (size_t c = 0; c < b.scope.size(); ++c) col_of[size_t(b.scope[c])] = int(c);
            std::vector<bool> in_full(p_->vars.size(), false);
            for (int v : b.full_scope) in_full[size_t(v)] = true;

            for (size_t a = 0; a < p_->actions.size(); ++a) {
                detail::CompiledAction ca;
                for (const auto& l : p_->actions[a].precondition)
                    if (col_of[size_t(l.var)] >= 0)
                        ca.pre.push_back({col_of[size_t(l.var)], uint16_t(l.value), l.positive});
                for (const auto& eff : p_->actions[a].effects) {
                    detail::EffectRow row;
                    bool any_head = false;
                    for (const auto& h : eff.heads) {
                        std::vector<std::pair<int, uint16_t>> writes;
                        for (const auto& l : h)
                            if (col_of[size_t(l.var)] >= 0) writes.emplace_back(col_of[size_t(l.var)], uint16_t(l.value));
                        if (!writes.empty()) {
                            row.heads.push_back(std::move(writes));
                            any_head = true;
                        }
                    }
                    if (!any_head) continue;
                    bool sat = true;
                    std::set<int> cond_vars;
                    for (const auto& l : eff.condition) cond_vars.insert(l.var);
                    for (int cv : cond_vars) {
                        auto vals = allowed_values(*p_, eff.condition, cv);
                        if (vals && vals->empty()) sat = false;
                    }
                    if (!sat) continue;
                    for (const auto& l : eff.condition) {
                        if (graph_.is_determined(l.var))
                            row.known_cond.push_back(l);
                        else if (col_of[size_t(l.var)] >= 0)
                            row.cond.push_back({col_of[size_t(l.var)], uint16_t(l.value), l.positive});
                        // out-of-scope condition literals are projected away
                    }
                    ca.rows.push_back(std::move(row));
                }
                if (!ca.pre.empty() || !ca.rows.empty()) b.actions[int(a)] = std::move(ca);
            }
        }

        obs_overlap_.assign(p_->vars.size(), {});
        for (size_t y = 0; y < p_->vars.size(); ++y) {
            if (p_->vars[y].kind != VarKind::Observable) continue;
            std::set<int> union_scope;
            for (const auto& r : p_->sensors)
                if (r.observable == int(y))
                    for (int v : r.formula.scope()) union_scope.insert(v);
            std::set<int> bs;
            for (int v : union_scope)
                if (!graph_.is_determined(v))
                    for (int b : var_beams_[size_t(v)]) bs.insert(b);
            obs_overlap_[y].assign(bs.begin(), bs.end());
        }
    }

    void compile_constraints() {
        constraints_dynamic_ = false;
        for (const auto& c : p_->constraints)
            for (int v : c.scope)
                if (graph_.is_determined(v)) constraints_dynamic_ = true;

        for (size_t b = 0; b < beams_.size(); ++b) {
            for (size_t c = 0; c < p_->constraints.size(); ++c) {
                bool overlap = false;
                for (int v : p_->constraints[c].scope)
                    if (std::binary_search(beams_[b].scope.begin(), beams_[b].scope.end(), v)) {
                        overlap = true;
                        break;
                    }
                if (overlap) beams_[b].constraints.push_back(int(c));
            }
            // constraints only need re-checking after an action that writes
            // into their scope (or moves a determined variable they mention)
            for (auto& [a, ca] : beams_[b].actions) {
                std::set<int> written;
                for (const auto& row : ca.rows)
                    for (const auto& head : row.heads)
                        for (const auto& [col, val] : head) written.insert(beams_[b].scope[size_t(col)]);
                for (int c : beams_[b].constraints)
                    for (int v : p_->constraints[size_t(c)].scope)
                        if (written.count(v)) {
                            ca.refilter.push_back(c);
                            break;
                        }
            }
            for (int c : beams_[b].constraints)
                for (int v : p_->constraints[size_t(c)].scope)
                    if (graph_.is_determined(v)) {
                        beams_[b].det_refilter.push_back(c);
                        break;
                    }
        }
    }

    void init_beliefs() {
        std::map<int, int> pins;
        for (const auto& clause : p_->initial)
            if (clause.size() == 1 && clause[0].positive && !graph_.is_determined(clause[0].var))
                pins[clause[0].var] = clause[0].value;
        std::map<int, std::vector<int>> restricted; // var -> allowed values (from != literals)
        for (const auto& clause : p_->initial) {
            if (clause.size() != 1 || clause[0].positive || graph_.is_determined(clause[0].var)) continue;
            auto vals = allowed_values(*p_, {clause[0]}, clause[0].var);
            restricted[clause[0].var] = *vals;
        }

        // The causal and factored algorithms initialize each beam to the
        // projection of the global initial belief. When every constraint is
        // compilable that projection comes straight from the folded
        // constraint join; otherwise the consistency phase below repairs the
        // locally initialized beams.
        const Relation* gfold = nullptr;
        Relation gfold_storage;
        bool init_exact = false;
        if (algo_ == Algorithm::Cbt || algo_ == Algorithm::Factored) {
            std::vector<int> all_cids = foldable_constraints();
            bool all_foldable = true;
            {
                std::set<int> have(all_cids.begin(), all_cids.end());
                for (size_t ci = 0; ci < p_->constraints.size(); ++ci) {
                    bool nd_empty = true;
                    for (int v : p_->constraints[ci].scope)
                        if (!graph_.is_determined(v)) nd_empty = false;
                    if (!nd_empty && !have.count(int(ci))) all_foldable = false;
                }
            }
            if (all_cids.empty() && all_foldable) {
                init_exact = true;
            } else if (all_foldable) {
                try {
                    gfold_storage = fold_relations(all_cids);
                    gfold = &gfold_storage;
                    init_exact = true;
                } catch (const Error& e) {
                    if (e.code() != Errc::capacity_exceeded) throw;
                }
            }
        }

        for (size_t b = 0; b < beams_.size(); ++b) {
            std::vector<int> folded;
            beams_[b].belief = init_beam_relation(beams_[b].scope, pins, restricted, gfold, &folded);
            // constraints whose scope lies inside the beam and were not part
            // of the fold (e.g. wide count constraints) still filter here
            for (int c : beams_[b].constraints) {
                if (gfold == nullptr && std::binary_search(folded.begin(), folded.end(), c)) continue;
                std::vector<int> nd;
                for (int v : p_->constraints[size_t(c)].scope)
                    if (!graph_.is_determined(v)) nd.push_back(v);
                if (gfold && scope_covers(gfold->scope, nd)) continue;
                if (!scope_covers(beams_[b].scope, nd)) continue;
                filter_beam_by_formula(b, p_->constraints[size_t(c)].formula);
            }
            if (beams_[b].belief.empty() && !beams_[b].scope.empty())
                fail(Errc::inconsistent_initial_state, "empty initial belief in beam " + beam_name(b));
        }

        try {
            if (algo_ == Algorithm::Cbt) {
                build_cbt_classes();
                if (!init_exact) cbt_rebuild();
            } else if (algo_ == Algorithm::Beam) {
                build_pairs();
                std::vector<bool> all(beams_.size(), true);
                beam_fixpoint(all);
            }
        } catch (const Error& e) {
            if (e.code() == Errc::impossible_execution)
                fail(Errc::inconsistent_initial_state, "initial beliefs are jointly inconsistent");
            throw;
        }
        for (const auto& b : beams_)
            if (b.belief.empty() && !b.scope.empty())
                fail(Errc::inconsistent_initial_state, "empty initial belief in beam");
    }

    // Constraints whose relation is materializable: small scopes, plus count
    // constraints with a direct combinatorial construction. Restricted to
    // those inside `scope` when given.
    std::vector<int> foldable_constraints(const std::vector<int>* scope = nullptr) const {
        std::vector<int> out;
        for (size_t ci = 0; ci < p_->constraints.size(); ++ci) {
            const auto& c = p_->constraints[ci];
            bool inside = true;
            std::vector<int> nd_scope;
            for (int v : c.scope) {
                if (graph_.is_determined(v)) continue;
                if (scope && !std::binary_search(scope->begin(), scope->end(), v)) inside = false;
                nd_scope.push_back(v);
            }
            if (!inside || nd_scope.empty()) continue;
            size_t prod = 1;
            bool small = true;
            for (int v : nd_scope) {
                prod *= p_->domain_size(v);
                if (prod > (1u << 18)) {
                    small = false;
                    break;
                }
            }
            bool is_count = c.formula.kind == Formula::Kind::CountTrue && nd_scope.size() == c.scope.size() &&
                            nd_scope.size() <= 64;
            if (small || is_count) out.push_back(int(ci));
        }
        return out;
    }

    // Fold of the given constraint relations, shared across trackers of the
    // same problem when a shared cache is configured.
    const Relation& fold_relations(const std::vector<int>& cids) {
        auto& cache = opt_.shared_fold_cache ? *opt_.shared_fold_cache : init_join_cache_;
        auto it = cache.find(cids);
        if (it == cache.end()) {
            std::vector<Relation> crels;
            std::vector<int> union_scope;
            for (int ci : cids) {
                crels.push_back(constraint_relation(ci));
                for (int v : crels.back().scope) union_scope.push_back(v);
            }
            std::sort(union_scope.begin(), union_scope.end());
            union_scope.erase(std::unique(union_scope.begin(), union_scope.end()), union_scope.end());
            Relation folded = join_all(std::move(crels), union_scope);
            it = cache.emplace(cids, std::move(folded)).first;
        }
        return it->second;
    }

    Relation init_beam_relation(const std::vector<int>& scope, const std::map<int, int>& pins,
                                const std::map<int, std::vector<int>>& restricted,
                                const Relation* global_fold, std::vector<int>* used_cids) {
        // join constraint relations fully inside the scope (or project the
        // global fold when available), then expand the remaining variables
        std::vector<Relation> pool;
        std::vector<bool> covered(p_->vars.size(), false);
        if (global_fold) {
            std::vector<int> inter;
            for (int v : scope)
                if (std::binary_search(global_fold->scope.begin(), global_fold->scope.end(), v)) inter.push_back(v);
            if (!inter.empty()) {
                pool.push_back(global_fold->project(inter));
                for (int v : inter) covered[size_t(v)] = true;
            }
            if (used_cids) used_cids->clear();
        } else {
            std::vector<int> cids = foldable_constraints(&scope);
            if (used_cids) *used_cids = cids;
            if (!cids.empty()) {
                pool.push_back(fold_relations(cids));
                for (int v : pool.back().scope) covered[size_t(v)] = true;
            }
        }
        for (int v : scope) {
            if (covered[size_t(v)] && !pins.count(v) && !restricted.count(v)) continue;
            auto pin = pins.find(v);
            Relation r;
            r.scope = {v};
            if (pin != pins.end()) {
                uint16_t val = uint16_t(pin->second);
                r.push_row(&val);
            } else {
                auto res = restricted.find(v);
                if (res != restricted.end()) {
                    for (int val : res->second) {
                        uint16_t u = uint16_t(val);
                        r.push_row(&u);
                    }
                } else {
                    for (size_t val = 0; val < p_->domain_size(v); ++val) {
                        uint16_t u = uint16_t(val);
                        r.push_row(&u);
                    }
                }
            }
            pool.push_back(std::move(r));
        }
        return join_all(std::move(pool), scope);
    }

    // compile a constraint formula over its non-determined scope, substituting
    // known values for determined variables
    Relation compile_constrained(const Formula& f, const std::vector<int>& nd_scope) {
        Relation base = Relation::full(*p_, nd_scope, {}, opt_.max_tuples);
        std::vector<int>& assign = scratch_init_;
        assign.assign(p_->vars.size(), -1);
        for (size_t v = 0; v < known_.size(); ++v) assign[v] = graph_.is_determined(int(v)) ? known_[v] : -1;
        return base.filter([&](const uint16_t* r) {
            for (size_t c = 0; c < nd_scope.size(); ++c) assign[size_t(nd_scope[c])] = r[c];
            bool ok = eval_formula(f, assign);
            for (int v : nd_scope) assign[size_t(v)] = -1;
            return ok;
        });
    }

    // Greedy connected fold-join of a pool of relations projected onto scope.
    // Relations sharing variables with the accumulator join first (smallest
    // first); when nothing connects, the widest relation seeds the next
    // component, which keeps blind cross products of narrow relations rare.
    Relation join_all(std::vector<Relation> pool, const std::vector<int>& final_scope) {
        if (pool.empty()) {
            Relation r;
            r.scope = final_scope;
            std::sort(r.scope.begin(), r.scope.end());
            r.nrows = r.scope.empty() ? 1 : 0;
            return r;
        }
        std::vector<bool> used(pool.size(), false);
        auto widest = [&]() {
            size_t best = pool.size();
            for (size_t i = 0; i < pool.size(); ++i) {
                if (used[i]) continue;
                if (best == pool.size() || pool[i].width() > pool[best].width() ||
                    (pool[i].width() == pool[best].width() && pool[i].size() < pool[best].size()))
                    best = i;
            }
            return best;
        };
        size_t start = widest();
        Relation acc = std::move(pool[start]);
        used[start] = true;
        for (size_t done = 1; done < pool.size(); ++done) {
            // prefer relations introducing the fewest new variables (scope-
            // contained ones only shrink the accumulator), then the largest
            // overlap, then the lowest variable index: on grid-structured
            // problems this sweeps a compact frontier instead of fragmenting
            size_t best = pool.size();
            long best_new = 0, best_shared = 0;
            int best_minvar = 0;
            for (size_t i = 0; i < pool.size(); ++i) {
                if (used[i]) continue;
                long shared = 0;
                for (int v : pool[i].scope)
                    if (std::binary_search(acc.scope.begin(), acc.scope.end(), v)) ++shared;
                if (shared == 0) continue;
                long nnew = long(pool[i].width()) - shared;
                int minvar = pool[i].scope.empty() ? 0 : pool[i].scope.front();
                bool better = best == pool.size() || nnew < best_new ||
                              (nnew == best_new &&
                               (shared > best_shared || (shared == best_shared && minvar < best_minvar)));
                if (better) {
                    best = i;
                    best_new = nnew;
                    best_shared = shared;
                    best_minvar = minvar;
                }
            }
            if (best == pool.size()) best = widest(); // disconnected: cross product
            if (std::getenv("BTRACK_JOIN_DEBUG")) {
                auto tj = std::chrono::steady_clock::now();
                acc = Relation::join(acc, pool[best], opt_.max_tuples, /*sort_output=*/false);
                fprintf(stderr, "join +%zux%zu -> %zux%zu %.1fms\n", pool[best].width(), pool[best].size(),
                        acc.width(), acc.size(),
                        1e3 * std::chrono::duration<double>(std::chrono::steady_clock::now() - tj).count());
            } else {
                acc = Relation::join(acc, pool[best], opt_.max_tuples, /*sort_output=*/false);
            }
            used[best] = true;
        }
        std::vector<int> sorted_scope = final_scope;
        std::sort(sorted_scope.begin(), sorted_scope.end());
        if (acc.scope != sorted_scope)
            acc = acc.project(sorted_scope);
        else
            acc.canonicalize();
        return acc;
    }

    // ---- per-beam dynamics -------------------------------------------------

    Relation progress_beam(size_t b, const detail::CompiledAction& ca) {
        const Relation& rel = beams_[b].belief;
        std::vector<const detail::EffectRow*> active;
        for (const auto& row : ca.rows) {
            bool fire = true;
            for (const auto& l : row.known_cond) {
                bool eq = known_[size_t(l.var)] == l.value;
                if (!(l.positive ? eq : !eq)) {
                    fire = false;
                    break;
                }
            }
            if (fire) active.push_back(&row);
        }
        if (active.empty()) return rel;

        Relation out;
        out.scope = rel.scope;
        const size_t w = rel.width();
        std::vector<uint16_t> base(w), tup(w);
        std::vector<int8_t> written(w), wr(w);
        std::vector<const detail::EffectRow*> fired_nondet;
        std::vector<std::pair<int, uint16_t>> det_writes;
        for (size_t i = 0; i < rel.size(); ++i) {
            const uint16_t* r = rel.row(i);
            det_writes.clear();
            fired_nondet.clear();
            for (const auto* row : active) {
                if (!detail::row_sat(r, row->cond)) continue;
                if (row->heads.size() == 1)
                    det_writes.insert(det_writes.end(), row->heads[0].begin(), row->heads[0].end());
                else
                    fired_nondet.push_back(row);
            }
            std::copy(r, r + w, base.begin());
            std::fill(written.begin(), written.end(), int8_t(0));
            for (const auto& [col, val] : det_writes) {
                if (written[size_t(col)] && base[size_t(col)] != val)
                    fail(Errc::inconsistent_effect, "conflicting deterministic heads on " +
                                                        p_->vars[size_t(rel.scope[size_t(col)])].name);
                written[size_t(col)] = 1;
                base[size_t(col)] = val;
            }
            if (fired_nondet.empty()) {
                out.push_row(base.data());
            } else {
                size_t combos = 1;
                for (const auto* e : fired_nondet) combos *= e->heads.size();
                size_t emitted = 0;
                for (size_t n = 0; n < combos; ++n) {
                    tup = base;
                    wr = written;
                    size_t rem = n;
                    bool ok = true;
                    for (const auto* e : fired_nondet) {
                        const auto& head = e->heads[rem % e->heads.size()];
                        rem /= e->heads.size();
                        for (const auto& [col, val] : head) {
                            if (wr[size_t(col)] && tup[size_t(col)] != val) {
                                ok = false;
                                break;
                            }
                            wr[size_t(col)] = 1;
                            tup[size_t(col)] = val;
                        }
                        if (!ok) break;
                    }
                    if (!ok) continue;
                    out.push_row(tup.data());
                    ++emitted;
                }
                if (emitted == 0) fail(Errc::inconsistent_effect, "all non-deterministic outcomes conflict");
            }
            if (out.size() > opt_.max_tuples) fail(Errc::capacity_exceeded, "belief exceeds tuple budget");
        }
        out.canonicalize();
        return out;
    }

    // Filters a beam by a formula under projection semantics: a tuple stays if
    // it extends to a model over the formula's variables, with determined
    // variables bound to their known values. Returns true if rows dropped.
    bool filter_beam_by_formula(size_t b, const Formula& f) {
        Relation& rel = beams_[b].belief;
        std::vector<int> fscope = f.scope();
        std::vector<int> in_cols, out_vars;
        bool any_in = false;
        for (int v : fscope) {
            if (graph_.is_determined(v)) continue;
            int col = rel.col_of(v);
            if (col >= 0) {
                in_cols.push_back(col);
                any_in = true;
            } else
                out_vars.push_back(v);
        }

        // pure count constraint: arithmetic feasibility instead of enumeration
        if (f.kind == Formula::Kind::CountTrue) {
            size_t free_out = 0;
            int fixed_true = 0;
            for (int v : f.vars) {
                if (graph_.is_determined(v)) {
                    if (known_[size_t(v)] == 1) ++fixed_true;
                } else if (rel.col_of(v) < 0)
                    ++free_out;
            }
            std::vector<int> cols;
            for (int v : f.vars) {
                int c = rel.col_of(v);
                if (c >= 0 && !graph_.is_determined(v)) cols.push_back(c);
            }
            Relation next = rel.filter([&](const uint16_t* r) {
                int t = fixed_true;
                for (int c : cols) t += r[c] == 1;
                return t <= f.count && size_t(f.count - t) <= free_out;
            });
            if (next.size() == rel.size()) return false;
            rel = std::move(next);
            return true;
        }
        if (!any_in && f.kind != Formula::Kind::False) return false;

        size_t exists_total = 1;
        for (int v : out_vars) {
            exists_total *= p_->domain_size(v);
            if (exists_total > (1u << 16))
                fail(Errc::capacity_exceeded, "existential filter scope too large");
        }
        std::vector<int>& assign = scratch_;
        for (size_t v = 0; v < known_.size(); ++v)
            if (graph_.is_determined(int(v))) assign[v] = known_[v];
        const auto& scope = rel.scope;
        Relation next = rel.filter([&](const uint16_t* r) {
            for (size_t c = 0; c < scope.size(); ++c) assign[size_t(scope[c])] = r[c];
            bool ok;
            if (out_vars.empty()) {
                ok = eval_formula(f, assign);
            } else {
                ok = false;
                std::vector<size_t> odo(out_vars.size(), 0);
                for (size_t n = 0; n < exists_total && !ok; ++n) {
                    for (size_t c = 0; c < out_vars.size(); ++c) assign[size_t(out_vars[c])] = int(odo[c]);
                    ok = eval_formula(f, assign);
                    for (size_t c = out_vars.size(); c-- > 0;) {
                        if (++odo[c] < p_->domain_size(out_vars[c])) break;
                        odo[c] = 0;
                    }
                }
                for (int v : out_vars) assign[size_t(v)] = -1;
            }
            return ok;
        });
        for (size_t c = 0; c < scope.size(); ++c) assign[size_t(scope[c])] = -1;
        bool changed = next.size() != rel.size();
        if (changed) rel = std::move(next);
        return changed;
    }

    bool formula_possible(size_t b, const Formula& f) const {
        const Relation& rel = beams_[b].belief;
        std::vector<int> fscope = f.scope();
        std::vector<int> out_vars;
        for (int v : fscope)
            if (!graph_.is_determined(v) && rel.col_of(v) < 0) out_vars.push_back(v);
        size_t exists_total = 1;
        for (int v : out_vars) {
            exists_total *= p_->domain_size(v);
            if (exists_total > (1u << 16)) fail(Errc::capacity_exceeded, "existential check too large");
        }
        std::vector<int> assign(p_->vars.size(), -1);
        for (size_t v = 0; v < known_.size(); ++v)
            if (graph_.is_determined(int(v))) assign[v] = known_[v];
        for (size_t i = 0; i < rel.size(); ++i) {
            const uint16_t* r = rel.row(i);
            for (size_t c = 0; c < rel.scope.size(); ++c) assign[size_t(rel.scope[c])] = r[c];
            if (out_vars.empty()) {
                if (eval_formula(f, assign)) return true;
            } else {
                std::vector<size_t> odo(out_vars.size(), 0);
                for (size_t n = 0; n < exists_total; ++n) {
                    for (size_t c = 0; c < out_vars.size(); ++c) assign[size_t(out_vars[c])] = int(odo[c]);
                    if (eval_formula(f, assign)) return true;
                    for (size_t c = out_vars.size(); c-- > 0;) {
                        if (++odo[c] < p_->domain_size(out_vars[c])) break;
                        odo[c] = 0;
                    }
                }
            }
        }
        return false;
    }

    int covering_beam(const Formula& f, int preferred_target) const {
        for (size_t b = 0; b < beams_.size(); ++b)
            if (beams_[b].target == preferred_target) return int(b);
        std::vector<int> nd;
        for (int v : f.scope())
            if (!graph_.is_determined(v)) nd.push_back(v);
        for (size_t b = 0; b < beams_.size(); ++b)
            if (scope_covers(beams_[b].belief.scope, nd)) return int(b);
        return beams_.empty() ? -1 : 0;
    }

    static bool scope_covers(const std::vector<int>& scope, const std::vector<int>& vars) {
        for (int v : vars)
            if (!std::binary_search(scope.begin(), scope.end(), v)) return false;
        return true;
    }

    // ---- CBT ----------------------------------------------------------------

    void build_cbt_classes() {
        std::map<std::vector<int>, std::vector<int>> groups; // member list -> beams
        for (size_t b = 0; b < beams_.size(); ++b) {
            std::vector<int> rel = graph_.relevant(beams_[b].target);
            std::vector<int> members;
            for (size_t o = 0; o < beams_.size(); ++o)
                if (std::binary_search(rel.begin(), rel.end(), beams_[o].target)) members.push_back(int(o));
            groups[members].push_back(int(b));
        }
        for (auto& [members, who] : groups) {
            CbtClass cls;
            cls.members = members;
            std::vector<int> union_scope;
            for (int m : members)
                union_scope.insert(union_scope.end(), beams_[size_t(m)].scope.begin(), beams_[size_t(m)].scope.end());
            std::sort(union_scope.begin(), union_scope.end());
            union_scope.erase(std::unique(union_scope.begin(), union_scope.end()), union_scope.end());
            for (size_t c = 0; c < p_->constraints.size(); ++c) {
                std::vector<int> nd;
                for (int v : p_->constraints[c].scope)
                    if (!graph_.is_determined(v)) nd.push_back(v);
                if (nd.empty() || !scope_covers(union_scope, nd)) continue;
                // a member beam containing the whole constraint already
                // enforces it inside its own belief
                bool inside_member = false;
                for (int m : members)
                    if (scope_covers(beams_[size_t(m)].scope, nd)) {
                        inside_member = true;
                        break;
                    }
                if (inside_member) continue;
                size_t prod = 1;
                bool compilable = true;
                for (int v : nd) {
                    prod *= p_->domain_size(v);
                    if (prod > (1u << 18)) {
                        compilable = false;
                        break;
                    }
                }
                if (!compilable)
                    compilable = p_->constraints[c].formula.kind == Formula::Kind::CountTrue && nd.size() <= 64;
                if (compilable) cls.constraints.push_back(int(c));
            }
            // the beams this class recomputes are exactly `who`, but the join
            // ranges over `members`
            cbt_classes_.push_back({std::move(cls), who});
        }
    }

    const Relation& constraint_relation(int c) {
        auto it = constraint_rel_cache_.find(c);
        if (it != constraint_rel_cache_.end() && !constraints_dynamic_) return it->second;
        std::vector<int> nd;
        for (int v : p_->constraints[size_t(c)].scope)
            if (!graph_.is_determined(v)) nd.push_back(v);
        bool has_det = nd.size() != p_->constraints[size_t(c)].scope.size();
        Relation rel;
        if (p_->constraints[size_t(c)].formula.kind == Formula::Kind::CountTrue && !has_det)
            rel = compile_formula(*p_, p_->constraints[size_t(c)].formula, nd, opt_.max_tuples);
        else
            rel = compile_constrained(p_->constraints[size_t(c)].formula, nd);
        auto [pos, _] = constraint_rel_cache_.insert_or_assign(c, std::move(rel));
        return pos->second;
    }

    void cbt_rebuild() {
        for (auto& [cls, who] : cbt_classes_) {
            std::vector<Relation> pool;
            for (int m : cls.members) pool.push_back(beams_[size_t(m)].belief);
            for (int c : cls.constraints) pool.push_back(constraint_relation(c));
            std::vector<int> union_scope;
            for (const auto& r : pool)
                union_scope.insert(union_scope.end(), r.scope.begin(), r.scope.end());
            std::sort(union_scope.begin(), union_scope.end());
            union_scope.erase(std::unique(union_scope.begin(), union_scope.end()), union_scope.end());
            Relation joined = join_all(std::move(pool), union_scope);
            if (joined.empty() && !union_scope.empty())
                fail(Errc::impossible_execution, "consistency join is empty");
            for (int b : who) {
                Relation nb = joined.project(beams_[size_t(b)].scope);
                if (nb != beams_[size_t(b)].belief) {
                    beams_[size_t(b)].belief = std::move(nb);
                    ++beams_[size_t(b)].version;
                }
            }
        }
    }

    // ---- beam tracking fixed point -----------------------------------------

    void build_pairs() {
        std::set<std::pair<int, int>> seen;
        for (size_t v = 0; v < var_beams_.size(); ++v) {
            const auto& bs = var_beams_[v];
            for (size_t i = 0; i < bs.size(); ++i)
                for (size_t j = i + 1; j < bs.size(); ++j) seen.insert({bs[i], bs[j]});
        }
        // beams linked only through a jointly covered constraint
        std::vector<std::vector<int>> touching(p_->constraints.size());
        for (size_t c = 0; c < p_->constraints.size(); ++c) {
            for (size_t b = 0; b < beams_.size(); ++b)
                for (int v : p_->constraints[c].scope)
                    if (!graph_.is_determined(v) &&
                        std::binary_search(beams_[b].scope.begin(), beams_[b].scope.end(), v)) {
                        touching[c].push_back(int(b));
                        break;
                    }
        }
        std::map<std::pair<int, int>, std::vector<int>> pair_constraints;
        for (size_t c = 0; c < p_->constraints.size(); ++c) {
            std::vector<int> nd;
            for (int v : p_->constraints[c].scope)
                if (!graph_.is_determined(v)) nd.push_back(v);
            if (nd.empty()) continue;
            // a beam containing the whole constraint mediates it through
            // ordinary shared-variable arcs
            bool inside_beam = false;
            for (size_t b = 0; b < beams_.size() && !inside_beam; ++b)
                inside_beam = scope_covers(beams_[b].scope, nd);
            if (inside_beam) continue;
            for (size_t i = 0; i < touching[c].size(); ++i)
                for (size_t j = i + 1; j < touching[c].size(); ++j) {
                    int bi = touching[c][i], bj = touching[c][j];
                    // covered by the united scopes, not by either side alone
                    std::vector<int> uni;
                    std::set_union(beams_[size_t(bi)].scope.begin(), beams_[size_t(bi)].scope.end(),
                                   beams_[size_t(bj)].scope.begin(), beams_[size_t(bj)].scope.end(),
                                   std::back_inserter(uni));
                    if (!scope_covers(uni, nd)) continue;
                    if (scope_covers(beams_[size_t(bi)].scope, nd) || scope_covers(beams_[size_t(bj)].scope, nd))
                        continue; // already enforced inside one beam
                    pair_constraints[{bi, bj}].push_back(int(c));
                    seen.insert({bi, bj});
                }
        }
        for (const auto& [i, j] : seen) {
            std::vector<int> cs;
            auto it = pair_constraints.find({i, j});
            if (it != pair_constraints.end()) cs = it->second;
            pairs_.push_back({i, j, cs});
            pairs_.push_back({j, i, std::move(cs)});
        }
        pairs_by_src_.assign(beams_.size(), {});
        pairs_by_dst_.assign(beams_.size(), {});
        for (size_t k = 0; k < pairs_.size(); ++k) {
            pairs_by_src_[size_t(pairs_[k].src)].push_back(int(k));
            pairs_by_dst_[size_t(pairs_[k].dst)].push_back(int(k));
        }
    }

    void beam_fixpoint(const std::vector<bool>& dirty) {
        std::deque<int> queue;
        std::vector<bool> queued(pairs_.size(), false);
        auto enqueue = [&](int k) {
            if (!queued[size_t(k)]) {
                queued[size_t(k)] = true;
                queue.push_back(k);
            }
        };
        for (size_t b = 0; b < beams_.size(); ++b)
            if (dirty[b]) {
                for (int k : pairs_by_src_[b]) enqueue(k);
                for (int k : pairs_by_dst_[b]) enqueue(k);
            }

        std::optional<Rng> rng;
        if (opt_.worklist_seed) rng.emplace(*opt_.worklist_seed);

        while (!queue.empty()) {
            size_t pick = 0;
            if (rng) pick = size_t(rng->below(queue.size()));
            int k = queue[pick];
            queue.erase(queue.begin() + long(pick));
            queued[size_t(k)] = false;
            const Pair& pr = pairs_[size_t(k)];
            if (pair_update(pr)) {
                if (beams_[size_t(pr.dst)].belief.empty())
                    fail(Errc::impossible_execution, "fixed point emptied beam " + beam_name(size_t(pr.dst)));
                for (int kk : pairs_by_src_[size_t(pr.dst)]) enqueue(kk);
                ++beams_[size_t(pr.dst)].version;
            }
        }
    }

    // b_dst := project(b_dst join b_src join C, scope(dst)); returns true if rows dropped
    bool pair_update(const Pair& pr) {
        Beam& dst = beams_[size_t(pr.dst)];
        const Beam& src = beams_[size_t(pr.src)];
        if (pr.constraints.empty()) {
            Relation next = Relation::semijoin(dst.belief, src.belief);
            if (next.size() == dst.belief.size()) return false;
            dst.belief = std::move(next);
            return true;
        }
        // keep dst tuples with a src partner jointly satisfying the constraints
        std::vector<int> shared;
        std::set_intersection(dst.belief.scope.begin(), dst.belief.scope.end(), src.belief.scope.begin(),
                              src.belief.scope.end(), std::back_inserter(shared));
        std::vector<int> dcols, scols;
        for (int v : shared) {
            dcols.push_back(dst.belief.col_of(v));
            scols.push_back(src.belief.col_of(v));
        }
        std::vector<int>& assign = scratch_;
        for (size_t v = 0; v < known_.size(); ++v)
            if (graph_.is_determined(int(v))) assign[v] = known_[v];
        const auto& dscope = dst.belief.scope;
        const auto& sscope = src.belief.scope;
        Relation next = dst.belief.filter([&](const uint16_t* rd) {
            for (size_t c = 0; c < dscope.size(); ++c) assign[size_t(dscope[c])] = rd[c];
            bool supported = false;
            for (size_t j = 0; j < src.belief.size() && !supported; ++j) {
                const uint16_t* rs = src.belief.row(j);
                bool agree = true;
                for (size_t k = 0; k < shared.size(); ++k)
                    if (rd[dcols[k]] != rs[scols[k]]) {
                        agree = false;
                        break;
                    }
                if (!agree) continue;
                for (size_t c = 0; c < sscope.size(); ++c) assign[size_t(sscope[c])] = rs[c];
                bool ok = true;
                for (int ci : pr.constraints)
                    if (!eval_formula(p_->constraints[size_t(ci)].formula, assign)) {
                        ok = false;
                        break;
                    }
                supported = ok;
            }
            return supported;
        });
        for (int v : dscope) assign[size_t(v)] = -1;
        for (int v : sscope) assign[size_t(v)] = -1;
        if (next.size() == dst.belief.size()) return false;
        dst.belief = std::move(next);
        return true;
    }

    // ---- queries over defined literals --------------------------------------

    Truth query_defined(const Literal& l) const {
        const Variable& v = p_->vars[size_t(l.var)];
        bool all_det = true;
        for (int s : v.scope)
            if (!graph_.is_determined(s)) all_det = false;
        if (all_det) {
            std::vector<int> assign(p_->vars.size(), -1);
            for (size_t x = 0; x < known_.size(); ++x)
                if (graph_.is_determined(int(x))) assign[x] = known_[x];
            int val = eval_defined(l.var, assign);
            bool eq = val == l.value;
            return (l.positive ? eq : !eq) ? Truth::KnownTrue : Truth::KnownFalse;
        }
        std::vector<int> nd;
        for (int s : v.scope)
            if (!graph_.is_determined(s)) nd.push_back(s);
        bool found = false;
        for (size_t b = 0; b < beams_.size(); ++b) {
            if (!scope_covers(beams_[b].belief.scope, nd)) continue;
            found = true;
            double f = defined_fraction(b, l);
            if (f == 1.0) return Truth::KnownTrue;
            if (f == 0.0) return Truth::KnownFalse;
        }
        if (!found) fail(Errc::unqueryable, v.name + " definition scope covered by no beam");
        return Truth::Unknown;
    }

    double defined_fraction(size_t b, const Literal& l) const {
        const Relation& rel = beams_[b].belief;
        std::vector<int> assign(p_->vars.size(), -1);
        for (size_t x = 0; x < known_.size(); ++x)
            if (graph_.is_determined(int(x))) assign[x] = known_[x];
        size_t sat = 0, total = std::max<size_t>(rel.size(), 1);
        for (size_t i = 0; i < rel.size(); ++i) {
            const uint16_t* r = rel.row(i);
            for (size_t c = 0; c < rel.scope.size(); ++c) assign[size_t(rel.scope[c])] = r[c];
            int val = eval_defined(l.var, assign);
            bool eq = val == l.value;
            if (l.positive ? eq : !eq) ++sat;
        }
        return double(sat) / double(total);
    }

    int eval_defined(int var, const std::vector<int>& assign) const {
        const Variable& v = p_->vars[size_t(var)];
        for (size_t c = 0; c < v.cases.size(); ++c)
            if (eval_formula(v.cases[c], assign)) return int(c);
        fail(Errc::incomplete_valuation, "no case of " + v.name + " matched");
    }

    const std::vector<std::vector<uint32_t>>& beam_counts(size_t b) const {
        const Beam& beam = beams_[b];
        if (beam.counts_version == beam.version) return beam.counts;
        beam.counts.assign(beam.scope.size(), {});
        for (size_t c = 0; c < beam.scope.size(); ++c)
            beam.counts[c].assign(p_->domain_size(beam.scope[c]), 0);
        for (size_t i = 0; i < beam.belief.size(); ++i) {
            const uint16_t* r = beam.belief.row(i);
            for (size_t c = 0; c < beam.scope.size(); ++c) ++beam.counts[c][r[c]];
        }
        beam.counts_version = beam.version;
        return beam.counts;
    }

    const Problem* p_;
    CausalGraph graph_;
    Algorithm algo_;
    TrackerOptions opt_;
    int step_ = 0;

    std::vector<Beam> beams_;
    std::vector<std::vector<int>> var_beams_;
    std::vector<std::vector<int>> obs_overlap_;
    std::vector<int> known_;
    std::map<int, std::vector<DetEffect>> det_effects_;
    bool constraints_dynamic_ = false;

    std::vector<Pair> pairs_;
    std::vector<std::vector<int>> pairs_by_src_;
    std::vector<std::vector<int>> pairs_by_dst_;
    std::vector<std::pair<CbtClass, std::vector<int>>> cbt_classes_;
    std::map<int, Relation> constraint_rel_cache_;
    std::map<std::vector<int>, Relation> init_join_cache_;

    mutable std::vector<int> scratch_;
    std::vector<int> scratch_init_;
};

} // namespace btrack
