#pragma once

#include "harness.hpp"

namespace btrack {

struct OracleConfig {
    Domain domain = Domain::Minesweeper;
    int rows = 3, cols = 3;
    int mines = 3;
    int ships = 1;
    std::vector<int> ship_sizes;
    int pits = 1, wumpus = 1;
    int executions = 100;
    int max_steps = 40;
    uint64_t seed = 1;
    FlagMode flag_mode = FlagMode::MineTrue;
};

struct OracleReport {
    int executions = 0;
    long steps = 0;
    long beams_checked = 0;
    long soundness_violations = 0;  // some beam missing a flat-projection tuple
    long factored_violations = 0;   // factored beam != flat projection
    long cbt_violations = 0;        // cbt beam != flat projection
    long sandwich_violations = 0;   // not (cbt <= beam <= decoupled)
    long query_violations = 0;      // known-true/false contradicting the flat oracle
    std::string first_violation;

    bool ok() const {
        return soundness_violations == 0 && factored_violations == 0 && cbt_violations == 0 &&
               sandwich_violations == 0 && query_violations == 0;
    }
};

namespace detail {

// ground-legal random walk proposals
inline int random_action(const MinesweeperInstance& inst, const MinesweeperSim& sim, Rng& rng) {
    std::vector<int> acts;
    for (int c = 0; c < inst.cell_count(); ++c) {
        if (sim.opened[size_t(c)] || sim.flagged[size_t(c)]) continue;
        if (!sim.mines[size_t(c)])
            acts.push_back(inst.open_action[size_t(c)]);
        else if (inst.flag_mode == FlagMode::MineTrue)
            acts.push_back(inst.flag_action[size_t(c)]);
    }
    if (acts.empty()) return -1;
    // occasionally open an arbitrary unresolved cell, mined or not
    if (rng.below(8) == 0) {
        std::vector<int> risky;
        for (int c = 0; c < inst.cell_count(); ++c)
            if (!sim.opened[size_t(c)] && !sim.flagged[size_t(c)]) risky.push_back(inst.open_action[size_t(c)]);
        return risky[size_t(rng.below(risky.size()))];
    }
    return acts[size_t(rng.below(acts.size()))];
}

inline int random_action(const BattleshipInstance& inst, const BattleshipSim& sim, Rng& rng) {
    std::vector<int> acts;
    for (int c = 0; c < inst.cell_count(); ++c)
        if (!sim.fired[size_t(c)]) acts.push_back(inst.fire_action[size_t(c)]);
    if (acts.empty()) return -1;
    return acts[size_t(rng.below(acts.size()))];
}

inline int random_action(const WumpusInstance& inst, const WumpusSim& sim, Rng& rng) {
    std::vector<int> acts{inst.left_action, inst.right_action, inst.grab_action};
    int fwd = inst.next_cell(sim.pos, sim.heading);
    if (fwd >= 0 && !inst.pits[size_t(fwd)] && !inst.wumps[size_t(fwd)]) {
        // bias toward moving
        acts.push_back(inst.forward_action);
        acts.push_back(inst.forward_action);
        acts.push_back(inst.forward_action);
    } else if (fwd >= 0 && rng.below(10) == 0) {
        acts.push_back(inst.forward_action); // rare lethal move
    }
    return acts[size_t(rng.below(acts.size()))];
}

struct TrackerSet {
    std::unique_ptr<Tracker> flat, factored, decoupled, cbt, beam;
    std::vector<Tracker*> all() { return {flat.get(), factored.get(), decoupled.get(), cbt.get(), beam.get()}; }

    explicit TrackerSet(const Problem& p) {
        TrackerOptions opt;
        opt.shared_fold_cache = std::make_shared<std::map<std::vector<int>, Relation>>();
        flat = std::make_unique<Tracker>(p, Algorithm::Flat, opt);
        factored = std::make_unique<Tracker>(p, Algorithm::Factored, opt);
        decoupled = std::make_unique<Tracker>(p, Algorithm::Decoupled, opt);
        cbt = std::make_unique<Tracker>(p, Algorithm::Cbt, opt);
        beam = std::make_unique<Tracker>(p, Algorithm::Beam, opt);
    }

    // fresh copy of an initialized set (the generated problem structure is
    // identical across instance seeds, only the hidden layout differs)
    TrackerSet(const TrackerSet& o)
        : flat(std::make_unique<Tracker>(*o.flat)),
          factored(std::make_unique<Tracker>(*o.factored)),
          decoupled(std::make_unique<Tracker>(*o.decoupled)),
          cbt(std::make_unique<Tracker>(*o.cbt)),
          beam(std::make_unique<Tracker>(*o.beam)) {}
};

// Checks Pi_scope(flat) against a beam without materializing the projection:
// every restricted flat row must appear in the beam (containment), and for
// equality every beam row must be hit.
struct ProjectionCheck {
    bool contains = true;
    bool equal = true;
};

inline ProjectionCheck check_projection(const Relation& flat, const Relation& beam_rel) {
    ProjectionCheck out;
    std::vector<int> cols;
    for (int v : beam_rel.scope) cols.push_back(flat.col_of(v));
    std::unordered_multimap<uint64_t, size_t> index;
    index.reserve(beam_rel.size() * 2);
    for (size_t j = 0; j < beam_rel.size(); ++j) {
        uint64_t h = 1469598103934665603ULL;
        const uint16_t* r = beam_rel.row(j);
        for (size_t c = 0; c < beam_rel.width(); ++c) {
            h ^= r[c];
            h *= 1099511628211ULL;
        }
        index.emplace(h, j);
    }
    std::vector<bool> covered(beam_rel.size(), false);
    std::vector<uint16_t> key(cols.size());
    for (size_t i = 0; i < flat.size(); ++i) {
        const uint16_t* r = flat.row(i);
        uint64_t h = 1469598103934665603ULL;
        for (size_t c = 0; c < cols.size(); ++c) {
            key[c] = r[cols[c]];
            h ^= key[c];
            h *= 1099511628211ULL;
        }
        bool found = false;
        auto range = index.equal_range(h);
        for (auto it = range.first; it != range.second; ++it) {
            const uint16_t* br = beam_rel.row(it->second);
            if (std::equal(key.begin(), key.end(), br)) {
                covered[it->second] = true;
                found = true;
                break;
            }
        }
        if (!found) {
            out.contains = false;
            out.equal = false;
            return out;
        }
    }
    if (flat.size() == 0 && beam_rel.size() == 0) return out;
    for (bool c : covered)
        if (!c) {
            out.equal = false;
            break;
        }
    if (beam_rel.width() == 0) out.equal = (flat.size() > 0) == (beam_rel.size() > 0);
    return out;
}

inline void check_step(const Problem& p, TrackerSet& ts, OracleReport& rep, const std::string& where) {
    const Relation& flat_rel = ts.flat->beam_belief(0);
    auto note = [&](long& counter, const std::string& what) {
        ++counter;
        if (rep.first_violation.empty()) rep.first_violation = where + ": " + what;
    };

    for (Tracker* t : {ts.factored.get(), ts.decoupled.get(), ts.cbt.get(), ts.beam.get()}) {
        for (size_t b = 0; b < t->beam_count(); ++b) {
            ProjectionCheck pc = check_projection(flat_rel, t->beam_belief(b));
            ++rep.beams_checked;
            if (!pc.contains)
                note(rep.soundness_violations,
                     std::string(algorithm_name(t->algorithm())) + " beam " + t->beam_name(b) + " loses tuples");
            if (t->algorithm() == Algorithm::Factored && !pc.equal)
                note(rep.factored_violations, "factored beam " + t->beam_name(b) + " not equal to projection");
            if (t->algorithm() == Algorithm::Cbt && !pc.equal)
                note(rep.cbt_violations, "cbt beam " + t->beam_name(b) + " not equal to projection");
        }
    }
    // sandwich over the shared causal decomposition
    for (size_t b = 0; b < ts.cbt->beam_count(); ++b) {
        if (!ts.cbt->beam_belief(b).subset_of(ts.beam->beam_belief(b)))
            note(rep.sandwich_violations, "cbt beam " + ts.cbt->beam_name(b) + " not within beam tracking");
        if (!ts.beam->beam_belief(b).subset_of(ts.decoupled->beam_belief(b)))
            note(rep.sandwich_violations, "beam tracking beam " + ts.cbt->beam_name(b) + " not within decoupled");
    }
    // literal queries must never contradict the flat oracle
    for (size_t v = 0; v < p.vars.size(); ++v) {
        if (p.vars[v].kind != VarKind::State) continue;
        Literal l{int(v), 0, true};
        Truth truth = ts.flat->query_literal(l);
        for (Tracker* t : {ts.factored.get(), ts.decoupled.get(), ts.cbt.get(), ts.beam.get()}) {
            Truth got = t->query_literal(l);
            if ((got == Truth::KnownTrue && truth != Truth::KnownTrue) ||
                (got == Truth::KnownFalse && truth != Truth::KnownFalse))
                note(rep.query_violations,
                     std::string(algorithm_name(t->algorithm())) + " wrong about " + p.literal_str(l));
        }
    }
}

template <typename Inst, typename Sim>
void oracle_run(const Inst& inst, Sim& sim, const OracleConfig& cfg, uint64_t walk_seed, OracleReport& rep,
                const std::optional<ExecStep>& init_step, const TrackerSet& fresh) {
    using Status = typename Sim::Status;
    const bool nocheck = std::getenv("BTRACK_ORACLE_NOCHECK") != nullptr;
    TrackerSet ts(fresh);
    Rng rng(walk_seed);
    if (init_step) {
        for (Tracker* t : ts.all()) t->step(*init_step);
        ++rep.steps;
        if (!nocheck) check_step(inst.problem, ts, rep, "init-obs");
    }
    for (int s = 0; s < cfg.max_steps; ++s) {
        if (sim.status() != Status::Running) break;
        int a = random_action(inst, sim, rng);
        if (a < 0) break;
        auto obs = sim.apply(a);
        ExecStep step{a, obs};
        for (Tracker* t : ts.all()) t->step(step);
        ++rep.steps;
        if (!nocheck) check_step(inst.problem, ts, rep, inst.problem.name + " step " + std::to_string(s));
        if (sim.status() != Status::Running) break;
    }
}

} // namespace detail

// Replays identical random executions through all five trackers and checks
// the containment, equality, and query-soundness relations between them.
// Executions are independent and run on parallel workers.
inline OracleReport oracle_suite(const OracleConfig& cfg, int workers = 0) {
    if (workers <= 0) workers = default_workers();
    workers = std::max(1, std::min(workers, cfg.executions));
    std::vector<OracleReport> parts(size_t(cfg.executions));
    std::atomic<int> next{0};

    // Template instance and initialized trackers: the problem structure does
    // not depend on the instance seed, so per-execution trackers start as
    // copies of these.
    std::optional<MinesweeperInstance> ms_tpl;
    std::optional<BattleshipInstance> bs_tpl;
    std::optional<WumpusInstance> wu_tpl;
    std::unique_ptr<detail::TrackerSet> set_tpl;
    switch (cfg.domain) {
        case Domain::Minesweeper:
            ms_tpl = gen_minesweeper(cfg.rows, cfg.cols, cfg.mines, 0, cfg.flag_mode);
            set_tpl = std::make_unique<detail::TrackerSet>(ms_tpl->problem);
            break;
        case Domain::Battleship:
            bs_tpl = gen_battleship(cfg.rows, cfg.ships, 0, cfg.ship_sizes);
            set_tpl = std::make_unique<detail::TrackerSet>(bs_tpl->problem);
            break;
        case Domain::Wumpus:
            wu_tpl = gen_wumpus(cfg.rows, cfg.cols, cfg.pits, cfg.wumpus, 0);
            set_tpl = std::make_unique<detail::TrackerSet>(wu_tpl->problem);
            break;
    }

    auto work = [&]() {
        while (true) {
            int e = next.fetch_add(1);
            if (e >= cfg.executions) break;
            OracleReport& rep = parts[size_t(e)];
            uint64_t inst_seed = Rng::derive(cfg.seed, 2 * uint64_t(e));
            uint64_t walk_seed = Rng::derive(cfg.seed, 2 * uint64_t(e) + 1);
            switch (cfg.domain) {
                case Domain::Minesweeper: {
                    auto inst = gen_minesweeper(cfg.rows, cfg.cols, cfg.mines, inst_seed, cfg.flag_mode);
                    MinesweeperSim sim(inst);
                    detail::oracle_run(inst, sim, cfg, walk_seed, rep, std::nullopt, *set_tpl);
                    break;
                }
                case Domain::Battleship: {
                    auto inst = gen_battleship(cfg.rows, cfg.ships, inst_seed, cfg.ship_sizes);
                    BattleshipSim sim(inst);
                    detail::oracle_run(inst, sim, cfg, walk_seed, rep, std::nullopt, *set_tpl);
                    break;
                }
                case Domain::Wumpus: {
                    auto inst = gen_wumpus(cfg.rows, cfg.cols, cfg.pits, cfg.wumpus, inst_seed);
                    WumpusSim sim(inst);
                    detail::oracle_run(inst, sim, cfg, walk_seed, rep,
                                       std::optional<ExecStep>(sim.initial_step()), *set_tpl);
                    break;
                }
            }
            rep.executions = 1;
        }
    };
    std::vector<std::thread> pool;
    for (int w = 1; w < workers; ++w) pool.emplace_back(work);
    work();
    for (auto& th : pool) th.join();

    OracleReport rep;
    for (const auto& part : parts) {
        rep.executions += part.executions;
        rep.steps += part.steps;
        rep.beams_checked += part.beams_checked;
        rep.soundness_violations += part.soundness_violations;
        rep.factored_violations += part.factored_violations;
        rep.cbt_violations += part.cbt_violations;
        rep.sandwich_violations += part.sandwich_violations;
        rep.query_violations += part.query_violations;
        if (rep.first_violation.empty() && !part.first_violation.empty()) rep.first_violation = part.first_violation;
    }
    return rep;
}

// ---- trace replay -----------------------------------------------------------

struct ReplayReport {
    int steps = 0;
    bool ok = true;
    std::string error;
};

// Re-runs a recorded episode: regenerates the instance from the recorded
// seeds, feeds the recorded actions to a fresh simulator and tracker, and
// checks that observations and belief fingerprints reproduce exactly.
inline ReplayReport replay_trace(const std::string& path) {
    ReplayReport rep;
    std::ifstream in(path);
    if (!in) {
        rep.ok = false;
        rep.error = "cannot open " + path;
        return rep;
    }
    std::string line;
    if (!std::getline(in, line)) {
        rep.ok = false;
        rep.error = "empty trace";
        return rep;
    }
    Json header = Json::parse(line, nullptr, false);
    if (header.is_discarded() || header.value("type", "") != "header") {
        rep.ok = false;
        rep.error = "missing header";
        return rep;
    }
    RunConfig cfg;
    const Json& jc = header.at("config");
    auto dom = domain_from_name(jc.at("domain").get<std::string>());
    auto algo = algorithm_from_name(jc.at("algorithm").get<std::string>());
    if (!dom || !algo) {
        rep.ok = false;
        rep.error = "bad header";
        return rep;
    }
    cfg.domain = *dom;
    cfg.algorithm = *algo;
    cfg.rows = jc.at("rows").get<int>();
    cfg.cols = jc.at("cols").get<int>();
    if (jc.contains("mines")) cfg.mines = jc.at("mines").get<int>();
    if (jc.contains("ships")) cfg.ships = jc.at("ships").get<int>();
    if (jc.contains("pits")) cfg.pits = jc.at("pits").get<int>();
    if (jc.contains("wumpus")) cfg.wumpus = jc.at("wumpus").get<int>();
    if (jc.contains("flag_mode")) {
        std::string fm = jc.at("flag_mode").get<std::string>();
        cfg.flag_mode = fm == "mine" ? FlagMode::MineTrue : fm == "not-mine" ? FlagMode::NotMine : FlagMode::None;
    }
    uint64_t inst_seed = header.at("instance_seed").get<uint64_t>();

    auto run = [&](const auto& inst, auto& sim, std::optional<ExecStep> init_step) {
        const Problem& p = inst.problem;
        Tracker t(p, cfg.algorithm);
        if (init_step) t.step(*init_step);
        while (std::getline(in, line)) {
            Json j = Json::parse(line, nullptr, false);
            if (j.is_discarded()) continue;
            if (j.value("type", "") != "step") continue;
            int action = p.find_action(j.at("action").get<std::string>());
            if (action < 0) {
                rep.ok = false;
                rep.error = "unknown action in trace";
                return;
            }
            auto obs = sim.apply(action);
            Json jo = Json::array();
            for (auto& [y, v] : obs)
                jo.push_back(Json::array({p.vars[size_t(y)].name, p.vars[size_t(y)].domain[size_t(v)]}));
            if (jo != j.at("obs")) {
                rep.ok = false;
                rep.error = "observation mismatch at step " + std::to_string(rep.steps);
                return;
            }
            std::string recorded = j.value("belief", "");
            if (recorded == std::string(16, '0')) return; // terminal step, tracker not advanced
            t.step(ExecStep{action, obs});
            char buf[20];
            std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(t.belief_hash()));
            if (!recorded.empty() && recorded != buf) {
                rep.ok = false;
                rep.error = "belief fingerprint mismatch at step " + std::to_string(rep.steps);
                return;
            }
            ++rep.steps;
        }
    };

    switch (cfg.domain) {
        case Domain::Minesweeper: {
            auto inst = gen_minesweeper(cfg.rows, cfg.cols, cfg.mines, inst_seed, cfg.flag_mode);
            MinesweeperSim sim(inst);
            run(inst, sim, std::nullopt);
            break;
        }
        case Domain::Battleship: {
            auto inst = gen_battleship(cfg.rows, cfg.ships, inst_seed, cfg.ship_sizes);
            BattleshipSim sim(inst);
            run(inst, sim, std::nullopt);
            break;
        }
        case Domain::Wumpus: {
            auto inst = gen_wumpus(cfg.rows, cfg.cols, cfg.pits, cfg.wumpus, inst_seed);
            WumpusSim sim(inst);
            run(inst, sim, std::optional<ExecStep>(sim.initial_step()));
            break;
        }
    }
    return rep;
}

} // namespace btrack
