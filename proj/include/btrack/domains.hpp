#pragma once

#include "domains/battleship.hpp"
#include "domains/minesweeper.hpp"
#include "domains/wumpus.hpp"

namespace btrack {

// Observation function O(s,a) evaluated on a full ground state: for each
// requested observable, the unique value whose sensor formula holds. Raises
// sensor-model-bug when no value (or more than one) matches; the generated
// domains all have deterministic sensing.
inline std::vector<std::pair<int, int>> ground_observe(const Problem& p, const std::vector<int>& state, int action,
                                                       const std::vector<int>& observables) {
    std::vector<std::pair<int, int>> out;
    for (int y : observables) {
        int found = -1;
        for (size_t v = 0; v < p.domain_size(y); ++v) {
            const SensorRule* r = p.sensor_rule(action, y, int(v));
            if (!r) continue;
            if (eval_formula(r->formula, state)) {
                if (found >= 0)
                    fail(Errc::sensor_model_bug, "two observation values possible for " + p.vars[size_t(y)].name);
                found = int(v);
            }
        }
        if (found < 0) fail(Errc::sensor_model_bug, "no observation value possible for " + p.vars[size_t(y)].name);
        out.emplace_back(y, found);
    }
    return out;
}

// Full ground states for the simulators, used to cross-check the hand-rolled
// observation logic against the declared sensor model.
inline std::vector<int> ground_state(const MinesweeperInstance& inst, const MinesweeperSim& sim) {
    std::vector<int> s(inst.problem.vars.size(), -1);
    for (int c = 0; c < inst.cell_count(); ++c) {
        s[size_t(inst.mine_var[size_t(c)])] = sim.mines[size_t(c)] ? 1 : 0;
        s[size_t(inst.opened_var[size_t(c)])] = sim.opened[size_t(c)] ? 1 : 0;
        s[size_t(inst.flagged_var[size_t(c)])] = sim.flagged[size_t(c)] ? 1 : 0;
    }
    return s;
}

inline std::vector<int> ground_state(const BattleshipInstance& inst, const BattleshipSim& sim) {
    std::vector<int> s(inst.problem.vars.size(), -1);
    for (int c = 0; c < inst.cell_count(); ++c) {
        int ship = inst.ship_at[size_t(c)];
        int size = ship < 0 ? 0 : inst.ships[size_t(ship)].size;
        s[size_t(inst.hit_var[size_t(c)])] = sim.fired[size_t(c)] ? 1 : 0;
        s[size_t(inst.sz_var[size_t(c)])] = BattleshipInstance::sz_index(size);
        s[size_t(inst.hz_var[size_t(c)])] = (ship >= 0 && inst.ships[size_t(ship)].horizontal) ? 1 : 0;
        s[size_t(inst.anc_var[size_t(c)])] = inst.anchor_index[size_t(c)];
        int nhits = 0;
        if (ship >= 0) {
            const auto& sh = inst.ships[size_t(ship)];
            for (int i = 0; i < sh.size; ++i) {
                int cc = inst.cell(sh.horizontal ? sh.x + i : sh.x, sh.horizontal ? sh.y : sh.y + i);
                if (sim.fired[size_t(cc)]) ++nhits;
            }
        }
        s[size_t(inst.nhits_var[size_t(c)])] = nhits;
    }
    return s;
}

inline std::vector<int> ground_state(const WumpusInstance& inst, const WumpusSim& sim) {
    std::vector<int> s(inst.problem.vars.size(), -1);
    s[size_t(inst.pos_var)] = sim.pos;
    s[size_t(inst.heading_var)] = sim.heading;
    s[size_t(inst.gold_var)] = inst.gold_cell;
    s[size_t(inst.gotgold_var)] = sim.has_gold ? 1 : 0;
    for (int c = 0; c < inst.cell_count(); ++c) {
        s[size_t(inst.pit_var[size_t(c)])] = inst.pits[size_t(c)] ? 1 : 0;
        s[size_t(inst.wump_var[size_t(c)])] = inst.wumps[size_t(c)] ? 1 : 0;
    }
    return s;
}

} // namespace btrack
