#pragma once

#include <queue>

#include "domains.hpp"

namespace btrack {

struct PolicyDecision {
    int action = -1;
    enum class Kind { Certain, Guess, PathStep, Surrender } kind = Kind::Certain;
    double marginal = -1.0;
};

// Fires at a uniformly random non-fired cell.
inline PolicyDecision battleship_random(const BattleshipInstance& inst, const Tracker& t, Rng& rng) {
    std::vector<int> open;
    for (int c = 0; c < inst.cell_count(); ++c)
        if (t.known_value(inst.hit_var[size_t(c)]) == 0) open.push_back(c);
    if (open.empty()) return {-1, PolicyDecision::Kind::Surrender, -1.0};
    int c = open[size_t(rng.below(open.size()))];
    return {inst.fire_action[size_t(c)], PolicyDecision::Kind::Guess, -1.0};
}

namespace detail {

// Number of ship placements still consistent with the cell's beam: the
// argmax of this count over cells is the placement heatmap, and misses near
// a cell prune its count through the shared continuity constraints. When
// `skip_hits` is set, placements running through a pending hit are not
// counted (they restate evidence a line of hits already explains).
inline size_t covering_combos(const BattleshipInstance& inst, const Tracker& t, int c,
                              const std::vector<bool>* skip_hits = nullptr,
                              const int* weight_by_size = nullptr) {
    int b = t.beam_index_of(inst.sunk_var[size_t(c)]);
    const Relation& rel = t.beam_belief(size_t(b));
    int sz_col = rel.col_of(inst.sz_var[size_t(c)]);
    int hz_col = rel.col_of(inst.hz_var[size_t(c)]);
    int anc_col = rel.col_of(inst.anc_var[size_t(c)]);
    int x = c % inst.dim, y = c / inst.dim;
    size_t n = 0;
    for (size_t i = 0; i < rel.size(); ++i) {
        const uint16_t* r = rel.row(i);
        if (r[sz_col] == 0) continue;
        int size = BattleshipInstance::kSizes[r[sz_col]];
        if (skip_hits) {
            bool hz = r[hz_col] == 1;
            int k = r[anc_col];
            bool through_hit = false;
            for (int j = 0; j < size && !through_hit; ++j) {
                int cx = hz ? x - k + j : x;
                int cy = hz ? y : y - k + j;
                int cc = inst.cell(cx, cy);
                if (cc != c && (*skip_hits)[size_t(cc)]) through_hit = true;
            }
            if (through_hit) continue;
        }
        n += weight_by_size ? size_t(weight_by_size[size]) : 1;
    }
    return n;
}

} // namespace detail

namespace detail {

// Fleet sizes not yet accounted for by a bounded maximal run of hits. A run
// whose length matches an outstanding size is assumed to be that ship; runs
// formed by touching collinear ships can misattribute, which only skews the
// hunting weights.
inline std::vector<int> outstanding_sizes(const BattleshipInstance& inst, const Tracker& t) {
    const int dim = inst.dim;
    std::vector<int> remaining = inst.fleet;
    std::sort(remaining.rbegin(), remaining.rend());
    auto fired_hit = [&](int x, int y) {
        int c = inst.cell(x, y);
        return t.known_value(inst.hit_var[size_t(c)]) == 1 &&
               t.query_literal(Literal{inst.sz_var[size_t(c)], 0, false}) == Truth::KnownTrue;
    };
    auto blocked = [&](int x, int y) {
        if (x < 0 || x >= dim || y < 0 || y >= dim) return true;
        int c = inst.cell(x, y);
        if (t.query_literal(Literal{inst.sz_var[size_t(c)], 0, true}) == Truth::KnownTrue) return true;
        return false;
    };
    std::vector<int> runs;
    for (int axis = 0; axis < 2; ++axis) {
        int dx = axis == 0 ? 1 : 0, dy = axis == 0 ? 0 : 1;
        for (int y = 0; y < dim; ++y)
            for (int x = 0; x < dim; ++x) {
                if (!fired_hit(x, y)) continue;
                if (x - dx >= 0 && y - dy >= 0 && fired_hit(x - dx, y - dy)) continue; // not run start
                int len = 0, cx = x, cy = y;
                while (cx < dim && cy < dim && fired_hit(cx, cy)) {
                    ++len;
                    cx += dx;
                    cy += dy;
                }
                if (len >= 2 && blocked(x - dx, y - dy) && blocked(cx, cy)) runs.push_back(len);
            }
    }
    std::sort(runs.rbegin(), runs.rend());
    for (int len : runs) {
        auto it = std::find(remaining.begin(), remaining.end(), len);
        if (it != remaining.end()) remaining.erase(it);
    }
    return remaining;
}

// placements in f's beam that cover both f and c (same-ship support)
inline size_t same_ship_combos(const BattleshipInstance& inst, const Tracker& t, int f, int c) {
    int b = t.beam_index_of(inst.sunk_var[size_t(f)]);
    const Relation& rel = t.beam_belief(size_t(b));
    int sz_col = rel.col_of(inst.sz_var[size_t(f)]);
    int hz_col = rel.col_of(inst.hz_var[size_t(f)]);
    int anc_col = rel.col_of(inst.anc_var[size_t(f)]);
    int fx = f % inst.dim, fy = f / inst.dim;
    int cx = c % inst.dim, cy = c / inst.dim;
    size_t n = 0;
    for (size_t i = 0; i < rel.size(); ++i) {
        const uint16_t* r = rel.row(i);
        if (r[sz_col] == 0) continue;
        int size = BattleshipInstance::kSizes[r[sz_col]];
        bool hz = r[hz_col] == 1;
        int k = r[anc_col];
        int off = hz ? cx - fx : cy - fy;
        if ((hz && cy != fy) || (!hz && cx != fx)) continue;
        if (k + off >= 0 && k + off < size) ++n;
    }
    return n;
}

} // namespace detail

// Fires at the non-fired cell most likely to contain a ship. Certain cells
// win outright; otherwise cells adjacent to a hit whose ship may be unsunk
// are targeted (extending two-in-a-row hits first, ranked by how many
// placements of the hit's ship reach the cell), and the remaining hunt ranks
// cells by how many consistent ship placements still cover them, checkerboard
// cells first. Ties break toward the lowest (row, col).
inline PolicyDecision battleship_greedy(const BattleshipInstance& inst, const Tracker& t) {
    const int dim = inst.dim;
    std::vector<bool> open_hit(size_t(inst.cell_count()), false);
    for (int c = 0; c < inst.cell_count(); ++c) {
        if (t.known_value(inst.hit_var[size_t(c)]) != 1) continue;
        if (t.query_literal(Literal{inst.sz_var[size_t(c)], 0, false}) != Truth::KnownTrue) continue;
        if (t.query_literal(Literal{inst.sunk_var[size_t(c)], 1, true}) == Truth::KnownTrue) continue;
        open_hit[size_t(c)] = true;
    }

    int best = -1;
    double best_m = -1.0;
    int best_target = 0;
    size_t best_combos = 0;
    int hunt_weight[6] = {0, 0, 0, 0, 0, 0};
    for (int s : detail::outstanding_sizes(inst, t)) ++hunt_weight[s];
    static const int dx[4] = {1, -1, 0, 0}, dy[4] = {0, 0, 1, -1};
    for (int y = 0; y < dim; ++y)
        for (int x = 0; x < dim; ++x) {
            int c = inst.cell(x, y);
            if (t.known_value(inst.hit_var[size_t(c)]) != 0) continue;
            double m = t.marginal(Literal{inst.sz_var[size_t(c)], 0, false});
            if (m == 0.0) continue; // known water
            if (m == 1.0) return {inst.fire_action[size_t(c)], PolicyDecision::Kind::Certain, 1.0};
            // tiers: 3 extend a line of hits, 2 next to an isolated hit,
            // 1 parity hunt (every ship covers a checkerboard cell), 0 rest.
            // Perpendicular neighbors of a hit already explained by a line
            // are left to the hunt ranking.
            int target = (x + y) % 2 == 0 ? 1 : 0;
            for (int d = 0; d < 4; ++d) {
                int nx = x + dx[d], ny = y + dy[d];
                if (nx < 0 || nx >= dim || ny < 0 || ny >= dim) continue;
                int f = inst.cell(nx, ny);
                if (!open_hit[size_t(f)]) continue;
                int lx = nx + dx[d], ly = ny + dy[d]; // cell beyond the hit
                bool line = lx >= 0 && lx < dim && ly >= 0 && ly < dim && open_hit[size_t(inst.cell(lx, ly))];
                if (line) {
                    target = std::max(target, 3);
                    continue;
                }
                bool hit_in_perp_run = false;
                for (int pd = 0; pd < 4; ++pd) {
                    if ((dx[pd] != 0) == (dx[d] != 0)) continue; // keep perpendicular only
                    int px = nx + dx[pd], py = ny + dy[pd];
                    if (px >= 0 && px < dim && py >= 0 && py < dim && open_hit[size_t(inst.cell(px, py))])
                        hit_in_perp_run = true;
                }
                if (!hit_in_perp_run) target = std::max(target, 2);
            }
            size_t combos = target >= 2 ? detail::covering_combos(inst, t, c)
                                        : detail::covering_combos(inst, t, c, &open_hit, hunt_weight);
            if (target > best_target || (target == best_target && combos > best_combos)) {
                best = c;
                best_m = m;
                best_target = target;
                best_combos = combos;
            }
        }
    if (best < 0) return {-1, PolicyDecision::Kind::Surrender, -1.0};
    return {inst.fire_action[size_t(best)], PolicyDecision::Kind::Guess, best_m};
}

namespace detail {

// true when some sensor beam over the cell's mine variable carries evidence
inline bool mine_constrained(const MinesweeperInstance& inst, const Tracker& t, int c) {
    std::vector<int> around = inst.neighbors(c);
    around.push_back(c);
    for (int n : around) {
        int b = t.beam_index_of(inst.obs_var[size_t(n)]);
        if (b < 0) continue;
        const Relation& rel = t.beam_belief(size_t(b));
        if (rel.size() != (size_t(1) << rel.width())) return true;
    }
    return false;
}

} // namespace detail

// Opens cells known safe and flags cells known mined; otherwise acts on the
// cell with the most extreme mine probability, opening when it leans safe.
// Cells without evidence take the calibrated prior (remaining mines over
// untouched cells) rather than the uninformed 1/2.
inline PolicyDecision minesweeper_greedy(const MinesweeperInstance& inst, const Tracker& t) {
    int open_sure = -1, flag_sure = -1;
    struct Cand {
        int cell;
        double m;
        bool fresh;
    };
    std::vector<Cand> cands;
    int flagged_count = 0;
    double frontier_mass = 0.0;
    int fresh_count = 0;
    for (int y = 0; y < inst.rows; ++y)
        for (int x = 0; x < inst.cols; ++x) {
            int c = inst.cell(x, y);
            if (t.known_value(inst.flagged_var[size_t(c)]) == 1) {
                ++flagged_count;
                continue;
            }
            if (t.known_value(inst.opened_var[size_t(c)]) == 1) continue;
            double m = t.marginal(Literal{inst.mine_var[size_t(c)], 1, true});
            if (m == 0.0) {
                if (open_sure < 0) open_sure = c;
                continue;
            }
            if (m == 1.0) {
                if (flag_sure < 0) flag_sure = c;
                ++flagged_count; // a known mine is an accounted mine
                continue;
            }
            bool fresh = !detail::mine_constrained(inst, t, c);
            if (fresh)
                ++fresh_count;
            else
                frontier_mass += m;
            cands.push_back({c, m, fresh});
        }
    if (open_sure >= 0) return {inst.open_action[size_t(open_sure)], PolicyDecision::Kind::Certain, 0.0};
    if (flag_sure >= 0 && inst.flag_mode != FlagMode::NotMine)
        return {inst.flag_action[size_t(flag_sure)], PolicyDecision::Kind::Certain, 1.0};
    if (cands.empty()) return {-1, PolicyDecision::Kind::Surrender, -1.0};

    // mine counter: with every mine accounted for the rest is safe, and with
    // as many unresolved cells as missing mines they are all mines
    int rem = inst.nmines - flagged_count;
    if (rem <= 0)
        return {inst.open_action[size_t(cands.front().cell)], PolicyDecision::Kind::Certain, 0.0};
    if (int(cands.size()) == rem && inst.flag_mode != FlagMode::NotMine)
        return {inst.flag_action[size_t(cands.front().cell)], PolicyDecision::Kind::Certain, 1.0};

    // localization: if disjoint evidence beams already require rem mines
    // between them, everything outside those beams is safe
    {
        struct BeamMin {
            int min_mines;
            std::vector<int> cells;
        };
        std::vector<int> cell_of_mine_var(inst.problem.vars.size(), -1);
        for (int cc = 0; cc < inst.cell_count(); ++cc) cell_of_mine_var[size_t(inst.mine_var[size_t(cc)])] = cc;
        auto unresolved = [&](int cc) {
            return t.known_value(inst.opened_var[size_t(cc)]) != 1 &&
                   t.known_value(inst.flagged_var[size_t(cc)]) != 1 &&
                   t.query_literal(Literal{inst.mine_var[size_t(cc)], 1, true}) != Truth::KnownTrue;
        };
        std::vector<BeamMin> bms;
        for (int c = 0; c < inst.cell_count(); ++c) {
            if (t.known_value(inst.opened_var[size_t(c)]) != 1) continue;
            int b = t.beam_index_of(inst.obs_var[size_t(c)]);
            if (b < 0) continue;
            const Relation& rel = t.beam_belief(size_t(b));
            if (rel.size() == (size_t(1) << rel.width())) continue; // no evidence
            BeamMin bm;
            std::vector<size_t> cols; // columns of still-unaccounted cells
            for (size_t col = 0; col < rel.width(); ++col) {
                int cc = cell_of_mine_var[size_t(rel.scope[col])];
                if (cc >= 0 && unresolved(cc)) {
                    cols.push_back(col);
                    bm.cells.push_back(cc);
                }
            }
            if (cols.empty()) continue;
            bm.min_mines = int(cols.size());
            for (size_t i = 0; i < rel.size(); ++i) {
                int cnt = 0;
                for (size_t col : cols) cnt += rel.row(i)[col] == 1;
                bm.min_mines = std::min(bm.min_mines, cnt);
            }
            if (bm.min_mines <= 0) continue;
            bms.push_back(std::move(bm));
        }
        std::sort(bms.begin(), bms.end(), [](const BeamMin& a, const BeamMin& b) { return a.min_mines > b.min_mines; });
        std::vector<bool> used(size_t(inst.cell_count()), false);
        int located = 0;
        for (const auto& bm : bms) {
            bool disjoint = true;
            for (int cc : bm.cells)
                if (used[size_t(cc)]) disjoint = false;
            if (!disjoint) continue;
            for (int cc : bm.cells) used[size_t(cc)] = true;
            located += bm.min_mines;
        }
        if (located >= rem) {
            for (const auto& cand : cands)
                if (!used[size_t(cand.cell)])
                    return {inst.open_action[size_t(cand.cell)], PolicyDecision::Kind::Certain, 0.0};
        }
    }

    double p_fresh = 0.5;
    if (fresh_count > 0) {
        p_fresh = (double(rem) - frontier_mass) / double(fresh_count);
        p_fresh = std::min(0.99, std::max(0.01, p_fresh));
    }
    // guesses always open: the safest cell reveals a count, a flag reveals
    // nothing. Fresh ties prefer cells with fewer neighbors (corners first).
    int guess = -1;
    double guess_m = 2.0;
    size_t guess_nb = 9;
    for (const auto& cand : cands) {
        double m = cand.fresh ? p_fresh : cand.m;
        size_t nb = inst.neighbors(cand.cell).size();
        if (m < guess_m || (m == guess_m && nb < guess_nb)) {
            guess_m = m;
            guess = cand.cell;
            guess_nb = nb;
        }
    }
    return {inst.open_action[size_t(guess)], PolicyDecision::Kind::Guess, guess_m};
}

// Walks the least-cost safe path (forward and quarter-turns cost 1 each)
// toward the nearest cell that may hold the gold; grabs when standing on it.
// Surrenders when no such cell is safely reachable.
inline PolicyDecision wumpus_heuristic(const WumpusInstance& inst, const Tracker& t) {
    int pos = t.known_value(inst.pos_var);
    int heading = t.known_value(inst.heading_var);
    if (t.query_literal(Literal{inst.gold_var, pos, true}) == Truth::KnownTrue)
        return {inst.grab_action, PolicyDecision::Kind::Certain, 1.0};

    const int n = inst.cell_count();
    std::vector<bool> safe(size_t(n), false), gold_possible(size_t(n), false);
    for (int c = 0; c < n; ++c) {
        safe[size_t(c)] = t.query_literal(Literal{inst.pit_var[size_t(c)], 0, true}) == Truth::KnownTrue &&
                          t.query_literal(Literal{inst.wump_var[size_t(c)], 0, true}) == Truth::KnownTrue;
        gold_possible[size_t(c)] = t.query_literal(Literal{inst.gold_var, c, true}) != Truth::KnownFalse;
    }

    // BFS over (cell, heading); all moves cost 1
    const int nodes = n * 4;
    auto node = [&](int c, int h) { return c * 4 + h; };
    std::vector<int> parent(size_t(nodes), -1), via(size_t(nodes), -1);
    std::vector<bool> seen(size_t(nodes), false);
    std::queue<int> q;
    int start = node(pos, heading);
    seen[size_t(start)] = true;
    q.push(start);
    int goal_node = -1;
    while (!q.empty() && goal_node < 0) {
        int u = q.front();
        q.pop();
        int c = u / 4, h = u % 4;
        if (c != pos && gold_possible[size_t(c)]) {
            goal_node = u;
            break;
        }
        struct Move {
            int action, to;
        };
        int fwd = inst.next_cell(c, h);
        Move moves[3] = {{inst.forward_action, (fwd >= 0 && safe[size_t(fwd)]) ? node(fwd, h) : -1},
                         {inst.left_action, node(c, (h + 3) % 4)},
                         {inst.right_action, node(c, (h + 1) % 4)}};
        for (const auto& mv : moves) {
            if (mv.to < 0 || seen[size_t(mv.to)]) continue;
            seen[size_t(mv.to)] = true;
            parent[size_t(mv.to)] = u;
            via[size_t(mv.to)] = mv.action;
            q.push(mv.to);
        }
    }
    if (goal_node < 0) return {-1, PolicyDecision::Kind::Surrender, -1.0};
    int cur = goal_node, first = -1;
    while (parent[size_t(cur)] >= 0) {
        first = via[size_t(cur)];
        cur = parent[size_t(cur)];
    }
    return {first, PolicyDecision::Kind::PathStep, -1.0};
}

} // namespace btrack
