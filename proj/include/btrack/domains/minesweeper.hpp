#pragma once

#include "../json_io.hpp"
#include "../rng.hpp"
#include "../tracker.hpp"

namespace btrack {

enum class FlagMode { MineTrue, NotMine, None };

inline const char* flag_mode_name(FlagMode m) {
    switch (m) {
        case FlagMode::MineTrue: return "mine";
        case FlagMode::NotMine: return "not-mine";
        case FlagMode::None: return "none";
    }
    return "?";
}

// m x n grid, k hidden mines. open(x,y) reveals the number of mines around
// the cell (9 when the cell itself is mined, which ends the game); flag(x,y)
// marks a cell. The flag precondition is configurable: the standard reading
// requires the cell to be mined, so a wrong flag is an illegal move.
struct MinesweeperInstance {
    int rows = 0, cols = 0, nmines = 0;
    FlagMode flag_mode = FlagMode::MineTrue;
    uint64_t seed = 0;
    Problem problem;
    std::vector<bool> mines; // hidden layout, row-major

    std::vector<int> mine_var, opened_var, flagged_var, obs_var, done_var;
    std::vector<int> open_action, flag_action;
    int noop_action = -1;

    int cell(int x, int y) const { return y * cols + x; }
    int cell_count() const { return rows * cols; }
    std::vector<int> neighbors(int c) const {
        std::vector<int> out;
        int x = c % cols, y = c / cols;
        for (int dy = -1; dy <= 1; ++dy)
            for (int dx = -1; dx <= 1; ++dx) {
                if (dx == 0 && dy == 0) continue;
                int nx = x + dx, ny = y + dy;
                if (nx >= 0 && nx < cols && ny >= 0 && ny < rows) out.push_back(cell(nx, ny));
            }
        return out;
    }
};

inline MinesweeperInstance gen_minesweeper(int rows, int cols, int k, uint64_t seed,
                                           FlagMode mode = FlagMode::MineTrue) {
    if (rows < 1 || cols < 1) fail(Errc::generation_failed, "grid must be at least 1x1");
    if (k < 0 || k > rows * cols) fail(Errc::generation_failed, "mine count out of range");
    MinesweeperInstance inst;
    inst.rows = rows;
    inst.cols = cols;
    inst.nmines = k;
    inst.flag_mode = mode;
    inst.seed = seed;
    const int n = rows * cols;

    // hidden layout: k distinct cells by partial Fisher-Yates
    inst.mines.assign(size_t(n), false);
    {
        Rng rng(Rng::derive(seed, 0xA11CE));
        std::vector<int> cells(static_cast<size_t>(n));
        std::iota(cells.begin(), cells.end(), 0);
        for (int i = 0; i < k; ++i) {
            size_t j = i + size_t(rng.below(uint64_t(n - i)));
            std::swap(cells[size_t(i)], cells[j]);
            inst.mines[size_t(cells[size_t(i)])] = true;
        }
    }

    Problem& p = inst.problem;
    p.name = "minesweeper-" + std::to_string(rows) + "x" + std::to_string(cols) + "-" + std::to_string(k);
    auto xy = [&](int c) { return "_" + std::to_string(c % cols) + "_" + std::to_string(c / cols); };

    for (int c = 0; c < n; ++c) {
        inst.mine_var.push_back(p.add_bool_var("mine" + xy(c), VarKind::State));
        inst.opened_var.push_back(p.add_bool_var("opened" + xy(c), VarKind::State));
        inst.flagged_var.push_back(p.add_bool_var("flagged" + xy(c), VarKind::State));
        Variable obs;
        obs.name = "obs" + xy(c);
        obs.kind = VarKind::Observable;
        for (int v = 0; v <= 9; ++v) obs.domain.push_back(std::to_string(v));
        inst.obs_var.push_back(p.add_var(std::move(obs)));
    }
    for (int c = 0; c < n; ++c) {
        Variable done;
        done.name = "done" + xy(c);
        done.kind = VarKind::Defined;
        done.domain = {"false", "true"};
        done.scope = {inst.flagged_var[size_t(c)], inst.opened_var[size_t(c)]};
        Formula resolved = Formula::disj(
            {Formula::lit(inst.flagged_var[size_t(c)], 1), Formula::lit(inst.opened_var[size_t(c)], 1)});
        done.cases = {Formula::negate(resolved), resolved};
        inst.done_var.push_back(p.add_var(std::move(done)));
    }

    for (int c = 0; c < n; ++c) {
        p.initial.push_back({Literal{inst.opened_var[size_t(c)], 0, true}});
        p.initial.push_back({Literal{inst.flagged_var[size_t(c)], 0, true}});
    }

    for (int c = 0; c < n; ++c) {
        Action open;
        open.name = "open" + xy(c);
        open.effects.push_back({{}, {{Literal{inst.opened_var[size_t(c)], 1, true}}}});
        inst.open_action.push_back(p.add_action(std::move(open)));

        Action flag;
        flag.name = "flag" + xy(c);
        if (mode == FlagMode::MineTrue)
            flag.precondition = {Literal{inst.mine_var[size_t(c)], 1, true}};
        else if (mode == FlagMode::NotMine)
            flag.precondition = {Literal{inst.mine_var[size_t(c)], 0, true}};
        flag.effects.push_back({{}, {{Literal{inst.flagged_var[size_t(c)], 1, true}}}});
        inst.flag_action.push_back(p.add_action(std::move(flag)));
    }
    Action noop;
    noop.name = "noop";
    noop.is_noop = true;
    inst.noop_action = p.add_action(std::move(noop));

    for (int c = 0; c < n; ++c) {
        std::vector<int> nbrs = inst.neighbors(c);
        std::vector<int> nbr_mines;
        for (int nb : nbrs) nbr_mines.push_back(inst.mine_var[size_t(nb)]);
        for (int count = 0; count <= int(nbrs.size()); ++count) {
            Formula f = Formula::conj(
                {Formula::lit(inst.mine_var[size_t(c)], 0), Formula::count_true(nbr_mines, count)});
            p.sensors.push_back({inst.open_action[size_t(c)], inst.obs_var[size_t(c)], count, std::move(f)});
        }
        p.sensors.push_back(
            {inst.open_action[size_t(c)], inst.obs_var[size_t(c)], 9, Formula::lit(inst.mine_var[size_t(c)], 1)});
    }

    for (int c = 0; c < n; ++c) p.goal.push_back(Literal{inst.done_var[size_t(c)], 1, true});
    return inst;
}

// Ground-truth episode state for one Minesweeper game. As in the standard
// game, the first opened cell is never a mine: a mine found there moves to
// the first free cell in row-major order before any observation is made.
struct MinesweeperSim {
    const MinesweeperInstance* inst;
    std::vector<bool> mines;
    std::vector<bool> opened, flagged;
    bool dead = false, illegal = false, any_opened = false;

    explicit MinesweeperSim(const MinesweeperInstance& i)
        : inst(&i), mines(i.mines), opened(size_t(i.cell_count()), false), flagged(size_t(i.cell_count()), false) {}

    bool is_open_action(int a, int& c) const {
        for (int i = 0; i < inst->cell_count(); ++i)
            if (inst->open_action[size_t(i)] == a) {
                c = i;
                return true;
            }
        return false;
    }

    bool legal(int action) const {
        for (int c = 0; c < inst->cell_count(); ++c) {
            if (action == inst->flag_action[size_t(c)]) {
                if (inst->flag_mode == FlagMode::MineTrue) return mines[size_t(c)];
                if (inst->flag_mode == FlagMode::NotMine) return !mines[size_t(c)];
                return true;
            }
        }
        return true; // open and noop have no precondition
    }

    int mine_count_around(int c) const {
        int k = 0;
        for (int nb : inst->neighbors(c)) k += mines[size_t(nb)];
        return k;
    }

    // applies the action and returns the observation literal list
    std::vector<std::pair<int, int>> apply(int action) {
        for (int c = 0; c < inst->cell_count(); ++c) {
            if (action == inst->open_action[size_t(c)]) {
                if (!any_opened) {
                    any_opened = true;
                    if (mines[size_t(c)]) {
                        for (int free = inst->cell_count() - 1; free >= 0; --free)
                            if (free != c && !mines[size_t(free)]) {
                                mines[size_t(free)] = true;
                                break;
                            }
                        mines[size_t(c)] = false;
                    }
                }
                opened[size_t(c)] = true;
                int obs = mines[size_t(c)] ? 9 : mine_count_around(c);
                if (mines[size_t(c)]) dead = true;
                return {{inst->obs_var[size_t(c)], obs}};
            }
            if (action == inst->flag_action[size_t(c)]) {
                if (!legal(action)) {
                    illegal = true;
                    return {};
                }
                flagged[size_t(c)] = true;
                return {};
            }
        }
        return {};
    }

    enum class Status { Running, Won, Lost };
    Status status() const {
        if (dead || illegal) return Status::Lost;
        for (int c = 0; c < inst->cell_count(); ++c)
            if (!opened[size_t(c)] && !flagged[size_t(c)]) return Status::Running;
        return Status::Won;
    }
};

} // namespace btrack
