#pragma once

#include "../json_io.hpp"
#include "../rng.hpp"
#include "../tracker.hpp"

namespace btrack {

// m x n cave with hidden pits, wumpuses, and one gold position. The agent
// knows its own position and heading; breeze/stench/dead are sensed at the
// current cell, glitter when standing on the gold. Entering a lethal cell
// ends the episode. The start cell and its orthogonal neighbors are free of
// hazards; exact hazard counts are carried as state constraints.
struct WumpusInstance {
    int rows = 0, cols = 0, npits = 0, nwumpus = 0;
    uint64_t seed = 0;
    Problem problem;

    std::vector<bool> pits, wumps; // hidden layout
    int gold_cell = 0;

    int pos_var = -1, heading_var = -1, gold_var = -1, gotgold_var = -1;
    std::vector<int> pit_var, wump_var, breeze_var, stench_var, dead_var;
    int glitter_var = -1;
    int forward_action = -1, left_action = -1, right_action = -1, grab_action = -1, noop_action = -1;

    int cell(int x, int y) const { return y * cols + x; }
    int cell_count() const { return rows * cols; }
    int start_cell() const { return 0; }
    std::vector<int> orth_neighbors(int c) const {
        std::vector<int> out;
        int x = c % cols, y = c / cols;
        if (x > 0) out.push_back(cell(x - 1, y));
        if (x + 1 < cols) out.push_back(cell(x + 1, y));
        if (y > 0) out.push_back(cell(x, y - 1));
        if (y + 1 < rows) out.push_back(cell(x, y + 1));
        return out;
    }
    // headings: 0 north (+y), 1 east (+x), 2 south (-y), 3 west (-x)
    int next_cell(int c, int heading) const {
        int x = c % cols, y = c / cols;
        switch (heading) {
            case 0: ++y; break;
            case 1: ++x; break;
            case 2: --y; break;
            default: --x; break;
        }
        if (x < 0 || x >= cols || y < 0 || y >= rows) return -1;
        return cell(x, y);
    }
};

inline WumpusInstance gen_wumpus(int rows, int cols, int npits, int nwumpus, uint64_t seed) {
    if (rows < 2 || cols < 2) fail(Errc::generation_failed, "grid must be at least 2x2");
    WumpusInstance inst;
    inst.rows = rows;
    inst.cols = cols;
    inst.npits = npits;
    inst.nwumpus = nwumpus;
    inst.seed = seed;
    const int n = rows * cols;

    {
        std::vector<int> allowed;
        std::vector<bool> forbidden(size_t(n), false);
        forbidden[size_t(inst.start_cell())] = true;
        for (int nb : inst.orth_neighbors(inst.start_cell())) forbidden[size_t(nb)] = true;
        for (int c = 0; c < n; ++c)
            if (!forbidden[size_t(c)]) allowed.push_back(c);
        if (int(allowed.size()) < npits + nwumpus)
            fail(Errc::generation_failed, "not enough cells for hazards");
        Rng rng(Rng::derive(seed, 0x110CA7));
        std::vector<int> cells = allowed;
        inst.pits.assign(size_t(n), false);
        inst.wumps.assign(size_t(n), false);
        for (int i = 0; i < npits + nwumpus; ++i) {
            size_t j = size_t(i) + size_t(rng.below(uint64_t(cells.size() - size_t(i))));
            std::swap(cells[size_t(i)], cells[j]);
            if (i < npits)
                inst.pits[size_t(cells[size_t(i)])] = true;
            else
                inst.wumps[size_t(cells[size_t(i)])] = true;
        }
        inst.gold_cell = int(rng.below(uint64_t(n)));
    }

    Problem& p = inst.problem;
    p.name = "wumpus-" + std::to_string(rows) + "x" + std::to_string(cols) + "-" + std::to_string(npits) + "p" +
             std::to_string(nwumpus) + "w";
    auto xy = [&](int c) { return "_" + std::to_string(c % cols) + "_" + std::to_string(c / cols); };

    std::vector<std::string> cells_domain;
    for (int c = 0; c < n; ++c) cells_domain.push_back(std::to_string(c));

    {
        Variable pos;
        pos.name = "pos";
        pos.domain = cells_domain;
        inst.pos_var = p.add_var(std::move(pos));
        Variable heading;
        heading.name = "heading";
        heading.domain = {"north", "east", "south", "west"};
        inst.heading_var = p.add_var(std::move(heading));
        Variable gold;
        gold.name = "gold";
        gold.domain = cells_domain;
        inst.gold_var = p.add_var(std::move(gold));
        inst.gotgold_var = p.add_bool_var("gotgold", VarKind::State);
    }
    for (int c = 0; c < n; ++c) {
        inst.pit_var.push_back(p.add_bool_var("pit" + xy(c), VarKind::State));
        inst.wump_var.push_back(p.add_bool_var("wumpus" + xy(c), VarKind::State));
    }
    inst.glitter_var = p.add_bool_var("glitter", VarKind::Observable);
    for (int c = 0; c < n; ++c) {
        inst.breeze_var.push_back(p.add_bool_var("breeze" + xy(c), VarKind::Observable));
        inst.stench_var.push_back(p.add_bool_var("stench" + xy(c), VarKind::Observable));
        inst.dead_var.push_back(p.add_bool_var("dead" + xy(c), VarKind::Observable));
    }

    p.initial.push_back({Literal{inst.pos_var, inst.start_cell(), true}});
    p.initial.push_back({Literal{inst.heading_var, 1, true}}); // east
    p.initial.push_back({Literal{inst.gotgold_var, 0, true}});

    {
        Action fwd;
        fwd.name = "forward";
        for (int c = 0; c < n; ++c)
            for (int h = 0; h < 4; ++h) {
                int q = inst.next_cell(c, h);
                if (q < 0) continue; // bump: no movement at the wall
                ConditionalEffect eff;
                eff.condition = {Literal{inst.pos_var, c, true}, Literal{inst.heading_var, h, true}};
                eff.heads = {{Literal{inst.pos_var, q, true}}};
                fwd.effects.push_back(std::move(eff));
            }
        inst.forward_action = p.add_action(std::move(fwd));

        Action left;
        left.name = "turn-left";
        Action right;
        right.name = "turn-right";
        for (int h = 0; h < 4; ++h) {
            ConditionalEffect el;
            el.condition = {Literal{inst.heading_var, h, true}};
            el.heads = {{Literal{inst.heading_var, (h + 3) % 4, true}}};
            left.effects.push_back(std::move(el));
            ConditionalEffect er;
            er.condition = {Literal{inst.heading_var, h, true}};
            er.heads = {{Literal{inst.heading_var, (h + 1) % 4, true}}};
            right.effects.push_back(std::move(er));
        }
        inst.left_action = p.add_action(std::move(left));
        inst.right_action = p.add_action(std::move(right));

        Action grab;
        grab.name = "grab";
        for (int c = 0; c < n; ++c) {
            ConditionalEffect eff;
            eff.condition = {Literal{inst.pos_var, c, true}, Literal{inst.gold_var, c, true}};
            eff.heads = {{Literal{inst.gotgold_var, 1, true}}};
            grab.effects.push_back(std::move(eff));
        }
        inst.grab_action = p.add_action(std::move(grab));

        Action noop;
        noop.name = "noop";
        noop.is_noop = true;
        inst.noop_action = p.add_action(std::move(noop));
    }

    {
        Formula at_gold = Formula::var_eq(inst.gold_var, inst.pos_var);
        p.sensors.push_back({-1, inst.glitter_var, 1, at_gold});
        p.sensors.push_back({-1, inst.glitter_var, 0, Formula::negate(at_gold)});
    }
    for (int c = 0; c < n; ++c) {
        std::vector<Formula> pit_near, wump_near;
        for (int nb : inst.orth_neighbors(c)) {
            pit_near.push_back(Formula::lit(inst.pit_var[size_t(nb)], 1));
            wump_near.push_back(Formula::lit(inst.wump_var[size_t(nb)], 1));
        }
        Formula breezy = Formula::conj({Formula::lit(inst.pos_var, c), Formula::disj(pit_near)});
        p.sensors.push_back({-1, inst.breeze_var[size_t(c)], 1, breezy});
        p.sensors.push_back({-1, inst.breeze_var[size_t(c)], 0, Formula::negate(breezy)});
        Formula smelly = Formula::conj({Formula::lit(inst.pos_var, c), Formula::disj(wump_near)});
        p.sensors.push_back({-1, inst.stench_var[size_t(c)], 1, smelly});
        p.sensors.push_back({-1, inst.stench_var[size_t(c)], 0, Formula::negate(smelly)});
        Formula lethal = Formula::conj(
            {Formula::lit(inst.pos_var, c),
             Formula::disj({Formula::lit(inst.pit_var[size_t(c)], 1), Formula::lit(inst.wump_var[size_t(c)], 1)})});
        p.sensors.push_back({-1, inst.dead_var[size_t(c)], 1, lethal});
        p.sensors.push_back({-1, inst.dead_var[size_t(c)], 0, Formula::negate(lethal)});
    }

    {
        StateConstraint pc;
        pc.formula = Formula::count_true(inst.pit_var, npits);
        pc.scope = pc.formula.scope();
        p.constraints.push_back(std::move(pc));
        StateConstraint wc;
        wc.formula = Formula::count_true(inst.wump_var, nwumpus);
        wc.scope = wc.formula.scope();
        p.constraints.push_back(std::move(wc));
    }

    p.goal.push_back(Literal{inst.gotgold_var, 1, true});
    return inst;
}

struct WumpusSim {
    const WumpusInstance* inst;
    int pos, heading;
    bool has_gold = false, dead = false;

    explicit WumpusSim(const WumpusInstance& i) : inst(&i), pos(i.start_cell()), heading(1) {}

    bool legal(int) const { return true; }

    std::vector<std::pair<int, int>> percept() const {
        bool breeze = false, stench = false;
        for (int nb : inst->orth_neighbors(pos)) {
            breeze = breeze || inst->pits[size_t(nb)];
            stench = stench || inst->wumps[size_t(nb)];
        }
        bool lethal = inst->pits[size_t(pos)] || inst->wumps[size_t(pos)];
        bool glitter = inst->gold_cell == pos;
        return {{inst->glitter_var, glitter ? 1 : 0},
                {inst->breeze_var[size_t(pos)], breeze ? 1 : 0},
                {inst->stench_var[size_t(pos)], stench ? 1 : 0},
                {inst->dead_var[size_t(pos)], lethal ? 1 : 0}};
    }

    ExecStep initial_step() const { return ExecStep{inst->noop_action, percept()}; }

    std::vector<std::pair<int, int>> apply(int action) {
        if (action == inst->forward_action) {
            int q = inst->next_cell(pos, heading);
            if (q >= 0) pos = q;
        } else if (action == inst->left_action) {
            heading = (heading + 3) % 4;
        } else if (action == inst->right_action) {
            heading = (heading + 1) % 4;
        } else if (action == inst->grab_action) {
            if (inst->gold_cell == pos) has_gold = true;
        }
        if (inst->pits[size_t(pos)] || inst->wumps[size_t(pos)]) dead = true;
        return percept();
    }

    enum class Status { Running, Won, Lost };
    Status status() const {
        if (dead) return Status::Lost;
        if (has_gold) return Status::Won;
        return Status::Running;
    }
};

} // namespace btrack
