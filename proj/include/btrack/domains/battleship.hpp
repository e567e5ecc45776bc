#pragma once

#include "../json_io.hpp"
#include "../rng.hpp"
#include "../tracker.hpp"

namespace btrack {

// n x n grid with a hidden fleet. Each cell carries the size of the ship
// covering it (0 for water), its orientation, the cell's position within the
// ship, the running hit count of that ship, and whether the cell was fired
// at. fire(x,y) reports water/no-water; state constraints tie neighboring
// cells of one ship together. The goal holds when every ship is fully hit.
struct BattleshipInstance {
    int dim = 0;
    std::vector<int> fleet; // ship sizes
    uint64_t seed = 0;
    Problem problem;

    struct Ship {
        int size, x, y;
        bool horizontal;
    };
    std::vector<Ship> ships;       // hidden placement
    std::vector<int> ship_at;      // cell -> ship index or -1
    std::vector<int> anchor_index; // cell -> position within ship (0 if water)

    std::vector<int> hit_var, sz_var, hz_var, anc_var, nhits_var, water_var, sunk_var;
    std::vector<int> fire_action;
    int noop_action = -1;

    static constexpr int kSizes[5] = {0, 2, 3, 4, 5};
    static int sz_index(int size) {
        for (int i = 0; i < 5; ++i)
            if (kSizes[i] == size) return i;
        return -1;
    }

    int cell(int x, int y) const { return y * dim + x; }
    int cell_count() const { return dim * dim; }
};

namespace detail {

inline Formula implies(Formula a, Formula b) {
    return Formula::disj({Formula::negate(std::move(a)), std::move(b)});
}

} // namespace detail

inline std::vector<int> default_fleet(int nships) {
    static const int block[4] = {2, 3, 4, 5};
    std::vector<int> out;
    for (int i = 0; i < nships; ++i) out.push_back(block[i % 4]);
    return out;
}

inline BattleshipInstance gen_battleship(int dim, int nships, uint64_t seed, std::vector<int> fleet = {}) {
    if (dim < 2) fail(Errc::generation_failed, "grid must be at least 2x2");
    if (fleet.empty()) fleet = default_fleet(nships);
    for (int s : fleet)
        if (BattleshipInstance::sz_index(s) <= 0) fail(Errc::generation_failed, "ship sizes must be in {2,3,4,5}");

    BattleshipInstance inst;
    inst.dim = dim;
    inst.fleet = fleet;
    inst.seed = seed;
    const int n = dim * dim;

    // hidden placement, larger ships first; ships neither overlap nor touch,
    // diagonals included
    {
        Rng rng(Rng::derive(seed, 0xB0A7));
        std::vector<int> order = fleet;
        std::sort(order.rbegin(), order.rend());
        for (int attempt = 0;; ++attempt) {
            if (attempt >= 100) fail(Errc::generation_failed, "could not place fleet");
            inst.ships.clear();
            inst.ship_at.assign(size_t(n), -1);
            inst.anchor_index.assign(size_t(n), 0);
            std::vector<bool> blocked(size_t(n), false);
            bool ok = true;
            for (int size : order) {
                bool placed = false;
                for (int tries = 0; tries < 1000 && !placed; ++tries) {
                    bool horizontal = rng.coin();
                    int maxx = horizontal ? dim - size : dim - 1;
                    int maxy = horizontal ? dim - 1 : dim - size;
                    if (maxx < 0 || maxy < 0) break;
                    int x = int(rng.below(uint64_t(maxx + 1)));
                    int y = int(rng.below(uint64_t(maxy + 1)));
                    bool free = true;
                    for (int i = 0; i < size && free; ++i)
                        free = !blocked[size_t(inst.cell(horizontal ? x + i : x, horizontal ? y : y + i))];
                    if (!free) continue;
                    int ship_idx = int(inst.ships.size());
                    inst.ships.push_back({size, x, y, horizontal});
                    for (int i = 0; i < size; ++i) {
                        int cx = horizontal ? x + i : x, cy = horizontal ? y : y + i;
                        int c = inst.cell(cx, cy);
                        inst.ship_at[size_t(c)] = ship_idx;
                        inst.anchor_index[size_t(c)] = i;
                        for (int by = cy - 1; by <= cy + 1; ++by)
                            for (int bx = cx - 1; bx <= cx + 1; ++bx)
                                if (bx >= 0 && bx < dim && by >= 0 && by < dim)
                                    blocked[size_t(inst.cell(bx, by))] = true;
                    }
                    placed = true;
                }
                if (!placed) {
                    ok = false;
                    break;
                }
            }
            if (ok) break;
        }
    }

    Problem& p = inst.problem;
    p.name = "battleship-" + std::to_string(dim) + "x" + std::to_string(dim) + "-" + std::to_string(int(fleet.size()));
    auto xy = [&](int c) { return "_" + std::to_string(c % dim) + "_" + std::to_string(c / dim); };

    const std::vector<std::string> sz_domain = {"0", "2", "3", "4", "5"};
    const std::vector<std::string> anc_domain = {"0", "1", "2", "3", "4"};
    const std::vector<std::string> nhits_domain = {"0", "1", "2", "3", "4", "5"};

    for (int c = 0; c < n; ++c) {
        inst.hit_var.push_back(p.add_bool_var("hit" + xy(c), VarKind::State));
        Variable sz;
        sz.name = "sz" + xy(c);
        sz.domain = sz_domain;
        inst.sz_var.push_back(p.add_var(std::move(sz)));
        inst.hz_var.push_back(p.add_bool_var("hz" + xy(c), VarKind::State));
        Variable anc;
        anc.name = "anc" + xy(c);
        anc.domain = anc_domain;
        inst.anc_var.push_back(p.add_var(std::move(anc)));
        Variable nh;
        nh.name = "nhits" + xy(c);
        nh.domain = nhits_domain;
        inst.nhits_var.push_back(p.add_var(std::move(nh)));
        inst.water_var.push_back(p.add_bool_var("water" + xy(c), VarKind::Observable));
    }
    for (int c = 0; c < n; ++c) {
        Variable sunk;
        sunk.name = "sunk" + xy(c);
        sunk.kind = VarKind::Defined;
        sunk.domain = {"false", "true"};
        sunk.scope = {inst.sz_var[size_t(c)], inst.nhits_var[size_t(c)]};
        std::vector<Formula> eq;
        for (int si = 0; si < 5; ++si) {
            int size = BattleshipInstance::kSizes[si];
            int nh_index = size; // nhits domain is 0..5 by value
            eq.push_back(Formula::conj(
                {Formula::lit(inst.sz_var[size_t(c)], si), Formula::lit(inst.nhits_var[size_t(c)], nh_index)}));
        }
        Formula done = Formula::disj(std::move(eq));
        sunk.cases = {Formula::negate(done), done};
        inst.sunk_var.push_back(p.add_var(std::move(sunk)));
    }

    for (int c = 0; c < n; ++c) {
        p.initial.push_back({Literal{inst.hit_var[size_t(c)], 0, true}});
        p.initial.push_back({Literal{inst.nhits_var[size_t(c)], 0, true}});
    }

    // fire(x,y): the fired cell registers the hit for its own ship; cells in
    // the same row or column register it when their ship covers the fired
    // cell. The precondition keeps every cell fired at most once, so the hit
    // guard on the fired cell is only needed there.
    for (int c = 0; c < n; ++c) {
        int x = c % dim, y = c / dim;
        Action fire;
        fire.name = "fire" + xy(c);
        fire.precondition = {Literal{inst.hit_var[size_t(c)], 0, true}};
        fire.effects.push_back({{}, {{Literal{inst.hit_var[size_t(c)], 1, true}}}});
        for (int si = 1; si < 5; ++si) {
            int size = BattleshipInstance::kSizes[si];
            for (int nh = 0; nh < size; ++nh) {
                ConditionalEffect eff;
                eff.condition = {Literal{inst.hit_var[size_t(c)], 0, true}, Literal{inst.sz_var[size_t(c)], si, true},
                                 Literal{inst.nhits_var[size_t(c)], nh, true}};
                eff.heads = {{Literal{inst.nhits_var[size_t(c)], nh + 1, true}}};
                fire.effects.push_back(std::move(eff));
            }
        }
        for (int axis = 0; axis < 2; ++axis) {
            bool horizontal = axis == 0;
            for (int delta = -4; delta <= 4; ++delta) {
                if (delta == 0) continue;
                int ox = horizontal ? x - delta : x;
                int oy = horizontal ? y : y - delta;
                if (ox < 0 || ox >= dim || oy < 0 || oy >= dim) continue;
                int oc = inst.cell(ox, oy); // the cell whose ship may cover c
                for (int si = 1; si < 5; ++si) {
                    int size = BattleshipInstance::kSizes[si];
                    for (int k = 0; k < size && k < 5; ++k) {
                        if (k + delta < 0 || k + delta >= size) continue; // ship at oc must cover c
                        for (int nh = 0; nh < size; ++nh) {
                            ConditionalEffect eff;
                            eff.condition = {Literal{inst.hz_var[size_t(oc)], horizontal ? 1 : 0, true},
                                             Literal{inst.sz_var[size_t(oc)], si, true},
                                             Literal{inst.anc_var[size_t(oc)], k, true},
                                             Literal{inst.nhits_var[size_t(oc)], nh, true}};
                            eff.heads = {{Literal{inst.nhits_var[size_t(oc)], nh + 1, true}}};
                            fire.effects.push_back(std::move(eff));
                        }
                    }
                }
            }
        }
        inst.fire_action.push_back(p.add_action(std::move(fire)));
    }
    Action noop;
    noop.name = "noop";
    noop.is_noop = true;
    inst.noop_action = p.add_action(std::move(noop));

    for (int c = 0; c < n; ++c) {
        p.sensors.push_back(
            {inst.fire_action[size_t(c)], inst.water_var[size_t(c)], 1, Formula::lit(inst.sz_var[size_t(c)], 0)});
        p.sensors.push_back({inst.fire_action[size_t(c)], inst.water_var[size_t(c)], 0,
                             Formula::negate(Formula::lit(inst.sz_var[size_t(c)], 0))});
    }

    // per-cell placement validity: water is canonical (hz false, anc 0);
    // a ship cell's anchor/orientation must fit the grid
    for (int c = 0; c < n; ++c) {
        int x = c % dim, y = c / dim;
        std::vector<Formula> combos;
        combos.push_back(Formula::conj({Formula::lit(inst.sz_var[size_t(c)], 0),
                                        Formula::lit(inst.hz_var[size_t(c)], 0),
                                        Formula::lit(inst.anc_var[size_t(c)], 0)}));
        for (int si = 1; si < 5; ++si) {
            int size = BattleshipInstance::kSizes[si];
            for (int k = 0; k < size; ++k) {
                if (x - k >= 0 && x - k + size - 1 < dim)
                    combos.push_back(Formula::conj({Formula::lit(inst.sz_var[size_t(c)], si),
                                                    Formula::lit(inst.hz_var[size_t(c)], 1),
                                                    Formula::lit(inst.anc_var[size_t(c)], k)}));
                if (y - k >= 0 && y - k + size - 1 < dim)
                    combos.push_back(Formula::conj({Formula::lit(inst.sz_var[size_t(c)], si),
                                                    Formula::lit(inst.hz_var[size_t(c)], 0),
                                                    Formula::lit(inst.anc_var[size_t(c)], k)}));
            }
        }
        StateConstraint sc;
        sc.formula = Formula::disj(std::move(combos));
        sc.scope = sc.formula.scope();
        p.constraints.push_back(std::move(sc));
    }

    // ship continuity between orthogonal neighbors; the fleet is placed with
    // no two ships touching, so adjacent occupied cells always belong to one
    // ship (continuation along its axis)
    for (int c = 0; c < n; ++c) {
        int x = c % dim, y = c / dim;
        for (int axis = 0; axis < 2; ++axis) {
            bool horizontal = axis == 0;
            int nx = horizontal ? x + 1 : x;
            int ny = horizontal ? y : y + 1;
            if (nx >= dim || ny >= dim) continue;
            int r = inst.cell(nx, ny);
            int hz_val = horizontal ? 1 : 0;
            std::vector<Formula> parts;
            std::vector<Formula> links; // both occupied: same ship, consecutive anchors
            for (int si = 1; si < 5; ++si) {
                int size = BattleshipInstance::kSizes[si];
                for (int k = 0; k + 1 < size; ++k)
                    parts.push_back(detail::implies(
                        Formula::conj({Formula::lit(inst.sz_var[size_t(c)], si),
                                       Formula::lit(inst.hz_var[size_t(c)], hz_val),
                                       Formula::lit(inst.anc_var[size_t(c)], k)}),
                        Formula::conj({Formula::lit(inst.sz_var[size_t(r)], si),
                                       Formula::lit(inst.hz_var[size_t(r)], hz_val),
                                       Formula::lit(inst.anc_var[size_t(r)], k + 1)})));
                for (int k = 1; k < size; ++k)
                    parts.push_back(detail::implies(
                        Formula::conj({Formula::lit(inst.sz_var[size_t(r)], si),
                                       Formula::lit(inst.hz_var[size_t(r)], hz_val),
                                       Formula::lit(inst.anc_var[size_t(r)], k)}),
                        Formula::conj({Formula::lit(inst.sz_var[size_t(c)], si),
                                       Formula::lit(inst.hz_var[size_t(c)], hz_val),
                                       Formula::lit(inst.anc_var[size_t(c)], k - 1)})));
                for (int k = 0; k + 1 < size; ++k)
                    links.push_back(Formula::conj({Formula::lit(inst.sz_var[size_t(c)], si),
                                                   Formula::lit(inst.hz_var[size_t(c)], hz_val),
                                                   Formula::lit(inst.anc_var[size_t(c)], k),
                                                   Formula::lit(inst.sz_var[size_t(r)], si),
                                                   Formula::lit(inst.hz_var[size_t(r)], hz_val),
                                                   Formula::lit(inst.anc_var[size_t(r)], k + 1)}));
            }
            links.push_back(Formula::lit(inst.sz_var[size_t(c)], 0));
            links.push_back(Formula::lit(inst.sz_var[size_t(r)], 0));
            parts.push_back(Formula::disj(std::move(links)));
            StateConstraint sc;
            sc.formula = Formula::conj(std::move(parts));
            sc.scope = sc.formula.scope();
            p.constraints.push_back(std::move(sc));
        }
    }

    // ships never touch diagonally
    for (int c = 0; c < n; ++c) {
        int x = c % dim, y = c / dim;
        for (int ddx : {1, -1}) {
            int nx = x + ddx, ny = y + 1;
            if (nx < 0 || nx >= dim || ny >= dim) continue;
            int d = inst.cell(nx, ny);
            StateConstraint sc;
            sc.formula =
                Formula::disj({Formula::lit(inst.sz_var[size_t(c)], 0), Formula::lit(inst.sz_var[size_t(d)], 0)});
            sc.scope = sc.formula.scope();
            p.constraints.push_back(std::move(sc));
        }
    }

    for (int c = 0; c < n; ++c) p.goal.push_back(Literal{inst.sunk_var[size_t(c)], 1, true});
    return inst;
}

struct BattleshipSim {
    const BattleshipInstance* inst;
    std::vector<bool> fired;
    int ship_cells_left = 0;

    explicit BattleshipSim(const BattleshipInstance& i) : inst(&i), fired(size_t(i.cell_count()), false) {
        for (int c = 0; c < i.cell_count(); ++c)
            if (i.ship_at[size_t(c)] >= 0) ++ship_cells_left;
    }

    bool legal(int action) const {
        for (int c = 0; c < inst->cell_count(); ++c)
            if (action == inst->fire_action[size_t(c)]) return !fired[size_t(c)];
        return true;
    }

    std::vector<std::pair<int, int>> apply(int action) {
        for (int c = 0; c < inst->cell_count(); ++c) {
            if (action != inst->fire_action[size_t(c)]) continue;
            fired[size_t(c)] = true;
            bool water = inst->ship_at[size_t(c)] < 0;
            if (!water) --ship_cells_left;
            return {{inst->water_var[size_t(c)], water ? 1 : 0}};
        }
        return {};
    }

    enum class Status { Running, Won, Lost };
    Status status() const { return ship_cells_left == 0 ? Status::Won : Status::Running; }
};

} // namespace btrack
