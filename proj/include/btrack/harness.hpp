#pragma once

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <thread>

#include "policy.hpp"

namespace btrack {

enum class Domain { Minesweeper, Battleship, Wumpus };

inline const char* domain_name(Domain d) {
    switch (d) {
        case Domain::Minesweeper: return "minesweeper";
        case Domain::Battleship: return "battleship";
        case Domain::Wumpus: return "wumpus";
    }
    return "?";
}

inline std::optional<Domain> domain_from_name(const std::string& s) {
    for (Domain d : {Domain::Minesweeper, Domain::Battleship, Domain::Wumpus})
        if (s == domain_name(d)) return d;
    return std::nullopt;
}

struct RunConfig {
    Domain domain = Domain::Minesweeper;
    int rows = 8, cols = 8;
    int mines = 10;
    int ships = 4;
    std::vector<int> ship_sizes; // empty: default fleet
    int pits = 1, wumpus = 1;
    FlagMode flag_mode = FlagMode::MineTrue;
    Algorithm algorithm = Algorithm::Beam;
    std::string policy = "greedy";
    int games = 100;
    uint64_t seed = 1;
    int episode_cap = 0; // 0: domain default
    int workers = 0;     // 0: env or hardware
    std::string trace_dir;

    int default_cap() const {
        switch (domain) {
            case Domain::Minesweeper: return 3 * rows * cols + 16;
            case Domain::Battleship: return rows * cols;
            case Domain::Wumpus: return 10 * rows * cols;
        }
        return 1000;
    }

    Json to_json() const {
        Json j;
        j["domain"] = domain_name(domain);
        j["rows"] = rows;
        j["cols"] = cols;
        if (domain == Domain::Minesweeper) {
            j["mines"] = mines;
            j["flag_mode"] = flag_mode_name(flag_mode);
        }
        if (domain == Domain::Battleship) {
            j["ships"] = ships;
            Json sizes = Json::array();
            for (int s : ship_sizes.empty() ? default_fleet(ships) : ship_sizes) sizes.push_back(s);
            j["ship_sizes"] = sizes;
        }
        if (domain == Domain::Wumpus) {
            j["pits"] = pits;
            j["wumpus"] = wumpus;
        }
        j["algorithm"] = algorithm_name(algorithm);
        j["policy"] = policy;
        j["games"] = games;
        j["seed"] = seed;
        j["episode_cap"] = episode_cap ? episode_cap : default_cap();
        return j;
    }
};

struct GameStats {
    bool win = false;
    int decisions = 0;
    int guesses = 0;
    int torpedoes = 0;
    std::string loss_kind; // death | surrender | cap | illegal, empty when won
    double decision_seconds = 0.0;
    double game_seconds = 0.0;
    bool engine_bug = false;
    std::string note;
};

struct Aggregate {
    size_t n = 0;
    double sum = 0.0, sumsq = 0.0;
    void add(double x) {
        ++n;
        sum += x;
        sumsq += x * x;
    }
    double mean() const { return n ? sum / double(n) : 0.0; }
    double sd() const {
        if (n < 2) return 0.0;
        double m = mean();
        double var = (sumsq - double(n) * m * m) / double(n - 1);
        return var > 0 ? std::sqrt(var) : 0.0;
    }
};

struct BatchReport {
    RunConfig config;
    size_t games = 0, wins = 0, engine_bugs = 0;
    Aggregate decisions, guesses, torpedoes, dec_time, game_time;
    size_t guesses_total = 0;
    std::map<std::string, size_t> losses;
    std::string first_bug;

    double win_pct() const { return games ? 100.0 * double(wins) / double(games) : 0.0; }

    Json to_json() const {
        Json j;
        j["config"] = config.to_json();
        Json r;
        r["games"] = games;
        r["wins"] = wins;
        r["win_pct"] = win_pct();
        r["decisions"] = {{"mean", decisions.mean()}, {"sd", decisions.sd()}};
        r["guesses"] = {{"mean", guesses.mean()}, {"sd", guesses.sd()}, {"total", guesses_total}};
        if (config.domain == Domain::Battleship)
            r["torpedoes"] = {{"mean", torpedoes.mean()}, {"sd", torpedoes.sd()}};
        Json l;
        for (const auto& [k, v] : losses) l[k] = v;
        r["losses"] = l;
        r["engine_bugs"] = engine_bugs;
        if (!first_bug.empty()) r["first_bug"] = first_bug;
        j["results"] = r;
        j["timing"] = {{"decision_mean_s", dec_time.mean()},
                       {"game_mean_s", game_time.mean()},
                       {"total_s", game_time.sum}};
        return j;
    }

    std::string csv() const {
        std::ostringstream h, r;
        h << "domain,rows,cols,counts,policy,algorithm,games,seed,win_pct,decisions_mean,decisions_sd,"
             "guesses_mean,guesses_total,torpedoes_mean,torpedoes_sd,time_per_decision_s,time_per_game_s";
        r << domain_name(config.domain) << ',' << config.rows << ',' << config.cols << ',';
        switch (config.domain) {
            case Domain::Minesweeper: r << config.mines; break;
            case Domain::Battleship: r << config.ships; break;
            case Domain::Wumpus: r << config.pits << '/' << config.wumpus; break;
        }
        r << ',' << config.policy << ',' << algorithm_name(config.algorithm) << ',' << games << ',' << config.seed
          << ',' << win_pct() << ',' << decisions.mean() << ',' << decisions.sd() << ',' << guesses.mean() << ','
          << guesses_total << ',' << torpedoes.mean() << ',' << torpedoes.sd() << ',' << dec_time.mean() << ','
          << game_time.mean();
        return h.str() + "\n" + r.str() + "\n";
    }
};

namespace detail {

inline const char* decision_kind_name(PolicyDecision::Kind k) {
    switch (k) {
        case PolicyDecision::Kind::Certain: return "certain";
        case PolicyDecision::Kind::Guess: return "guess";
        case PolicyDecision::Kind::PathStep: return "path-step";
        case PolicyDecision::Kind::Surrender: return "surrender";
    }
    return "?";
}

class TraceWriter {
  public:
    TraceWriter() = default;
    explicit TraceWriter(const std::string& path) {
        if (!path.empty()) {
            out_.open(path);
            if (!out_) fail(Errc::parse_error, "cannot open trace file " + path);
        }
    }
    bool enabled() const { return out_.is_open(); }
    void line(const Json& j) {
        if (out_.is_open()) out_ << j.dump() << '\n';
    }

  private:
    std::ofstream out_;
};

} // namespace detail

inline Json hidden_to_json(const MinesweeperInstance& inst) {
    Json mines = Json::array();
    for (int c = 0; c < inst.cell_count(); ++c)
        if (inst.mines[size_t(c)]) mines.push_back(Json::array({c % inst.cols, c / inst.cols}));
    return Json{{"mines", mines}};
}

inline Json hidden_to_json(const BattleshipInstance& inst) {
    Json ships = Json::array();
    for (const auto& s : inst.ships)
        ships.push_back(Json{{"size", s.size}, {"x", s.x}, {"y", s.y}, {"horizontal", s.horizontal}});
    return Json{{"ships", ships}};
}

inline Json hidden_to_json(const WumpusInstance& inst) {
    Json pits = Json::array(), wumps = Json::array();
    for (int c = 0; c < inst.cell_count(); ++c) {
        if (inst.pits[size_t(c)]) pits.push_back(Json::array({c % inst.cols, c / inst.cols}));
        if (inst.wumps[size_t(c)]) wumps.push_back(Json::array({c % inst.cols, c / inst.cols}));
    }
    return Json{{"pits", pits},
                {"wumpus", wumps},
                {"gold", Json::array({inst.gold_cell % inst.cols, inst.gold_cell / inst.cols})}};
}

// ---- single episodes -------------------------------------------------------

namespace detail {

using Clock = std::chrono::steady_clock;

inline double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

template <typename Inst, typename Sim, typename PolicyFn>
GameStats run_episode_generic(const Inst& inst, Sim& sim, const RunConfig& cfg, PolicyFn select,
                              detail::TraceWriter& trace, const std::optional<ExecStep>& init_step,
                              const Tracker& tracker_template) {
    using Status = typename Sim::Status;
    GameStats g;
    auto game_start = Clock::now();
    try {
        Tracker t(tracker_template);
        if (init_step) t.step(*init_step);
        const int cap = cfg.episode_cap ? cfg.episode_cap : cfg.default_cap();
        while (sim.status() == Status::Running) {
            if (g.decisions >= cap) {
                g.loss_kind = "cap";
                break;
            }
            auto t0 = Clock::now();
            PolicyDecision d = select(t);
            if (d.kind == PolicyDecision::Kind::Surrender) {
                g.decision_seconds += seconds_since(t0);
                g.loss_kind = "surrender";
                break;
            }
            ++g.decisions;
            if (d.kind == PolicyDecision::Kind::Guess) ++g.guesses;
            auto obs = sim.apply(d.action);
            bool terminal_loss = false;
            if constexpr (std::is_same_v<Sim, MinesweeperSim>) {
                terminal_loss = sim.dead || sim.illegal;
                if (sim.illegal) g.loss_kind = "illegal";
                if (sim.dead) g.loss_kind = "death";
            } else if constexpr (std::is_same_v<Sim, WumpusSim>) {
                terminal_loss = sim.dead;
                if (sim.dead) g.loss_kind = "death";
            } else {
                ++g.torpedoes;
            }
            if (!terminal_loss) t.step(ExecStep{d.action, obs});
            double dt = seconds_since(t0);
            g.decision_seconds += dt;
            if (trace.enabled()) {
                Json s;
                s["type"] = "step";
                s["i"] = g.decisions;
                s["action"] = inst.problem.actions[size_t(d.action)].name;
                Json jo = Json::array();
                for (auto& [y, v] : obs)
                    jo.push_back(Json::array({inst.problem.vars[size_t(y)].name,
                                              inst.problem.vars[size_t(y)].domain[size_t(v)]}));
                s["obs"] = jo;
                s["kind"] = decision_kind_name(d.kind);
                if (d.marginal >= 0) s["marginal"] = d.marginal;
                s["tuples"] = terminal_loss ? 0 : t.total_tuples();
                char buf[20];
                std::snprintf(buf, sizeof buf, "%016llx",
                              static_cast<unsigned long long>(terminal_loss ? 0 : t.belief_hash()));
                s["belief"] = buf;
                s["us"] = int(dt * 1e6);
                trace.line(s);
            }
            if (terminal_loss) break;
        }
        g.win = sim.status() == Status::Won;
    } catch (const Error& e) {
        g.engine_bug = true;
        g.note = e.what();
        g.loss_kind = "engine-bug";
        g.win = false;
    }
    g.game_seconds = seconds_since(game_start);
    return g;
}

} // namespace detail

// Per-batch state shared by episodes: the problem structure is identical for
// every instance seed, so one initialized tracker serves as the template all
// episodes copy from.
struct BatchContext {
    RunConfig cfg;
    std::optional<MinesweeperInstance> ms;
    std::optional<BattleshipInstance> bs;
    std::optional<WumpusInstance> wu;
    std::unique_ptr<Tracker> tracker_tpl;

    explicit BatchContext(const RunConfig& c) : cfg(c) {
        switch (cfg.domain) {
            case Domain::Minesweeper:
                ms = gen_minesweeper(cfg.rows, cfg.cols, cfg.mines, 0, cfg.flag_mode);
                tracker_tpl = std::make_unique<Tracker>(ms->problem, cfg.algorithm);
                break;
            case Domain::Battleship:
                bs = gen_battleship(cfg.rows, cfg.ships, 0, cfg.ship_sizes);
                tracker_tpl = std::make_unique<Tracker>(bs->problem, cfg.algorithm);
                break;
            case Domain::Wumpus:
                wu = gen_wumpus(cfg.rows, cfg.cols, cfg.pits, cfg.wumpus, 0);
                tracker_tpl = std::make_unique<Tracker>(wu->problem, cfg.algorithm);
                break;
        }
    }
};

inline GameStats run_episode(const BatchContext& ctx, size_t index, detail::TraceWriter& trace) {
    const RunConfig& cfg = ctx.cfg;
    uint64_t inst_seed = Rng::derive(cfg.seed, 2 * index);
    uint64_t policy_seed = Rng::derive(cfg.seed, 2 * index + 1);
    switch (cfg.domain) {
        case Domain::Minesweeper: {
            auto inst = gen_minesweeper(cfg.rows, cfg.cols, cfg.mines, inst_seed, cfg.flag_mode);
            if (trace.enabled())
                trace.line(Json{{"type", "header"},
                                {"config", cfg.to_json()},
                                {"episode", index},
                                {"instance_seed", inst_seed},
                                {"hidden", hidden_to_json(inst)}});
            MinesweeperSim sim(inst);
            auto g = detail::run_episode_generic(
                inst, sim, cfg, [&](const Tracker& t) { return minesweeper_greedy(inst, t); }, trace, std::nullopt,
                *ctx.tracker_tpl);
            return g;
        }
        case Domain::Battleship: {
            auto inst = gen_battleship(cfg.rows, cfg.ships, inst_seed, cfg.ship_sizes);
            if (trace.enabled())
                trace.line(Json{{"type", "header"},
                                {"config", cfg.to_json()},
                                {"episode", index},
                                {"instance_seed", inst_seed},
                                {"hidden", hidden_to_json(inst)}});
            BattleshipSim sim(inst);
            Rng prng(policy_seed);
            auto select = [&](const Tracker& t) {
                return cfg.policy == "random" ? battleship_random(inst, t, prng) : battleship_greedy(inst, t);
            };
            auto g = detail::run_episode_generic(inst, sim, cfg, select, trace, std::nullopt, *ctx.tracker_tpl);
            return g;
        }
        case Domain::Wumpus: {
            auto inst = gen_wumpus(cfg.rows, cfg.cols, cfg.pits, cfg.wumpus, inst_seed);
            if (trace.enabled())
                trace.line(Json{{"type", "header"},
                                {"config", cfg.to_json()},
                                {"episode", index},
                                {"instance_seed", inst_seed},
                                {"hidden", hidden_to_json(inst)}});
            WumpusSim sim(inst);
            auto g = detail::run_episode_generic(
                inst, sim, cfg, [&](const Tracker& t) { return wumpus_heuristic(inst, t); }, trace,
                std::optional<ExecStep>(sim.initial_step()), *ctx.tracker_tpl);
            return g;
        }
    }
    fail(Errc::generation_failed, "unknown domain");
}

inline int default_workers() {
    if (const char* env = std::getenv("BTRACK_WORKERS")) {
        int w = std::atoi(env);
        if (w > 0) return w;
    }
    unsigned hw = std::thread::hardware_concurrency();
    return hw ? int(hw) : 1;
}

// Runs config.games seeded episodes in parallel and aggregates the stats in
// episode order; outputs are identical for any worker count.
inline BatchReport run_batch(const RunConfig& cfg) {
    std::vector<GameStats> stats(size_t(cfg.games));
    int workers = cfg.workers > 0 ? cfg.workers : default_workers();
    workers = std::max(1, std::min(workers, cfg.games));
    BatchContext ctx(cfg);
    std::atomic<size_t> next{0};
    auto work = [&]() {
        while (true) {
            size_t i = next.fetch_add(1);
            if (i >= size_t(cfg.games)) break;
            detail::TraceWriter trace(cfg.trace_dir.empty()
                                          ? std::string()
                                          : cfg.trace_dir + "/ep" + std::to_string(i) + ".ndjson");
            GameStats g = run_episode(ctx, i, trace);
            if (trace.enabled()) {
                Json r;
                r["type"] = "result";
                r["win"] = g.win;
                r["decisions"] = g.decisions;
                r["guesses"] = g.guesses;
                if (!g.loss_kind.empty()) r["loss"] = g.loss_kind;
                trace.line(r);
            }
            stats[i] = std::move(g);
        }
    };
    std::vector<std::thread> pool;
    for (int w = 1; w < workers; ++w) pool.emplace_back(work);
    work();
    for (auto& th : pool) th.join();

    BatchReport rep;
    rep.config = cfg;
    rep.games = size_t(cfg.games);
    for (const auto& g : stats) {
        if (g.win) ++rep.wins;
        if (g.engine_bug) {
            ++rep.engine_bugs;
            if (rep.first_bug.empty()) rep.first_bug = g.note;
        }
        if (!g.win && !g.loss_kind.empty()) ++rep.losses[g.loss_kind];
        rep.decisions.add(g.decisions);
        rep.guesses.add(g.guesses);
        rep.guesses_total += size_t(g.guesses);
        if (cfg.domain == Domain::Battleship) rep.torpedoes.add(g.torpedoes);
        if (g.decisions > 0) rep.dec_time.add(g.decision_seconds / g.decisions);
        rep.game_time.add(g.game_seconds);
    }
    return rep;
}

} // namespace btrack
