#include <CLI11.hpp>

#include <btrack/oracle.hpp>
#include <btrack/validate.hpp>

#include <fstream>
#include <iostream>

using namespace btrack;

namespace {

struct DomainArgs {
    std::string domain = "minesweeper";
    int rows = 8, cols = 0, dim = 0;
    int mines = 10, ships = 4, pits = 1, wumpus = 1;
    std::string flag_mode = "mine";
    std::vector<int> ship_sizes;

    void attach(CLI::App* cmd) {
        cmd->add_option("--domain", domain, "minesweeper | battleship | wumpus")->required();
        cmd->add_option("--rows", rows, "grid rows");
        cmd->add_option("--cols", cols, "grid cols (defaults to rows)");
        cmd->add_option("--dim", dim, "square grid shorthand");
        cmd->add_option("--mines", mines, "minesweeper: number of mines");
        cmd->add_option("--ships", ships, "battleship: number of ships");
        cmd->add_option("--ship-sizes", ship_sizes, "battleship: explicit ship sizes");
        cmd->add_option("--pits", pits, "wumpus: number of pits");
        cmd->add_option("--wumpus", wumpus, "wumpus: number of wumpuses");
        cmd->add_option("--flag-mode", flag_mode, "minesweeper flag precondition: mine | not-mine | none");
    }

    Domain parsed_domain() const {
        auto d = domain_from_name(domain);
        if (!d) throw CLI::ValidationError("--domain", "unknown domain " + domain);
        return *d;
    }
    FlagMode parsed_flag_mode() const {
        if (flag_mode == "mine") return FlagMode::MineTrue;
        if (flag_mode == "not-mine") return FlagMode::NotMine;
        if (flag_mode == "none") return FlagMode::None;
        throw CLI::ValidationError("--flag-mode", "unknown mode " + flag_mode);
    }
    int r() const { return dim > 0 ? dim : rows; }
    int c() const { return dim > 0 ? dim : (cols > 0 ? cols : rows); }

    void fill(RunConfig& cfg) const {
        cfg.domain = parsed_domain();
        cfg.rows = r();
        cfg.cols = c();
        cfg.mines = mines;
        cfg.ships = ships;
        cfg.ship_sizes = ship_sizes;
        cfg.pits = pits;
        cfg.wumpus = wumpus;
        cfg.flag_mode = parsed_flag_mode();
    }
};

Problem build_problem(const DomainArgs& a, uint64_t seed, Json* hidden = nullptr) {
    switch (a.parsed_domain()) {
        case Domain::Minesweeper: {
            auto inst = gen_minesweeper(a.r(), a.c(), a.mines, seed, a.parsed_flag_mode());
            if (hidden) *hidden = hidden_to_json(inst);
            return std::move(inst.problem);
        }
        case Domain::Battleship: {
            auto inst = gen_battleship(a.r(), a.ships, seed, a.ship_sizes);
            if (hidden) *hidden = hidden_to_json(inst);
            return std::move(inst.problem);
        }
        case Domain::Wumpus: {
            auto inst = gen_wumpus(a.r(), a.c(), a.pits, a.wumpus, seed);
            if (hidden) *hidden = hidden_to_json(inst);
            return std::move(inst.problem);
        }
    }
    fail(Errc::generation_failed, "unknown domain");
}

int cmd_analyze(const DomainArgs& args, const std::string& problem_file, uint64_t seed, bool as_json,
                bool per_variable, const std::string& dot_path) {
    Problem p;
    if (!problem_file.empty()) {
        std::ifstream in(problem_file);
        if (!in) {
            std::cerr << "cannot open " << problem_file << "\n";
            return 2;
        }
        p = problem_from_json(Json::parse(in));
    } else {
        p = build_problem(args, seed);
    }

    auto violations = validate(p);
    CausalGraph g(p);
    WidthReport w = g.widths();
    auto determined = g.determined_vars();
    Decomposition cd = g.causal_decomposition();
    Decomposition fd = g.factored_decomposition();

    if (!dot_path.empty()) {
        std::ofstream out(dot_path);
        out << g.dot();
    }

    size_t constraint_beams = 0;
    for (bool c : cd.constraint_target) constraint_beams += c;
    int max_factored_beam = 0;
    for (const auto& b : fd.beams) max_factored_beam = std::max(max_factored_beam, int(b.size()));

    if (as_json) {
        Json j;
        j["problem"] = p.name;
        j["variables"] = p.vars.size();
        j["actions"] = p.actions.size();
        j["constraints"] = p.constraints.size();
        Json jv = Json::array();
        for (const auto& v : violations) jv.push_back(Json{{"code", v.code}, {"where", v.where}});
        j["violations"] = jv;
        j["determined"] = determined.size();
        j["width"] = w.problem_width;
        j["causal_width"] = w.problem_causal_width;
        j["effective_causal_width"] = w.effective_causal_width;
        j["max_factored_beam"] = max_factored_beam;
        j["causal_beams"] = cd.beams.size();
        j["constraint_beams"] = constraint_beams;
        if (per_variable) {
            Json pv = Json::array();
            for (size_t i = 0; i < w.causal_targets.size(); ++i) {
                int t = w.causal_targets[i];
                pv.push_back(Json{{"target", t < int(p.vars.size()) ? p.vars[size_t(t)].name : "constraint"},
                                  {"causal_width", w.causal_width[i]},
                                  {"beam_size", w.beam_size[i]}});
            }
            j["causal_targets"] = pv;
            Json fw = Json::array();
            for (size_t i = 0; i < w.width_targets.size(); ++i)
                fw.push_back(Json{{"target", p.vars[size_t(w.width_targets[i])].name}, {"width", w.width[i]}});
            j["width_targets"] = fw;
        }
        std::cout << j.dump(2) << "\n";
    } else {
        std::cout << "problem: " << p.name << "\n"
                  << "variables: " << p.vars.size() << " (determined: " << determined.size() << ")\n"
                  << "actions: " << p.actions.size() << ", constraints: " << p.constraints.size() << "\n"
                  << "validate: " << (violations.empty() ? "ok" : std::to_string(violations.size()) + " violation(s)")
                  << "\n";
        for (const auto& v : violations) std::cout << "  - " << v.code << " @ " << v.where << "\n";
        std::cout << "width w(P): " << w.problem_width << "\n"
                  << "causal width w_c(P) (non-determined): " << w.problem_causal_width << "\n"
                  << "effective causal width (beam size): " << w.effective_causal_width << "\n"
                  << "factored beams: " << fd.beams.size() << " (largest " << max_factored_beam << ")\n"
                  << "causal beams: " << cd.beams.size() << " (+" << constraint_beams << " constraint beams)\n";
        if (per_variable) {
            std::cout << "per-target causal widths:\n";
            for (size_t i = 0; i < w.causal_targets.size(); ++i) {
                int t = w.causal_targets[i];
                std::cout << "  " << (t < int(p.vars.size()) ? p.vars[size_t(t)].name : "constraint") << ": w_c="
                          << w.causal_width[i] << " |B_C|=" << w.beam_size[i] << "\n";
            }
        }
    }
    return violations.empty() ? 0 : 1;
}

int cmd_run(RunConfig cfg, const std::string& report_path, const std::string& csv_path) {
    BatchReport rep = run_batch(cfg);
    Json j = rep.to_json();
    if (!report_path.empty()) {
        std::ofstream out(report_path);
        out << j.dump(2) << "\n";
    }
    if (!csv_path.empty()) {
        std::ofstream out(csv_path);
        out << rep.csv();
    }
    std::cout << j.dump(2) << "\n";
    return rep.engine_bugs == 0 ? 0 : 3;
}

int cmd_oracle(OracleConfig cfg) {
    OracleReport rep = oracle_suite(cfg);
    Json j;
    j["executions"] = rep.executions;
    j["steps"] = rep.steps;
    j["beams_checked"] = rep.beams_checked;
    j["soundness_violations"] = rep.soundness_violations;
    j["factored_violations"] = rep.factored_violations;
    j["cbt_violations"] = rep.cbt_violations;
    j["sandwich_violations"] = rep.sandwich_violations;
    j["query_violations"] = rep.query_violations;
    if (!rep.first_violation.empty()) j["first_violation"] = rep.first_violation;
    j["ok"] = rep.ok();
    std::cout << j.dump(2) << "\n";
    return rep.ok() ? 0 : 3;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"belief tracking for planning with sensing: trackers, benchmark domains, and policies"};
    app.require_subcommand(1);

    // analyze
    auto* analyze = app.add_subcommand("analyze", "widths, determined variables, and decomposition summary");
    DomainArgs an_args;
    an_args.attach(analyze);
    analyze->get_option("--domain")->required(false);
    std::string an_problem, an_dot;
    uint64_t an_seed = 1;
    bool an_json = false, an_pervar = false;
    analyze->add_option("--problem", an_problem, "analyze a btp-problem/1 JSON file instead of a generated domain");
    analyze->add_option("--seed", an_seed, "generator seed");
    analyze->add_flag("--json", an_json, "JSON output");
    analyze->add_flag("--per-variable", an_pervar, "per-target width table");
    analyze->add_option("--dot", an_dot, "write causal graph in DOT format");

    // run
    auto* run = app.add_subcommand("run", "run seeded benchmark episodes and aggregate statistics");
    DomainArgs run_args;
    run_args.attach(run);
    RunConfig run_cfg;
    std::string run_algo = "beam", run_report, run_csv;
    run->add_option("--algorithm", run_algo, "flat | factored | decoupled | cbt | beam");
    run->add_option("--policy", run_cfg.policy, "greedy | random (battleship) | heuristic (wumpus)");
    run->add_option("--games", run_cfg.games, "number of episodes");
    run->add_option("--seed", run_cfg.seed, "master seed")->required();
    run->add_option("--episode-cap", run_cfg.episode_cap, "max decisions per episode (0: domain default)");
    run->add_option("--workers", run_cfg.workers, "worker threads (0: BTRACK_WORKERS or hardware)");
    run->add_option("--report", run_report, "write JSON report here");
    run->add_option("--csv", run_csv, "write CSV report here");
    run->add_option("--traces", run_cfg.trace_dir, "write per-episode NDJSON traces into this directory");

    // oracle
    auto* oracle = app.add_subcommand("oracle", "cross-check all trackers against flat tracking");
    DomainArgs or_args;
    or_args.rows = 3;
    or_args.mines = 3;
    or_args.ships = 1;
    or_args.attach(oracle);
    OracleConfig or_cfg;
    oracle->add_option("--executions", or_cfg.executions, "number of random executions");
    oracle->add_option("--max-steps", or_cfg.max_steps, "max steps per execution");
    oracle->add_option("--seed", or_cfg.seed, "master seed");

    // replay
    auto* replay = app.add_subcommand("replay", "re-run a recorded trace and verify beliefs reproduce");
    std::string replay_path;
    replay->add_option("trace", replay_path, "trace file (NDJSON)")->required();

    // dump-instance
    auto* dump = app.add_subcommand("dump-instance", "emit a generated instance as JSON (problem + hidden state)");
    DomainArgs dump_args;
    dump_args.attach(dump);
    uint64_t dump_seed = 1;
    std::string dump_out;
    dump->add_option("--seed", dump_seed, "generator seed")->required();
    dump->add_option("-o,--out", dump_out, "output file (default stdout)");

    CLI11_PARSE(app, argc, argv);

    try {
        if (app.got_subcommand(analyze))
            return cmd_analyze(an_args, an_problem, an_seed, an_json, an_pervar, an_dot);
        if (app.got_subcommand(run)) {
            run_args.fill(run_cfg);
            auto algo = algorithm_from_name(run_algo);
            if (!algo) {
                std::cerr << "unknown algorithm " << run_algo << "\n";
                return 2;
            }
            run_cfg.algorithm = *algo;
            if (run_cfg.domain == Domain::Wumpus && run_cfg.policy == "greedy") run_cfg.policy = "heuristic";
            return cmd_run(run_cfg, run_report, run_csv);
        }
        if (app.got_subcommand(oracle)) {
            or_cfg.domain = or_args.parsed_domain();
            or_cfg.rows = or_args.r();
            or_cfg.cols = or_args.c();
            or_cfg.mines = or_args.mines;
            or_cfg.ships = or_args.ships;
            or_cfg.ship_sizes = or_args.ship_sizes;
            or_cfg.pits = or_args.pits;
            or_cfg.wumpus = or_args.wumpus;
            or_cfg.flag_mode = or_args.parsed_flag_mode();
            return cmd_oracle(or_cfg);
        }
        if (app.got_subcommand(replay)) {
            ReplayReport rep = replay_trace(replay_path);
            std::cout << (rep.ok ? "ok" : "MISMATCH") << " steps=" << rep.steps;
            if (!rep.error.empty()) std::cout << " error=" << rep.error;
            std::cout << "\n";
            return rep.ok ? 0 : 3;
        }
        if (app.got_subcommand(dump)) {
            Json hidden;
            Problem p = build_problem(dump_args, dump_seed, &hidden);
            Json j;
            j["format"] = "btp-instance/1";
            j["domain"] = dump_args.domain;
            j["seed"] = dump_seed;
            j["hidden"] = hidden;
            j["problem"] = problem_to_json(p);
            if (dump_out.empty())
                std::cout << j.dump(2) << "\n";
            else {
                std::ofstream out(dump_out);
                out << j.dump(2) << "\n";
            }
            return 0;
        }
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
