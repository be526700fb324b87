#include "cli.hpp"

#include <filesystem>
#include <optional>
#include <sstream>
#include <string>
#include <thread>

#include "CLI11.hpp"
#include "json.hpp"
#include "trios/config_io.hpp"
#include "trios/experiments.hpp"
#include "trios/output.hpp"

namespace fs = std::filesystem;

namespace trios {

namespace {

class ReplayMismatch : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct Options {
    std::string config;
    std::string out;
    std::string summary;
    std::optional<std::uint64_t> seed;
    std::optional<int> trials;
    std::optional<std::int64_t> horizon;
    int threads = static_cast<int>(std::max(1U, std::thread::hardware_concurrency()));
    std::size_t cell = 0;
    std::uint64_t trial = 0;
};

SweepConfig load_with_overrides(const Options& o) {
    SweepConfig cfg = load_config(o.config);
    if (o.seed) cfg.seed = *o.seed;
    if (o.trials) cfg.trials = *o.trials;
    if (o.horizon) {
        cfg.base.horizon = *o.horizon;
        // Keep short test runs valid: checks never outnumber the steps.
        if (cfg.base.check_interval > cfg.base.horizon) cfg.base.check_interval = cfg.base.horizon;
    }
    // Round trip through the canonical text so the manifest digest covers
    // exactly what runs.
    return parse_config(write_config(cfg));
}

struct SimulationOutput {
    std::string trajectory;
    std::string result;
    TrialResult trial;
};

SimulationOutput simulate(const SweepConfig& cfg, std::size_t cell_index, std::uint64_t trial_index,
                          const fs::path* stream_to) {
    const SweepPlan plan = cfg.plan();
    if (cell_index >= plan.cells.size()) {
        throw ConfigError("cell " + std::to_string(cell_index) + " out of range, grid has " +
                          std::to_string(plan.cells.size()) + " cells");
    }
    TrialConfig tc = plan.cells[cell_index].base;
    tc.master_seed = cell_seed(cfg.seed, plan.cells[cell_index].key());
    tc.trial_index = trial_index;
    tc.record_trajectory = true;

    SimulationOutput out;
    std::optional<TrajectoryWriter> writer;
    if (stream_to) writer.emplace(*stream_to);
    out.trial = run_trial(tc, [&](const Checkpoint& cp) {
        std::string line = checkpoint_line(cp);
        line += '\n';
        if (writer) writer->write(cp);
        out.trajectory += line;
    });
    if (writer) writer->close();
    out.result = trial_result_json(out.trial, tc);
    return out;
}

void print_summary(const SweepSummary& s, std::ostream& out) {
    out << "game            N  x        trials trapped  median      attach_any\n";
    for (const auto& c : s.cells) {
        char buf[160];
        std::snprintf(buf, sizeof buf, "%-15s %-2d %-8.4g %-6d ", std::string(to_string(c.key.game)).c_str(),
                      c.key.population_size, c.key.x, c.trials);
        out << buf;
        if (c.error) {
            out << "error: " << *c.error << "\n";
            continue;
        }
        std::snprintf(buf, sizeof buf, "%-8d %-11.6g %d\n", c.trapped_count, c.trap_time_median.value_or(NAN),
                      c.attach_any_count);
        out << buf;
    }
}

int run_sweep_command(const Options& o, std::ostream& out) {
    const SweepConfig cfg = load_with_overrides(o);
    const SweepPlan plan = cfg.plan();
    const fs::path dir = o.out;
    fs::create_directories(dir);

    RunManifest m;
    m.command = "sweep";
    m.config_text = write_config(cfg);
    m.config_digest = sha256_hex(m.config_text);
    m.master_seed = cfg.seed;
    m.threads = o.threads;
    m.started = utc_timestamp();
    SweepSummary summary = run_sweep(plan, o.threads);
    summary.config_digest = m.config_digest;
    m.finished = utc_timestamp();

    const std::string csv = summary_csv(summary);
    write_file(dir / "summary.csv", csv);
    m.outputs["summary"] = "summary.csv";
    m.output_digests["summary"] = sha256_hex(csv);
    m.cells = cell_notes(summary);
    write_file(dir / "manifest.json", manifest_json(m));

    print_summary(summary, out);
    out << "wrote " << (dir / "summary.csv").string() << "\n";
    for (const auto& c : summary.cells) {
        if (c.error) return kRuntimeError;
    }
    return kOk;
}

int run_simulate_command(const Options& o, std::ostream& out) {
    const SweepConfig cfg = load_with_overrides(o);
    const fs::path dir = o.out;
    fs::create_directories(dir);

    RunManifest m;
    m.command = "simulate";
    m.config_text = write_config(cfg);
    m.config_digest = sha256_hex(m.config_text);
    m.master_seed = cfg.seed;
    m.cell_index = o.cell;
    m.trial_index = o.trial;
    m.threads = 1;
    m.started = utc_timestamp();
    const fs::path traj = dir / "trajectory.jsonl";
    const SimulationOutput sim = simulate(cfg, o.cell, o.trial, &traj);
    m.finished = utc_timestamp();
    write_file(dir / "result.json", sim.result);
    m.outputs = {{"trajectory", "trajectory.jsonl"}, {"result", "result.json"}};
    m.output_digests = {{"trajectory", sha256_hex(sim.trajectory)}, {"result", sha256_hex(sim.result)}};
    m.cells = {{cfg.plan().cells.at(o.cell).key(), sim.trial.stag_attachment_count > 0 ? 1 : 0, std::nullopt}};
    write_file(dir / "manifest.json", manifest_json(m));

    out << sim.result;
    return kOk;
}

int run_analyze_command(const Options& o, std::ostream& out) {
    fs::path summary_path = o.summary;
    if (summary_path.empty()) {
        if (o.out.empty()) throw ConfigError("analyze needs --summary PATH or --out DIR");
        summary_path = fs::path(o.out) / "summary.csv";
    }
    const SweepSummary s = load_summary(summary_path);
    std::optional<RunManifest> manifest;
    const fs::path manifest_path = summary_path.parent_path() / "manifest.json";
    if (fs::exists(manifest_path)) manifest = parse_manifest(read_file(manifest_path));

    nlohmann::json j;
    j["summary"] = summary_path.string();
    nlohmann::json fits = nlohmann::json::array();
    std::vector<std::pair<Game, int>> groups;
    for (const auto& c : s.cells) {
        const std::pair<Game, int> g{c.key.game, c.key.population_size};
        if (std::find(groups.begin(), groups.end(), g) == groups.end()) groups.push_back(g);
    }
    for (const auto& [game, n] : groups) {
        nlohmann::json f{{"game", std::string(to_string(game))}, {"N", n}};
        try {
            const ScalingFit fit = estimate_scaling(s, game, n);
            f["slope"] = fit.slope;
            f["intercept"] = fit.intercept;
            f["correlation"] = fit.correlation;
            f["points"] = fit.points;
            out << to_string(game) << " N=" << n << ": slope " << format_number(fit.slope) << ", intercept "
                << format_number(fit.intercept) << ", r " << format_number(fit.correlation) << "\n";
        } catch (const InsufficientData& e) {
            f["error"] = e.what();
            out << to_string(game) << " N=" << n << ": no scaling fit (" << e.what() << ")\n";
        }
        fits.push_back(std::move(f));
    }
    j["scaling"] = std::move(fits);

    nlohmann::json attach = nlohmann::json::array();
    for (const auto& c : s.cells) {
        if (c.key.game != Game::StagHunt) continue;
        nlohmann::json row{{"N", c.key.population_size}, {"x", c.key.x}, {"trials", c.trials}};
        row["attach_count_mean"] = c.attach_count_mean ? nlohmann::json(*c.attach_count_mean) : nlohmann::json();
        row["visit_drop_median"] = c.visit_drop_median ? nlohmann::json(*c.visit_drop_median) : nlohmann::json();
        if (manifest) {
            for (const auto& note : manifest->cells) {
                if (note.key == c.key) {
                    row["attach_any_count"] = note.attach_any_count;
                    row["attach_any_frac"] = static_cast<double>(note.attach_any_count) / c.trials;
                }
            }
        }
        out << "stag_hunt N=" << c.key.population_size << " x=" << format_number(c.key.x)
            << ": attach_count_mean " << (c.attach_count_mean ? format_number(*c.attach_count_mean) : "-");
        if (row.contains("attach_any_frac")) out << ", attach_any_frac " << format_number(row["attach_any_frac"]);
        out << "\n";
        attach.push_back(std::move(row));
    }
    j["attachment"] = std::move(attach);

    if (!o.out.empty()) {
        fs::create_directories(o.out);
        write_file(fs::path(o.out) / "analysis.json", j.dump(2) + "\n");
    }
    return kOk;
}

void expect_digest(const std::string& role, const std::string& expected, const std::string& actual,
                   std::ostream& out) {
    if (expected != actual) throw ReplayMismatch(role + ": digest " + actual + " does not match manifest " + expected);
    out << role << ": ok " << actual << "\n";
}

int run_replay_command(const Options& o, std::ostream& out) {
    if (o.out.empty()) throw ConfigError("replay needs --out DIR holding manifest.json");
    const fs::path dir = o.out;
    const RunManifest m = parse_manifest(read_file(dir / "manifest.json"));
    expect_digest("config", m.config_digest, sha256_hex(m.config_text), out);
    const SweepConfig cfg = parse_config(m.config_text);
    if (cfg.seed != m.master_seed) throw ReplayMismatch("manifest seed differs from the config seed");

    // Files on disk must still be what the manifest recorded.
    for (const auto& [role, file] : m.outputs) {
        const auto it = m.output_digests.find(role);
        if (it == m.output_digests.end()) throw ReplayMismatch(role + ": no recorded digest");
        expect_digest(role + " file", it->second, sha256_hex(read_file(dir / file)), out);
    }

    if (m.command == "sweep") {
        const SweepSummary s = run_sweep(cfg.plan(), o.threads);
        expect_digest("summary rerun", m.output_digests.at("summary"), sha256_hex(summary_csv(s)), out);
    } else if (m.command == "simulate") {
        const SimulationOutput sim = simulate(cfg, m.cell_index, m.trial_index, nullptr);
        expect_digest("trajectory rerun", m.output_digests.at("trajectory"), sha256_hex(sim.trajectory), out);
        expect_digest("result rerun", m.output_digests.at("result"), sha256_hex(sim.result), out);
    } else {
        throw FormatError("unknown manifest command '" + m.command + "'");
    }
    out << "replay matches\n";
    return kOk;
}

}  // namespace

int cli_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Trio formation dynamics: simulate, sweep, analyze, replay"};
    app.require_subcommand(1);
    Options o;

    auto add_run_flags = [&](CLI::App* sub, bool needs_config) {
        auto* c = sub->add_option("--config", o.config, "config file");
        if (needs_config) c->required();
        sub->add_option("--out", o.out, "run directory")->required();
        sub->add_option("--seed", o.seed, "master seed override");
        sub->add_option("--trials", o.trials, "trials per cell override")->check(CLI::PositiveNumber);
        sub->add_option("--horizon", o.horizon, "horizon override")->check(CLI::PositiveNumber);
    };
    auto* sim = app.add_subcommand("simulate", "one trial with trajectory output");
    add_run_flags(sim, true);
    sim->add_option("--cell", o.cell, "grid cell index (default 0)");
    sim->add_option("--trial", o.trial, "trial index within the cell (default 0)");
    auto* sweep = app.add_subcommand("sweep", "run the grid, write summary.csv and manifest.json");
    add_run_flags(sweep, true);
    sweep->add_option("--threads", o.threads, "worker threads")->check(CLI::PositiveNumber);
    auto* analyze = app.add_subcommand("analyze", "scaling fit and attachment table from a summary");
    analyze->add_option("--summary", o.summary, "summary CSV (default OUT/summary.csv)");
    analyze->add_option("--out", o.out, "run directory; analysis.json is written here");
    auto* replay = app.add_subcommand("replay", "re-run from a manifest and verify digests");
    replay->add_option("--out", o.out, "run directory holding manifest.json")->required();
    replay->add_option("--threads", o.threads, "worker threads")->check(CLI::PositiveNumber);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        out << app.help();
        return kOk;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n";
        return kConfigError;
    }

    try {
        if (*sim) return run_simulate_command(o, out);
        if (*sweep) return run_sweep_command(o, out);
        if (*analyze) return run_analyze_command(o, out);
        return run_replay_command(o, out);
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << "\n";
        return kConfigError;
    } catch (const ReplayMismatch& e) {
        err << "replay mismatch: " << e.what() << "\n";
        return kReplayMismatch;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kRuntimeError;
    }
}

}  // namespace trios
