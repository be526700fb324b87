#include "trios/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <bit>
#include <cmath>
#include <mutex>
#include <numeric>
#include <thread>

namespace trios {

void TrialConfig::validate() const {
    model.validate();
    trap_criterion.validate();
    if (horizon < 1) throw ConfigError("horizon must be at least 1");
    if (check_interval < 1) throw ConfigError("check_interval must be at least 1");
    if (check_interval > horizon) throw ConfigError("check_interval must not exceed the horizon");
    if (trajectory_interval < 1) throw ConfigError("trajectory_interval must be at least 1");
}

bool operator==(const TrialResult& a, const TrialResult& b) {
    auto same_attachments = [](const auto& l, const auto& r) {
        return std::equal(l.begin(), l.end(), r.begin(), r.end(), [](const HareAttachment& p, const HareAttachment& q) {
            return p.hare == q.hare && p.kind == q.kind && p.modal_trio == q.modal_trio && p.stag_mass == q.stag_mass;
        });
    };
    return a.trapped == b.trapped && a.trap_time == b.trap_time && a.final_partition == b.final_partition &&
           a.sizes_allowed == b.sizes_allowed && a.stag_attachment_count == b.stag_attachment_count &&
           same_attachments(a.attachments, b.attachments) && a.stag_visit_drop_time == b.stag_visit_drop_time &&
           a.steps_executed == b.steps_executed && a.seed_used == b.seed_used &&
           a.checks_after_trap == b.checks_after_trap && a.checks_after_trap_failed == b.checks_after_trap_failed &&
           a.isolated_unsized_checks == b.isolated_unsized_checks && a.isolated_at_end == b.isolated_at_end;
}

namespace {

std::uint64_t splitmix64(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ULL;

}  // namespace

std::uint64_t derive_trial_seed(std::uint64_t master_seed, std::uint64_t trial_index) {
    // Distinct indices give distinct pre-images, and the finalizer is a bijection.
    return splitmix64(splitmix64(master_seed) + kGolden * (trial_index + 1));
}

std::uint64_t cell_seed(std::uint64_t master_seed, const CellKey& key) {
    std::uint64_t h = derive_trial_seed(master_seed, static_cast<std::uint64_t>(key.game));
    h = derive_trial_seed(h, static_cast<std::uint64_t>(key.population_size));
    return derive_trial_seed(h, std::bit_cast<std::uint64_t>(key.x));
}

TrialResult run_trial(const TrialConfig& config, const CheckpointObserver& observer) {
    config.validate();
    const ModelConfig& model = config.model;
    const int n = model.population_size;
    const auto window = static_cast<std::size_t>(config.trap_criterion.window);
    const bool stag_hunt = model.game == Game::StagHunt;
    const bool observing = config.record_trajectory && observer;

    TrialResult result;
    result.seed_used = derive_trial_seed(config.master_seed, config.trial_index);
    Rng rng(result.seed_used);
    Simulation sim(model);
    TrioSampler probe(n, model.rule);

    // The pooled window graph is every pair seen within the last `window` steps,
    // so one timestamp per pair replaces a ring of per-step graphs.
    std::vector<std::int64_t> last_seen(static_cast<std::size_t>(n) * n, -1);
    InteractionGraph pooled(n);
    auto pool = [&](std::int64_t t) {
        pooled.clear();
        const std::int64_t oldest = std::max<std::int64_t>(0, t - static_cast<std::int64_t>(window));
        for (Agent a = 0; a < n; ++a) {
            for (Agent b = a + 1; b < n; ++b) {
                if (last_seen[static_cast<std::size_t>(a) * n + b] >= oldest) pooled.add_edge(a, b);
            }
        }
    };
    auto stag_visit = [&](std::int64_t t) {
        if (stag_hunt && !result.stag_visit_drop_time &&
            max_stag_hare_visit_probability(sim.weights(), model.hare_count(), probe) < 0.005) {
            result.stag_visit_drop_time = t;
        }
    };

    std::optional<TrapReport> first_trap;
    std::int64_t t = 0;
    while (t < config.horizon) {
        stag_visit(t);
        const StepRecord& record = sim.step(rng);
        for (const auto& c : record.choices) {
            const auto& [a, b, d] = c.members;
            last_seen[static_cast<std::size_t>(a) * n + b] = t;
            last_seen[static_cast<std::size_t>(a) * n + d] = t;
            last_seen[static_cast<std::size_t>(b) * n + d] = t;
        }
        ++t;

        if (observing && t % config.trajectory_interval == 0) {
            pool(t);
            Checkpoint cp;
            cp.t = t;
            cp.choices = &record;
            cp.weights = &sim.weights();
            cp.window = &pooled;
            cp.total_weight = sim.weights().total_weight();
            cp.partition = components(pooled);
            cp.cross_prob_max = cp.partition.block_count() > 1
                                    ? max_cross_probability(sim.weights(), cp.partition, model.rule)
                                    : 0.0;
            observer(cp);
        }

        if (t % config.check_interval == 0 && t >= static_cast<std::int64_t>(window)) {
            pool(t);
            TrapReport report = detect_trap_pooled(pooled, sim.weights(), config.trap_criterion, model.game, model.rule);
            if (report.isolated && !report.sizes_allowed) ++result.isolated_unsized_checks;
            if (first_trap) {
                ++result.checks_after_trap;
                if (!report.trapped) ++result.checks_after_trap_failed;
            } else if (report.trapped) {
                first_trap = std::move(report);
                if (config.stop_on_trap) break;
            }
        }
    }
    stag_visit(t);
    result.steps_executed = t;

    if (first_trap) {
        result.trapped = true;
        result.trap_time = first_trap->detection_time;
        result.final_partition = first_trap->partition;
        result.sizes_allowed = first_trap->sizes_allowed;
    } else {
        pool(t);
        const TrapReport last = detect_trap_pooled(pooled, sim.weights(), config.trap_criterion, model.game, model.rule);
        result.final_partition = last.partition;
        result.sizes_allowed = last.sizes_allowed;
        result.isolated_at_end = t >= static_cast<std::int64_t>(window) && last.isolated;
    }
    if (stag_hunt) {
        StagOutcome outcome = classify_stag_outcome(result.final_partition, sim.weights(), model.hare_count(),
                                                    model.rule, config.trap_criterion.epsilon);
        result.stag_attachment_count = outcome.attached_hares;
        result.attachments = std::move(outcome.attachments);
    }
    return result;
}

const CellSummary* SweepSummary::find(Game game, int n, double x) const {
    for (const auto& c : cells) {
        if (c.key.game == game && c.key.population_size == n && c.key.x == x) return &c;
    }
    return nullptr;
}

double quantile(std::vector<double> values, double q) {
    if (values.empty()) throw std::invalid_argument("quantile of an empty sample");
    std::sort(values.begin(), values.end());
    const double h = (static_cast<double>(values.size()) - 1.0) * q;
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const std::size_t hi = std::min(lo + 1, values.size() - 1);
    return values[lo] + (h - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

SweepSummary summarize(const std::vector<CellSpec>& cells, std::vector<std::vector<TrialResult>> results,
                       std::vector<std::optional<std::string>> errors, std::uint64_t master_seed) {
    SweepSummary summary;
    summary.master_seed = master_seed;
    for (std::size_t c = 0; c < cells.size(); ++c) {
        CellSummary cell;
        cell.key = cells[c].key();
        cell.trials = cells[c].trials;
        cell.error = std::move(errors[c]);
        if (!cell.error) {
            std::vector<double> trap_times;
            std::vector<double> drops;
            double attached = 0.0;
            for (const auto& r : results[c]) {
                if (r.trapped) trap_times.push_back(static_cast<double>(*r.trap_time));
                if (r.stag_visit_drop_time) drops.push_back(static_cast<double>(*r.stag_visit_drop_time));
                attached += r.stag_attachment_count;
                if (r.stag_attachment_count > 0) ++cell.attach_any_count;
            }
            cell.trapped_count = static_cast<int>(trap_times.size());
            if (!trap_times.empty()) {
                cell.trap_time_median = quantile(trap_times, 0.5);
                cell.trap_time_q10 = quantile(trap_times, 0.1);
                cell.trap_time_q90 = quantile(trap_times, 0.9);
            }
            if (cell.key.game == Game::StagHunt) {
                cell.attach_count_mean = attached / static_cast<double>(cell.trials);
                if (!drops.empty()) cell.visit_drop_median = quantile(drops, 0.5);
            }
            cell.results = std::move(results[c]);
        }
        summary.cells.push_back(std::move(cell));
    }
    std::stable_sort(summary.cells.begin(), summary.cells.end(),
                     [](const CellSummary& a, const CellSummary& b) { return a.key < b.key; });
    return summary;
}

SweepSummary run_sweep(const SweepPlan& plan, int threads) {
    if (plan.cells.empty()) throw ConfigError("sweep grid is empty");
    struct Job {
        std::size_t cell;
        int trial;
    };
    std::vector<Job> jobs;
    std::vector<std::vector<TrialResult>> results(plan.cells.size());
    std::vector<std::optional<std::string>> errors(plan.cells.size());
    for (std::size_t c = 0; c < plan.cells.size(); ++c) {
        plan.cells[c].base.validate();
        if (plan.cells[c].trials < 1) throw ConfigError("trials must be at least 1");
        results[c].resize(static_cast<std::size_t>(plan.cells[c].trials));
        for (int k = 0; k < plan.cells[c].trials; ++k) jobs.push_back({c, k});
    }

    std::atomic<std::size_t> next{0};
    std::mutex error_mutex;
    auto worker = [&] {
        for (std::size_t j = next++; j < jobs.size(); j = next++) {
            const auto [c, k] = jobs[j];
            TrialConfig cfg = plan.cells[c].base;
            cfg.master_seed = cell_seed(plan.master_seed, plan.cells[c].key());
            cfg.trial_index = static_cast<std::uint64_t>(k);
            cfg.record_trajectory = false;
            try {
                results[c][static_cast<std::size_t>(k)] = run_trial(cfg);
            } catch (const std::exception& e) {
                std::lock_guard lock(error_mutex);
                // Keep the lowest failing trial's message so the report is scheduling independent.
                const std::string msg = "trial " + std::to_string(k) + ": " + e.what();
                if (!errors[c] || msg < *errors[c]) errors[c] = msg;
            }
        }
    };
    const int workers = std::max(1, std::min<int>(threads, static_cast<int>(jobs.size())));
    if (workers == 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        for (int w = 0; w < workers; ++w) pool.emplace_back(worker);
    }
    return summarize(plan.cells, std::move(results), std::move(errors), plan.master_seed);
}

ScalingFit estimate_scaling(const SweepSummary& summary, Game game, int population_size) {
    ScalingFit fit;
    for (const auto& c : summary.cells) {
        if (c.key.game != game || c.key.population_size != population_size || c.error) continue;
        if (2 * c.trapped_count < c.trials || !c.trap_time_median || *c.trap_time_median <= 0.0) continue;
        fit.points.emplace_back(1.0 / c.key.x, std::log(*c.trap_time_median));
    }
    if (fit.points.size() < 3) {
        throw InsufficientData("scaling fit needs 3 cells with at least half the trials trapped, found " +
                               std::to_string(fit.points.size()));
    }
    std::sort(fit.points.begin(), fit.points.end());
    const auto m = static_cast<double>(fit.points.size());
    double mx = 0.0, my = 0.0;
    for (const auto& [px, py] : fit.points) {
        mx += px;
        my += py;
    }
    mx /= m;
    my /= m;
    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (const auto& [px, py] : fit.points) {
        sxx += (px - mx) * (px - mx);
        sxy += (px - mx) * (py - my);
        syy += (py - my) * (py - my);
    }
    if (sxx == 0.0) throw InsufficientData("scaling fit needs distinct x values");
    fit.slope = sxy / sxx;
    fit.intercept = my - fit.slope * mx;
    fit.correlation = syy > 0.0 ? sxy / std::sqrt(sxx * syy) : 0.0;
    return fit;
}

}  // namespace trios
