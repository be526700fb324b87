// Seeded trials, parallel sweeps and the trapping-time scaling fit.
#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <tuple>
#include <vector>

#include "trios/dynamics.hpp"
#include "trios/graph.hpp"
#include "trios/trap.hpp"

namespace trios {

struct TrialConfig {
    ModelConfig model;
    std::int64_t horizon = 100000;
    TrapCriterion trap_criterion;
    std::int64_t check_interval = 1000;
    std::uint64_t master_seed = 0;
    std::uint64_t trial_index = 0;
    bool record_trajectory = false;
    std::int64_t trajectory_interval = 100;
    // Keep running after the first detected trap (used to audit early stopping).
    bool stop_on_trap = true;

    void validate() const;
    friend bool operator==(const TrialConfig&, const TrialConfig&) = default;
};

struct TrialResult {
    bool trapped = false;
    std::optional<std::int64_t> trap_time;
    Partition final_partition;
    bool sizes_allowed = false;
    int stag_attachment_count = 0;
    std::vector<HareAttachment> attachments;
    std::optional<std::int64_t> stag_visit_drop_time;
    std::int64_t steps_executed = 0;
    std::uint64_t seed_used = 0;
    // Trap checks after the first trap, and how many of them failed. Only
    // nonzero when stop_on_trap is false.
    std::int64_t checks_after_trap = 0;
    std::int64_t checks_after_trap_failed = 0;
    // Checks that found the blocks isolated while some block was not at an
    // absorbing size (not counted as traps).
    std::int64_t isolated_unsized_checks = 0;
    // Untrapped trials only: the final window's blocks were isolated. With
    // sizes_allowed false this is a block that never reached an absorbing size.
    bool isolated_at_end = false;

    friend bool operator==(const TrialResult&, const TrialResult&);
};

// Snapshot handed to trajectory observers.
struct Checkpoint {
    std::int64_t t = 0;
    const StepRecord* choices = nullptr;  // the step that produced the weights at t
    const PropensityMatrix* weights = nullptr;
    const InteractionGraph* window = nullptr;  // pooled graphs of the last min(window, t) steps
    double total_weight = 0.0;
    double cross_prob_max = 0.0;
    Partition partition;
};

using CheckpointObserver = std::function<void(const Checkpoint&)>;

// splitmix64 finalizer applied to the master seed advanced by the index.
std::uint64_t derive_trial_seed(std::uint64_t master_seed, std::uint64_t trial_index);

TrialResult run_trial(const TrialConfig& config, const CheckpointObserver& observer = {});

struct CellKey {
    Game game = Game::ThreesCompany;
    int population_size = 0;
    double x = 0.0;

    // Sorted by game, then N, then descending x.
    friend bool operator<(const CellKey& a, const CellKey& b) {
        return std::tuple(to_string(a.game), a.population_size, -a.x) <
               std::tuple(to_string(b.game), b.population_size, -b.x);
    }
    friend bool operator==(const CellKey&, const CellKey&) = default;
};

struct CellSpec {
    TrialConfig base;  // master_seed and trial_index are filled per trial
    int trials = 1;

    CellKey key() const { return {base.model.game, base.model.population_size, base.model.x}; }
};

struct SweepPlan {
    std::vector<CellSpec> cells;
    std::uint64_t master_seed = 0;
};

struct CellSummary {
    CellKey key;
    int trials = 0;
    int trapped_count = 0;
    std::optional<double> trap_time_median;
    std::optional<double> trap_time_q10;
    std::optional<double> trap_time_q90;
    std::optional<double> attach_count_mean;  // stag hunt only
    int attach_any_count = 0;                 // trials with at least one hare attached
    std::optional<double> visit_drop_median;  // stag hunt only, over trials where it happened
    std::optional<std::string> error;
    std::vector<TrialResult> results;         // empty when loaded from CSV
};

struct SweepSummary {
    std::vector<CellSummary> cells;  // sorted by CellKey
    std::uint64_t master_seed = 0;
    std::string config_digest;

    const CellSummary* find(Game game, int n, double x) const;
};

// Seed of a cell's trials; depends on the cell content, not its position.
std::uint64_t cell_seed(std::uint64_t master_seed, const CellKey& key);

// Linear interpolation between order statistics (R type 7).
double quantile(std::vector<double> values, double q);

SweepSummary summarize(std::vector<CellSpec> const& cells, std::vector<std::vector<TrialResult>> results,
                       std::vector<std::optional<std::string>> errors, std::uint64_t master_seed);

// Runs every trial of every cell on `threads` workers. Results do not
// depend on the worker count or scheduling order.
SweepSummary run_sweep(const SweepPlan& plan, int threads);

struct ScalingFit {
    std::vector<std::pair<double, double>> points;  // (1/x, log median trap time)
    double slope = 0.0;                              // estimate of c_N
    double intercept = 0.0;
    double correlation = 0.0;
};

class InsufficientData : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Least squares of log median trap time on 1/x over cells where at least
// half the trials trapped. Needs three such cells.
ScalingFit estimate_scaling(const SweepSummary& summary, Game game, int population_size);

}  // namespace trios
