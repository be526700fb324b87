// Plain-text sweep configuration.
//
//   # comment
//   [model]
//   game = threes_company, stag_hunt
//   N = 6 9 12
//   x = 0.5, 0.4
//   rule = chooser_only
//   [run]
//   horizon = 1000000
//   trials = 200
//   seed = 42
//   check_interval = 1000
//   record_trajectory = false
//   trajectory_interval = 100
//   stop_on_trap = true
//   [criterion]
//   epsilon = 0.005
//   window = 1000
//   allowed_sizes = 3 4 5
//   require_allowed_sizes = true
//
// Section headers are optional; when present a key must sit in its own
// section. List values take commas and/or spaces. The grid is the cross
// product of game, N and x.
#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "trios/experiments.hpp"

namespace trios {

struct SweepConfig {
    std::vector<Game> games;
    std::vector<int> populations;
    std::vector<double> xs;
    int trials = 1;
    std::uint64_t seed = 0;
    // Everything but game, N and x, which come from the lists above.
    TrialConfig base;

    // One cell per (game, N, x), in list order. Validates every cell.
    SweepPlan plan() const;

    friend bool operator==(const SweepConfig&, const SweepConfig&) = default;
};

// Throws ConfigError; messages start with "line K:" when a line is at fault.
SweepConfig parse_config(std::string_view text);
SweepConfig load_config(const std::filesystem::path& path);

// Canonical text: every key, fixed order, numbers that parse back exactly.
std::string write_config(const SweepConfig& config);

}  // namespace trios
