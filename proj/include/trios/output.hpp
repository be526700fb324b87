// Summary CSV, trajectory JSONL and run manifests.
#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "trios/experiments.hpp"

namespace trios {

class FormatError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

inline constexpr std::string_view kSummaryHeader =
    "game,N,x,trials,trapped,trap_frac,trap_time_median,trap_time_q10,trap_time_q90,attach_count_mean,"
    "visit_drop_median,seed";

inline constexpr std::string_view kToolVersion = "0.3.1";

// %.17g, so the text parses back to the same double.
std::string format_number(double v);

std::string sha256_hex(std::string_view bytes);

// One row per cell in CellKey order. Undefined values are empty fields; a
// cell that failed leaves trapped and trap_frac empty as well.
std::string summary_csv(const SweepSummary& summary);
void emit_summary(const SweepSummary& summary, const std::filesystem::path& path);

// Inverse of summary_csv, up to what the CSV holds (no per-trial results,
// errors or attach_any_count).
SweepSummary parse_summary_csv(std::string_view text);
SweepSummary load_summary(const std::filesystem::path& path);

// A trajectory checkpoint as written to JSONL. Agents are 1-based in the
// file and 0-based here.
struct TrajectoryPoint {
    std::int64_t t = 0;
    std::vector<Trio> choices;  // indexed by chooser
    double total_weight = 0.0;
    double cross_prob_max = 0.0;
    Partition partition;
    PropensityMatrix weights;
    InteractionGraph window;
};

std::string checkpoint_line(const Checkpoint& cp);
TrajectoryPoint parse_checkpoint_line(std::string_view line);
std::vector<TrajectoryPoint> load_trajectory(const std::filesystem::path& path);

class TrajectoryWriter {
public:
    explicit TrajectoryWriter(const std::filesystem::path& path);
    void write(const Checkpoint& cp);
    CheckpointObserver observer() {
        return [this](const Checkpoint& cp) { write(cp); };
    }
    void close();

private:
    std::filesystem::path path_;
    std::ofstream out_;
};

std::string trial_result_json(const TrialResult& r, const TrialConfig& config);

// Per-cell facts the CSV schema has no column for.
struct CellNote {
    CellKey key;
    int attach_any_count = 0;
    std::optional<std::string> error;

    friend bool operator==(const CellNote&, const CellNote&) = default;
};

struct RunManifest {
    std::string command;  // "sweep" or "simulate"
    std::string version{kToolVersion};
    std::string config_text;  // canonical, overrides applied
    std::string config_digest;
    std::uint64_t master_seed = 0;
    std::uint64_t cell_index = 0;   // simulate only
    std::uint64_t trial_index = 0;  // simulate only
    int threads = 1;
    std::string started;
    std::string finished;
    std::map<std::string, std::string> outputs;        // role -> file name in the run directory
    std::map<std::string, std::string> output_digests; // role -> sha256 of the file bytes
    std::vector<CellNote> cells;

    friend bool operator==(const RunManifest&, const RunManifest&) = default;
};

std::vector<CellNote> cell_notes(const SweepSummary& summary);
std::string manifest_json(const RunManifest& m);
RunManifest parse_manifest(std::string_view text);

std::string read_file(const std::filesystem::path& path);
// Writes through a temporary file and renames it into place.
void write_file(const std::filesystem::path& path, std::string_view bytes);

// UTC, ISO 8601.
std::string utc_timestamp();

}  // namespace trios
