#include "trios/output.hpp"

#include <openssl/evp.h>

#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <sstream>

#include "json.hpp"

namespace trios {

using nlohmann::json;

std::string format_number(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string sha256_hex(std::string_view bytes) {
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(bytes.data(), bytes.size(), md, &len, EVP_sha256(), nullptr) != 1) {
        throw std::runtime_error("sha256 failed");
    }
    static constexpr char hex[] = "0123456789abcdef";
    std::string out;
    out.reserve(2 * len);
    for (unsigned int i = 0; i < len; ++i) {
        out += hex[md[i] >> 4];
        out += hex[md[i] & 15];
    }
    return out;
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const std::filesystem::path& path, std::string_view bytes) {
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot write " + path.string());
        out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
        if (!out) throw std::runtime_error("write failed for " + path.string());
    }
    std::filesystem::rename(tmp, path);
}

std::string utc_timestamp() {
    const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

// ---- summary CSV

namespace {

std::string opt(const std::optional<double>& v) { return v ? format_number(*v) : std::string(); }

std::vector<std::string_view> split_csv(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        const auto comma = line.find(',', start);
        out.push_back(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start));
        if (comma == std::string_view::npos) break;
        start = comma + 1;
    }
    return out;
}

template <class T>
T parse_num(std::string_view s, int line, std::string_view column) {
    T v{};
    const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || p != s.data() + s.size()) {
        throw FormatError("summary line " + std::to_string(line) + ": bad " + std::string(column) + " '" +
                          std::string(s) + "'");
    }
    return v;
}

std::optional<double> parse_opt(std::string_view s, int line, std::string_view column) {
    if (s.empty()) return std::nullopt;
    return parse_num<double>(s, line, column);
}

}  // namespace

std::string summary_csv(const SweepSummary& summary) {
    std::string out(kSummaryHeader);
    out += '\n';
    auto cells = summary.cells;
    std::stable_sort(cells.begin(), cells.end(), [](const auto& a, const auto& b) { return a.key < b.key; });
    for (const auto& c : cells) {
        const bool ok = !c.error;
        out += std::string(to_string(c.key.game)) + ',' + std::to_string(c.key.population_size) + ',' +
               format_number(c.key.x) + ',' + std::to_string(c.trials) + ',' +
               (ok ? std::to_string(c.trapped_count) : "") + ',' +
               (ok ? format_number(static_cast<double>(c.trapped_count) / c.trials) : "") + ',' +
               opt(c.trap_time_median) + ',' + opt(c.trap_time_q10) + ',' + opt(c.trap_time_q90) + ',' +
               opt(c.attach_count_mean) + ',' + opt(c.visit_drop_median) + ',' + std::to_string(summary.master_seed) +
               '\n';
    }
    return out;
}

void emit_summary(const SweepSummary& summary, const std::filesystem::path& path) {
    write_file(path, summary_csv(summary));
}

SweepSummary parse_summary_csv(std::string_view text) {
    SweepSummary s;
    int line_no = 0;
    std::size_t pos = 0;
    bool have_seed = false;
    while (pos < text.size()) {
        const auto nl = text.find('\n', pos);
        std::string_view line = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
        pos = nl == std::string_view::npos ? text.size() : nl + 1;
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        if (line_no == 1) {
            if (line != kSummaryHeader) throw FormatError("summary header does not match the schema");
            continue;
        }
        if (line.empty()) continue;
        const auto f = split_csv(line);
        if (f.size() != 12) {
            throw FormatError("summary line " + std::to_string(line_no) + ": expected 12 fields, found " +
                              std::to_string(f.size()));
        }
        CellSummary c;
        try {
            c.key.game = parse_game(f[0]);
        } catch (const ConfigError& e) {
            throw FormatError("summary line " + std::to_string(line_no) + ": " + e.what());
        }
        c.key.population_size = parse_num<int>(f[1], line_no, "N");
        c.key.x = parse_num<double>(f[2], line_no, "x");
        c.trials = parse_num<int>(f[3], line_no, "trials");
        if (f[4].empty()) {
            c.error = "cell failed";
        } else {
            c.trapped_count = parse_num<int>(f[4], line_no, "trapped");
        }
        c.trap_time_median = parse_opt(f[6], line_no, "trap_time_median");
        c.trap_time_q10 = parse_opt(f[7], line_no, "trap_time_q10");
        c.trap_time_q90 = parse_opt(f[8], line_no, "trap_time_q90");
        c.attach_count_mean = parse_opt(f[9], line_no, "attach_count_mean");
        c.visit_drop_median = parse_opt(f[10], line_no, "visit_drop_median");
        const auto seed = parse_num<std::uint64_t>(f[11], line_no, "seed");
        if (have_seed && seed != s.master_seed) throw FormatError("summary rows disagree on the seed");
        s.master_seed = seed;
        have_seed = true;
        if (c.trials < 1 || c.trapped_count < 0 || c.trapped_count > c.trials) {
            throw FormatError("summary line " + std::to_string(line_no) + ": trapped count out of range");
        }
        s.cells.push_back(std::move(c));
    }
    if (line_no == 0) throw FormatError("summary is empty");
    return s;
}

SweepSummary load_summary(const std::filesystem::path& path) { return parse_summary_csv(read_file(path)); }

// ---- trajectories

namespace {

json partition_json(const Partition& p) {
    json out = json::array();
    for (const auto& b : p.blocks()) {
        json block = json::array();
        for (Agent a : b) block.push_back(a + 1);
        out.push_back(std::move(block));
    }
    return out;
}

Agent agent_from(const json& v, int n) {
    const int a = v.get<int>();
    if (a < 1 || a > n) throw FormatError("agent id " + std::to_string(a) + " out of range");
    return a - 1;
}

}  // namespace

std::string checkpoint_line(const Checkpoint& cp) {
    const int n = cp.weights->size();
    json j;
    j["t"] = cp.t;
    json choices = json::array();
    for (const auto& c : cp.choices->choices) {
        choices.push_back({c.members[0] + 1, c.members[1] + 1, c.members[2] + 1});
    }
    j["choices"] = std::move(choices);
    j["total_weight"] = cp.total_weight;
    j["cross_prob_max"] = cp.cross_prob_max;
    j["partition"] = partition_json(cp.partition);
    json rows = json::array();
    for (Agent a = 0; a < n; ++a) {
        json row = json::array();
        for (Agent b = 0; b < n; ++b) row.push_back((*cp.weights)(a, b));
        rows.push_back(std::move(row));
    }
    j["weights"] = std::move(rows);
    json edges = json::array();
    for (const auto& [a, b] : cp.window->edges()) edges.push_back({a + 1, b + 1});
    j["window_edges"] = std::move(edges);
    return j.dump();
}

TrajectoryPoint parse_checkpoint_line(std::string_view line) {
    TrajectoryPoint p;
    try {
        const json j = json::parse(line);
        p.t = j.at("t").get<std::int64_t>();
        const auto& rows = j.at("weights");
        const int n = static_cast<int>(rows.size());
        p.weights = PropensityMatrix(n);
        p.weights.set_time(p.t);
        for (Agent a = 0; a < n; ++a) {
            if (rows[a].size() != static_cast<std::size_t>(n)) throw FormatError("weights must be square");
            for (Agent b = 0; b < n; ++b) p.weights(a, b) = rows[a][b].get<double>();
        }
        for (const auto& c : j.at("choices")) {
            if (c.size() != 3) throw FormatError("a choice must be a triple");
            p.choices.push_back(make_trio(agent_from(c[0], n), agent_from(c[1], n), agent_from(c[2], n)));
        }
        p.total_weight = j.at("total_weight").get<double>();
        p.cross_prob_max = j.at("cross_prob_max").get<double>();
        std::vector<std::vector<Agent>> blocks;
        for (const auto& b : j.at("partition")) {
            auto& block = blocks.emplace_back();
            for (const auto& a : b) block.push_back(agent_from(a, n));
        }
        p.partition = Partition(std::move(blocks));
        p.window = InteractionGraph(n);
        for (const auto& e : j.at("window_edges")) p.window.add_edge(agent_from(e.at(0), n), agent_from(e.at(1), n));
    } catch (const json::exception& e) {
        throw FormatError(std::string("bad trajectory line: ") + e.what());
    } catch (const std::invalid_argument& e) {
        throw FormatError(std::string("bad trajectory line: ") + e.what());
    }
    return p;
}

std::vector<TrajectoryPoint> load_trajectory(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot read " + path.string());
    std::vector<TrajectoryPoint> out;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty()) out.push_back(parse_checkpoint_line(line));
    }
    return out;
}

TrajectoryWriter::TrajectoryWriter(const std::filesystem::path& path) : path_(path), out_(path, std::ios::trunc) {
    if (!out_) throw std::runtime_error("cannot write " + path.string());
}

void TrajectoryWriter::write(const Checkpoint& cp) {
    out_ << checkpoint_line(cp) << '\n';
    if (!out_) throw std::runtime_error("write failed for " + path_.string());
}

void TrajectoryWriter::close() {
    out_.close();
    if (!out_) throw std::runtime_error("write failed for " + path_.string());
}

std::string trial_result_json(const TrialResult& r, const TrialConfig& config) {
    json j;
    j["game"] = std::string(to_string(config.model.game));
    j["N"] = config.model.population_size;
    j["x"] = config.model.x;
    j["rule"] = std::string(to_string(config.model.rule));
    j["trapped"] = r.trapped;
    j["trap_time"] = r.trap_time ? json(*r.trap_time) : json(nullptr);
    j["final_partition"] = partition_json(r.final_partition);
    j["sizes_allowed"] = r.sizes_allowed;
    j["steps_executed"] = r.steps_executed;
    j["seed_used"] = r.seed_used;
    if (config.model.game == Game::StagHunt) {
        j["stag_attachment_count"] = r.stag_attachment_count;
        j["stag_visit_drop_time"] = r.stag_visit_drop_time ? json(*r.stag_visit_drop_time) : json(nullptr);
        json att = json::array();
        for (const auto& a : r.attachments) {
            att.push_back({{"hare", a.hare + 1},
                           {"kind", std::string(to_string(a.kind))},
                           {"modal_trio", {a.modal_trio[0] + 1, a.modal_trio[1] + 1, a.modal_trio[2] + 1}},
                           {"stag_mass", a.stag_mass}});
        }
        j["attachments"] = std::move(att);
    }
    return j.dump(2) + "\n";
}

// ---- manifest

std::vector<CellNote> cell_notes(const SweepSummary& summary) {
    std::vector<CellNote> out;
    for (const auto& c : summary.cells) out.push_back({c.key, c.attach_any_count, c.error});
    return out;
}

std::string manifest_json(const RunManifest& m) {
    json j;
    j["command"] = m.command;
    j["version"] = m.version;
    j["config_text"] = m.config_text;
    j["config_digest"] = m.config_digest;
    // As a string: JSON readers in other languages lose precision above 2^53.
    j["master_seed"] = std::to_string(m.master_seed);
    j["cell_index"] = m.cell_index;
    j["trial_index"] = m.trial_index;
    j["threads"] = m.threads;
    j["started"] = m.started;
    j["finished"] = m.finished;
    j["outputs"] = m.outputs;
    j["output_digests"] = m.output_digests;
    json cells = json::array();
    for (const auto& c : m.cells) {
        cells.push_back({{"game", std::string(to_string(c.key.game))},
                         {"N", c.key.population_size},
                         {"x", c.key.x},
                         {"attach_any_count", c.attach_any_count},
                         {"error", c.error ? json(*c.error) : json(nullptr)}});
    }
    j["cells"] = std::move(cells);
    return j.dump(2) + "\n";
}

RunManifest parse_manifest(std::string_view text) {
    RunManifest m;
    try {
        const json j = json::parse(text);
        m.command = j.at("command").get<std::string>();
        m.version = j.at("version").get<std::string>();
        m.config_text = j.at("config_text").get<std::string>();
        m.config_digest = j.at("config_digest").get<std::string>();
        const auto seed = j.at("master_seed").get<std::string>();
        const auto [p, ec] = std::from_chars(seed.data(), seed.data() + seed.size(), m.master_seed);
        if (ec != std::errc{} || p != seed.data() + seed.size()) throw FormatError("bad master_seed");
        m.cell_index = j.at("cell_index").get<std::uint64_t>();
        m.trial_index = j.at("trial_index").get<std::uint64_t>();
        m.threads = j.at("threads").get<int>();
        m.started = j.at("started").get<std::string>();
        m.finished = j.at("finished").get<std::string>();
        m.outputs = j.at("outputs").get<std::map<std::string, std::string>>();
        m.output_digests = j.at("output_digests").get<std::map<std::string, std::string>>();
        for (const auto& c : j.at("cells")) {
            CellNote note;
            note.key.game = parse_game(c.at("game").get<std::string>());
            note.key.population_size = c.at("N").get<int>();
            note.key.x = c.at("x").get<double>();
            note.attach_any_count = c.at("attach_any_count").get<int>();
            if (!c.at("error").is_null()) note.error = c.at("error").get<std::string>();
            m.cells.push_back(std::move(note));
        }
    } catch (const json::exception& e) {
        throw FormatError(std::string("bad manifest: ") + e.what());
    } catch (const ConfigError& e) {
        throw FormatError(std::string("bad manifest: ") + e.what());
    }
    return m;
}

}  // namespace trios
