#include "trios/config_io.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace trios {

namespace {

struct KeyInfo {
    std::string_view section;
    bool required;
};

const std::map<std::string_view, KeyInfo, std::less<>> kKeys = {
    {"game", {"model", true}},
    {"N", {"model", true}},
    {"x", {"model", true}},
    {"rule", {"model", false}},
    {"horizon", {"run", true}},
    {"trials", {"run", true}},
    {"seed", {"run", false}},
    {"check_interval", {"run", false}},
    {"record_trajectory", {"run", false}},
    {"trajectory_interval", {"run", false}},
    {"stop_on_trap", {"run", false}},
    {"epsilon", {"criterion", false}},
    {"window", {"criterion", false}},
    {"allowed_sizes", {"criterion", false}},
    {"require_allowed_sizes", {"criterion", false}},
};

std::string_view trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

[[noreturn]] void fail(int line, const std::string& msg) {
    throw ConfigError("line " + std::to_string(line) + ": " + msg);
}

std::vector<std::string_view> split_list(std::string_view v) {
    std::vector<std::string_view> out;
    std::size_t i = 0;
    while (i < v.size()) {
        while (i < v.size() && (v[i] == ',' || v[i] == ' ' || v[i] == '\t')) ++i;
        std::size_t j = i;
        while (j < v.size() && v[j] != ',' && v[j] != ' ' && v[j] != '\t') ++j;
        if (j > i) out.push_back(v.substr(i, j - i));
        i = j;
    }
    return out;
}

double to_double(std::string_view s, int line, std::string_view key) {
    double v = 0.0;
    const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || p != s.data() + s.size() || !std::isfinite(v)) {
        fail(line, std::string(key) + ": '" + std::string(s) + "' is not a number");
    }
    return v;
}

// Integers may be written as 1000000 or 1e6.
std::int64_t to_int(std::string_view s, int line, std::string_view key) {
    std::int64_t v = 0;
    const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec == std::errc{} && p == s.data() + s.size()) return v;
    const double d = to_double(s, line, key);
    if (d != std::floor(d) || std::fabs(d) > 9.0e15) {
        fail(line, std::string(key) + ": '" + std::string(s) + "' is not an integer");
    }
    return static_cast<std::int64_t>(d);
}

std::uint64_t to_u64(std::string_view s, int line, std::string_view key) {
    std::uint64_t v = 0;
    const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || p != s.data() + s.size()) {
        fail(line, std::string(key) + ": '" + std::string(s) + "' is not an unsigned 64-bit integer");
    }
    return v;
}

bool to_bool(std::string_view s, int line, std::string_view key) {
    if (s == "true" || s == "1" || s == "yes") return true;
    if (s == "false" || s == "0" || s == "no") return false;
    fail(line, std::string(key) + ": '" + std::string(s) + "' is not a boolean");
}

std::string_view single(std::string_view v, int line, std::string_view key) {
    const auto items = split_list(v);
    if (items.size() != 1) fail(line, std::string(key) + " takes exactly one value");
    return items[0];
}

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

}  // namespace

SweepPlan SweepConfig::plan() const {
    if (games.empty() || populations.empty() || xs.empty()) throw ConfigError("sweep grid is empty");
    if (trials < 1) throw ConfigError("trials must be at least 1");
    SweepPlan p;
    p.master_seed = seed;
    for (Game g : games) {
        for (int n : populations) {
            for (double x : xs) {
                CellSpec cell;
                cell.base = base;
                cell.base.model.game = g;
                cell.base.model.population_size = n;
                cell.base.model.x = x;
                cell.base.master_seed = seed;
                cell.trials = trials;
                cell.base.validate();
                p.cells.push_back(cell);
            }
        }
    }
    return p;
}

SweepConfig parse_config(std::string_view text) {
    SweepConfig cfg;
    std::set<std::string, std::less<>> seen;
    std::map<std::string, int, std::less<>> key_line;
    std::string section;
    int line_no = 0;

    std::size_t pos = 0;
    while (pos <= text.size()) {
        const auto nl = text.find('\n', pos);
        std::string_view raw = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
        pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
        ++line_no;
        if (const auto hash = raw.find('#'); hash != std::string_view::npos) raw = raw.substr(0, hash);
        const std::string_view line = trim(raw);
        if (line.empty()) continue;

        if (line.front() == '[') {
            if (line.back() != ']') fail(line_no, "unterminated section header");
            section = std::string(trim(line.substr(1, line.size() - 2)));
            if (section != "model" && section != "run" && section != "criterion") {
                fail(line_no, "unknown section [" + section + "]");
            }
            continue;
        }

        const auto eq = line.find('=');
        if (eq == std::string_view::npos) fail(line_no, "expected key = value");
        const std::string_view key = trim(line.substr(0, eq));
        const std::string_view value = trim(line.substr(eq + 1));
        const auto info = kKeys.find(key);
        if (info == kKeys.end()) fail(line_no, "unknown key '" + std::string(key) + "'");
        if (!section.empty() && info->second.section != section) {
            fail(line_no, std::string(key) + " belongs in [" + std::string(info->second.section) + "], not [" +
                              section + "]");
        }
        if (!seen.insert(std::string(key)).second) fail(line_no, "duplicate key '" + std::string(key) + "'");
        key_line[std::string(key)] = line_no;
        if (value.empty()) fail(line_no, std::string(key) + " has no value");

        try {
            if (key == "game") {
                for (auto item : split_list(value)) cfg.games.push_back(parse_game(item));
            } else if (key == "N") {
                for (auto item : split_list(value)) {
                    const auto n = to_int(item, line_no, key);
                    if (n < 4 || n > 64) fail(line_no, "N must lie in [4, 64], got " + std::string(item));
                    cfg.populations.push_back(static_cast<int>(n));
                }
            } else if (key == "x") {
                for (auto item : split_list(value)) {
                    const double x = to_double(item, line_no, key);
                    if (!(x > 0.0 && x < 1.0)) fail(line_no, "x must lie in (0,1), got " + std::string(item));
                    cfg.xs.push_back(x);
                }
            } else if (key == "rule") {
                cfg.base.model.rule = parse_rule(single(value, line_no, key));
            } else if (key == "horizon") {
                cfg.base.horizon = to_int(single(value, line_no, key), line_no, key);
                if (cfg.base.horizon < 1) fail(line_no, "horizon must be at least 1");
            } else if (key == "trials") {
                const auto t = to_int(single(value, line_no, key), line_no, key);
                if (t < 1 || t > 100000000) fail(line_no, "trials must lie in [1, 1e8]");
                cfg.trials = static_cast<int>(t);
            } else if (key == "seed") {
                cfg.seed = to_u64(single(value, line_no, key), line_no, key);
            } else if (key == "check_interval") {
                cfg.base.check_interval = to_int(single(value, line_no, key), line_no, key);
                if (cfg.base.check_interval < 1) fail(line_no, "check_interval must be at least 1");
            } else if (key == "record_trajectory") {
                cfg.base.record_trajectory = to_bool(single(value, line_no, key), line_no, key);
            } else if (key == "trajectory_interval") {
                cfg.base.trajectory_interval = to_int(single(value, line_no, key), line_no, key);
                if (cfg.base.trajectory_interval < 1) fail(line_no, "trajectory_interval must be at least 1");
            } else if (key == "stop_on_trap") {
                cfg.base.stop_on_trap = to_bool(single(value, line_no, key), line_no, key);
            } else if (key == "epsilon") {
                const double e = to_double(single(value, line_no, key), line_no, key);
                if (!(e > 0.0 && e < 1.0)) fail(line_no, "epsilon must lie in (0,1)");
                cfg.base.trap_criterion.epsilon = e;
            } else if (key == "window") {
                const auto w = to_int(single(value, line_no, key), line_no, key);
                if (w < 1 || w > 100000000) fail(line_no, "window must lie in [1, 1e8]");
                cfg.base.trap_criterion.window = static_cast<int>(w);
            } else if (key == "allowed_sizes") {
                cfg.base.trap_criterion.allowed_sizes.clear();
                for (auto item : split_list(value)) {
                    const auto s = to_int(item, line_no, key);
                    if (s < 1 || s > 64) fail(line_no, "allowed sizes must lie in [1, 64]");
                    cfg.base.trap_criterion.allowed_sizes.insert(static_cast<int>(s));
                }
            } else if (key == "require_allowed_sizes") {
                cfg.base.trap_criterion.require_allowed_sizes = to_bool(single(value, line_no, key), line_no, key);
            }
        } catch (const ConfigError& e) {
            const std::string msg = e.what();
            if (msg.rfind("line ", 0) == 0) throw;
            fail(line_no, msg);
        }
    }

    for (const auto& [key, info] : kKeys) {
        if (info.required && !seen.contains(key)) throw ConfigError("missing required key '" + std::string(key) + "'");
    }
    if (cfg.base.check_interval > cfg.base.horizon) {
        fail(key_line.contains("check_interval") ? key_line["check_interval"] : key_line["horizon"],
             "check_interval must not exceed the horizon");
    }
    for (Game g : cfg.games) {
        if (g != Game::StagHunt) continue;
        for (int n : cfg.populations) {
            if (n % 2 != 0) fail(key_line["N"], "stag hunt needs an even N, got " + std::to_string(n));
        }
    }
    cfg.plan();
    return cfg;
}

SweepConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot read config " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

std::string write_config(const SweepConfig& c) {
    auto join = [](const auto& items, auto&& f) {
        std::string out;
        for (const auto& v : items) {
            if (!out.empty()) out += ", ";
            out += f(v);
        }
        return out;
    };
    const auto& tc = c.base.trap_criterion;
    std::ostringstream o;
    o << "[model]\n"
      << "game = " << join(c.games, [](Game g) { return std::string(to_string(g)); }) << "\n"
      << "N = " << join(c.populations, [](int n) { return std::to_string(n); }) << "\n"
      << "x = " << join(c.xs, fmt) << "\n"
      << "rule = " << to_string(c.base.model.rule) << "\n"
      << "[run]\n"
      << "horizon = " << c.base.horizon << "\n"
      << "trials = " << c.trials << "\n"
      << "seed = " << c.seed << "\n"
      << "check_interval = " << c.base.check_interval << "\n"
      << "record_trajectory = " << (c.base.record_trajectory ? "true" : "false") << "\n"
      << "trajectory_interval = " << c.base.trajectory_interval << "\n"
      << "stop_on_trap = " << (c.base.stop_on_trap ? "true" : "false") << "\n"
      << "[criterion]\n"
      << "epsilon = " << fmt(tc.epsilon) << "\n"
      << "window = " << tc.window << "\n"
      << "allowed_sizes = " << join(tc.allowed_sizes, [](int s) { return std::to_string(s); }) << "\n"
      << "require_allowed_sizes = " << (tc.require_allowed_sizes ? "true" : "false") << "\n";
    return o.str();
}

}  // namespace trios
