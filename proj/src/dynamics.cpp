#include "trios/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace trios {

std::string_view to_string(Game game) {
    switch (game) {
    case Game::ThreesCompany: return "threes_company";
    case Game::StagHunt: return "stag_hunt";
    }
    return "unknown";
}

std::string_view to_string(TrioWeightRule rule) {
    switch (rule) {
    case TrioWeightRule::Literal: return "literal";
    case TrioWeightRule::Symmetrized: return "symmetrized";
    case TrioWeightRule::ChooserOnly: return "chooser_only";
    }
    return "unknown";
}

Game parse_game(std::string_view text) {
    if (text == "threes_company") return Game::ThreesCompany;
    if (text == "stag_hunt") return Game::StagHunt;
    throw ConfigError("unknown game '" + std::string(text) + "' (expected threes_company or stag_hunt)");
}

TrioWeightRule parse_rule(std::string_view text) {
    if (text == "literal") return TrioWeightRule::Literal;
    if (text == "symmetrized") return TrioWeightRule::Symmetrized;
    if (text == "chooser_only") return TrioWeightRule::ChooserOnly;
    throw ConfigError("unknown rule '" + std::string(text) +
                      "' (expected literal, symmetrized or chooser_only)");
}

void ModelConfig::validate() const {
    if (population_size < 4) {
        throw ConfigError("population size must be at least 4, got " + std::to_string(population_size));
    }
    if (!(x > 0.0 && x < 1.0)) {
        throw ConfigError("discount rate x must lie in (0,1), got " + std::to_string(x));
    }
    if (game == Game::StagHunt && population_size % 2 != 0) {
        throw ConfigError("stag hunt needs an even population, got " + std::to_string(population_size));
    }
}

double PropensityMatrix::total_weight() const {
    double sum = 0.0;
    for (double v : w_) sum += v;
    return 0.5 * sum;
}

bool PropensityMatrix::is_symmetric() const {
    for (Agent i = 0; i < n_; ++i) {
        for (Agent j = i + 1; j < n_; ++j) {
            if ((*this)(i, j) != (*this)(j, i)) return false;
        }
    }
    return true;
}

Trio make_trio(Agent a, Agent b, Agent c) {
    const Agent lo = std::min(std::min(a, b), c);
    const Agent hi = std::max(std::max(a, b), c);
    return {lo, a + b + c - lo - hi, hi};
}

bool contains(const Trio& trio, Agent a) {
    return trio[0] == a || trio[1] == a || trio[2] == a;
}

PropensityMatrix init_weights(const ModelConfig& config) {
    config.validate();
    const int n = config.population_size;
    PropensityMatrix w(n);
    for (Agent i = 0; i < n; ++i) {
        for (Agent j = 0; j < n; ++j) w(i, j) = (i == j) ? 0.0 : 1.0;
    }
    return w;
}

TrioSampler::TrioSampler(int population_size, TrioWeightRule rule)
    : n_(population_size), rule_(rule),
      per_chooser_(static_cast<std::size_t>(population_size - 1) * (population_size - 2) / 2) {
    if (population_size < 3) throw ConfigError("trio sampling needs at least 3 agents");
    const auto n = static_cast<std::uint32_t>(n_);
    trios_.reserve(per_chooser_ * n_);
    offsets_.reserve(per_chooser_ * n_);
    for (Agent i = 0; i < n_; ++i) {
        for (Agent j = 0; j < n_; ++j) {
            if (j == i) continue;
            for (Agent k = j + 1; k < n_; ++k) {
                if (k == i) continue;
                const Trio t = make_trio(i, j, k);
                trios_.push_back(t);
                const auto a = static_cast<std::uint32_t>(t[0]);
                const auto b = static_cast<std::uint32_t>(t[1]);
                const auto c = static_cast<std::uint32_t>(t[2]);
                const auto ui = static_cast<std::uint32_t>(i);
                const auto uj = static_cast<std::uint32_t>(j);
                const auto uk = static_cast<std::uint32_t>(k);
                switch (rule_) {
                case TrioWeightRule::Literal:
                    offsets_.push_back({a * n + b, a * n + c, b * n + c, 0, 0, 0});
                    break;
                case TrioWeightRule::Symmetrized:
                    offsets_.push_back({a * n + b, a * n + c, b * n + c, b * n + a, c * n + a, c * n + b});
                    break;
                case TrioWeightRule::ChooserOnly:
                    offsets_.push_back({ui * n + uj, ui * n + uk, 0, 0, 0, 0});
                    break;
                }
            }
        }
    }
    scratch_.resize(per_chooser_);
}

template <TrioWeightRule R>
void TrioSampler::fill(const double* m, Agent chooser, double* out) const {
    const auto* off = offsets_.data() + static_cast<std::size_t>(chooser) * per_chooser_;
    for (std::size_t k = 0; k < per_chooser_; ++k) {
        const auto& o = off[k];
        if constexpr (R == TrioWeightRule::Literal) {
            out[k] = m[o[0]] * m[o[1]] * m[o[2]];
        } else if constexpr (R == TrioWeightRule::Symmetrized) {
            out[k] = 0.125 * (m[o[0]] + m[o[3]]) * (m[o[1]] + m[o[4]]) * (m[o[2]] + m[o[5]]);
        } else {
            out[k] = m[o[0]] * m[o[1]];
        }
    }
}

std::span<const double> TrioSampler::weights(const PropensityMatrix& w, Agent chooser) {
    const double* m = w.data().data();
    double* out = scratch_.data();
    switch (rule_) {
    case TrioWeightRule::Literal: fill<TrioWeightRule::Literal>(m, chooser, out); break;
    case TrioWeightRule::Symmetrized: fill<TrioWeightRule::Symmetrized>(m, chooser, out); break;
    case TrioWeightRule::ChooserOnly: fill<TrioWeightRule::ChooserOnly>(m, chooser, out); break;
    }
    return {scratch_.data(), per_chooser_};
}

namespace {

// Index of the first prefix sum above u, skipping back over zero-weight
// entries that rounding can land on.
std::size_t pick_index(const double* cum, std::size_t len, double u) {
    // Branchless count; the data-dependent exit of a linear scan mispredicts
    // on almost every draw.
    std::size_t pick = 0;
    for (std::size_t k = 0; k < len; ++k) pick += cum[k] <= u;
    pick = std::min(pick, len - 1);
    while (pick > 0 && cum[pick] == cum[pick - 1]) --pick;
    return pick;
}

}  // namespace

Trio TrioSampler::sample_one(const PropensityMatrix& w, Agent chooser, Rng& rng) {
    if (w.size() != n_) throw std::invalid_argument("sampler and matrix sizes differ");
    weights(w, chooser);
    // Running sum in place; the scratch buffer is ours to overwrite.
    double total = 0.0;
    for (double& v : scratch_) {
        total += v;
        v = total;
    }
    if (!(total > 0.0) || !std::isfinite(total)) {
        throw DegenerateDistribution("degenerate distribution for chooser " + std::to_string(chooser + 1));
    }
    return candidate(chooser, pick_index(scratch_.data(), per_chooser_, uniform01(rng) * total));
}

void TrioSampler::sample_all(const PropensityMatrix& w, Rng& rng, StepRecord& out) {
    out.time = w.time();
    out.choices.resize(static_cast<std::size_t>(n_));
    for (Agent i = 0; i < n_; ++i) {
        out.choices[static_cast<std::size_t>(i)] = TrioChoice{i, sample_one(w, i, rng)};
    }
}

std::vector<TrioProbability> trio_distribution(const PropensityMatrix& w, Agent chooser,
                                               TrioWeightRule rule) {
    TrioSampler sampler(w.size(), rule);
    const auto weight = sampler.weights(w, chooser);
    double total = 0.0;
    for (double v : weight) total += v;
    if (!(total > 0.0) || !std::isfinite(total)) {
        throw DegenerateDistribution("degenerate distribution for chooser " + std::to_string(chooser + 1));
    }
    std::vector<TrioProbability> table;
    table.reserve(weight.size());
    for (std::size_t k = 0; k < weight.size(); ++k) {
        table.push_back({sampler.candidate(chooser, k), weight[k] / total});
    }
    return table;
}

double cross_group_choice_probability(const PropensityMatrix& w, std::span<const Agent> group,
                                      Agent chooser, TrioWeightRule rule) {
    std::vector<char> inside(static_cast<std::size_t>(w.size()), 0);
    for (Agent a : group) inside.at(static_cast<std::size_t>(a)) = 1;
    if (!inside.at(static_cast<std::size_t>(chooser))) {
        throw std::invalid_argument("chooser must belong to the group");
    }
    double total = 0.0;
    double outside = 0.0;
    for (const auto& [trio, p] : trio_distribution(w, chooser, rule)) {
        total += p;
        if (!inside[trio[0]] || !inside[trio[1]] || !inside[trio[2]]) outside += p;
    }
    return outside / total;
}

StepRecord sample_trios(const PropensityMatrix& w, TrioWeightRule rule, Rng& rng) {
    TrioSampler sampler(w.size(), rule);
    StepRecord record;
    sampler.sample_all(w, rng, record);
    return record;
}

namespace {

void check_record(const PropensityMatrix& w, const StepRecord& choices) {
    if (choices.time != w.time()) {
        throw std::invalid_argument("choices drawn at t=" + std::to_string(choices.time) +
                                    " but weights are at t=" + std::to_string(w.time()));
    }
    if (choices.choices.size() != static_cast<std::size_t>(w.size())) {
        throw std::invalid_argument("step record must hold one trio per agent");
    }
}

void decay(PropensityMatrix& w, double x) {
    const double keep = 1.0 - x;
    for (double& v : w.data()) v *= keep;
}

}  // namespace

PropensityMatrix reinforce_threes_company(PropensityMatrix w, const StepRecord& choices, double x,
                                          double reward) {
    check_record(w, choices);
    decay(w, x);
    for (const auto& choice : choices.choices) {
        const auto& [a, b, c] = choice.members;
        w(a, b) += reward; w(b, a) += reward;
        w(a, c) += reward; w(c, a) += reward;
        w(b, c) += reward; w(c, b) += reward;
    }
    w.set_time(w.time() + 1);
    return w;
}

PropensityMatrix reinforce_stag_hunt(PropensityMatrix w, const StepRecord& choices, double x,
                                     int hare_count, const Rewards& rewards) {
    check_record(w, choices);
    if (2 * hare_count != w.size()) {
        throw std::invalid_argument("stag hunt needs N = 2n");
    }
    decay(w, x);
    for (const auto& choice : choices.choices) {
        const Trio& t = choice.members;
        const bool all_stag = t[0] >= hare_count;  // members are sorted
        for (int p = 0; p < 3; ++p) {
            for (int q = 0; q < 3; ++q) {
                if (p == q) continue;
                const Agent i = t[p];
                if (i < hare_count) {
                    w(i, t[q]) += rewards.hare;
                } else if (all_stag) {
                    w(i, t[q]) += rewards.stag;
                }
            }
        }
    }
    w.set_time(w.time() + 1);
    return w;
}

Simulation::Simulation(ModelConfig config)
    : config_(config), weights_(init_weights(config)), sampler_(config.population_size, config.rule) {}

const StepRecord& Simulation::step(Rng& rng) {
    sampler_.sample_all(weights_, rng, record_);
    if (config_.game == Game::ThreesCompany) {
        weights_ = reinforce_threes_company(std::move(weights_), record_, config_.x,
                                            config_.rewards.threes_company);
    } else {
        weights_ = reinforce_stag_hunt(std::move(weights_), record_, config_.x, config_.hare_count(),
                                       config_.rewards);
    }
    return record_;
}

std::pair<SimulationState, StepRecord> step(SimulationState state, Rng& rng) {
    state.config.validate();
    StepRecord record = sample_trios(state.weights, state.config.rule, rng);
    if (state.config.game == Game::ThreesCompany) {
        state.weights = reinforce_threes_company(std::move(state.weights), record, state.config.x,
                                                 state.config.rewards.threes_company);
    } else {
        state.weights = reinforce_stag_hunt(std::move(state.weights), record, state.config.x,
                                            state.config.hare_count(), state.config.rewards);
    }
    return {std::move(state), std::move(record)};
}

}  // namespace trios
