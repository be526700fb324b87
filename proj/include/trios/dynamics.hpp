// Discounted reinforcement dynamics for trio formation.
//
// Agents are 0-based internally. Serialized outputs (CSV, JSONL) use
// 1-based ids.
#pragma once

#include <array>
#include <cstdint>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace trios {

using Agent = int;
using Rng = std::mt19937_64;

enum class Game { ThreesCompany, StagHunt };

// How the weight of a candidate trio is built from pairwise propensities.
//   Literal      product over the three index-ordered pairs, W(r,s) with r < s
//   Symmetrized  product over the three pairs of (W(r,s) + W(s,r)) / 2
//   ChooserOnly  W(i,j) * W(i,k) for chooser i
enum class TrioWeightRule { Literal, Symmetrized, ChooserOnly };

std::string_view to_string(Game game);
std::string_view to_string(TrioWeightRule rule);
Game parse_game(std::string_view text);
TrioWeightRule parse_rule(std::string_view text);

class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

class DegenerateDistribution : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct Rewards {
    double threes_company = 1.0;
    double hare = 3.0;
    double stag = 4.0;

    friend bool operator==(const Rewards&, const Rewards&) = default;
};

struct ModelConfig {
    int population_size = 6;
    double x = 0.5;  // discount rate; the past survives each step with factor 1 - x
    Game game = Game::ThreesCompany;
    TrioWeightRule rule = TrioWeightRule::ChooserOnly;
    Rewards rewards{};

    // Number of hare hunters (agents 0..n-1). Stag hunters are n..N-1.
    int hare_count() const { return population_size / 2; }
    bool is_stag(Agent a) const { return game == Game::StagHunt && a >= hare_count(); }

    // Throws ConfigError when N < 4, x outside (0,1), or StagHunt with odd N.
    void validate() const;

    friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

class PropensityMatrix {
public:
    PropensityMatrix() = default;
    explicit PropensityMatrix(int n) : n_(n), w_(static_cast<std::size_t>(n) * n, 0.0) {}

    int size() const { return n_; }
    std::int64_t time() const { return time_; }
    void set_time(std::int64_t t) { time_ = t; }

    double operator()(Agent i, Agent j) const { return w_[index(i, j)]; }
    double& operator()(Agent i, Agent j) { return w_[index(i, j)]; }

    std::span<const double> data() const { return w_; }
    std::span<double> data() { return w_; }

    // Half the sum of all entries: the total over unordered edges when the
    // matrix is symmetric.
    double total_weight() const;
    bool is_symmetric() const;

    friend bool operator==(const PropensityMatrix&, const PropensityMatrix&) = default;

private:
    std::size_t index(Agent i, Agent j) const { return static_cast<std::size_t>(i) * n_ + j; }

    int n_ = 0;
    std::int64_t time_ = 0;
    std::vector<double> w_;
};

// A trio is stored with members in ascending order.
using Trio = std::array<Agent, 3>;

Trio make_trio(Agent a, Agent b, Agent c);
bool contains(const Trio& trio, Agent a);

struct TrioChoice {
    Agent chooser = 0;
    Trio members{};

    friend bool operator==(const TrioChoice&, const TrioChoice&) = default;
};

struct StepRecord {
    std::int64_t time = 0;
    std::vector<TrioChoice> choices;  // choices[i].chooser == i

    friend bool operator==(const StepRecord&, const StepRecord&) = default;
};

struct TrioProbability {
    Trio trio;
    double probability;
};

PropensityMatrix init_weights(const ModelConfig& config);

// Every trio containing the chooser, lexicographic in the two partners,
// with its normalized probability.
std::vector<TrioProbability> trio_distribution(const PropensityMatrix& w, Agent chooser,
                                               TrioWeightRule rule);

// Probability that the chooser's trio contains at least one agent outside
// `group`. The group must contain the chooser.
double cross_group_choice_probability(const PropensityMatrix& w, std::span<const Agent> group,
                                      Agent chooser, TrioWeightRule rule);

// Uniform double in [0,1) with 53 random bits. Unlike
// std::uniform_real_distribution this is identical on every standard library.
inline double uniform01(Rng& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

// Draws one trio per agent from the time-t weights. Keeps precomputed
// matrix offsets for every candidate trio and a scratch buffer, so repeated
// sampling does not allocate.
class TrioSampler {
public:
    TrioSampler(int population_size, TrioWeightRule rule);

    int population_size() const { return n_; }
    TrioWeightRule rule() const { return rule_; }
    std::size_t trios_per_chooser() const { return per_chooser_; }

    Trio sample_one(const PropensityMatrix& w, Agent chooser, Rng& rng);
    void sample_all(const PropensityMatrix& w, Rng& rng, StepRecord& out);

    // Unnormalized weights for the chooser's candidates, same order as
    // trio_distribution.
    std::span<const double> weights(const PropensityMatrix& w, Agent chooser);
    const Trio& candidate(Agent chooser, std::size_t k) const {
        return trios_[static_cast<std::size_t>(chooser) * per_chooser_ + k];
    }

private:
    int n_;
    TrioWeightRule rule_;
    std::size_t per_chooser_;
    template <TrioWeightRule R>
    void fill(const double* m, Agent chooser, double* out) const;

    // Per chooser and candidate: the sorted trio and up to six matrix offsets.
    std::vector<Trio> trios_;
    std::vector<std::array<std::uint32_t, 6>> offsets_;
    std::vector<double> scratch_;
};

StepRecord sample_trios(const PropensityMatrix& w, TrioWeightRule rule, Rng& rng);

// W(i,j) <- (1-x) W(i,j) + #{r : {i,j} in U(r)}, one batch update.
PropensityMatrix reinforce_threes_company(PropensityMatrix w, const StepRecord& choices, double x,
                                          double reward = 1.0);

// Hare hunters (i < n) gain `hare_reward` per trio covering {i,j}; stag
// hunters gain `stag_reward` per all-stag trio covering {i,j}. Rows evolve
// independently.
PropensityMatrix reinforce_stag_hunt(PropensityMatrix w, const StepRecord& choices, double x,
                                     int hare_count, const Rewards& rewards = {});

class Simulation {
public:
    explicit Simulation(ModelConfig config);

    const ModelConfig& config() const { return config_; }
    const PropensityMatrix& weights() const { return weights_; }
    std::int64_t time() const { return weights_.time(); }

    // Samples all trios from the current weights, then reinforces once.
    const StepRecord& step(Rng& rng);
    const StepRecord& last_record() const { return record_; }

    TrioSampler& sampler() { return sampler_; }

private:
    ModelConfig config_;
    PropensityMatrix weights_;
    TrioSampler sampler_;
    StepRecord record_;
};

struct SimulationState {
    ModelConfig config;
    PropensityMatrix weights;
};

std::pair<SimulationState, StepRecord> step(SimulationState state, Rng& rng);

}  // namespace trios
