// Finite-time detection of absorbing clique structure.
#pragma once

#include <optional>
#include <set>
#include <span>
#include <vector>

#include "trios/dynamics.hpp"
#include "trios/graph.hpp"

namespace trios {

struct TrapCriterion {
    double epsilon = 0.005;  // max per-agent probability of choosing outside its block
    int window = 1000;       // consecutive steps whose interaction graphs are pooled
    std::set<int> allowed_sizes{3, 4, 5};
    // Only call a window trapped when every block is at an absorbing size.
    bool require_allowed_sizes = true;

    void validate() const;
    friend bool operator==(const TrapCriterion&, const TrapCriterion&) = default;
};

struct TrapReport {
    // At least two blocks, and every agent's chance of leaving its block is
    // below epsilon.
    bool isolated = false;
    // isolated, and (when required) every block is at an absorbing size.
    bool trapped = false;
    Partition partition;
    std::optional<std::int64_t> detection_time;
    double max_cross_probability = 1.0;
    std::vector<int> sizes;
    // Every block's absorbing size lies in the criterion's allowed set.
    bool sizes_allowed = false;

    friend bool operator==(const TrapReport&, const TrapReport&) = default;
};

// Largest cross_group_choice_probability over all agents, each measured
// against its own block.
double max_cross_probability(const PropensityMatrix& w, const Partition& p, TrioWeightRule rule);

// The size of a block that has to lie in the allowed set for the block to be
// absorbing. Three's Company: the block size. Stag hunt: the number of stag
// hunters when the block has any (attached hares ride along), else the size.
int absorbing_size(const std::vector<Agent>& block, Game game, int population_size);

// Blocks are the components of the pooled window graph. The population is
// isolated when there are at least two blocks and no agent's probability of
// choosing a trio that leaves its block reaches epsilon.
TrapReport detect_trap(std::span<const InteractionGraph> window_graphs, const PropensityMatrix& w,
                       const TrapCriterion& criterion, Game game, TrioWeightRule rule);

// Same, from an already pooled window graph.
TrapReport detect_trap_pooled(const InteractionGraph& pooled, const PropensityMatrix& w,
                              const TrapCriterion& criterion, Game game, TrioWeightRule rule);

enum class BlockKind { AllStag, AllHare, HareAttachment };
enum class AttachmentKind { OneHarePairOfStags, TwoHaresSingleStag, Other };

std::string_view to_string(BlockKind kind);
std::string_view to_string(AttachmentKind kind);

struct HareAttachment {
    Agent hare = 0;
    AttachmentKind kind = AttachmentKind::Other;
    Trio modal_trio{};       // the hare's most likely trio
    double stag_mass = 0.0;  // probability the hare's trio contains a stag
};

struct StagOutcome {
    std::vector<BlockKind> block_kinds;  // parallel to partition.blocks()
    std::vector<HareAttachment> attachments;
    std::vector<double> hare_stag_mass;  // per hare, index 0..n-1
    int attached_hares = 0;
};

// A hare counts as interacting with stag hunters when the probability that
// its own trio contains a stag is at least epsilon.
StagOutcome classify_stag_outcome(const Partition& partition, const PropensityMatrix& w, int hare_count,
                                  TrioWeightRule rule, double epsilon = 0.005);

// Largest probability, over stag hunters, of choosing a trio with a hare.
double max_stag_hare_visit_probability(const PropensityMatrix& w, int hare_count, TrioWeightRule rule);
double max_stag_hare_visit_probability(const PropensityMatrix& w, int hare_count, TrioSampler& sampler);

}  // namespace trios
