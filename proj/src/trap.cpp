#include "trios/trap.hpp"

#include <algorithm>
#include <stdexcept>

namespace trios {

void TrapCriterion::validate() const {
    if (!(epsilon > 0.0 && epsilon < 1.0)) throw ConfigError("epsilon must lie in (0,1)");
    if (window < 1) throw ConfigError("window must be at least 1");
    for (int s : allowed_sizes) {
        if (s < 1) throw ConfigError("allowed sizes must be positive");
    }
}

namespace {

// Probability mass per chooser on trios that leave `inside`.
double outside_mass(TrioSampler& sampler, const PropensityMatrix& w, Agent chooser,
                    const std::vector<char>& inside) {
    const auto weight = sampler.weights(w, chooser);
    double total = 0.0;
    double outside = 0.0;
    for (std::size_t k = 0; k < weight.size(); ++k) {
        total += weight[k];
        const Trio t = sampler.candidate(chooser, k);
        if (!inside[t[0]] || !inside[t[1]] || !inside[t[2]]) outside += weight[k];
    }
    if (!(total > 0.0)) throw DegenerateDistribution("degenerate distribution for chooser " + std::to_string(chooser + 1));
    return outside / total;
}

}  // namespace

double max_cross_probability(const PropensityMatrix& w, const Partition& p, TrioWeightRule rule) {
    if (p.population() != w.size()) throw std::invalid_argument("partition and matrix sizes differ");
    TrioSampler sampler(w.size(), rule);
    std::vector<char> inside(static_cast<std::size_t>(w.size()));
    double worst = 0.0;
    for (const auto& block : p.blocks()) {
        std::fill(inside.begin(), inside.end(), 0);
        for (Agent a : block) inside[static_cast<std::size_t>(a)] = 1;
        for (Agent a : block) worst = std::max(worst, outside_mass(sampler, w, a, inside));
    }
    return worst;
}

int absorbing_size(const std::vector<Agent>& block, Game game, int population_size) {
    if (game != Game::StagHunt) return static_cast<int>(block.size());
    const int hares = population_size / 2;
    const auto stags = std::count_if(block.begin(), block.end(), [&](Agent a) { return a >= hares; });
    return stags > 0 ? static_cast<int>(stags) : static_cast<int>(block.size());
}

TrapReport detect_trap_pooled(const InteractionGraph& pooled, const PropensityMatrix& w,
                              const TrapCriterion& criterion, Game game, TrioWeightRule rule) {
    if (pooled.vertex_count() != w.size()) throw std::invalid_argument("graph and matrix sizes differ");
    TrapReport report;
    report.partition = components(pooled);
    report.sizes = report.partition.sizes();
    report.sizes_allowed = std::all_of(report.partition.blocks().begin(), report.partition.blocks().end(),
                                       [&](const auto& b) {
                                           return criterion.allowed_sizes.contains(absorbing_size(b, game, w.size()));
                                       });
    // Every trio of the window lies inside one component by construction, so
    // isolation reduces to having more than one component.
    if (report.partition.block_count() < 2) return report;
    report.max_cross_probability = max_cross_probability(w, report.partition, rule);
    report.isolated = report.max_cross_probability < criterion.epsilon;
    report.trapped = report.isolated && (report.sizes_allowed || !criterion.require_allowed_sizes);
    if (report.trapped) report.detection_time = w.time();
    return report;
}

TrapReport detect_trap(std::span<const InteractionGraph> window_graphs, const PropensityMatrix& w,
                       const TrapCriterion& criterion, Game game, TrioWeightRule rule) {
    criterion.validate();
    if (window_graphs.size() != static_cast<std::size_t>(criterion.window)) {
        throw std::invalid_argument("window holds " + std::to_string(window_graphs.size()) +
                                    " graphs, criterion expects " + std::to_string(criterion.window));
    }
    return detect_trap_pooled(window_union(window_graphs), w, criterion, game, rule);
}

std::string_view to_string(BlockKind kind) {
    switch (kind) {
    case BlockKind::AllStag: return "all_stag";
    case BlockKind::AllHare: return "all_hare";
    case BlockKind::HareAttachment: return "hare_attachment";
    }
    return "unknown";
}

std::string_view to_string(AttachmentKind kind) {
    switch (kind) {
    case AttachmentKind::OneHarePairOfStags: return "one_rabbit_pair_of_stags";
    case AttachmentKind::TwoHaresSingleStag: return "two_rabbits_single_stag";
    case AttachmentKind::Other: return "other";
    }
    return "unknown";
}

StagOutcome classify_stag_outcome(const Partition& partition, const PropensityMatrix& w, int hare_count,
                                  TrioWeightRule rule, double epsilon) {
    if (2 * hare_count != w.size()) throw std::invalid_argument("stag hunt needs N = 2n");
    StagOutcome out;
    for (const auto& block : partition.blocks()) {
        const auto hares = std::count_if(block.begin(), block.end(), [&](Agent a) { return a < hare_count; });
        if (hares == 0) {
            out.block_kinds.push_back(BlockKind::AllStag);
        } else if (static_cast<std::size_t>(hares) == block.size()) {
            out.block_kinds.push_back(BlockKind::AllHare);
        } else {
            out.block_kinds.push_back(BlockKind::HareAttachment);
        }
    }

    TrioSampler sampler(w.size(), rule);
    for (Agent h = 0; h < hare_count; ++h) {
        const auto weight = sampler.weights(w, h);
        double total = 0.0;
        double stag = 0.0;
        std::size_t modal = 0;
        for (std::size_t k = 0; k < weight.size(); ++k) {
            total += weight[k];
            if (sampler.candidate(h, k)[2] >= hare_count) stag += weight[k];  // sorted: last is largest
            if (weight[k] > weight[modal]) modal = k;
        }
        if (!(total > 0.0)) throw DegenerateDistribution("degenerate distribution for hare " + std::to_string(h + 1));
        const double mass = stag / total;
        out.hare_stag_mass.push_back(mass);
        if (mass < epsilon) continue;

        HareAttachment att;
        att.hare = h;
        att.stag_mass = mass;
        att.modal_trio = sampler.candidate(h, modal);
        const auto stags = std::count_if(att.modal_trio.begin(), att.modal_trio.end(),
                                         [&](Agent a) { return a >= hare_count; });
        att.kind = stags == 2   ? AttachmentKind::OneHarePairOfStags
                   : stags == 1 ? AttachmentKind::TwoHaresSingleStag
                                : AttachmentKind::Other;
        out.attachments.push_back(att);
    }
    out.attached_hares = static_cast<int>(out.attachments.size());
    return out;
}

double max_stag_hare_visit_probability(const PropensityMatrix& w, int hare_count, TrioWeightRule rule) {
    TrioSampler sampler(w.size(), rule);
    return max_stag_hare_visit_probability(w, hare_count, sampler);
}

double max_stag_hare_visit_probability(const PropensityMatrix& w, int hare_count, TrioSampler& sampler) {
    double worst = 0.0;
    for (Agent s = hare_count; s < w.size(); ++s) {
        const auto weight = sampler.weights(w, s);
        double total = 0.0;
        double hare = 0.0;
        for (std::size_t k = 0; k < weight.size(); ++k) {
            total += weight[k];
            if (sampler.candidate(s, k)[0] < hare_count) hare += weight[k];
        }
        if (!(total > 0.0)) throw DegenerateDistribution("degenerate distribution for stag " + std::to_string(s + 1));
        worst = std::max(worst, hare / total);
    }
    return worst;
}

}  // namespace trios
