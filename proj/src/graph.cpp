#include "trios/graph.hpp"

#include <algorithm>
#include <bit>
#include <numeric>
#include <stdexcept>

namespace trios {

InteractionGraph::InteractionGraph(int vertex_count)
    : n_(vertex_count), words_((static_cast<std::size_t>(vertex_count) + 63) / 64),
      bits_(static_cast<std::size_t>(vertex_count) * words_, 0) {}

void InteractionGraph::add_edge(Agent a, Agent b) {
    if (a == b) throw std::invalid_argument("self-loops are not allowed");
    if (a < 0 || b < 0 || a >= n_ || b >= n_) throw std::out_of_range("edge endpoint out of range");
    bits_[word(a, b)] |= std::uint64_t{1} << (b % 64);
    bits_[word(b, a)] |= std::uint64_t{1} << (a % 64);
}

bool InteractionGraph::has_edge(Agent a, Agent b) const {
    if (a == b) return false;
    return (bits_[word(a, b)] >> (b % 64)) & 1U;
}

int InteractionGraph::degree(Agent a) const {
    int d = 0;
    for (std::size_t k = 0; k < words_; ++k) d += std::popcount(bits_[static_cast<std::size_t>(a) * words_ + k]);
    return d;
}

std::size_t InteractionGraph::edge_count() const {
    std::size_t total = 0;
    for (auto w : bits_) total += static_cast<std::size_t>(std::popcount(w));
    return total / 2;
}

std::vector<std::pair<Agent, Agent>> InteractionGraph::edges() const {
    std::vector<std::pair<Agent, Agent>> out;
    for (Agent a = 0; a < n_; ++a) {
        for (Agent b = a + 1; b < n_; ++b) {
            if (has_edge(a, b)) out.emplace_back(a, b);
        }
    }
    return out;
}

InteractionGraph& InteractionGraph::merge(const InteractionGraph& other) {
    if (other.n_ != n_) throw std::invalid_argument("graphs have different vertex counts");
    for (std::size_t k = 0; k < bits_.size(); ++k) bits_[k] |= other.bits_[k];
    return *this;
}

void InteractionGraph::clear() { std::fill(bits_.begin(), bits_.end(), 0); }

Partition::Partition(std::vector<std::vector<Agent>> blocks) : blocks_(std::move(blocks)) {
    std::size_t total = 0;
    for (auto& b : blocks_) {
        if (b.empty()) throw std::invalid_argument("partition blocks must be nonempty");
        std::sort(b.begin(), b.end());
        total += b.size();
    }
    std::sort(blocks_.begin(), blocks_.end(), [](const auto& l, const auto& r) { return l.front() < r.front(); });
    block_of_.assign(total, blocks_.size());
    for (std::size_t k = 0; k < blocks_.size(); ++k) {
        for (Agent a : blocks_[k]) {
            if (a < 0 || static_cast<std::size_t>(a) >= total || block_of_[static_cast<std::size_t>(a)] != blocks_.size()) {
                throw std::invalid_argument("partition blocks must be disjoint and cover 0..N-1");
            }
            block_of_[static_cast<std::size_t>(a)] = k;
        }
    }
}

std::vector<int> Partition::sizes() const {
    std::vector<int> out;
    out.reserve(blocks_.size());
    for (const auto& b : blocks_) out.push_back(static_cast<int>(b.size()));
    std::sort(out.begin(), out.end());
    return out;
}

bool Partition::refines(const Partition& coarser) const {
    if (coarser.population() != population()) return false;
    for (const auto& b : blocks_) {
        const std::size_t target = coarser.block_of(b.front());
        for (Agent a : b) {
            if (coarser.block_of(a) != target) return false;
        }
    }
    return true;
}

UnionFind::UnionFind(int n) : parent_(static_cast<std::size_t>(n)), rank_(static_cast<std::size_t>(n), 0) {
    std::iota(parent_.begin(), parent_.end(), 0);
}

int UnionFind::find(int a) {
    while (parent_[a] != a) {
        parent_[a] = parent_[parent_[a]];
        a = parent_[a];
    }
    return a;
}

bool UnionFind::unite(int a, int b) {
    a = find(a);
    b = find(b);
    if (a == b) return false;
    if (rank_[a] < rank_[b]) std::swap(a, b);
    parent_[b] = a;
    if (rank_[a] == rank_[b]) ++rank_[a];
    return true;
}

InteractionGraph interaction_graph(const StepRecord& choices, int vertex_count) {
    InteractionGraph g(vertex_count);
    for (const auto& c : choices.choices) {
        const auto& [a, b, d] = c.members;
        g.add_edge(a, b);
        g.add_edge(a, d);
        g.add_edge(b, d);
    }
    return g;
}

Partition components(const InteractionGraph& g) {
    const int n = g.vertex_count();
    UnionFind uf(n);
    for (const auto& [a, b] : g.edges()) uf.unite(a, b);
    std::vector<std::vector<Agent>> by_root(static_cast<std::size_t>(n));
    for (Agent a = 0; a < n; ++a) by_root[static_cast<std::size_t>(uf.find(a))].push_back(a);
    std::erase_if(by_root, [](const auto& b) { return b.empty(); });
    return Partition(std::move(by_root));
}

std::pair<InteractionGraph, Partition> transitive_closure(const InteractionGraph& g) {
    Partition p = components(g);
    InteractionGraph closed(g.vertex_count());
    for (const auto& block : p.blocks()) {
        for (std::size_t i = 0; i < block.size(); ++i) {
            for (std::size_t j = i + 1; j < block.size(); ++j) closed.add_edge(block[i], block[j]);
        }
    }
    return {std::move(closed), std::move(p)};
}

InteractionGraph window_union(std::span<const InteractionGraph> graphs) {
    if (graphs.empty()) throw std::invalid_argument("window_union needs at least one graph");
    InteractionGraph out = graphs.front();
    for (const auto& g : graphs.subspan(1)) out.merge(g);
    return out;
}

}  // namespace trios
