#pragma once

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "trios/dynamics.hpp"

namespace trios {

// Undirected simple graph on agents 0..N-1, adjacency stored as bit rows.
class InteractionGraph {
public:
    InteractionGraph() = default;
    explicit InteractionGraph(int vertex_count);

    int vertex_count() const { return n_; }

    void add_edge(Agent a, Agent b);
    bool has_edge(Agent a, Agent b) const;
    int degree(Agent a) const;
    std::size_t edge_count() const;
    // Sorted (a < b) pairs.
    std::vector<std::pair<Agent, Agent>> edges() const;

    // Edgewise union in place; vertex counts must match.
    InteractionGraph& merge(const InteractionGraph& other);
    void clear();

    friend bool operator==(const InteractionGraph&, const InteractionGraph&) = default;

private:
    std::size_t word(Agent a, Agent b) const { return static_cast<std::size_t>(a) * words_ + b / 64; }

    int n_ = 0;
    std::size_t words_ = 0;
    std::vector<std::uint64_t> bits_;
};

// Disjoint blocks covering 0..N-1. Canonical order: each block ascending,
// blocks ordered by their smallest member.
class Partition {
public:
    Partition() = default;
    explicit Partition(std::vector<std::vector<Agent>> blocks);

    const std::vector<std::vector<Agent>>& blocks() const { return blocks_; }
    std::size_t block_count() const { return blocks_.size(); }
    int population() const { return static_cast<int>(block_of_.size()); }
    std::size_t block_of(Agent a) const { return block_of_.at(static_cast<std::size_t>(a)); }
    // Block sizes, ascending.
    std::vector<int> sizes() const;
    // True when every block of this partition lies inside one block of `coarser`.
    bool refines(const Partition& coarser) const;

    friend bool operator==(const Partition& a, const Partition& b) { return a.blocks_ == b.blocks_; }

private:
    std::vector<std::vector<Agent>> blocks_;
    std::vector<std::size_t> block_of_;
};

class UnionFind {
public:
    explicit UnionFind(int n);

    int find(int a);
    bool unite(int a, int b);

private:
    std::vector<int> parent_;
    std::vector<int> rank_;
};

// Edge {r,s} iff some agent's trio contains both.
InteractionGraph interaction_graph(const StepRecord& choices, int vertex_count);

Partition components(const InteractionGraph& g);

// Union of complete graphs on the components of g, with the components.
std::pair<InteractionGraph, Partition> transitive_closure(const InteractionGraph& g);

InteractionGraph window_union(std::span<const InteractionGraph> graphs);

}  // namespace trios
