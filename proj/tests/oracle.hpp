// Brute-force references, written without the library's sampler tables.
#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <vector>

#include <unistd.h>

#include "trios/dynamics.hpp"
#include "trios/graph.hpp"

namespace oracle {

using trios::Agent;
using trios::PropensityMatrix;
using trios::Trio;
using trios::TrioWeightRule;

inline double trio_weight(const PropensityMatrix& w, Agent i, Agent j, Agent k, TrioWeightRule rule) {
    // j < k are the chooser's partners
    std::vector<Agent> s{i, j, k};
    std::sort(s.begin(), s.end());
    const Agent a = s[0], b = s[1], c = s[2];
    switch (rule) {
    case TrioWeightRule::Literal: return w(a, b) * w(a, c) * w(b, c);
    case TrioWeightRule::Symmetrized:
        return (w(a, b) + w(b, a)) / 2 * ((w(a, c) + w(c, a)) / 2) * ((w(b, c) + w(c, b)) / 2);
    case TrioWeightRule::ChooserOnly: return w(i, j) * w(i, k);
    }
    return 0.0;
}

// Exact distribution of the chooser's trio, keyed by sorted trio.
inline std::map<Trio, double> distribution(const PropensityMatrix& w, Agent i, TrioWeightRule rule) {
    std::map<Trio, double> out;
    double total = 0.0;
    for (Agent j = 0; j < w.size(); ++j) {
        for (Agent k = j + 1; k < w.size(); ++k) {
            if (j == i || k == i) continue;
            const double v = trio_weight(w, i, j, k, rule);
            out[trios::make_trio(i, j, k)] = v;
            total += v;
        }
    }
    for (auto& [t, p] : out) p /= total;
    return out;
}

// Components by repeated flood fill over the adjacency test.
inline std::set<std::set<Agent>> components(const trios::InteractionGraph& g) {
    const int n = g.vertex_count();
    std::vector<int> label(static_cast<std::size_t>(n), -1);
    std::set<std::set<Agent>> out;
    for (Agent s = 0; s < n; ++s) {
        if (label[s] >= 0) continue;
        std::set<Agent> block{s};
        std::vector<Agent> stack{s};
        label[s] = s;
        while (!stack.empty()) {
            const Agent v = stack.back();
            stack.pop_back();
            for (Agent u = 0; u < n; ++u) {
                if (label[u] < 0 && g.has_edge(v, u)) {
                    label[u] = s;
                    block.insert(u);
                    stack.push_back(u);
                }
            }
        }
        out.insert(block);
    }
    return out;
}

inline std::set<std::set<Agent>> as_sets(const trios::Partition& p) {
    std::set<std::set<Agent>> out;
    for (const auto& b : p.blocks()) out.insert(std::set<Agent>(b.begin(), b.end()));
    return out;
}

inline PropensityMatrix random_matrix(int n, std::uint64_t seed, bool symmetric, double zero_prob = 0.0) {
    trios::Rng rng(seed);
    PropensityMatrix w(n);
    for (Agent i = 0; i < n; ++i) {
        for (Agent j = 0; j < n; ++j) {
            if (i == j || (symmetric && j < i)) continue;
            double v = 0.05 + 5.0 * trios::uniform01(rng);
            if (trios::uniform01(rng) < zero_prob) v = 0.0;
            w(i, j) = v;
            if (symmetric) w(j, i) = v;
        }
    }
    return w;
}

// Fresh scratch directory under the system temp dir.
inline std::filesystem::path temp_dir(const std::string& tag) {
    static int counter = 0;
    auto p = std::filesystem::temp_directory_path() /
             ("trios_test_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::remove_all(p);
    std::filesystem::create_directories(p);
    return p;
}

}  // namespace oracle
