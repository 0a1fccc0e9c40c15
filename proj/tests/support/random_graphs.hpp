#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "coreplace/taskgraph.hpp"

namespace coreplace::testing {

// Random DAG on n nodes: each pair i < j gets an edge with probability p,
// bytes uniform in [1, max_bytes]. A chain edge keeps the graph connected.
inline TaskGraph random_dag(std::size_t n, std::uint64_t seed, double p = 0.4,
                            std::int64_t max_bytes = 100) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::int64_t> bytes(1, max_bytes);
  std::bernoulli_distribution coin(p);
  std::vector<TaskEdge> edges;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      if (j == i + 1 || coin(rng)) {
        edges.push_back({static_cast<NodeId>(i), static_cast<NodeId>(j), bytes(rng)});
      }
    }
  }
  std::vector<std::int64_t> compute(n, 10);
  return make_graph(Mode::kInference, compute, std::move(edges));
}

}  // namespace coreplace::testing
