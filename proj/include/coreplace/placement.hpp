#pragma once

#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "coreplace/mesh.hpp"
#include "coreplace/taskgraph.hpp"

namespace coreplace {

enum class Engine { kZigzag, kSnake, kRandom, kOracle };

std::string_view to_string(Engine engine);
Engine parse_engine(std::string_view text);

struct EngineConfig {
  Engine engine = Engine::kZigzag;
  std::uint64_t seed = 0;
  std::int64_t iterations = 1000;  // random search only
};

/// Row-major from the top-left corner: node k -> (k mod W, k div W).
Placement place_zigzag(const TaskGraph& graph, const Mesh& mesh);

/// Serpentine rows: odd rows run right to left.
Placement place_snake(const TaskGraph& graph, const Mesh& mesh);

struct RandomSearchResult {
  Placement placement;
  std::int64_t cost = 0;
  std::vector<std::int64_t> trace;  // best-so-far after each sample
};

RandomSearchResult place_random_search(const TaskGraph& graph, const Mesh& mesh,
                                       std::uint64_t seed, std::int64_t iterations);

/// Upper bound on the permutations the oracle will enumerate.
inline constexpr std::int64_t kOracleLimit = 10'000'000;

/// Exhaustive minimum of communication_cost. Ties go to the
/// lexicographically smallest assignment (cells ordered by Mesh::index).
Placement place_oracle(const TaskGraph& graph, const Mesh& mesh);

/// Number of injective placements of `nodes` nodes on `cells` cores,
/// saturated at kOracleLimit + 1.
std::int64_t placement_count(std::int64_t cells, std::int64_t nodes);

/// Cells at Manhattan distance d from `center`, starting at (x, y-d) and
/// proceeding clockwise. May include off-mesh cells.
std::vector<Coord> ring(Coord center, int d);

/// Descending bytes_in + bytes_out, ties by node id.
std::vector<NodeId> traffic_priority(const TaskGraph& graph);

/// Maps nodes to their target cells in priority order; a node whose target
/// is taken goes to the first free in-bounds cell of the nearest ring
/// around the target.
Placement resolve_conflicts(std::span<const Coord> targets, std::span<const NodeId> priority,
                            const Mesh& mesh);

/// Images of `placement` under the mesh's symmetries (mirrors, and
/// transposes on a square mesh), identity first. Hop counts, and so
/// communication cost, are unchanged; clockwise routes are not.
std::vector<Placement> mesh_symmetries(const Placement& placement, const Mesh& mesh);

/// Largest per-core forwarded byte count.
std::int64_t peak_forwarded(const TaskGraph& graph, const Placement& placement, const Mesh& mesh);

/// The symmetry image with the smallest peak_forwarded; earliest on ties.
Placement coolest_symmetry(const TaskGraph& graph, const Placement& placement, const Mesh& mesh);

/// Runs the configured baseline engine.
Placement place(const TaskGraph& graph, const Mesh& mesh, const EngineConfig& config);

}  // namespace coreplace
