#include "coreplace/placement.hpp"

#include <algorithm>
#include <limits>
#include <random>

#include "coreplace/errors.hpp"

namespace coreplace {

std::string_view to_string(Engine engine) {
  switch (engine) {
    case Engine::kZigzag: return "zigzag";
    case Engine::kSnake: return "snake";
    case Engine::kRandom: return "random";
    case Engine::kOracle: return "oracle";
  }
  return "?";
}

Engine parse_engine(std::string_view text) {
  if (text == "zigzag") return Engine::kZigzag;
  if (text == "snake" || text == "sigmate") return Engine::kSnake;
  if (text == "random" || text == "rs") return Engine::kRandom;
  if (text == "oracle") return Engine::kOracle;
  throw ValidationError("unknown engine '" + std::string(text) +
                        "' (expected zigzag|snake|random|oracle)");
}

namespace {

void require_fits(const TaskGraph& graph, const Mesh& mesh) {
  if (graph.size() > static_cast<std::size_t>(mesh.size())) {
    throw ValidationError("mesh too small: " + std::to_string(graph.size()) +
                          " logical cores on " + std::to_string(mesh.size()) + " physical cores");
  }
}

}  // namespace

Placement place_zigzag(const TaskGraph& graph, const Mesh& mesh) {
  require_fits(graph, mesh);
  std::vector<Coord> cells(graph.size());
  for (std::size_t k = 0; k < cells.size(); ++k) cells[k] = mesh.coord(static_cast<int>(k));
  return Placement(std::move(cells));
}

Placement place_snake(const TaskGraph& graph, const Mesh& mesh) {
  require_fits(graph, mesh);
  const int w = mesh.width();
  std::vector<Coord> cells(graph.size());
  for (std::size_t k = 0; k < cells.size(); ++k) {
    const int i = static_cast<int>(k);
    const int row = i / w;
    const int col = row % 2 == 0 ? i % w : w - 1 - i % w;
    cells[k] = {col, row};
  }
  return Placement(std::move(cells));
}

RandomSearchResult place_random_search(const TaskGraph& graph, const Mesh& mesh,
                                       std::uint64_t seed, std::int64_t iterations) {
  require_fits(graph, mesh);
  if (iterations < 1) throw ValidationError("random search needs iterations >= 1");
  std::mt19937_64 rng(seed);
  std::vector<int> pool(static_cast<std::size_t>(mesh.size()));
  for (int i = 0; i < mesh.size(); ++i) pool[static_cast<std::size_t>(i)] = i;
  const std::size_t n = graph.size();

  RandomSearchResult result;
  result.cost = std::numeric_limits<std::int64_t>::max();
  result.trace.reserve(static_cast<std::size_t>(iterations));
  std::vector<Coord> cells(n);
  for (std::int64_t it = 0; it < iterations; ++it) {
    // Partial Fisher-Yates: the first n entries become a uniform injective draw.
    for (std::size_t i = 0; i < n; ++i) {
      std::uniform_int_distribution<std::size_t> pick(i, pool.size() - 1);
      std::swap(pool[i], pool[pick(rng)]);
      cells[i] = mesh.coord(pool[i]);
    }
    Placement candidate(cells);
    const auto cost = communication_cost(graph, candidate);
    if (cost < result.cost) {
      result.cost = cost;
      result.placement = std::move(candidate);
    }
    result.trace.push_back(result.cost);
  }
  return result;
}

std::int64_t placement_count(std::int64_t cells, std::int64_t nodes) {
  std::int64_t count = 1;
  for (std::int64_t i = 0; i < nodes; ++i) {
    count *= cells - i;
    if (count > kOracleLimit) return kOracleLimit + 1;
  }
  return count;
}

Placement place_oracle(const TaskGraph& graph, const Mesh& mesh) {
  require_fits(graph, mesh);
  const auto n = graph.size();
  if (placement_count(mesh.size(), static_cast<std::int64_t>(n)) > kOracleLimit) {
    throw ValidationError("oracle refused: more than " + std::to_string(kOracleLimit) +
                          " placements to enumerate");
  }
  // Edge weight to every lower-numbered node, both directions summed.
  std::vector<std::vector<std::pair<std::size_t, std::int64_t>>> back(n);
  for (const auto& e : graph.edges) {
    const auto hi = std::max(e.src, e.dst);
    const auto lo = std::min(e.src, e.dst);
    back[hi].emplace_back(lo, e.bytes);
  }

  std::vector<Coord> current(n);
  std::vector<Coord> best(n);
  std::vector<bool> used(static_cast<std::size_t>(mesh.size()), false);
  std::int64_t best_cost = std::numeric_limits<std::int64_t>::max();

  // Cells are tried in index order, so the first optimum found is the
  // lexicographically smallest; pruning on >= keeps it.
  auto search = [&](auto&& self, std::size_t node, std::int64_t partial) -> void {
    if (partial >= best_cost) return;
    if (node == n) {
      best_cost = partial;
      best = current;
      return;
    }
    for (int cell = 0; cell < mesh.size(); ++cell) {
      if (used[static_cast<std::size_t>(cell)]) continue;
      const Coord c = mesh.coord(cell);
      std::int64_t added = 0;
      for (const auto& [other, bytes] : back[node]) added += bytes * hops(c, current[other]);
      used[static_cast<std::size_t>(cell)] = true;
      current[node] = c;
      self(self, node + 1, partial + added);
      used[static_cast<std::size_t>(cell)] = false;
    }
  };
  search(search, 0, 0);
  return Placement(std::move(best));
}

std::vector<Coord> ring(Coord center, int d) {
  if (d == 0) return {center};
  std::vector<Coord> out;
  out.reserve(static_cast<std::size_t>(4 * d));
  for (int i = 0; i < d; ++i) out.push_back({center.x + i, center.y - d + i});  // N -> E
  for (int i = 0; i < d; ++i) out.push_back({center.x + d - i, center.y + i});  // E -> S
  for (int i = 0; i < d; ++i) out.push_back({center.x - i, center.y + d - i});  // S -> W
  for (int i = 0; i < d; ++i) out.push_back({center.x - d + i, center.y - i});  // W -> N
  return out;
}

std::vector<NodeId> traffic_priority(const TaskGraph& graph) {
  std::vector<NodeId> order(graph.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<NodeId>(i);
  std::stable_sort(order.begin(), order.end(), [&](NodeId a, NodeId b) {
    const auto& na = graph.nodes[a];
    const auto& nb = graph.nodes[b];
    return na.bytes_in + na.bytes_out > nb.bytes_in + nb.bytes_out;
  });
  return order;
}

Placement resolve_conflicts(std::span<const Coord> targets, std::span<const NodeId> priority,
                            const Mesh& mesh) {
  const auto n = targets.size();
  if (n > static_cast<std::size_t>(mesh.size())) {
    throw ValidationError("mesh too small: " + std::to_string(n) + " logical cores on " +
                          std::to_string(mesh.size()) + " physical cores");
  }
  if (priority.size() != n) throw ValidationError("priority order must list every node once");
  std::vector<bool> taken(static_cast<std::size_t>(mesh.size()), false);
  std::vector<bool> done(n, false);
  std::vector<Coord> cells(n);
  const int max_d = mesh.width() + mesh.height();
  for (auto node : priority) {
    if (node >= n || done[node]) throw ValidationError("priority order must list every node once");
    const Coord target = targets[node];
    if (!mesh.contains(target)) throw ValidationError("conflict target outside the mesh");
    bool placed = false;
    for (int d = 0; d <= max_d && !placed; ++d) {
      for (const auto& c : ring(target, d)) {
        if (!mesh.contains(c) || taken[static_cast<std::size_t>(mesh.index(c))]) continue;
        taken[static_cast<std::size_t>(mesh.index(c))] = true;
        cells[node] = c;
        placed = true;
        break;
      }
    }
    if (!placed) throw InternalError("conflict resolution ran out of cells");
    done[node] = true;
  }
  return Placement(std::move(cells));
}

std::vector<Placement> mesh_symmetries(const Placement& placement, const Mesh& mesh) {
  const int w = mesh.width();
  const int h = mesh.height();
  const int variants = w == h ? 8 : 4;
  std::vector<Placement> out;
  for (int v = 0; v < variants; ++v) {
    Placement p = placement;
    for (std::size_t i = 0; i < p.size(); ++i) {
      Coord& c = p[i];
      if (v & 4) std::swap(c.x, c.y);
      if (v & 1) c.x = w - 1 - c.x;
      if (v & 2) c.y = h - 1 - c.y;
    }
    out.push_back(std::move(p));
  }
  return out;
}

std::int64_t peak_forwarded(const TaskGraph& graph, const Placement& placement, const Mesh& mesh) {
  const auto fwd = forwarded_bytes(directional_loads(graph, placement, mesh));
  return fwd.empty() ? 0 : *std::max_element(fwd.begin(), fwd.end());
}

Placement coolest_symmetry(const TaskGraph& graph, const Placement& placement, const Mesh& mesh) {
  Placement best = placement;
  std::int64_t best_peak = peak_forwarded(graph, placement, mesh);
  for (auto& p : mesh_symmetries(placement, mesh)) {
    const auto peak = peak_forwarded(graph, p, mesh);
    if (peak < best_peak) {
      best_peak = peak;
      best = std::move(p);
    }
  }
  return best;
}

Placement place(const TaskGraph& graph, const Mesh& mesh, const EngineConfig& config) {
  switch (config.engine) {
    case Engine::kZigzag: return place_zigzag(graph, mesh);
    case Engine::kSnake: return place_snake(graph, mesh);
    case Engine::kRandom:
      return place_random_search(graph, mesh, config.seed, config.iterations).placement;
    case Engine::kOracle: return place_oracle(graph, mesh);
  }
  throw InternalError("unhandled engine");
}

}  // namespace coreplace
