#include "coreplace/mesh.hpp"

#include <cstdlib>
#include <set>
#include <sstream>

#include "coreplace/errors.hpp"

namespace coreplace {

char to_char(Direction d) {
  switch (d) {
    case Direction::kNorth: return 'N';
    case Direction::kEast: return 'E';
    case Direction::kSouth: return 'S';
    case Direction::kWest: return 'W';
  }
  return '?';
}

Coord step(Coord c, Direction d) {
  switch (d) {
    case Direction::kNorth: return {c.x, c.y - 1};
    case Direction::kEast: return {c.x + 1, c.y};
    case Direction::kSouth: return {c.x, c.y + 1};
    case Direction::kWest: return {c.x - 1, c.y};
  }
  return c;
}

Mesh::Mesh(int width, int height) : width_(width), height_(height) {
  if (width < 1 || height < 1) {
    throw ValidationError("mesh must be at least 1x1, got " + std::to_string(width) + "x" +
                          std::to_string(height));
  }
}

Mesh parse_mesh(const std::string& text) {
  const auto x = text.find_first_of("xX");
  if (x == std::string::npos) throw ValidationError("mesh must look like WxH, got '" + text + "'");
  try {
    std::size_t used_w = 0;
    std::size_t used_h = 0;
    const int w = std::stoi(text.substr(0, x), &used_w);
    const int h = std::stoi(text.substr(x + 1), &used_h);
    if (used_w != x || used_h != text.size() - x - 1) throw std::invalid_argument(text);
    return Mesh(w, h);
  } catch (const std::logic_error&) {
    throw ValidationError("mesh must look like WxH, got '" + text + "'");
  }
}

std::vector<Coord> Route::cores() const {
  std::vector<Coord> out{src};
  for (auto d : hops) out.push_back(step(out.back(), d));
  return out;
}

int hops(Coord a, Coord b) { return std::abs(a.x - b.x) + std::abs(a.y - b.y); }

Route route(const Mesh& mesh, Coord src, Coord dst) {
  if (!mesh.contains(src) || !mesh.contains(dst)) {
    throw ValidationError("route endpoints must lie inside the mesh");
  }
  Route r{src, dst, {}};
  r.hops.reserve(static_cast<std::size_t>(hops(src, dst)));
  Coord at = src;
  while (at != dst) {
    for (auto d : kClockwise) {
      const Coord next = step(at, d);
      if (hops(next, dst) < hops(at, dst)) {
        r.hops.push_back(d);
        at = next;
        break;
      }
    }
  }
  return r;
}

bool Placement::is_injective() const {
  std::set<Coord> seen(cells_.begin(), cells_.end());
  return seen.size() == cells_.size();
}

bool Placement::in_bounds(const Mesh& mesh) const {
  for (const auto& c : cells_) {
    if (!mesh.contains(c)) return false;
  }
  return true;
}

void Placement::validate(const Mesh& mesh, std::size_t nodes) const {
  if (nodes > static_cast<std::size_t>(mesh.size())) {
    throw ValidationError("mesh too small: " + std::to_string(nodes) + " logical cores on " +
                          std::to_string(mesh.size()) + " physical cores");
  }
  if (cells_.size() != nodes) {
    throw ValidationError("placement assigns " + std::to_string(cells_.size()) +
                          " nodes, graph has " + std::to_string(nodes));
  }
  for (std::size_t i = 0; i < cells_.size(); ++i) {
    if (!mesh.contains(cells_[i])) {
      throw ValidationError("node " + std::to_string(i) + " placed outside the mesh");
    }
  }
  if (!is_injective()) throw ValidationError("placement maps two nodes to one core");
}

namespace {

void require_placed(const TaskGraph& graph, const Placement& placement) {
  if (placement.size() < graph.size()) {
    throw ValidationError("node " + std::to_string(placement.size()) + " is not placed");
  }
}

}  // namespace

std::int64_t communication_cost(const TaskGraph& graph, const Placement& placement) {
  require_placed(graph, placement);
  std::int64_t cost = 0;
  for (const auto& e : graph.edges) {
    cost += e.bytes * hops(placement[e.src], placement[e.dst]);
  }
  return cost;
}

std::int64_t& DirectionalLoad::operator[](Direction d) {
  switch (d) {
    case Direction::kNorth: return up;
    case Direction::kEast: return right;
    case Direction::kSouth: return down;
    case Direction::kWest: return left;
  }
  return up;
}

std::vector<DirectionalLoad> directional_loads(const TaskGraph& graph, const Placement& placement,
                                               const Mesh& mesh) {
  require_placed(graph, placement);
  std::vector<DirectionalLoad> loads(static_cast<std::size_t>(mesh.size()));
  for (const auto& e : graph.edges) {
    const auto r = route(mesh, placement[e.src], placement[e.dst]);
    Coord at = r.src;
    for (auto d : r.hops) {
      loads[static_cast<std::size_t>(mesh.index(at))][d] += e.bytes;
      at = step(at, d);
    }
  }
  return loads;
}

HopHistogram hop_histogram(const TaskGraph& graph, const Placement& placement) {
  require_placed(graph, placement);
  HopHistogram h;
  std::int64_t total_hops = 0;
  std::int64_t weighted = 0;
  std::int64_t bytes = 0;
  for (const auto& e : graph.edges) {
    const int d = hops(placement[e.src], placement[e.dst]);
    ++h.edges_per_hop[d];
    total_hops += d;
    weighted += e.bytes * d;
    bytes += e.bytes;
  }
  if (!graph.edges.empty()) {
    h.mean_hops = static_cast<double>(total_hops) / static_cast<double>(graph.edges.size());
  }
  if (bytes > 0) h.mean_hops_weighted = static_cast<double>(weighted) / static_cast<double>(bytes);
  return h;
}

std::vector<std::int64_t> forwarded_bytes(std::span<const DirectionalLoad> loads) {
  std::vector<std::int64_t> out;
  out.reserve(loads.size());
  for (const auto& l : loads) out.push_back(l.total());
  return out;
}

std::string heatmap_csv(const Mesh& mesh, std::span<const std::int64_t> per_core) {
  if (per_core.size() != static_cast<std::size_t>(mesh.size())) {
    throw InternalError("heatmap size does not match mesh");
  }
  std::ostringstream out;
  for (int y = 0; y < mesh.height(); ++y) {
    for (int x = 0; x < mesh.width(); ++x) {
      if (x > 0) out << ',';
      out << per_core[static_cast<std::size_t>(mesh.index({x, y}))];
    }
    out << '\n';
  }
  return out.str();
}

}  // namespace coreplace
