#pragma once

#include <compare>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "coreplace/taskgraph.hpp"

namespace coreplace {

/// Grid coordinate. Origin top-left, +x east, +y south.
struct Coord {
  int x = 0;
  int y = 0;

  auto operator<=>(const Coord&) const = default;
};

/// Mesh ports in clockwise order starting due north.
enum class Direction : std::uint8_t { kNorth = 0, kEast = 1, kSouth = 2, kWest = 3 };

inline constexpr Direction kClockwise[] = {Direction::kNorth, Direction::kEast, Direction::kSouth,
                                           Direction::kWest};

char to_char(Direction d);
Coord step(Coord c, Direction d);

class Mesh {
 public:
  Mesh(int width, int height);

  int width() const { return width_; }
  int height() const { return height_; }
  int size() const { return width_ * height_; }

  bool contains(Coord c) const { return c.x >= 0 && c.y >= 0 && c.x < width_ && c.y < height_; }
  int index(Coord c) const { return c.y * width_ + c.x; }
  Coord coord(int index) const { return {index % width_, index / width_}; }

  bool operator==(const Mesh&) const = default;

 private:
  int width_;
  int height_;
};

/// Parses "WxH" (e.g. "4x8").
Mesh parse_mesh(const std::string& text);

struct Route {
  Coord src;
  Coord dst;
  std::vector<Direction> hops;

  /// Cores visited, src first, dst last.
  std::vector<Coord> cores() const;
};

/// Deterministic minimal route: at every router take the first productive
/// direction in clockwise order N, E, S, W.
Route route(const Mesh& mesh, Coord src, Coord dst);

/// Manhattan distance.
int hops(Coord a, Coord b);

/// Node-id -> core assignment; index is the node id.
class Placement {
 public:
  Placement() = default;
  explicit Placement(std::vector<Coord> cells) : cells_(std::move(cells)) {}

  std::size_t size() const { return cells_.size(); }
  const Coord& operator[](std::size_t node) const { return cells_[node]; }
  Coord& operator[](std::size_t node) { return cells_[node]; }
  std::span<const Coord> cells() const { return cells_; }

  bool is_injective() const;
  bool in_bounds(const Mesh& mesh) const;
  /// Throws ValidationError unless the placement covers exactly `nodes`
  /// nodes, injectively, inside `mesh`.
  void validate(const Mesh& mesh, std::size_t nodes) const;

  bool operator==(const Placement&) const = default;

 private:
  std::vector<Coord> cells_;
};

/// Sum over edges of bytes x hops between the endpoints' cores.
std::int64_t communication_cost(const TaskGraph& graph, const Placement& placement);

/// Outgoing bytes through each mesh port of one core.
struct DirectionalLoad {
  std::int64_t left = 0;
  std::int64_t right = 0;
  std::int64_t up = 0;
  std::int64_t down = 0;

  std::int64_t total() const { return left + right + up + down; }
  std::int64_t& operator[](Direction d);
  bool operator==(const DirectionalLoad&) const = default;
};

/// Per-core loads, indexed by Mesh::index. Each link traversal charges the
/// edge's bytes to the sending core once.
std::vector<DirectionalLoad> directional_loads(const TaskGraph& graph, const Placement& placement,
                                               const Mesh& mesh);

struct HopHistogram {
  std::map<int, std::int64_t> edges_per_hop;
  double mean_hops = 0.0;          // per edge
  double mean_hops_weighted = 0.0;  // per byte
};

HopHistogram hop_histogram(const TaskGraph& graph, const Placement& placement);

/// One row per y, each cell the total bytes forwarded by that core.
std::string heatmap_csv(const Mesh& mesh, std::span<const std::int64_t> per_core);
std::vector<std::int64_t> forwarded_bytes(std::span<const DirectionalLoad> loads);

}  // namespace coreplace
