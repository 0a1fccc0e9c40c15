#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "coreplace/model.hpp"
#include "coreplace/partition.hpp"

namespace coreplace {

using NodeId = std::uint32_t;

enum class EdgeKind {
  kForward,   // spikes (and partial sums) flowing toward the output
  kBackward,  // FP16 gradients flowing back in training mode
};

std::string_view to_string(EdgeKind kind);
EdgeKind parse_edge_kind(std::string_view text);

struct TaskEdge {
  NodeId src = 0;
  NodeId dst = 0;
  std::int64_t bytes = 0;
  EdgeKind kind = EdgeKind::kForward;

  bool operator==(const TaskEdge&) const = default;
};

struct TaskNode {
  NodeId id = 0;
  bool multicast = false;
  std::int64_t degree_in = 0;
  std::int64_t degree_out = 0;
  std::int64_t bytes_in = 0;
  std::int64_t bytes_out = 0;
  std::int64_t compute_cycles = 0;
  std::int64_t fp_cycles = 0;  // forward-engine share of compute_cycles
  std::optional<SliceSpec> slice;

  bool operator==(const TaskNode&) const = default;
};

/// Weighted DAG of logical cores. Node ids are 0..n-1 in order.
struct TaskGraph {
  Mode mode = Mode::kInference;
  std::vector<TaskNode> nodes;
  std::vector<TaskEdge> edges;
  std::optional<HardwareProfile> hardware;

  std::size_t size() const { return nodes.size(); }

  /// Throws ValidationError when ids are not 0..n-1, an edge is a
  /// self-edge or dangles, bytes are non-positive, the forward edges contain
  /// a cycle, or node features disagree with the edges.
  void validate() const;

  bool operator==(const TaskGraph&) const = default;
};

/// Rewrites degree, volume and multicast fields from the edge list.
void recompute_features(TaskGraph& graph);

/// Convenience constructor used by tests and tools: nodes with the given
/// compute cycles, features derived from `edges`.
TaskGraph make_graph(Mode mode, std::span<const std::int64_t> compute_cycles,
                     std::vector<TaskEdge> edges);

/// Expands slices into the task DAG.
///
/// Every slice emitting part of layer p sends its packed spikes to every
/// slice consuming p (T timesteps, restricted to the consumer's input
/// channel range). C-split slices send FP16 partial sums to the K block's
/// lead slice. Training mode mirrors every forward edge with an FP16
/// gradient edge in the opposite direction. Traffic between layers that
/// share a slice stays local and produces no edge.
TaskGraph build_taskgraph(std::span<const SliceSpec> slices, std::span<const LayerSpec> layers,
                          const HardwareProfile& hw, Mode mode);

std::int64_t total_edge_bytes(const TaskGraph& graph);

}  // namespace coreplace
