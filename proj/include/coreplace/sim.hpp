#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "coreplace/mesh.hpp"
#include "coreplace/taskgraph.hpp"

namespace coreplace {

enum class Pipeline {
  kLayerwise,  // a node starts a sample once all its inputs have arrived
  kFpDeep,     // a node starts on each input fraction as it arrives
};

std::string_view to_string(Pipeline pipeline);
Pipeline parse_pipeline(std::string_view text);

struct SimConfig {
  std::int64_t link_bandwidth = 16;  // bytes/cycle
  Pipeline pipeline = Pipeline::kLayerwise;
  // Defaults to the graph's mode. An inference run of a training graph
  // ignores the backward edges and BP/WG work.
  std::optional<Mode> mode;
  std::int64_t batch_size = 8;
  double tile_fraction = 1.0 / 16.0;  // fpdeep granularity
  std::int64_t packet_bytes = 64;
  double clock_mhz = 1000.0;  // only used to report samples per second

  /// Work tiles per sample: 1 for layerwise, ceil(1/f) for fpdeep.
  std::int64_t tiles() const;
  void validate() const;
};

using Interval = std::pair<std::int64_t, std::int64_t>;  // [begin, end)

struct SimResult {
  Mode mode = Mode::kInference;
  Pipeline pipeline = Pipeline::kLayerwise;
  std::int64_t batch_size = 0;
  int cores = 0;                      // W*H
  std::int64_t makespan = 0;          // cycles
  double throughput = 0.0;            // samples per kilocycle
  double samples_per_second = 0.0;
  std::vector<std::int64_t> node_finish;           // last busy cycle per node
  std::vector<std::vector<Interval>> busy;         // merged busy intervals per node
  std::vector<DirectionalLoad> link_bytes;         // per core, per sample
  std::vector<std::int64_t> forwarded;             // per core, per sample
  std::vector<std::array<std::int64_t, 4>> peak_queue;  // per core, per port (N,E,S,W)
  std::int64_t packets = 0;
  std::int64_t bytes_injected = 0;
  std::int64_t bytes_delivered = 0;

  std::int64_t busy_cycles() const;
  /// Busy core-cycles over cores * makespan.
  double mean_utilization() const;
  std::int64_t max_forwarded() const;
};

/// Packet-level discrete-event simulation of one batch.
///
/// Every node has a forward engine and, in training, a backward engine that
/// also does the weight-gradient work; the core counts as busy while either
/// runs. Each engine processes (sample, tile) tasks in order. A tile may
/// start once the matching fraction of each inbound edge has arrived (the
/// backward engine also waits for the node's forward pass of that sample);
/// when it finishes, the node emits the same fraction of each outbound edge.
/// Chunks are cut into packets of at most packet_bytes that travel the
/// edge's route store-and-forward, ceil(bytes / bandwidth) cycles per hop.
/// Each output port serves its queue in (enqueue time, source node, packet
/// sequence) order.
SimResult simulate(const TaskGraph& graph, const Placement& placement, const Mesh& mesh,
                   const SimConfig& config);

struct UtilizationPoint {
  std::int64_t t = 0;  // bucket start
  double busy_fraction = 0.0;
};

/// Fraction of the mesh's cores busy in each bucket. The last bucket is
/// normalized by its clipped width.
std::vector<UtilizationPoint> utilization_waveform(const SimResult& result, std::int64_t bucket);

std::string waveform_csv(std::span<const UtilizationPoint> waveform);

}  // namespace coreplace
