#pragma once

#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "coreplace/model.hpp"

namespace coreplace {

/// Half-open channel interval [begin, end).
struct ChannelRange {
  std::int64_t begin = 0;
  std::int64_t end = 0;

  std::int64_t size() const { return end - begin; }
  bool operator==(const ChannelRange&) const = default;
};

/// A (C, K) channel block of one layer.
struct LayerBlock {
  std::size_t layer_index = 0;
  ChannelRange c_range;
  ChannelRange k_range;

  bool operator==(const LayerBlock&) const = default;
};

/// One logical core. The primary block is its largest piece of work; a core
/// may also host blocks of neighbouring layers (`colocated`).
struct SliceSpec {
  std::size_t layer_index = 0;
  ChannelRange c_range;
  ChannelRange k_range;
  std::int64_t fp_ops = 0;
  std::int64_t bp_ops = 0;
  std::int64_t wg_ops = 0;
  std::int64_t resident_weight_bytes = 0;
  std::int64_t overflow_weight_bytes = 0;
  std::int64_t est_latency_cycles = 0;
  std::vector<LayerBlock> colocated;

  std::int64_t total_ops() const { return fp_ops + bp_ops + wg_ops; }
  std::int64_t weight_bytes() const { return resident_weight_bytes + overflow_weight_bytes; }
  /// Primary block first, then the colocated ones.
  std::vector<LayerBlock> blocks() const;
  bool operator==(const SliceSpec&) const = default;
};

enum class PartitionStrategy {
  // Cut the layer-ordered sequence of output channels into n contiguous
  // runs of near-equal latency. A core may end one layer and start the next.
  kContiguous,
  // Whole cores per layer, in proportion to layer latency.
  kPerLayer,
};

std::string_view to_string(PartitionStrategy strategy);
PartitionStrategy parse_partition_strategy(std::string_view text);

struct PartitionOptions {
  PartitionStrategy strategy = PartitionStrategy::kContiguous;
  // kPerLayer only: layers whose proportional share rounds to zero cores are
  // co-located with a neighbouring slice instead of occupying a core.
  bool fuse_small_layers = true;
};

/// ceil(ops / macs) + ceil(overflow / offchip_bandwidth).
std::int64_t slice_latency(std::int64_t total_ops, std::int64_t overflow_bytes,
                           const HardwareProfile& hw);

/// Recomputes resident/overflow bytes and est_latency_cycles from the op and
/// weight fields.
void finalize_slice(SliceSpec& slice, const HardwareProfile& hw);

/// A single channel block of `layer` as a standalone slice.
SliceSpec make_slice(std::size_t layer_index, const LayerSpec& layer, ChannelRange c,
                     ChannelRange k, const HardwareProfile& hw, Mode mode);

/// Channel blocks for `parts` slices of one layer. K is split into
/// contiguous ranges whose sizes differ by at most one channel; when
/// parts > K, each output channel is additionally split along C.
std::vector<std::pair<ChannelRange, ChannelRange>> split_layer(const LayerSpec& layer,
                                                               std::int64_t parts);

/// Compute+storage balanced partitioning into exactly `n_cores` slices.
/// kContiguous falls back to kPerLayer when n_cores exceeds the total
/// number of output channels.
std::vector<SliceSpec> partition_model(std::span<const LayerSpec> layers,
                                       const HardwareProfile& hw, std::int64_t n_cores,
                                       Mode mode, const PartitionOptions& options = {});

/// Reference scheme: slices per layer proportional to weight bytes, equal K
/// splits. Used as the comparison point for balance.
std::vector<SliceSpec> partition_uniform_weights(std::span<const LayerSpec> layers,
                                                 const HardwareProfile& hw,
                                                 std::int64_t n_cores, Mode mode);

/// max/min est_latency_cycles over slices.
double latency_imbalance(std::span<const SliceSpec> slices);

}  // namespace coreplace
