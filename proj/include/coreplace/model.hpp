#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace coreplace {

enum class Mode { kInference, kTraining };

std::string_view to_string(Mode mode);
Mode parse_mode(std::string_view text);

/// Per-core resources of the near-memory many-core chip.
///
/// Each core holds a square MAC array (16x16 by default) that retires one
/// MAC per array element per cycle. The SRAM and bandwidth figures are
/// configurable defaults; every output file records the values used.
struct HardwareProfile {
  std::int64_t macs_per_core = 256;
  std::int64_t sram_bytes_per_core = 256 * 1024;
  std::int64_t link_bandwidth = 16;     // bytes/cycle per mesh link
  std::int64_t offchip_bandwidth = 8;   // bytes/cycle for overflow weights
  double activation_reserve = 0.25;     // fraction of SRAM kept for activations

  /// SRAM bytes available for resident weights.
  std::int64_t weight_capacity() const;
  void validate() const;

  bool operator==(const HardwareProfile&) const = default;
};

enum class LayerKind { kConv, kFc };

std::string_view to_string(LayerKind kind);

struct LayerSpec {
  std::string id;
  LayerKind kind = LayerKind::kConv;
  std::int64_t in_channels = 1;
  std::int64_t out_channels = 1;
  std::int64_t kernel_h = 1;
  std::int64_t kernel_w = 1;
  std::int64_t out_h = 1;
  std::int64_t out_w = 1;
  std::int64_t timesteps = 4;
  // Producer layer ids. Empty means "the previous layer in the list" (none
  // for the first layer).
  std::vector<std::string> inputs;
  // Layers whose output is added to this layer's output (skip connections).
  // Shapes must match the output; the add happens where the output channels
  // are finished.
  std::vector<std::string> residual;

  /// FP16 weights: C*K*kh*kw*2.
  std::int64_t weight_bytes() const;
  void validate() const;

  bool operator==(const LayerSpec&) const = default;
};

struct LayerCost {
  std::int64_t fp_ops = 0;
  std::int64_t bp_ops = 0;
  std::int64_t wg_ops = 0;
  std::int64_t weight_bytes = 0;
  std::int64_t spike_bytes_per_step = 0;  // packed 1 bit per output element
  std::int64_t grad_bytes_per_step = 0;   // FP16 output gradient

  std::int64_t total_ops() const { return fp_ops + bp_ops + wg_ops; }
  bool operator==(const LayerCost&) const = default;
};

/// MAC counts and byte footprints of one layer. In inference mode only the
/// forward engine does work, so bp_ops and wg_ops are zero.
LayerCost estimate_layer_cost(const LayerSpec& layer, const HardwareProfile& hw, Mode mode);

/// Packed spike bytes for `channels` output channels of `layer`, one timestep.
std::int64_t spike_bytes(const LayerSpec& layer, std::int64_t channels);
/// FP16 gradient (or partial-sum) bytes for `channels` channels, one timestep.
std::int64_t fp16_bytes(const LayerSpec& layer, std::int64_t channels);

/// Checks ids are unique, inputs refer to earlier layers (the list is a
/// topological order), producer channel counts match consumers and residual
/// shapes match the layer output.
void validate_model(std::span<const LayerSpec> layers);

struct ProducerLists {
  std::vector<std::vector<std::size_t>> inputs;
  std::vector<std::vector<std::size_t>> residual;
};

/// Producer indices of each layer, resolved from ids.
ProducerLists resolve_producers(std::span<const LayerSpec> layers);
std::vector<std::vector<std::size_t>> resolve_inputs(std::span<const LayerSpec> layers);

}  // namespace coreplace
