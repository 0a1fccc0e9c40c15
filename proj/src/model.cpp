#include "coreplace/model.hpp"

#include <algorithm>

#include <cmath>
#include <unordered_map>

#include "coreplace/errors.hpp"

namespace coreplace {

std::string_view to_string(Mode mode) {
  return mode == Mode::kTraining ? "training" : "inference";
}

Mode parse_mode(std::string_view text) {
  if (text == "inference") return Mode::kInference;
  if (text == "training") return Mode::kTraining;
  throw ValidationError("unknown mode '" + std::string(text) + "' (expected inference|training)");
}

std::string_view to_string(LayerKind kind) { return kind == LayerKind::kFc ? "fc" : "conv"; }

std::int64_t HardwareProfile::weight_capacity() const {
  return static_cast<std::int64_t>(std::floor(static_cast<double>(sram_bytes_per_core) *
                                              (1.0 - activation_reserve)));
}

void HardwareProfile::validate() const {
  if (macs_per_core <= 0 || sram_bytes_per_core <= 0 || link_bandwidth <= 0 ||
      offchip_bandwidth <= 0) {
    throw ValidationError("hardware profile: all sizes and bandwidths must be > 0");
  }
  auto side = static_cast<std::int64_t>(std::llround(std::sqrt(static_cast<double>(macs_per_core))));
  if (side * side != macs_per_core) {
    throw ValidationError("hardware profile: macs_per_core must be a perfect square, got " +
                          std::to_string(macs_per_core));
  }
  if (!(activation_reserve >= 0.0 && activation_reserve < 1.0)) {
    throw ValidationError("hardware profile: activation_reserve must be in [0,1)");
  }
}

std::int64_t LayerSpec::weight_bytes() const {
  return in_channels * out_channels * kernel_h * kernel_w * 2;
}

void LayerSpec::validate() const {
  auto positive = [&](std::int64_t v, const char* name) {
    if (v < 1) {
      throw ValidationError("layer '" + id + "': " + name + " must be >= 1, got " +
                            std::to_string(v));
    }
  };
  if (id.empty()) throw ValidationError("layer with empty id");
  positive(in_channels, "in_channels");
  positive(out_channels, "out_channels");
  positive(kernel_h, "kernel_h");
  positive(kernel_w, "kernel_w");
  positive(out_h, "out_h");
  positive(out_w, "out_w");
  positive(timesteps, "timesteps");
}

std::int64_t spike_bytes(const LayerSpec& layer, std::int64_t channels) {
  const std::int64_t bits = channels * layer.out_h * layer.out_w;
  return (bits + 7) / 8;
}

std::int64_t fp16_bytes(const LayerSpec& layer, std::int64_t channels) {
  return channels * layer.out_h * layer.out_w * 2;
}

LayerCost estimate_layer_cost(const LayerSpec& layer, const HardwareProfile& hw, Mode mode) {
  layer.validate();
  hw.validate();
  LayerCost cost;
  cost.fp_ops = layer.timesteps * layer.out_channels * layer.in_channels * layer.kernel_h *
                layer.kernel_w * layer.out_h * layer.out_w;
  if (mode == Mode::kTraining) {
    // Transposed conv (BP) and outer product (WG) touch the same MACs.
    cost.bp_ops = cost.fp_ops;
    cost.wg_ops = cost.fp_ops;
  }
  cost.weight_bytes = layer.weight_bytes();
  cost.spike_bytes_per_step = spike_bytes(layer, layer.out_channels);
  cost.grad_bytes_per_step = fp16_bytes(layer, layer.out_channels);
  return cost;
}

namespace {

std::size_t lookup(const std::unordered_map<std::string, std::size_t>& index,
                   const LayerSpec& layer, const std::string& id, const char* what) {
  auto it = index.find(id);
  if (it == index.end()) {
    throw ValidationError("layer '" + layer.id + "': " + what + " '" + id +
                          "' is not an earlier layer");
  }
  return it->second;
}

void push_unique(std::vector<std::size_t>& list, std::size_t p, const LayerSpec& layer,
                 const std::string& id) {
  if (std::find(list.begin(), list.end(), p) != list.end()) {
    throw ValidationError("layer '" + layer.id + "': duplicate producer '" + id + "'");
  }
  list.push_back(p);
}

}  // namespace

ProducerLists resolve_producers(std::span<const LayerSpec> layers) {
  std::unordered_map<std::string, std::size_t> index;
  ProducerLists result;
  result.inputs.resize(layers.size());
  result.residual.resize(layers.size());
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const auto& layer = layers[i];
    if (layer.inputs.empty()) {
      if (i > 0) result.inputs[i].push_back(i - 1);
    } else {
      for (const auto& in : layer.inputs) {
        push_unique(result.inputs[i], lookup(index, layer, in, "input"), layer, in);
      }
    }
    for (const auto& r : layer.residual) {
      push_unique(result.residual[i], lookup(index, layer, r, "residual"), layer, r);
    }
    if (!index.emplace(layer.id, i).second) {
      throw ValidationError("duplicate layer id '" + layer.id + "'");
    }
  }
  return result;
}

std::vector<std::vector<std::size_t>> resolve_inputs(std::span<const LayerSpec> layers) {
  return resolve_producers(layers).inputs;
}

void validate_model(std::span<const LayerSpec> layers) {
  if (layers.empty()) throw ValidationError("model has no layers");
  for (const auto& layer : layers) layer.validate();
  const auto producers = resolve_producers(layers);
  for (std::size_t i = 0; i < layers.size(); ++i) {
    for (auto p : producers.inputs[i]) {
      if (layers[p].out_channels != layers[i].in_channels) {
        throw ValidationError("layer '" + layers[i].id + "': in_channels " +
                              std::to_string(layers[i].in_channels) + " does not match producer '" +
                              layers[p].id + "' out_channels " +
                              std::to_string(layers[p].out_channels));
      }
    }
    for (auto p : producers.residual[i]) {
      const auto& r = layers[p];
      if (r.out_channels != layers[i].out_channels || r.out_h != layers[i].out_h ||
          r.out_w != layers[i].out_w) {
        throw ValidationError("layer '" + layers[i].id + "': residual '" + r.id +
                              "' output shape does not match the layer output");
      }
    }
  }
}

}  // namespace coreplace
