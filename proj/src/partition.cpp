#include "coreplace/partition.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>

#include "coreplace/errors.hpp"

namespace coreplace {
namespace {

std::vector<ChannelRange> even_ranges(std::int64_t total, std::int64_t parts) {
  std::vector<ChannelRange> ranges;
  ranges.reserve(static_cast<std::size_t>(parts));
  const std::int64_t base = total / parts;
  const std::int64_t extra = total % parts;
  std::int64_t begin = 0;
  for (std::int64_t i = 0; i < parts; ++i) {
    const std::int64_t size = base + (i < extra ? 1 : 0);
    ranges.push_back({begin, begin + size});
    begin += size;
  }
  return ranges;
}

std::int64_t max_parts(const LayerSpec& layer) { return layer.in_channels * layer.out_channels; }

/// Worst slice latency when `layer` is cut into `parts` slices.
std::int64_t layer_latency(const LayerSpec& layer, std::int64_t parts, const HardwareProfile& hw,
                           Mode mode) {
  std::int64_t worst = 0;
  for (const auto& [c, k] : split_layer(layer, parts)) {
    worst = std::max(worst, make_slice(0, layer, c, k, hw, mode).est_latency_cycles);
  }
  return worst;
}

class Allocator {
 public:
  Allocator(std::span<const LayerSpec> layers, const HardwareProfile& hw, Mode mode)
      : layers_(layers), hw_(hw), mode_(mode), cache_(layers.size()) {}

  std::int64_t latency(std::size_t l, std::int64_t parts) {
    auto& row = cache_[l];
    if (row.size() <= static_cast<std::size_t>(parts)) row.resize(parts + 1, -1);
    if (row[parts] < 0) row[parts] = layer_latency(layers_[l], parts, hw_, mode_);
    return row[parts];
  }

 private:
  std::span<const LayerSpec> layers_;
  const HardwareProfile& hw_;
  Mode mode_;
  std::vector<std::vector<std::int64_t>> cache_;
};

void check_capacity(std::span<const LayerSpec> layers, std::int64_t n_cores) {
  std::int64_t capacity = 0;
  for (const auto& layer : layers) capacity += max_parts(layer);
  if (n_cores > capacity) {
    throw ValidationError("infeasible partition: " + std::to_string(n_cores) +
                          " cores exceed the number of channel blocks (" +
                          std::to_string(capacity) + ")");
  }
}

std::vector<SliceSpec> materialize(std::span<const LayerSpec> layers,
                                   const std::vector<std::int64_t>& alloc,
                                   const HardwareProfile& hw, Mode mode) {
  std::vector<SliceSpec> slices;
  for (std::size_t l = 0; l < layers.size(); ++l) {
    if (alloc[l] == 0) continue;
    for (const auto& [c, k] : split_layer(layers[l], alloc[l])) {
      slices.push_back(make_slice(l, layers[l], c, k, hw, mode));
    }
  }
  return slices;
}

void attach(SliceSpec& host, std::size_t layer_index, const LayerSpec& layer,
            const HardwareProfile& hw, Mode mode) {
  const auto cost = estimate_layer_cost(layer, hw, mode);
  host.fp_ops += cost.fp_ops;
  host.bp_ops += cost.bp_ops;
  host.wg_ops += cost.wg_ops;
  host.resident_weight_bytes += cost.weight_bytes;
  host.colocated.push_back(
      {layer_index, ChannelRange{0, layer.in_channels}, ChannelRange{0, layer.out_channels}});
  finalize_slice(host, hw);
}

// Fused layers go to a slice of their latest producer, or, when they have
// none, of their earliest consumer. Either choice keeps the slice graph
// acyclic because the layer list is a topological order.
void fuse_small_layers(std::span<const LayerSpec> layers, const std::vector<std::int64_t>& alloc,
                       std::vector<SliceSpec>& slices, const HardwareProfile& hw, Mode mode) {
  const auto inputs = resolve_inputs(layers);
  const std::size_t n_layers = layers.size();
  std::vector<std::vector<std::size_t>> consumers(n_layers);
  for (std::size_t l = 0; l < n_layers; ++l) {
    for (auto p : inputs[l]) consumers[p].push_back(l);
  }
  std::vector<std::vector<std::size_t>> owned(n_layers);
  for (std::size_t s = 0; s < slices.size(); ++s) owned[slices[s].layer_index].push_back(s);
  std::vector<std::optional<std::size_t>> host(n_layers);

  auto candidates = [&](std::size_t l) -> std::vector<std::size_t> {
    if (alloc[l] > 0) return owned[l];
    if (host[l]) return {*host[l]};
    return {};
  };
  auto place = [&](std::size_t f, const std::vector<std::size_t>& cands) {
    std::size_t best = cands.front();
    for (auto s : cands) {
      if (slices[s].est_latency_cycles < slices[best].est_latency_cycles) best = s;
    }
    attach(slices[best], f, layers[f], hw, mode);
    host[f] = best;
  };

  std::vector<std::size_t> deferred;
  for (std::size_t f = 0; f < n_layers; ++f) {
    if (alloc[f] > 0) continue;
    std::vector<std::size_t> cands;
    if (!inputs[f].empty()) {
      cands = candidates(*std::max_element(inputs[f].begin(), inputs[f].end()));
    }
    if (cands.empty()) {
      deferred.push_back(f);
    } else {
      place(f, cands);
    }
  }
  for (auto it = deferred.rbegin(); it != deferred.rend(); ++it) {
    const std::size_t f = *it;
    std::vector<std::size_t> cands;
    for (auto c : consumers[f]) {  // ascending order
      cands = candidates(c);
      if (!cands.empty()) break;
    }
    if (cands.empty()) {
      cands.resize(slices.size());
      for (std::size_t s = 0; s < slices.size(); ++s) cands[s] = s;
    }
    place(f, cands);
  }
}

}  // namespace

std::int64_t slice_latency(std::int64_t total_ops, std::int64_t overflow_bytes,
                           const HardwareProfile& hw) {
  const std::int64_t compute = (total_ops + hw.macs_per_core - 1) / hw.macs_per_core;
  const std::int64_t transfer = (overflow_bytes + hw.offchip_bandwidth - 1) / hw.offchip_bandwidth;
  return compute + transfer;
}

void finalize_slice(SliceSpec& slice, const HardwareProfile& hw) {
  const std::int64_t weights = slice.weight_bytes();
  slice.resident_weight_bytes = std::min(weights, hw.weight_capacity());
  slice.overflow_weight_bytes = weights - slice.resident_weight_bytes;
  slice.est_latency_cycles = slice_latency(slice.total_ops(), slice.overflow_weight_bytes, hw);
}

SliceSpec make_slice(std::size_t layer_index, const LayerSpec& layer, ChannelRange c,
                     ChannelRange k, const HardwareProfile& hw, Mode mode) {
  SliceSpec slice;
  slice.layer_index = layer_index;
  slice.c_range = c;
  slice.k_range = k;
  slice.fp_ops = layer.timesteps * k.size() * c.size() * layer.kernel_h * layer.kernel_w *
                 layer.out_h * layer.out_w;
  if (mode == Mode::kTraining) {
    slice.bp_ops = slice.fp_ops;
    slice.wg_ops = slice.fp_ops;
  }
  slice.resident_weight_bytes = k.size() * c.size() * layer.kernel_h * layer.kernel_w * 2;
  finalize_slice(slice, hw);
  return slice;
}

std::vector<std::pair<ChannelRange, ChannelRange>> split_layer(const LayerSpec& layer,
                                                               std::int64_t parts) {
  if (parts < 1 || parts > max_parts(layer)) {
    throw ValidationError("layer '" + layer.id + "' cannot be split into " +
                          std::to_string(parts) + " slices");
  }
  std::vector<std::pair<ChannelRange, ChannelRange>> out;
  const ChannelRange full_c{0, layer.in_channels};
  if (parts <= layer.out_channels) {
    for (const auto& k : even_ranges(layer.out_channels, parts)) out.emplace_back(full_c, k);
    return out;
  }
  // One output channel per K block is still above target: spread the
  // remaining slices over C, most heavily split channels first.
  const std::int64_t per = parts / layer.out_channels;
  const std::int64_t extra = parts % layer.out_channels;
  for (std::int64_t k = 0; k < layer.out_channels; ++k) {
    const std::int64_t pieces = per + (k < extra ? 1 : 0);
    for (const auto& c : even_ranges(layer.in_channels, pieces)) {
      out.emplace_back(c, ChannelRange{k, k + 1});
    }
  }
  return out;
}

namespace {

std::vector<SliceSpec> partition_per_layer(std::span<const LayerSpec> layers,
                                           const HardwareProfile& hw, std::int64_t n_cores,
                                           Mode mode, const PartitionOptions& options) {
  const std::size_t n_layers = layers.size();
  if (!options.fuse_small_layers && n_cores < static_cast<std::int64_t>(n_layers)) {
    throw ValidationError("infeasible partition: " + std::to_string(n_cores) +
                          " cores for " + std::to_string(n_layers) + " layers");
  }
  check_capacity(layers, n_cores);

  Allocator lat(layers, hw, mode);
  std::vector<std::int64_t> total(n_layers);
  double sum = 0.0;
  for (std::size_t l = 0; l < n_layers; ++l) {
    total[l] = lat.latency(l, 1);
    sum += static_cast<double>(total[l]);
  }

  std::vector<std::int64_t> alloc(n_layers);
  for (std::size_t l = 0; l < n_layers; ++l) {
    auto share = static_cast<std::int64_t>(
        std::llround(static_cast<double>(n_cores) * static_cast<double>(total[l]) / sum));
    if (!options.fuse_small_layers) share = std::max<std::int64_t>(share, 1);
    alloc[l] = std::min(share, max_parts(layers[l]));
  }
  const auto heaviest = static_cast<std::size_t>(
      std::max_element(total.begin(), total.end()) - total.begin());
  alloc[heaviest] = std::max<std::int64_t>(alloc[heaviest], 1);

  auto allocated = [&] {
    std::int64_t s = 0;
    for (auto a : alloc) s += a;
    return s;
  };

  // Repair the rounded sum.
  while (allocated() < n_cores) {
    std::optional<std::size_t> pick;
    for (std::size_t l = 0; l < n_layers; ++l) {
      if (alloc[l] == 0 || alloc[l] >= max_parts(layers[l])) continue;
      if (!pick || lat.latency(l, alloc[l]) > lat.latency(*pick, alloc[*pick])) pick = l;
    }
    if (!pick) {
      for (std::size_t l = 0; l < n_layers; ++l) {
        if (alloc[l] == 0 && (!pick || total[l] > total[*pick])) pick = l;
      }
    }
    if (!pick) throw InternalError("partition repair found no layer to grow");
    ++alloc[*pick];
  }
  while (allocated() > n_cores) {
    std::optional<std::size_t> pick;
    for (std::size_t l = 0; l < n_layers; ++l) {
      if (alloc[l] < 2) continue;
      if (!pick || lat.latency(l, alloc[l]) < lat.latency(*pick, alloc[*pick])) pick = l;
    }
    if (!pick) {
      // Only possible with fusion: every layer holds one core.
      for (std::size_t l = 0; l < n_layers; ++l) {
        if (alloc[l] == 1 && l != heaviest && (!pick || total[l] < total[*pick])) pick = l;
      }
    }
    if (!pick) throw InternalError("partition repair found no layer to shrink");
    --alloc[*pick];
  }

  // Min-max refinement: move one slice from the layer that can best afford
  // it to the slowest layer while that lowers the slowest slice.
  for (std::int64_t iter = 0; iter < n_cores * static_cast<std::int64_t>(n_layers) * 4; ++iter) {
    std::optional<std::size_t> worst;
    for (std::size_t l = 0; l < n_layers; ++l) {
      if (alloc[l] == 0) continue;
      if (!worst || lat.latency(l, alloc[l]) > lat.latency(*worst, alloc[*worst])) worst = l;
    }
    const std::size_t m = *worst;
    const std::int64_t current = lat.latency(m, alloc[m]);
    if (alloc[m] >= max_parts(layers[m]) || lat.latency(m, alloc[m] + 1) >= current) break;
    std::optional<std::size_t> donor;
    for (std::size_t l = 0; l < n_layers; ++l) {
      if (l == m || alloc[l] < 2) continue;
      if (!donor || lat.latency(l, alloc[l] - 1) < lat.latency(*donor, alloc[*donor] - 1)) {
        donor = l;
      }
    }
    if (!donor || lat.latency(*donor, alloc[*donor] - 1) >= current) break;
    --alloc[*donor];
    ++alloc[m];
  }

  auto slices = materialize(layers, alloc, hw, mode);
  if (options.fuse_small_layers) fuse_small_layers(layers, alloc, slices, hw, mode);
  return slices;
}

// Output channels of all layers in list order; unit u is one output channel
// (all of C) of some layer.
class UnitSequence {
 public:
  UnitSequence(std::span<const LayerSpec> layers, const HardwareProfile& hw, Mode mode)
      : layers_(layers), hw_(hw) {
    ops_.push_back(0);
    weights_.push_back(0);
    for (const auto& layer : layers) {
      start_.push_back(static_cast<std::int64_t>(ops_.size()) - 1);
      const auto cost = estimate_layer_cost(layer, hw, mode);
      const std::int64_t unit_ops = cost.total_ops() / layer.out_channels;
      const std::int64_t unit_weights = cost.weight_bytes / layer.out_channels;
      for (std::int64_t k = 0; k < layer.out_channels; ++k) {
        ops_.push_back(ops_.back() + unit_ops);
        weights_.push_back(weights_.back() + unit_weights);
      }
    }
    start_.push_back(size());
  }

  std::int64_t size() const { return static_cast<std::int64_t>(ops_.size()) - 1; }

  /// Latency of a core running units [p, q).
  std::int64_t latency(std::int64_t p, std::int64_t q) const {
    const auto ops = ops_[static_cast<std::size_t>(q)] - ops_[static_cast<std::size_t>(p)];
    const auto weights = weights_[static_cast<std::size_t>(q)] - weights_[static_cast<std::size_t>(p)];
    return slice_latency(ops, std::max<std::int64_t>(0, weights - hw_.weight_capacity()), hw_);
  }

  /// Smallest q in (p, size] with latency(p, q) >= bound, or size + 1.
  std::int64_t first_at_least(std::int64_t p, std::int64_t bound) const {
    std::int64_t lo = p + 1;
    std::int64_t hi = size() + 1;
    while (lo < hi) {
      const auto mid = lo + (hi - lo) / 2;
      if (latency(p, mid) >= bound) {
        hi = mid;
      } else {
        lo = mid + 1;
      }
    }
    return lo;
  }

  /// Largest q in [p, size] with latency(p, q) <= bound.
  std::int64_t last_at_most(std::int64_t p, std::int64_t bound) const {
    std::int64_t lo = p;
    std::int64_t hi = size();
    while (lo < hi) {
      const auto mid = hi - (hi - lo) / 2;
      if (latency(p, mid) <= bound) {
        lo = mid;
      } else {
        hi = mid - 1;
      }
    }
    return lo;
  }

  std::vector<LayerBlock> blocks(std::int64_t p, std::int64_t q) const {
    std::vector<LayerBlock> out;
    for (std::size_t l = 0; l < layers_.size(); ++l) {
      const auto begin = std::max(p, start_[l]);
      const auto end = std::min(q, start_[l + 1]);
      if (begin >= end) continue;
      out.push_back({l, ChannelRange{0, layers_[l].in_channels},
                     ChannelRange{begin - start_[l], end - start_[l]}});
    }
    return out;
  }

 private:
  std::span<const LayerSpec> layers_;
  const HardwareProfile& hw_;
  std::vector<std::int64_t> ops_;
  std::vector<std::int64_t> weights_;
  std::vector<std::int64_t> start_;
};

std::int64_t greedy_count(const UnitSequence& seq, std::int64_t cap) {
  std::int64_t count = 0;
  for (std::int64_t p = 0; p < seq.size(); ++count) {
    const auto q = seq.last_at_most(p, cap);
    if (q == p) return std::numeric_limits<std::int64_t>::max();
    p = q;
  }
  return count;
}

// Cuts with exactly n segments whose latencies lie in [lo, hi], or empty.
std::vector<std::int64_t> cuts_within(const UnitSequence& seq, std::int64_t n, std::int64_t lo,
                                      std::int64_t hi) {
  const auto u = seq.size();
  const auto width = static_cast<std::size_t>(u + 2);
  std::vector<std::int64_t> first(static_cast<std::size_t>(u)), last(static_cast<std::size_t>(u));
  for (std::int64_t p = 0; p < u; ++p) {
    first[static_cast<std::size_t>(p)] = seq.first_at_least(p, lo);
    last[static_cast<std::size_t>(p)] = seq.last_at_most(p, hi);
  }
  // reach[i][q]: units [0, q) can be cut into i valid segments.
  std::vector<std::vector<char>> reach(static_cast<std::size_t>(n + 1), std::vector<char>(width, 0));
  reach[0][0] = 1;
  std::vector<std::int64_t> diff(width + 1);
  for (std::int64_t i = 0; i < n; ++i) {
    std::fill(diff.begin(), diff.end(), 0);
    const auto& from = reach[static_cast<std::size_t>(i)];
    for (std::int64_t p = 0; p < u; ++p) {
      if (!from[static_cast<std::size_t>(p)]) continue;
      const auto a = first[static_cast<std::size_t>(p)];
      const auto b = last[static_cast<std::size_t>(p)];
      if (a > b) continue;
      ++diff[static_cast<std::size_t>(a)];
      --diff[static_cast<std::size_t>(b + 1)];
    }
    auto& to = reach[static_cast<std::size_t>(i + 1)];
    std::int64_t run = 0;
    for (std::size_t q = 0; q < width; ++q) {
      run += diff[q];
      to[q] = run > 0;
    }
  }
  if (!reach[static_cast<std::size_t>(n)][static_cast<std::size_t>(u)]) return {};
  std::vector<std::int64_t> cuts{u};
  std::int64_t q = u;
  for (std::int64_t i = n; i > 0; --i) {
    const auto& from = reach[static_cast<std::size_t>(i - 1)];
    std::int64_t pick = -1;
    for (std::int64_t p = 0; p < q; ++p) {
      if (from[static_cast<std::size_t>(p)] && first[static_cast<std::size_t>(p)] <= q &&
          q <= last[static_cast<std::size_t>(p)]) {
        pick = p;
        break;
      }
    }
    if (pick < 0) throw InternalError("contiguous partition backtrack failed");
    cuts.push_back(pick);
    q = pick;
  }
  std::reverse(cuts.begin(), cuts.end());
  return cuts;
}

std::vector<SliceSpec> partition_contiguous(std::span<const LayerSpec> layers,
                                            const HardwareProfile& hw, std::int64_t n_cores,
                                            Mode mode) {
  const UnitSequence seq(layers, hw, mode);
  // Smallest feasible maximum, then the largest minimum under that maximum.
  std::int64_t lo = 0;
  for (std::int64_t p = 0; p < seq.size(); ++p) lo = std::max(lo, seq.latency(p, p + 1));
  std::int64_t hi = seq.latency(0, seq.size());
  while (lo < hi) {
    const auto mid = lo + (hi - lo) / 2;
    if (greedy_count(seq, mid) <= n_cores) {
      hi = mid;
    } else {
      lo = mid + 1;
    }
  }
  const std::int64_t cap = lo;
  std::int64_t floor_lo = 0;
  std::int64_t floor_hi = cap;
  std::vector<std::int64_t> cuts = cuts_within(seq, n_cores, 0, cap);
  if (cuts.empty()) throw InternalError("contiguous partition found no cut under its own cap");
  while (floor_lo < floor_hi) {
    const auto mid = floor_hi - (floor_hi - floor_lo) / 2;
    auto found = cuts_within(seq, n_cores, mid, cap);
    if (found.empty()) {
      floor_hi = mid - 1;
    } else {
      floor_lo = mid;
      cuts = std::move(found);
    }
  }

  std::vector<SliceSpec> slices;
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    SliceSpec core;
    std::int64_t heaviest = -1;
    for (const auto& b : seq.blocks(cuts[i], cuts[i + 1])) {
      const auto part = make_slice(b.layer_index, layers[b.layer_index], b.c_range, b.k_range, hw, mode);
      core.fp_ops += part.fp_ops;
      core.bp_ops += part.bp_ops;
      core.wg_ops += part.wg_ops;
      core.resident_weight_bytes += part.weight_bytes();
      if (part.total_ops() > heaviest) {
        if (heaviest >= 0) {
          core.colocated.push_back({core.layer_index, core.c_range, core.k_range});
        }
        heaviest = part.total_ops();
        core.layer_index = b.layer_index;
        core.c_range = b.c_range;
        core.k_range = b.k_range;
      } else {
        core.colocated.push_back(b);
      }
    }
    std::sort(core.colocated.begin(), core.colocated.end(),
              [](const auto& a, const auto& b) { return a.layer_index < b.layer_index; });
    finalize_slice(core, hw);
    slices.push_back(std::move(core));
  }
  return slices;
}

}  // namespace

std::vector<LayerBlock> SliceSpec::blocks() const {
  std::vector<LayerBlock> out{{layer_index, c_range, k_range}};
  out.insert(out.end(), colocated.begin(), colocated.end());
  return out;
}

std::string_view to_string(PartitionStrategy strategy) {
  return strategy == PartitionStrategy::kPerLayer ? "per-layer" : "contiguous";
}

PartitionStrategy parse_partition_strategy(std::string_view text) {
  if (text == "contiguous") return PartitionStrategy::kContiguous;
  if (text == "per-layer") return PartitionStrategy::kPerLayer;
  throw ValidationError("unknown partition strategy '" + std::string(text) +
                        "' (expected contiguous|per-layer)");
}

std::vector<SliceSpec> partition_model(std::span<const LayerSpec> layers,
                                       const HardwareProfile& hw, std::int64_t n_cores,
                                       Mode mode, const PartitionOptions& options) {
  validate_model(layers);
  hw.validate();
  if (n_cores < 1) throw ValidationError("n_cores must be >= 1");
  std::int64_t channels = 0;
  for (const auto& layer : layers) channels += layer.out_channels;
  auto slices = options.strategy == PartitionStrategy::kContiguous && n_cores <= channels
                    ? partition_contiguous(layers, hw, n_cores, mode)
                    : partition_per_layer(layers, hw, n_cores, mode, options);
  if (static_cast<std::int64_t>(slices.size()) != n_cores) {
    throw InternalError("partition produced " + std::to_string(slices.size()) + " slices, expected " +
                        std::to_string(n_cores));
  }
  return slices;
}

std::vector<SliceSpec> partition_uniform_weights(std::span<const LayerSpec> layers,
                                                 const HardwareProfile& hw,
                                                 std::int64_t n_cores, Mode mode) {
  validate_model(layers);
  hw.validate();
  const std::size_t n_layers = layers.size();
  if (n_cores < static_cast<std::int64_t>(n_layers)) {
    throw ValidationError("infeasible partition: " + std::to_string(n_cores) +
                          " cores for " + std::to_string(n_layers) + " layers");
  }
  check_capacity(layers, n_cores);
  double sum = 0.0;
  for (const auto& layer : layers) sum += static_cast<double>(layer.weight_bytes());
  std::vector<std::int64_t> alloc(n_layers);
  for (std::size_t l = 0; l < n_layers; ++l) {
    auto share = static_cast<std::int64_t>(std::llround(
        static_cast<double>(n_cores) * static_cast<double>(layers[l].weight_bytes()) / sum));
    alloc[l] = std::clamp<std::int64_t>(share, 1, max_parts(layers[l]));
  }
  auto per_slice = [&](std::size_t l) {
    return static_cast<double>(layers[l].weight_bytes()) / static_cast<double>(alloc[l]);
  };
  std::int64_t allocated = 0;
  for (auto a : alloc) allocated += a;
  while (allocated < n_cores) {
    std::optional<std::size_t> pick;
    for (std::size_t l = 0; l < n_layers; ++l) {
      if (alloc[l] >= max_parts(layers[l])) continue;
      if (!pick || per_slice(l) > per_slice(*pick)) pick = l;
    }
    ++alloc[*pick];
    ++allocated;
  }
  while (allocated > n_cores) {
    std::optional<std::size_t> pick;
    for (std::size_t l = 0; l < n_layers; ++l) {
      if (alloc[l] < 2) continue;
      if (!pick || per_slice(l) < per_slice(*pick)) pick = l;
    }
    --alloc[*pick];
    --allocated;
  }
  return materialize(layers, alloc, hw, mode);
}

double latency_imbalance(std::span<const SliceSpec> slices) {
  if (slices.empty()) return 1.0;
  std::int64_t lo = std::numeric_limits<std::int64_t>::max();
  std::int64_t hi = 0;
  for (const auto& s : slices) {
    lo = std::min(lo, s.est_latency_cycles);
    hi = std::max(hi, s.est_latency_cycles);
  }
  if (lo == 0) return std::numeric_limits<double>::infinity();
  return static_cast<double>(hi) / static_cast<double>(lo);
}

}  // namespace coreplace
