#include <gtest/gtest.h>

#include <algorithm>
#include <map>
#include <set>

#include "coreplace/errors.hpp"
#include "coreplace/io.hpp"
#include "coreplace/partition.hpp"
#include "coreplace/taskgraph.hpp"
#include "support/layers.hpp"

using namespace coreplace;
using coreplace::testing::conv;
using coreplace::testing::data_path;
using coreplace::testing::fc;

namespace {

std::vector<LayerSpec> bundled(const std::string& name) {
  return io::load_model_spec(data_path("models/" + name + ".json"));
}

// Every layer's (C, K) blocks across all slices tile [0,C) x [0,K) exactly.
void expect_tiling(std::span<const SliceSpec> slices, std::span<const LayerSpec> layers) {
  std::vector<std::int64_t> area(layers.size(), 0);
  for (const auto& s : slices) {
    for (const auto& b : s.blocks()) {
      ASSERT_LT(b.layer_index, layers.size());
      const auto& l = layers[b.layer_index];
      EXPECT_GE(b.c_range.begin, 0);
      EXPECT_LE(b.c_range.end, l.in_channels);
      EXPECT_GE(b.k_range.begin, 0);
      EXPECT_LE(b.k_range.end, l.out_channels);
      EXPECT_GT(b.c_range.size(), 0);
      EXPECT_GT(b.k_range.size(), 0);
      area[b.layer_index] += b.c_range.size() * b.k_range.size();
    }
  }
  for (std::size_t l = 0; l < layers.size(); ++l) {
    EXPECT_EQ(area[l], layers[l].in_channels * layers[l].out_channels) << layers[l].id;
    // Non-overlap: each output channel's C coverage sums to C.
    std::vector<std::int64_t> cover(static_cast<std::size_t>(layers[l].out_channels), 0);
    for (const auto& s : slices) {
      for (const auto& b : s.blocks()) {
        if (b.layer_index != l) continue;
        for (auto k = b.k_range.begin; k < b.k_range.end; ++k) {
          cover[static_cast<std::size_t>(k)] += b.c_range.size();
        }
      }
    }
    for (auto c : cover) EXPECT_EQ(c, layers[l].in_channels) << layers[l].id;
  }
}

void expect_features_consistent(const TaskGraph& g) {
  std::vector<std::int64_t> din(g.size()), dout(g.size()), bin(g.size()), bout(g.size());
  for (const auto& e : g.edges) {
    EXPECT_NE(e.src, e.dst);
    EXPECT_GT(e.bytes, 0);
    ++dout[e.src];
    ++din[e.dst];
    bout[e.src] += e.bytes;
    bin[e.dst] += e.bytes;
  }
  for (std::size_t i = 0; i < g.size(); ++i) {
    EXPECT_EQ(g.nodes[i].degree_in, din[i]);
    EXPECT_EQ(g.nodes[i].degree_out, dout[i]);
    EXPECT_EQ(g.nodes[i].bytes_in, bin[i]);
    EXPECT_EQ(g.nodes[i].bytes_out, bout[i]);
    EXPECT_EQ(g.nodes[i].multicast, dout[i] > 1);
  }
}

std::map<std::size_t, int> slices_per_layer(std::span<const SliceSpec> slices) {
  std::map<std::size_t, int> count;
  for (const auto& s : slices) ++count[s.layer_index];
  return count;
}

}  // namespace

TEST(LayerCost, SmallConvForwardOps) {
  const auto l = conv("a", 3, 4, 3, 8, 2);
  const auto c = estimate_layer_cost(l, {}, Mode::kInference);
  EXPECT_EQ(c.fp_ops, 13824);
  EXPECT_EQ(c.bp_ops, 0);
  EXPECT_EQ(c.wg_ops, 0);
  EXPECT_EQ(c.total_ops(), 13824);
}

TEST(LayerCost, TrainingTriplesOps) {
  const auto c = estimate_layer_cost(conv("a", 3, 4, 3, 8, 2), {}, Mode::kTraining);
  EXPECT_EQ(c.fp_ops, 13824);
  EXPECT_EQ(c.bp_ops, 13824);
  EXPECT_EQ(c.wg_ops, 13824);
  EXPECT_EQ(c.total_ops(), 41472);
}

TEST(LayerCost, ImageNetResNetConv1) {
  // 4 * 64 * 3 * 49 * 112 * 112, evaluated separately.
  const auto c = estimate_layer_cost(conv("conv1", 3, 64, 7, 112, 4), {}, Mode::kInference);
  EXPECT_EQ(c.fp_ops, 472055808);
}

TEST(LayerCost, ByteFootprints) {
  const auto l = conv("a", 3, 4, 3, 8, 2);
  const auto c = estimate_layer_cost(l, {}, Mode::kInference);
  EXPECT_EQ(l.weight_bytes(), 3 * 4 * 3 * 3 * 2);
  EXPECT_EQ(c.weight_bytes, l.weight_bytes());
  EXPECT_EQ(c.spike_bytes_per_step, 4 * 64 / 8);
  EXPECT_EQ(c.grad_bytes_per_step, 4 * 64 * 2);
  // Packing rounds up.
  const auto odd = estimate_layer_cost(conv("b", 1, 3, 1, 3), {}, Mode::kInference);
  EXPECT_EQ(odd.spike_bytes_per_step, 4);  // 27 bits
}

TEST(LayerCost, Deterministic) {
  const auto l = conv("a", 17, 33, 3, 9, 3);
  EXPECT_EQ(estimate_layer_cost(l, {}, Mode::kTraining), estimate_layer_cost(l, {}, Mode::kTraining));
}

TEST(LayerCost, RejectsZeroDims) {
  auto l = conv("a", 3, 4, 3, 8);
  l.out_channels = 0;
  EXPECT_THROW(estimate_layer_cost(l, {}, Mode::kInference), ValidationError);
  l = conv("a", 3, 4, 3, 8);
  l.timesteps = 0;
  EXPECT_THROW(estimate_layer_cost(l, {}, Mode::kInference), ValidationError);
  l = conv("a", 3, 4, 3, 0);
  EXPECT_THROW(estimate_layer_cost(l, {}, Mode::kInference), ValidationError);
}

TEST(Hardware, Validation) {
  HardwareProfile hw;
  EXPECT_NO_THROW(hw.validate());
  EXPECT_EQ(hw.weight_capacity(), 256 * 1024 * 3 / 4);
  hw.macs_per_core = 200;  // not a square
  EXPECT_THROW(hw.validate(), ValidationError);
  hw = {};
  hw.link_bandwidth = 0;
  EXPECT_THROW(hw.validate(), ValidationError);
}

TEST(Partition, ProportionalAllocationPerLayer) {
  // 96 vs 32 cycles: a 3:1 cost ratio.
  std::vector<LayerSpec> layers{fc("a", 768, 8), fc("b", 8, 256)};
  PartitionOptions opt;
  opt.strategy = PartitionStrategy::kPerLayer;
  const auto slices = partition_model(layers, {}, 4, Mode::kInference, opt);
  ASSERT_EQ(slices.size(), 4u);
  const auto count = slices_per_layer(slices);
  EXPECT_EQ(count.at(0), 3);
  EXPECT_EQ(count.at(1), 1);
}

TEST(Partition, SymmetricSplitOfOneLayer) {
  std::vector<LayerSpec> layers{conv("a", 4, 8, 3, 8)};
  for (auto strategy : {PartitionStrategy::kContiguous, PartitionStrategy::kPerLayer}) {
    PartitionOptions opt;
    opt.strategy = strategy;
    const auto slices = partition_model(layers, {}, 2, Mode::kInference, opt);
    ASSERT_EQ(slices.size(), 2u);
    EXPECT_EQ(slices[0].k_range, (ChannelRange{0, 4}));
    EXPECT_EQ(slices[1].k_range, (ChannelRange{4, 8}));
    EXPECT_EQ(slices[0].est_latency_cycles, slices[1].est_latency_cycles);
  }
}

TEST(Partition, ExactSliceCountAndTiling) {
  for (const char* name : {"spike_resnet18", "spike_vgg16", "spike_resnet50", "toy8"}) {
    const auto layers = bundled(name);
    for (std::int64_t n : {8, 32, 64}) {
      for (auto mode : {Mode::kInference, Mode::kTraining}) {
        for (auto strategy : {PartitionStrategy::kContiguous, PartitionStrategy::kPerLayer}) {
          PartitionOptions opt;
          opt.strategy = strategy;
          if (strategy == PartitionStrategy::kPerLayer && n < static_cast<std::int64_t>(layers.size())) {
            continue;
          }
          const auto slices = partition_model(layers, {}, n, mode, opt);
          ASSERT_EQ(static_cast<std::int64_t>(slices.size()), n) << name;
          expect_tiling(slices, layers);
        }
      }
    }
  }
}

TEST(Partition, SliceFieldsRecomputable) {
  HardwareProfile hw;
  hw.sram_bytes_per_core = 64 * 1024;  // force overflow on VGG
  const auto layers = bundled("spike_vgg16");
  const auto slices = partition_model(layers, hw, 32, Mode::kTraining);
  bool overflow_seen = false;
  for (auto s : slices) {
    std::int64_t fp = 0, weights = 0;
    for (const auto& b : s.blocks()) {
      const auto& l = layers[b.layer_index];
      fp += l.timesteps * b.c_range.size() * b.k_range.size() * l.kernel_h * l.kernel_w * l.out_h *
            l.out_w;
      weights += b.c_range.size() * b.k_range.size() * l.kernel_h * l.kernel_w * 2;
    }
    EXPECT_EQ(s.fp_ops, fp);
    EXPECT_EQ(s.bp_ops, fp);
    EXPECT_EQ(s.wg_ops, fp);
    EXPECT_EQ(s.weight_bytes(), weights);
    EXPECT_EQ(s.resident_weight_bytes, std::min(weights, hw.weight_capacity()));
    overflow_seen |= s.overflow_weight_bytes > 0;
    const auto expect_latency = (3 * fp + hw.macs_per_core - 1) / hw.macs_per_core +
                                (s.overflow_weight_bytes + hw.offchip_bandwidth - 1) /
                                    hw.offchip_bandwidth;
    EXPECT_EQ(s.est_latency_cycles, expect_latency);
    const auto copy = s;
    finalize_slice(s, hw);
    EXPECT_EQ(s, copy);
  }
  EXPECT_TRUE(overflow_seen);
}

TEST(Partition, BalanceDominatesUniformSplitOfOneLayer) {
  HardwareProfile hw;
  for (const auto& layer : {conv("a", 64, 64, 3, 16), conv("b", 3, 37, 3, 32),
                            conv("c", 256, 512, 3, 4), fc("d", 4096, 1000)}) {
    std::vector<LayerSpec> layers{layer};
    for (std::int64_t n : {1, 2, 3, 5, 8, 13}) {
      const auto balanced = partition_model(layers, hw, n, Mode::kTraining);
      std::int64_t balanced_max = 0;
      for (const auto& s : balanced) balanced_max = std::max(balanced_max, s.est_latency_cycles);
      std::int64_t uniform_max = 0;
      for (const auto& [c, k] : split_layer(layer, n)) {
        uniform_max = std::max(uniform_max, make_slice(0, layer, c, k, hw, Mode::kTraining).est_latency_cycles);
      }
      EXPECT_LE(balanced_max, uniform_max) << layer.id << " n=" << n;
    }
  }
}

TEST(Partition, ResNet18BalanceBeatsUniformWeights) {
  const auto layers = bundled("spike_resnet18");
  for (auto mode : {Mode::kInference, Mode::kTraining}) {
    const double balanced = latency_imbalance(partition_model(layers, {}, 32, mode));
    const double uniform = latency_imbalance(partition_uniform_weights(layers, {}, 32, mode));
    EXPECT_LT(balanced, uniform);
    EXPECT_LE(balanced, 1.5);
  }
}

TEST(Partition, Infeasible) {
  std::vector<LayerSpec> layers{conv("a", 3, 2, 3, 8), conv("b", 2, 2, 3, 8)};
  // 2 + 2 output channels times C splits: at most 3*2 + 2*2 cells of work.
  EXPECT_THROW(partition_model(layers, {}, 11, Mode::kInference), ValidationError);
  PartitionOptions opt;
  opt.strategy = PartitionStrategy::kPerLayer;
  opt.fuse_small_layers = false;
  EXPECT_THROW(partition_model(layers, {}, 1, Mode::kInference, opt), ValidationError);
  EXPECT_THROW(partition_model(layers, {}, 0, Mode::kInference), ValidationError);
}

TEST(Partition, StrategyNames) {
  EXPECT_EQ(parse_partition_strategy("contiguous"), PartitionStrategy::kContiguous);
  EXPECT_EQ(parse_partition_strategy("per-layer"), PartitionStrategy::kPerLayer);
  EXPECT_THROW(parse_partition_strategy("greedy"), ValidationError);
}

TEST(TaskGraph, SingleConsumerIsNotMulticast) {
  std::vector<LayerSpec> layers{conv("a", 3, 8, 3, 8), conv("b", 8, 8, 3, 8)};
  std::vector<SliceSpec> slices{
      make_slice(0, layers[0], {0, 3}, {0, 8}, {}, Mode::kInference),
      make_slice(1, layers[1], {0, 8}, {0, 8}, {}, Mode::kInference)};
  const auto g = build_taskgraph(slices, layers, {}, Mode::kInference);
  ASSERT_EQ(g.edges.size(), 1u);
  EXPECT_FALSE(g.nodes[0].multicast);
  EXPECT_EQ(g.nodes[0].degree_out, 1);
  // T * ceil(8 * 64 / 8)
  EXPECT_EQ(g.edges[0].bytes, 4 * 64);
}

TEST(TaskGraph, FanOutIsMulticast) {
  std::vector<LayerSpec> layers{conv("a", 3, 8, 3, 8), conv("b", 8, 6, 3, 8)};
  std::vector<SliceSpec> slices{
      make_slice(0, layers[0], {0, 3}, {0, 8}, {}, Mode::kInference),
      make_slice(1, layers[1], {0, 8}, {0, 2}, {}, Mode::kInference),
      make_slice(1, layers[1], {0, 8}, {2, 4}, {}, Mode::kInference),
      make_slice(1, layers[1], {0, 8}, {4, 6}, {}, Mode::kInference)};
  const auto g = build_taskgraph(slices, layers, {}, Mode::kInference);
  EXPECT_TRUE(g.nodes[0].multicast);
  EXPECT_EQ(g.nodes[0].degree_out, 3);
  for (const auto& e : g.edges) EXPECT_EQ(e.bytes, 4 * 64);  // full input map each
  expect_features_consistent(g);
}

TEST(TaskGraph, TrainingMirrorsForwardEdges) {
  std::vector<LayerSpec> layers{conv("a", 3, 8, 3, 8), conv("b", 8, 6, 3, 8)};
  std::vector<SliceSpec> slices{
      make_slice(0, layers[0], {0, 3}, {0, 4}, {}, Mode::kTraining),
      make_slice(0, layers[0], {0, 3}, {4, 8}, {}, Mode::kTraining),
      make_slice(1, layers[1], {0, 8}, {0, 6}, {}, Mode::kTraining)};
  const auto inf = build_taskgraph(slices, layers, {}, Mode::kInference);
  const auto tr = build_taskgraph(slices, layers, {}, Mode::kTraining);
  std::size_t fwd = 0, bwd = 0;
  for (const auto& e : inf.edges) EXPECT_EQ(e.kind, EdgeKind::kForward);
  for (const auto& e : tr.edges) (e.kind == EdgeKind::kForward ? fwd : bwd)++;
  EXPECT_EQ(fwd, inf.edges.size());
  EXPECT_EQ(fwd, bwd);
  // Gradients scale with the producer's k-range: 4 channels * 64 * 2 bytes * T.
  for (const auto& e : tr.edges) {
    if (e.kind == EdgeKind::kBackward) EXPECT_EQ(e.bytes, 4 * 4 * 64 * 2);
    if (e.kind == EdgeKind::kForward) EXPECT_EQ(e.bytes, 4 * 4 * 64 / 8);
  }
}

TEST(TaskGraph, ResidualAddsSkipEdge) {
  auto a = conv("a", 3, 8, 3, 4);
  auto b = conv("b", 8, 8, 3, 4);
  auto c = conv("c", 8, 8, 3, 4);
  c.residual = {"a"};
  std::vector<LayerSpec> layers{a, b, c};
  validate_model(layers);
  PartitionOptions opt;
  opt.strategy = PartitionStrategy::kPerLayer;
  opt.fuse_small_layers = false;
  const auto slices = partition_model(layers, {}, 3, Mode::kInference, opt);
  const auto g = build_taskgraph(slices, layers, {}, Mode::kInference);
  ASSERT_EQ(g.edges.size(), 3u);
  bool skip = false;
  for (const auto& e : g.edges) {
    if (slices[e.src].layer_index == 0 && slices[e.dst].layer_index == 2) {
      skip = true;
      EXPECT_EQ(e.bytes, 4 * 8 * 16 / 8);
    }
  }
  EXPECT_TRUE(skip);
}

TEST(TaskGraph, BundledGraphsAreConsistentDags) {
  for (const char* name : {"spike_resnet18", "spike_vgg16", "spike_resnet50", "toy8"}) {
    const auto layers = bundled(name);
    for (std::int64_t n : {32, 64}) {
      const auto slices = partition_model(layers, {}, n, Mode::kInference);
      const auto inf = build_taskgraph(slices, layers, {}, Mode::kInference);
      const auto tr = build_taskgraph(slices, layers, {}, Mode::kTraining);
      EXPECT_NO_THROW(inf.validate());
      EXPECT_NO_THROW(tr.validate());
      expect_features_consistent(inf);
      expect_features_consistent(tr);
      EXPECT_GE(total_edge_bytes(tr), total_edge_bytes(inf)) << name;
      // Every node touches an edge.
      for (const auto& node : inf.nodes) EXPECT_GT(node.degree_in + node.degree_out, 0) << name;
    }
  }
}

TEST(TaskGraph, ValidateRejectsCyclesAndSelfEdges) {
  std::vector<std::int64_t> compute{1, 1};
  EXPECT_THROW(make_graph(Mode::kInference, compute, {{0, 0, 1}}).validate(), ValidationError);
  EXPECT_THROW(make_graph(Mode::kInference, compute, {{0, 1, 1}, {1, 0, 1}}).validate(),
               ValidationError);
  // A backward edge closing the loop is fine.
  EXPECT_NO_THROW(make_graph(Mode::kTraining, compute,
                             {{0, 1, 1}, {1, 0, 1, EdgeKind::kBackward}})
                      .validate());
  auto g = make_graph(Mode::kInference, compute, {{0, 1, 5}});
  g.nodes[1].bytes_in = 4;
  EXPECT_THROW(g.validate(), ValidationError);
}

TEST(Model, ValidationErrors) {
  auto a = conv("a", 3, 8, 3, 4);
  auto b = conv("b", 4, 8, 3, 4);
  EXPECT_THROW(validate_model(std::vector<LayerSpec>{a, b}), ValidationError);  // 8 != 4
  b.in_channels = 8;
  b.inputs = {"zzz"};
  EXPECT_THROW(validate_model(std::vector<LayerSpec>{a, b}), ValidationError);
  b.inputs = {};
  b.id = "a";
  EXPECT_THROW(validate_model(std::vector<LayerSpec>{a, b}), ValidationError);
  b.id = "b";
  b.residual = {"a"};
  b.out_channels = 16;
  EXPECT_THROW(validate_model(std::vector<LayerSpec>{a, b}), ValidationError);
  b.out_channels = 8;
  EXPECT_NO_THROW(validate_model(std::vector<LayerSpec>{a, b}));
  EXPECT_THROW(validate_model(std::vector<LayerSpec>{}), ValidationError);
}
