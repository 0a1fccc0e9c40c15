#include "coreplace/taskgraph.hpp"

#include <algorithm>
#include <map>
#include <queue>

#include "coreplace/errors.hpp"

namespace coreplace {

std::string_view to_string(EdgeKind kind) {
  return kind == EdgeKind::kBackward ? "backward" : "forward";
}

EdgeKind parse_edge_kind(std::string_view text) {
  if (text == "forward") return EdgeKind::kForward;
  if (text == "backward") return EdgeKind::kBackward;
  throw ValidationError("unknown edge kind '" + std::string(text) + "' (expected forward|backward)");
}

void recompute_features(TaskGraph& graph) {
  for (auto& node : graph.nodes) {
    node.degree_in = node.degree_out = node.bytes_in = node.bytes_out = 0;
  }
  for (const auto& e : graph.edges) {
    auto& src = graph.nodes.at(e.src);
    auto& dst = graph.nodes.at(e.dst);
    src.degree_out += 1;
    src.bytes_out += e.bytes;
    dst.degree_in += 1;
    dst.bytes_in += e.bytes;
  }
  for (auto& node : graph.nodes) node.multicast = node.degree_out > 1;
}

void TaskGraph::validate() const {
  const auto n = nodes.size();
  for (std::size_t i = 0; i < n; ++i) {
    if (nodes[i].id != i) {
      throw ValidationError("node ids must be 0..n-1 in order; position " + std::to_string(i) +
                            " holds id " + std::to_string(nodes[i].id));
    }
    if (nodes[i].compute_cycles < 0 || nodes[i].fp_cycles < 0 ||
        nodes[i].fp_cycles > nodes[i].compute_cycles) {
      throw ValidationError("node " + std::to_string(i) + ": invalid compute cycles");
    }
  }
  std::vector<std::vector<NodeId>> succ(n);
  std::vector<std::int64_t> indeg(n, 0);
  for (const auto& e : edges) {
    if (e.src >= n || e.dst >= n) {
      throw ValidationError("edge " + std::to_string(e.src) + "->" + std::to_string(e.dst) +
                            " references a missing node");
    }
    if (e.src == e.dst) throw ValidationError("self-edge on node " + std::to_string(e.src));
    if (e.bytes <= 0) {
      throw ValidationError("edge " + std::to_string(e.src) + "->" + std::to_string(e.dst) +
                            " must carry a positive byte count");
    }
    if (e.kind == EdgeKind::kForward) {
      succ[e.src].push_back(e.dst);
      ++indeg[e.dst];
    }
  }
  std::queue<NodeId> ready;
  for (NodeId i = 0; i < n; ++i) {
    if (indeg[i] == 0) ready.push(i);
  }
  std::size_t seen = 0;
  while (!ready.empty()) {
    auto u = ready.front();
    ready.pop();
    ++seen;
    for (auto v : succ[u]) {
      if (--indeg[v] == 0) ready.push(v);
    }
  }
  if (seen != n) throw ValidationError("forward edges contain a cycle");

  TaskGraph expected = *this;
  recompute_features(expected);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& a = nodes[i];
    const auto& b = expected.nodes[i];
    if (a.multicast != b.multicast || a.degree_in != b.degree_in ||
        a.degree_out != b.degree_out || a.bytes_in != b.bytes_in || a.bytes_out != b.bytes_out) {
      throw ValidationError("node " + std::to_string(i) +
                            ": degree/volume/multicast features disagree with edges");
    }
  }
}

TaskGraph make_graph(Mode mode, std::span<const std::int64_t> compute_cycles,
                     std::vector<TaskEdge> edges) {
  TaskGraph graph;
  graph.mode = mode;
  graph.nodes.resize(compute_cycles.size());
  for (std::size_t i = 0; i < compute_cycles.size(); ++i) {
    auto& node = graph.nodes[i];
    node.id = static_cast<NodeId>(i);
    node.compute_cycles = compute_cycles[i];
    node.fp_cycles = mode == Mode::kTraining ? (compute_cycles[i] + 2) / 3 : compute_cycles[i];
  }
  graph.edges = std::move(edges);
  recompute_features(graph);
  return graph;
}

namespace {

struct Port {
  std::size_t slice;
  ChannelRange range;
};

std::int64_t overlap(ChannelRange a, ChannelRange b) {
  return std::max<std::int64_t>(0, std::min(a.end, b.end) - std::max(a.begin, b.begin));
}

void check_tiling(const LayerSpec& layer, std::vector<std::pair<ChannelRange, ChannelRange>> blocks) {
  // Every (c, k) cell of the layer is covered exactly once.
  std::sort(blocks.begin(), blocks.end(), [](const auto& a, const auto& b) {
    return std::pair(a.second.begin, a.first.begin) < std::pair(b.second.begin, b.first.begin);
  });
  std::int64_t k_next = 0;
  std::size_t i = 0;
  while (i < blocks.size()) {
    const auto k = blocks[i].second;
    if (k.begin != k_next || k.size() <= 0) {
      throw ValidationError("slices of layer '" + layer.id + "' do not tile K");
    }
    std::int64_t c_next = 0;
    while (i < blocks.size() && blocks[i].second == k) {
      if (blocks[i].first.begin != c_next || blocks[i].first.size() <= 0) {
        throw ValidationError("slices of layer '" + layer.id + "' do not tile C");
      }
      c_next = blocks[i].first.end;
      ++i;
    }
    if (c_next != layer.in_channels) {
      throw ValidationError("slices of layer '" + layer.id + "' do not tile C");
    }
    k_next = k.end;
  }
  if (k_next != layer.out_channels) {
    throw ValidationError("slices of layer '" + layer.id + "' do not tile K");
  }
}

}  // namespace

TaskGraph build_taskgraph(std::span<const SliceSpec> slices, std::span<const LayerSpec> layers,
                          const HardwareProfile& hw, Mode mode) {
  validate_model(layers);
  hw.validate();
  const auto producers = resolve_producers(layers);
  const auto& inputs = producers.inputs;
  const std::size_t n_layers = layers.size();

  struct Owned {
    std::size_t slice;
    LayerBlock block;
  };
  std::vector<std::vector<Owned>> owned(n_layers);
  for (std::size_t s = 0; s < slices.size(); ++s) {
    for (const auto& b : slices[s].blocks()) {
      if (b.layer_index >= n_layers) {
        throw ValidationError("slice " + std::to_string(s) + " references a missing layer");
      }
      owned[b.layer_index].push_back({s, b});
    }
  }
  // A block with c_range starting at 0 leads its K range: it holds (or
  // reduces) the finished output channels and emits the spikes.
  std::vector<std::vector<Port>> emitters(n_layers);
  std::vector<std::vector<Port>> receivers(n_layers);
  for (std::size_t l = 0; l < n_layers; ++l) {
    if (owned[l].empty()) throw ValidationError("no slice covers layer '" + layers[l].id + "'");
    std::vector<std::pair<ChannelRange, ChannelRange>> blocks;
    for (const auto& o : owned[l]) {
      blocks.emplace_back(o.block.c_range, o.block.k_range);
      receivers[l].push_back({o.slice, o.block.c_range});
      if (o.block.c_range.begin == 0) emitters[l].push_back({o.slice, o.block.k_range});
    }
    check_tiling(layers[l], std::move(blocks));
  }

  std::map<std::pair<std::size_t, std::size_t>, std::int64_t> forward;
  std::map<std::pair<std::size_t, std::size_t>, std::int64_t> backward;
  const bool training = mode == Mode::kTraining;

  for (std::size_t l = 0; l < n_layers; ++l) {
    for (auto p : inputs[l]) {
      const auto& producer = layers[p];
      for (const auto& out : emitters[p]) {
        for (const auto& in : receivers[l]) {
          const auto channels = overlap(out.range, in.range);
          if (channels == 0 || out.slice == in.slice) continue;
          forward[{out.slice, in.slice}] += producer.timesteps * spike_bytes(producer, channels);
          if (training) {
            backward[{in.slice, out.slice}] += producer.timesteps * fp16_bytes(producer, channels);
          }
        }
      }
    }
    // Skip connections join where the output channels are finished.
    for (auto p : producers.residual[l]) {
      const auto& producer = layers[p];
      for (const auto& out : emitters[p]) {
        for (const auto& lead : emitters[l]) {
          const auto channels = overlap(out.range, lead.range);
          if (channels == 0 || out.slice == lead.slice) continue;
          forward[{out.slice, lead.slice}] += producer.timesteps * spike_bytes(producer, channels);
          if (training) {
            backward[{lead.slice, out.slice}] += producer.timesteps * fp16_bytes(producer, channels);
          }
        }
      }
    }
    // Partial sums of C-split blocks are reduced on the block's lead slice.
    for (const auto& lead : emitters[l]) {
      for (const auto& o : owned[l]) {
        if (o.slice == lead.slice || o.block.k_range != lead.range) continue;
        const auto bytes = layers[l].timesteps * fp16_bytes(layers[l], lead.range.size());
        forward[{o.slice, lead.slice}] += bytes;
        if (training) backward[{lead.slice, o.slice}] += bytes;
      }
    }
  }

  TaskGraph graph;
  graph.mode = mode;
  graph.hardware = hw;
  graph.nodes.resize(slices.size());
  for (std::size_t s = 0; s < slices.size(); ++s) {
    auto& node = graph.nodes[s];
    node.id = static_cast<NodeId>(s);
    node.slice = slices[s];
    node.compute_cycles = (slices[s].total_ops() + hw.macs_per_core - 1) / hw.macs_per_core;
    node.fp_cycles = (slices[s].fp_ops + hw.macs_per_core - 1) / hw.macs_per_core;
  }
  auto emit = [&](const auto& table, EdgeKind kind) {
    for (const auto& [key, bytes] : table) {
      graph.edges.push_back({static_cast<NodeId>(key.first), static_cast<NodeId>(key.second),
                             bytes, kind});
    }
  };
  emit(forward, EdgeKind::kForward);
  emit(backward, EdgeKind::kBackward);
  recompute_features(graph);
  graph.validate();
  return graph;
}

std::int64_t total_edge_bytes(const TaskGraph& graph) {
  std::int64_t total = 0;
  for (const auto& e : graph.edges) total += e.bytes;
  return total;
}

}  // namespace coreplace
