#include "coreplace/sim.hpp"

#include <algorithm>
#include <cmath>
#include <queue>
#include <sstream>
#include <tuple>

#include "coreplace/errors.hpp"

namespace coreplace {

std::string_view to_string(Pipeline pipeline) {
  return pipeline == Pipeline::kFpDeep ? "fpdeep" : "layerwise";
}

Pipeline parse_pipeline(std::string_view text) {
  if (text == "layerwise") return Pipeline::kLayerwise;
  if (text == "fpdeep") return Pipeline::kFpDeep;
  throw ValidationError("unknown pipeline '" + std::string(text) + "' (expected layerwise|fpdeep)");
}

std::int64_t SimConfig::tiles() const {
  if (pipeline == Pipeline::kLayerwise) return 1;
  return static_cast<std::int64_t>(std::ceil(1.0 / tile_fraction - 1e-9));
}

void SimConfig::validate() const {
  if (link_bandwidth <= 0) throw ValidationError("link bandwidth must be > 0");
  if (batch_size < 1) throw ValidationError("batch size must be >= 1");
  if (!(tile_fraction > 0.0 && tile_fraction <= 1.0)) {
    throw ValidationError("tile fraction must lie in (0, 1]");
  }
  if (packet_bytes < 1) throw ValidationError("packet size must be >= 1 byte");
  if (!(clock_mhz > 0.0)) throw ValidationError("clock frequency must be > 0");
}

std::int64_t SimResult::busy_cycles() const {
  std::int64_t total = 0;
  for (const auto& node : busy) {
    for (const auto& [b, e] : node) total += e - b;
  }
  return total;
}

double SimResult::mean_utilization() const {
  if (makespan == 0 || cores == 0) return 0.0;
  return static_cast<double>(busy_cycles()) /
         (static_cast<double>(cores) * static_cast<double>(makespan));
}

std::int64_t SimResult::max_forwarded() const {
  return forwarded.empty() ? 0 : *std::max_element(forwarded.begin(), forwarded.end());
}

namespace {

constexpr int kFp = 0;
constexpr int kBp = 1;

struct Packet {
  std::uint32_t edge = 0;
  std::uint32_t sample = 0;
  std::int64_t bytes = 0;
  std::uint32_t hop = 0;
  NodeId src = 0;
  std::uint64_t seq = 0;
  std::int64_t enqueued = 0;
};

struct QueueOrder {
  // priority_queue keeps the largest on top; invert for FIFO by key.
  bool operator()(const Packet& a, const Packet& b) const {
    return std::tie(a.enqueued, a.src, a.seq) > std::tie(b.enqueued, b.src, b.seq);
  }
};

struct PortState {
  bool busy = false;
  Packet current;
  std::priority_queue<Packet, std::vector<Packet>, QueueOrder> queue;
  std::int64_t peak = 0;
};

struct EngineState {
  NodeId node = 0;
  int stage = kFp;
  std::int64_t work = 0;   // cycles per sample
  std::int64_t next = 0;   // next task index (sample * tiles + tile)
  bool running = false;
  std::int64_t started = 0;
  std::vector<std::uint32_t> inbound;
  std::vector<std::uint32_t> outbound;
  std::vector<Interval> intervals;
};

enum class EventKind : std::uint8_t { kTaskDone, kLinkDone };

struct Event {
  std::int64_t time = 0;
  std::uint64_t seq = 0;
  EventKind kind = EventKind::kTaskDone;
  std::uint32_t id = 0;

  bool operator>(const Event& o) const { return std::tie(time, seq) > std::tie(o.time, o.seq); }
};

std::int64_t share(std::int64_t total, std::int64_t part, std::int64_t parts) {
  // floor(total * part / parts) without overflow for realistic sizes
  return static_cast<std::int64_t>((static_cast<__int128>(total) * part) / parts);
}

std::vector<Interval> merge(std::vector<Interval> v) {
  std::sort(v.begin(), v.end());
  std::vector<Interval> out;
  for (const auto& iv : v) {
    if (iv.second <= iv.first) continue;
    if (!out.empty() && iv.first <= out.back().second) {
      out.back().second = std::max(out.back().second, iv.second);
    } else {
      out.push_back(iv);
    }
  }
  return out;
}

}  // namespace

SimResult simulate(const TaskGraph& graph, const Placement& placement, const Mesh& mesh,
                   const SimConfig& config) {
  config.validate();
  graph.validate();
  placement.validate(mesh, graph.size());
  const Mode mode = config.mode.value_or(graph.mode);
  if (mode == Mode::kTraining && graph.mode != Mode::kTraining) {
    throw ValidationError("a training simulation needs a training-mode task graph");
  }
  const bool training = mode == Mode::kTraining;
  const std::int64_t m = config.tiles();
  const std::int64_t batch = config.batch_size;
  const std::int64_t tasks_per_engine = batch * m;
  const auto n = graph.size();

  // Engines: index node*2 + stage. The BP engine of an inference run never
  // gets any task.
  std::vector<EngineState> engines(2 * n);
  for (std::size_t v = 0; v < n; ++v) {
    const auto& node = graph.nodes[v];
    auto& fp = engines[2 * v];
    auto& bp = engines[2 * v + 1];
    fp.node = bp.node = static_cast<NodeId>(v);
    fp.stage = kFp;
    bp.stage = kBp;
    fp.work = graph.mode == Mode::kTraining ? node.fp_cycles : node.compute_cycles;
    bp.work = training ? node.compute_cycles - node.fp_cycles : 0;
    if (!training) bp.next = tasks_per_engine;
  }

  std::vector<std::uint32_t> active_edges;
  std::vector<std::vector<int>> routes(graph.edges.size());  // port ids per hop
  for (std::size_t e = 0; e < graph.edges.size(); ++e) {
    const auto& edge = graph.edges[e];
    if (edge.kind == EdgeKind::kBackward && !training) continue;
    active_edges.push_back(static_cast<std::uint32_t>(e));
    const int stage = edge.kind == EdgeKind::kForward ? kFp : kBp;
    engines[2 * edge.src + stage].outbound.push_back(static_cast<std::uint32_t>(e));
    engines[2 * edge.dst + stage].inbound.push_back(static_cast<std::uint32_t>(e));
    const Route r = route(mesh, placement[edge.src], placement[edge.dst]);
    Coord at = r.src;
    for (auto d : r.hops) {
      routes[e].push_back(mesh.index(at) * 4 + static_cast<int>(d));
      at = step(at, d);
    }
    if (routes[e].empty()) throw InternalError("edge between distinct nodes has an empty route");
  }

  std::vector<std::vector<std::int64_t>> delivered(
      graph.edges.size(), std::vector<std::int64_t>(static_cast<std::size_t>(batch), 0));
  std::vector<std::int64_t> fp_done(n, 0);  // samples whose forward pass finished
  std::vector<PortState> ports(static_cast<std::size_t>(mesh.size()) * 4);

  SimResult result;
  result.mode = mode;
  result.pipeline = config.pipeline;
  result.batch_size = batch;
  result.cores = mesh.size();
  result.link_bytes.assign(static_cast<std::size_t>(mesh.size()), {});
  result.peak_queue.assign(static_cast<std::size_t>(mesh.size()), {0, 0, 0, 0});
  std::vector<DirectionalLoad> link_total(static_cast<std::size_t>(mesh.size()));

  std::priority_queue<Event, std::vector<Event>, std::greater<>> events;
  std::uint64_t event_seq = 0;
  std::uint64_t packet_seq = 0;
  std::vector<char> engine_dirty(engines.size(), 1);
  std::vector<std::size_t> dirty_engines(engines.size());
  for (std::size_t i = 0; i < engines.size(); ++i) dirty_engines[i] = i;
  std::vector<char> port_dirty(ports.size(), 0);
  std::vector<std::size_t> dirty_ports;

  auto mark_engine = [&](std::size_t i) {
    if (!engine_dirty[i]) {
      engine_dirty[i] = 1;
      dirty_engines.push_back(i);
    }
  };
  auto enqueue = [&](std::size_t port, Packet p, std::int64_t t) {
    p.enqueued = t;
    auto& ps = ports[port];
    ps.queue.push(p);
    ps.peak = std::max<std::int64_t>(ps.peak, static_cast<std::int64_t>(ps.queue.size()));
    if (!port_dirty[port]) {
      port_dirty[port] = 1;
      dirty_ports.push_back(port);
    }
  };

  auto ready = [&](const EngineState& e) {
    if (e.running || e.next >= tasks_per_engine) return false;
    const std::int64_t s = e.next / m;
    const std::int64_t j = e.next % m;
    if (e.stage == kBp && fp_done[e.node] <= s) return false;
    for (auto idx : e.inbound) {
      const auto need = share(graph.edges[idx].bytes, j + 1, m);
      if (delivered[idx][static_cast<std::size_t>(s)] < need) return false;
    }
    return true;
  };

  auto finish_task = [&](std::size_t ei, std::int64_t t) {
    auto& e = engines[ei];
    e.running = false;
    e.intervals.emplace_back(e.started, t);
    result.makespan = std::max(result.makespan, t);
    const std::int64_t s = e.next / m;
    const std::int64_t j = e.next % m;
    ++e.next;
    for (auto idx : e.outbound) {
      const auto& edge = graph.edges[idx];
      std::int64_t chunk = share(edge.bytes, j + 1, m) - share(edge.bytes, j, m);
      result.bytes_injected += chunk;
      while (chunk > 0) {
        const std::int64_t size = std::min(chunk, config.packet_bytes);
        chunk -= size;
        Packet p{idx, static_cast<std::uint32_t>(s), size, 0, edge.src, packet_seq++, t};
        ++result.packets;
        enqueue(static_cast<std::size_t>(routes[idx][0]), p, t);
      }
    }
    if (e.stage == kFp && j == m - 1) {
      ++fp_done[e.node];
      if (training) mark_engine(2 * e.node + 1);
    }
    mark_engine(ei);
  };

  auto finish_link = [&](std::size_t pi, std::int64_t t) {
    auto& ps = ports[pi];
    ps.busy = false;
    Packet p = ps.current;
    ++p.hop;
    const auto& r = routes[p.edge];
    if (p.hop == r.size()) {
      delivered[p.edge][p.sample] += p.bytes;
      result.bytes_delivered += p.bytes;
      const auto& edge = graph.edges[p.edge];
      mark_engine(2 * edge.dst + (edge.kind == EdgeKind::kForward ? kFp : kBp));
    } else {
      enqueue(static_cast<std::size_t>(r[p.hop]), p, t);
    }
    if (!port_dirty[pi]) {
      port_dirty[pi] = 1;
      dirty_ports.push_back(pi);
    }
  };

  std::int64_t t = 0;
  while (true) {
    // Settle everything that happens at time t, including zero-length tasks.
    while (true) {
      while (!events.empty() && events.top().time == t) {
        const Event ev = events.top();
        events.pop();
        if (ev.kind == EventKind::kTaskDone) {
          finish_task(ev.id, t);
        } else {
          finish_link(ev.id, t);
        }
      }
      if (dirty_engines.empty()) break;
      std::vector<std::size_t> batch_dirty;
      batch_dirty.swap(dirty_engines);
      std::sort(batch_dirty.begin(), batch_dirty.end());
      for (auto ei : batch_dirty) {
        engine_dirty[ei] = 0;
        auto& e = engines[ei];
        if (!ready(e)) continue;
        const std::int64_t j = e.next % m;
        const std::int64_t duration = share(e.work, j + 1, m) - share(e.work, j, m);
        e.running = true;
        e.started = t;
        events.push({t + duration, event_seq++, EventKind::kTaskDone, static_cast<std::uint32_t>(ei)});
      }
      if (events.empty() || events.top().time != t) break;
    }

    std::sort(dirty_ports.begin(), dirty_ports.end());
    for (auto pi : dirty_ports) {
      port_dirty[pi] = 0;
      auto& ps = ports[pi];
      if (ps.busy || ps.queue.empty()) continue;
      ps.current = ps.queue.top();
      ps.queue.pop();
      ps.busy = true;
      const auto core = pi / 4;
      link_total[core][static_cast<Direction>(pi % 4)] += ps.current.bytes;
      const std::int64_t cycles =
          (ps.current.bytes + config.link_bandwidth - 1) / config.link_bandwidth;
      events.push({t + cycles, event_seq++, EventKind::kLinkDone, static_cast<std::uint32_t>(pi)});
    }
    dirty_ports.clear();

    if (events.empty()) break;
    t = events.top().time;
  }

  for (const auto& e : engines) {
    if (e.next != tasks_per_engine) {
      std::ostringstream msg;
      msg << "simulation stalled: node " << e.node << (e.stage == kFp ? " forward" : " backward")
          << " engine finished " << e.next << " of " << tasks_per_engine << " tasks";
      throw InternalError(msg.str());
    }
  }
  if (result.bytes_injected != result.bytes_delivered) {
    throw InternalError("flow conservation violated: injected " +
                        std::to_string(result.bytes_injected) + " bytes, delivered " +
                        std::to_string(result.bytes_delivered));
  }
  for (auto idx : active_edges) {
    for (auto got : delivered[idx]) {
      if (got != graph.edges[idx].bytes) {
        throw InternalError("edge " + std::to_string(idx) + " delivered " + std::to_string(got) +
                            " of " + std::to_string(graph.edges[idx].bytes) + " bytes");
      }
    }
  }

  result.node_finish.assign(n, 0);
  result.busy.resize(n);
  for (std::size_t v = 0; v < n; ++v) {
    auto all = engines[2 * v].intervals;
    all.insert(all.end(), engines[2 * v + 1].intervals.begin(), engines[2 * v + 1].intervals.end());
    for (const auto& iv : all) result.node_finish[v] = std::max(result.node_finish[v], iv.second);
    result.busy[v] = merge(std::move(all));
  }
  result.forwarded.assign(static_cast<std::size_t>(mesh.size()), 0);
  for (std::size_t c = 0; c < link_total.size(); ++c) {
    for (auto d : kClockwise) {
      const auto total = link_total[c][d];
      if (total % batch != 0) throw InternalError("per-sample link bytes are not uniform");
      result.link_bytes[c][d] = total / batch;
      result.peak_queue[c][static_cast<std::size_t>(d)] = ports[c * 4 + static_cast<std::size_t>(d)].peak;
    }
    result.forwarded[c] = result.link_bytes[c].total();
  }
  if (result.makespan > 0) {
    result.throughput = static_cast<double>(batch) * 1000.0 / static_cast<double>(result.makespan);
    result.samples_per_second =
        static_cast<double>(batch) * config.clock_mhz * 1e6 / static_cast<double>(result.makespan);
  }
  return result;
}

std::vector<UtilizationPoint> utilization_waveform(const SimResult& result, std::int64_t bucket) {
  if (bucket < 1) throw ValidationError("utilization bucket must be >= 1 cycle");
  std::vector<UtilizationPoint> out;
  if (result.makespan == 0 || result.cores == 0) return out;
  const std::int64_t count = (result.makespan + bucket - 1) / bucket;
  std::vector<std::int64_t> busy(static_cast<std::size_t>(count), 0);
  for (const auto& node : result.busy) {
    for (const auto& [b, e] : node) {
      for (std::int64_t k = b / bucket; k * bucket < e; ++k) {
        const auto lo = std::max(b, k * bucket);
        const auto hi = std::min(e, (k + 1) * bucket);
        busy[static_cast<std::size_t>(k)] += hi - lo;
      }
    }
  }
  out.reserve(busy.size());
  for (std::int64_t k = 0; k < count; ++k) {
    const auto width = std::min(bucket, result.makespan - k * bucket);
    out.push_back({k * bucket, static_cast<double>(busy[static_cast<std::size_t>(k)]) /
                                   (static_cast<double>(result.cores) * static_cast<double>(width))});
  }
  return out;
}

std::string waveform_csv(std::span<const UtilizationPoint> waveform) {
  std::ostringstream out;
  out << "t,busy_fraction\n";
  out.precision(6);
  for (const auto& p : waveform) out << p.t << ',' << p.busy_fraction << '\n';
  return out.str();
}

}  // namespace coreplace
