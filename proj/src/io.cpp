#include "coreplace/io.hpp"

#include <fstream>
#include <iomanip>
#include <sstream>

#include "coreplace/errors.hpp"

namespace coreplace::io {

namespace {

const Json& require(const Json& obj, const char* key, const std::string& where) {
  if (!obj.is_object()) throw ParseError(where + ": expected a JSON object");
  auto it = obj.find(key);
  if (it == obj.end()) {
    throw ParseError(where + ": missing required field \"" + key + "\"");
  }
  return *it;
}

std::int64_t as_int(const Json& v, const std::string& where) {
  if (!v.is_number_integer()) throw ParseError(where + ": expected an integer");
  return v.get<std::int64_t>();
}

std::int64_t get_int(const Json& obj, const char* key, const std::string& where) {
  return as_int(require(obj, key, where), where + "." + key);
}

std::int64_t get_int_or(const Json& obj, const char* key, std::int64_t fallback,
                        const std::string& where) {
  return obj.contains(key) ? get_int(obj, key, where) : fallback;
}

double get_number(const Json& obj, const char* key, const std::string& where) {
  const auto& v = require(obj, key, where);
  if (!v.is_number()) throw ParseError(where + "." + key + ": expected a number");
  return v.get<double>();
}

std::string get_string(const Json& obj, const char* key, const std::string& where) {
  const auto& v = require(obj, key, where);
  if (!v.is_string()) throw ParseError(where + "." + key + ": expected a string");
  return v.get<std::string>();
}

bool get_bool(const Json& obj, const char* key, const std::string& where) {
  const auto& v = require(obj, key, where);
  if (!v.is_boolean()) throw ParseError(where + "." + key + ": expected true or false");
  return v.get<bool>();
}

std::pair<std::int64_t, std::int64_t> get_pair(const Json& obj, const char* key,
                                               const std::string& where) {
  const auto& v = require(obj, key, where);
  const std::string at = where + "." + key;
  if (!v.is_array() || v.size() != 2) throw ParseError(at + ": expected a two-element array");
  return {as_int(v[0], at + "[0]"), as_int(v[1], at + "[1]")};
}

const Json& get_array(const Json& obj, const char* key, const std::string& where) {
  const auto& v = require(obj, key, where);
  if (!v.is_array()) throw ParseError(where + "." + key + ": expected an array");
  return v;
}

template <typename Fn>
auto rethrow_as_parse(const std::string& where, Fn&& fn) {
  try {
    return fn();
  } catch (const ParseError&) {
    throw;
  } catch (const ValidationError& e) {
    throw ParseError(where + ": " + e.what());
  }
}

}  // namespace

Json parse_json(const std::string& text, const std::string& what) {
  try {
    return Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw ParseError(what + ": " + e.what());
  }
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Json read_json(const std::filesystem::path& path) {
  return parse_json(read_text(path), path.string());
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ValidationError("cannot write " + path.string());
  out << text;
  if (!out) throw ValidationError("write failed for " + path.string());
}

std::string dump(const Json& j) { return j.dump(2) + "\n"; }

// ---- model ---------------------------------------------------------------

Json model_to_json(std::span<const LayerSpec> layers) {
  Json arr = Json::array();
  for (const auto& l : layers) {
    Json o;
    o["id"] = l.id;
    o["kind"] = std::string(to_string(l.kind));
    o["in_channels"] = l.in_channels;
    o["out_channels"] = l.out_channels;
    o["kernel"] = {l.kernel_h, l.kernel_w};
    o["out"] = {l.out_h, l.out_w};
    o["timesteps"] = l.timesteps;
    if (!l.inputs.empty()) o["inputs"] = l.inputs;
    if (!l.residual.empty()) o["residual"] = l.residual;
    arr.push_back(std::move(o));
  }
  return Json{{"layers", std::move(arr)}};
}

std::vector<LayerSpec> model_from_json(const Json& j) {
  const auto& arr = get_array(j, "layers", "model");
  std::vector<LayerSpec> layers;
  for (std::size_t i = 0; i < arr.size(); ++i) {
    const std::string where = "layers[" + std::to_string(i) + "]";
    const auto& o = arr[i];
    LayerSpec l;
    l.id = get_string(o, "id", where);
    const auto kind = get_string(o, "kind", where);
    if (kind == "conv") {
      l.kind = LayerKind::kConv;
    } else if (kind == "fc") {
      l.kind = LayerKind::kFc;
    } else {
      throw ParseError(where + ".kind: unknown layer kind \"" + kind +
                       "\" (supported kinds: conv, fc)");
    }
    l.in_channels = get_int(o, "in_channels", where);
    l.out_channels = get_int(o, "out_channels", where);
    if (o.contains("kernel")) {
      std::tie(l.kernel_h, l.kernel_w) = get_pair(o, "kernel", where);
    } else if (l.kind == LayerKind::kConv) {
      throw ParseError(where + ": missing required field \"kernel\"");
    }
    if (o.contains("out")) {
      std::tie(l.out_h, l.out_w) = get_pair(o, "out", where);
    } else if (l.kind == LayerKind::kConv) {
      throw ParseError(where + ": missing required field \"out\"");
    }
    l.timesteps = get_int_or(o, "timesteps", l.timesteps, where);
    for (const char* key : {"inputs", "residual"}) {
      if (!o.contains(key)) continue;
      const auto& ids = get_array(o, key, where);
      auto& dest = std::string_view(key) == "inputs" ? l.inputs : l.residual;
      for (std::size_t k = 0; k < ids.size(); ++k) {
        if (!ids[k].is_string()) {
          throw ParseError(where + "." + key + "[" + std::to_string(k) + "]: expected a layer id");
        }
        dest.push_back(ids[k].get<std::string>());
      }
    }
    rethrow_as_parse(where, [&] {
      l.validate();
      return 0;
    });
    layers.push_back(std::move(l));
  }
  if (layers.empty()) throw ParseError("model: \"layers\" is empty");
  rethrow_as_parse("model", [&] {
    validate_model(layers);
    return 0;
  });
  return layers;
}

std::vector<LayerSpec> load_model_spec(const std::filesystem::path& path) {
  const auto j = read_json(path);
  return rethrow_as_parse(path.string(), [&] { return model_from_json(j); });
}

void save_model_spec(std::span<const LayerSpec> layers, const std::filesystem::path& path) {
  write_text(path, dump(model_to_json(layers)));
}

// ---- hardware ------------------------------------------------------------

Json hardware_to_json(const HardwareProfile& hw) {
  return Json{{"macs_per_core", hw.macs_per_core},
              {"sram_bytes_per_core", hw.sram_bytes_per_core},
              {"link_bandwidth", hw.link_bandwidth},
              {"offchip_bandwidth", hw.offchip_bandwidth},
              {"activation_reserve", hw.activation_reserve}};
}

HardwareProfile hardware_from_json(const Json& j, HardwareProfile base) {
  const std::string where = "hardware";
  if (!j.is_object()) throw ParseError(where + ": expected a JSON object");
  for (const auto& [key, value] : j.items()) {
    if (key == "macs_per_core") {
      base.macs_per_core = as_int(value, where + "." + key);
    } else if (key == "sram_bytes_per_core") {
      base.sram_bytes_per_core = as_int(value, where + "." + key);
    } else if (key == "link_bandwidth") {
      base.link_bandwidth = as_int(value, where + "." + key);
    } else if (key == "offchip_bandwidth") {
      base.offchip_bandwidth = as_int(value, where + "." + key);
    } else if (key == "activation_reserve") {
      base.activation_reserve = get_number(j, "activation_reserve", where);
    } else {
      throw ParseError(where + ": unknown field \"" + key + "\"");
    }
  }
  rethrow_as_parse(where, [&] {
    base.validate();
    return 0;
  });
  return base;
}

// ---- slices and task graphs ----------------------------------------------

Json slice_to_json(const SliceSpec& s) {
  Json colocated = Json::array();
  for (const auto& b : s.colocated) {
    colocated.push_back(Json{{"layer_index", b.layer_index},
                             {"c_range", {b.c_range.begin, b.c_range.end}},
                             {"k_range", {b.k_range.begin, b.k_range.end}}});
  }
  return Json{{"layer_index", s.layer_index},
              {"c_range", {s.c_range.begin, s.c_range.end}},
              {"k_range", {s.k_range.begin, s.k_range.end}},
              {"fp_ops", s.fp_ops},
              {"bp_ops", s.bp_ops},
              {"wg_ops", s.wg_ops},
              {"resident_weight_bytes", s.resident_weight_bytes},
              {"overflow_weight_bytes", s.overflow_weight_bytes},
              {"est_latency_cycles", s.est_latency_cycles},
              {"colocated", colocated}};
}

SliceSpec slice_from_json(const Json& j, const std::string& where) {
  SliceSpec s;
  s.layer_index = static_cast<std::size_t>(get_int(j, "layer_index", where));
  const auto c = get_pair(j, "c_range", where);
  const auto k = get_pair(j, "k_range", where);
  s.c_range = {c.first, c.second};
  s.k_range = {k.first, k.second};
  s.fp_ops = get_int(j, "fp_ops", where);
  s.bp_ops = get_int(j, "bp_ops", where);
  s.wg_ops = get_int(j, "wg_ops", where);
  s.resident_weight_bytes = get_int(j, "resident_weight_bytes", where);
  s.overflow_weight_bytes = get_int(j, "overflow_weight_bytes", where);
  s.est_latency_cycles = get_int(j, "est_latency_cycles", where);
  if (j.contains("colocated")) {
    const auto& arr = get_array(j, "colocated", where);
    for (std::size_t i = 0; i < arr.size(); ++i) {
      const std::string at = where + ".colocated[" + std::to_string(i) + "]";
      LayerBlock b;
      b.layer_index = static_cast<std::size_t>(get_int(arr[i], "layer_index", at));
      const auto bc = get_pair(arr[i], "c_range", at);
      const auto bk = get_pair(arr[i], "k_range", at);
      b.c_range = {bc.first, bc.second};
      b.k_range = {bk.first, bk.second};
      if (b.c_range.size() < 1 || b.k_range.size() < 1 || b.c_range.begin < 0 || b.k_range.begin < 0) {
        throw ParseError(at + ": channel ranges must be non-empty");
      }
      s.colocated.push_back(b);
    }
  }
  if (s.c_range.size() < 1 || s.k_range.size() < 1 || s.c_range.begin < 0 || s.k_range.begin < 0) {
    throw ParseError(where + ": channel ranges must be non-empty");
  }
  return s;
}

Json taskgraph_to_json(const TaskGraph& graph) {
  Json j;
  j["mode"] = std::string(to_string(graph.mode));
  if (graph.hardware) j["hardware"] = hardware_to_json(*graph.hardware);
  Json nodes = Json::array();
  for (const auto& n : graph.nodes) {
    Json o;
    o["id"] = n.id;
    o["multicast"] = n.multicast;
    o["compute_cycles"] = n.compute_cycles;
    o["fp_cycles"] = n.fp_cycles;
    o["bytes_in"] = n.bytes_in;
    o["bytes_out"] = n.bytes_out;
    o["degree_in"] = n.degree_in;
    o["degree_out"] = n.degree_out;
    if (n.slice) o["slice"] = slice_to_json(*n.slice);
    nodes.push_back(std::move(o));
  }
  j["nodes"] = std::move(nodes);
  Json edges = Json::array();
  for (const auto& e : graph.edges) {
    edges.push_back(Json{{"src", e.src},
                         {"dst", e.dst},
                         {"bytes", e.bytes},
                         {"kind", std::string(to_string(e.kind))}});
  }
  j["edges"] = std::move(edges);
  return j;
}

TaskGraph taskgraph_from_json(const Json& j) {
  TaskGraph g;
  rethrow_as_parse("taskgraph.mode", [&] {
    g.mode = parse_mode(get_string(j, "mode", "taskgraph"));
    return 0;
  });
  if (j.contains("hardware")) g.hardware = hardware_from_json(j["hardware"]);
  const auto& nodes = get_array(j, "nodes", "taskgraph");
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    const std::string where = "nodes[" + std::to_string(i) + "]";
    const auto& o = nodes[i];
    TaskNode n;
    const auto id = get_int(o, "id", where);
    if (id < 0) throw ParseError(where + ".id: must be >= 0");
    n.id = static_cast<NodeId>(id);
    n.multicast = get_bool(o, "multicast", where);
    n.compute_cycles = get_int(o, "compute_cycles", where);
    if (n.compute_cycles < 0) throw ParseError(where + ".compute_cycles: must be >= 0");
    n.fp_cycles = get_int_or(o, "fp_cycles",
                             g.mode == Mode::kTraining ? (n.compute_cycles + 2) / 3
                                                       : n.compute_cycles,
                             where);
    if (n.fp_cycles < 0 || n.fp_cycles > n.compute_cycles) {
      throw ParseError(where + ".fp_cycles: must lie in [0, compute_cycles]");
    }
    n.bytes_in = get_int(o, "bytes_in", where);
    n.bytes_out = get_int(o, "bytes_out", where);
    n.degree_in = get_int(o, "degree_in", where);
    n.degree_out = get_int(o, "degree_out", where);
    if (o.contains("slice")) n.slice = slice_from_json(o["slice"], where + ".slice");
    g.nodes.push_back(std::move(n));
  }
  const auto& edges = get_array(j, "edges", "taskgraph");
  for (std::size_t i = 0; i < edges.size(); ++i) {
    const std::string where = "edges[" + std::to_string(i) + "]";
    const auto& o = edges[i];
    TaskEdge e;
    const auto src = get_int(o, "src", where);
    const auto dst = get_int(o, "dst", where);
    if (src < 0 || dst < 0) throw ParseError(where + ": node ids must be >= 0");
    e.src = static_cast<NodeId>(src);
    e.dst = static_cast<NodeId>(dst);
    e.bytes = get_int(o, "bytes", where);
    if (o.contains("kind")) {
      rethrow_as_parse(where + ".kind", [&] {
        e.kind = parse_edge_kind(get_string(o, "kind", where));
        return 0;
      });
    }
    g.edges.push_back(e);
  }
  rethrow_as_parse("taskgraph", [&] {
    g.validate();
    return 0;
  });
  return g;
}

TaskGraph load_taskgraph(const std::filesystem::path& path) {
  const auto j = read_json(path);
  return rethrow_as_parse(path.string(), [&] { return taskgraph_from_json(j); });
}

void save_taskgraph(const TaskGraph& graph, const std::filesystem::path& path) {
  write_text(path, dump(taskgraph_to_json(graph)));
}

// ---- placement -----------------------------------------------------------

Json placement_to_json(const Placement& placement, const Mesh& mesh) {
  Json assign = Json::object();
  for (std::size_t i = 0; i < placement.size(); ++i) {
    assign[std::to_string(i)] = {placement[i].x, placement[i].y};
  }
  return Json{{"mesh", {mesh.width(), mesh.height()}}, {"assign", std::move(assign)}};
}

std::pair<Mesh, Placement> placement_from_json(const Json& j) {
  const auto [w, h] = get_pair(j, "mesh", "placement");
  if (w < 1 || h < 1 || w > 4096 || h > 4096) {
    throw ParseError("placement.mesh: dimensions must lie in [1, 4096]");
  }
  const Mesh mesh(static_cast<int>(w), static_cast<int>(h));
  const auto& assign = require(j, "assign", "placement");
  if (!assign.is_object()) throw ParseError("placement.assign: expected an object");
  std::vector<Coord> cells(assign.size());
  for (const auto& [key, value] : assign.items()) {
    const std::string where = "placement.assign[\"" + key + "\"]";
    std::size_t pos = 0;
    long long id = -1;
    try {
      id = std::stoll(key, &pos);
    } catch (const std::exception&) {
      pos = 0;
    }
    if (pos != key.size() || id < 0 || static_cast<std::size_t>(id) >= cells.size()) {
      throw ParseError(where + ": node ids must be 0.." + std::to_string(cells.size() - 1));
    }
    if (!value.is_array() || value.size() != 2) {
      throw ParseError(where + ": expected [x, y]");
    }
    const Coord c{static_cast<int>(as_int(value[0], where + "[0]")),
                  static_cast<int>(as_int(value[1], where + "[1]"))};
    cells[static_cast<std::size_t>(id)] = c;
  }
  Placement placement(std::move(cells));
  rethrow_as_parse("placement", [&] {
    placement.validate(mesh, placement.size());
    return 0;
  });
  return {mesh, std::move(placement)};
}

// ---- simulation ----------------------------------------------------------

Json sim_result_to_json(const SimResult& r) {
  Json j;
  j["mode"] = std::string(to_string(r.mode));
  j["pipeline"] = std::string(to_string(r.pipeline));
  j["batch_size"] = r.batch_size;
  j["cores"] = r.cores;
  j["makespan"] = r.makespan;
  j["throughput_per_kilocycle"] = r.throughput;
  j["samples_per_second"] = r.samples_per_second;
  j["mean_utilization"] = r.mean_utilization();
  j["busy_cycles"] = r.busy_cycles();
  j["packets"] = r.packets;
  j["bytes_injected"] = r.bytes_injected;
  j["bytes_delivered"] = r.bytes_delivered;
  j["max_forwarded_bytes"] = r.max_forwarded();
  j["forwarded_bytes"] = r.forwarded;
  j["node_finish"] = r.node_finish;
  Json peaks = Json::array();
  for (const auto& p : r.peak_queue) peaks.push_back({p[0], p[1], p[2], p[3]});
  j["peak_queue_depth"] = std::move(peaks);
  return j;
}

// ---- checkpoints ---------------------------------------------------------

Json matrix_to_json(const Eigen::MatrixXd& m) {
  Json data = Json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) data.push_back(m(r, c));
  }
  return Json{{"rows", m.rows()}, {"cols", m.cols()}, {"data", std::move(data)}};
}

Eigen::MatrixXd matrix_from_json(const Json& j, const std::string& where) {
  const auto rows = get_int(j, "rows", where);
  const auto cols = get_int(j, "cols", where);
  const auto& data = get_array(j, "data", where);
  if (rows < 0 || cols < 0 || static_cast<std::int64_t>(data.size()) != rows * cols) {
    throw ParseError(where + ": data length does not match rows x cols");
  }
  Eigen::MatrixXd m(rows, cols);
  std::size_t k = 0;
  for (Eigen::Index r = 0; r < rows; ++r) {
    for (Eigen::Index c = 0; c < cols; ++c, ++k) {
      if (!data[k].is_number()) throw ParseError(where + ".data: expected numbers");
      m(r, c) = data[k].get<double>();
    }
  }
  return m;
}

namespace {

Json mlp_to_json(const rl::MlpWeights& w) {
  return Json{{"w1", matrix_to_json(w.w1)},
              {"b1", matrix_to_json(w.b1)},
              {"w2", matrix_to_json(w.w2)},
              {"b2", matrix_to_json(w.b2)}};
}

rl::MlpWeights mlp_from_json(const Json& j, const std::string& where) {
  rl::MlpWeights w;
  w.w1 = matrix_from_json(require(j, "w1", where), where + ".w1");
  w.b1 = matrix_from_json(require(j, "b1", where), where + ".b1");
  w.w2 = matrix_from_json(require(j, "w2", where), where + ".w2");
  w.b2 = matrix_from_json(require(j, "b2", where), where + ".b2");
  return w;
}

}  // namespace

Json train_config_to_json(const rl::TrainConfig& c) {
  return Json{{"embed_dim", c.embed_dim},
              {"hidden", c.hidden},
              {"sigma_min", c.sigma_min},
              {"init_sigma", c.init_sigma},
              {"batch_size", c.batch_size},
              {"episodes", c.episodes},
              {"seed", c.seed},
              {"encoder_init", std::string(rl::to_string(c.encoder_init))},
              {"policy_init", std::string(rl::to_string(c.policy_init))},
              {"score_policy_mean", c.score_policy_mean},
              {"symmetry_tiebreak", c.symmetry_tiebreak},
              {"ppo",
               {{"clip_epsilon", c.ppo.clip_epsilon},
                {"epochs", c.ppo.epochs},
                {"learning_rate", c.ppo.learning_rate},
                {"max_grad_norm", c.ppo.max_grad_norm},
                {"optimizer", std::string(rl::to_string(c.ppo.optimizer))},
                {"adam_beta1", c.ppo.adam_beta1},
                {"adam_beta2", c.ppo.adam_beta2},
                {"adam_epsilon", c.ppo.adam_epsilon}}}};
}

rl::TrainConfig train_config_from_json(const Json& j) {
  const std::string where = "config";
  rl::TrainConfig c;
  c.embed_dim = static_cast<int>(get_int(j, "embed_dim", where));
  c.hidden = static_cast<int>(get_int(j, "hidden", where));
  c.sigma_min = get_number(j, "sigma_min", where);
  c.init_sigma = get_number(j, "init_sigma", where);
  c.batch_size = get_int(j, "batch_size", where);
  c.episodes = get_int(j, "episodes", where);
  const auto& seed = require(j, "seed", where);
  if (!seed.is_number_unsigned() && !seed.is_number_integer()) {
    throw ParseError(where + ".seed: expected an integer");
  }
  c.seed = seed.get<std::uint64_t>();
  rethrow_as_parse(where, [&] {
    c.encoder_init = rl::parse_encoder_init(get_string(j, "encoder_init", where));
    c.policy_init = rl::parse_policy_init(get_string(j, "policy_init", where));
    return 0;
  });
  c.score_policy_mean = get_bool(j, "score_policy_mean", where);
  c.symmetry_tiebreak = get_bool(j, "symmetry_tiebreak", where);
  const auto& p = require(j, "ppo", where);
  const std::string pw = where + ".ppo";
  c.ppo.clip_epsilon = get_number(p, "clip_epsilon", pw);
  c.ppo.epochs = static_cast<int>(get_int(p, "epochs", pw));
  c.ppo.learning_rate = get_number(p, "learning_rate", pw);
  c.ppo.max_grad_norm = get_number(p, "max_grad_norm", pw);
  rethrow_as_parse(pw, [&] {
    c.ppo.optimizer = rl::parse_optimizer(get_string(p, "optimizer", pw));
    return 0;
  });
  c.ppo.adam_beta1 = get_number(p, "adam_beta1", pw);
  c.ppo.adam_beta2 = get_number(p, "adam_beta2", pw);
  c.ppo.adam_epsilon = get_number(p, "adam_epsilon", pw);
  return c;
}

Json checkpoint_to_json(const rl::TrainResult& result, const rl::TrainConfig& config,
                        const Mesh& mesh) {
  Json j;
  j["format"] = "coreplace-checkpoint";
  j["version"] = 1;
  j["seed"] = config.seed;
  j["config"] = train_config_to_json(config);
  j["zigzag_cost"] = result.zigzag_cost;
  j["best_cost"] = result.best_cost;
  j["best_placement"] = placement_to_json(result.best_placement, mesh);
  j["actor"] = {{"sigma_min", result.actor.sigma_min},
                {"encoder", matrix_to_json(result.actor.encoder)},
                {"head", mlp_to_json(result.actor.head)}};
  j["critic"] = {{"head", mlp_to_json(result.critic.head)}};
  return j;
}

std::pair<rl::ActorParams, rl::CriticParams> checkpoint_params(const Json& j) {
  const auto& a = require(j, "actor", "checkpoint");
  rl::ActorParams actor;
  actor.sigma_min = get_number(a, "sigma_min", "checkpoint.actor");
  actor.encoder = matrix_from_json(require(a, "encoder", "checkpoint.actor"), "checkpoint.actor.encoder");
  actor.head = mlp_from_json(require(a, "head", "checkpoint.actor"), "checkpoint.actor.head");
  rl::CriticParams critic;
  critic.head = mlp_from_json(require(require(j, "critic", "checkpoint"), "head", "checkpoint.critic"),
                              "checkpoint.critic.head");
  return {std::move(actor), std::move(critic)};
}

std::string reward_curve_csv(std::span<const rl::CurvePoint> curve) {
  std::ostringstream out;
  out << "episode,mean_reward,best_cost\n";
  out << std::setprecision(10);
  for (const auto& p : curve) out << p.episode << ',' << p.mean_reward << ',' << p.best_cost << '\n';
  return out.str();
}

}  // namespace coreplace::io
