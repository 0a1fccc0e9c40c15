#include "coreplace/cli.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <sstream>

#include <CLI11.hpp>

#include "coreplace/errors.hpp"
#include "coreplace/io.hpp"
#include "coreplace/placement.hpp"

#ifndef COREPLACE_VERSION
#define COREPLACE_VERSION "0.0.0"
#endif

namespace coreplace::cli {

namespace fs = std::filesystem;
using io::Json;

std::string sha256_hex(const std::string& bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
    throw InternalError("SHA-256 digest failed");
  }
  std::ostringstream hex;
  for (unsigned int i = 0; i < len; ++i) {
    hex << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(digest[i]);
  }
  return hex.str();
}

std::string sha256_file(const fs::path& path) { return sha256_hex(io::read_text(path)); }

namespace {

std::string utc_now() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  std::ostringstream s;
  s << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return s.str();
}

std::string format_double(double v) {
  std::ostringstream s;
  s << std::setprecision(10) << v;
  return s.str();
}

// Collects what a command read and wrote, then writes manifest.json.
class Run {
 public:
  Run(std::string command, fs::path out_dir)
      : command_(std::move(command)),
        out_dir_(std::move(out_dir)),
        started_(utc_now()),
        clock_(std::chrono::steady_clock::now()) {}

  const fs::path& dir() const { return out_dir_; }

  fs::path input(const std::string& role, const fs::path& path) {
    if (!fs::exists(path)) throw ValidationError("input file not found: " + path.string());
    const auto abs = fs::absolute(path).lexically_normal();
    inputs_.push_back({{"role", role}, {"path", abs.string()}, {"sha256", sha256_file(abs)}});
    return abs;
  }

  void write(const std::string& name, const std::string& text) {
    io::write_text(out_dir_ / name, text);
    outputs_.push_back({{"path", name}, {"sha256", sha256_hex(text)}});
  }

  void finish(const std::vector<std::string>& argv, Json config, Json summary) {
    const double elapsed =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - clock_).count();
    Json m;
    m["tool"] = "coreplace";
    m["version"] = COREPLACE_VERSION;
    m["command"] = command_;
    m["argv"] = argv;
    m["config"] = std::move(config);
    m["inputs"] = inputs_;
    m["outputs"] = outputs_;
    m["summary"] = std::move(summary);
    m["started_utc"] = started_;
    m["finished_utc"] = utc_now();
    m["elapsed_seconds"] = elapsed;
    io::write_text(out_dir_ / kManifestName, io::dump(m));
  }

 private:
  std::string command_;
  fs::path out_dir_;
  std::string started_;
  std::chrono::steady_clock::time_point clock_;
  Json inputs_ = Json::array();
  Json outputs_ = Json::array();
};

// ---- hardware ------------------------------------------------------------

struct HardwareFlags {
  std::string profile;
  std::optional<std::int64_t> macs;
  std::optional<std::int64_t> sram;
  std::optional<std::int64_t> link;
  std::optional<std::int64_t> offchip;
  std::optional<double> reserve;

  void add(CLI::App* app) {
    app->add_option("--hw", profile,
                    std::string("Hardware profile JSON (default: $") + kHardwareEnv + ")");
    app->add_option("--macs", macs, "MACs per core (perfect square)");
    app->add_option("--sram-bytes", sram, "SRAM bytes per core");
    app->add_option("--link-bandwidth", link, "Mesh link bandwidth, bytes/cycle");
    app->add_option("--offchip-bandwidth", offchip, "Off-chip bandwidth, bytes/cycle");
    app->add_option("--activation-reserve", reserve, "SRAM fraction reserved for activations");
  }

  HardwareProfile resolve(Run& run) const {
    HardwareProfile hw;
    std::string path = profile;
    if (path.empty()) {
      if (const char* env = std::getenv(kHardwareEnv); env != nullptr && *env != '\0') path = env;
    }
    if (!path.empty()) {
      const auto abs = run.input("hardware", path);
      hw = io::hardware_from_json(io::read_json(abs), hw);
    }
    if (macs) hw.macs_per_core = *macs;
    if (sram) hw.sram_bytes_per_core = *sram;
    if (link) hw.link_bandwidth = *link;
    if (offchip) hw.offchip_bandwidth = *offchip;
    if (reserve) hw.activation_reserve = *reserve;
    hw.validate();
    return hw;
  }
};

// ---- placement metrics ---------------------------------------------------

Json placement_metrics(const TaskGraph& graph, const Placement& placement, const Mesh& mesh,
                       const std::string& engine) {
  const auto cost = communication_cost(graph, placement);
  const auto zigzag = communication_cost(graph, place_zigzag(graph, mesh));
  const auto hist = hop_histogram(graph, placement);
  const auto zhist = hop_histogram(graph, place_zigzag(graph, mesh));
  const auto loads = directional_loads(graph, placement, mesh);
  const auto fwd = forwarded_bytes(loads);
  Json h = Json::object();
  for (const auto& [hop, count] : hist.edges_per_hop) h[std::to_string(hop)] = count;
  Json m;
  m["engine"] = engine;
  m["mesh"] = {mesh.width(), mesh.height()};
  m["nodes"] = graph.size();
  m["mode"] = std::string(to_string(graph.mode));
  m["communication_cost"] = cost;
  m["zigzag_cost"] = zigzag;
  m["reduction_vs_zigzag_pct"] =
      zigzag > 0 ? 100.0 * static_cast<double>(zigzag - cost) / static_cast<double>(zigzag) : 0.0;
  m["mean_hops"] = hist.mean_hops;
  m["mean_hops_weighted"] = hist.mean_hops_weighted;
  m["zigzag_mean_hops"] = zhist.mean_hops;
  m["zigzag_mean_hops_weighted"] = zhist.mean_hops_weighted;
  m["hop_histogram"] = std::move(h);
  m["max_forwarded_bytes"] = fwd.empty() ? 0 : *std::max_element(fwd.begin(), fwd.end());
  Json per_core = Json::array();
  for (const auto& l : loads) per_core.push_back({l.left, l.right, l.up, l.down});
  m["directional_loads"] = std::move(per_core);
  if (graph.hardware) m["hardware"] = io::hardware_to_json(*graph.hardware);
  return m;
}

void check_fits(const TaskGraph& graph, const Mesh& mesh) {
  if (graph.size() > static_cast<std::size_t>(mesh.size())) {
    throw ValidationError("mesh " + std::to_string(mesh.width()) + "x" +
                          std::to_string(mesh.height()) + " has " + std::to_string(mesh.size()) +
                          " cores but the task graph has " + std::to_string(graph.size()) +
                          " nodes");
  }
}

std::string mesh_text(const Mesh& mesh) {
  return std::to_string(mesh.width()) + "x" + std::to_string(mesh.height());
}

void write_placement_outputs(Run& run, const TaskGraph& graph, const Placement& placement,
                             const Mesh& mesh, const Json& metrics) {
  run.write("placement.json", io::dump(io::placement_to_json(placement, mesh)));
  run.write("metrics.json", io::dump(metrics));
  run.write("heatmap.csv",
            heatmap_csv(mesh, forwarded_bytes(directional_loads(graph, placement, mesh))));
}

Json placement_summary(const Json& metrics) {
  return Json{{"communication_cost", metrics["communication_cost"]},
              {"zigzag_cost", metrics["zigzag_cost"]},
              {"reduction_vs_zigzag_pct", metrics["reduction_vs_zigzag_pct"]},
              {"mean_hops", metrics["mean_hops"]},
              {"mean_hops_weighted", metrics["mean_hops_weighted"]},
              {"max_forwarded_bytes", metrics["max_forwarded_bytes"]}};
}

// ---- commands --------------------------------------------------------------

struct PartitionArgs {
  std::string model;
  std::int64_t cores = 0;
  std::string mode = "inference";
  std::string strategy = "contiguous";
  bool no_fuse = false;
  HardwareFlags hw;
  std::string out;
};

void cmd_partition(const PartitionArgs& a, std::ostream& out) {
  Run run("partition", a.out);
  const auto model_path = run.input("model", a.model);
  const auto hw = a.hw.resolve(run);
  const auto mode = parse_mode(a.mode);
  PartitionOptions options;
  options.strategy = parse_partition_strategy(a.strategy);
  options.fuse_small_layers = !a.no_fuse;

  const auto layers = io::load_model_spec(model_path);
  const auto slices = partition_model(layers, hw, a.cores, mode, options);
  const auto graph = build_taskgraph(slices, layers, hw, mode);
  run.write("taskgraph.json", io::dump(io::taskgraph_to_json(graph)));

  std::ostringstream csv;
  csv << "node,layer,c_begin,c_end,k_begin,k_end,blocks,fp_ops,bp_ops,wg_ops,"
         "resident_weight_bytes,overflow_weight_bytes,est_latency_cycles\n";
  for (std::size_t i = 0; i < slices.size(); ++i) {
    const auto& s = slices[i];
    csv << i << ',' << layers[s.layer_index].id << ',' << s.c_range.begin << ',' << s.c_range.end
        << ',' << s.k_range.begin << ',' << s.k_range.end << ',' << s.blocks().size() << ','
        << s.fp_ops << ',' << s.bp_ops << ',' << s.wg_ops << ',' << s.resident_weight_bytes << ','
        << s.overflow_weight_bytes << ',' << s.est_latency_cycles << '\n';
  }
  run.write("slices.csv", csv.str());

  Json config{{"cores", a.cores},
              {"mode", std::string(to_string(mode))},
              {"strategy", std::string(to_string(options.strategy))},
              {"fuse_small_layers", options.fuse_small_layers},
              {"hardware", io::hardware_to_json(hw)}};
  std::vector<std::string> argv{"partition",
                                model_path.string(),
                                "--cores",
                                std::to_string(a.cores),
                                "--mode",
                                std::string(to_string(mode)),
                                "--strategy",
                                std::string(to_string(options.strategy)),
                                "--macs",
                                std::to_string(hw.macs_per_core),
                                "--sram-bytes",
                                std::to_string(hw.sram_bytes_per_core),
                                "--link-bandwidth",
                                std::to_string(hw.link_bandwidth),
                                "--offchip-bandwidth",
                                std::to_string(hw.offchip_bandwidth),
                                "--activation-reserve",
                                format_double(hw.activation_reserve)};
  if (!options.fuse_small_layers) argv.push_back("--no-fuse");
  const double imbalance = latency_imbalance(slices);
  Json summary{{"nodes", graph.size()},
               {"edges", graph.edges.size()},
               {"total_edge_bytes", total_edge_bytes(graph)},
               {"latency_imbalance", imbalance}};
  run.finish(argv, config, summary);
  out << "partition: " << graph.size() << " nodes, " << graph.edges.size()
      << " edges, latency max/min " << format_double(imbalance) << " -> "
      << (run.dir() / "taskgraph.json").string() << '\n';
}

struct PlaceArgs {
  std::string graph;
  std::string mesh;
  std::string engine = "zigzag";
  std::uint64_t seed = 0;
  std::int64_t iters = 1000;
  std::string out;
};

void cmd_place(const PlaceArgs& a, std::ostream& out) {
  Run run("place", a.out);
  const auto graph_path = run.input("taskgraph", a.graph);
  const auto graph = io::load_taskgraph(graph_path);
  const Mesh mesh = parse_mesh(a.mesh);
  check_fits(graph, mesh);
  EngineConfig config;
  config.engine = parse_engine(a.engine);
  config.seed = a.seed;
  config.iterations = a.iters;
  if (config.engine == Engine::kRandom && config.iterations < 1) {
    throw ValidationError("--iters must be >= 1 for the random engine");
  }

  Placement placement;
  if (config.engine == Engine::kRandom) {
    const auto rs = place_random_search(graph, mesh, config.seed, config.iterations);
    placement = rs.placement;
    std::ostringstream trace;
    trace << "sample,best_cost\n";
    for (std::size_t i = 0; i < rs.trace.size(); ++i) trace << i + 1 << ',' << rs.trace[i] << '\n';
    run.write("trace.csv", trace.str());
  } else {
    placement = place(graph, mesh, config);
  }
  placement.validate(mesh, graph.size());
  const auto engine = std::string(to_string(config.engine));
  const auto metrics = placement_metrics(graph, placement, mesh, engine);
  write_placement_outputs(run, graph, placement, mesh, metrics);

  Json cfg{{"mesh", {mesh.width(), mesh.height()}},
           {"engine", engine},
           {"seed", config.seed},
           {"iterations", config.iterations}};
  run.finish({"place", graph_path.string(), "--mesh", mesh_text(mesh), "--engine", engine,
              "--seed", std::to_string(config.seed), "--iters",
              std::to_string(config.iterations)},
             cfg, placement_summary(metrics));
  out << "place[" << engine << "]: cost " << metrics["communication_cost"].get<std::int64_t>()
      << " (zigzag " << metrics["zigzag_cost"].get<std::int64_t>() << ", "
      << format_double(metrics["reduction_vs_zigzag_pct"].get<double>()) << "% lower)\n";
}

struct TrainArgs {
  std::string graph;
  std::string mesh;
  rl::TrainConfig config;
  std::string optimizer = "sgd";
  std::string encoder = "random";
  std::string policy_init = "zigzag";
  bool no_mean_scoring = false;
  bool no_symmetry = false;
  std::int64_t log_every = 0;
  std::string out;
};

void cmd_train(TrainArgs a, std::ostream& out, std::ostream& err) {
  Run run("train", a.out);
  const auto graph_path = run.input("taskgraph", a.graph);
  const auto graph = io::load_taskgraph(graph_path);
  const Mesh mesh = parse_mesh(a.mesh);
  check_fits(graph, mesh);
  auto& c = a.config;
  c.ppo.optimizer = rl::parse_optimizer(a.optimizer);
  c.encoder_init = rl::parse_encoder_init(a.encoder);
  c.policy_init = rl::parse_policy_init(a.policy_init);
  c.score_policy_mean = !a.no_mean_scoring;
  c.symmetry_tiebreak = !a.no_symmetry;

  rl::EpisodeCallback progress;
  if (a.log_every > 0) {
    progress = [&](const rl::CurvePoint& p) {
      if (p.episode % a.log_every == 0) {
        err << "episode " << p.episode << " mean_reward " << format_double(p.mean_reward)
            << " best_cost " << p.best_cost << '\n';
      }
    };
  }
  const auto result = rl::train(graph, mesh, c, progress);
  for (const auto& w : result.warnings) err << "warning: " << w << '\n';

  const auto metrics = placement_metrics(graph, result.best_placement, mesh, "rl");
  write_placement_outputs(run, graph, result.best_placement, mesh, metrics);
  run.write("checkpoint.json", io::dump(io::checkpoint_to_json(result, c, mesh)));
  run.write("reward_curve.csv", io::reward_curve_csv(result.curve));

  auto cfg = io::train_config_to_json(c);
  cfg["mesh"] = {mesh.width(), mesh.height()};
  std::vector<std::string> argv{"train",
                                graph_path.string(),
                                "--mesh",
                                mesh_text(mesh),
                                "--episodes",
                                std::to_string(c.episodes),
                                "--seed",
                                std::to_string(c.seed),
                                "--batch",
                                std::to_string(c.batch_size),
                                "--lr",
                                format_double(c.ppo.learning_rate),
                                "--clip",
                                format_double(c.ppo.clip_epsilon),
                                "--ppo-epochs",
                                std::to_string(c.ppo.epochs),
                                "--grad-clip",
                                format_double(c.ppo.max_grad_norm),
                                "--optimizer",
                                std::string(rl::to_string(c.ppo.optimizer)),
                                "--embed",
                                std::to_string(c.embed_dim),
                                "--hidden",
                                std::to_string(c.hidden),
                                "--sigma-min",
                                format_double(c.sigma_min),
                                "--init-sigma",
                                format_double(c.init_sigma),
                                "--encoder",
                                std::string(rl::to_string(c.encoder_init)),
                                "--policy-init",
                                std::string(rl::to_string(c.policy_init))};
  if (!c.score_policy_mean) argv.push_back("--no-mean-scoring");
  if (!c.symmetry_tiebreak) argv.push_back("--no-symmetry-tiebreak");
  auto summary = placement_summary(metrics);
  summary["episodes"] = result.curve.size();
  summary["warnings"] = result.warnings;
  run.finish(argv, cfg, summary);
  out << "train: best cost " << result.best_cost << " (zigzag " << result.zigzag_cost << ", "
      << format_double(metrics["reduction_vs_zigzag_pct"].get<double>()) << "% lower)\n";
}

struct SimulateArgs {
  std::string graph;
  std::string placement;
  std::string pipeline = "layerwise";
  std::optional<std::string> mode;
  std::int64_t batch = 8;
  std::optional<std::int64_t> bandwidth;
  double tile_fraction = 1.0 / 16.0;
  std::int64_t packet_bytes = 64;
  double clock_mhz = 1000.0;
  std::int64_t bucket = 0;
  std::string out;
};

void cmd_simulate(const SimulateArgs& a, std::ostream& out) {
  Run run("simulate", a.out);
  const auto graph_path = run.input("taskgraph", a.graph);
  const auto placement_path = run.input("placement", a.placement);
  const auto graph = io::load_taskgraph(graph_path);
  const auto [mesh, placement] = io::placement_from_json(io::read_json(placement_path));
  if (placement.size() != graph.size()) {
    throw ValidationError("placement assigns " + std::to_string(placement.size()) +
                          " nodes but the task graph has " + std::to_string(graph.size()));
  }
  SimConfig config;
  config.pipeline = parse_pipeline(a.pipeline);
  if (a.mode) config.mode = parse_mode(*a.mode);
  config.batch_size = a.batch;
  config.link_bandwidth =
      a.bandwidth.value_or(graph.hardware ? graph.hardware->link_bandwidth : config.link_bandwidth);
  config.tile_fraction = a.tile_fraction;
  config.packet_bytes = a.packet_bytes;
  config.clock_mhz = a.clock_mhz;
  config.validate();
  if (a.bucket < 0) throw ValidationError("--bucket must be >= 0");

  const auto result = simulate(graph, placement, mesh, config);
  const std::int64_t bucket =
      a.bucket > 0 ? a.bucket : std::max<std::int64_t>(1, (result.makespan + 199) / 200);
  auto summary = io::sim_result_to_json(result);
  summary["link_bandwidth"] = config.link_bandwidth;
  summary["tile_fraction"] = config.tile_fraction;
  summary["packet_bytes"] = config.packet_bytes;
  summary["clock_mhz"] = config.clock_mhz;
  summary["waveform_bucket"] = bucket;
  if (graph.hardware) summary["hardware"] = io::hardware_to_json(*graph.hardware);
  run.write("sim_result.json", io::dump(summary));
  run.write("waveform.csv", waveform_csv(utilization_waveform(result, bucket)));
  run.write("heatmap.csv", heatmap_csv(mesh, result.forwarded));

  const auto mode = std::string(to_string(result.mode));
  Json cfg{{"pipeline", std::string(to_string(config.pipeline))},
           {"mode", mode},
           {"batch_size", config.batch_size},
           {"link_bandwidth", config.link_bandwidth},
           {"tile_fraction", config.tile_fraction},
           {"packet_bytes", config.packet_bytes},
           {"clock_mhz", config.clock_mhz},
           {"bucket", bucket}};
  run.finish({"simulate", graph_path.string(), placement_path.string(), "--pipeline",
              std::string(to_string(config.pipeline)), "--mode", mode, "--batch",
              std::to_string(config.batch_size), "--bandwidth",
              std::to_string(config.link_bandwidth), "--tile-fraction",
              format_double(config.tile_fraction), "--packet-bytes",
              std::to_string(config.packet_bytes), "--clock-mhz", format_double(config.clock_mhz),
              "--bucket", std::to_string(bucket)},
             cfg,
             Json{{"makespan", result.makespan},
                  {"throughput_per_kilocycle", result.throughput},
                  {"mean_utilization", result.mean_utilization()},
                  {"max_forwarded_bytes", result.max_forwarded()}});
  out << "simulate[" << to_string(config.pipeline) << "]: makespan " << result.makespan
      << " cycles, throughput " << format_double(result.throughput)
      << " samples/kcycle, utilization " << format_double(result.mean_utilization()) << '\n';
}

// ---- report ----------------------------------------------------------------

struct RunRecord {
  fs::path dir;
  Json manifest;
};

std::vector<RunRecord> collect_runs(const std::vector<std::string>& roots) {
  std::vector<fs::path> dirs;
  for (const auto& root : roots) {
    const fs::path r(root);
    if (!fs::is_directory(r)) throw ValidationError("not a directory: " + root);
    if (fs::exists(r / kManifestName)) dirs.push_back(r);
    for (const auto& entry : fs::recursive_directory_iterator(r)) {
      if (entry.is_directory() && fs::exists(entry.path() / kManifestName)) {
        dirs.push_back(entry.path());
      }
    }
  }
  std::sort(dirs.begin(), dirs.end());
  dirs.erase(std::unique(dirs.begin(), dirs.end()), dirs.end());
  std::vector<RunRecord> runs;
  for (const auto& d : dirs) runs.push_back({d, io::read_json(d / kManifestName)});
  return runs;
}

std::string input_digest(const Json& manifest, const std::string& role) {
  for (const auto& in : manifest.value("inputs", Json::array())) {
    if (in.value("role", "") == role) return in.value("sha256", "");
  }
  return "";
}

std::string output_digest(const Json& manifest, const std::string& name) {
  for (const auto& o : manifest.value("outputs", Json::array())) {
    if (o.value("path", "") == name) return o.value("sha256", "");
  }
  return "";
}

int engine_rank(const std::string& engine) {
  static const std::vector<std::string> order{"zigzag", "snake", "random", "oracle", "rl"};
  const auto it = std::find(order.begin(), order.end(), engine);
  return static_cast<int>(it - order.begin());
}

std::string csv_field(const Json& v) {
  if (v.is_null()) return "";
  if (v.is_string()) return v.get<std::string>();
  if (v.is_number_float()) return format_double(v.get<double>());
  return v.dump();
}

std::string build_report(const std::vector<RunRecord>& runs) {
  struct Row {
    std::string graph;
    std::string engine;
    std::string run;
    Json metrics;
    std::vector<Json> sims;
  };
  std::vector<Row> rows;
  std::map<std::string, std::size_t> by_placement;
  for (const auto& r : runs) {
    const auto command = r.manifest.value("command", "");
    if (command != "place" && command != "train") continue;
    const auto metrics = io::read_json(r.dir / "metrics.json");
    by_placement[output_digest(r.manifest, "placement.json")] = rows.size();
    rows.push_back({input_digest(r.manifest, "taskgraph"), metrics.value("engine", ""),
                    r.dir.string(), metrics, {}});
  }
  for (const auto& r : runs) {
    if (r.manifest.value("command", "") != "simulate") continue;
    const auto it = by_placement.find(input_digest(r.manifest, "placement"));
    if (it == by_placement.end()) continue;
    rows[it->second].sims.push_back(io::read_json(r.dir / "sim_result.json"));
  }
  std::stable_sort(rows.begin(), rows.end(), [](const Row& a, const Row& b) {
    if (a.graph != b.graph) return a.graph < b.graph;
    if (engine_rank(a.engine) != engine_rank(b.engine)) {
      return engine_rank(a.engine) < engine_rank(b.engine);
    }
    return a.run < b.run;
  });

  std::ostringstream csv;
  csv << "graph_sha256,mode,mesh,engine,run,communication_cost,zigzag_cost,"
         "reduction_vs_zigzag_pct,mean_hops,mean_hops_weighted,max_forwarded_bytes,"
         "pipeline,batch_size,makespan,throughput_per_kilocycle,mean_utilization\n";
  for (const auto& row : rows) {
    const auto& m = row.metrics;
    const auto mesh = m.contains("mesh") ? csv_field(m["mesh"][0]) + "x" + csv_field(m["mesh"][1])
                                         : std::string();
    std::ostringstream prefix;
    prefix << row.graph.substr(0, 16) << ',' << csv_field(m.value("mode", Json())) << ',' << mesh
           << ',' << row.engine << ',' << row.run << ','
           << csv_field(m.value("communication_cost", Json())) << ','
           << csv_field(m.value("zigzag_cost", Json())) << ','
           << csv_field(m.value("reduction_vs_zigzag_pct", Json())) << ','
           << csv_field(m.value("mean_hops", Json())) << ','
           << csv_field(m.value("mean_hops_weighted", Json())) << ','
           << csv_field(m.value("max_forwarded_bytes", Json()));
    if (row.sims.empty()) {
      csv << prefix.str() << ",,,,,\n";
      continue;
    }
    for (const auto& s : row.sims) {
      csv << prefix.str() << ',' << csv_field(s.value("pipeline", Json())) << ','
          << csv_field(s.value("batch_size", Json())) << ','
          << csv_field(s.value("makespan", Json())) << ','
          << csv_field(s.value("throughput_per_kilocycle", Json())) << ','
          << csv_field(s.value("mean_utilization", Json())) << '\n';
    }
  }
  return csv.str();
}

struct ReportArgs {
  std::vector<std::string> dirs;
  std::string out;
};

void cmd_report(const ReportArgs& a, std::ostream& out) {
  const auto runs = collect_runs(a.dirs);
  const auto table = build_report(runs);
  if (a.out.empty()) {
    out << table;
    return;
  }
  Run run("report", a.out);
  for (const auto& r : runs) run.input("manifest", r.dir / kManifestName);
  run.write("comparison.csv", table);
  std::vector<std::string> argv{"report"};
  for (const auto& d : a.dirs) argv.push_back(fs::absolute(d).lexically_normal().string());
  run.finish(argv, Json{{"runs", runs.size()}}, Json{{"rows", std::count(table.begin(), table.end(), '\n') - 1}});
  out << "report: " << runs.size() << " runs -> " << (run.dir() / "comparison.csv").string()
      << '\n';
}

// ---- replay ----------------------------------------------------------------

struct ReplayArgs {
  std::string manifest;
  std::string out;
};

std::vector<std::string> replay_args(const ReplayArgs& a) {
  const auto m = io::read_json(a.manifest);
  if (!m.contains("argv") || !m["argv"].is_array() || m["argv"].empty()) {
    throw ParseError("manifest: missing \"argv\"");
  }
  for (const auto& in : m.value("inputs", Json::array())) {
    const auto path = in.value("path", "");
    if (!fs::exists(path)) throw ValidationError("replay input missing: " + path);
    if (sha256_file(path) != in.value("sha256", "")) {
      throw ValidationError("replay input changed since the recorded run: " + path);
    }
  }
  auto args = m["argv"].get<std::vector<std::string>>();
  args.push_back("--out");
  args.push_back(a.out);
  return args;
}

int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

int run_parsed(CLI::App& app, const std::vector<std::string>& args, std::ostream& out,
               std::ostream& err) {
  std::vector<std::string> storage{"coreplace"};
  storage.insert(storage.end(), args.begin(), args.end());
  std::vector<const char*> argv;
  for (const auto& s : storage) argv.push_back(s.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::CallForVersion&) {
    out << COREPLACE_VERSION << '\n';
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "{\"error\": \"usage\", \"exit_code\": 1, \"message\": "
        << Json(std::string(e.what())).dump() << "}\n";
    return kExitUsage;
  }
  return -1;
}

int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Partition, place and simulate spiking networks on 2D-mesh many-core chips",
               "coreplace"};
  app.set_version_flag("--version", std::string(COREPLACE_VERSION));
  app.require_subcommand(1);

  PartitionArgs pa;
  auto* partition = app.add_subcommand("partition", "Partition a model into a task graph");
  partition->add_option("model", pa.model, "Model spec JSON")->required();
  partition->add_option("--cores", pa.cores, "Number of logical cores")->required();
  partition->add_option("--mode", pa.mode, "inference|training");
  partition->add_option("--strategy", pa.strategy, "contiguous|per-layer");
  partition->add_flag("--no-fuse", pa.no_fuse, "per-layer: give every layer its own cores");
  pa.hw.add(partition);
  partition->add_option("--out,-o", pa.out, "Output directory")->required();

  PlaceArgs pl;
  auto* place_cmd = app.add_subcommand("place", "Place a task graph with a baseline engine");
  place_cmd->add_option("taskgraph", pl.graph, "Task graph JSON")->required();
  place_cmd->add_option("--mesh", pl.mesh, "Mesh size WxH")->required();
  place_cmd->add_option("--engine", pl.engine, "zigzag|snake|random|oracle");
  place_cmd->add_option("--seed", pl.seed, "Random seed");
  place_cmd->add_option("--iters", pl.iters, "Random-search samples");
  place_cmd->add_option("--out,-o", pl.out, "Output directory")->required();

  TrainArgs ta;
  auto* train_cmd = app.add_subcommand("train", "Train the PPO placement policy");
  train_cmd->add_option("taskgraph", ta.graph, "Task graph JSON")->required();
  train_cmd->add_option("--mesh", ta.mesh, "Mesh size WxH")->required();
  train_cmd->add_option("--episodes", ta.config.episodes, "Episode budget");
  train_cmd->add_option("--seed", ta.config.seed, "Random seed");
  train_cmd->add_option("--batch", ta.config.batch_size, "Placements sampled per episode");
  train_cmd->add_option("--lr", ta.config.ppo.learning_rate, "Learning rate");
  train_cmd->add_option("--clip", ta.config.ppo.clip_epsilon, "Surrogate ratio clip");
  train_cmd->add_option("--ppo-epochs", ta.config.ppo.epochs, "Passes over each batch");
  train_cmd->add_option("--grad-clip", ta.config.ppo.max_grad_norm, "Gradient-norm clip");
  train_cmd->add_option("--optimizer", ta.optimizer, "sgd|adam");
  train_cmd->add_option("--embed", ta.config.embed_dim, "Graph embedding width");
  train_cmd->add_option("--hidden", ta.config.hidden, "Hidden layer width");
  train_cmd->add_option("--sigma-min", ta.config.sigma_min, "Standard deviation floor");
  train_cmd->add_option("--init-sigma", ta.config.init_sigma, "Initial standard deviation");
  train_cmd->add_option("--encoder", ta.encoder, "random|autoencoder");
  train_cmd->add_option("--policy-init", ta.policy_init, "zigzag|random");
  train_cmd->add_flag("--no-mean-scoring", ta.no_mean_scoring,
                      "Do not score the policy mean each episode");
  train_cmd->add_flag("--no-symmetry-tiebreak", ta.no_symmetry,
                      "Keep the best placement as sampled");
  train_cmd->add_option("--log-every", ta.log_every, "Progress line every N episodes");
  train_cmd->add_option("--out,-o", ta.out, "Output directory")->required();

  SimulateArgs sa;
  auto* sim_cmd = app.add_subcommand("simulate", "Simulate a placed task graph on the NoC");
  sim_cmd->add_option("taskgraph", sa.graph, "Task graph JSON")->required();
  sim_cmd->add_option("placement", sa.placement, "Placement JSON")->required();
  sim_cmd->add_option("--pipeline", sa.pipeline, "layerwise|fpdeep");
  sim_cmd->add_option("--mode", sa.mode, "inference|training (default: the graph's)");
  sim_cmd->add_option("--batch", sa.batch, "Samples per batch");
  sim_cmd->add_option("--bandwidth", sa.bandwidth, "Link bandwidth, bytes/cycle");
  sim_cmd->add_option("--tile-fraction", sa.tile_fraction, "fpdeep input fraction per tile");
  sim_cmd->add_option("--packet-bytes", sa.packet_bytes, "Packet payload bytes");
  sim_cmd->add_option("--clock-mhz", sa.clock_mhz, "Clock for samples/second");
  sim_cmd->add_option("--bucket", sa.bucket, "Waveform bucket in cycles (0: makespan/200)");
  sim_cmd->add_option("--out,-o", sa.out, "Output directory")->required();

  ReportArgs ra;
  auto* report = app.add_subcommand("report", "Compare runs in one or more directories");
  report->add_option("dirs", ra.dirs, "Run directories or their parents")->required();
  report->add_option("--out,-o", ra.out, "Write comparison.csv here instead of stdout");

  ReplayArgs rp;
  auto* replay = app.add_subcommand("replay", "Re-run the command recorded in a manifest");
  replay->add_option("manifest", rp.manifest, "manifest.json of an earlier run")->required();
  replay->add_option("--out,-o", rp.out, "Output directory")->required();

  if (const int code = run_parsed(app, args, out, err); code >= 0) return code;

  if (partition->parsed()) cmd_partition(pa, out);
  if (place_cmd->parsed()) cmd_place(pl, out);
  if (train_cmd->parsed()) cmd_train(ta, out, err);
  if (sim_cmd->parsed()) cmd_simulate(sa, out);
  if (report->parsed()) cmd_report(ra, out);
  if (replay->parsed()) {
    const auto replay_argv = replay_args(rp);
    if (replay_argv.front() == "replay") throw ValidationError("manifest records a replay");
    return dispatch(replay_argv, out, err);
  }
  return kExitOk;
}

void report_error(std::ostream& err, const char* kind, int code, const std::string& message) {
  err << "{\"error\": \"" << kind << "\", \"exit_code\": " << code
      << ", \"message\": " << Json(message).dump() << "}\n";
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  try {
    return dispatch(args, out, err);
  } catch (const ValidationError& e) {
    report_error(err, "validation", kExitValidation, e.what());
    return kExitValidation;
  } catch (const fs::filesystem_error& e) {
    report_error(err, "validation", kExitValidation, e.what());
    return kExitValidation;
  } catch (const std::exception& e) {
    report_error(err, "internal", kExitInternal, e.what());
    return kExitInternal;
  }
}

}  // namespace coreplace::cli
