#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "coreplace/cli.hpp"
#include "coreplace/errors.hpp"
#include "coreplace/io.hpp"
#include "coreplace/placement.hpp"
#include "coreplace/rl/trainer.hpp"
#include "coreplace/sim.hpp"

namespace py = pybind11;
using namespace coreplace;
using io::Json;

// Documents cross the boundary as JSON text; the Python side turns them into
// dicts with the json module.

namespace {

Json parse(const std::string& text, const char* what) { return io::parse_json(text, what); }

std::string placement_text(const Placement& p, const Mesh& mesh) {
  return io::placement_to_json(p, mesh).dump();
}

std::string partition(const std::string& model, std::int64_t cores, const std::string& mode,
                      const std::string& hardware, const std::string& strategy) {
  const auto layers = io::model_from_json(parse(model, "model"));
  const auto hw = hardware.empty() ? HardwareProfile{} : io::hardware_from_json(parse(hardware, "hardware"));
  const auto m = parse_mode(mode);
  PartitionOptions options;
  options.strategy = parse_partition_strategy(strategy);
  const auto slices = partition_model(layers, hw, cores, m, options);
  return io::taskgraph_to_json(build_taskgraph(slices, layers, hw, m)).dump();
}

std::string place_graph(const std::string& graph, const std::string& mesh, const std::string& engine,
                        std::uint64_t seed, std::int64_t iterations) {
  const auto g = io::taskgraph_from_json(parse(graph, "task graph"));
  const auto m = parse_mesh(mesh);
  EngineConfig c;
  c.engine = parse_engine(engine);
  c.seed = seed;
  c.iterations = iterations;
  return placement_text(place(g, m, c), m);
}

std::int64_t cost(const std::string& graph, const std::string& placement) {
  const auto g = io::taskgraph_from_json(parse(graph, "task graph"));
  const auto [mesh, p] = io::placement_from_json(parse(placement, "placement"));
  return communication_cost(g, p);
}

py::dict metrics(const std::string& graph, const std::string& placement) {
  const auto g = io::taskgraph_from_json(parse(graph, "task graph"));
  const auto [mesh, p] = io::placement_from_json(parse(placement, "placement"));
  const auto h = hop_histogram(g, p);
  const auto loads = directional_loads(g, p, mesh);
  py::list per_core;
  for (const auto& l : loads) per_core.append(py::make_tuple(l.left, l.right, l.up, l.down));
  py::dict out;
  out["communication_cost"] = communication_cost(g, p);
  out["mean_hops"] = h.mean_hops;
  out["mean_hops_weighted"] = h.mean_hops_weighted;
  out["max_forwarded_bytes"] = peak_forwarded(g, p, mesh);
  out["directional_loads"] = per_core;
  return out;
}

py::dict train(const std::string& graph, const std::string& mesh, const std::string& config) {
  const auto g = io::taskgraph_from_json(parse(graph, "task graph"));
  const auto m = parse_mesh(mesh);
  const auto c = io::train_config_from_json(parse(config, "train config"));
  rl::TrainResult r;
  {
    py::gil_scoped_release release;
    r = rl::train(g, m, c);
  }
  py::list curve;
  for (const auto& p : r.curve) curve.append(py::make_tuple(p.episode, p.mean_reward, p.best_cost));
  py::dict out;
  out["placement"] = placement_text(r.best_placement, m);
  out["best_cost"] = r.best_cost;
  out["zigzag_cost"] = r.zigzag_cost;
  out["curve"] = curve;
  out["checkpoint"] = io::checkpoint_to_json(r, c, m).dump();
  return out;
}

std::string simulate_run(const std::string& graph, const std::string& placement,
                         const std::string& pipeline, std::int64_t batch, std::int64_t bandwidth,
                         double tile_fraction) {
  const auto g = io::taskgraph_from_json(parse(graph, "task graph"));
  const auto [mesh, p] = io::placement_from_json(parse(placement, "placement"));
  SimConfig c;
  c.pipeline = parse_pipeline(pipeline);
  c.batch_size = batch;
  c.tile_fraction = tile_fraction;
  if (bandwidth > 0) {
    c.link_bandwidth = bandwidth;
  } else if (g.hardware) {
    c.link_bandwidth = g.hardware->link_bandwidth;
  }
  SimResult r;
  {
    py::gil_scoped_release release;
    r = simulate(g, p, mesh, c);
  }
  return io::sim_result_to_json(r).dump();
}

py::tuple run_cli(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  return py::make_tuple(code, out.str(), err.str());
}

}  // namespace

PYBIND11_MODULE(_coreplace, m) {
  m.doc() = "Partitioning, placement and NoC simulation for spiking networks on mesh chips";

  auto validation = py::register_exception<ValidationError>(m, "ValidationError", PyExc_ValueError);
  py::register_exception<InternalError>(m, "InternalError", PyExc_RuntimeError);
  (void)validation;

  m.attr("__version__") = COREPLACE_VERSION;
  m.def("load_model", [](const std::string& path) {
    return io::model_to_json(io::load_model_spec(path)).dump();
  });
  m.def("default_hardware", [] { return io::hardware_to_json(HardwareProfile{}).dump(); });
  m.def("default_train_config", [] { return io::train_config_to_json(rl::TrainConfig{}).dump(); });
  m.def("partition", &partition, py::arg("model"), py::arg("cores"), py::arg("mode"),
        py::arg("hardware"), py::arg("strategy"));
  m.def("place", &place_graph, py::arg("graph"), py::arg("mesh"), py::arg("engine"),
        py::arg("seed"), py::arg("iterations"));
  m.def("cost", &cost, py::arg("graph"), py::arg("placement"));
  m.def("metrics", &metrics, py::arg("graph"), py::arg("placement"));
  m.def("train", &train, py::arg("graph"), py::arg("mesh"), py::arg("config"));
  m.def("simulate", &simulate_run, py::arg("graph"), py::arg("placement"), py::arg("pipeline"),
        py::arg("batch"), py::arg("bandwidth"), py::arg("tile_fraction"));
  m.def("run_cli", &run_cli, py::arg("args"));
}
