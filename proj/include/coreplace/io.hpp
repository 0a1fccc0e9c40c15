#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "coreplace/mesh.hpp"
#include "coreplace/model.hpp"
#include "coreplace/partition.hpp"
#include "coreplace/rl/trainer.hpp"
#include "coreplace/sim.hpp"
#include "coreplace/taskgraph.hpp"

namespace coreplace::io {

using Json = nlohmann::ordered_json;

/// Parses JSON text. Syntax errors become ParseError with line and column;
/// `what` names the document in the message.
Json parse_json(const std::string& text, const std::string& what);
Json read_json(const std::filesystem::path& path);
std::string read_text(const std::filesystem::path& path);
/// Writes `text` to `path`, creating parent directories.
void write_text(const std::filesystem::path& path, const std::string& text);
/// Pretty JSON with a trailing newline.
std::string dump(const Json& j);

// Model spec: {"layers": [{"id", "kind", "in_channels", "out_channels",
// "kernel": [h, w], "out": [h, w], "timesteps", "inputs"?}]}
Json model_to_json(std::span<const LayerSpec> layers);
std::vector<LayerSpec> model_from_json(const Json& j);
std::vector<LayerSpec> load_model_spec(const std::filesystem::path& path);
void save_model_spec(std::span<const LayerSpec> layers, const std::filesystem::path& path);

/// Missing fields keep the values of `base`.
HardwareProfile hardware_from_json(const Json& j, HardwareProfile base = {});
Json hardware_to_json(const HardwareProfile& hw);

Json slice_to_json(const SliceSpec& slice);
SliceSpec slice_from_json(const Json& j, const std::string& where);

Json taskgraph_to_json(const TaskGraph& graph);
/// Parses and validates. Feature fields must agree with the edges.
TaskGraph taskgraph_from_json(const Json& j);
TaskGraph load_taskgraph(const std::filesystem::path& path);
void save_taskgraph(const TaskGraph& graph, const std::filesystem::path& path);

// Placement: {"mesh": [W, H], "assign": {"node-id": [x, y]}}
Json placement_to_json(const Placement& placement, const Mesh& mesh);
std::pair<Mesh, Placement> placement_from_json(const Json& j);

Json sim_result_to_json(const SimResult& result);

Json matrix_to_json(const Eigen::MatrixXd& m);
Eigen::MatrixXd matrix_from_json(const Json& j, const std::string& where);

Json train_config_to_json(const rl::TrainConfig& config);
rl::TrainConfig train_config_from_json(const Json& j);

/// Parameters, config, seed and best placement. Contains no timestamps, so
/// equal runs give byte-identical files.
Json checkpoint_to_json(const rl::TrainResult& result, const rl::TrainConfig& config,
                        const Mesh& mesh);
/// Actor and critic tensors of a checkpoint.
std::pair<rl::ActorParams, rl::CriticParams> checkpoint_params(const Json& j);

/// episode,mean_reward,best_cost
std::string reward_curve_csv(std::span<const rl::CurvePoint> curve);

}  // namespace coreplace::io
