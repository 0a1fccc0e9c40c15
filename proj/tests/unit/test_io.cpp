#include <gtest/gtest.h>

#include <filesystem>

#include "coreplace/errors.hpp"
#include "coreplace/io.hpp"
#include "support/layers.hpp"

using namespace coreplace;
using coreplace::testing::conv;
using coreplace::testing::data_path;
using coreplace::testing::fc;

namespace {

std::filesystem::path temp_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("coreplace_io_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

std::string error_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const ParseError& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST(ModelIo, RoundTripThreeLayers) {
  auto a = conv("a", 3, 8, 3, 8);
  auto b = conv("b", 8, 8, 3, 8);
  b.residual = {"a"};
  auto c = fc("c", 8, 10);
  c.inputs = {"b"};
  std::vector<LayerSpec> layers{a, b, c};
  const auto dir = temp_dir("model");
  io::save_model_spec(layers, dir / "m.json");
  EXPECT_EQ(io::load_model_spec(dir / "m.json"), layers);
}

TEST(ModelIo, MissingFieldIsNamed) {
  const auto msg = error_of([] {
    io::model_from_json(io::parse_json(
        R"({"layers":[{"id":"a","kind":"conv","in_channels":3,"kernel":[3,3],"out":[8,8]}]})",
        "m"));
  });
  EXPECT_NE(msg.find("out_channels"), std::string::npos) << msg;
  EXPECT_NE(msg.find("layers[0]"), std::string::npos) << msg;
}

TEST(ModelIo, UnknownKindListsSupported) {
  const auto msg = error_of([] {
    io::model_from_json(io::parse_json(
        R"({"layers":[{"id":"p","kind":"pool","in_channels":3,"out_channels":3,"kernel":[2,2],"out":[4,4]}]})",
        "m"));
  });
  EXPECT_NE(msg.find("pool"), std::string::npos) << msg;
  EXPECT_NE(msg.find("conv"), std::string::npos) << msg;
  EXPECT_NE(msg.find("fc"), std::string::npos) << msg;
}

TEST(ModelIo, SyntaxErrorHasLine) {
  const auto msg = error_of([] { io::parse_json("{\n  \"layers\": [\n  ,\n]}", "model.json"); });
  EXPECT_NE(msg.find("model.json"), std::string::npos);
  EXPECT_NE(msg.find("line 3"), std::string::npos) << msg;
}

TEST(ModelIo, ChannelMismatchIsParseError) {
  const auto msg = error_of([] {
    io::model_from_json(io::parse_json(
        R"({"layers":[{"id":"a","kind":"fc","in_channels":3,"out_channels":4},
                      {"id":"b","kind":"fc","in_channels":5,"out_channels":2}]})",
        "m"));
  });
  EXPECT_NE(msg.find("in_channels"), std::string::npos) << msg;
}

TEST(ModelIo, BundledModelsLoad) {
  EXPECT_EQ(io::load_model_spec(data_path("models/spike_resnet18.json")).size(), 21u);
  EXPECT_EQ(io::load_model_spec(data_path("models/spike_vgg16.json")).size(), 16u);
  EXPECT_EQ(io::load_model_spec(data_path("models/spike_resnet50.json")).size(), 54u);
  EXPECT_EQ(io::load_model_spec(data_path("models/toy8.json")).size(), 8u);
}

TEST(TaskGraphIo, RoundTrip) {
  const auto layers = io::load_model_spec(data_path("models/spike_resnet18.json"));
  HardwareProfile hw;
  hw.sram_bytes_per_core = 128 * 1024;
  for (auto mode : {Mode::kInference, Mode::kTraining}) {
    const auto g = build_taskgraph(partition_model(layers, hw, 32, mode), layers, hw, mode);
    const auto dir = temp_dir("graph");
    io::save_taskgraph(g, dir / "g.json");
    EXPECT_EQ(io::load_taskgraph(dir / "g.json"), g);
  }
}

TEST(TaskGraphIo, InconsistentFeaturesRejected) {
  std::vector<std::int64_t> compute{5, 5};
  auto g = make_graph(Mode::kInference, compute, {{0, 1, 10}});
  auto j = io::taskgraph_to_json(g);
  j["nodes"][0]["bytes_out"] = 11;
  EXPECT_THROW(io::taskgraph_from_json(j), ParseError);
  j = io::taskgraph_to_json(g);
  j["edges"][0]["dst"] = 7;
  EXPECT_THROW(io::taskgraph_from_json(j), ParseError);
}

TEST(TaskGraphIo, BundledDatasetsMatchRegeneration) {
  const auto layers = io::load_model_spec(data_path("models/spike_resnet18.json"));
  const auto g = build_taskgraph(partition_model(layers, {}, 32, Mode::kInference), layers, {},
                                 Mode::kInference);
  EXPECT_EQ(io::load_taskgraph(data_path("datasets/spike_resnet18_32_inference/taskgraph.json")), g);
}

TEST(HardwareIo, PartialOverridesAndUnknownFields) {
  HardwareProfile base;
  const auto hw = io::hardware_from_json(io::parse_json(R"({"sram_bytes_per_core": 1024})", "hw"), base);
  EXPECT_EQ(hw.sram_bytes_per_core, 1024);
  EXPECT_EQ(hw.link_bandwidth, base.link_bandwidth);
  EXPECT_EQ(io::hardware_from_json(io::hardware_to_json(hw)), hw);
  EXPECT_THROW(io::hardware_from_json(io::parse_json(R"({"sram": 1})", "hw")), ParseError);
}

TEST(PlacementIo, RoundTripAndValidation) {
  const Mesh mesh(3, 2);
  const Placement p({{0, 0}, {2, 1}, {1, 0}});
  const auto [m2, p2] = io::placement_from_json(io::placement_to_json(p, mesh));
  EXPECT_EQ(m2, mesh);
  EXPECT_EQ(p2, p);
  auto j = io::placement_to_json(p, mesh);
  j["assign"]["1"] = {0, 0};  // collision
  EXPECT_THROW(io::placement_from_json(j), ValidationError);
  j = io::placement_to_json(p, mesh);
  j["assign"]["2"] = {3, 0};  // off-mesh
  EXPECT_THROW(io::placement_from_json(j), ValidationError);
}

TEST(MatrixIo, RoundTrip) {
  Eigen::MatrixXd m(2, 3);
  m << 1.5, -2, 3e-9, 0.1, 1.0 / 3.0, 7;
  EXPECT_EQ(io::matrix_from_json(io::matrix_to_json(m), "m"), m);
  auto j = io::matrix_to_json(m);
  j["rows"] = 5;
  EXPECT_THROW(io::matrix_from_json(j, "m"), ParseError);
}

TEST(TrainConfigIo, RoundTrip) {
  rl::TrainConfig c;
  c.seed = 123456789012345ULL;
  c.episodes = 17;
  c.ppo.optimizer = rl::OptimizerKind::kAdam;
  c.encoder_init = rl::EncoderInit::kAutoencoder;
  c.symmetry_tiebreak = false;
  const auto back = io::train_config_from_json(io::train_config_to_json(c));
  EXPECT_EQ(io::train_config_to_json(back).dump(), io::train_config_to_json(c).dump());
}
