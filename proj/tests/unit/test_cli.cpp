#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "coreplace/cli.hpp"
#include "coreplace/io.hpp"
#include "support/layers.hpp"

namespace fs = std::filesystem;
using coreplace::testing::data_path;
namespace cli = coreplace::cli;

namespace {

struct Result {
  int code = 0;
  std::string out;
  std::string err;
};

Result run(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

fs::path temp_dir(const std::string& name) {
  auto dir = fs::temp_directory_path() / ("coreplace_cli_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

// Every file under `dir` except manifests, keyed by relative path.
std::map<std::string, std::string> snapshot(const fs::path& dir, bool with_manifests = false) {
  std::map<std::string, std::string> files;
  for (const auto& e : fs::recursive_directory_iterator(dir)) {
    if (!e.is_regular_file()) continue;
    if (!with_manifests && e.path().filename() == cli::kManifestName) continue;
    files[fs::relative(e.path(), dir).string()] = slurp(e.path());
  }
  return files;
}

std::string graph32() {
  return data_path("datasets/spike_resnet18_32_inference/taskgraph.json");
}

// toy8 partitioned to 6 cores once per test binary.
const fs::path& toy_graph() {
  static const fs::path path = [] {
    const auto dir = temp_dir("toygraph");
    const auto r = run({"partition", data_path("models/toy8.json"), "--cores", "6",
                        "--out", dir.string()});
    EXPECT_EQ(r.code, 0) << r.err;
    return dir / "taskgraph.json";
  }();
  return path;
}

}  // namespace

TEST(Cli, PlaceIsByteIdenticalAcrossRuns) {
  const auto root = temp_dir("repeat");
  for (const auto* name : {"a", "b"}) {
    const auto r = run({"place", graph32(), "--mesh", "4x8", "--engine", "zigzag", "--out",
                        (root / name).string()});
    ASSERT_EQ(r.code, 0) << r.err;
  }
  EXPECT_EQ(snapshot(root / "a"), snapshot(root / "b"));
  const auto manifest = coreplace::io::read_json(root / "a" / cli::kManifestName);
  EXPECT_EQ(manifest["command"], "place");
  EXPECT_EQ(manifest["inputs"][0]["sha256"], cli::sha256_file(graph32()));
}

TEST(Cli, Sha256KnownVector) {
  EXPECT_EQ(cli::sha256_hex("abc"),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST(Cli, EndToEndToyModel) {
  const auto root = temp_dir("e2e");
  const auto model = data_path("models/toy8.json");
  auto r = run({"partition", model, "--cores", "32", "--mode", "training", "--out",
                (root / "graph").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_TRUE(fs::exists(root / "graph" / "slices.csv"));
  const auto graph = (root / "graph" / "taskgraph.json").string();

  r = run({"place", graph, "--mesh", "4x8", "--engine", "zigzag", "--out", (root / "zz").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  r = run({"place", graph, "--mesh", "4x8", "--engine", "random", "--iters", "50", "--out",
           (root / "rs").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_TRUE(fs::exists(root / "rs" / "trace.csv"));
  r = run({"train", graph, "--mesh", "4x8", "--episodes", "3", "--batch", "8", "--out",
           (root / "rl").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  for (const auto* f : {"placement.json", "metrics.json", "heatmap.csv", "checkpoint.json",
                        "reward_curve.csv"}) {
    EXPECT_TRUE(fs::exists(root / "rl" / f)) << f;
  }
  r = run({"simulate", graph, (root / "rl" / "placement.json").string(), "--pipeline", "fpdeep",
           "--batch", "2", "--out", (root / "sim").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto sim = coreplace::io::read_json(root / "sim" / "sim_result.json");
  EXPECT_GT(sim["makespan"].get<std::int64_t>(), 0);
  EXPECT_TRUE(fs::exists(root / "sim" / "waveform.csv"));

  const auto before = snapshot(root, true);
  r = run({"report", root.string()});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(snapshot(root, true), before);  // report only reads
  std::istringstream lines(r.out);
  std::string header, line;
  std::getline(lines, header);
  EXPECT_EQ(header.rfind("graph_sha256,mode,mesh,engine,run,", 0), 0u);
  std::vector<std::string> rows;
  while (std::getline(lines, line)) rows.push_back(line);
  ASSERT_EQ(rows.size(), 3u);
  EXPECT_NE(rows[0].find(",zigzag,"), std::string::npos);
  EXPECT_NE(rows[1].find(",random,"), std::string::npos);
  EXPECT_NE(rows[2].find(",rl,"), std::string::npos);
  EXPECT_NE(rows[2].find(",fpdeep,2,"), std::string::npos);

  r = run({"report", root.string(), "--out", (root / "cmp").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_TRUE(fs::exists(root / "cmp" / "comparison.csv"));
  EXPECT_TRUE(fs::exists(root / "cmp" / cli::kManifestName));
}

TEST(Cli, ReportOracleNotWorseThanZigzag) {
  const auto root = temp_dir("oracle");
  for (const auto* engine : {"zigzag", "oracle"}) {
    const auto r = run({"place", toy_graph().string(), "--mesh", "2x3", "--engine", engine, "--out",
                        (root / engine).string()});
    ASSERT_EQ(r.code, 0) << r.err;
  }
  const auto m = coreplace::io::read_json(root / "oracle" / "metrics.json");
  EXPECT_GE(m["reduction_vs_zigzag_pct"].get<double>(), 0.0);
  const auto r = run({"report", root.string()});
  ASSERT_EQ(r.code, 0);
  EXPECT_NE(r.out.find(",oracle,"), std::string::npos);
}

TEST(Cli, ReplayReproducesOutputs) {
  const auto root = temp_dir("replay");
  auto r = run({"train", toy_graph().string(), "--mesh", "2x3", "--episodes", "4", "--batch", "8",
                "--seed", "9", "--out", (root / "first").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  r = run({"replay", (root / "first" / cli::kManifestName).string(), "--out",
           (root / "again").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(snapshot(root / "first"), snapshot(root / "again"));
}

TEST(Cli, HardwareProfileFromEnvironment) {
  const auto root = temp_dir("hwenv");
  {
    std::ofstream hw(root / "hw.json");
    hw << R"({"sram_bytes_per_core": 65536})";
  }
  ::setenv(cli::kHardwareEnv, (root / "hw.json").c_str(), 1);
  auto r = run({"partition", data_path("models/toy8.json"), "--cores", "8", "--out",
                (root / "env").string()});
  ::unsetenv(cli::kHardwareEnv);
  ASSERT_EQ(r.code, 0) << r.err;
  auto g = coreplace::io::load_taskgraph(root / "env" / "taskgraph.json");
  ASSERT_TRUE(g.hardware.has_value());
  EXPECT_EQ(g.hardware->sram_bytes_per_core, 65536);

  // A flag beats the profile.
  ::setenv(cli::kHardwareEnv, (root / "hw.json").c_str(), 1);
  r = run({"partition", data_path("models/toy8.json"), "--cores", "8", "--sram-bytes",
           "131072", "--out", (root / "flag").string()});
  ::unsetenv(cli::kHardwareEnv);
  ASSERT_EQ(r.code, 0) << r.err;
  g = coreplace::io::load_taskgraph(root / "flag" / "taskgraph.json");
  EXPECT_EQ(g.hardware->sram_bytes_per_core, 131072);
}

TEST(Cli, ExitCodes) {
  const auto root = temp_dir("codes");
  auto r = run({"frobnicate"});
  EXPECT_EQ(r.code, cli::kExitUsage);
  EXPECT_NE(r.err.find("\"usage\""), std::string::npos);
  r = run({"place", graph32(), "--out", (root / "x").string()});  // --mesh missing
  EXPECT_EQ(r.code, cli::kExitUsage);
  r = run({"place", (root / "missing.json").string(), "--mesh", "4x8", "--out",
           (root / "x").string()});
  EXPECT_EQ(r.code, cli::kExitValidation);
  EXPECT_NE(r.err.find("missing.json"), std::string::npos);
  r = run({"place", graph32(), "--mesh", "2x2", "--out", (root / "x").string()});
  EXPECT_EQ(r.code, cli::kExitValidation);
  r = run({"place", graph32(), "--mesh", "4x8", "--engine", "annealing", "--out",
           (root / "x").string()});
  EXPECT_EQ(r.code, cli::kExitValidation);
  r = run({"partition", data_path("models/toy8.json"), "--cores", "0", "--out",
           (root / "x").string()});
  EXPECT_EQ(r.code, cli::kExitValidation);
  EXPECT_EQ(run({"--help"}).code, cli::kExitOk);
}
