#define DOCTEST_CONFIG_IMPLEMENT
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "testutil.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string g_cli;
const std::string kData = FORGEMORPH_DATA_DIR;

int run(const std::string& args) {
  const std::string command = g_cli + " " + args + " > /dev/null 2>&1";
  const int status = std::system(command.c_str());
  return WEXITSTATUS(status);
}

std::string slurp(const fs::path& path) {
  std::ifstream stream(path, std::ios::binary);
  REQUIRE(stream.good());
  std::ostringstream buffer;
  buffer << stream.rdbuf();
  return buffer.str();
}

fs::path fresh_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("forgemorph_cli_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

}  // namespace

TEST_CASE("explore writes the front files and succeeds") {
  const fs::path dir = fresh_dir("explore");
  const int code =
      run("explore --net " + kData + "/mnist_8_16_32.json --device " + kData +
          "/zynq7100.json --out " + dir.string() +
          " --seed 5 --population 30 --generations 20");
  CHECK(code == 0);
  CHECK(fs::exists(dir / "pareto.csv"));
  CHECK(fs::exists(dir / "configs.json"));
  CHECK(fs::exists(dir / "manifest.json"));

  const std::string csv = slurp(dir / "pareto.csv");
  CHECK(csv.rfind("allocation,latency_s,dsp,lut,bram,feasible\n", 0) == 0);
  CHECK(csv.find(",1\n") != std::string::npos);  // at least one feasible row

  const json configs = json::parse(slurp(dir / "configs.json"));
  CHECK(configs.at("entries").size() >= 1);
  CHECK(configs.at("network").at("name") == "mnist_8_16_32");

  const json manifest = json::parse(slurp(dir / "manifest.json"));
  CHECK(manifest.at("command") == "explore");
  CHECK(manifest.at("seed") == 5);
  CHECK(manifest.at("inputs").size() == 2);
}

TEST_CASE("explore exit code 2 on an infeasible budget") {
  const fs::path dir = fresh_dir("infeasible");
  const int code =
      run("explore --net " + kData + "/mnist_8_16_32.json --device " + kData +
          "/zynq7100.json --out " + dir.string() + " --max-dsp 1");
  CHECK(code == 2);
}

TEST_CASE("explore is byte-identical across reruns with one seed") {
  const fs::path dir1 = fresh_dir("rerun1");
  const fs::path dir2 = fresh_dir("rerun2");
  const std::string base = "explore --net " + kData + "/mnist_8_16_32.json --device " +
                           kData + "/zynq7100.json --seed 9 --population 30 " +
                           "--generations 15 --out ";
  REQUIRE(run(base + dir1.string()) == 0);
  REQUIRE(run(base + dir2.string()) == 0);
  CHECK(slurp(dir1 / "pareto.csv") == slurp(dir2 / "pareto.csv"));
  CHECK(slurp(dir1 / "configs.json") == slurp(dir2 / "configs.json"));
}

TEST_CASE("estimate prints the cost vector") {
  const fs::path dir = fresh_dir("estimate");
  const fs::path out = dir / "est.json";
  const std::string command = g_cli + " estimate --net " + kData +
                              "/mnist_8_16_32.json --device " + kData +
                              "/zynq7100.json --alloc 4,8,16:8 > " + out.string();
  REQUIRE(WEXITSTATUS(std::system(command.c_str())) == 0);
  const json doc = json::parse(slurp(out));
  CHECK(doc.at("dsp") == 1556);
  CHECK(doc.at("bram") == 356);
}

TEST_CASE("estimate accepts an allocation file") {
  const fs::path dir = fresh_dir("allocfile");
  const fs::path alloc = dir / "alloc.json";
  std::ofstream(alloc) << R"({"conv_pe": [1, 2, 4], "fc_pe": 8})";
  const fs::path out = dir / "est.json";
  const std::string command = g_cli + " estimate --net " + kData +
                              "/mnist_8_16_32.json --device " + kData +
                              "/zynq7100.json --alloc-file " + alloc.string() +
                              " > " + out.string();
  REQUIRE(WEXITSTATUS(std::system(command.c_str())) == 0);
  CHECK(json::parse(slurp(out)).at("dsp") == 179);
}

TEST_CASE("estimate rejects a malformed network with exit 1") {
  const fs::path dir = fresh_dir("badnet");
  const fs::path bad = dir / "bad.json";
  std::ofstream(bad) << "{\"layers\": 7}";
  CHECK(run("estimate --net " + bad.string() + " --device " + kData +
            "/zynq7100.json --alloc 1") == 1);
}

TEST_CASE("simulate prints a trace and dumps the csv") {
  const fs::path dir = fresh_dir("simulate");
  const fs::path out = dir / "trace.json";
  const fs::path csv = dir / "trace.csv";
  const std::string command = g_cli +
                              " simulate --width 8 --height 8 --kernel 3"
                              " --stride 1 --pad 0 --op conv --trace-csv " +
                              csv.string() + " > " + out.string();
  REQUIRE(WEXITSTATUS(std::system(command.c_str())) == 0);
  const json doc = json::parse(slurp(out));
  CHECK(doc.at("outputs_emitted") == 36);
  CHECK(doc.at("cycles_total") == 88);
  const std::string trace = slurp(csv);
  CHECK(trace.rfind("cycle,valid,", 0) == 0);
}

TEST_CASE("morph modes extend one manifest") {
  const fs::path dir = fresh_dir("morph");
  REQUIRE(run("explore --net " + kData + "/mnist_8_16_32.json --device " + kData +
              "/zynq7100.json --out " + dir.string() +
              " --seed 2 --population 30 --generations 15") == 0);
  const fs::path manifest = dir / "morph.json";
  const std::string base = "morph --config " + (dir / "configs.json").string() +
                           " --manifest " + manifest.string();
  CHECK(run(base + " --mode width:0.5") == 0);
  CHECK(run(base + " --mode depth:2") == 0);
  CHECK(run(base + " --mode depth:5") == 1);  // only three blocks exist

  const json doc = json::parse(slurp(manifest));
  REQUIRE(doc.at("modes").size() == 2);
  CHECK(doc.at("modes")[0].at("name") == "width_0.5");
  CHECK(doc.at("modes")[0].at("active_filters") == json({4, 8, 16}));
  CHECK(doc.at("modes")[1].at("name") == "depth_2");
}

TEST_CASE("calibrate then morph attaches power") {
  const fs::path dir = fresh_dir("power");
  const fs::path model = dir / "power_model.json";
  REQUIRE(run("calibrate --samples " + kData + "/power_mnist.csv --out " +
              model.string()) == 0);
  REQUIRE(run("explore --net " + kData + "/mnist_8_16_32.json --device " + kData +
              "/zynq7100.json --out " + dir.string() +
              " --seed 2 --population 30 --generations 15") == 0);
  REQUIRE(run("morph --config " + (dir / "configs.json").string() + " --manifest " +
              (dir / "morph.json").string() + " --mode depth:1 --power-model " +
              model.string()) == 0);
  const json doc = json::parse(slurp(dir / "morph.json"));
  CHECK(doc.at("modes")[0].at("estimate").contains("power_mw"));
}

TEST_CASE("schedule emits a staged training plan") {
  const fs::path dir = fresh_dir("schedule");
  const fs::path out = dir / "schedule.json";
  REQUIRE(run("schedule --net " + kData + "/mnist_8_16_32.json --kind depth"
              " --epochs 2 --out " + out.string()) == 0);
  const json doc = json::parse(slurp(out));
  REQUIRE(doc.at("stages").size() == 3);
  CHECK(doc.at("stages")[0].at("active_blocks").size() == 1);
  CHECK(doc.at("stages")[2].at("active_blocks").size() == 3);
  CHECK(doc.at("stages")[0].at("lr_plan").size() == 2);
}

TEST_CASE("report renders an svg with labeled axes") {
  const fs::path dir = fresh_dir("report");
  REQUIRE(run("explore --net " + kData + "/mnist_8_16_32.json --device " + kData +
              "/zynq7100.json --out " + dir.string() +
              " --seed 3 --population 30 --generations 10") == 0);
  const fs::path svg = dir / "front.svg";
  CHECK(run("report --front " + (dir / "pareto.csv").string() + " --out " +
            svg.string()) == 0);
  const std::string text = slurp(svg);
  CHECK(text.find("<svg") != std::string::npos);
  CHECK(text.find("latency (s, log scale)") != std::string::npos);
  CHECK(text.find("DSP slices") != std::string::npos);
  CHECK(text.find("<circle") != std::string::npos);

  SUBCASE("single-entry front still renders one marker") {
    const fs::path single = dir / "single.csv";
    std::ofstream(single) << "allocation,latency_s,dsp,lut,bram,feasible\n"
                          << "1-1-1/1,1.0e-4,37,4710,9,1\n";
    CHECK(run("report --front " + single.string() + " --out " +
              (dir / "single.svg").string()) == 0);
    const std::string one = slurp(dir / "single.svg");
    CHECK(one.find("<circle") != std::string::npos);
  }
  SUBCASE("empty front file errors out") {
    const fs::path empty = dir / "empty.csv";
    std::ofstream(empty) << "allocation,latency_s,dsp,lut,bram,feasible\n";
    CHECK(run("report --front " + empty.string() + " --out " +
              (dir / "empty.svg").string()) == 1);
  }
}

int main(int argc, char** argv) {
  if (argc < 2) {
    std::fprintf(stderr, "usage: test_cli <path-to-forgemorph-binary>\n");
    return 2;
  }
  g_cli = argv[argc - 1];
  doctest::Context context;
  context.applyCommandLine(argc - 1, argv);
  return context.run();
}
