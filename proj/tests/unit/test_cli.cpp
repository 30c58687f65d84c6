#include <doctest.h>
#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

namespace fs = std::filesystem;

namespace {

struct Result {
  int code = -1;
  std::string out;
  std::string err;
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("releaseflow_test_cli_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

Result run(const std::string& args) {
  static int counter = 0;
  const fs::path base = fs::temp_directory_path() / ("releaseflow_cli_io_" + std::to_string(counter++));
  const std::string cmd = std::string("env -u RELEASEFLOW_OUT '") + RELEASEFLOW_CLI_PATH + "' " +
                          args + " > '" + base.string() + ".out' 2> '" + base.string() + ".err'";
  const int status = std::system(cmd.c_str());
  Result r;
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.out = slurp(base.string() + ".out");
  r.err = slurp(base.string() + ".err");
  fs::remove(base.string() + ".out");
  fs::remove(base.string() + ".err");
  return r;
}

bool contains(const std::string& haystack, const std::string& needle) {
  return haystack.find(needle) != std::string::npos;
}

nlohmann::json manifest(const fs::path& dir) { return nlohmann::json::parse(slurp(dir / "manifest.json")); }

// Every output listed in the manifest must match byte for byte (directories recursively).
void check_identical_outputs(const fs::path& a, const fs::path& b) {
  const auto outputs = manifest(a)["outputs"];
  REQUIRE(!outputs.empty());
  for (const auto& name : outputs) {
    const fs::path pa = a / name.get<std::string>();
    const fs::path pb = b / name.get<std::string>();
    if (fs::is_directory(pa)) {
      for (const auto& entry : fs::recursive_directory_iterator(pa)) {
        if (!entry.is_regular_file()) continue;
        const fs::path rel = fs::relative(entry.path(), pa);
        INFO(rel.string());
        CHECK(slurp(entry.path()) == slurp(pb / rel));
      }
    } else {
      INFO(name.get<std::string>());
      CHECK(fs::exists(pb));
      CHECK(slurp(pa) == slurp(pb));
    }
  }
}

}  // namespace

TEST_CASE("help lists subcommands and defaults") {
  const Result top = run("--help");
  CHECK(top.code == 0);
  for (const char* sub : {"fit", "train", "bench", "synth", "replay"}) CHECK(contains(top.out, sub));

  const Result train = run("train --help");
  CHECK(train.code == 0);
  CHECK(contains(train.out, "--epochs"));
  CHECK(contains(train.out, "2500"));
  CHECK(contains(train.out, "10000"));
  CHECK(contains(train.out, "0.01"));

  const Result noise = run("bench noise --help");
  CHECK(noise.code == 0);
  CHECK(contains(noise.out, "--members"));
  CHECK(contains(noise.out, "50"));

  CHECK(run("--version").out.find("0.1.0") != std::string::npos);
  CHECK(run("").code == 1);
  CHECK(run("train --bogus").code == 1);
}

TEST_CASE("input errors exit with 1 and say what went wrong") {
  const fs::path dir = scratch("errors");
  const Result missing = run("fit --data /nonexistent/curve.csv --out '" + dir.string() + "'");
  CHECK(missing.code == 1);
  CHECK(contains(missing.err, "/nonexistent/curve.csv"));
  const auto m = manifest(dir);
  CHECK(m["exit_code"] == 1);
  CHECK(m["status"] == "error");
  CHECK(contains(m["error"].get<std::string>(), "/nonexistent/curve.csv"));

  CHECK(run("synth --out '" + dir.string() + "'").code == 0);
  const Result weibull = run("fit --data '" + (dir / "flat.csv").string() + "' --model weibull --out '" +
                             (dir / "w").string() + "'");
  CHECK(weibull.code == 1);
  CHECK(contains(weibull.err, "weibull"));

  const Result colloc = run("train --colloc 0 --epochs 1 --out '" + (dir / "c").string() + "'");
  CHECK(colloc.code == 1);
  CHECK(contains(colloc.err, "n_collocation"));

  const Result films = run("bench limited --films flat,cardboard --out '" + (dir / "l").string() + "'");
  CHECK(films.code == 1);

  const Result no_manifest = run("replay --manifest '" + (dir / "nope.json").string() + "'");
  CHECK(no_manifest.code == 1);
  fs::remove_all(dir);
}

TEST_CASE("fit prints a summary and writes json") {
  const fs::path dir = scratch("fit");
  REQUIRE(run("synth --out '" + dir.string() + "'").code == 0);
  const Result r = run("fit --data '" + (dir / "wrinkled.csv").string() + "' --model peppas --out '" +
                       (dir / "out").string() + "'");
  CHECK(r.code == 0);
  CHECK(contains(r.out, "peppas [wrinkled]"));
  CHECK(contains(r.out, "converged"));
  const auto j = nlohmann::json::parse(slurp(dir / "out" / "fit_peppas.json"));
  CHECK(j["film"] == "wrinkled");
  CHECK(j["rmse"].get<double>() < 0.05);
  fs::remove_all(dir);
}

TEST_CASE("train with zero epochs and the manifest contents") {
  const fs::path dir = scratch("train0");
  const Result r = run("train --epochs 0 --colloc 10 --seed 4 --out '" + dir.string() + "'");
  CHECK(r.code == 0);
  CHECK(fs::exists(dir / "model" / "checkpoint.bin"));
  CHECK(slurp(dir / "model" / "loss_history.csv") == "epoch,total,data,pde,ic,bc\n");
  const auto m = manifest(dir);
  CHECK(m["command"] == "train");
  CHECK(m["exit_code"] == 0);
  CHECK(m["seeds"]["seed"] == 4);
  CHECK(m["config"]["epochs"] == 0);
  CHECK(m.contains("tool_version"));
  CHECK(m.contains("wall_clock_seconds"));
  fs::remove_all(dir);
}

TEST_CASE("the output directory falls back to RELEASEFLOW_OUT") {
  const fs::path dir = scratch("env");
  const std::string cmd = "RELEASEFLOW_OUT='" + dir.string() + "' '" + RELEASEFLOW_CLI_PATH +
                          "' synth > /dev/null 2>&1";
  CHECK(std::system(cmd.c_str()) == 0);
  CHECK(fs::exists(dir / "crumpled.csv"));
  fs::remove_all(dir);
}

TEST_CASE("replay reproduces report files byte for byte") {
  const fs::path dir = scratch("replay");
  const fs::path a = dir / "a";
  const fs::path b = dir / "b";

  REQUIRE(run("synth --sigma 0.05 --seed 9 --out '" + a.string() + "'").code == 0);
  REQUIRE(run("replay --manifest '" + (a / "manifest.json").string() + "' --out '" + b.string() + "'").code == 0);
  check_identical_outputs(a, b);

  const fs::path ta = dir / "ta";
  const fs::path tb = dir / "tb";
  REQUIRE(run("train --epochs 40 --colloc 64 --learn-d --dropout-keep 0.9 --seed 3 --out '" +
              ta.string() + "'").code == 0);
  REQUIRE(run("replay --manifest '" + (ta / "manifest.json").string() + "' --out '" + tb.string() + "'").code == 0);
  check_identical_outputs(ta, tb);
  CHECK(manifest(tb)["command"] == "train");

  // Default replay target is <original>-replay.
  REQUIRE(run("replay --manifest '" + (a / "manifest.json").string() + "'").code == 0);
  CHECK(fs::exists(dir / "a-replay" / "flat.csv"));
  fs::remove_all(dir);
}
