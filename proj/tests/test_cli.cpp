// Drives the installed-style `slc` binary end to end.
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>

#include <sys/wait.h>

#include "doctest.h"
#include "json.hpp"
#include "support.hpp"

namespace fs = std::filesystem;

namespace {

struct Result {
  int code;
  std::string out;
  std::string err;
};

std::string slurp(const fs::path& p) {
  std::ifstream f(p);
  std::stringstream s;
  s << f.rdbuf();
  return s.str();
}

Result run(const TempDir& dir, const std::string& args) {
  const fs::path out = dir / "stdout.txt", err = dir / "stderr.txt";
  const std::string cmd = std::string("'") + SLC_CLI_PATH + "' " + args + " >'" + out.string() +
                          "' 2>'" + err.string() + "'";
  const int status = std::system(cmd.c_str());
  return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, slurp(out), slurp(err)};
}

}  // namespace

TEST_CASE("crossval twice with the same seed gives identical reports") {
  TempDir dir("cli");
  const std::string data = (dir / "data").string();
  REQUIRE(run(dir, "synth '" + data + "' --per-class 3 --size 24 --seed 2").code == 0);

  const std::string common = " --labels '" + data + "/labels.csv' --images '" + data +
                             "/images' --model m2-dual --folds 3 --seed 7 --epochs 1"
                             " --image-size 16 --set augment.target=4 --set train.batch_size=8 -q";
  std::string reports[2];
  for (int i = 0; i < 2; ++i) {
    const std::string rd = (dir / ("run" + std::to_string(i))).string();
    for (const char* stage : {"ingest", "preprocess", "segment", "augment"})
      REQUIRE(run(dir, std::string(stage) + " --run-dir '" + rd + "'" + common).code == 0);
    const Result r = run(dir, "crossval --run-dir '" + rd + "'" + common);
    REQUIRE(r.code == 0);
    reports[i] = r.out;
  }
  CHECK(reports[0] == reports[1]);
  const auto j = nlohmann::json::parse(reports[0]);
  CHECK(j["model"] == "m2-dual");
  CHECK(j["folds"] == 3);
  CHECK(j["seed"] == 7);

  // predict: one line, class name then eight probabilities.
  const std::string rd = (dir / "run0").string();
  const Result p = run(dir, "predict --run-dir '" + rd + "' -q '" + data + "/images/SYN_0000000.png'");
  REQUIRE(p.code == 0);
  CHECK(std::count(p.out.begin(), p.out.end(), '\n') == 1);
  CHECK(std::count(p.out.begin(), p.out.end(), ',') == 8);
  const std::string cls = p.out.substr(0, p.out.find(','));
  CHECK(std::string("MLN MCN BCC AK BK DF VL SCC").find(cls) != std::string::npos);

  const Result e = run(dir, "evaluate --run-dir '" + rd + "' -q");
  CHECK(e.code == 0);
  CHECK(nlohmann::json::parse(e.out)["per_fold"].size() == 1);
}

TEST_CASE("run subcommand and hash-named run directories") {
  TempDir dir("cli-run");
  const std::string data = (dir / "data").string();
  REQUIRE(run(dir, "synth '" + data + "' --per-class 2 --size 20").code == 0);
  const std::string root = (dir / "runs").string();
  const Result r = run(dir, "run --run-root '" + root + "' --labels '" + data +
                                "/labels.csv' --images '" + data +
                                "/images' --folds 2 --epochs 1 --image-size 16"
                                " --set augment.target=2 --seed 5");
  REQUIRE(r.code == 0);
  CHECK(r.err.find("run directory:") != std::string::npos);
  std::size_t dirs = 0;
  for (const auto& e : fs::directory_iterator(root)) {
    ++dirs;
    const std::string name = e.path().filename().string();
    CHECK(name.size() == 19);
    CHECK(name.substr(16) == "-s5");
  }
  CHECK(dirs == 1);
}

TEST_CASE("errors exit nonzero with a structured message") {
  TempDir dir("cli-err");
  const std::string rd = (dir / "run").string();
  const Result r = run(dir, "crossval --run-dir '" + rd + "' -q");
  CHECK(r.code == 3);
  CHECK(r.err.rfind("slc: error [io]:", 0) == 0);
  CHECK(r.err.find("stage first") != std::string::npos);

  const Result bad = run(dir, "train --run-dir '" + rd + "2' --set nokey=1");
  CHECK(bad.code == 1);
  CHECK(bad.err.find("nokey") != std::string::npos);

  CHECK(run(dir, "train --model m7").code != 0);
  const Result cfg = run(dir, "config");
  CHECK(cfg.code == 0);
  CHECK(cfg.out.find("train.folds") != std::string::npos);
}
