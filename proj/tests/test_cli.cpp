#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <string>
#include <vector>

#include "advgrasp/environment.hpp"
#include "advgrasp/eval.hpp"

namespace fs = std::filesystem;

namespace {

struct RunResult {
  int code = -1;
  std::string out, err;
};

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  REQUIRE(is.good());
  return {std::istreambuf_iterator<char>(is), std::istreambuf_iterator<char>()};
}

fs::path scratch() {
  static fs::path dir = [] {
    fs::path d = fs::temp_directory_path() / "advgrasp_cli_suite";
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

RunResult run_cli(const std::string& args) {
  fs::path out = scratch() / "stdout.txt";
  fs::path err = scratch() / "stderr.txt";
  std::string cmd = std::string(ADVGRASP_BIN) + " " + args + " >" +
                    out.string() + " 2>" + err.string();
  int status = std::system(cmd.c_str());
  RunResult r;
  if (WIFEXITED(status)) r.code = WEXITSTATUS(status);
  r.out = slurp(out);
  r.err = slurp(err);
  return r;
}

std::string first_line(const fs::path& p) {
  std::ifstream is(p);
  REQUIRE(is.good());
  std::string line;
  std::getline(is, line);
  return line;
}

fs::path write_tiny_config() {
  fs::path p = scratch() / "tiny.cfg";
  std::ofstream os(p);
  os << "[train]\n"
        "total_steps = 200\n"
        "finetune_steps = 100\n"
        "pool_snapshot_every = 60\n"
        "select_every = 0\n"
        "log_every = 2\n"
        "sr_window = 10\n"
        "[env]\n"
        "max_steps = 60\n"
        "[objects]\n"
        "names = rubiks_cube\n";
  return p;
}

int count_matching(const fs::path& dir, const std::string& prefix,
                   const std::string& suffix) {
  int n = 0;
  for (const auto& e : fs::directory_iterator(dir)) {
    const std::string name = e.path().filename().string();
    if (name.rfind(prefix, 0) == 0 && name.size() >= suffix.size() &&
        name.compare(name.size() - suffix.size(), suffix.size(), suffix) == 0)
      ++n;
  }
  return n;
}

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("missing required options and unknown subcommands fail") {
  unsetenv("ADVGRASP_RUN_ROOT");
  RunResult r = run_cli("eval");
  CHECK(r.code != 0);
  CHECK(!r.err.empty());
  CHECK(run_cli("frobnicate").code != 0);
  CHECK(run_cli("").code != 0);
}

TEST_CASE("generated trajectory files carry the exact headers") {
  fs::path dir = scratch() / "gen_sine";
  RunResult r = run_cli("generate-trajectories --kind sine --episodes 3 "
                        "--seed 5 --out " + dir.string());
  REQUIRE(r.code == 0);
  CHECK(count_matching(dir, "traj_sine_", ".csv") == 3);
  CHECK(count_matching(dir, "ref_sine_", ".csv") == 3);
  CHECK(fs::exists(dir / "traj_sine_000.csv"));
  CHECK(fs::exists(dir / "traj_sine_002.csv"));
  CHECK(fs::exists(dir / "resolved.cfg"));
  CHECK(first_line(dir / "traj_sine_000.csv") ==
        std::string(advgrasp::kTrajectoryHeader));
  CHECK(first_line(dir / "ref_sine_001.csv") == "s,x,y");

  fs::path wdir = scratch() / "gen_wp";
  RunResult w = run_cli("generate-trajectories --kind random_waypoint "
                        "--episodes 2 --out " + wdir.string());
  REQUIRE(w.code == 0);
  CHECK(count_matching(wdir, "traj_random_waypoint_", ".csv") == 2);
  CHECK(count_matching(wdir, "ref_", ".csv") == 0);
}

TEST_CASE("training runs are reproducible byte for byte") {
  fs::path cfg = write_tiny_config();
  fs::path a = scratch() / "train_a";
  fs::path b = scratch() / "train_b";
  RunResult ra = run_cli("train --config " + cfg.string() +
                         " --seed 42 --quiet --out " + a.string());
  REQUIRE(ra.code == 0);
  CHECK(ra.out.find("run dir: ") != std::string::npos);
  RunResult rb = run_cli("train --config " + cfg.string() +
                         " --seed 42 --quiet --out " + b.string());
  REQUIRE(rb.code == 0);
  for (const char* f :
       {"robot_final.ckpt", "mover_final.ckpt", "robot_best.ckpt",
        "train_log.csv", "resolved.cfg"}) {
    INFO("file ", f);
    REQUIRE(fs::exists(a / f));
    CHECK(slurp(a / f) == slurp(b / f));
  }
  CHECK(fs::exists(a / "pool" / "index.txt"));
}

TEST_CASE("finetune consumes a trained robot and its opponent pool") {
  fs::path cfg = write_tiny_config();
  fs::path a = scratch() / "train_a";  // produced by the reproducibility case
  if (!fs::exists(a / "robot_final.ckpt")) {
    REQUIRE(run_cli("train --config " + cfg.string() +
                    " --seed 42 --quiet --out " + a.string()).code == 0);
  }
  fs::path f = scratch() / "ft";
  RunResult r = run_cli("finetune --config " + cfg.string() + " --seed 1 " +
                        "--robot " + (a / "robot_final.ckpt").string() +
                        " --pool " + (a / "pool").string() + " --quiet --out " +
                        f.string());
  REQUIRE(r.code == 0);
  CHECK(fs::exists(f / "robot_finetuned.ckpt"));
  CHECK(fs::exists(f / "finetune_log.csv"));
}

TEST_CASE("the run root env var places auto-named run directories") {
  fs::path root = scratch() / "rootenv";
  fs::create_directories(root);
  setenv("ADVGRASP_RUN_ROOT", root.string().c_str(), 1);
  fs::path cfg = write_tiny_config();
  RunResult r = run_cli("train --config " + cfg.string() + " --seed 7 --quiet");
  unsetenv("ADVGRASP_RUN_ROOT");
  REQUIRE(r.code == 0);
  int dirs = 0;
  for (const auto& e : fs::directory_iterator(root)) {
    ++dirs;
    CHECK(e.path().filename().string().rfind("train-", 0) == 0);
    CHECK(fs::exists(e.path() / "resolved.cfg"));
  }
  CHECK(dirs == 1);
}

TEST_CASE("broken configs are reported as errors, not crashes") {
  fs::path bad = scratch() / "bad.cfg";
  std::ofstream(bad) << "[train]\ngamme2 = 0.9\n";
  RunResult r = run_cli("train --config " + bad.string() + " --out " +
                        (scratch() / "never").string());
  CHECK(r.code == 1);
  CHECK(r.err.rfind("error: ", 0) == 0);
  CHECK(r.err.find("train.gamme2") != std::string::npos);
  CHECK(!fs::exists(scratch() / "never"));
}

TEST_CASE("replay prints the episode verdict line") {
  fs::path cfg = write_tiny_config();
  fs::path rdir = scratch() / "replay_out";
  RunResult r = run_cli("replay --robot baseline:pursuit --pattern arc "
                        "--bin 1 --episode 0 --seed 0 --config " +
                        cfg.string() + " --out " + rdir.string());
  REQUIRE(r.code == 0);
  CHECK(r.out.find("pattern=arc bin=(0,0.1") != std::string::npos);
  CHECK(r.out.find("outcome=") != std::string::npos);
  CHECK(r.out.find("success=") != std::string::npos);
  CHECK(fs::exists(rdir / "trajectory.csv"));
  CHECK(first_line(rdir / "trajectory.csv") ==
        std::string(advgrasp::kTrajectoryHeader));
}

TEST_CASE("eval writes the metrics grid in the requested formats") {
  fs::path cfg = write_tiny_config();
  fs::path csv = scratch() / "m.csv";
  RunResult r = run_cli("eval --robot baseline:pursuit --patterns arc "
                        "--bins 2 --episodes 1 --seeds 1 "
                        "--objects rubiks_cube --config " + cfg.string() +
                        " --out " + csv.string());
  REQUIRE(r.code == 0);
  REQUIRE(fs::exists(csv));
  CHECK(first_line(csv) == std::string(advgrasp::kMetricsHeader));
  std::string body = slurp(csv);
  int lines = 0;
  for (char c : body) lines += (c == '\n');
  CHECK(lines == 3);  // header + 2 bins x 1 seed x 1 object
  CHECK(r.out.find("sr") != std::string::npos);
  CHECK(!fs::exists(scratch() / "m.json"));

  fs::path json = scratch() / "m2.json";
  RunResult j = run_cli("eval --robot baseline:pursuit --patterns arc "
                        "--bins 2 --episodes 1 --seeds 1 "
                        "--objects rubiks_cube --config " + cfg.string() +
                        " --format json --out " + json.string());
  REQUIRE(j.code == 0);
  REQUIRE(fs::exists(json));
  CHECK(slurp(json).front() == '{');
}

}  // TEST_SUITE
