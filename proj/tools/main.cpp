#include <CLI11.hpp>

#include <chrono>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <string>
#include <vector>

#include <unistd.h>

#include "advgrasp/baseline.hpp"
#include "advgrasp/config.hpp"
#include "advgrasp/eval.hpp"
#include "advgrasp/runner.hpp"
#include "advgrasp/trainer.hpp"

namespace fs = std::filesystem;
using namespace advgrasp;

namespace {

RunConfig load_or_default(const std::string& path) {
  RunConfig cfg = path.empty() ? default_run_config() : load_config(path);
  validate(cfg);
  return cfg;
}

// <run_root>/<tag>-<utc timestamp>-<pid>; explicit --out wins.
fs::path pick_run_dir(const RunConfig& cfg, const std::string& out,
                      const char* tag) {
  if (!out.empty()) return out;
  auto now = std::chrono::system_clock::now();
  std::time_t t = std::chrono::system_clock::to_time_t(now);
  char stamp[32];
  std::strftime(stamp, sizeof(stamp), "%Y%m%d-%H%M%S", std::gmtime(&t));
  return fs::path(effective_run_root(cfg)) /
         (std::string(tag) + "-" + stamp + "-" + std::to_string(getpid()));
}

fs::path prepare_run_dir(const RunConfig& cfg, const std::string& out,
                         const char* tag) {
  fs::path dir = pick_run_dir(cfg, out, tag);
  fs::create_directories(dir);
  std::ofstream rc(dir / "resolved.cfg");
  if (!rc) throw std::runtime_error("cannot write " + (dir / "resolved.cfg").string());
  write_resolved(rc, cfg);
  return dir;
}

std::vector<PatternKind> parse_patterns(const std::string& csv) {
  std::vector<PatternKind> out;
  std::string cur;
  auto flush = [&] {
    if (!cur.empty()) out.push_back(pattern_kind_from_string(cur));
    cur.clear();
  };
  for (char c : csv) {
    if (c == ',') flush();
    else if (c != ' ') cur.push_back(c);
  }
  flush();
  if (out.empty()) throw std::runtime_error("empty pattern list");
  return out;
}

void print_log_row(const TrainLogRow& r) {
  std::printf(
      "update %6lld  steps %8lld  gamma1 %.4f  r1 %+8.4f  r2 %+8.4f  "
      "sr %.3f  len %.1f\n",
      r.update, r.env_steps, r.gamma1, r.mean_r1, r.mean_r2, r.rolling_sr,
      r.rolling_len);
  std::fflush(stdout);
}

void save_log(const fs::path& file, const std::vector<TrainLogRow>& rows) {
  std::ofstream os(file);
  if (!os) throw std::runtime_error("cannot write " + file.string());
  write_train_log(os, rows);
}

int cmd_train(const std::string& config, std::uint64_t seed,
              const std::string& out, bool quiet) {
  RunConfig cfg = load_or_default(config);
  fs::path dir = prepare_run_dir(cfg, out, "train");
  std::cout << "run dir: " << dir.string() << "\n";

  EnvSuite suite = make_suite(cfg);
  TrainResult res = adversarial_train(
      cfg.train, suite, seed,
      quiet ? std::function<void(const TrainLogRow&)>{} : print_log_row);

  save_log(dir / "train_log.csv", res.log);
  long long updates =
      cfg.train.total_steps / ((long long)cfg.train.workers * cfg.train.n_step);
  CheckpointMeta meta{cfg.train.total_steps, gamma_schedule(updates, cfg.train)};
  save_checkpoint((dir / "robot_final.ckpt").string(), res.robot_final, meta);
  save_checkpoint((dir / "mover_final.ckpt").string(), res.mover_final, meta);
  CheckpointMeta best_meta{
      res.best_step,
      gamma_schedule(res.best_step /
                         ((long long)cfg.train.workers * cfg.train.n_step),
                     cfg.train)};
  save_checkpoint((dir / "robot_best.ckpt").string(), res.robot, best_meta);
  if (!res.pool.entries.empty()) res.pool.save((dir / "pool").string());

  std::cout << "selection sr " << res.best_sr << " at env step "
            << res.best_step << "\n";
  return 0;
}

int cmd_finetune(const std::string& config, std::uint64_t seed,
                 const std::string& robot, const std::string& pool_dir,
                 const std::string& out, bool quiet) {
  RunConfig cfg = load_or_default(config);
  fs::path dir = prepare_run_dir(cfg, out, "finetune");
  std::cout << "run dir: " << dir.string() << "\n";

  Checkpoint ck = load_checkpoint(robot);
  if (ck.params.desc.role != AgentRole::robot)
    throw std::runtime_error("checkpoint '" + robot +
                             "' does not hold a robot policy");
  ModelPool pool = ModelPool::load(pool_dir);

  std::vector<TrainLogRow> log;
  auto on_log = [&](const TrainLogRow& r) {
    log.push_back(r);
    if (!quiet) print_log_row(r);
  };
  PolicyParams tuned =
      finetune(ck.params, pool, cfg.train, make_suite(cfg), seed, on_log);

  save_log(dir / "finetune_log.csv", log);
  long long updates =
      (cfg.train.total_steps + cfg.train.finetune_steps) /
      ((long long)cfg.train.workers * cfg.train.n_step);
  CheckpointMeta meta{cfg.train.total_steps + cfg.train.finetune_steps,
                      gamma_schedule(updates, cfg.train)};
  save_checkpoint((dir / "robot_finetuned.ckpt").string(), tuned, meta);
  return 0;
}

int cmd_eval(const std::string& config, const std::string& robot,
             const std::string& patterns, int bins, int episodes, int seeds,
             const std::string& objects, const std::string& out,
             const std::string& format) {
  RunConfig cfg = load_or_default(config);
  EvalSpec spec;
  spec.robot_source = robot;
  spec.env = cfg.env;
  spec.pattern_cfg = cfg.patterns;
  spec.patterns = patterns.empty() ? cfg.eval.patterns : parse_patterns(patterns);
  spec.bins = bins > 0 ? bins : cfg.eval.bins;
  spec.episodes_per_cell = episodes > 0 ? episodes : cfg.eval.episodes;
  if (seeds > 0) {
    spec.seeds.clear();
    for (int s = 0; s < seeds; ++s) spec.seeds.push_back(std::uint64_t(s));
  } else {
    spec.seeds = cfg.eval.seeds;
  }
  if (!objects.empty()) {
    spec.objects.clear();
    std::string cur;
    for (char c : objects + ",") {
      if (c == ',') {
        if (!cur.empty()) spec.objects.push_back(object_by_name(cur));
        cur.clear();
      } else if (c != ' ') {
        cur.push_back(c);
      }
    }
  }

  fs::path csv_path, json_path;
  if (!out.empty()) {
    csv_path = out;
    json_path = fs::path(out).replace_extension(".json");
  } else {
    fs::path dir = prepare_run_dir(cfg, "", "eval");
    std::cout << "run dir: " << dir.string() << "\n";
    csv_path = dir / "results.csv";
    json_path = dir / "results.json";
  }

  MetricsTable table = evaluate(spec);

  if (format == "csv" || format == "both") {
    std::ofstream os(csv_path);
    if (!os) throw std::runtime_error("cannot write " + csv_path.string());
    write_metrics_csv(os, table);
    std::cout << "wrote " << csv_path.string() << "\n";
  }
  if (format == "json" || format == "both") {
    fs::path p = (format == "json" && !out.empty()) ? fs::path(out) : json_path;
    std::ofstream os(p);
    if (!os) throw std::runtime_error("cannot write " + p.string());
    write_metrics_json(os, table);
    std::cout << "wrote " << p.string() << "\n";
  }

  for (const auto& a : aggregate(table))
    std::printf("%-16s (%.1f,%.1f]  sr %.3f  ael %.1f\n",
                to_string(a.pattern), a.bin_lo, a.bin_hi, a.sr, a.ael);
  return 0;
}

int cmd_generate(const std::string& config, const std::string& kind_name,
                 int episodes, std::uint64_t seed, double ratio,
                 const std::string& robot, const std::string& out) {
  RunConfig cfg = load_or_default(config);
  if (episodes <= 0) throw std::runtime_error("--episodes must be > 0");
  if (!(ratio > 0.0 && ratio <= 1.0))
    throw std::runtime_error("--ratio must be in (0, 1]");
  PatternKind kind = pattern_kind_from_string(kind_name);
  fs::path dir = prepare_run_dir(cfg, out, "trajectories");
  std::cout << "run dir: " << dir.string() << "\n";

  for (int e = 0; e < episodes; ++e) {
    Rng er(derive_seed(seed, "traj", std::uint64_t(e)));
    EnvConfig env = cfg.env;
    env.speed_ratio = ratio;
    PatternSpec spec = sample_pattern(kind, er, kMoverArea, cfg.patterns,
                                      RotationMode::constant_rate);
    PatternMover mover(spec, env);
    std::unique_ptr<RobotAgent> agent;
    if (robot.empty())
      agent = std::make_unique<IdleRobot>();
    else
      agent = robot_from_source(robot)(env);

    std::vector<TrajectoryRow> trace;
    Outcome oc = run_episode(*agent, mover, env, er.next_u64(), &trace);

    char name[64];
    std::snprintf(name, sizeof(name), "traj_%s_%03d.csv", to_string(kind), e);
    std::ofstream os(dir / name);
    if (!os) throw std::runtime_error("cannot write " + (dir / name).string());
    write_trajectory(os, trace);

    if (is_curve(kind)) {
      std::snprintf(name, sizeof(name), "ref_%s_%03d.csv", to_string(kind), e);
      std::ofstream rs(dir / name);
      if (!rs) throw std::runtime_error("cannot write " + (dir / name).string());
      rs << "s,x,y\n";
      double step_len = env.speed_ratio * env.robot_speed * env.dt;
      char buf[128];
      for (std::size_t i = 0; i < trace.size(); ++i) {
        double s = double(i) * step_len;
        Vec2 p = reference_point(spec, s);
        std::snprintf(buf, sizeof(buf), "%.17g,%.17g,%.17g", s, p.x, p.y);
        rs << buf << '\n';
      }
    }
    std::cout << name << ": " << to_string(oc.cause) << " after " << oc.steps
              << " steps\n";
  }
  return 0;
}

int cmd_replay(const std::string& config, const std::string& robot,
               const std::string& pattern, int bin, int episode,
               std::uint64_t seed, const std::string& object,
               const std::string& out) {
  RunConfig cfg = load_or_default(config);
  PatternKind kind = pattern_kind_from_string(pattern);
  if (bin < 1 || bin > cfg.eval.bins)
    throw std::runtime_error("--bin must be in 1.." +
                             std::to_string(cfg.eval.bins));
  if (episode < 0) throw std::runtime_error("--episode must be >= 0");
  const ObjectTemplate& obj =
      object.empty() ? object_catalog().front() : object_by_name(object);

  // exactly the episode the evaluation sweep would run for this cell
  std::vector<SpeedBin> bins = speed_bins(cfg.eval.bins);
  const SpeedBin& b = bins[std::size_t(bin - 1)];
  Rng er(episode_seed(seed, kind, bin - 1, obj.name, episode));
  EnvConfig env = cfg.env;
  env.object = obj;
  env.speed_ratio = er.uniform_open_closed(b.lo, b.hi);
  PatternSpec spec = sample_pattern(kind, er, kMoverArea, cfg.patterns,
                                    RotationMode::gaussian_rate);
  PatternMover mover(spec, env);
  std::unique_ptr<RobotAgent> agent = robot_from_source(robot)(env);

  std::vector<TrajectoryRow> trace;
  Outcome oc = run_episode(*agent, mover, env, er.next_u64(), &trace);

  if (!out.empty()) {
    fs::path dir = prepare_run_dir(cfg, out, "replay");
    std::ofstream os(dir / "trajectory.csv");
    if (!os)
      throw std::runtime_error("cannot write " +
                               (dir / "trajectory.csv").string());
    write_trajectory(os, trace);
    std::cout << "wrote " << (dir / "trajectory.csv").string() << "\n";
  }
  std::printf(
      "pattern=%s bin=(%.17g,%.17g] ratio=%.17g object=%s outcome=%s "
      "steps=%d success=%d\n",
      to_string(kind), b.lo, b.hi, env.speed_ratio, obj.name.c_str(),
      to_string(oc.cause), oc.steps, oc.success ? 1 : 0);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"kinematic move-and-grasp: adversarial training, baselines, "
               "and the speed-binned evaluation grid"};
  app.require_subcommand(1);

  std::string config, out, robot, patterns, objects, kind, pattern, object;
  std::string format = "csv";
  std::uint64_t seed = 0;
  int bins = 0, episodes = 0, seeds = 0, bin = 1, episode = 0;
  int gen_episodes = 5;
  double ratio = 0.5;
  bool quiet = false;
  std::string pool_dir;

  auto* train = app.add_subcommand("train", "adversarial (or scripted) training run");
  train->add_option("--config", config, "config file (defaults when omitted)");
  train->add_option("--seed", seed, "run seed")->capture_default_str();
  train->add_option("--out", out, "run directory (auto-named when omitted)");
  train->add_flag("--quiet", quiet, "suppress per-log-row output");

  auto* ft = app.add_subcommand("finetune", "robot-only phase against the opponent pool");
  ft->add_option("--config", config, "config file");
  ft->add_option("--seed", seed, "run seed")->capture_default_str();
  ft->add_option("--robot", robot, "robot checkpoint to start from")->required();
  ft->add_option("--pool", pool_dir, "opponent pool directory")->required();
  ft->add_option("--out", out, "run directory");
  ft->add_flag("--quiet", quiet, "suppress per-log-row output");

  auto* ev = app.add_subcommand("eval", "speed-binned evaluation grid");
  ev->add_option("--robot", robot, "checkpoint path or baseline:pursuit")->required();
  ev->add_option("--config", config, "config file");
  ev->add_option("--patterns", patterns, "comma list, e.g. arc,oval,random_waypoint,random_action");
  ev->add_option("--bins", bins, "speed-ratio bins over (0,1]");
  ev->add_option("--episodes", episodes, "episodes per pattern x bin x seed x object cell");
  ev->add_option("--seeds", seeds, "number of evaluation seeds (0..n-1)");
  ev->add_option("--objects", objects, "comma list of catalog names (all when omitted)");
  ev->add_option("--out", out, "results csv path (run directory when omitted)");
  ev->add_option("--format", format, "csv, json, or both")
      ->check(CLI::IsMember({"csv", "json", "both"}))
      ->capture_default_str();

  auto* gen = app.add_subcommand("generate-trajectories",
                                 "write executed + reference plate paths");
  gen->add_option("--kind", kind, "pattern kind")->required();
  gen->add_option("--episodes", gen_episodes, "number of episodes")->capture_default_str();
  gen->add_option("--seed", seed, "base seed")->capture_default_str();
  gen->add_option("--ratio", ratio, "mover/robot speed ratio")->capture_default_str();
  gen->add_option("--robot", robot, "optional robot (checkpoint or baseline:pursuit); idle when omitted");
  gen->add_option("--config", config, "config file");
  gen->add_option("--out", out, "run directory");

  auto* rp = app.add_subcommand("replay", "re-run one evaluation-cell episode");
  rp->add_option("--robot", robot, "checkpoint path or baseline:pursuit")->required();
  rp->add_option("--pattern", pattern, "pattern kind")->required();
  rp->add_option("--bin", bin, "1-based speed bin")->capture_default_str();
  rp->add_option("--episode", episode, "episode index within the cell")->capture_default_str();
  rp->add_option("--seed", seed, "evaluation seed")->capture_default_str();
  rp->add_option("--object", object, "catalog object (first entry when omitted)");
  rp->add_option("--config", config, "config file");
  rp->add_option("--out", out, "run directory for the trajectory dump");

  CLI11_PARSE(app, argc, argv);

  try {
    if (train->parsed()) return cmd_train(config, seed, out, quiet);
    if (ft->parsed())
      return cmd_finetune(config, seed, robot, pool_dir, out, quiet);
    if (ev->parsed())
      return cmd_eval(config, robot, patterns, bins, episodes, seeds, objects,
                      out, format);
    if (gen->parsed())
      return cmd_generate(config, kind, gen_episodes, seed, ratio, robot, out);
    if (rp->parsed())
      return cmd_replay(config, robot, pattern, bin, episode, seed, object, out);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
