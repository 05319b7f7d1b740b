#include "advgrasp/config.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace advgrasp {

namespace {

std::string trim(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  std::size_t e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == ',') {
      out.push_back(trim(cur));
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  cur = trim(cur);
  if (!cur.empty() || !out.empty()) out.push_back(cur);
  for (const auto& item : out)
    if (item.empty()) throw std::runtime_error("empty list element");
  return out;
}

struct Ctx {
  const std::string* origin = nullptr;
  int line = 0;
  std::string section{}, key{};

  [[noreturn]] void fail(const std::string& msg) const {
    throw std::runtime_error(*origin + ":" + std::to_string(line) + ": " +
                             msg);
  }
  std::string qualified() const { return section + "." + key; }

  double num(const std::string& v) const {
    try {
      std::size_t pos = 0;
      double d = std::stod(v, &pos);
      if (pos != v.size()) throw std::invalid_argument("trailing characters");
      return d;
    } catch (const std::exception&) {
      fail("bad number '" + v + "' for " + qualified());
    }
  }
  long long integer(const std::string& v) const {
    try {
      std::size_t pos = 0;
      long long i = std::stoll(v, &pos);
      if (pos != v.size()) throw std::invalid_argument("trailing characters");
      return i;
    } catch (const std::exception&) {
      fail("bad integer '" + v + "' for " + qualified());
    }
  }
  bool flag(const std::string& v) const {
    if (v == "true" || v == "1") return true;
    if (v == "false" || v == "0") return false;
    fail("bad boolean '" + v + "' for " + qualified() +
         " (use true/false/1/0)");
  }
};

}  // namespace

RunConfig default_run_config() { return RunConfig{}; }

RunConfig parse_config(std::istream& is, const std::string& origin) {
  RunConfig cfg;
  Ctx ctx{&origin};
  std::string raw;
  while (std::getline(is, raw)) {
    ++ctx.line;
    std::string line = raw;
    std::size_t hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;

    if (line.front() == '[') {
      if (line.back() != ']') ctx.fail("unterminated section header");
      std::string name = trim(line.substr(1, line.size() - 2));
      if (name != "env" && name != "objects" && name != "reward" &&
          name != "patterns" && name != "train" && name != "eval" &&
          name != "io")
        ctx.fail("unknown section [" + name + "]");
      ctx.section = name;
      continue;
    }

    std::size_t eq = line.find('=');
    if (eq == std::string::npos) ctx.fail("expected 'key = value'");
    ctx.key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    if (ctx.key.empty()) ctx.fail("missing key before '='");
    if (ctx.section.empty())
      ctx.fail("key '" + ctx.key + "' outside any section");
    if (value.empty()) ctx.fail("missing value for " + ctx.qualified());

    const std::string& k = ctx.key;
    if (ctx.section == "env") {
      auto& e = cfg.env;
      if (k == "dt") e.dt = ctx.num(value);
      else if (k == "robot_speed") e.robot_speed = ctx.num(value);
      else if (k == "robot_yaw_rate") e.robot_yaw_rate = ctx.num(value);
      else if (k == "plate_radius") e.plate_radius = ctx.num(value);
      else if (k == "lift_threshold") e.lift_threshold = ctx.num(value);
      else if (k == "max_steps") e.max_steps = int(ctx.integer(value));
      else if (k == "gripper_max_opening") e.gripper_max_opening = ctx.num(value);
      else ctx.fail("unknown key " + ctx.qualified());
    } else if (ctx.section == "objects") {
      if (k == "names") {
        try {
          cfg.objects = split_list(value);
        } catch (const std::exception& ex) {
          ctx.fail(std::string(ex.what()) + " in " + ctx.qualified());
        }
      } else {
        ctx.fail("unknown key " + ctx.qualified());
      }
    } else if (ctx.section == "reward") {
      auto& r = cfg.rewards;
      if (k == "success_reward") r.success_reward = ctx.num(value);
      else if (k == "out_of_plate_penalty") r.out_of_plate_penalty = ctx.num(value);
      else if (k == "bbox_bonus") r.bbox_bonus = ctx.num(value);
      else if (k == "collision_penalty") r.collision_penalty = ctx.num(value);
      else if (k == "time_penalty") r.time_penalty = ctx.num(value);
      else if (k == "safe_distance") r.safe_distance = ctx.num(value);
      else if (k == "proximity_penalty") r.proximity_penalty = ctx.num(value);
      else ctx.fail("unknown key " + ctx.qualified());
    } else if (ctx.section == "patterns") {
      auto& p = cfg.patterns;
      if (k == "sine_amp_min") p.sine_amp_min = ctx.num(value);
      else if (k == "sine_amp_max") p.sine_amp_max = ctx.num(value);
      else if (k == "sine_freq_min") p.sine_freq_min = ctx.num(value);
      else if (k == "sine_freq_max") p.sine_freq_max = ctx.num(value);
      else if (k == "circle_radius_min") p.circle_radius_min = ctx.num(value);
      else if (k == "circle_radius_max") p.circle_radius_max = ctx.num(value);
      else if (k == "arc_span_min") p.arc_span_min = ctx.num(value);
      else if (k == "arc_span_max") p.arc_span_max = ctx.num(value);
      else if (k == "oval_axis_min") p.oval_axis_min = ctx.num(value);
      else if (k == "oval_axis_max") p.oval_axis_max = ctx.num(value);
      else if (k == "heading_jitter") p.heading_jitter = ctx.num(value);
      else if (k == "rotation_rate_max") p.rotation_rate_max = ctx.num(value);
      else if (k == "rotation_mean_max") p.rotation_mean_max = ctx.num(value);
      else if (k == "rotation_std") p.rotation_std = ctx.num(value);
      else if (k == "min_path_length") p.min_path_length = ctx.num(value);
      else ctx.fail("unknown key " + ctx.qualified());
    } else if (ctx.section == "train") {
      auto& t = cfg.train;
      if (k == "lr") t.lr = ctx.num(value);
      else if (k == "finetune_lr") t.finetune_lr = ctx.num(value);
      else if (k == "gamma1_init") t.gamma1_init = ctx.num(value);
      else if (k == "gamma1_final") t.gamma1_final = ctx.num(value);
      else if (k == "gamma1_coeff") t.gamma1_coeff = ctx.num(value);
      else if (k == "gamma2") t.gamma2 = ctx.num(value);
      else if (k == "n_step") t.n_step = int(ctx.integer(value));
      else if (k == "entropy_coeff") t.entropy_coeff = ctx.num(value);
      else if (k == "value_coeff") t.value_coeff = ctx.num(value);
      else if (k == "grad_clip") t.grad_clip = ctx.num(value);
      else if (k == "workers") t.workers = int(ctx.integer(value));
      else if (k == "pool_snapshot_every") t.pool_snapshot_every = ctx.integer(value);
      else if (k == "total_steps") t.total_steps = ctx.integer(value);
      else if (k == "finetune_steps") t.finetune_steps = ctx.integer(value);
      else if (k == "adversarial") t.adversarial = ctx.flag(value);
      else if (k == "geometry_reward") t.geometry_reward = ctx.flag(value);
      else if (k == "collision_check") t.collision_check = ctx.flag(value);
      else if (k == "train_ratio_min") t.train_ratio_min = ctx.num(value);
      else if (k == "train_ratio_max") t.train_ratio_max = ctx.num(value);
      else if (k == "stack_prob") t.stack_prob = ctx.num(value);
      else if (k == "stack_max") t.stack_max = int(ctx.integer(value));
      else if (k == "select_every") t.select_every = ctx.integer(value);
      else if (k == "select_episodes") t.select_episodes = int(ctx.integer(value));
      else if (k == "log_every") t.log_every = int(ctx.integer(value));
      else if (k == "sr_window") t.sr_window = int(ctx.integer(value));
      else ctx.fail("unknown key " + ctx.qualified());
    } else if (ctx.section == "eval") {
      auto& ev = cfg.eval;
      if (k == "bins") ev.bins = int(ctx.integer(value));
      else if (k == "episodes") ev.episodes = int(ctx.integer(value));
      else if (k == "seeds") {
        try {
          ev.seeds.clear();
          for (const auto& item : split_list(value))
            ev.seeds.push_back(std::stoull(item));
        } catch (const std::exception&) {
          ctx.fail("bad seed list '" + value + "' for " + ctx.qualified());
        }
      } else if (k == "patterns") {
        try {
          ev.patterns.clear();
          for (const auto& item : split_list(value))
            ev.patterns.push_back(pattern_kind_from_string(item));
        } catch (const std::exception& ex) {
          ctx.fail(std::string(ex.what()) + " in " + ctx.qualified());
        }
      } else {
        ctx.fail("unknown key " + ctx.qualified());
      }
    } else {  // io
      if (k == "run_root") cfg.io.run_root = value;
      else ctx.fail("unknown key " + ctx.qualified());
    }
  }
  return cfg;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config '" + path + "'");
  return parse_config(in, path);
}

void validate(const RunConfig& cfg) {
  validate(cfg.env);
  validate(cfg.rewards);
  validate(cfg.train);
  resolve_objects(cfg);  // throws on unknown names
  if (cfg.eval.bins <= 0)
    throw std::invalid_argument("eval.bins must be > 0");
  if (cfg.eval.episodes <= 0)
    throw std::invalid_argument("eval.episodes must be > 0");
  if (cfg.eval.seeds.empty())
    throw std::invalid_argument("eval.seeds must not be empty");
  if (cfg.eval.patterns.empty())
    throw std::invalid_argument("eval.patterns must not be empty");
  if (cfg.io.run_root.empty())
    throw std::invalid_argument("io.run_root must not be empty");
}

namespace {

void put(std::ostream& os, const char* key, double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  os << key << " = " << buf << '\n';
}
void put(std::ostream& os, const char* key, long long v) {
  os << key << " = " << v << '\n';
}
void put(std::ostream& os, const char* key, int v) {
  os << key << " = " << v << '\n';
}
void put(std::ostream& os, const char* key, bool v) {
  os << key << " = " << (v ? "true" : "false") << '\n';
}

}  // namespace

void write_resolved(std::ostream& os, const RunConfig& cfg) {
  os << "[env]\n";
  put(os, "dt", cfg.env.dt);
  put(os, "robot_speed", cfg.env.robot_speed);
  put(os, "robot_yaw_rate", cfg.env.robot_yaw_rate);
  put(os, "plate_radius", cfg.env.plate_radius);
  put(os, "lift_threshold", cfg.env.lift_threshold);
  put(os, "max_steps", cfg.env.max_steps);
  put(os, "gripper_max_opening", cfg.env.gripper_max_opening);

  os << "\n[objects]\nnames = ";
  const auto objs = resolve_objects(cfg);
  for (std::size_t i = 0; i < objs.size(); ++i)
    os << (i ? "," : "") << objs[i].name;
  os << '\n';

  os << "\n[reward]\n";
  put(os, "success_reward", cfg.rewards.success_reward);
  put(os, "out_of_plate_penalty", cfg.rewards.out_of_plate_penalty);
  put(os, "bbox_bonus", cfg.rewards.bbox_bonus);
  put(os, "collision_penalty", cfg.rewards.collision_penalty);
  put(os, "time_penalty", cfg.rewards.time_penalty);
  put(os, "safe_distance", cfg.rewards.safe_distance);
  put(os, "proximity_penalty", cfg.rewards.proximity_penalty);

  os << "\n[patterns]\n";
  put(os, "sine_amp_min", cfg.patterns.sine_amp_min);
  put(os, "sine_amp_max", cfg.patterns.sine_amp_max);
  put(os, "sine_freq_min", cfg.patterns.sine_freq_min);
  put(os, "sine_freq_max", cfg.patterns.sine_freq_max);
  put(os, "circle_radius_min", cfg.patterns.circle_radius_min);
  put(os, "circle_radius_max", cfg.patterns.circle_radius_max);
  put(os, "arc_span_min", cfg.patterns.arc_span_min);
  put(os, "arc_span_max", cfg.patterns.arc_span_max);
  put(os, "oval_axis_min", cfg.patterns.oval_axis_min);
  put(os, "oval_axis_max", cfg.patterns.oval_axis_max);
  put(os, "heading_jitter", cfg.patterns.heading_jitter);
  put(os, "rotation_rate_max", cfg.patterns.rotation_rate_max);
  put(os, "rotation_mean_max", cfg.patterns.rotation_mean_max);
  put(os, "rotation_std", cfg.patterns.rotation_std);
  put(os, "min_path_length", cfg.patterns.min_path_length);

  os << "\n[train]\n";
  put(os, "lr", cfg.train.lr);
  put(os, "finetune_lr", cfg.train.finetune_lr);
  put(os, "gamma1_init", cfg.train.gamma1_init);
  put(os, "gamma1_final", cfg.train.gamma1_final);
  put(os, "gamma1_coeff", cfg.train.gamma1_coeff);
  put(os, "gamma2", cfg.train.gamma2);
  put(os, "n_step", cfg.train.n_step);
  put(os, "entropy_coeff", cfg.train.entropy_coeff);
  put(os, "value_coeff", cfg.train.value_coeff);
  put(os, "grad_clip", cfg.train.grad_clip);
  put(os, "workers", cfg.train.workers);
  put(os, "pool_snapshot_every", cfg.train.pool_snapshot_every);
  put(os, "total_steps", cfg.train.total_steps);
  put(os, "finetune_steps", cfg.train.finetune_steps);
  put(os, "adversarial", cfg.train.adversarial);
  put(os, "geometry_reward", cfg.train.geometry_reward);
  put(os, "collision_check", cfg.train.collision_check);
  put(os, "train_ratio_min", cfg.train.train_ratio_min);
  put(os, "train_ratio_max", cfg.train.train_ratio_max);
  put(os, "stack_prob", cfg.train.stack_prob);
  put(os, "stack_max", cfg.train.stack_max);
  put(os, "select_every", cfg.train.select_every);
  put(os, "select_episodes", cfg.train.select_episodes);
  put(os, "log_every", cfg.train.log_every);
  put(os, "sr_window", cfg.train.sr_window);

  os << "\n[eval]\n";
  put(os, "bins", cfg.eval.bins);
  put(os, "episodes", cfg.eval.episodes);
  os << "seeds = ";
  for (std::size_t i = 0; i < cfg.eval.seeds.size(); ++i)
    os << (i ? "," : "") << cfg.eval.seeds[i];
  os << "\npatterns = ";
  for (std::size_t i = 0; i < cfg.eval.patterns.size(); ++i)
    os << (i ? "," : "") << to_string(cfg.eval.patterns[i]);
  os << '\n';

  os << "\n[io]\n";
  os << "run_root = " << cfg.io.run_root << '\n';
}

std::vector<ObjectTemplate> resolve_objects(const RunConfig& cfg) {
  if (cfg.objects.empty()) return object_catalog();
  std::vector<ObjectTemplate> out;
  out.reserve(cfg.objects.size());
  for (const auto& name : cfg.objects) out.push_back(object_by_name(name));
  return out;
}

EnvSuite make_suite(const RunConfig& cfg) {
  EnvSuite suite;
  suite.base = cfg.env;
  suite.objects = resolve_objects(cfg);
  suite.patterns = cfg.patterns;
  suite.rewards = cfg.rewards;
  return suite;
}

std::string effective_run_root(const RunConfig& cfg) {
  if (const char* env = std::getenv("ADVGRASP_RUN_ROOT"); env && *env)
    return env;
  return cfg.io.run_root;
}

}  // namespace advgrasp
