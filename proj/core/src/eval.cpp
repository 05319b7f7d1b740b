#include "advgrasp/eval.hpp"

#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace advgrasp {

std::vector<SpeedBin> speed_bins(int n) {
  if (n <= 0) throw std::invalid_argument("speed_bins: n must be > 0");
  std::vector<SpeedBin> out(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    out[std::size_t(i)].lo = double(i) / double(n);
    out[std::size_t(i)].hi = double(i + 1) / double(n);
  }
  return out;
}

void validate(const EvalSpec& spec) {
  auto fail = [](const char* what) {
    throw std::invalid_argument(std::string("eval spec: ") + what);
  };
  if (spec.robot_source.empty()) fail("robot source is required");
  if (spec.patterns.empty()) fail("pattern set must not be empty");
  if (spec.bins <= 0) fail("bins must be > 0");
  if (spec.episodes_per_cell <= 0) fail("episodes per cell must be > 0");
  if (spec.seeds.empty()) fail("seed set must not be empty");
  if (spec.objects.empty()) fail("object set must not be empty");
  validate(spec.env);
}

std::uint64_t episode_seed(std::uint64_t eval_seed, PatternKind pattern,
                           int bin_index, const std::string& object,
                           int episode) {
  std::uint64_t h = derive_seed(eval_seed, to_string(pattern),
                                std::uint64_t(bin_index));
  return derive_seed(h, object, std::uint64_t(episode));
}

bool operator==(const MetricsRow& a, const MetricsRow& b) {
  return a.pattern == b.pattern && a.bin_lo == b.bin_lo &&
         a.bin_hi == b.bin_hi && a.seed == b.seed && a.object == b.object &&
         a.episodes == b.episodes && a.successes == b.successes &&
         a.sr == b.sr && a.ael == b.ael;
}

bool operator==(const MetricsTable& a, const MetricsTable& b) {
  return a.rows == b.rows;
}

RobotFactory robot_from_source(const std::string& source) {
  if (source == "baseline:pursuit") {
    return [](const EnvConfig& env) -> std::unique_ptr<RobotAgent> {
      return std::make_unique<PursuitRobot>(env);
    };
  }
  if (source.rfind("baseline:", 0) == 0)
    throw std::invalid_argument("unknown baseline '" + source + "'");
  Checkpoint ck = load_checkpoint(source);
  if (ck.params.desc.role != AgentRole::robot)
    throw std::invalid_argument("checkpoint '" + source +
                                "' does not hold a robot policy");
  auto params = std::make_shared<PolicyParams>(std::move(ck.params));
  return [params](const EnvConfig&) -> std::unique_ptr<RobotAgent> {
    return std::make_unique<PolicyRobot>(*params);
  };
}

MetricsTable evaluate(const EvalSpec& spec, const RobotFactory& make_robot) {
  validate(spec);
  std::vector<SpeedBin> bins = speed_bins(spec.bins);
  MetricsTable table;
  for (PatternKind kind : spec.patterns) {
    for (int bi = 0; bi < spec.bins; ++bi) {
      for (std::uint64_t seed : spec.seeds) {
        for (const ObjectTemplate& obj : spec.objects) {
          MetricsRow row;
          row.pattern = kind;
          row.bin_lo = bins[std::size_t(bi)].lo;
          row.bin_hi = bins[std::size_t(bi)].hi;
          row.seed = seed;
          row.object = obj.name;
          long long length_sum = 0;
          for (int e = 0; e < spec.episodes_per_cell; ++e) {
            std::uint64_t es = episode_seed(seed, kind, bi, obj.name, e);
            Rng er(es);
            EnvConfig cfg = spec.env;
            cfg.object = obj;
            cfg.speed_ratio = er.uniform_open_closed(bins[std::size_t(bi)].lo,
                                                     bins[std::size_t(bi)].hi);
            PatternSpec pspec =
                sample_pattern(kind, er, kMoverArea, spec.pattern_cfg,
                               RotationMode::gaussian_rate);
            PatternMover mover(pspec, cfg);
            std::unique_ptr<RobotAgent> robot = make_robot(cfg);
            Outcome oc = run_episode(*robot, mover, cfg, er.next_u64());
            ++row.episodes;
            if (oc.success) {
              ++row.successes;
              length_sum += oc.steps;
            } else {
              length_sum += cfg.max_steps;
            }
          }
          row.sr = double(row.successes) / double(row.episodes);
          row.ael = double(length_sum) / double(row.episodes);
          table.rows.push_back(std::move(row));
        }
      }
    }
  }
  return table;
}

MetricsTable evaluate(const EvalSpec& spec) {
  return evaluate(spec, robot_from_source(spec.robot_source));
}

std::vector<AggregateRow> aggregate(const MetricsTable& t) {
  std::vector<AggregateRow> out;
  auto find = [&out](PatternKind k, double lo, double hi) -> AggregateRow& {
    for (auto& r : out)
      if (r.pattern == k && r.bin_lo == lo && r.bin_hi == hi) return r;
    out.push_back({k, lo, hi, 0, 0, 0.0, 0.0});
    return out.back();
  };
  for (const auto& r : t.rows) {
    AggregateRow& a = find(r.pattern, r.bin_lo, r.bin_hi);
    a.episodes += r.episodes;
    a.successes += r.successes;
    a.ael += r.ael * double(r.episodes);  // un-normalized until the end
  }
  for (auto& a : out) {
    a.sr = a.episodes ? double(a.successes) / double(a.episodes) : 0.0;
    a.ael = a.episodes ? a.ael / double(a.episodes) : 0.0;
  }
  return out;
}

const char* kMetricsHeader =
    "pattern,bin_lo,bin_hi,seed,object,episodes,successes,sr,ael";

void write_metrics_csv(std::ostream& os, const MetricsTable& t) {
  os << kMetricsHeader << '\n';
  char buf[160];
  for (const auto& r : t.rows) {
    std::snprintf(buf, sizeof(buf), "%.17g,%.17g", r.bin_lo, r.bin_hi);
    os << to_string(r.pattern) << ',' << buf << ',' << r.seed << ','
       << r.object << ',' << r.episodes << ',' << r.successes << ',';
    std::snprintf(buf, sizeof(buf), "%.17g,%.17g", r.sr, r.ael);
    os << buf << '\n';
  }
}

MetricsTable read_metrics_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line))
    throw std::runtime_error("metrics csv: empty input");
  if (line != kMetricsHeader)
    throw std::runtime_error("metrics csv: unexpected header '" + line + "'");
  MetricsTable t;
  int lineno = 1;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::string cur;
    for (char c : line) {
      if (c == ',') {
        f.push_back(cur);
        cur.clear();
      } else {
        cur.push_back(c);
      }
    }
    f.push_back(cur);
    if (f.size() != 9)
      throw std::runtime_error("metrics csv: line " + std::to_string(lineno) +
                               ": expected 9 fields, got " +
                               std::to_string(f.size()));
    MetricsRow r;
    try {
      r.pattern = pattern_kind_from_string(f[0]);
      r.bin_lo = std::stod(f[1]);
      r.bin_hi = std::stod(f[2]);
      r.seed = std::stoull(f[3]);
      r.object = f[4];
      r.episodes = std::stoll(f[5]);
      r.successes = std::stoll(f[6]);
      r.sr = std::stod(f[7]);
      r.ael = std::stod(f[8]);
    } catch (const std::exception& e) {
      throw std::runtime_error("metrics csv: line " + std::to_string(lineno) +
                               ": " + e.what());
    }
    t.rows.push_back(std::move(r));
  }
  return t;
}

void write_metrics_json(std::ostream& os, const MetricsTable& t) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& r : t.rows) {
    rows.push_back({{"pattern", to_string(r.pattern)},
                    {"bin_lo", r.bin_lo},
                    {"bin_hi", r.bin_hi},
                    {"seed", r.seed},
                    {"object", r.object},
                    {"episodes", r.episodes},
                    {"successes", r.successes},
                    {"sr", r.sr},
                    {"ael", r.ael}});
  }
  os << nlohmann::json{{"rows", rows}}.dump(2) << '\n';
}

}  // namespace advgrasp
