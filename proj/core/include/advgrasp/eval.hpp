#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

#include "advgrasp/baseline.hpp"
#include "advgrasp/environment.hpp"
#include "advgrasp/patterns.hpp"
#include "advgrasp/runner.hpp"

namespace advgrasp {

// Speed-ratio bin, ratio drawn from (lo, hi].
struct SpeedBin {
  double lo = 0.0, hi = 0.0;
};

// n equal bins partitioning (0, 1].
std::vector<SpeedBin> speed_bins(int n);

struct EvalSpec {
  std::string robot_source;  // checkpoint path, or "baseline:pursuit"
  std::vector<PatternKind> patterns = test_pattern_kinds();
  int bins = 10;
  int episodes_per_cell = 50;
  std::vector<std::uint64_t> seeds = {0, 1, 2};
  std::vector<ObjectTemplate> objects = object_catalog();
  EnvConfig env;
  PatternSamplerConfig pattern_cfg;
};

void validate(const EvalSpec& spec);

// Pure function of the cell coordinates, so any sweep order (or a resumed
// sweep) replays the exact same episodes.
std::uint64_t episode_seed(std::uint64_t eval_seed, PatternKind pattern,
                           int bin_index, const std::string& object,
                           int episode);

struct MetricsRow {
  PatternKind pattern = PatternKind::line;
  double bin_lo = 0.0, bin_hi = 0.0;
  std::uint64_t seed = 0;
  std::string object;
  long long episodes = 0;
  long long successes = 0;
  double sr = 0.0;
  double ael = 0.0;  // failures count the full episode cap
};

struct MetricsTable {
  std::vector<MetricsRow> rows;
};

bool operator==(const MetricsRow& a, const MetricsRow& b);
bool operator==(const MetricsTable& a, const MetricsTable& b);

using RobotFactory =
    std::function<std::unique_ptr<RobotAgent>(const EnvConfig&)>;

// Resolves "baseline:pursuit" or a checkpoint path. Throws on anything else.
RobotFactory robot_from_source(const std::string& source);

// Full sweep: patterns x bins x seeds x objects, episodes_per_cell each.
MetricsTable evaluate(const EvalSpec& spec, const RobotFactory& make_robot);
MetricsTable evaluate(const EvalSpec& spec);

// Collapses seeds and objects, one row per pattern x bin. Episode and
// success counts are conserved; rates are episode-weighted.
struct AggregateRow {
  PatternKind pattern = PatternKind::line;
  double bin_lo = 0.0, bin_hi = 0.0;
  long long episodes = 0;
  long long successes = 0;
  double sr = 0.0;
  double ael = 0.0;
};
std::vector<AggregateRow> aggregate(const MetricsTable& t);

extern const char* kMetricsHeader;
void write_metrics_csv(std::ostream& os, const MetricsTable& t);
MetricsTable read_metrics_csv(std::istream& is);
void write_metrics_json(std::ostream& os, const MetricsTable& t);

}  // namespace advgrasp
