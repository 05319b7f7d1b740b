#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "advgrasp/environment.hpp"
#include "advgrasp/patterns.hpp"
#include "advgrasp/rewards.hpp"
#include "advgrasp/trainer.hpp"

namespace advgrasp {

struct EvalSettings {
  int bins = 10;
  int episodes = 50;  // per pattern x bin x seed x object cell
  std::vector<std::uint64_t> seeds = {0, 1, 2};
  std::vector<PatternKind> patterns = test_pattern_kinds();
};

struct IoSettings {
  std::string run_root = "runs";
};

// Everything a run reads, one INI-style file. Sections: [env] [objects]
// [reward] [patterns] [train] [eval] [io]. Every key has a default, so the
// empty file is a valid config.
struct RunConfig {
  EnvConfig env;
  std::vector<std::string> objects;  // catalog names; empty = whole catalog
  RewardConfig rewards;
  PatternSamplerConfig patterns;
  TrainConfig train;
  EvalSettings eval;
  IoSettings io;
};

RunConfig default_run_config();

// Diagnostics carry "<origin>:<line>:" and name offending keys as
// section.key. Unknown sections and keys are errors, not warnings.
RunConfig parse_config(std::istream& is, const std::string& origin);
RunConfig load_config(const std::string& path);

void validate(const RunConfig& cfg);

// Materializes every key with its effective value; parsing the output
// reproduces the config exactly.
void write_resolved(std::ostream& os, const RunConfig& cfg);

// Catalog lookups for cfg.objects (the whole catalog when empty).
std::vector<ObjectTemplate> resolve_objects(const RunConfig& cfg);

EnvSuite make_suite(const RunConfig& cfg);

// cfg.io.run_root unless the ADVGRASP_RUN_ROOT environment variable is set.
std::string effective_run_root(const RunConfig& cfg);

}  // namespace advgrasp
