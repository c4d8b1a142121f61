#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "thermovqa/backend.hpp"
#include "thermovqa/oracle.hpp"
#include "thermovqa/prompts.hpp"
#include "thermovqa/runner.hpp"
#include "thermovqa/thermal.hpp"

namespace thermovqa {

// Everything a `run` invocation needs, loaded from one INI-style plan file.
//
//   # comment lines start with '#' or ';'
//   [run]
//   manifest = data/manifest.jsonl      # paths resolve against the plan file
//   log = runs/trials.jsonl
//   prompts = 1,2,3,4,5                 # optional, defaults to all five
//   backends = gpt, ref                 # optional, defaults to declared order
//   concurrency = 4
//
//   [backend.gpt]
//   preset = chatgpt-4o                 # seed fields from a preset, then override
//   max_retries = 2
//   trials = 5                          # optional per-backend trial count
//
//   [backend.ref]
//   kind = oracle
//
//   [colormap]                          # optional temperature range override
//   t_min = 25
//   t_max = 60
//
//   [oracle]                            # optional detector parameter overrides
//   temp_threshold = 50
//   spot_deviation = 4
//   neighborhood_radius = 9
//   min_blob_area = 25
//
// Unknown sections or keys are configuration errors. Secrets are never stored
// in the file; http backends name an environment variable via auth_env.
struct PlanConfig {
    RunPlan plan;
    std::vector<BackendConfig> backends;  // declaration order
    ColormapSpec cmap = ColormapSpec::standard();
    OracleParams oracle_params;
    PromptParams prompt_params = PromptParams::defaults();
};

// Parses and validates a plan file. Relative paths inside the file (manifest,
// log, transcript) are resolved against the file's directory. Throws
// ConfigError with the offending line number on any syntax or value problem.
PlanConfig load_plan_file(const std::filesystem::path& path);

}  // namespace thermovqa
