#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "thermovqa/backend.hpp"
#include "thermovqa/prompts.hpp"
#include "thermovqa/synth.hpp"
#include "thermovqa/verdict.hpp"

namespace thermovqa {

// Trial multiplicity defaults: 5 for chat-style backends, 3 otherwise.
int default_trials(BackendKind kind);

struct RunPlan {
    std::filesystem::path manifest_path;
    std::vector<int> prompt_ids = {1, 2, 3, 4, 5};
    std::vector<std::string> backend_ids;
    std::map<std::string, int> trials_per_backend;  // filled from defaults if absent
    int concurrency_cap = 4;
    std::filesystem::path output_log_path;

    void validate() const;  // throws ConfigError
};

// One completed (or failed) query. Exactly one record exists per
// (image_id, prompt_id, backend_id, trial_index) key in a log.
struct TrialRecord {
    std::string image_id;
    BinaryLabel ground_truth_label = BinaryLabel::Normal;
    ClassLabel ground_truth_class = ClassLabel::Normal;
    int prompt_id = 0;
    std::string backend_id;
    int trial_index = 0;
    bool ok = true;
    std::string raw_text;                                // empty when failed
    Verdict verdict = Verdict::Unsure;                   // meaningful when ok
    BinaryLabel binary_prediction = BinaryLabel::Anomaly;  // = score_verdict(verdict)
    std::string error;  // non-empty when failed
    double latency_s = 0.0;
    std::string timestamp;  // ISO-8601 UTC

    std::string to_jsonl() const;  // one line, no trailing newline
    static TrialRecord from_json(const std::string& line);  // throws ConfigError
};

// Reads a JSON-lines trial log. A truncated final line (interrupted writer) is
// ignored; malformed lines elsewhere throw ConfigError. A missing file yields
// an empty list.
std::vector<TrialRecord> load_log(const std::filesystem::path& path);

// Deterministic order: (image_id, prompt_id, backend_id, trial_index).
void canonical_sort(std::vector<TrialRecord>& records);

// Canonical serialized form for comparing runs: records sorted canonically
// with the volatile fields (latency, timestamp) zeroed out. Two runs of the
// same plan against deterministic backends produce identical canonical logs.
std::string canonical_log(std::vector<TrialRecord> records);

using BackendMap = std::map<std::string, Backend*>;

struct RunResult {
    std::vector<TrialRecord> records;  // written by this invocation
    int skipped = 0;                   // keys already present in the log
    int failed = 0;                    // recorded failures among new records
};

// Runs every (image, prompt, backend, trial) combination of the plan,
// appending records to plan.output_log_path as they complete. Keys already in
// the log are skipped, so an interrupted run resumes where it stopped.
// Transport failures become failed records; configuration errors abort.
RunResult execute(const RunPlan& plan, const BackendMap& backends,
                  const PromptParams& prompt_params = PromptParams::defaults());

}  // namespace thermovqa
