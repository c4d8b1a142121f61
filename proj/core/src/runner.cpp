#include "thermovqa/runner.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <fstream>
#include <mutex>
#include <set>
#include <thread>
#include <tuple>

#include "thermovqa/errors.hpp"
#include "thermovqa/image_io.hpp"
#include "thermovqa/parser.hpp"
#include "thermovqa/util.hpp"

namespace thermovqa {

int default_trials(BackendKind kind) {
    return kind == BackendKind::HttpChat ? 5 : 3;
}

void RunPlan::validate() const {
    if (manifest_path.empty()) {
        throw ConfigError("run plan needs a manifest path");
    }
    if (output_log_path.empty()) {
        throw ConfigError("run plan needs an output log path");
    }
    if (prompt_ids.empty()) {
        throw ConfigError("run plan needs at least one prompt id");
    }
    for (int id : prompt_ids) {
        if (id < 1 || id > 5) {
            throw ConfigError("prompt id out of range 1..5: " + std::to_string(id));
        }
    }
    if (backend_ids.empty()) {
        throw ConfigError("run plan needs at least one backend");
    }
    for (const auto& [backend_id, trials] : trials_per_backend) {
        if (trials < 1) {
            throw ConfigError("backend '" + backend_id +
                              "': trials must be >= 1, got " +
                              std::to_string(trials));
        }
    }
    if (concurrency_cap < 1) {
        throw ConfigError("concurrency_cap must be >= 1");
    }
}

std::string TrialRecord::to_jsonl() const {
    nlohmann::json row;
    row["image_id"] = image_id;
    row["ground_truth_label"] = to_string(ground_truth_label);
    row["ground_truth_class"] = to_string(ground_truth_class);
    row["prompt_id"] = prompt_id;
    row["backend_id"] = backend_id;
    row["trial_index"] = trial_index;
    row["ok"] = ok;
    if (ok) {
        row["raw_text"] = raw_text;
        row["verdict"] = to_string(verdict);
        row["binary_prediction"] = to_string(binary_prediction);
    } else {
        row["error"] = error;
    }
    row["latency"] = latency_s;
    row["timestamp"] = timestamp;
    return row.dump();
}

TrialRecord TrialRecord::from_json(const std::string& line) {
    nlohmann::json row;
    try {
        row = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("trial record is not valid JSON: ") +
                          e.what());
    }
    TrialRecord record;
    try {
        record.image_id = row.at("image_id").get<std::string>();
        record.ground_truth_label =
            binary_from_string(row.at("ground_truth_label").get<std::string>());
        record.ground_truth_class =
            class_from_string(row.at("ground_truth_class").get<std::string>());
        record.prompt_id = row.at("prompt_id").get<int>();
        record.backend_id = row.at("backend_id").get<std::string>();
        record.trial_index = row.at("trial_index").get<int>();
        record.ok = row.at("ok").get<bool>();
        if (record.ok) {
            record.raw_text = row.at("raw_text").get<std::string>();
            record.verdict =
                verdict_from_string(row.at("verdict").get<std::string>());
            record.binary_prediction = binary_from_string(
                row.at("binary_prediction").get<std::string>());
        } else {
            record.error = row.at("error").get<std::string>();
        }
        record.latency_s = row.at("latency").get<double>();
        record.timestamp = row.at("timestamp").get<std::string>();
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("trial record is missing fields: ") +
                          e.what());
    }
    return record;
}

std::vector<TrialRecord> load_log(const std::filesystem::path& path) {
    std::vector<TrialRecord> records;
    if (!std::filesystem::exists(path)) {
        return records;
    }
    std::string content = read_text_file(path);
    std::size_t pos = 0;
    while (pos < content.size()) {
        std::size_t nl = content.find('\n', pos);
        bool final_fragment = nl == std::string::npos;
        std::string line =
            content.substr(pos, final_fragment ? std::string::npos : nl - pos);
        pos = final_fragment ? content.size() : nl + 1;
        if (line.empty()) continue;
        try {
            records.push_back(TrialRecord::from_json(line));
        } catch (const ConfigError&) {
            if (final_fragment) {
                // Interrupted writer left a partial last line; drop it and let
                // the resume logic redo that trial.
                std::fprintf(stderr,
                             "warning: ignoring truncated final line of %s\n",
                             path.string().c_str());
                break;
            }
            throw;
        }
    }
    return records;
}

namespace {

using RecordKey = std::tuple<std::string, int, std::string, int>;

RecordKey key_of(const TrialRecord& record) {
    return {record.image_id, record.prompt_id, record.backend_id,
            record.trial_index};
}

}  // namespace

void canonical_sort(std::vector<TrialRecord>& records) {
    std::sort(records.begin(), records.end(),
              [](const TrialRecord& a, const TrialRecord& b) {
                  return key_of(a) < key_of(b);
              });
}

std::string canonical_log(std::vector<TrialRecord> records) {
    canonical_sort(records);
    std::string out;
    for (auto& record : records) {
        record.latency_s = 0.0;
        record.timestamp.clear();
        out += record.to_jsonl();
        out += "\n";
    }
    return out;
}

RunResult execute(const RunPlan& plan, const BackendMap& backends,
                  const PromptParams& prompt_params) {
    plan.validate();
    prompt_params.validate();

    std::vector<int> prompt_ids = plan.prompt_ids;
    std::sort(prompt_ids.begin(), prompt_ids.end());
    prompt_ids.erase(std::unique(prompt_ids.begin(), prompt_ids.end()),
                     prompt_ids.end());

    std::map<std::string, int> trials = plan.trials_per_backend;
    for (const auto& backend_id : plan.backend_ids) {
        auto found = backends.find(backend_id);
        if (found == backends.end() || found->second == nullptr) {
            throw ConfigError("plan references unknown backend '" + backend_id +
                              "'");
        }
        if (!trials.count(backend_id)) {
            trials[backend_id] = default_trials(found->second->config().kind);
        }
    }

    std::vector<ManifestEntry> entries = read_manifest(plan.manifest_path);
    if (entries.empty()) {
        throw ConfigError("manifest " + plan.manifest_path.string() +
                          " lists no images");
    }

    // Pre-render prompts and pre-load image bytes: both are shared read-only
    // across workers.
    std::map<int, std::string> prompt_texts;
    for (int id : prompt_ids) {
        prompt_texts[id] = render_prompt(id, prompt_params);
    }
    std::map<std::string, std::vector<std::uint8_t>> image_bytes;
    for (const auto& entry : entries) {
        image_bytes[entry.image_id] = read_file(entry.path);
    }

    std::set<RecordKey> completed;
    for (const auto& record : load_log(plan.output_log_path)) {
        completed.insert(key_of(record));
    }

    struct Task {
        const ManifestEntry* entry;
        int prompt_id;
        std::string backend_id;
        int trial_index;
    };
    std::vector<Task> tasks;
    int skipped = 0;
    for (const auto& entry : entries) {
        for (int prompt_id : prompt_ids) {
            for (const auto& backend_id : plan.backend_ids) {
                for (int trial = 0; trial < trials[backend_id]; ++trial) {
                    if (completed.count(
                            {entry.image_id, prompt_id, backend_id, trial})) {
                        ++skipped;
                        continue;
                    }
                    tasks.push_back({&entry, prompt_id, backend_id, trial});
                }
            }
        }
    }

    if (plan.output_log_path.has_parent_path()) {
        std::filesystem::create_directories(plan.output_log_path.parent_path());
    }
    // An interrupted writer can leave an unterminated final line; drop it so
    // appended records start on a clean line (its key was not counted as
    // completed, so the trial reruns).
    if (std::filesystem::exists(plan.output_log_path)) {
        std::string content = read_text_file(plan.output_log_path);
        std::size_t last_nl = content.find_last_of('\n');
        std::size_t clean = last_nl == std::string::npos ? 0 : last_nl + 1;
        if (clean != content.size()) {
            std::filesystem::resize_file(plan.output_log_path, clean);
        }
    }
    std::ofstream log(plan.output_log_path, std::ios::app);
    if (!log) {
        throw ConfigError("cannot open log for appending: " +
                          plan.output_log_path.string());
    }

    RunResult result;
    result.skipped = skipped;
    std::mutex writer_mutex;           // guards log + result
    std::atomic<std::size_t> next{0};
    std::atomic<bool> abort{false};
    std::exception_ptr config_failure;

    auto worker = [&]() {
        for (;;) {
            std::size_t i = next.fetch_add(1);
            if (i >= tasks.size() || abort.load()) return;
            const Task& task = tasks[i];

            TrialRecord record;
            record.image_id = task.entry->image_id;
            record.ground_truth_label = task.entry->label();
            record.ground_truth_class = task.entry->class_label;
            record.prompt_id = task.prompt_id;
            record.backend_id = task.backend_id;
            record.trial_index = task.trial_index;

            QueryRequest request;
            request.prompt_text = prompt_texts.at(task.prompt_id);
            request.image_png = image_bytes.at(task.entry->image_id);
            request.prompt_id = task.prompt_id;
            request.image_id = task.entry->image_id;
            request.trial_index = task.trial_index;

            try {
                RawResponse response =
                    backends.at(task.backend_id)->query(request);
                record.ok = true;
                record.raw_text = response.text;
                record.verdict = parse_verdict(response.text);
                record.binary_prediction = score_verdict(record.verdict);
                record.latency_s = response.latency_s;
            } catch (const ConfigError&) {
                // Systemic problem (bad auth, missing transcript entry):
                // abort the run instead of burning the whole plan on it.
                std::lock_guard lock(writer_mutex);
                if (!config_failure) config_failure = std::current_exception();
                abort.store(true);
                return;
            } catch (const std::exception& e) {
                record.ok = false;
                record.error = e.what();
            }
            record.timestamp = iso8601_utc_now();

            std::lock_guard lock(writer_mutex);
            log << record.to_jsonl() << "\n";
            log.flush();
            if (!record.ok) ++result.failed;
            result.records.push_back(std::move(record));
        }
    };

    int n_workers = static_cast<int>(
        std::min<std::size_t>(plan.concurrency_cap, std::max<std::size_t>(tasks.size(), 1)));
    std::vector<std::thread> pool;
    pool.reserve(n_workers);
    for (int w = 0; w < n_workers; ++w) {
        pool.emplace_back(worker);
    }
    for (auto& thread : pool) {
        thread.join();
    }
    if (config_failure) {
        std::rethrow_exception(config_failure);
    }

    canonical_sort(result.records);
    return result;
}

}  // namespace thermovqa
