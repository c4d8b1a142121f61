// Command-line entry point: composes the library modules into the benchmark
// workflow (generate data, preprocess, render prompts, run trials, report).
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "thermovqa/config.hpp"
#include "thermovqa/errors.hpp"
#include "thermovqa/image_io.hpp"
#include "thermovqa/metrics.hpp"
#include "thermovqa/oracle.hpp"
#include "thermovqa/preprocess.hpp"
#include "thermovqa/prompts.hpp"
#include "thermovqa/runner.hpp"
#include "thermovqa/synth.hpp"
#include "thermovqa/thermal.hpp"

namespace {

using namespace thermovqa;

std::filesystem::path manifest_in(const std::filesystem::path& arg) {
    if (std::filesystem::is_directory(arg)) {
        return arg / "manifest.jsonl";
    }
    return arg;
}

void cmd_synth(std::uint64_t seed, const std::filesystem::path& out_dir,
               const DatasetCounts& counts) {
    auto scenes = generate_dataset(seed, counts);
    auto manifest = write_dataset(scenes, out_dir);
    std::cout << "wrote " << scenes.size() << " scenes, manifest: "
              << manifest.string() << "\n";
}

void cmd_preprocess(const std::filesystem::path& in,
                    const std::filesystem::path& out_dir, double inset) {
    auto entries = read_manifest(manifest_in(in));
    auto manifest = preprocess_dataset(entries, out_dir,
                                       ColormapSpec::standard(), inset);
    std::cout << "preprocessed " << entries.size() << " images, manifest: "
              << manifest.string() << "\n";
}

void cmd_render_prompt(int id) {
    std::cout << render_prompt(id, PromptParams::defaults()) << "\n";
}

void cmd_run(const std::filesystem::path& plan_path) {
    PlanConfig config = load_plan_file(plan_path);
    std::vector<std::unique_ptr<Backend>> owned;
    BackendMap backends;
    for (const auto& backend_config : config.backends) {
        owned.push_back(
            make_backend(backend_config, config.cmap, config.oracle_params));
        backends[backend_config.id] = owned.back().get();
    }
    RunResult result = execute(config.plan, backends, config.prompt_params);
    std::cout << "completed " << result.records.size() << " trials ("
              << result.failed << " failed), skipped "
              << result.skipped << " already-recorded keys\n"
              << "log: " << config.plan.output_log_path.string() << "\n";
}

void cmd_report(const std::filesystem::path& log_path, const std::string& method,
                const std::filesystem::path& out_base) {
    auto records = load_log(log_path);
    if (records.empty()) {
        throw ConfigError("log is empty: " + log_path.string());
    }
    auto rows = build_table(records, auc_method_from_string(method));
    std::cout << render_text_report(rows);
    if (!out_base.empty()) {
        auto paths = emit_report(rows, out_base);
        std::cout << "wrote " << paths.text.string() << " and "
                  << paths.csv.string() << "\n";
    }
}

void cmd_oracle_eval(const std::filesystem::path& manifest_path) {
    auto entries = read_manifest(manifest_in(manifest_path));
    if (entries.empty()) {
        throw ConfigError("manifest is empty: " + manifest_path.string());
    }
    const auto cmap = ColormapSpec::standard();
    const OracleParams params;
    // confusion[truth][prediction], 0 = normal, 1 = anomaly
    int confusion[2][2] = {{0, 0}, {0, 0}};
    int agree = 0;
    for (const auto& entry : entries) {
        auto image = read_png(entry.path);
        auto decoded = decode(image, cmap);
        auto report = classify(decoded.field, params);
        int truth = entry.label() == BinaryLabel::Anomaly;
        int predicted = report.verdict != Verdict::Normal;
        ++confusion[truth][predicted];
        agree += truth == predicted;
        std::printf("%-18s class=%-12s verdict=%-7s max_temp=%6.2f temp_ok=%d smooth_ok=%d\n",
                    entry.image_id.c_str(), to_string(entry.class_label).c_str(),
                    to_string(report.verdict).c_str(), report.max_temp,
                    report.temp_ok ? 1 : 0, report.smooth_ok ? 1 : 0);
    }
    std::printf("\nconfusion matrix (rows: truth, cols: predicted)\n");
    std::printf("%-10s %8s %8s\n", "", "normal", "anomaly");
    std::printf("%-10s %8d %8d\n", "normal", confusion[0][0], confusion[0][1]);
    std::printf("%-10s %8d %8d\n", "anomaly", confusion[1][0], confusion[1][1]);
    std::printf("agreement: %d/%zu (%.1f%%)\n", agree, entries.size(),
                100.0 * agree / static_cast<double>(entries.size()));
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Zero-shot battery thermal anomaly-detection benchmark"};
    app.require_subcommand(1);

    auto* synth = app.add_subcommand("synth", "Generate the synthetic dataset");
    std::uint64_t seed = kDefaultMasterSeed;
    std::filesystem::path synth_out;
    DatasetCounts counts;
    synth->add_option("--seed", seed, "Master seed")->capture_default_str();
    synth->add_option("--out", synth_out, "Output directory")->required();
    synth->add_option("--normal", counts.normal, "Normal scene count")
        ->capture_default_str();
    synth->add_option("--overheating", counts.overheating,
                      "Overheating scene count")->capture_default_str();
    synth->add_option("--reflection", counts.reflection,
                      "Reflection scene count")->capture_default_str();
    synth->add_option("--tape", counts.spatial_tape,
                      "Spatial-tape scene count")->capture_default_str();
    synth->callback([&] { cmd_synth(seed, synth_out, counts); });

    auto* preprocess = app.add_subcommand(
        "preprocess", "Detect, crop and rotate batteries out of a dataset");
    std::filesystem::path pre_in, pre_out;
    double inset = kDefaultInsetFraction;
    preprocess->add_option("--in", pre_in, "Input manifest file or dataset dir")
        ->required();
    preprocess->add_option("--out", pre_out, "Output directory")->required();
    preprocess->add_option("--inset", inset, "Inset fraction per side")
        ->capture_default_str();
    preprocess->callback([&] { cmd_preprocess(pre_in, pre_out, inset); });

    auto* render = app.add_subcommand("render-prompt",
                                      "Print one rendered prompt template");
    int prompt_id = 1;
    render->add_option("--id", prompt_id, "Prompt id (1-5)")->required();
    render->callback([&] { cmd_render_prompt(prompt_id); });

    auto* run = app.add_subcommand("run", "Run a trial plan against backends");
    std::filesystem::path plan_path;
    run->add_option("--plan", plan_path, "Plan file (INI)")->required();
    run->callback([&] { cmd_run(plan_path); });

    auto* report = app.add_subcommand("report", "Summarize a trial log");
    std::filesystem::path log_path, report_out;
    std::string auc_method = "fraction_score";
    report->add_option("--log", log_path, "Trial log (JSON lines)")->required();
    report->add_option("--auc-method", auc_method,
                       "fraction_score | per_trial_binary")
        ->capture_default_str();
    report->add_option("--out", report_out,
                       "Base path for <base>.txt and <base>.csv");
    report->callback([&] { cmd_report(log_path, auc_method, report_out); });

    auto* oracle_eval = app.add_subcommand(
        "oracle-eval", "Run the rule-based detector over a dataset");
    std::filesystem::path eval_manifest;
    oracle_eval->add_option("--manifest", eval_manifest,
                            "Manifest file or dataset dir")->required();
    oracle_eval->callback([&] { cmd_oracle_eval(eval_manifest); });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 1;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
