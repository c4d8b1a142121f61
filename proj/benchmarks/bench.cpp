// Micro-benchmarks for the hot paths: colormap encode/decode, the smoothness
// rule's windowed median, answer parsing, prompt rendering, and AUC.
#include <benchmark/benchmark.h>

#include <string>
#include <vector>

#include "thermovqa/metrics.hpp"
#include "thermovqa/oracle.hpp"
#include "thermovqa/parser.hpp"
#include "thermovqa/prompts.hpp"
#include "thermovqa/synth.hpp"
#include "thermovqa/thermal.hpp"
#include "thermovqa/util.hpp"
#include "thermovqa/verdict.hpp"

namespace {

using namespace thermovqa;

const LabeledScene& reflection_scene() {
    static const LabeledScene scene = [] {
        SceneSpec spec;
        spec.class_label = ClassLabel::Reflection;
        spec.seed = 7;
        return generate_scene(spec);
    }();
    return scene;
}

void BM_ColormapEncode(benchmark::State& state) {
    const auto& scene = reflection_scene();
    const ColormapSpec cmap = ColormapSpec::standard();
    for (auto _ : state) {
        benchmark::DoNotOptimize(encode(scene.field, cmap));
    }
    state.SetItemsProcessed(state.iterations() * scene.field.width *
                            scene.field.height);
}
BENCHMARK(BM_ColormapEncode);

void BM_ColormapDecode(benchmark::State& state) {
    const auto& scene = reflection_scene();
    const ColormapSpec cmap = ColormapSpec::standard();
    for (auto _ : state) {
        benchmark::DoNotOptimize(decode(scene.image, cmap));
    }
    state.SetItemsProcessed(state.iterations() * scene.image.width *
                            scene.image.height);
}
BENCHMARK(BM_ColormapDecode);

void BM_SmoothnessCheck(benchmark::State& state) {
    const auto& scene = reflection_scene();
    OracleParams params;
    params.neighborhood_radius = static_cast<int>(state.range(0));
    for (auto _ : state) {
        benchmark::DoNotOptimize(check_smoothness(scene.field, params));
    }
    state.SetItemsProcessed(state.iterations() * scene.field.foreground_count());
}
BENCHMARK(BM_SmoothnessCheck)->Arg(5)->Arg(9)->Arg(15);

void BM_Classify(benchmark::State& state) {
    const auto& scene = reflection_scene();
    const OracleParams params;
    for (auto _ : state) {
        benchmark::DoNotOptimize(classify(scene.field, params));
    }
}
BENCHMARK(BM_Classify);

void BM_ParseVerdict(benchmark::State& state) {
    const std::string answers[] = {
        "a) Yes",
        "b) No. The image shows a bright hot spot near the tab.",
        "The distribution looks fairly even and the maximum stays below the "
        "threshold, so the battery appears healthy overall. Yes.",
        "It is hard to tell from this image alone.",
    };
    std::size_t i = 0;
    for (auto _ : state) {
        benchmark::DoNotOptimize(parse_verdict(answers[i++ % 4]));
    }
}
BENCHMARK(BM_ParseVerdict);

void BM_RenderPrompt(benchmark::State& state) {
    const PromptParams params = PromptParams::defaults();
    int id = 1;
    for (auto _ : state) {
        benchmark::DoNotOptimize(render_prompt(id, params));
        id = id % 5 + 1;
    }
}
BENCHMARK(BM_RenderPrompt);

void BM_AucFractionScore(benchmark::State& state) {
    Rng rng(99);
    std::vector<TrialRecord> records;
    for (int image = 0; image < 60; ++image) {
        for (int trial = 0; trial < 3; ++trial) {
            TrialRecord r;
            r.image_id = "img_" + std::to_string(image);
            r.ground_truth_class =
                image < 27 ? ClassLabel::Normal : ClassLabel::Overheating;
            r.ground_truth_label = binary_label(r.ground_truth_class);
            r.prompt_id = 1;
            r.backend_id = "bench";
            r.trial_index = trial;
            r.verdict = rng.chance(0.5) ? Verdict::Normal : Verdict::Anomaly;
            r.binary_prediction = score_verdict(r.verdict);
            r.raw_text = "x";
            records.push_back(std::move(r));
        }
    }
    for (auto _ : state) {
        benchmark::DoNotOptimize(auc(records, AucMethod::FractionScore));
    }
}
BENCHMARK(BM_AucFractionScore);

}  // namespace

BENCHMARK_MAIN();
