// Rule-based detector. The sliding-median smoothness check is validated
// against a naive nth_element reimplementation on random fields.
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "thermovqa/errors.hpp"
#include "thermovqa/oracle.hpp"
#include "thermovqa/synth.hpp"
#include "thermovqa/util.hpp"

#include "test_support.hpp"

using namespace thermovqa;

namespace {

TemperatureField uniform_field(int w, int h, float temp) {
    return TemperatureField(w, h, temp, true);
}

// Independent lower-median: collect the clipped window's foreground values
// and take the element at rank (n - 1) / 2.
float naive_window_median(const TemperatureField& field, int cx, int cy,
                          int radius) {
    std::vector<float> window;
    for (int y = std::max(0, cy - radius);
         y <= std::min(field.height - 1, cy + radius); ++y) {
        for (int x = std::max(0, cx - radius);
             x <= std::min(field.width - 1, cx + radius); ++x) {
            if (field.is_foreground(x, y)) window.push_back(field.at(x, y));
        }
    }
    REQUIRE(!window.empty());
    std::size_t rank = (window.size() - 1) / 2;
    std::nth_element(window.begin(), window.begin() + rank, window.end());
    return window[rank];
}

// Exact quarter-turn of a field: (x, y) -> (height-1-y, x).
TemperatureField rotate90(const TemperatureField& field) {
    TemperatureField out(field.height, field.width);
    for (int y = 0; y < field.height; ++y) {
        for (int x = 0; x < field.width; ++x) {
            int nx = field.height - 1 - y;
            int ny = x;
            out.values[out.index(nx, ny)] = field.at(x, y);
            out.foreground[out.index(nx, ny)] = field.foreground[field.index(x, y)];
        }
    }
    return out;
}

}  // namespace

TEST_CASE("oracle params validate their ranges") {
    CHECK_NOTHROW(OracleParams{}.validate());
    OracleParams p;
    p.temp_threshold = 0.0;
    CHECK_THROWS_AS(p.validate(), ConfigError);
    p = {};
    p.spot_deviation = -1.0;
    CHECK_THROWS_AS(p.validate(), ConfigError);
    p = {};
    p.neighborhood_radius = 0;
    CHECK_THROWS_AS(p.validate(), ConfigError);
    p = {};
    p.min_blob_area = 0;
    CHECK_THROWS_AS(p.validate(), ConfigError);
}

TEST_CASE("uniform fields classify by temperature alone") {
    OracleParams params;
    TemperatureField cool = uniform_field(40, 30, 35.0f);
    OracleReport report = classify(cool, params);
    CHECK(report.verdict == Verdict::Normal);
    CHECK(report.temp_ok);
    CHECK(report.smooth_ok);
    CHECK(report.max_temp == doctest::Approx(35.0));

    TemperatureField hot = uniform_field(40, 30, 55.0f);
    report = classify(hot, params);
    CHECK(report.verdict == Verdict::Anomaly);
    CHECK_FALSE(report.temp_ok);
    CHECK(report.smooth_ok);  // uniformly hot is still smooth
    CHECK(report.max_temp == doctest::Approx(55.0));
}

TEST_CASE("the temperature rule is strict at the threshold") {
    OracleParams params;  // threshold 50
    CHECK(check_temperature(uniform_field(10, 10, 49.9f), params).ok);
    CHECK_FALSE(check_temperature(uniform_field(10, 10, 50.0f), params).ok);
    CHECK_FALSE(check_temperature(uniform_field(10, 10, 50.1f), params).ok);
}

TEST_CASE("a hot patch trips both rules") {
    OracleParams params;
    TemperatureField field = uniform_field(60, 40, 45.0f);
    for (int y = 15; y < 25; ++y) {
        for (int x = 20; x < 30; ++x) {
            field.at(x, y) = 55.0f;
        }
    }
    OracleReport report = classify(field, params);
    CHECK(report.verdict == Verdict::Anomaly);
    CHECK_FALSE(report.temp_ok);
    CHECK_FALSE(report.smooth_ok);
    CHECK(report.max_temp == doctest::Approx(55.0));

    SmoothnessCheck smooth = check_smoothness(field, params);
    CHECK(smooth.max_blob_area == 100);
    // The spot mask marks exactly the patch.
    for (int y = 0; y < field.height; ++y) {
        for (int x = 0; x < field.width; ++x) {
            bool in_patch = x >= 20 && x < 30 && y >= 15 && y < 25;
            CHECK(smooth.spot_mask[field.index(x, y)] == (in_patch ? 1 : 0));
        }
    }
}

TEST_CASE("a gentle gradient stays smooth") {
    OracleParams params;
    TemperatureField field(200, 60, 0.0f, true);
    for (int y = 0; y < field.height; ++y) {
        for (int x = 0; x < field.width; ++x) {
            field.at(x, y) = static_cast<float>(38.0 + 6.0 * x / field.width);
        }
    }
    OracleReport report = classify(field, params);
    CHECK(report.verdict == Verdict::Normal);
    CHECK(report.smooth_ok);
    CHECK(check_smoothness(field, params).max_blob_area == 0);
}

TEST_CASE("the smoothness rule uses the lower median") {
    // Four pixels, one window: values 30, 31, 39, 40. The lower median is ~31,
    // so only the 40-pixel deviates by more than 8.2; with the upper median
    // (~39) it would instead be the 30-pixel.
    TemperatureField field(2, 2, 0.0f, true);
    field.at(0, 0) = 30.0f;
    field.at(1, 0) = 31.0f;
    field.at(0, 1) = 39.0f;
    field.at(1, 1) = 40.0f;
    OracleParams params;
    params.spot_deviation = 8.2;
    params.min_blob_area = 1;
    params.neighborhood_radius = 9;
    SmoothnessCheck smooth = check_smoothness(field, params);
    CHECK(smooth.spot_mask[field.index(1, 1)] == 1);
    CHECK(smooth.spot_mask[field.index(0, 0)] == 0);
    CHECK(smooth.spot_mask[field.index(1, 0)] == 0);
    CHECK(smooth.spot_mask[field.index(0, 1)] == 0);
    CHECK(smooth.max_blob_area == 1);
    CHECK_FALSE(smooth.ok);
}

TEST_CASE("blob area gates the smoothness verdict") {
    OracleParams params;  // min_blob_area 25
    auto base = [] { return uniform_field(80, 60, 40.0f); };

    // 5x5 block: area 25 >= 25 -> fails.
    TemperatureField fail_field = base();
    for (int y = 20; y < 25; ++y) {
        for (int x = 30; x < 35; ++x) fail_field.at(x, y) = 48.0f;
    }
    SmoothnessCheck check = check_smoothness(fail_field, params);
    CHECK(check.max_blob_area == 25);
    CHECK_FALSE(check.ok);

    // Same block missing one corner: area 24 -> passes.
    TemperatureField pass_field = base();
    for (int y = 20; y < 25; ++y) {
        for (int x = 30; x < 35; ++x) {
            if (x == 30 && y == 20) continue;
            pass_field.at(x, y) = 48.0f;
        }
    }
    check = check_smoothness(pass_field, params);
    CHECK(check.max_blob_area == 24);
    CHECK(check.ok);
}

TEST_CASE("clusters merge across diagonals but not gaps") {
    OracleParams params;  // min_blob_area 25

    // Two runs of 13 and 12 touching corner-to-corner: one 25-pixel blob.
    TemperatureField touching = uniform_field(80, 60, 40.0f);
    for (int x = 10; x < 23; ++x) touching.at(x, 20) = 48.0f;
    for (int x = 23; x < 35; ++x) touching.at(x, 21) = 48.0f;
    SmoothnessCheck check = check_smoothness(touching, params);
    CHECK(check.max_blob_area == 25);
    CHECK_FALSE(check.ok);

    // The same runs two rows apart: two separate blobs, both small.
    TemperatureField apart = uniform_field(80, 60, 40.0f);
    for (int x = 10; x < 23; ++x) apart.at(x, 20) = 48.0f;
    for (int x = 23; x < 35; ++x) apart.at(x, 23) = 48.0f;
    check = check_smoothness(apart, params);
    CHECK(check.max_blob_area == 13);
    CHECK(check.ok);
}

TEST_CASE("sliding median matches a naive reimplementation") {
    OracleParams params;
    Rng rng(314);
    for (int trial = 0; trial < 3; ++trial) {
        // Random field with an irregular (circular) foreground and a few
        // planted outliers, so both mask restriction and spots are exercised.
        TemperatureField field(48, 36, 0.0f, false);
        double cx = 24.0, cy = 18.0, r = 16.0;
        for (int y = 0; y < field.height; ++y) {
            for (int x = 0; x < field.width; ++x) {
                if (std::hypot(x - cx, y - cy) > r) continue;
                std::size_t i = field.index(x, y);
                field.foreground[i] = 1;
                field.values[i] = static_cast<float>(rng.uniform(36.0, 44.0));
            }
        }
        for (int k = 0; k < 10; ++k) {
            int x = rng.uniform_int(14, 34);
            int y = rng.uniform_int(10, 26);
            if (field.is_foreground(x, y)) {
                field.at(x, y) += static_cast<float>(rng.uniform(5.0, 9.0));
            }
        }

        SmoothnessCheck impl = check_smoothness(field, params);
        int skipped = 0, compared = 0;
        for (int y = 0; y < field.height; ++y) {
            for (int x = 0; x < field.width; ++x) {
                if (!field.is_foreground(x, y)) {
                    CHECK(impl.spot_mask[field.index(x, y)] == 0);
                    continue;
                }
                float median = naive_window_median(field, x, y,
                                                   params.neighborhood_radius);
                double dev = std::fabs(field.at(x, y) - median);
                // The implementation quantizes medians to 0.01-degC bins
                // (centers), so decisions within half a bin of the threshold
                // are legitimately either way.
                if (std::fabs(dev - params.spot_deviation) <= 0.02) {
                    ++skipped;
                    continue;
                }
                ++compared;
                bool expect_spot = dev > params.spot_deviation;
                CHECK(impl.spot_mask[field.index(x, y)] == (expect_spot ? 1 : 0));
            }
        }
        CHECK(compared > 500);
        CHECK(skipped < 40);
    }
}

TEST_CASE("detector rejects unusable inputs") {
    OracleParams params;
    TemperatureField empty;
    CHECK_THROWS_AS(classify(empty, params), DetectionError);

    TemperatureField background_only(30, 30, 0.0f, false);
    CHECK_THROWS_AS(classify(background_only, params), DetectionError);

    // Foreground no larger than min_blob_area cannot support the blob rule.
    TemperatureField tiny = uniform_field(5, 5, 40.0f);  // 25 px == min_blob_area
    CHECK_THROWS_AS(check_smoothness(tiny, params), DetectionError);
    CHECK_NOTHROW(check_smoothness(uniform_field(5, 6, 40.0f), params));
}

TEST_CASE("classify matches each synthetic class contract") {
    OracleParams params;
    const auto& scenes = testsupport::sample_scenes();
    REQUIRE(scenes.size() == 4);

    OracleReport normal = classify(scenes[0].field, params);
    CHECK(normal.verdict == Verdict::Normal);

    OracleReport overheating = classify(scenes[1].field, params);
    CHECK(overheating.verdict == Verdict::Anomaly);
    CHECK_FALSE(overheating.temp_ok);
    CHECK(overheating.smooth_ok);

    OracleReport reflection = classify(scenes[2].field, params);
    CHECK(reflection.verdict == Verdict::Anomaly);
    CHECK_FALSE(reflection.temp_ok);
    CHECK_FALSE(reflection.smooth_ok);

    OracleReport tape = classify(scenes[3].field, params);
    CHECK(tape.verdict == Verdict::Anomaly);
    CHECK(tape.temp_ok);
    CHECK_FALSE(tape.smooth_ok);
}

TEST_CASE("raising the temperature threshold never flips Normal to Anomaly") {
    for (const auto& scene : testsupport::sample_scenes()) {
        bool was_normal = false;
        for (double threshold : {40.0, 45.0, 50.0, 55.0, 60.0}) {
            OracleParams params;
            params.temp_threshold = threshold;
            bool normal =
                classify(scene.field, params).verdict == Verdict::Normal;
            if (was_normal) CHECK(normal);
            was_normal = normal;
        }
    }
}

TEST_CASE("verdicts are invariant under exact quarter-turn rotation") {
    OracleParams params;
    for (const auto& scene : testsupport::sample_scenes()) {
        TemperatureField rotated = rotate90(scene.field);
        OracleReport a = classify(scene.field, params);
        OracleReport b = classify(rotated, params);
        CHECK(a.verdict == b.verdict);
        CHECK(a.temp_ok == b.temp_ok);
        CHECK(a.smooth_ok == b.smooth_ok);
        CHECK(a.max_temp == b.max_temp);
    }
}

TEST_CASE("verdicts survive a change of battery orientation at generation") {
    for (ClassLabel label : {ClassLabel::Normal, ClassLabel::Reflection,
                             ClassLabel::SpatialTape}) {
        SceneSpec flat;
        flat.class_label = label;
        flat.seed = 555;
        flat.battery_rect = OrientedRect{{128.0, 96.0}, 150.0, 84.0, 0.0};
        SceneSpec tilted = flat;
        tilted.battery_rect = OrientedRect{{128.0, 96.0}, 150.0, 84.0, 25.0};

        OracleParams params;
        Verdict a = classify(generate_scene(flat).field, params).verdict;
        Verdict b = classify(generate_scene(tilted).field, params).verdict;
        CHECK(a == b);
        CHECK(a == (label == ClassLabel::Normal ? Verdict::Normal
                                                : Verdict::Anomaly));
    }
}
