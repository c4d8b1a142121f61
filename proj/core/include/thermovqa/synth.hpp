#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "thermovqa/geometry.hpp"
#include "thermovqa/thermal.hpp"
#include "thermovqa/verdict.hpp"

namespace thermovqa {

// The four test-set scene classes.
enum class ClassLabel { Normal, Overheating, Reflection, SpatialTape };

std::string to_string(ClassLabel c);
ClassLabel class_from_string(std::string_view s);  // throws ConfigError

// Ground-truth binary label: Normal is normal, everything else is an anomaly.
BinaryLabel binary_label(ClassLabel c);

// How the area outside the battery is rendered.
struct BackgroundSpec {
    enum class Kind { Solid, Noisy };
    Kind kind = Kind::Noisy;
    double solid_temperature = 30.0;  // colormap color used when kind == Solid
    int noise_amplitude = 24;         // +/- RGB units per channel when Noisy

    static BackgroundSpec solid(double celsius) {
        return {Kind::Solid, celsius, 0};
    }
    static BackgroundSpec noisy(int amplitude) {
        return {Kind::Noisy, 30.0, amplitude};
    }
};

struct SceneSpec {
    ClassLabel class_label = ClassLabel::Normal;
    std::uint64_t seed = 0;
    int width = 256;
    int height = 192;
    // Randomized (rotated 10-30 degrees) when absent. When given, must fit
    // inside the frame.
    std::optional<OrientedRect> battery_rect;
    BackgroundSpec background;

    void validate() const;  // throws ConfigError
};

struct LabeledScene {
    SceneSpec spec;
    OrientedRect battery_rect;  // resolved (randomized or passed through)
    TemperatureField field;     // ground-truth temperatures + battery mask
    ThermalImage image;         // colormap-rendered scene
    ClassLabel label = ClassLabel::Normal;
};

// Per-class generators. Each builds a temperature field satisfying its class
// contract with margin to spare (verified internally; parameter draws are
// re-rolled on the rare miss), then renders it through the colormap:
//   Normal      — low-frequency gradient, max <= 48 degC, locally smooth
//   Overheating — same smoothness, whole battery shifted above 50 degC
//   Reflection  — normal base plus 1-4 Gaussian hot spots, one peak > 50 degC
//   SpatialTape — normal base plus 1-3 cold elliptical patches, max < 50 degC
// Throws ConfigError when spec and class_label disagree or when the spec
// cannot produce a contract-satisfying scene.
LabeledScene generate_normal(const SceneSpec& spec,
                             const ColormapSpec& cmap = ColormapSpec::standard());
LabeledScene generate_overheating(
    const SceneSpec& spec, const ColormapSpec& cmap = ColormapSpec::standard());
LabeledScene generate_reflection(
    const SceneSpec& spec, const ColormapSpec& cmap = ColormapSpec::standard());
LabeledScene generate_spatial_tape(
    const SceneSpec& spec, const ColormapSpec& cmap = ColormapSpec::standard());

// Dispatches on spec.class_label.
LabeledScene generate_scene(const SceneSpec& spec,
                            const ColormapSpec& cmap = ColormapSpec::standard());

struct DatasetCounts {
    int normal = 27;
    int overheating = 13;
    int reflection = 12;
    int spatial_tape = 8;
};

inline constexpr std::uint64_t kDefaultMasterSeed = 42;

// Generates counts.normal Normal scenes, then Overheating, Reflection and
// SpatialTape, with per-scene seeds derived deterministically from master_seed.
std::vector<LabeledScene> generate_dataset(
    std::uint64_t master_seed, DatasetCounts counts = {},
    const ColormapSpec& cmap = ColormapSpec::standard());

// One dataset row: where the image lives and what it is.
struct ManifestEntry {
    std::string image_id;
    std::filesystem::path path;  // resolved against the manifest's directory
    ClassLabel class_label = ClassLabel::Normal;
    std::uint64_t seed = 0;

    BinaryLabel label() const { return binary_label(class_label); }
};

void write_manifest(const std::vector<ManifestEntry>& entries,
                    const std::filesystem::path& manifest_path);
std::vector<ManifestEntry> read_manifest(const std::filesystem::path& manifest_path);

// Writes scene PNGs under out_dir/images/ plus out_dir/manifest.jsonl;
// returns the manifest path.
std::filesystem::path write_dataset(const std::vector<LabeledScene>& scenes,
                                    const std::filesystem::path& out_dir);

}  // namespace thermovqa
