#include "thermovqa/synth.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include <nlohmann/json.hpp>

#include "thermovqa/errors.hpp"
#include "thermovqa/image_io.hpp"
#include "thermovqa/oracle.hpp"
#include "thermovqa/util.hpp"

namespace thermovqa {

std::string to_string(ClassLabel c) {
    switch (c) {
        case ClassLabel::Normal: return "normal";
        case ClassLabel::Overheating: return "overheating";
        case ClassLabel::Reflection: return "reflection";
        case ClassLabel::SpatialTape: return "spatial_tape";
    }
    throw ConfigError("invalid class label value");
}

ClassLabel class_from_string(std::string_view s) {
    if (s == "normal") return ClassLabel::Normal;
    if (s == "overheating") return ClassLabel::Overheating;
    if (s == "reflection") return ClassLabel::Reflection;
    if (s == "spatial_tape") return ClassLabel::SpatialTape;
    throw ConfigError("unknown class label: '" + std::string(s) + "'");
}

BinaryLabel binary_label(ClassLabel c) {
    return c == ClassLabel::Normal ? BinaryLabel::Normal : BinaryLabel::Anomaly;
}

void SceneSpec::validate() const {
    if (width < 64 || height < 64) {
        throw ConfigError("scene dimensions must be at least 64x64");
    }
    if (background.kind == BackgroundSpec::Kind::Noisy &&
        background.noise_amplitude < 0) {
        throw ConfigError("background noise amplitude must be >= 0");
    }
    if (battery_rect) {
        battery_rect->validate();
    }
}

namespace {

// Generation margins. The pipeline re-derives temperatures through a colormap
// round trip (error < 0.2 degC) and, under preprocessing, a resampling pass,
// so scenes are built to clear the detector thresholds (50 / 4 / blob 25) with
// room to spare on whichever side their class demands.
constexpr double kPassTempMargin = 48.0;   // hottest allowed "passes" pixel
constexpr double kFailTempMargin = 51.8;   // coolest allowed "fails" peak
constexpr double kPassSmoothDev = 3.2;     // no pixel may deviate more
constexpr double kFailSmoothDev = 5.0;     // anomaly pixels deviate at least this
constexpr int kFailSmoothBlob = 40;        // in a cluster at least this large
constexpr double kEncodeFloor = 25.5;      // keep clear of the colormap range
constexpr double kEncodeCeil = 59.5;
constexpr int kMaxAttempts = 64;

// Battery-local coordinate frame: u along width, v along height, in pixels
// from the center.
struct LocalFrame {
    Vec2 center;
    double c = 1.0, s = 0.0;  // cos/sin of the rect angle
    double hw = 0.0, hh = 0.0;

    explicit LocalFrame(const OrientedRect& rect)
        : center(rect.center),
          c(std::cos(rect.angle_deg * std::numbers::pi / 180.0)),
          s(std::sin(rect.angle_deg * std::numbers::pi / 180.0)),
          hw(rect.width / 2.0),
          hh(rect.height / 2.0) {}

    void local(double px, double py, double& u, double& v) const {
        double dx = px - center.x;
        double dy = py - center.y;
        u = c * dx + s * dy;
        v = -s * dx + c * dy;
    }
    void global(double u, double v, double& px, double& py) const {
        px = center.x + c * u - s * v;
        py = center.y + s * u + c * v;
    }
};

OrientedRect random_battery_rect(const SceneSpec& spec, Rng& rng) {
    OrientedRect rect;
    rect.width = rng.uniform(145.0, 170.0) * spec.width / 256.0;
    rect.height = rng.uniform(80.0, 95.0) * spec.height / 192.0;
    rect.angle_deg = rng.uniform(10.0, 30.0) * (rng.chance(0.5) ? 1.0 : -1.0);
    rect.center = {spec.width / 2.0 + rng.uniform(-6.0, 6.0),
                   spec.height / 2.0 + rng.uniform(-6.0, 6.0)};
    return rect;
}

void require_rect_fits(const OrientedRect& rect, int width, int height) {
    LocalFrame frame(rect);
    for (int sx : {-1, 1}) {
        for (int sy : {-1, 1}) {
            double px, py;
            frame.global(sx * frame.hw, sy * frame.hh, px, py);
            if (px < 1.0 || py < 1.0 || px > width - 1.0 || py > height - 1.0) {
                std::ostringstream msg;
                msg << "battery rect corner (" << px << ", " << py
                    << ") falls outside the " << width << "x" << height << " frame";
                throw ConfigError(msg.str());
            }
        }
    }
}

// Smooth low-frequency base surface: level + amp * sin(a*u + b*v + phase) over
// normalized battery coordinates, plus small clamped Gaussian pixel noise.
struct BaseSurface {
    double level = 0.0;
    double amp = 0.0;
    double a = 0.0, b = 0.0, phase = 0.0;

    static BaseSurface draw(Rng& rng, double level_lo, double level_hi) {
        BaseSurface s;
        s.level = rng.uniform(level_lo, level_hi);
        s.amp = rng.uniform(0.8, 2.0);
        s.a = rng.uniform(0.6, 1.5);
        s.b = rng.uniform(0.6, 1.5);
        s.phase = rng.uniform(0.0, 2.0 * std::numbers::pi);
        return s;
    }

    double at(double un, double vn) const {  // un, vn in [-1, 1]
        return level + amp * std::sin(a * un + b * vn + phase);
    }
};

TemperatureField fill_base(const SceneSpec& spec, const LocalFrame& frame,
                           const BaseSurface& base, Rng& rng) {
    TemperatureField field(spec.width, spec.height);
    for (int y = 0; y < spec.height; ++y) {
        for (int x = 0; x < spec.width; ++x) {
            double u, v;
            frame.local(x + 0.5, y + 0.5, u, v);
            if (std::fabs(u) > frame.hw || std::fabs(v) > frame.hh) continue;
            double noise = std::clamp(rng.normal() * 0.25, -0.75, 0.75);
            std::size_t i = field.index(x, y);
            field.values[i] =
                static_cast<float>(base.at(u / frame.hw, v / frame.hh) + noise);
            field.foreground[i] = 1;
        }
    }
    return field;
}

float foreground_min(const TemperatureField& field) {
    float best = std::numeric_limits<float>::infinity();
    for (std::size_t i = 0; i < field.values.size(); ++i) {
        if (field.foreground[i]) best = std::min(best, field.values[i]);
    }
    return best;
}

bool margin_smooth_pass(const TemperatureField& field) {
    OracleParams tight;
    tight.spot_deviation = kPassSmoothDev;
    tight.min_blob_area = 1;
    return check_smoothness(field, tight).ok;
}

bool margin_smooth_fail(const TemperatureField& field) {
    OracleParams loose;
    loose.spot_deviation = kFailSmoothDev;
    loose.min_blob_area = kFailSmoothBlob;
    return !check_smoothness(field, loose).ok;
}

bool satisfies_margins(const TemperatureField& field, ClassLabel label) {
    if (field.foreground_count() == 0) return false;
    float mx = field.foreground_max();
    float mn = foreground_min(field);
    if (mn < kEncodeFloor || mx > kEncodeCeil) return false;
    switch (label) {
        case ClassLabel::Normal:
            return mx <= kPassTempMargin && margin_smooth_pass(field);
        case ClassLabel::Overheating:
            return mn >= 46.0 && mx >= kFailTempMargin && margin_smooth_pass(field);
        case ClassLabel::Reflection:
            return mx >= kFailTempMargin && margin_smooth_fail(field);
        case ClassLabel::SpatialTape:
            return mx <= kPassTempMargin && margin_smooth_fail(field);
    }
    return false;
}

// Gaussian hot spots for Reflection scenes.
void add_hot_spots(TemperatureField& field, const LocalFrame& frame,
                   const BaseSurface& base, Rng& rng, bool& placed) {
    placed = false;
    if (frame.hw <= 22.0 || frame.hh <= 18.0) return;  // no room for a spot
    double battery_width = 2.0 * frame.hw;
    int count = rng.uniform_int(1, 4);

    std::vector<std::pair<double, double>> centers;  // pixel coordinates
    for (int spot = 0; spot < count; ++spot) {
        // The first spot carries the class contract: a peak forced above
        // 53 degC and a sigma small enough that the local median window sees
        // the surrounding base, so both detector conditions fail decisively.
        bool primary = spot == 0;
        double sigma_frac =
            primary ? rng.uniform(0.030, 0.040) : rng.uniform(0.030, 0.050);
        double sigma = sigma_frac * battery_width;
        double amp = rng.uniform(14.0, 20.0);
        double peak_target = rng.uniform(53.5, 57.0);

        double su = 0.0, sv = 0.0;
        bool ok = false;
        for (int tries = 0; tries < 100 && !ok; ++tries) {
            su = rng.uniform(-(frame.hw - 20.0), frame.hw - 20.0);
            sv = rng.uniform(-(frame.hh - 16.0), frame.hh - 16.0);
            double px, py;
            frame.global(su, sv, px, py);
            ok = true;
            for (auto& [ox, oy] : centers) {
                if (std::hypot(px - ox, py - oy) < 30.0) {
                    ok = false;
                    break;
                }
            }
        }
        if (!ok) continue;  // crowded; settle for the spots placed so far

        if (primary) {
            double base_here = base.at(su / frame.hw, sv / frame.hh);
            amp = std::clamp(peak_target - base_here, 14.0, 20.0);
        }

        double px, py;
        frame.global(su, sv, px, py);
        centers.emplace_back(px, py);
        if (primary) placed = true;

        double reach = 4.0 * sigma;
        int x0 = std::max(0, static_cast<int>(px - reach));
        int x1 = std::min(field.width - 1, static_cast<int>(px + reach) + 1);
        int y0 = std::max(0, static_cast<int>(py - reach));
        int y1 = std::min(field.height - 1, static_cast<int>(py + reach) + 1);
        for (int y = y0; y <= y1; ++y) {
            for (int x = x0; x <= x1; ++x) {
                std::size_t i = field.index(x, y);
                if (!field.foreground[i]) continue;
                double d2 = std::pow(x + 0.5 - px, 2) + std::pow(y + 0.5 - py, 2);
                field.values[i] += static_cast<float>(
                    amp * std::exp(-d2 / (2.0 * sigma * sigma)));
            }
        }
    }

    // Keep the hottest overlaps encodable; the flat-topped plateau this can
    // produce still fails the smoothness check at its rim.
    for (std::size_t i = 0; i < field.values.size(); ++i) {
        if (field.foreground[i]) {
            field.values[i] = std::min(field.values[i],
                                       static_cast<float>(kEncodeCeil));
        }
    }
}

// Soft-edged elliptical cold patches for SpatialTape scenes. The 2.5 px
// temperature ramp at each rim keeps resampled edge pixels near the colormap
// curve, so cropped-and-rotated copies stay decodable.
void add_cold_patches(TemperatureField& field, const LocalFrame& frame, Rng& rng,
                      bool& placed) {
    placed = false;
    int count = rng.uniform_int(1, 3);
    constexpr double kRim = 2.5;

    std::vector<std::pair<double, double>> centers;  // battery-local coordinates
    for (int patch = 0; patch < count; ++patch) {
        double a = rng.uniform(6.0, 8.5);  // half-axes, pixels
        double b = rng.uniform(6.0, 8.5);
        double depth = rng.uniform(7.0, 9.5);

        double cu = 0.0, cv = 0.0;
        bool ok = false;
        for (int tries = 0; tries < 100 && !ok; ++tries) {
            double umax = frame.hw - 12.0 - a;
            double vmax = frame.hh - 12.0 - b;
            if (umax <= 0.0 || vmax <= 0.0) break;
            cu = rng.uniform(-umax, umax);
            cv = rng.uniform(-vmax, vmax);
            ok = true;
            for (auto& [ou, ov] : centers) {
                if (std::hypot(cu - ou, cv - ov) < 40.0) {
                    ok = false;
                    break;
                }
            }
        }
        if (!ok) continue;
        centers.emplace_back(cu, cv);
        placed = true;

        double reach = std::max(a, b) + 2.0;
        for (int y = 0; y < field.height; ++y) {
            for (int x = 0; x < field.width; ++x) {
                std::size_t i = field.index(x, y);
                if (!field.foreground[i]) continue;
                double u, v;
                frame.local(x + 0.5, y + 0.5, u, v);
                if (std::fabs(u - cu) > reach || std::fabs(v - cv) > reach) continue;
                double q = std::hypot((u - cu) / a, (v - cv) / b);
                if (q >= 1.0) continue;
                double strength =
                    std::clamp((1.0 - q) * std::min(a, b) / kRim, 0.0, 1.0);
                field.values[i] -= static_cast<float>(depth * strength);
            }
        }
    }
}

TemperatureField build_field(const SceneSpec& spec, const LocalFrame& frame,
                             ClassLabel label, Rng& rng) {
    switch (label) {
        case ClassLabel::Normal:
            return fill_base(spec, frame, BaseSurface::draw(rng, 38.0, 44.0), rng);
        case ClassLabel::Overheating:
            return fill_base(spec, frame, BaseSurface::draw(rng, 54.0, 56.5), rng);
        case ClassLabel::Reflection: {
            BaseSurface base = BaseSurface::draw(rng, 38.0, 44.0);
            TemperatureField field = fill_base(spec, frame, base, rng);
            bool placed = false;
            add_hot_spots(field, frame, base, rng, placed);
            if (!placed) field.values.clear();  // force a margin miss and retry
            return field;
        }
        case ClassLabel::SpatialTape: {
            TemperatureField field =
                fill_base(spec, frame, BaseSurface::draw(rng, 39.0, 43.0), rng);
            bool placed = false;
            add_cold_patches(field, frame, rng, placed);
            if (!placed) field.values.clear();
            return field;
        }
    }
    throw ConfigError("invalid class label value");
}

LabeledScene generate_impl(const SceneSpec& spec, ClassLabel label,
                           const ColormapSpec& cmap) {
    spec.validate();
    if (spec.class_label != label) {
        throw ConfigError("scene spec class '" + to_string(spec.class_label) +
                          "' does not match generator for '" + to_string(label) +
                          "'");
    }

    Rng rect_rng(mix_seed(spec.seed, 0xB0D7));
    OrientedRect rect = spec.battery_rect ? spec.battery_rect->canonical()
                                          : random_battery_rect(spec, rect_rng);
    require_rect_fits(rect, spec.width, spec.height);
    LocalFrame frame(rect);

    for (int attempt = 0; attempt < kMaxAttempts; ++attempt) {
        Rng rng(mix_seed(spec.seed, static_cast<std::uint64_t>(attempt)));
        TemperatureField field = build_field(spec, frame, label, rng);
        if (field.values.empty() || !satisfies_margins(field, label)) continue;

        BackgroundStyle style;
        if (spec.background.kind == BackgroundSpec::Kind::Solid) {
            style = BackgroundStyle::solid(cmap.color_at(
                spec.background.solid_temperature));
        } else {
            style = BackgroundStyle::noisy(spec.background.noise_amplitude,
                                           mix_seed(spec.seed, 0xBACC));
        }

        LabeledScene scene;
        scene.spec = spec;
        scene.battery_rect = rect;
        scene.image = encode(field, cmap, style);
        scene.field = std::move(field);
        scene.label = label;
        return scene;
    }
    throw ConfigError("could not generate a " + to_string(label) +
                      " scene satisfying its class contract (seed " +
                      std::to_string(spec.seed) + "); the spec geometry is " +
                      "likely too small for the scene structures");
}

}  // namespace

LabeledScene generate_normal(const SceneSpec& spec, const ColormapSpec& cmap) {
    return generate_impl(spec, ClassLabel::Normal, cmap);
}
LabeledScene generate_overheating(const SceneSpec& spec, const ColormapSpec& cmap) {
    return generate_impl(spec, ClassLabel::Overheating, cmap);
}
LabeledScene generate_reflection(const SceneSpec& spec, const ColormapSpec& cmap) {
    return generate_impl(spec, ClassLabel::Reflection, cmap);
}
LabeledScene generate_spatial_tape(const SceneSpec& spec, const ColormapSpec& cmap) {
    return generate_impl(spec, ClassLabel::SpatialTape, cmap);
}

LabeledScene generate_scene(const SceneSpec& spec, const ColormapSpec& cmap) {
    return generate_impl(spec, spec.class_label, cmap);
}

std::vector<LabeledScene> generate_dataset(std::uint64_t master_seed,
                                           DatasetCounts counts,
                                           const ColormapSpec& cmap) {
    if (counts.normal < 0 || counts.overheating < 0 || counts.reflection < 0 ||
        counts.spatial_tape < 0) {
        throw ConfigError("dataset counts must be non-negative");
    }
    std::vector<std::pair<ClassLabel, int>> plan = {
        {ClassLabel::Normal, counts.normal},
        {ClassLabel::Overheating, counts.overheating},
        {ClassLabel::Reflection, counts.reflection},
        {ClassLabel::SpatialTape, counts.spatial_tape},
    };
    std::vector<LabeledScene> scenes;
    std::uint64_t index = 0;
    for (auto& [label, count] : plan) {
        for (int k = 0; k < count; ++k, ++index) {
            SceneSpec spec;
            spec.class_label = label;
            spec.seed = mix_seed(master_seed, index);
            scenes.push_back(generate_scene(spec, cmap));
        }
    }
    return scenes;
}

void write_manifest(const std::vector<ManifestEntry>& entries,
                    const std::filesystem::path& manifest_path) {
    std::ostringstream out;
    for (const auto& entry : entries) {
        nlohmann::json row = {
            {"image_id", entry.image_id},
            {"path", entry.path.generic_string()},
            {"label", to_string(entry.label())},
            {"class", to_string(entry.class_label)},
            {"seed", entry.seed},
        };
        out << row.dump() << "\n";
    }
    write_text_file(manifest_path, out.str());
}

std::vector<ManifestEntry> read_manifest(const std::filesystem::path& manifest_path) {
    std::istringstream in(read_text_file(manifest_path));
    std::filesystem::path base = manifest_path.parent_path();
    std::vector<ManifestEntry> entries;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        nlohmann::json row;
        try {
            row = nlohmann::json::parse(line);
        } catch (const nlohmann::json::exception& e) {
            throw ConfigError("manifest line " + std::to_string(line_no) +
                              " is not valid JSON: " + e.what());
        }
        ManifestEntry entry;
        try {
            entry.image_id = row.at("image_id").get<std::string>();
            entry.class_label =
                class_from_string(row.at("class").get<std::string>());
            entry.seed = row.at("seed").get<std::uint64_t>();
            std::filesystem::path p = row.at("path").get<std::string>();
            entry.path = p.is_absolute() ? p : base / p;
        } catch (const nlohmann::json::exception& e) {
            throw ConfigError("manifest line " + std::to_string(line_no) +
                              " is missing fields: " + e.what());
        }
        if (row.contains("label") &&
            binary_from_string(row.at("label").get<std::string>()) !=
                entry.label()) {
            throw ConfigError("manifest line " + std::to_string(line_no) +
                              ": label disagrees with class");
        }
        entries.push_back(std::move(entry));
    }
    return entries;
}

std::filesystem::path write_dataset(const std::vector<LabeledScene>& scenes,
                                    const std::filesystem::path& out_dir) {
    std::filesystem::create_directories(out_dir / "images");
    std::vector<ManifestEntry> entries;
    int per_class[4] = {0, 0, 0, 0};
    for (const auto& scene : scenes) {
        int idx = per_class[static_cast<int>(scene.label)]++;
        char name[64];
        std::snprintf(name, sizeof(name), "%s_%03d",
                      to_string(scene.label).c_str(), idx);
        std::filesystem::path rel = std::filesystem::path("images") /
                                    (std::string(name) + ".png");
        write_png(out_dir / rel, scene.image);
        ManifestEntry entry;
        entry.image_id = name;
        entry.path = rel;
        entry.class_label = scene.label;
        entry.seed = scene.spec.seed;
        entries.push_back(std::move(entry));
    }
    std::filesystem::path manifest = out_dir / "manifest.jsonl";
    write_manifest(entries, manifest);
    return manifest;
}

}  // namespace thermovqa
