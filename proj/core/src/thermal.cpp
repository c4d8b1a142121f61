#include "thermovqa/thermal.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "thermovqa/errors.hpp"
#include "thermovqa/util.hpp"

namespace thermovqa {

namespace {

// Allowance for float-stored temperatures that round-trip a hair outside the
// nominal range.
constexpr double kRangeEpsilon = 1e-4;

double sqr(double v) { return v * v; }

}  // namespace

ColormapSpec ColormapSpec::standard() {
    ColormapSpec spec;
    spec.anchor_colors = {Rgb{0, 0, 0},      Rgb{0, 0, 255},    Rgb{0, 255, 255},
                          Rgb{255, 255, 0},  Rgb{255, 165, 0},  Rgb{255, 0, 0},
                          Rgb{255, 255, 255}};
    spec.anchor_names = {"black", "blue", "cyan", "yellow", "orange", "red", "white"};
    spec.t_min = 25.0;
    spec.t_max = 60.0;
    return spec;
}

double ColormapSpec::anchor_temperature(int k) const {
    if (k < 0 || k > 6) {
        throw RangeError("colormap anchor index out of range: " + std::to_string(k));
    }
    return t_min + static_cast<double>(k) * (t_max - t_min) / 6.0;
}

Rgb ColormapSpec::color_at(double temperature) const {
    if (!(temperature >= t_min - kRangeEpsilon && temperature <= t_max + kRangeEpsilon)) {
        std::ostringstream msg;
        msg << "temperature " << temperature << " outside colormap range [" << t_min
            << ", " << t_max << "]";
        throw RangeError(msg.str());
    }
    double t = std::clamp(temperature, t_min, t_max);
    double pos = (t - t_min) / (t_max - t_min) * 6.0;
    int k = std::min(static_cast<int>(pos), 5);
    double frac = pos - k;
    const Rgb& lo = anchor_colors[k];
    const Rgb& hi = anchor_colors[k + 1];
    Rgb out;
    for (int c = 0; c < 3; ++c) {
        double v = lo[c] + (hi[c] - lo[c]) * frac;
        out[c] = static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 255.0)));
    }
    return out;
}

void ColormapSpec::validate() const {
    if (!(t_min < t_max)) {
        throw ConfigError("colormap requires t_min < t_max");
    }
    for (const auto& name : anchor_names) {
        if (name.empty()) {
            throw ConfigError("colormap anchor names must be non-empty");
        }
    }
    // Adjacent anchors must differ, otherwise a whole segment collapses to one
    // color and decode becomes ambiguous over a 1/6 span of the range.
    for (int k = 0; k < 6; ++k) {
        if (anchor_colors[k] == anchor_colors[k + 1]) {
            throw ConfigError("colormap anchors " + std::to_string(k) + " and " +
                              std::to_string(k + 1) + " are identical");
        }
    }
}

TemperatureField::TemperatureField(int w, int h, float fill, bool fg)
    : width(w),
      height(h),
      values(static_cast<std::size_t>(w) * h, fill),
      foreground(static_cast<std::size_t>(w) * h, fg ? 1 : 0) {}

int TemperatureField::foreground_count() const {
    return static_cast<int>(std::count(foreground.begin(), foreground.end(), 1));
}

float TemperatureField::foreground_max() const {
    float best = -std::numeric_limits<float>::infinity();
    bool any = false;
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (foreground[i]) {
            best = std::max(best, values[i]);
            any = true;
        }
    }
    if (!any) {
        throw ConfigError("temperature field has no foreground pixels");
    }
    return best;
}

ThermalImage::ThermalImage(int w, int h)
    : width(w), height(h), pixels(static_cast<std::size_t>(w) * h * 3, 0) {}

ThermalImage encode(const TemperatureField& field, const ColormapSpec& cmap,
                    const BackgroundStyle& background) {
    cmap.validate();
    if (background.noise_amplitude < 0) {
        throw ConfigError("background noise amplitude must be >= 0");
    }
    ThermalImage image(field.width, field.height);
    Rng noise(background.noise_seed);
    for (int y = 0; y < field.height; ++y) {
        for (int x = 0; x < field.width; ++x) {
            if (field.is_foreground(x, y)) {
                double t = field.at(x, y);
                try {
                    image.set_rgb(x, y, cmap.color_at(t));
                } catch (const RangeError&) {
                    std::ostringstream msg;
                    msg << "pixel (" << x << ", " << y << "): temperature " << t
                        << " outside colormap range [" << cmap.t_min << ", "
                        << cmap.t_max << "]";
                    throw RangeError(msg.str());
                }
            } else {
                Rgb c = background.base;
                if (background.noise_amplitude > 0) {
                    for (int ch = 0; ch < 3; ++ch) {
                        int v = c[ch] + noise.uniform_int(-background.noise_amplitude,
                                                          background.noise_amplitude);
                        c[ch] = static_cast<std::uint8_t>(std::clamp(v, 0, 255));
                    }
                }
                image.set_rgb(x, y, c);
            }
        }
    }
    return image;
}

namespace {

// Dense sampling of the colormap curve used by decode(). 4096 samples keep the
// worst-case temperature quantization at ~0.0085 degC and the worst-case RGB
// residual for an encoded pixel under 1.0.
constexpr int kCurveSamples = 4096;

struct CurveTable {
    std::vector<double> temps;                  // sample index -> temperature
    std::vector<std::array<double, 3>> colors;  // sample index -> RGB
};

CurveTable build_curve(const ColormapSpec& cmap) {
    CurveTable table;
    table.temps.resize(kCurveSamples);
    table.colors.resize(kCurveSamples);
    for (int i = 0; i < kCurveSamples; ++i) {
        double t = cmap.t_min + (cmap.t_max - cmap.t_min) * i / (kCurveSamples - 1);
        Rgb c = cmap.color_at(t);
        table.temps[i] = t;
        table.colors[i] = {static_cast<double>(c[0]), static_cast<double>(c[1]),
                           static_cast<double>(c[2])};
    }
    return table;
}

}  // namespace

DecodeResult decode(const ThermalImage& image, const ColormapSpec& cmap,
                    double foreground_threshold) {
    cmap.validate();
    const CurveTable curve = build_curve(cmap);

    DecodeResult result;
    result.field = TemperatureField(image.width, image.height);
    result.residual.assign(static_cast<std::size_t>(image.width) * image.height, 0.0f);

    // Coarse-to-fine nearest-sample search. The curve is piecewise linear with
    // six segments, so the distance-to-pixel function along it has only a few
    // local basins; scanning a 64-spaced grid and refining around the best few
    // coarse hits finds the global nearest sample without a full scan.
    constexpr int kCoarseStep = 64;
    constexpr int kRefineRadius = 96;  // > kCoarseStep so adjacent basins overlap

    for (int y = 0; y < image.height; ++y) {
        for (int x = 0; x < image.width; ++x) {
            Rgb px = image.rgb(x, y);
            double r = px[0], g = px[1], b = px[2];

            // Coarse pass: keep the three best-separated coarse candidates.
            int best_coarse[3] = {0, 0, 0};
            double best_dist[3] = {std::numeric_limits<double>::infinity(),
                                   std::numeric_limits<double>::infinity(),
                                   std::numeric_limits<double>::infinity()};
            for (int i = 0; i < kCurveSamples; i += kCoarseStep) {
                double d = sqr(curve.colors[i][0] - r) + sqr(curve.colors[i][1] - g) +
                           sqr(curve.colors[i][2] - b);
                if (d < best_dist[0]) {
                    best_dist[2] = best_dist[1];
                    best_coarse[2] = best_coarse[1];
                    best_dist[1] = best_dist[0];
                    best_coarse[1] = best_coarse[0];
                    best_dist[0] = d;
                    best_coarse[0] = i;
                } else if (d < best_dist[1]) {
                    best_dist[2] = best_dist[1];
                    best_coarse[2] = best_coarse[1];
                    best_dist[1] = d;
                    best_coarse[1] = i;
                } else if (d < best_dist[2]) {
                    best_dist[2] = d;
                    best_coarse[2] = i;
                }
            }

            int best_index = 0;
            double best = std::numeric_limits<double>::infinity();
            for (int cand = 0; cand < 3; ++cand) {
                if (!std::isfinite(best_dist[cand])) continue;
                int lo = std::max(0, best_coarse[cand] - kRefineRadius);
                int hi = std::min(kCurveSamples - 1, best_coarse[cand] + kRefineRadius);
                for (int i = lo; i <= hi; ++i) {
                    double d = sqr(curve.colors[i][0] - r) +
                               sqr(curve.colors[i][1] - g) +
                               sqr(curve.colors[i][2] - b);
                    if (d < best) {
                        best = d;
                        best_index = i;
                    }
                }
            }

            double dist = std::sqrt(best);
            std::size_t idx = result.field.index(x, y);
            result.field.values[idx] = static_cast<float>(curve.temps[best_index]);
            result.field.foreground[idx] = dist < foreground_threshold ? 1 : 0;
            result.residual[idx] = static_cast<float>(dist);
        }
    }
    return result;
}

}  // namespace thermovqa
