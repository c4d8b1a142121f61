#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

namespace thermovqa {

using Rgb = std::array<std::uint8_t, 3>;

// Temperature-to-color mapping: seven anchor colors spaced uniformly across
// [t_min, t_max], interpolated linearly in RGB between neighbours.
struct ColormapSpec {
    std::array<Rgb, 7> anchor_colors;
    std::array<std::string, 7> anchor_names;
    double t_min = 25.0;
    double t_max = 60.0;

    // black -> blue -> cyan -> yellow -> orange -> red -> white over [25, 60]
    static ColormapSpec standard();

    double anchor_temperature(int k) const;  // t_min + k * (t_max - t_min) / 6

    // piecewise-linear interpolation rounded to RGB8; throws RangeError outside
    // [t_min, t_max] (with a small epsilon allowance for float storage)
    Rgb color_at(double temperature) const;

    void validate() const;
};

// 2D grid of Celsius values with a battery-vs-background mask.
struct TemperatureField {
    int width = 0;
    int height = 0;
    std::vector<float> values;             // width * height, row-major
    std::vector<std::uint8_t> foreground;  // 0/1, same layout

    TemperatureField() = default;
    TemperatureField(int w, int h, float fill = 0.0f, bool fg = false);

    std::size_t index(int x, int y) const {
        return static_cast<std::size_t>(y) * static_cast<std::size_t>(width) + x;
    }
    float at(int x, int y) const { return values[index(x, y)]; }
    float& at(int x, int y) { return values[index(x, y)]; }
    bool is_foreground(int x, int y) const { return foreground[index(x, y)] != 0; }

    int foreground_count() const;
    // max over foreground pixels; throws ConfigError when the mask is empty
    float foreground_max() const;
};

// 8-bit RGB raster.
struct ThermalImage {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> pixels;  // 3 * width * height, row-major RGB

    ThermalImage() = default;
    ThermalImage(int w, int h);

    std::size_t offset(int x, int y) const {
        return (static_cast<std::size_t>(y) * static_cast<std::size_t>(width) + x) * 3;
    }
    Rgb rgb(int x, int y) const {
        std::size_t o = offset(x, y);
        return {pixels[o], pixels[o + 1], pixels[o + 2]};
    }
    void set_rgb(int x, int y, const Rgb& c) {
        std::size_t o = offset(x, y);
        pixels[o] = c[0];
        pixels[o + 1] = c[1];
        pixels[o + 2] = c[2];
    }

    bool operator==(const ThermalImage&) const = default;
};

// How encode() paints non-battery pixels.
struct BackgroundStyle {
    Rgb base{128, 128, 128};
    int noise_amplitude = 0;  // +/- per channel, uniform
    std::uint64_t noise_seed = 0;

    static BackgroundStyle solid(Rgb color) { return {color, 0, 0}; }
    static BackgroundStyle noisy(int amplitude, std::uint64_t seed) {
        return {{128, 128, 128}, amplitude, seed};
    }
};

// Renders a temperature field to RGB. Foreground pixels take their colormap
// color; background pixels take the background style. Throws RangeError for
// foreground temperatures outside [t_min, t_max], naming pixel and value.
ThermalImage encode(const TemperatureField& field, const ColormapSpec& cmap,
                    const BackgroundStyle& background = {});

// Residual below which a pixel counts as decodable battery foreground.
inline constexpr double kDecodableResidual = 60.0;

struct DecodeResult {
    TemperatureField field;       // foreground = residual < foreground_threshold
    std::vector<float> residual;  // per-pixel RGB distance to the colormap curve
};

// Inverts the colormap by nearest point on a densely sampled curve. Total:
// every pixel gets the temperature of its nearest curve sample plus the
// distance to it; the residual conveys decode confidence.
DecodeResult decode(const ThermalImage& image, const ColormapSpec& cmap,
                    double foreground_threshold = kDecodableResidual);

}  // namespace thermovqa
