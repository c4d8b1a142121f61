#pragma once

#include <filesystem>
#include <vector>

#include "thermovqa/geometry.hpp"
#include "thermovqa/synth.hpp"
#include "thermovqa/thermal.hpp"

namespace thermovqa {

// Finds the battery: the minimum-area oriented rectangle around the largest
// connected component of decodable pixels (decode residual below threshold).
// Throws DetectionError when fewer than 1% of pixels decode.
OrientedRect detect_battery_region(const ThermalImage& image,
                                   const ColormapSpec& cmap,
                                   double residual_threshold = kDecodableResidual);

inline constexpr double kDefaultInsetFraction = 0.05;

// Cuts the rect interior out of the image, rotated to axis-aligned, shrunk by
// inset_fraction per side to discard edge-mixing pixels. Sampling is bilinear
// on RGB; an axis-aligned rect with zero inset copies pixels exactly.
// Throws ConfigError for a degenerate rect or inset outside [0, 0.5).
ThermalImage crop_rotate(const ThermalImage& image, const OrientedRect& rect,
                         double inset_fraction = kDefaultInsetFraction);

// detect + crop for every manifest entry; writes the cropped PNGs under
// out_dir/images/ and a new manifest at out_dir/manifest.jsonl (same ids,
// labels and seeds). Returns the new manifest path.
std::filesystem::path preprocess_dataset(
    const std::vector<ManifestEntry>& entries, const std::filesystem::path& out_dir,
    const ColormapSpec& cmap = ColormapSpec::standard(),
    double inset_fraction = kDefaultInsetFraction);

}  // namespace thermovqa
