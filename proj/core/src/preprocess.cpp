#include "thermovqa/preprocess.hpp"

#include <opencv2/imgproc.hpp>

#include <algorithm>
#include <cmath>
#include <numbers>

#include "thermovqa/errors.hpp"
#include "thermovqa/image_io.hpp"

namespace thermovqa {

OrientedRect detect_battery_region(const ThermalImage& image,
                                   const ColormapSpec& cmap,
                                   double residual_threshold) {
    if (image.width <= 0 || image.height <= 0) {
        throw DetectionError("cannot detect a battery in an empty image");
    }
    DecodeResult decoded = decode(image, cmap, residual_threshold);

    std::size_t total = decoded.field.foreground.size();
    std::size_t fg = static_cast<std::size_t>(decoded.field.foreground_count());
    if (fg * 100 < total) {
        throw DetectionError("no battery found: fewer than 1% of pixels decode (" +
                             std::to_string(fg) + " of " + std::to_string(total) +
                             ")");
    }

    cv::Mat mask(image.height, image.width, CV_8UC1);
    for (int y = 0; y < image.height; ++y) {
        for (int x = 0; x < image.width; ++x) {
            mask.at<std::uint8_t>(y, x) =
                decoded.field.is_foreground(x, y) ? 255 : 0;
        }
    }

    cv::Mat labels, stats, centroids;
    int n = cv::connectedComponentsWithStats(mask, labels, stats, centroids, 8);
    int best_label = 0, best_area = 0;
    for (int label = 1; label < n; ++label) {
        int area = stats.at<std::int32_t>(label, cv::CC_STAT_AREA);
        if (area > best_area) {
            best_area = area;
            best_label = label;
        }
    }
    if (best_label == 0) {
        throw DetectionError("no battery found: decodable pixels form no component");
    }

    std::vector<cv::Point> points;
    points.reserve(static_cast<std::size_t>(best_area));
    for (int y = 0; y < image.height; ++y) {
        for (int x = 0; x < image.width; ++x) {
            if (labels.at<std::int32_t>(y, x) == best_label) {
                points.emplace_back(x, y);
            }
        }
    }

    cv::RotatedRect rr = cv::minAreaRect(points);
    OrientedRect rect;
    // minAreaRect works on pixel-center points; grow by one pixel so the rect
    // covers the full pixel squares, and shift into center-of-pixel coords.
    rect.center = {rr.center.x + 0.5, rr.center.y + 0.5};
    rect.width = rr.size.width + 1.0;
    rect.height = rr.size.height + 1.0;
    rect.angle_deg = rr.angle;
    return rect.canonical();
}

ThermalImage crop_rotate(const ThermalImage& image, const OrientedRect& rect,
                         double inset_fraction) {
    if (!(inset_fraction >= 0.0 && inset_fraction < 0.5)) {
        throw ConfigError("inset_fraction must be in [0, 0.5)");
    }
    OrientedRect r = rect.canonical();
    r.validate();
    if (image.width <= 0 || image.height <= 0) {
        throw ConfigError("cannot crop an empty image");
    }

    int out_w = std::max(
        1, static_cast<int>(std::lround(r.width * (1.0 - 2.0 * inset_fraction))));
    int out_h = std::max(
        1, static_cast<int>(std::lround(r.height * (1.0 - 2.0 * inset_fraction))));

    double theta = r.angle_deg * std::numbers::pi / 180.0;
    double c = std::cos(theta);
    double s = std::sin(theta);

    ThermalImage out(out_w, out_h);
    for (int j = 0; j < out_h; ++j) {
        for (int i = 0; i < out_w; ++i) {
            double u = i - (out_w - 1) / 2.0;
            double v = j - (out_h - 1) / 2.0;
            // Pixel-center coords of the source sample, then to index space.
            double sx = r.center.x + c * u - s * v - 0.5;
            double sy = r.center.y + s * u + c * v - 0.5;
            sx = std::clamp(sx, 0.0, image.width - 1.0);
            sy = std::clamp(sy, 0.0, image.height - 1.0);

            int x0 = static_cast<int>(sx);
            int y0 = static_cast<int>(sy);
            int x1 = std::min(x0 + 1, image.width - 1);
            int y1 = std::min(y0 + 1, image.height - 1);
            double fx = sx - x0;
            double fy = sy - y0;

            Rgb p00 = image.rgb(x0, y0);
            Rgb p10 = image.rgb(x1, y0);
            Rgb p01 = image.rgb(x0, y1);
            Rgb p11 = image.rgb(x1, y1);
            Rgb px;
            for (int ch = 0; ch < 3; ++ch) {
                double top = p00[ch] + (p10[ch] - p00[ch]) * fx;
                double bot = p01[ch] + (p11[ch] - p01[ch]) * fx;
                px[ch] = static_cast<std::uint8_t>(
                    std::lround(std::clamp(top + (bot - top) * fy, 0.0, 255.0)));
            }
            out.set_rgb(i, j, px);
        }
    }
    return out;
}

std::filesystem::path preprocess_dataset(const std::vector<ManifestEntry>& entries,
                                         const std::filesystem::path& out_dir,
                                         const ColormapSpec& cmap,
                                         double inset_fraction) {
    std::filesystem::create_directories(out_dir / "images");
    std::vector<ManifestEntry> cropped_entries;
    cropped_entries.reserve(entries.size());
    for (const auto& entry : entries) {
        ThermalImage image = read_png(entry.path);
        OrientedRect rect = detect_battery_region(image, cmap);
        ThermalImage cropped = crop_rotate(image, rect, inset_fraction);

        std::filesystem::path rel =
            std::filesystem::path("images") / (entry.image_id + ".png");
        write_png(out_dir / rel, cropped);

        ManifestEntry out = entry;
        out.path = rel;
        cropped_entries.push_back(std::move(out));
    }
    std::filesystem::path manifest = out_dir / "manifest.jsonl";
    write_manifest(cropped_entries, manifest);
    return manifest;
}

}  // namespace thermovqa
