#include "thermovqa/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>

#include "thermovqa/errors.hpp"

namespace thermovqa {

void OracleParams::validate() const {
    if (!std::isfinite(temp_threshold) || temp_threshold <= 0.0) {
        throw ConfigError("oracle temp_threshold must be positive and finite");
    }
    if (!(spot_deviation > 0.0)) {
        throw ConfigError("oracle spot_deviation must be > 0");
    }
    if (neighborhood_radius < 1) {
        throw ConfigError("oracle neighborhood_radius must be >= 1");
    }
    if (min_blob_area < 1) {
        throw ConfigError("oracle min_blob_area must be >= 1");
    }
}

namespace {

void require_foreground(const TemperatureField& field) {
    if (field.width <= 0 || field.height <= 0) {
        throw DetectionError("oracle input field is empty");
    }
    if (std::find(field.foreground.begin(), field.foreground.end(), 1) ==
        field.foreground.end()) {
        throw DetectionError("oracle input field has no foreground pixels");
    }
}

// Sliding local median over the foreground, using a two-level quantized
// histogram. Values are binned at 0.01 degC resolution across the foreground
// span; the window histogram is updated incrementally column-by-column, and
// each median lookup walks coarse bins (64 fine bins apiece) before the fine
// bins of the one containing the answer. Returned medians are bin centers, so
// they sit within half a bin (0.005 degC) of an exact data median.
class MedianWindow {
public:
    MedianWindow(const TemperatureField& field, int radius)
        : field_(field), radius_(radius) {
        float lo = std::numeric_limits<float>::infinity();
        float hi = -std::numeric_limits<float>::infinity();
        for (std::size_t i = 0; i < field.values.size(); ++i) {
            if (!field.foreground[i]) continue;
            lo = std::min(lo, field.values[i]);
            hi = std::max(hi, field.values[i]);
        }
        lo_ = lo;
        double span = std::max(0.0, static_cast<double>(hi) - lo_);
        fine_count_ = static_cast<int>(span / kBinWidth) + 1;
        coarse_count_ = (fine_count_ + kFanout - 1) / kFanout;
        fine_.assign(fine_count_, 0);
        coarse_.assign(coarse_count_, 0);
    }

    // Computes, for every foreground pixel, the median of foreground values in
    // the clipped (2r+1)^2 window around it.
    std::vector<float> run() {
        std::vector<float> medians(field_.values.size(), 0.0f);
        for (int y = 0; y < field_.height; ++y) {
            reset();
            int y0 = std::max(0, y - radius_);
            int y1 = std::min(field_.height - 1, y + radius_);
            // Seed the window for x = 0: columns [0, radius].
            for (int x = 0; x <= std::min(field_.width - 1, radius_); ++x) {
                add_column(x, y0, y1);
            }
            for (int x = 0; x < field_.width; ++x) {
                if (x > 0) {
                    int leaving = x - radius_ - 1;
                    if (leaving >= 0) remove_column(leaving, y0, y1);
                    int entering = x + radius_;
                    if (entering < field_.width) add_column(entering, y0, y1);
                }
                if (field_.is_foreground(x, y)) {
                    medians[field_.index(x, y)] = median();
                }
            }
        }
        return medians;
    }

private:
    static constexpr double kBinWidth = 0.01;
    static constexpr int kFanout = 64;

    int bin_of(float v) const {
        int b = static_cast<int>((static_cast<double>(v) - lo_) / kBinWidth);
        return std::clamp(b, 0, fine_count_ - 1);
    }

    void reset() {
        std::fill(fine_.begin(), fine_.end(), 0);
        std::fill(coarse_.begin(), coarse_.end(), 0);
        total_ = 0;
    }

    void add_column(int x, int y0, int y1) {
        for (int y = y0; y <= y1; ++y) {
            std::size_t i = field_.index(x, y);
            if (!field_.foreground[i]) continue;
            int b = bin_of(field_.values[i]);
            ++fine_[b];
            ++coarse_[b / kFanout];
            ++total_;
        }
    }

    void remove_column(int x, int y0, int y1) {
        for (int y = y0; y <= y1; ++y) {
            std::size_t i = field_.index(x, y);
            if (!field_.foreground[i]) continue;
            int b = bin_of(field_.values[i]);
            --fine_[b];
            --coarse_[b / kFanout];
            --total_;
        }
    }

    // Lower median: the value at sorted rank (n - 1) / 2.
    float median() const {
        int rank = (total_ - 1) / 2;
        int seen = 0;
        for (int c = 0; c < coarse_count_; ++c) {
            if (seen + coarse_[c] <= rank) {
                seen += coarse_[c];
                continue;
            }
            int first = c * kFanout;
            int last = std::min(first + kFanout, fine_count_);
            for (int b = first; b < last; ++b) {
                seen += fine_[b];
                if (seen > rank) {
                    return static_cast<float>(lo_ + (b + 0.5) * kBinWidth);
                }
            }
        }
        throw DetectionError("median window is empty");
    }

    const TemperatureField& field_;
    int radius_;
    double lo_ = 0.0;
    int fine_count_ = 1;
    int coarse_count_ = 1;
    std::vector<int> fine_;
    std::vector<int> coarse_;
    int total_ = 0;
};

}  // namespace

TemperatureCheck check_temperature(const TemperatureField& field,
                                   const OracleParams& params) {
    params.validate();
    require_foreground(field);
    TemperatureCheck check;
    check.max_temp = field.foreground_max();
    check.ok = check.max_temp < params.temp_threshold;
    return check;
}

SmoothnessCheck check_smoothness(const TemperatureField& field,
                                 const OracleParams& params) {
    params.validate();
    require_foreground(field);
    if (field.foreground_count() <= params.min_blob_area) {
        throw DetectionError(
            "smoothness check needs foreground larger than min_blob_area (" +
            std::to_string(field.foreground_count()) + " <= " +
            std::to_string(params.min_blob_area) + ")");
    }

    std::vector<float> medians = MedianWindow(field, params.neighborhood_radius).run();

    SmoothnessCheck check;
    check.spot_mask.assign(field.values.size(), 0);
    for (std::size_t i = 0; i < field.values.size(); ++i) {
        if (!field.foreground[i]) continue;
        if (std::fabs(field.values[i] - medians[i]) > params.spot_deviation) {
            check.spot_mask[i] = 1;
        }
    }

    // Largest 8-connected cluster of spot pixels.
    std::vector<std::uint8_t> visited(check.spot_mask.size(), 0);
    std::queue<std::pair<int, int>> frontier;
    for (int y = 0; y < field.height; ++y) {
        for (int x = 0; x < field.width; ++x) {
            std::size_t start = field.index(x, y);
            if (!check.spot_mask[start] || visited[start]) continue;
            visited[start] = 1;
            frontier.emplace(x, y);
            int area = 0;
            while (!frontier.empty()) {
                auto [cx, cy] = frontier.front();
                frontier.pop();
                ++area;
                for (int dy = -1; dy <= 1; ++dy) {
                    for (int dx = -1; dx <= 1; ++dx) {
                        if (dx == 0 && dy == 0) continue;
                        int nx = cx + dx, ny = cy + dy;
                        if (nx < 0 || ny < 0 || nx >= field.width ||
                            ny >= field.height) {
                            continue;
                        }
                        std::size_t ni = field.index(nx, ny);
                        if (check.spot_mask[ni] && !visited[ni]) {
                            visited[ni] = 1;
                            frontier.emplace(nx, ny);
                        }
                    }
                }
            }
            check.max_blob_area = std::max(check.max_blob_area, area);
        }
    }
    check.ok = check.max_blob_area < params.min_blob_area;
    return check;
}

OracleReport classify(const TemperatureField& field, const OracleParams& params) {
    TemperatureCheck temp = check_temperature(field, params);
    SmoothnessCheck smooth = check_smoothness(field, params);
    OracleReport report;
    report.max_temp = temp.max_temp;
    report.temp_ok = temp.ok;
    report.smooth_ok = smooth.ok;
    report.spot_mask = std::move(smooth.spot_mask);
    report.verdict =
        (temp.ok && smooth.ok) ? Verdict::Normal : Verdict::Anomaly;
    return report;
}

}  // namespace thermovqa
