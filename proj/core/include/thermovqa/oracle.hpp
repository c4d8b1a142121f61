#pragma once

#include <cstdint>
#include <vector>

#include "thermovqa/thermal.hpp"
#include "thermovqa/verdict.hpp"

namespace thermovqa {

// Tunables for the rule-based detector.
struct OracleParams {
    double temp_threshold = 50.0;   // degC; any hotter battery pixel is a fault
    double spot_deviation = 4.0;    // degC from local median to call a pixel a spot
    int neighborhood_radius = 9;    // local median window is (2r+1) x (2r+1)
    int min_blob_area = 25;         // spot pixels; smaller clusters are noise

    void validate() const;  // throws ConfigError
};

struct TemperatureCheck {
    bool ok = true;
    float max_temp = 0.0f;  // hottest foreground temperature seen
};

struct SmoothnessCheck {
    bool ok = true;
    std::vector<std::uint8_t> spot_mask;  // 0/1 per pixel, field layout
    int max_blob_area = 0;                // largest 8-connected spot cluster
};

// Fails when any foreground pixel exceeds params.temp_threshold.
TemperatureCheck check_temperature(const TemperatureField& field,
                                   const OracleParams& params);

// Fails when pixels deviating more than params.spot_deviation from their
// local foreground median form an 8-connected cluster of at least
// params.min_blob_area pixels.
SmoothnessCheck check_smoothness(const TemperatureField& field,
                                 const OracleParams& params);

struct OracleReport {
    Verdict verdict = Verdict::Normal;  // Normal or Anomaly; never Unsure
    float max_temp = 0.0f;
    bool temp_ok = true;
    bool smooth_ok = true;
    std::vector<std::uint8_t> spot_mask;
};

// Runs both checks; anomalous when either fails.
OracleReport classify(const TemperatureField& field, const OracleParams& params);

}  // namespace thermovqa
