#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "thermovqa/thermal.hpp"

namespace thermovqa {

// PNG (lossless) round-trips for RGB8 images.
std::vector<std::uint8_t> encode_png(const ThermalImage& image);
ThermalImage decode_png(const std::vector<std::uint8_t>& bytes);
void write_png(const std::filesystem::path& path, const ThermalImage& image);
ThermalImage read_png(const std::filesystem::path& path);

// Whole-file helpers.
std::vector<std::uint8_t> read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path,
                const std::vector<std::uint8_t>& bytes);
std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, const std::string& text);

// CSV serialization of a temperature field. First line is
// "width,height,t_min,t_max" metadata; data rows follow, one per image row,
// with background cells written as "nan".
void write_field_csv(const std::filesystem::path& path, const TemperatureField& field,
                     double t_min, double t_max);
struct FieldCsv {
    TemperatureField field;
    double t_min = 0.0;
    double t_max = 0.0;
};
FieldCsv read_field_csv(const std::filesystem::path& path);

}  // namespace thermovqa
