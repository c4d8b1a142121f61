#include "thermovqa/image_io.hpp"

#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "thermovqa/errors.hpp"

namespace thermovqa {

namespace {

cv::Mat to_mat(const ThermalImage& image) {
    if (image.width <= 0 || image.height <= 0) {
        throw ConfigError("cannot serialize an empty image");
    }
    cv::Mat rgb(image.height, image.width, CV_8UC3,
                const_cast<std::uint8_t*>(image.pixels.data()));
    cv::Mat bgr;
    cv::cvtColor(rgb, bgr, cv::COLOR_RGB2BGR);
    return bgr;
}

ThermalImage from_mat(const cv::Mat& bgr, const std::string& what) {
    if (bgr.empty()) {
        throw ConfigError("failed to decode " + what);
    }
    cv::Mat bgr8;
    if (bgr.channels() == 1) {
        cv::cvtColor(bgr, bgr8, cv::COLOR_GRAY2BGR);
    } else if (bgr.channels() == 4) {
        cv::cvtColor(bgr, bgr8, cv::COLOR_BGRA2BGR);
    } else {
        bgr8 = bgr;
    }
    cv::Mat rgb;
    cv::cvtColor(bgr8, rgb, cv::COLOR_BGR2RGB);
    ThermalImage image(rgb.cols, rgb.rows);
    if (rgb.isContinuous()) {
        std::copy(rgb.data, rgb.data + image.pixels.size(), image.pixels.begin());
    } else {
        for (int y = 0; y < rgb.rows; ++y) {
            const std::uint8_t* row = rgb.ptr<std::uint8_t>(y);
            std::copy(row, row + static_cast<std::size_t>(rgb.cols) * 3,
                      image.pixels.begin() + image.offset(0, y));
        }
    }
    return image;
}

}  // namespace

std::vector<std::uint8_t> encode_png(const ThermalImage& image) {
    std::vector<std::uint8_t> bytes;
    if (!cv::imencode(".png", to_mat(image), bytes)) {
        throw TransportError("PNG encoding failed");
    }
    return bytes;
}

ThermalImage decode_png(const std::vector<std::uint8_t>& bytes) {
    cv::Mat bgr = cv::imdecode(bytes, cv::IMREAD_UNCHANGED);
    return from_mat(bgr, "PNG byte stream");
}

void write_png(const std::filesystem::path& path, const ThermalImage& image) {
    write_file(path, encode_png(image));
}

ThermalImage read_png(const std::filesystem::path& path) {
    return decode_png(read_file(path));
}

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw ConfigError("cannot open for reading: " + path.string());
    }
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                    std::istreambuf_iterator<char>());
    return bytes;
}

void write_file(const std::filesystem::path& path,
                const std::vector<std::uint8_t>& bytes) {
    if (path.has_parent_path()) {
        std::filesystem::create_directories(path.parent_path());
    }
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw ConfigError("cannot open for writing: " + path.string());
    }
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
    if (!out) {
        throw TransportError("write failed: " + path.string());
    }
}

std::string read_text_file(const std::filesystem::path& path) {
    auto bytes = read_file(path);
    return std::string(bytes.begin(), bytes.end());
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
    write_file(path, std::vector<std::uint8_t>(text.begin(), text.end()));
}

void write_field_csv(const std::filesystem::path& path, const TemperatureField& field,
                     double t_min, double t_max) {
    std::ostringstream out;
    out << field.width << "," << field.height << "," << t_min << "," << t_max << "\n";
    char buf[32];
    for (int y = 0; y < field.height; ++y) {
        for (int x = 0; x < field.width; ++x) {
            if (x > 0) out << ",";
            if (field.is_foreground(x, y)) {
                std::snprintf(buf, sizeof(buf), "%.4f", field.at(x, y));
                out << buf;
            } else {
                out << "nan";
            }
        }
        out << "\n";
    }
    write_text_file(path, out.str());
}

FieldCsv read_field_csv(const std::filesystem::path& path) {
    std::istringstream in(read_text_file(path));
    std::string line;
    if (!std::getline(in, line)) {
        throw ConfigError("empty field CSV: " + path.string());
    }
    FieldCsv out;
    int width = 0, height = 0;
    {
        std::istringstream header(line);
        char comma;
        if (!(header >> width >> comma >> height >> comma >> out.t_min >> comma >>
              out.t_max) ||
            width <= 0 || height <= 0) {
            throw ConfigError("malformed field CSV header: " + path.string());
        }
    }
    out.field = TemperatureField(width, height);
    for (int y = 0; y < height; ++y) {
        if (!std::getline(in, line)) {
            throw ConfigError("field CSV truncated at row " + std::to_string(y) +
                              ": " + path.string());
        }
        std::istringstream row(line);
        std::string cell;
        for (int x = 0; x < width; ++x) {
            if (!std::getline(row, cell, ',')) {
                throw ConfigError("field CSV row " + std::to_string(y) +
                                  " truncated: " + path.string());
            }
            if (cell == "nan") {
                out.field.at(x, y) = 0.0f;
            } else {
                try {
                    out.field.at(x, y) = std::stof(cell);
                } catch (const std::exception&) {
                    throw ConfigError("bad field CSV cell '" + cell +
                                      "': " + path.string());
                }
                out.field.foreground[out.field.index(x, y)] = 1;
            }
        }
    }
    return out;
}

}  // namespace thermovqa
