#include "thermovqa/geometry.hpp"

#include <cmath>

#include "thermovqa/errors.hpp"

namespace thermovqa {

namespace {
constexpr double kDegToRad = 0.017453292519943295;
}

bool OrientedRect::contains(double px, double py) const {
    double c = std::cos(angle_deg * kDegToRad);
    double s = std::sin(angle_deg * kDegToRad);
    double dx = px - center.x;
    double dy = py - center.y;
    // rotate into the rect frame
    double u = c * dx + s * dy;
    double v = -s * dx + c * dy;
    return std::abs(u) <= width * 0.5 && std::abs(v) <= height * 0.5;
}

OrientedRect OrientedRect::canonical() const {
    OrientedRect r = *this;
    while (r.angle_deg > 45.0) {
        r.angle_deg -= 90.0;
        std::swap(r.width, r.height);
    }
    while (r.angle_deg <= -45.0) {
        r.angle_deg += 90.0;
        std::swap(r.width, r.height);
    }
    return r;
}

void OrientedRect::validate() const {
    if (!(width > 0.0) || !(height > 0.0)) {
        throw ConfigError("oriented rect has degenerate extents: " +
                          std::to_string(width) + " x " + std::to_string(height));
    }
    if (!(angle_deg > -90.0) || !(angle_deg <= 90.0)) {
        throw ConfigError("oriented rect angle out of (-90, 90]: " + std::to_string(angle_deg));
    }
}

}  // namespace thermovqa
