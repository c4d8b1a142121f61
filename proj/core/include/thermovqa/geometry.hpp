#pragma once

namespace thermovqa {

struct Vec2 {
    double x = 0.0;
    double y = 0.0;
};

// Oriented rectangle in pixel coordinates. width/height are full side
// lengths, angle is counter-clockwise from the +x axis in degrees and is
// kept in (-90, 90].
struct OrientedRect {
    Vec2 center;
    double width = 0.0;
    double height = 0.0;
    double angle_deg = 0.0;

    bool contains(double px, double py) const;

    // folds the angle into (-45, 45], swapping extents when a quarter turn
    // is absorbed; gives detection a stable representation
    OrientedRect canonical() const;

    void validate() const;  // throws ConfigError on degenerate extents
};

}  // namespace thermovqa
