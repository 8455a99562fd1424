#pragma once

#include <utility>

#include "refref/math.hpp"

namespace refref {

/// Pinhole camera, NeRF-synthetic convention: camera space looks down -z,
/// +x right, +y up; transform is camera-to-world.
struct Camera {
    Transform to_world;
    double fov_x = 0.6911112070083618;  // horizontal field of view, radians
    int width = 64;
    int height = 64;

    double focal() const { return 0.5 * width / std::tan(0.5 * fov_x); }

    /// Ray through pixel (px, py) with subpixel offset (ox, oy) in [0,1).
    /// Returns (origin, unit direction) in world space.
    std::pair<Vec3, Vec3> ray(int px, int py, double ox = 0.5, double oy = 0.5) const {
        double f = focal();
        Vec3 dir_cam{(px + ox - 0.5 * width) / f, -(py + oy - 0.5 * height) / f, -1.0};
        Vec3 dir = to_world.apply_vector(dir_cam);
        return {to_world.t, normalize(dir)};
    }
};

}  // namespace refref
