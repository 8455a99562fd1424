#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "refref/math.hpp"

namespace refref {

/// Row-major float image, top-left origin, 1 or 3 channels.
struct Image {
    int width = 0, height = 0, channels = 0;
    std::vector<float> data;

    Image() = default;
    Image(int w, int h, int c) : width(w), height(h), channels(c) {
        data.assign(static_cast<size_t>(w) * h * c, 0.0f);
    }

    float& at(int x, int y, int c) {
        return data[(static_cast<size_t>(y) * width + x) * channels + c];
    }
    float at(int x, int y, int c) const {
        return data[(static_cast<size_t>(y) * width + x) * channels + c];
    }

    Vec3 pixel(int x, int y) const {
        if (channels == 1) {
            double v = at(x, y, 0);
            return {v, v, v};
        }
        return {at(x, y, 0), at(x, y, 1), at(x, y, 2)};
    }
    void set_pixel(int x, int y, const Vec3& v) {
        if (channels == 1) {
            at(x, y, 0) = static_cast<float>(v.x);
            return;
        }
        at(x, y, 0) = static_cast<float>(v.x);
        at(x, y, 1) = static_cast<float>(v.y);
        at(x, y, 2) = static_cast<float>(v.z);
    }
};

/// 8-bit PNG; values are clamped to [0,1] and quantized with rounding.
void write_png(const Image& image, const std::string& path);
/// Reads 8-bit gray/RGB/RGBA PNG into floats in [0,1] (alpha dropped).
Image read_png(const std::string& path);

/// 32-bit float PFM (little-endian), 1 or 3 channels.
void write_pfm(const Image& image, const std::string& path);
Image read_pfm(const std::string& path);

}  // namespace refref
