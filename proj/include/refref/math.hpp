#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>

namespace refref {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kPi = 3.14159265358979323846;

struct Vec3 {
    double x = 0, y = 0, z = 0;

    Vec3() = default;
    Vec3(double x_, double y_, double z_) : x(x_), y(y_), z(z_) {}

    double operator[](int i) const { return i == 0 ? x : (i == 1 ? y : z); }

    Vec3 operator+(const Vec3& o) const { return {x + o.x, y + o.y, z + o.z}; }
    Vec3 operator-(const Vec3& o) const { return {x - o.x, y - o.y, z - o.z}; }
    Vec3 operator*(double s) const { return {x * s, y * s, z * s}; }
    Vec3 operator/(double s) const { return {x / s, y / s, z / s}; }
    Vec3 operator-() const { return {-x, -y, -z}; }
    Vec3 operator*(const Vec3& o) const { return {x * o.x, y * o.y, z * o.z}; }

    Vec3& operator+=(const Vec3& o) { x += o.x; y += o.y; z += o.z; return *this; }
    Vec3& operator-=(const Vec3& o) { x -= o.x; y -= o.y; z -= o.z; return *this; }
    Vec3& operator*=(double s) { x *= s; y *= s; z *= s; return *this; }
};

inline Vec3 operator*(double s, const Vec3& v) { return v * s; }

inline double dot(const Vec3& a, const Vec3& b) { return a.x * b.x + a.y * b.y + a.z * b.z; }
inline Vec3 cross(const Vec3& a, const Vec3& b) {
    return {a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x};
}
inline double length_squared(const Vec3& v) { return dot(v, v); }
inline double length(const Vec3& v) { return std::sqrt(dot(v, v)); }
inline Vec3 normalize(const Vec3& v) { return v / length(v); }
inline Vec3 min(const Vec3& a, const Vec3& b) {
    return {std::min(a.x, b.x), std::min(a.y, b.y), std::min(a.z, b.z)};
}
inline Vec3 max(const Vec3& a, const Vec3& b) {
    return {std::max(a.x, b.x), std::max(a.y, b.y), std::max(a.z, b.z)};
}
inline double max_component(const Vec3& v) { return std::max(v.x, std::max(v.y, v.z)); }
inline double clamp01(double v) { return std::clamp(v, 0.0, 1.0); }
inline Vec3 clamp01(const Vec3& v) { return {clamp01(v.x), clamp01(v.y), clamp01(v.z)}; }

/// Rigid camera-to-world transform (rotation columns + translation).
struct Transform {
    // Columns of the rotation matrix.
    Vec3 cx{1, 0, 0}, cy{0, 1, 0}, cz{0, 0, 1};
    Vec3 t{0, 0, 0};

    Vec3 apply_point(const Vec3& p) const { return cx * p.x + cy * p.y + cz * p.z + t; }
    Vec3 apply_vector(const Vec3& v) const { return cx * v.x + cy * v.y + cz * v.z; }
};

// IEC 61966-2-1 transfer function, per channel.
inline double linear_to_srgb(double u) {
    u = clamp01(u);
    return u <= 0.0031308 ? 12.92 * u : 1.055 * std::pow(u, 1.0 / 2.4) - 0.055;
}
inline double srgb_to_linear(double u) {
    u = clamp01(u);
    return u <= 0.04045 ? u / 12.92 : std::pow((u + 0.055) / 1.055, 2.4);
}
inline Vec3 linear_to_srgb(const Vec3& c) {
    return {linear_to_srgb(c.x), linear_to_srgb(c.y), linear_to_srgb(c.z)};
}
inline Vec3 srgb_to_linear(const Vec3& c) {
    return {srgb_to_linear(c.x), srgb_to_linear(c.y), srgb_to_linear(c.z)};
}

/// Derivative of linear_to_srgb, needed when differentiating losses
/// computed on encoded colors.
inline double linear_to_srgb_derivative(double u) {
    if (u <= 0.0) return 12.92;
    if (u >= 1.0) return 0.0;  // clamped region
    return u <= 0.0031308 ? 12.92 : (1.055 / 2.4) * std::pow(u, 1.0 / 2.4 - 1.0);
}

inline double softplus(double x) {
    // Numerically stable log(1 + exp(x)).
    return x > 30.0 ? x : std::log1p(std::exp(std::min(x, 30.0)));
}
inline double softplus_derivative(double x) { return 1.0 / (1.0 + std::exp(-x)); }
inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

}  // namespace refref
