#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "refref/math.hpp"

namespace refref {

constexpr int kMaxShDegree = 2;

/// Real spherical harmonics basis values at unit direction d, degrees 0..L.
/// Writes (L+1)^2 values.
void sh_basis(int degree, const Vec3& d, double* out);

/// Optimizable radiance field: a node-centered lattice of pre-activation
/// density and per-channel spherical-harmonics color coefficients.
/// Density is softplus-activated, color is sigmoid(SH dot coefficients),
/// both trilinearly interpolated. Queries outside the bounds return zero
/// density and black.
class VoxelField {
public:
    VoxelField() = default;
    VoxelField(int nx, int ny, int nz, const Vec3& lo, const Vec3& hi, int sh_degree);

    int nx() const { return res_[0]; }
    int ny() const { return res_[1]; }
    int nz() const { return res_[2]; }
    const Vec3& lower() const { return lo_; }
    const Vec3& upper() const { return hi_; }
    int sh_degree() const { return sh_degree_; }
    int sh_count() const { return (sh_degree_ + 1) * (sh_degree_ + 1); }

    int64_t node_count() const {
        return static_cast<int64_t>(res_[0]) * res_[1] * res_[2];
    }
    int64_t parameter_count() const {
        return node_count() * (1 + 3 * sh_count());
    }

    std::vector<double>& parameters() { return params_; }
    const std::vector<double>& parameters() const { return params_; }

    int64_t density_index(int64_t node) const { return node; }
    int64_t sh_index(int64_t node, int channel, int coeff) const {
        return node_count() + (node * 3 + channel) * sh_count() + coeff;
    }

    /// Trilinear stencil for a point: up to 8 lattice nodes and weights.
    /// count == 0 when the point is outside the bounds.
    struct Stencil {
        int count = 0;
        std::array<int64_t, 8> node;
        std::array<double, 8> weight;
    };
    Stencil stencil(const Vec3& x) const;

    struct Sample {
        Vec3 color;      // sigmoid-activated, in [0,1]
        double density;  // softplus-activated, >= 0
    };
    Sample query(const Vec3& x, const Vec3& d) const;

    /// Pre-activation intermediates, for callers that differentiate
    /// through the activations.
    struct RawSample {
        double density_preact = 0;
        std::array<double, 3> color_raw{};  // SH-expanded, pre-sigmoid
    };
    RawSample query_raw(const Stencil& st, const double* sh) const;

    void save(const std::string& path) const;
    static VoxelField load(const std::string& path);

private:
    int res_[3] = {0, 0, 0};
    Vec3 lo_, hi_;
    int sh_degree_ = 0;
    std::vector<double> params_;
};

/// Analytic emissive enclosure used as the ground-truth light source.
struct BackgroundModel {
    enum class Kind { Constant, TexturedCube, TexturedSphere };

    Kind kind = Kind::Constant;
    double extent = 1.8;  // cube half-size / sphere radius
    double frequency_u = 2.0, frequency_v = 2.0;  // checker cells per unit (cube)
                                                  // or per full angle span (sphere)
    Vec3 color_a{0.9, 0.9, 0.9};
    Vec3 color_b{0.1, 0.1, 0.1};
    // Cube only: tint each of the six faces with a distinct hue, so a ray
    // landing on the wrong wall face produces a clearly wrong color.
    bool face_tint = false;

    struct Hit {
        Vec3 radiance;
        double t = 0;
        bool escaped = false;
    };
    /// First background surface along (x, d). For enclosing backgrounds the
    /// origin is expected inside; otherwise `escaped` is set and the
    /// radiance is black.
    Hit hit(const Vec3& x, const Vec3& d) const;

    Vec3 radiance(const Vec3& x, const Vec3& d) const { return hit(x, d).radiance; }
};

}  // namespace refref
