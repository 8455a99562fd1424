#pragma once

#include <vector>

#include "refref/camera.hpp"
#include "refref/field.hpp"
#include "refref/image.hpp"
#include "refref/lightpath.hpp"
#include "refref/rng.hpp"

namespace refref {

/// Ordered samples along a piecewise-linear path, in arc length.
struct SampleSet {
    double t_near = 0, t_far = 0;
    std::vector<double> t;      // ascending in [t_near, t_far]
    std::vector<double> edge;   // interval edges, size() + 1 entries
    std::vector<double> dt;     // interval widths edge[i+1] - edge[i], > 0
    std::vector<double> s;      // normalized distances (t - t_near) / (t_far - t_near)
    std::vector<Vec3> position;
    std::vector<Vec3> direction;  // segment direction at each sample
    std::vector<int> medium;
    std::vector<uint8_t> inside;  // inside the refractive object; complement is I_out

    int size() const { return static_cast<int>(t.size()); }
};

/// Positions/directions/media for given arc distances (must be ascending).
SampleSet make_sample_set(const PiecewisePath& path, std::vector<double> distances,
                          double t_near, double t_far);

/// Stratified-jittered samples over [t_near, t_far]; pass rng = nullptr
/// for deterministic stratum midpoints.
SampleSet sample_uniform(const PiecewisePath& path, int n, double t_near, double t_far,
                         Rng* rng);

/// Inverse-CDF draws from the piecewise-constant histogram defined by the
/// base sample intervals and their weights. Falls back to uniform when all
/// weights are zero. Output is sorted and deduplicated.
SampleSet resample_pdf(const PiecewisePath& path, const SampleSet& base,
                       const std::vector<double>& weights, int n, Rng& rng);

/// Discrete volume rendering: color = sum_i T_i (1 - exp(-sigma_i dt_i)) c_i.
struct Integration {
    Vec3 color;
    std::vector<double> weights;
    std::vector<double> transmittance;  // T_1 = 1, non-increasing
    double opacity = 0;                 // sum of weights
};
Integration integrate(const SampleSet& samples, const std::vector<Vec3>& colors,
                      const std::vector<double>& densities);

/// Smallest t_i at which cumulative weight reaches half the total;
/// t_far when the total weight is zero.
double median_depth(const SampleSet& samples, const std::vector<double>& weights);

enum class PathMode { Bent, Straight };

struct RenderConfig {
    int n_uniform = 64;
    int n_resample = 64;
    double t_near = 0.05;
    double t_far = 5.0;
    PathMode path_mode = PathMode::Bent;
    bool enable_reflection = true;
    bool enable_tir = true;
    int max_bends = kDefaultMaxBends;
    double reflection_skip_threshold = 1e-4;
};

/// Everything produced while rendering one path, kept so the training
/// backward pass can reuse the exact forward quantities.
struct PathRender {
    PiecewisePath path;
    SampleSet samples;  // final sample set (uniform plus pdf-resampled)
    std::vector<Vec3> colors;
    std::vector<double> densities;
    Integration integration;
};

struct RenderedPixel {
    Vec3 color_refraction;   // c^R, linear
    Vec3 color_reflection;   // c^Ref, linear
    Vec3 combined_linear;    // c'
    Vec3 srgb;               // c-hat
    double reflectance = 0;  // R actually applied
    double median_distance = 0;
    bool reflection_evaluated = false;
};

/// Renders one ray against the field: traces the refraction (and, when
/// worthwhile, reflection) path, runs two-pass sampling, integrates, and
/// Fresnel-combines. `refraction`/`reflection` capture the per-path state
/// when non-null.
RenderedPixel render_pixel(const Scene& scene, const VoxelField& field, const Vec3& origin,
                           const Vec3& direction, const RenderConfig& config, Rng& rng,
                           PathRender* refraction = nullptr,
                           PathRender* reflection = nullptr);

struct GroundTruthConfig {
    int spp = 4;
    int max_bends = kDefaultMaxBends;
    double reflection_skip_threshold = 1e-4;
    uint64_t seed = 0;
};

struct GroundTruthRender {
    Image image;  // sRGB, 3 channels
    Image depth;  // scene units, 1 channel: first object surface, else background
    Image mask;   // {0, 1}, 1 channel
};

/// Forward path-traced reference: Fresnel-combined background radiance
/// with Beer-Lambert absorption along in-medium segments.
GroundTruthRender render_ground_truth(const Scene& scene, const BackgroundModel& bg,
                                      const Camera& camera, const GroundTruthConfig& config);

struct FieldViewRender {
    Image image;  // sRGB, 3 channels
    Image depth;  // median depth along the refraction path, 1 channel
};

/// Renders every pixel of a view against the field (parallel over rows,
/// deterministic for a fixed seed and worker count). Pixel-center rays.
FieldViewRender render_field_view(const Scene& scene, const VoxelField& field,
                                  const Camera& camera, const RenderConfig& config,
                                  uint64_t seed);

/// Single ray of the ground-truth renderer (linear radiance).
Vec3 ground_truth_radiance(const Scene& scene, const BackgroundModel& bg, const Vec3& origin,
                           const Vec3& direction, const GroundTruthConfig& config);

}  // namespace refref
