#pragma once

#include <functional>
#include <string>
#include <vector>

#include "refref/camera.hpp"
#include "refref/image.hpp"
#include "refref/losses.hpp"
#include "refref/renderer.hpp"

namespace refref {

struct AblationSwitches {
    bool corrected_distortion = true;
    bool first_surface_reflection = true;
    bool tir = true;
};

struct TrainConfig {
    int iterations = 2000;
    int batch_size = 1024;

    // Linear warm-up, then exponential decay.
    double lr_init = 8e-3;
    double lr_final = 1e-3;
    int warmup_steps = 100;
    // The base schedule suits feature-grid-plus-decoder backbones; a plain
    // voxel lattice whose pre-activation parameters must travel O(10) units
    // needs proportionally larger steps, so the schedule is multiplied by
    // this backbone factor.
    double lr_scale = 12.5;
    double adam_beta1 = 0.9;
    double adam_beta2 = 0.999;
    double adam_eps = 1e-15;

    double lambda_dist = 0.01;  // lambda_2; the interlevel term is fixed at 0

    RenderConfig render;
    AblationSwitches ablation;

    // Field shape.
    int grid_resolution = 64;
    Vec3 grid_lower{-2, -2, -2};
    Vec3 grid_upper{2, 2, 2};
    int sh_degree = 2;
    double init_density_preact = -4.0;
    // Known-geometry initialization: lattice nodes just inside the object
    // surface start dense, so the optimizer refines a surface instead of
    // having to grow one out of near-empty space. Only applies when paths
    // bend — the straight baseline does not get to use the mesh.
    bool seed_object_surface = true;
    double init_surface_density_preact = 12.0;

    uint64_t seed = 0;
    int log_every = 50;
    int checkpoint_every = 0;         // 0 = only final
    std::string checkpoint_path;      // final checkpoint (periodic ones get .NNNN)
    std::string loss_csv_path;

    RenderConfig effective_render() const {
        RenderConfig r = render;
        r.enable_reflection = r.enable_reflection && ablation.first_surface_reflection;
        r.enable_tir = ablation.tir;
        return r;
    }
};

struct LossReport {
    double rgb = 0;
    double dist = 0;
    double total = 0;
    double psnr = 0;  // from the batch RGB MSE
};

struct TrainRay {
    Vec3 origin;
    Vec3 direction;   // unit
    Vec3 target_srgb; // ground-truth pixel, sRGB in [0,1]
};

/// Reusable per-worker gradient buffers for repeated backward calls.
/// Single precision: the scatter pass is memory-bound and per-ray
/// contributions are far above float round-off.
class GradAccumulator {
public:
    GradAccumulator(int64_t parameter_count, int workers);
    std::vector<std::vector<float>>& buffers() { return buffers_; }
    int workers() const { return static_cast<int>(buffers_.size()); }

private:
    std::vector<std::vector<float>> buffers_;
};

/// Reverse-mode gradients of the batch-mean total loss with respect to the
/// field parameters. Path geometry and the Fresnel split are constants of
/// the fixed scene mesh. `gradients` is resized to the parameter count.
/// Throws on a non-finite loss, naming the offending ray index.
LossReport backward(const Scene& scene, const VoxelField& field,
                    const std::vector<TrainRay>& rays, const TrainConfig& config,
                    uint64_t iteration, std::vector<double>& gradients,
                    GradAccumulator* workspace = nullptr);

using TrainLogger = std::function<void(int iteration, const LossReport&, double lr)>;

/// Adam over the grid parameters with per-step random ray batches.
/// Deterministic for a fixed seed and worker count. Aborts with a
/// diagnostic if the loss exceeds 10x its initial value for 100
/// consecutive steps.
VoxelField train(const Scene& scene, const std::vector<Camera>& cameras,
                 const std::vector<Image>& images, const TrainConfig& config,
                 const TrainLogger& logger = nullptr);

/// Learning rate at a given step under the config schedule.
double learning_rate(const TrainConfig& config, int iteration);

/// Sets the pre-activation density of lattice nodes on the inside edge of
/// the object surface (inside nodes with at least one outside neighbor).
void seed_surface_density(const Scene& scene, VoxelField& field, double preact);

/// Mean fraction of per-ray weight mass inside the refractive object,
/// over all pixels of the given views. Diagnostic for the distortion
/// correction's effect.
double mean_inside_weight_fraction(const Scene& scene, const VoxelField& field,
                                   const std::vector<Camera>& cameras,
                                   const RenderConfig& render, uint64_t seed);

}  // namespace refref
