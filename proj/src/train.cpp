#include "refref/train.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <stdexcept>

#include "refref/parallel.hpp"

namespace refref {

GradAccumulator::GradAccumulator(int64_t parameter_count, int workers) {
    buffers_.resize(workers);
    for (auto& b : buffers_) b.assign(parameter_count, 0.0);
}

namespace {

/// Accumulates one path's contribution: d(loss)/d(path color) = color_grad,
/// plus an optional extra d(loss)/d(weights) term (the distortion loss).
// Contributions this small are irrecoverable next to typical per-ray
// gradients; skipping their scatter saves most of the memory traffic on
// the fully-transmitted tail of each ray.
constexpr double kGradSkip = 1e-14;

template <int Nsh>
void backpropagate_path_impl(const VoxelField& field, const PathRender& pr,
                             const Vec3& color_grad,
                             const std::vector<double>* extra_weight_grad, float* grad) {
    int n = pr.samples.size();
    const auto& w = pr.integration.weights;
    const auto& T = pr.integration.transmittance;

    // d loss / d w_i and d loss / d c_i.
    std::vector<double> g_w(n);
    for (int i = 0; i < n; ++i) {
        g_w[i] = dot(color_grad, pr.colors[i]);
        if (extra_weight_grad) g_w[i] += (*extra_weight_grad)[i];
    }

    // d loss / d sigma_j = dt_j (T_j exp(-sigma_j dt_j) g_w[j] - sum_{i>j} g_w[i] w_i).
    std::vector<double> g_sigma(n);
    double suffix = 0;
    for (int j = n - 1; j >= 0; --j) {
        double dt = pr.samples.dt[j];
        double survive = std::exp(-pr.densities[j] * dt);
        g_sigma[j] = dt * (T[j] * survive * g_w[j] - suffix);
        suffix += g_w[j] * w[j];
    }

    double sh[(kMaxShDegree + 1) * (kMaxShDegree + 1)];
    for (int i = 0; i < n; ++i) {
        Vec3 g_c = color_grad * w[i];
        // softplus'(p) = 1 - exp(-softplus(p)); sigmoid'(r) = c (1 - c).
        double g_density_preact = g_sigma[i] * (1.0 - std::exp(-pr.densities[i]));
        double g_raw[3] = {g_c.x * pr.colors[i].x * (1.0 - pr.colors[i].x),
                           g_c.y * pr.colors[i].y * (1.0 - pr.colors[i].y),
                           g_c.z * pr.colors[i].z * (1.0 - pr.colors[i].z)};
        bool density_active = std::abs(g_density_preact) > kGradSkip;
        bool color_active = std::abs(g_raw[0]) > kGradSkip ||
                            std::abs(g_raw[1]) > kGradSkip ||
                            std::abs(g_raw[2]) > kGradSkip;
        if (!density_active && !color_active) continue;

        VoxelField::Stencil st = field.stencil(pr.samples.position[i]);
        if (st.count == 0) continue;
        sh_basis(field.sh_degree(), pr.samples.direction[i], sh);

        for (int c = 0; c < st.count; ++c) {
            double wc = st.weight[c];
            int64_t node = st.node[c];
            grad[field.density_index(node)] += static_cast<float>(wc * g_density_preact);
            if (!color_active) continue;
            float* dst = grad + field.sh_index(node, 0, 0);  // 3 channels contiguous
            for (int ch = 0; ch < 3; ++ch) {
                double g = g_raw[ch] * wc;
                for (int m = 0; m < Nsh; ++m)
                    dst[ch * Nsh + m] += static_cast<float>(g * sh[m]);
            }
        }
    }
}

void backpropagate_path(const VoxelField& field, const PathRender& pr,
                        const Vec3& color_grad, const std::vector<double>* extra_weight_grad,
                        float* grad) {
    switch (field.sh_count()) {
        case 1:
            return backpropagate_path_impl<1>(field, pr, color_grad, extra_weight_grad,
                                              grad);
        case 4:
            return backpropagate_path_impl<4>(field, pr, color_grad, extra_weight_grad,
                                              grad);
        default:
            return backpropagate_path_impl<9>(field, pr, color_grad, extra_weight_grad,
                                              grad);
    }
}

struct RayLoss {
    double rgb = 0;
    double dist = 0;
};

RayLoss backward_ray(const Scene& scene, const VoxelField& field, const TrainRay& ray,
                     const RenderConfig& render, const TrainConfig& config, Rng& rng,
                     float* grad) {
    PathRender refr, refl;
    RenderedPixel px =
        render_pixel(scene, field, ray.origin, ray.direction, render, rng, &refr, &refl);

    RayLoss loss;
    loss.rgb = photometric_loss(px.srgb, ray.target_srgb);
    loss.dist = distortion_loss(refr.samples, refr.integration.weights,
                                config.ablation.corrected_distortion);

    Vec3 g_srgb = photometric_loss_gradient(px.srgb, ray.target_srgb);
    Vec3 g_combined{g_srgb.x * linear_to_srgb_derivative(px.combined_linear.x),
                    g_srgb.y * linear_to_srgb_derivative(px.combined_linear.y),
                    g_srgb.z * linear_to_srgb_derivative(px.combined_linear.z)};

    std::vector<double> g_w_dist =
        distortion_loss_gradient(refr.samples, refr.integration.weights,
                                 config.ablation.corrected_distortion);
    for (double& g : g_w_dist) g *= config.lambda_dist;

    double r = px.reflectance;
    if (px.reflection_evaluated) {
        backpropagate_path(field, refr, g_combined * (1.0 - r), &g_w_dist, grad);
        backpropagate_path(field, refl, g_combined * r, nullptr, grad);
    } else {
        // c' == c^R exactly (reflection short-circuited or R below threshold).
        backpropagate_path(field, refr, g_combined, &g_w_dist, grad);
    }
    return loss;
}

/// Ray loop of the backward pass: fills the per-worker gradient buffers
/// (sums over rays, not yet averaged) and returns the batch-mean losses.
LossReport backward_pass(const Scene& scene, const VoxelField& field,
                         const std::vector<TrainRay>& rays, const TrainConfig& config,
                         uint64_t iteration, GradAccumulator& acc, int workers) {
    int n_rays = static_cast<int>(rays.size());
    RenderConfig render = config.effective_render();

    std::vector<RayLoss> losses(n_rays);
    parallel_for_chunks(n_rays, [&](int64_t begin, int64_t end, int worker) {
        std::vector<float>& buf = acc.buffers()[worker];
        std::memset(buf.data(), 0, buf.size() * sizeof(float));
        for (int64_t i = begin; i < end; ++i) {
            Rng rng(config.seed ^ 0x5bf0f5a2u,
                    iteration * static_cast<uint64_t>(n_rays) + static_cast<uint64_t>(i));
            losses[i] = backward_ray(scene, field, rays[i], render, config, rng,
                                     buf.data());
        }
    });

    double inv_n = 1.0 / n_rays;
    LossReport report;
    for (int i = 0; i < n_rays; ++i) {
        if (!std::isfinite(losses[i].rgb) || !std::isfinite(losses[i].dist))
            throw std::runtime_error("non-finite loss at ray " + std::to_string(i));
        report.rgb += losses[i].rgb;
        report.dist += losses[i].dist;
    }
    report.rgb *= inv_n;
    report.dist *= inv_n;
    report.total = report.rgb + config.lambda_dist * report.dist;
    report.psnr = report.rgb > 0 ? -10.0 * std::log10(report.rgb) : 99.0;
    return report;
}

}  // namespace

LossReport backward(const Scene& scene, const VoxelField& field,
                    const std::vector<TrainRay>& rays, const TrainConfig& config,
                    uint64_t iteration, std::vector<double>& gradients,
                    GradAccumulator* workspace) {
    int64_t n_params = field.parameter_count();
    int n_rays = static_cast<int>(rays.size());
    if (n_rays == 0) throw std::runtime_error("backward: empty ray batch");

    int workers = std::min<int64_t>(thread_count(), n_rays);
    GradAccumulator local(workspace ? 0 : n_params, workspace ? 0 : workers);
    GradAccumulator& acc = workspace ? *workspace : local;
    if (acc.workers() < workers) throw std::runtime_error("backward: workspace too small");

    LossReport report = backward_pass(scene, field, rays, config, iteration, acc, workers);

    // Deterministic merge: fixed worker order per element.
    double inv_n = 1.0 / n_rays;
    gradients.resize(n_params);
    parallel_for_chunks(n_params, [&](int64_t begin, int64_t end, int) {
        for (int64_t i = begin; i < end; ++i) gradients[i] = 0.0;
        for (int w = 0; w < workers; ++w) {
            const float* buf = acc.buffers()[w].data();
            for (int64_t i = begin; i < end; ++i) gradients[i] += buf[i];
        }
        for (int64_t i = begin; i < end; ++i) gradients[i] *= inv_n;
    });
    return report;
}

void seed_surface_density(const Scene& scene, VoxelField& field, double preact) {
    int nx = field.nx(), ny = field.ny(), nz = field.nz();
    Vec3 lo = field.lower(), extent = field.upper() - field.lower();
    std::vector<uint8_t> inside(field.node_count());
    parallel_for(nz, [&](int64_t iz) {
        for (int iy = 0; iy < ny; ++iy)
            for (int ix = 0; ix < nx; ++ix) {
                Vec3 p{lo.x + extent.x * ix / (nx - 1), lo.y + extent.y * iy / (ny - 1),
                       lo.z + extent.z * iz / (nz - 1)};
                inside[ix + static_cast<int64_t>(nx) * (iy + static_cast<int64_t>(ny) * iz)] =
                    scene.medium_at(p) != kAmbientMedium;
            }
    });
    auto at = [&](int ix, int iy, int iz) -> bool {
        if (ix < 0 || iy < 0 || iz < 0 || ix >= nx || iy >= ny || iz >= nz) return false;
        return inside[ix + static_cast<int64_t>(nx) * (iy + static_cast<int64_t>(ny) * iz)];
    };
    for (int iz = 0; iz < nz; ++iz)
        for (int iy = 0; iy < ny; ++iy)
            for (int ix = 0; ix < nx; ++ix) {
                if (!at(ix, iy, iz)) continue;
                bool boundary = !at(ix - 1, iy, iz) || !at(ix + 1, iy, iz) ||
                                !at(ix, iy - 1, iz) || !at(ix, iy + 1, iz) ||
                                !at(ix, iy, iz - 1) || !at(ix, iy, iz + 1);
                if (boundary) {
                    int64_t node =
                        ix + static_cast<int64_t>(nx) * (iy + static_cast<int64_t>(ny) * iz);
                    field.parameters()[field.density_index(node)] = preact;
                }
            }
}

double learning_rate(const TrainConfig& config, int iteration) {
    if (config.warmup_steps > 0 && iteration < config.warmup_steps)
        return config.lr_init * (iteration + 1) / config.warmup_steps;
    int decay_steps = std::max(1, config.iterations - config.warmup_steps);
    double progress =
        std::clamp((iteration - config.warmup_steps) / static_cast<double>(decay_steps),
                   0.0, 1.0);
    return config.lr_init * std::pow(config.lr_final / config.lr_init, progress);
}

VoxelField train(const Scene& scene, const std::vector<Camera>& cameras,
                 const std::vector<Image>& images, const TrainConfig& config,
                 const TrainLogger& logger) {
    if (cameras.empty() || cameras.size() != images.size())
        throw std::runtime_error("train: cameras/images mismatch");

    VoxelField field(config.grid_resolution, config.grid_resolution, config.grid_resolution,
                     config.grid_lower, config.grid_upper, config.sh_degree);
    int64_t n_params = field.parameter_count();
    for (int64_t i = 0; i < field.node_count(); ++i)
        field.parameters()[field.density_index(i)] = config.init_density_preact;
    if (config.seed_object_surface && config.render.path_mode == PathMode::Bent)
        seed_surface_density(scene, field, config.init_surface_density_preact);

    int workers = std::min(thread_count(), config.batch_size);
    GradAccumulator workspace(n_params, workers);
    // Moments in single precision: the update is bandwidth-bound and Adam's
    // moment estimates are far noisier than float round-off.
    std::vector<float> m(n_params, 0.0f), v(n_params, 0.0f);

    std::ofstream csv;
    if (!config.loss_csv_path.empty()) {
        csv.open(config.loss_csv_path);
        if (!csv) throw std::runtime_error("cannot open " + config.loss_csv_path);
        csv << "iteration,loss_rgb,loss_dist,loss,lr\n";
        csv.precision(12);
    }

    std::vector<TrainRay> batch(config.batch_size);
    double initial_loss = -1;
    int divergent_streak = 0;

    for (int iter = 0; iter < config.iterations; ++iter) {
        Rng pick(config.seed, static_cast<uint64_t>(iter) | (1ull << 62));
        for (int k = 0; k < config.batch_size; ++k) {
            int view = static_cast<int>(pick.next_below(cameras.size()));
            const Camera& cam = cameras[view];
            int px = static_cast<int>(pick.next_below(cam.width));
            int py = static_cast<int>(pick.next_below(cam.height));
            auto [o, d] = cam.ray(px, py);
            batch[k] = {o, d, images[view].pixel(px, py)};
        }

        int batch_workers = std::min<int64_t>(workers, config.batch_size);
        LossReport report =
            backward_pass(scene, field, batch, config, iter, workspace, batch_workers);

        double lr = learning_rate(config, iter) * config.lr_scale;
        double b1t = 1.0 - std::pow(config.adam_beta1, iter + 1);
        double b2t = 1.0 - std::pow(config.adam_beta2, iter + 1);
        double inv_n = 1.0 / config.batch_size;
        double* p = field.parameters().data();
        // Gradient merge fused into the update; worker buffers are summed
        // in fixed order, so the result is independent of scheduling.
        parallel_for_chunks(n_params, [&](int64_t begin, int64_t end, int) {
            for (int64_t i = begin; i < end; ++i) {
                double g = workspace.buffers()[0][i];
                for (int w = 1; w < batch_workers; ++w) g += workspace.buffers()[w][i];
                g *= inv_n;
                double mi = config.adam_beta1 * m[i] + (1 - config.adam_beta1) * g;
                double vi = config.adam_beta2 * v[i] + (1 - config.adam_beta2) * g * g;
                m[i] = static_cast<float>(mi);
                v[i] = static_cast<float>(vi);
                p[i] -= lr * (mi / b1t) / (std::sqrt(vi / b2t) + config.adam_eps);
            }
        });

        if (initial_loss < 0) initial_loss = report.total;
        divergent_streak = report.total > 10.0 * initial_loss ? divergent_streak + 1 : 0;
        if (divergent_streak >= 100)
            throw std::runtime_error(
                "training diverged: loss " + std::to_string(report.total) +
                " > 10x initial " + std::to_string(initial_loss) + " for 100 steps");

        if (csv.is_open())
            csv << iter << "," << report.rgb << "," << report.dist << "," << report.total
                << "," << lr << "\n";
        if (logger && (iter % std::max(1, config.log_every) == 0 ||
                       iter == config.iterations - 1))
            logger(iter, report, lr);
        if (config.checkpoint_every > 0 && !config.checkpoint_path.empty() &&
            (iter + 1) % config.checkpoint_every == 0 && iter + 1 < config.iterations) {
            char suffix[16];
            std::snprintf(suffix, sizeof suffix, ".%05d", iter + 1);
            field.save(config.checkpoint_path + suffix);
        }
    }

    if (!config.checkpoint_path.empty()) field.save(config.checkpoint_path);
    return field;
}

double mean_inside_weight_fraction(const Scene& scene, const VoxelField& field,
                                   const std::vector<Camera>& cameras,
                                   const RenderConfig& render, uint64_t seed) {
    if (cameras.empty()) return 0;
    double sum = 0;
    int64_t count = 0;
    std::vector<double> per_view(cameras.size(), 0.0);
    std::vector<int64_t> per_view_count(cameras.size(), 0);
    parallel_for(static_cast<int64_t>(cameras.size()), [&](int64_t vi) {
        const Camera& cam = cameras[vi];
        double acc = 0;
        int64_t n = 0;
        for (int y = 0; y < cam.height; ++y) {
            for (int x = 0; x < cam.width; ++x) {
                Rng rng(seed, static_cast<uint64_t>(vi) << 32 |
                                  static_cast<uint64_t>(y * cam.width + x));
                auto [o, d] = cam.ray(x, y);
                PathRender pr;
                render_pixel(scene, field, o, d, render, rng, &pr);
                double total = 0, inside = 0;
                for (int i = 0; i < pr.samples.size(); ++i) {
                    total += pr.integration.weights[i];
                    if (pr.samples.inside[i]) inside += pr.integration.weights[i];
                }
                if (total > 1e-9) {
                    acc += inside / total;
                    ++n;
                }
            }
        }
        per_view[vi] = acc;
        per_view_count[vi] = n;
    });
    for (size_t i = 0; i < cameras.size(); ++i) {
        sum += per_view[i];
        count += per_view_count[i];
    }
    return count > 0 ? sum / count : 0.0;
}

}  // namespace refref
