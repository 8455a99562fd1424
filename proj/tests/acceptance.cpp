// Acceptance gate: one pass/fail line per criterion. An optional list of
// criterion numbers on the command line restricts the run (default: all).
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <cstdlib>
#include <memory>
#include <numeric>
#include <set>
#include <string>
#include <vector>

#include "refref/losses.hpp"
#include "refref/metrics.hpp"
#include "refref/renderer.hpp"
#include "refref/scenegen.hpp"
#include "refref/train.hpp"

using namespace refref;

namespace {

struct Result {
    bool pass = false;
    std::string detail;
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

Vec3 random_unit(Rng& rng) {
    double z = 1 - 2 * rng.next_double();
    double phi = 2 * kPi * rng.next_double();
    double r = std::sqrt(std::max(0.0, 1 - z * z));
    return {r * std::cos(phi), r * std::sin(phi), z};
}

InterfaceEvent event_at_angle(double theta, double ior_in, double ior_out) {
    InterfaceEvent e;
    e.normal = {0, 0, 1};
    e.incoming_dir = {std::sin(theta), 0, -std::cos(theta)};
    e.ior_in = ior_in;
    e.ior_out = ior_out;
    return e;
}

char buffer[512];

std::string fmt(const char* f, ...) {
    va_list args;
    va_start(args, f);
    std::vsnprintf(buffer, sizeof(buffer), f, args);
    va_end(args);
    return buffer;
}

// ---------------------------------------------------------------- criterion 1

Result criterion1() {
    auto t0 = std::chrono::steady_clock::now();
    int failures = 0;

    auto [d45, k45] = refract_or_tir(event_at_angle(kPi / 4, 1.0, std::sqrt(2.0)));
    failures += !(k45 == EventKind::Refraction &&
                  std::abs(std::acos(-d45.z) - kPi / 6) <= 1e-9);

    double critical = std::asin(1.0 / 1.5);
    failures += refract_or_tir(event_at_angle(critical - 1e-9, 1.5, 1.0)).second !=
                EventKind::Refraction;
    failures += refract_or_tir(event_at_angle(critical + 1e-9, 1.5, 1.0)).second !=
                EventKind::TotalInternalReflection;

    failures += std::abs(fresnel(event_at_angle(0.0, 1.0, 1.5)).r - 0.04) > 1e-12;
    failures += std::abs(fresnel(event_at_angle(critical - 1e-14, 1.5, 1.0)).r - 1.0) > 1e-6;

    Rng rng(1, 0);
    int events = 0;
    for (int i = 0; events < 100000 && i < 200000; ++i) {
        Vec3 n = random_unit(rng);
        Vec3 d = random_unit(rng);
        if (dot(d, n) > 0) n = -n;
        if (-dot(d, n) < 1e-3) continue;
        ++events;
        InterfaceEvent e;
        e.normal = n;
        e.incoming_dir = d;
        e.ior_in = 1.0 + rng.next_double();
        e.ior_out = 1.0 + rng.next_double();
        auto [out, kind] = refract_or_tir(e);
        if (kind == EventKind::Refraction) {
            Vec3 ti = (d - n * dot(d, n)) * e.ior_in;
            Vec3 to = (out - n * dot(out, n)) * e.ior_out;
            if (length(ti - to) > 1e-9) ++failures;
            InterfaceEvent back;
            back.normal = -n;
            back.incoming_dir = -out;
            back.ior_in = e.ior_out;
            back.ior_out = e.ior_in;
            auto [rev, rk] = refract_or_tir(back);
            if (rk != EventKind::Refraction || length(rev - (-d)) > 1e-9) ++failures;
        } else {
            Vec3 mirror = d - n * (2.0 * dot(d, n));
            if (length(out - mirror) > 1e-9) ++failures;
        }
    }
    double dt = seconds_since(t0);
    return {failures == 0 && dt < 10.0,
            fmt("optics unit suite, %d checks failed, %.1f s", failures, dt)};
}

// ---------------------------------------------------------------- criterion 2

Result criterion2() {
    auto t0 = std::chrono::steady_clock::now();
    std::vector<TriMesh> meshes;
    meshes.push_back(make_icosphere(0.5, 3));
    meshes.push_back(make_box(0.8, 0.6, 1.1));
    meshes.push_back(make_torus(0.35, 0.18, 48, 24));

    int mismatches = 0, hits = 0;
    for (const TriMesh& mesh : meshes) {
        Accel accel(mesh);
        Rng rng(2, 0);
        for (int i = 0; i < 10000; ++i) {
            Vec3 o = random_unit(rng) * (0.2 + 1.6 * rng.next_double());
            Vec3 d = random_unit(rng);

            int best_tri = -1;
            double best_t = kInf;
            for (size_t tri = 0; tri < mesh.triangles.size(); ++tri) {
                const Triangle& f = mesh.triangles[tri];
                Vec3 e1 = mesh.vertices[f.v1] - mesh.vertices[f.v0];
                Vec3 e2 = mesh.vertices[f.v2] - mesh.vertices[f.v0];
                Vec3 p = cross(d, e2);
                double det = dot(e1, p);
                if (std::abs(det) < 1e-16) continue;
                Vec3 s = o - mesh.vertices[f.v0];
                double u = dot(s, p) / det;
                if (u < 0 || u > 1) continue;
                Vec3 q = cross(s, e1);
                double v = dot(d, q) / det;
                if (v < 0 || u + v > 1) continue;
                double t = dot(e2, q) / det;
                if (t > 1e-6 && t < best_t) {
                    best_t = t;
                    best_tri = static_cast<int>(tri);
                }
            }
            auto got = accel.intersect(o, d, 1e-6);
            if (best_tri < 0) {
                mismatches += got.has_value();
            } else {
                ++hits;
                if (!got || got->triangle != best_tri ||
                    std::abs(got->t - best_t) > 1e-9 * std::max(1.0, best_t))
                    ++mismatches;
            }
        }
    }
    double dt = seconds_since(t0);
    return {mismatches == 0 && dt < 30.0,
            fmt("bvh vs brute force, %d mismatches over %d hits, %.1f s", mismatches,
                hits, dt)};
}

// ---------------------------------------------------------------- criterion 3

Result criterion3() {
    auto t0 = std::chrono::steady_clock::now();
    const double radius = 0.5, b = 0.15, ior = 1.5;
    double theta1 = std::asin(b / radius);
    double deviation = 2.0 * (theta1 - std::asin(std::sin(theta1) / ior));

    bool monotone = true;
    double prev = kInf, err = kInf;
    std::string errs;
    for (int level = 2; level <= 5; ++level) {
        TriMesh mesh = make_icosphere(radius, level);
        MediumMap media;
        media.add(ior);
        Scene scene(std::move(mesh), std::move(media));
        PiecewisePath p = trace_refraction_path(scene, {-2, b, 0}, {1, 0, 0});
        if (p.bend_count() != 2) return {false, "sphere path did not bend twice"};
        double angle =
            std::acos(std::clamp(dot(p.directions.back(), Vec3{1, 0, 0}), -1.0, 1.0));
        err = std::abs(angle - deviation);
        monotone = monotone && err < prev;
        prev = err;
        errs += fmt("%.2e ", err);
    }
    double dt = seconds_since(t0);
    double half_degree = 0.5 * kPi / 180.0;
    return {monotone && err < half_degree && dt < 60.0,
            fmt("sphere-lens errors [%s] rad, final %.2e < %.2e, %.1f s", errs.c_str(),
                err, half_degree, dt)};
}

// ---------------------------------------------------------------- criterion 4

Result criterion4() {
    int failures = 0;

    PiecewisePath line = straight_path({0, 0, 0}, {1, 0, 0});
    const double sigma = 2.0, L = 1.5;
    SampleSet s = sample_uniform(line, 256, 0.0, L, nullptr);
    Integration r = integrate(s, std::vector<Vec3>(256, Vec3{1, 1, 1}),
                              std::vector<double>(256, sigma));
    failures += std::abs(r.opacity - (1.0 - std::exp(-sigma * L))) > 1e-3;

    SampleSet m = make_sample_set(line, {1.0, 2.0, 3.0}, 0.0, 4.0);
    failures += median_depth(m, {0.0, 1.0, 0.0}) != 2.0;
    failures += median_depth(m, {0.2, 0.2, 0.6}) != 3.0;

    TriMesh far_mesh = make_icosphere(0.05, 1, 1, {50, 0, 0});
    MediumMap media;
    media.add(1.5);
    Scene scene(std::move(far_mesh), std::move(media));
    RenderConfig config;
    config.n_uniform = 16;
    config.n_resample = 16;
    for (int i = 0; i < 10000 && failures == 0; ++i) {
        VoxelField f(8, 8, 8, {-2, -2, -2}, {2, 2, 2}, 2);
        Rng pr(100 + i, 0);
        for (double& p : f.parameters()) p = (pr.next_double() - 0.5) * 4.0;
        Rng rng(4, i);
        PathRender path;
        render_pixel(scene, f, {-2, 0.3, 0.2},
                     normalize(Vec3{1, 0.1 * ((i % 11) - 5), 0.05 * (i % 5)}), config,
                     rng, &path);
        double wsum = 0;
        for (size_t k = 0; k < path.integration.weights.size(); ++k) {
            if (path.integration.weights[k] < 0) ++failures;
            wsum += path.integration.weights[k];
            if (k > 0 && path.integration.transmittance[k] >
                             path.integration.transmittance[k - 1] + 1e-15)
                ++failures;
        }
        if (wsum > 1.0 + 1e-12) ++failures;
    }
    return {failures == 0, fmt("volume integration, %d checks failed", failures)};
}

// ---------------------------------------------------------------- criterion 5

Result criterion5() {
    auto t0 = std::chrono::steady_clock::now();
    TriMesh mesh = make_icosphere(0.5, 3);
    MediumMap media;
    media.add(1.5);
    Scene scene(std::move(mesh), std::move(media));
    VoxelField field(8, 8, 8, {-2, -2, -2}, {2, 2, 2}, 2);
    Rng rng(5, 0);
    for (double& p : field.parameters()) p = (rng.next_double() - 0.5) * 2.0;

    TrainConfig config;
    config.render.n_uniform = 40;
    config.render.n_resample = 0;  // resampled positions depend on the parameters
    config.lambda_dist = 0.01;

    std::vector<TrainRay> rays;
    int bent = 0;
    for (int i = 0; i < 16; ++i) {
        TrainRay r;
        r.origin = {-1.6, -0.3 + 0.04 * i, 0.05};
        r.direction = normalize(Vec3{1.0, 0.18 - 0.022 * i, -0.02});
        r.target_srgb = {0.2 + 0.03 * i / 16.0, 0.5, 0.3};
        bent += trace_refraction_path(scene, r.origin, r.direction).bend_count() > 0;
        rays.push_back(r);
    }
    if (bent < 8) return {false, "too few bent rays in the gradient check"};

    std::vector<double> grads;
    backward(scene, field, rays, config, 0, grads);
    std::vector<int64_t> order(grads.size());
    std::iota(order.begin(), order.end(), 0);
    std::partial_sort(order.begin(), order.begin() + 50, order.end(),
                      [&](int64_t a, int64_t b) {
                          return std::abs(grads[a]) > std::abs(grads[b]);
                      });
    const double h = 1e-4;
    double worst = 0;
    std::vector<double> scratch;
    for (int k = 0; k < 50; ++k) {
        int64_t i = order[k];
        double saved = field.parameters()[i];
        field.parameters()[i] = saved + h;
        double up = backward(scene, field, rays, config, 0, scratch).total;
        field.parameters()[i] = saved - h;
        double down = backward(scene, field, rays, config, 0, scratch).total;
        field.parameters()[i] = saved;
        double fd = (up - down) / (2 * h);
        worst = std::max(worst, std::abs(grads[i] - fd) / std::max(1e-12, std::abs(fd)));
    }
    double dt = seconds_since(t0);
    return {worst <= 1e-4 && dt < 60.0,
            fmt("gradient check, worst relative error %.2e over 50 largest, %.1f s",
                worst, dt)};
}

// ---------------------------------------------------------------- criterion 6

Result criterion6() {
    int failures = 0;
    failures += std::abs(photometric_loss({1, 1, 1}, {0, 0, 0}) - 1.0) > 1e-12;
    failures += std::abs(photometric_loss({0.5, 0, 0}, {0, 0, 0}) - 1.0 / 12.0) > 1e-12;

    auto manual = [](std::vector<double> edges, std::vector<uint8_t> inside) {
        SampleSet s;
        s.t_near = 0;
        s.t_far = 1;
        s.edge = edges;
        int n = static_cast<int>(edges.size()) - 1;
        for (int i = 0; i < n; ++i) {
            s.t.push_back(0.5 * (edges[i] + edges[i + 1]));
            s.dt.push_back(edges[i + 1] - edges[i]);
            s.s.push_back(s.t.back());
            s.position.push_back({s.t.back(), 0, 0});
            s.direction.push_back({1, 0, 0});
            s.medium.push_back(0);
        }
        s.inside = inside.empty() ? std::vector<uint8_t>(n, 0) : inside;
        return s;
    };

    SampleSet one = manual({0.45, 0.55}, {});
    failures += std::abs(distortion_loss(one, {1.0}, false) - 1.0 / 30.0) > 1e-12;
    SampleSet two = manual({0.0, 0.2, 0.8, 1.0}, {});
    double expect = 0.4 + 2 * 0.25 * 0.2 / 3.0;
    failures += std::abs(distortion_loss(two, {0.5, 0.0, 0.5}, false) - expect) > 1e-12;

    Rng rng(6, 0);
    for (int rep = 0; rep < 10000; ++rep) {
        int n = 1 + static_cast<int>(rng.next_below(64));
        std::vector<double> edges{0.0};
        for (int i = 0; i < n; ++i) edges.push_back(edges.back() + rng.next_double() + 1e-4);
        for (double& e : edges) e /= edges.back() > 0 ? edges.back() : 1.0;
        std::vector<uint8_t> inside(n);
        for (auto& f : inside) f = rng.next_double() < 0.4;
        SampleSet s = manual(edges, inside);
        std::vector<double> w(n);
        for (double& x : w) x = rng.next_double() * 0.2;

        double corrected = distortion_loss(s, w, true);
        double uncorrected = distortion_loss(s, w, false);
        if (corrected > uncorrected + 1e-15) ++failures;

        // Quadratic reference for both variants.
        for (bool c : {false, true}) {
            double ref = 0;
            auto mid = [&](int i) { return 0.5 * (s.edge[i] + s.edge[i + 1]); };
            for (int i = 0; i < n; ++i) {
                if (c && s.inside[i]) continue;
                for (int j = 0; j < n; ++j) {
                    if (c && s.inside[j]) continue;
                    ref += w[i] * w[j] * std::abs(mid(i) - mid(j));
                }
                ref += w[i] * w[i] * s.dt[i] / 3.0;
            }
            if (std::abs(distortion_loss(s, w, c) - ref) > 1e-12) ++failures;
        }
    }
    return {failures == 0, fmt("loss suite, %d checks failed", failures)};
}

// ------------------------------------------------- shared training machinery

const uint64_t kDatasetSeed = 7;
const uint64_t kTrainSeed = 21;

struct TrainedSetup {
    std::unique_ptr<Scene> scene;
    std::vector<Camera> train_cameras;
    std::vector<Image> train_images;
    std::vector<Camera> test_cameras;
    std::vector<GroundTruthRender> test_gt;
};

TrainedSetup build_setup(const std::string& preset, int resolution, int spp) {
    RenderSettings render;
    render.width = resolution;
    render.height = resolution;
    render.spp = spp;
    SceneSpec spec = make_preset(preset, kDatasetSeed, render);
    TrainedSetup setup;
    setup.scene = std::make_unique<Scene>(spec.mesh, spec.media);
    setup.train_cameras = spec.train_cameras;
    setup.test_cameras = spec.test_cameras;
    GroundTruthConfig gt;
    gt.spp = spp;
    for (size_t i = 0; i < spec.train_cameras.size(); ++i) {
        gt.seed = kDatasetSeed * 1000 + i;
        setup.train_images.push_back(
            render_ground_truth(*setup.scene, spec.background, spec.train_cameras[i], gt)
                .image);
    }
    for (size_t i = 0; i < spec.test_cameras.size(); ++i) {
        gt.seed = kDatasetSeed * 2000 + i;
        setup.test_gt.push_back(
            render_ground_truth(*setup.scene, spec.background, spec.test_cameras[i], gt));
    }
    return setup;
}

enum class Mode { Oracle, NoReflection, NoTir, Straight, Uncorrected };

TrainConfig mode_config(Mode mode, uint64_t seed) {
    TrainConfig config;
    config.seed = seed;
    config.log_every = 0;
    switch (mode) {
        case Mode::Oracle:
            break;
        case Mode::NoReflection:
            config.ablation.first_surface_reflection = false;
            break;
        case Mode::NoTir:
            config.ablation.tir = false;
            break;
        case Mode::Straight:
            config.render.path_mode = PathMode::Straight;
            config.render.enable_reflection = false;
            break;
        case Mode::Uncorrected:
            config.ablation.corrected_distortion = false;
            break;
    }
    return config;
}

VoxelField run_training(const TrainedSetup& setup, TrainConfig config, const char* tag) {
    std::fprintf(stderr, "  [train %s: %d iters, batch %d, grid %d]\n", tag,
                 config.iterations, config.batch_size, config.grid_resolution);
    auto t0 = std::chrono::steady_clock::now();
    VoxelField field = train(*setup.scene, setup.train_cameras, setup.train_images,
                             config, [&](int it, const LossReport& r, double) {
                                 if (it % 200 == 0)
                                     std::fprintf(stderr, "    iter %d loss %.5f\n", it,
                                                  r.total);
                             });
    std::fprintf(stderr, "  [train %s done in %.0f s]\n", tag, seconds_since(t0));
    return field;
}

struct EvalOut {
    double psnr_masked = 0;
    double dmae_masked = 0;
};

EvalOut evaluate(const TrainedSetup& setup, const VoxelField& field,
                 const RenderConfig& render, uint64_t seed) {
    EvalOut out;
    for (size_t i = 0; i < setup.test_cameras.size(); ++i) {
        FieldViewRender view =
            render_field_view(*setup.scene, field, setup.test_cameras[i], render,
                              seed + i);
        const GroundTruthRender& gt = setup.test_gt[i];
        out.psnr_masked += psnr(view.image, gt.image, &gt.mask);
        out.dmae_masked += dmae(view.depth, gt.depth, &gt.mask);
    }
    out.psnr_masked /= setup.test_cameras.size();
    out.dmae_masked /= setup.test_cameras.size();
    return out;
}

// Criterion 7 artifacts are shared with criteria 10 and 11.
struct ClosedLoop {
    TrainedSetup setup;
    VoxelField oracle;
    VoxelField straight;
    EvalOut oracle_eval;
    EvalOut straight_eval;
};

ClosedLoop* closed_loop_state = nullptr;

ClosedLoop& closed_loop() {
    if (closed_loop_state) return *closed_loop_state;
    auto* s = new ClosedLoop;
    std::fprintf(stderr, "[criterion 7 setup: convex-sphere 50 views 64x64]\n");
    s->setup = build_setup("convex-sphere", 64, 4);
    s->oracle = run_training(s->setup, mode_config(Mode::Oracle, kTrainSeed), "oracle");
    s->straight =
        run_training(s->setup, mode_config(Mode::Straight, kTrainSeed), "straight");
    s->oracle_eval =
        evaluate(s->setup, s->oracle, mode_config(Mode::Oracle, kTrainSeed).effective_render(), 900);
    s->straight_eval = evaluate(s->setup, s->straight,
                                mode_config(Mode::Straight, kTrainSeed).effective_render(), 900);
    closed_loop_state = s;
    return *s;
}

Result criterion7() {
    ClosedLoop& s = closed_loop();
    double gap = s.oracle_eval.psnr_masked - s.straight_eval.psnr_masked;
    return {gap >= 3.0,
            fmt("masked PSNR oracle %.2f vs straight %.2f dB, gap %.2f (need >= 3)",
                s.oracle_eval.psnr_masked, s.straight_eval.psnr_masked, gap)};
}

// Criterion 8: ablation ordering on the TIR scene. The config is
// deliberately data-rich and capacity-tight (more pixels than an easy
// interpolation budget, coarse grid): with spare capacity a mistraced but
// self-consistent ray family can still interpolate the training views and
// the ablations come out indistinguishable.
TrainConfig ablation_config(Mode mode, uint64_t seed) {
    TrainConfig config = mode_config(mode, seed);
    config.iterations = 1500;
    config.batch_size = 512;
    config.grid_resolution = 24;
    return config;
}

struct AblationRun {
    VoxelField field;
    double psnr_masked = 0;
};

struct AblationState {
    TrainedSetup setup;
    // [seed][mode in {oracle, no-reflection, no-tir}]
    double psnr[3][3] = {};
    VoxelField first_oracle;  // kept for the determinism criterion
};

AblationState* ablation_state = nullptr;

AblationState& ablation() {
    if (ablation_state) return *ablation_state;
    auto* s = new AblationState;
    std::fprintf(stderr, "[criterion 8 setup: tir-cube 50 views 64x64]\n");
    s->setup = build_setup("tir-cube", 64, 2);
    const Mode modes[3] = {Mode::Oracle, Mode::NoReflection, Mode::NoTir};
    const char* names[3] = {"oracle", "no-reflection", "no-tir"};
    for (int seed = 0; seed < 3; ++seed)
        for (int m = 0; m < 3; ++m) {
            TrainConfig config = ablation_config(modes[m], kTrainSeed + seed);
            VoxelField field = run_training(
                s->setup, config, fmt("%s seed %d", names[m], seed).c_str());
            s->psnr[seed][m] =
                evaluate(s->setup, field, config.effective_render(), 901).psnr_masked;
            if (seed == 0 && m == 0) s->first_oracle = field;
        }
    ablation_state = s;
    return *s;
}

Result criterion8() {
    AblationState& s = ablation();
    bool ordered = true;
    std::string detail;
    for (int seed = 0; seed < 3; ++seed) {
        ordered = ordered && s.psnr[seed][0] > s.psnr[seed][1] &&
                  s.psnr[seed][1] > s.psnr[seed][2];
        detail += fmt("seed %d: %.2f > %.2f > %.2f; ", seed, s.psnr[seed][0],
                      s.psnr[seed][1], s.psnr[seed][2]);
    }
    return {ordered, "ablation ordering " + detail};
}

// Criterion 9: corrected vs uncorrected distortion, in-object weight mass.
TrainConfig distortion_config(Mode mode, uint64_t seed) {
    TrainConfig config = mode_config(mode, seed);
    config.iterations = 600;
    config.batch_size = 256;
    config.grid_resolution = 40;
    return config;
}

struct DistortionState {
    TrainedSetup setup;
    VoxelField corrected;
    VoxelField uncorrected;
    double mass_corrected = 0;
    double mass_uncorrected = 0;
};

DistortionState* distortion_state = nullptr;

DistortionState& distortion() {
    if (distortion_state) return *distortion_state;
    auto* s = new DistortionState;
    std::fprintf(stderr, "[criterion 9 setup: convex-sphere 50 views 32x32]\n");
    s->setup = build_setup("convex-sphere", 32, 2);
    TrainConfig corrected = distortion_config(Mode::Oracle, kTrainSeed);
    TrainConfig uncorrected = distortion_config(Mode::Uncorrected, kTrainSeed);
    s->corrected = run_training(s->setup, corrected, "corrected");
    s->uncorrected = run_training(s->setup, uncorrected, "uncorrected");
    s->mass_corrected =
        mean_inside_weight_fraction(*s->setup.scene, s->corrected, s->setup.test_cameras,
                                    corrected.effective_render(), 902);
    s->mass_uncorrected = mean_inside_weight_fraction(*s->setup.scene, s->uncorrected,
                                                      s->setup.test_cameras,
                                                      uncorrected.effective_render(), 902);
    distortion_state = s;
    return *s;
}

Result criterion9() {
    DistortionState& s = distortion();
    return {s.mass_corrected > s.mass_uncorrected,
            fmt("in-object weight mass corrected %.4f vs uncorrected %.4f",
                s.mass_corrected, s.mass_uncorrected)};
}

Result criterion10() {
    ClosedLoop& s = closed_loop();
    return {s.oracle_eval.dmae_masked < 0.05,
            fmt("oracle median-depth DMAE %.4f (need < 0.05)", s.oracle_eval.dmae_masked)};
}

Result criterion11() {
    bool pass = true;
    std::string detail;

    ClosedLoop& c7 = closed_loop();
    VoxelField oracle2 =
        run_training(c7.setup, mode_config(Mode::Oracle, kTrainSeed), "oracle rerun");
    bool same7 = oracle2.parameters() == c7.oracle.parameters();
    pass = pass && same7;
    detail += fmt("criterion-7 oracle rerun %s; ", same7 ? "bitwise equal" : "DIFFERS");

    AblationState& c8 = ablation();
    VoxelField ablation2 = run_training(
        c8.setup, ablation_config(Mode::Oracle, kTrainSeed), "ablation rerun");
    bool same8 = ablation2.parameters() == c8.first_oracle.parameters();
    pass = pass && same8;
    detail += fmt("criterion-8 oracle rerun %s; ", same8 ? "bitwise equal" : "DIFFERS");

    DistortionState& c9 = distortion();
    VoxelField corrected2 = run_training(
        c9.setup, distortion_config(Mode::Oracle, kTrainSeed), "corrected rerun");
    bool same9 = corrected2.parameters() == c9.corrected.parameters();
    pass = pass && same9;
    detail += fmt("criterion-9 corrected rerun %s", same9 ? "bitwise equal" : "DIFFERS");

    return {pass, detail};
}

}  // namespace

int main(int argc, char** argv) {
    std::set<int> wanted;
    for (int i = 1; i < argc; ++i) wanted.insert(std::atoi(argv[i]));

    struct Entry {
        int id;
        Result (*fn)();
    };
    const Entry entries[] = {{1, criterion1}, {2, criterion2},  {3, criterion3},
                             {4, criterion4}, {5, criterion5},  {6, criterion6},
                             {7, criterion7}, {8, criterion8},  {9, criterion9},
                             {10, criterion10}, {11, criterion11}};

    int failed = 0;
    for (const Entry& e : entries) {
        if (!wanted.empty() && !wanted.count(e.id)) continue;
        Result r;
        try {
            r = e.fn();
        } catch (const std::exception& ex) {
            r = {false, std::string("exception: ") + ex.what()};
        }
        std::printf("criterion %2d: %s  %s\n", e.id, r.pass ? "PASS" : "FAIL",
                    r.detail.c_str());
        std::fflush(stdout);
        failed += !r.pass;
    }
    return failed == 0 ? 0 : 1;
}
