#include "refref/renderer.hpp"

#include <algorithm>
#include <stdexcept>

#include "refref/parallel.hpp"

namespace refref {

namespace {

/// Interval edges around sorted sample distances: domain endpoints outside,
/// midpoints between neighbors.
std::vector<double> interval_edges(const std::vector<double>& t, double t_near,
                                   double t_far) {
    std::vector<double> edges(t.size() + 1);
    edges.front() = t_near;
    edges.back() = t_far;
    for (size_t i = 1; i < t.size(); ++i) edges[i] = 0.5 * (t[i - 1] + t[i]);
    return edges;
}

}  // namespace

SampleSet make_sample_set(const PiecewisePath& path, std::vector<double> distances,
                          double t_near, double t_far) {
    if (t_near >= t_far) throw std::runtime_error("t_near must be < t_far");
    SampleSet set;
    set.t_near = t_near;
    set.t_far = t_far;
    set.t = std::move(distances);
    int n = set.size();
    set.edge = interval_edges(set.t, t_near, t_far);
    const std::vector<double>& edges = set.edge;
    set.dt.resize(n);
    set.s.resize(n);
    set.position.resize(n);
    set.direction.resize(n);
    set.medium.resize(n);
    set.inside.resize(n);
    double span = t_far - t_near;
    for (int i = 0; i < n; ++i) {
        set.dt[i] = edges[i + 1] - edges[i];
        set.s[i] = (set.t[i] - t_near) / span;
        auto [pos, dir] = path.point_at(set.t[i]);
        set.position[i] = pos;
        set.direction[i] = dir;
        int seg = path.segment_index(set.t[i]);
        set.medium[i] = path.segment_medium[seg];
        set.inside[i] = set.medium[i] != kAmbientMedium ? 1 : 0;
    }
    return set;
}

SampleSet sample_uniform(const PiecewisePath& path, int n, double t_near, double t_far,
                         Rng* rng) {
    if (n < 1) throw std::runtime_error("sample count must be >= 1");
    std::vector<double> t(n);
    double w = (t_far - t_near) / n;
    for (int i = 0; i < n; ++i) {
        double u = rng ? rng->next_double() : 0.5;
        t[i] = t_near + (i + u) * w;
    }
    return make_sample_set(path, std::move(t), t_near, t_far);
}

SampleSet resample_pdf(const PiecewisePath& path, const SampleSet& base,
                       const std::vector<double>& weights, int n, Rng& rng) {
    if (weights.size() != static_cast<size_t>(base.size()))
        throw std::runtime_error("resample_pdf: weights/samples size mismatch");
    if (n < 1) throw std::runtime_error("sample count must be >= 1");

    double total = 0;
    for (double w : weights) {
        if (w < 0) throw std::runtime_error("resample_pdf: negative weight");
        total += w;
    }
    if (total <= 0) return sample_uniform(path, n, base.t_near, base.t_far, &rng);

    std::vector<double> edges = interval_edges(base.t, base.t_near, base.t_far);
    std::vector<double> cdf(weights.size() + 1, 0.0);
    for (size_t i = 0; i < weights.size(); ++i) cdf[i + 1] = cdf[i] + weights[i];

    std::vector<double> t(n);
    size_t bin = 0;
    for (int k = 0; k < n; ++k) {
        double u = (k + rng.next_double()) / n * total;  // stratified, ascending
        while (bin + 1 < weights.size() && cdf[bin + 1] <= u) ++bin;
        double local = weights[bin] > 0 ? (u - cdf[bin]) / weights[bin] : 0.5;
        t[k] = edges[bin] + local * (edges[bin + 1] - edges[bin]);
    }
    // Ascending by construction; enforce strict ordering for positive dt.
    const double eps = 1e-12;
    for (int k = 1; k < n; ++k)
        if (t[k] <= t[k - 1] + eps) t[k] = t[k - 1] + eps;
    for (int k = n - 1; k >= 0; --k)
        t[k] = std::min(t[k], base.t_far - (n - k) * eps);
    return make_sample_set(path, std::move(t), base.t_near, base.t_far);
}

Integration integrate(const SampleSet& samples, const std::vector<Vec3>& colors,
                      const std::vector<double>& densities) {
    int n = samples.size();
    if (colors.size() != static_cast<size_t>(n) || densities.size() != static_cast<size_t>(n))
        throw std::runtime_error("integrate: array size mismatch");
    Integration out;
    out.weights.resize(n);
    out.transmittance.resize(n);
    double optical_depth = 0;
    for (int i = 0; i < n; ++i) {
        double T = std::exp(-optical_depth);
        double alpha = 1.0 - std::exp(-densities[i] * samples.dt[i]);
        double w = T * alpha;
        out.transmittance[i] = T;
        out.weights[i] = w;
        out.color += colors[i] * w;
        out.opacity += w;
        optical_depth += densities[i] * samples.dt[i];
    }
    return out;
}

double median_depth(const SampleSet& samples, const std::vector<double>& weights) {
    double total = 0;
    for (double w : weights) total += w;
    if (total <= 0) return samples.t_far;
    double half = 0.5 * total;
    double cum = 0;
    for (int i = 0; i < samples.size(); ++i) {
        cum += weights[i];
        if (cum >= half) return samples.t[i];
    }
    return samples.t_far;
}

namespace {

void query_samples(const VoxelField& field, const SampleSet& set, std::vector<Vec3>& colors,
                   std::vector<double>& densities) {
    colors.resize(set.size());
    densities.resize(set.size());
    for (int i = 0; i < set.size(); ++i) {
        auto q = field.query(set.position[i], set.direction[i]);
        colors[i] = q.color;
        densities[i] = q.density;
    }
}

/// Sorted union of two sample sets along the same path, carrying the field
/// queries along so nothing is evaluated twice. Equal distances are nudged
/// apart to keep interval widths positive.
void merge_sampled(const SampleSet& a, const std::vector<Vec3>& ca,
                   const std::vector<double>& da, const SampleSet& b,
                   const std::vector<Vec3>& cb, const std::vector<double>& db,
                   PathRender& pr) {
    int n = a.size() + b.size();
    SampleSet& out = pr.samples;
    out.t_near = a.t_near;
    out.t_far = a.t_far;
    out.t.resize(n);
    out.s.resize(n);
    out.position.resize(n);
    out.direction.resize(n);
    out.medium.resize(n);
    out.inside.resize(n);
    pr.colors.resize(n);
    pr.densities.resize(n);

    int ia = 0, ib = 0;
    for (int k = 0; k < n; ++k) {
        bool from_a = ib >= b.size() || (ia < a.size() && a.t[ia] <= b.t[ib]);
        const SampleSet& src = from_a ? a : b;
        int i = from_a ? ia++ : ib++;
        out.t[k] = src.t[i];
        out.position[k] = src.position[i];
        out.direction[k] = src.direction[i];
        out.medium[k] = src.medium[i];
        out.inside[k] = src.inside[i];
        pr.colors[k] = from_a ? ca[i] : cb[i];
        pr.densities[k] = from_a ? da[i] : db[i];
    }
    for (int k = 1; k < n; ++k)
        if (out.t[k] <= out.t[k - 1]) out.t[k] = out.t[k - 1] + 1e-12;

    out.edge.resize(n + 1);
    out.edge.front() = out.t_near;
    out.edge.back() = out.t_far;
    for (int k = 1; k < n; ++k) out.edge[k] = 0.5 * (out.t[k - 1] + out.t[k]);
    out.dt.resize(n);
    out.s.resize(n);
    double span = out.t_far - out.t_near;
    for (int k = 0; k < n; ++k) {
        out.dt[k] = out.edge[k + 1] - out.edge[k];
        out.s[k] = (out.t[k] - out.t_near) / span;
    }
}

void render_path(const VoxelField& field, const RenderConfig& config, Rng& rng,
                 PathRender& pr) {
    SampleSet base = sample_uniform(pr.path, config.n_uniform, config.t_near,
                                    config.t_far, &rng);
    std::vector<Vec3> colors;
    std::vector<double> densities;
    query_samples(field, base, colors, densities);
    if (config.n_resample > 0) {
        Integration coarse = integrate(base, colors, densities);
        SampleSet fine = resample_pdf(pr.path, base, coarse.weights, config.n_resample, rng);
        std::vector<Vec3> fine_colors;
        std::vector<double> fine_densities;
        query_samples(field, fine, fine_colors, fine_densities);
        // Final set: union of both passes, so coverage never degrades.
        merge_sampled(base, colors, densities, fine, fine_colors, fine_densities, pr);
    } else {
        pr.samples = std::move(base);
        pr.colors = std::move(colors);
        pr.densities = std::move(densities);
    }
    pr.integration = integrate(pr.samples, pr.colors, pr.densities);
}

}  // namespace

RenderedPixel render_pixel(const Scene& scene, const VoxelField& field, const Vec3& origin,
                           const Vec3& direction, const RenderConfig& config, Rng& rng,
                           PathRender* refraction, PathRender* reflection) {
    PathRender local_refr;
    PathRender& pr = refraction ? *refraction : local_refr;

    TraceOptions trace_opts{config.max_bends, config.enable_tir};
    pr.path = config.path_mode == PathMode::Straight
                  ? straight_path(origin, direction)
                  : trace_refraction_path(scene, origin, direction, trace_opts);
    render_path(field, config, rng, pr);

    RenderedPixel px;
    px.color_refraction = pr.integration.color;
    px.median_distance = median_depth(pr.samples, pr.integration.weights);

    double r = config.enable_reflection ? pr.path.first_surface_reflectance : 0.0;
    px.reflectance = r;
    if (r >= config.reflection_skip_threshold && config.path_mode == PathMode::Bent) {
        PathRender local_refl;
        PathRender& pf = reflection ? *reflection : local_refl;
        pf.path = trace_reflection_path(scene, origin, direction);
        render_path(field, config, rng, pf);
        px.color_reflection = pf.integration.color;
        px.reflection_evaluated = true;
    } else {
        px.color_reflection = px.color_refraction;
        if (reflection) *reflection = PathRender{};
    }

    px.combined_linear =
        px.color_refraction + (px.color_reflection - px.color_refraction) * r;
    px.srgb = linear_to_srgb(clamp01(px.combined_linear));
    return px;
}

FieldViewRender render_field_view(const Scene& scene, const VoxelField& field,
                                  const Camera& camera, const RenderConfig& config,
                                  uint64_t seed) {
    FieldViewRender out;
    out.image = Image(camera.width, camera.height, 3);
    out.depth = Image(camera.width, camera.height, 1);
    parallel_for(camera.height, [&](int64_t y) {
        for (int x = 0; x < camera.width; ++x) {
            uint64_t pixel_id = static_cast<uint64_t>(y) * camera.width + x;
            Rng rng(seed, pixel_id);
            auto [o, d] = camera.ray(x, static_cast<int>(y));
            RenderedPixel px = render_pixel(scene, field, o, d, config, rng);
            out.image.set_pixel(x, static_cast<int>(y), px.srgb);
            out.depth.at(x, static_cast<int>(y), 0) = static_cast<float>(px.median_distance);
        }
    });
    return out;
}

Vec3 ground_truth_radiance(const Scene& scene, const BackgroundModel& bg, const Vec3& origin,
                           const Vec3& direction, const GroundTruthConfig& config) {
    TraceOptions opts{config.max_bends, true};
    PiecewisePath path = trace_refraction_path(scene, origin, direction, opts);

    // Beer-Lambert attenuation over the finite in-medium segments.
    Vec3 atten{1, 1, 1};
    for (int i = 0; i + 1 < static_cast<int>(path.points.size()); ++i) {
        const Vec3& a = scene.media().at(path.segment_medium[i]).absorption;
        double len = path.cumulative[i + 1] - path.cumulative[i];
        atten = atten * Vec3{std::exp(-a.x * len), std::exp(-a.y * len), std::exp(-a.z * len)};
    }

    Vec3 exit_point = path.points.back() + path.directions.back() * kSurfaceEpsilon;
    auto bg_hit = bg.hit(exit_point, path.directions.back());
    Vec3 c_refr = bg_hit.escaped ? Vec3{0, 0, 0} : bg_hit.radiance;
    // Final (infinite) segment: attenuate if the path ended inside a medium.
    const Vec3& a_last = scene.media().at(path.segment_medium.back()).absorption;
    if (!bg_hit.escaped && std::isfinite(bg_hit.t) &&
        (a_last.x > 0 || a_last.y > 0 || a_last.z > 0)) {
        atten = atten * Vec3{std::exp(-a_last.x * bg_hit.t), std::exp(-a_last.y * bg_hit.t),
                             std::exp(-a_last.z * bg_hit.t)};
    }
    c_refr = c_refr * atten;

    double r = path.first_surface_reflectance;
    if (r < config.reflection_skip_threshold) return c_refr;

    PiecewisePath refl = trace_reflection_path(scene, origin, direction);
    Vec3 c_refl{0, 0, 0};
    if (refl.bend_count() > 0) {
        Vec3 from = refl.points[1] + refl.directions[1] * kSurfaceEpsilon;
        auto h = bg.hit(from, refl.directions[1]);
        if (!h.escaped) c_refl = h.radiance;
    } else {
        c_refl = c_refr;
    }
    return c_refr + (c_refl - c_refr) * r;
}

GroundTruthRender render_ground_truth(const Scene& scene, const BackgroundModel& bg,
                                      const Camera& camera,
                                      const GroundTruthConfig& config) {
    GroundTruthRender out;
    out.image = Image(camera.width, camera.height, 3);
    out.depth = Image(camera.width, camera.height, 1);
    out.mask = Image(camera.width, camera.height, 1);

    parallel_for(camera.height, [&](int64_t y) {
        for (int x = 0; x < camera.width; ++x) {
            uint64_t pixel_id = static_cast<uint64_t>(y) * camera.width + x;
            Rng rng(config.seed, pixel_id);
            Vec3 acc{0, 0, 0};
            for (int s = 0; s < config.spp; ++s) {
                double ox = config.spp == 1 ? 0.5 : rng.next_double();
                double oy = config.spp == 1 ? 0.5 : rng.next_double();
                auto [o, d] = camera.ray(x, static_cast<int>(y), ox, oy);
                acc += ground_truth_radiance(scene, bg, o, d, config);
            }
            Vec3 linear = acc / config.spp;
            out.image.set_pixel(x, static_cast<int>(y), linear_to_srgb(clamp01(linear)));

            // Depth and mask from the unjittered central ray.
            auto [o, d] = camera.ray(x, static_cast<int>(y));
            auto hit = scene.accel().intersect(o, d, 0.0);
            if (hit) {
                out.depth.at(x, static_cast<int>(y), 0) = static_cast<float>(hit->t);
                out.mask.at(x, static_cast<int>(y), 0) = 1.0f;
            } else {
                auto bh = bg.hit(o, d);
                out.depth.at(x, static_cast<int>(y), 0) =
                    static_cast<float>(std::isfinite(bh.t) ? bh.t : 0.0);
            }
        }
    });
    return out;
}

}  // namespace refref
