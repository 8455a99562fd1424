#include "refref/lightpath.hpp"

#include <algorithm>
#include <stdexcept>

namespace refref {

namespace {

void check_unit(const Vec3& v, const char* what) {
    if (std::abs(length(v) - 1.0) > 1e-6)
        throw std::runtime_error(std::string(what) + " must be unit length");
}

}  // namespace

int PiecewisePath::segment_index(double t) const {
    // tau is strictly increasing; find i with tau_i <= t < tau_{i+1}.
    auto it = std::upper_bound(cumulative.begin(), cumulative.end(), t);
    int i = static_cast<int>(it - cumulative.begin()) - 1;
    return std::clamp(i, 0, static_cast<int>(points.size()) - 1);
}

std::pair<Vec3, Vec3> PiecewisePath::point_at(double t) const {
    int i = segment_index(t);
    return {points[i] + directions[i] * (t - cumulative[i]), directions[i]};
}

std::pair<Vec3, EventKind> refract_or_tir(const InterfaceEvent& event) {
    check_unit(event.incoming_dir, "incoming direction");
    check_unit(event.normal, "normal");

    double alpha = event.alpha();
    double beta = event.beta();
    double gamma_sq = event.gamma_squared();
    if (gamma_sq >= 0.0) {
        double gamma = std::sqrt(gamma_sq);
        Vec3 d = event.incoming_dir * alpha + event.normal * (alpha * beta - gamma);
        return {normalize(d), EventKind::Refraction};
    }
    Vec3 d = event.incoming_dir -
             event.normal * (2.0 * dot(event.incoming_dir, event.normal));
    return {normalize(d), EventKind::TotalInternalReflection};
}

FresnelSplit fresnel(const InterfaceEvent& event) {
    double gamma_sq = event.gamma_squared();
    if (gamma_sq < 0.0)
        throw std::runtime_error("fresnel undefined beyond the critical angle (R = 1)");
    double beta = event.beta();
    double gamma = std::sqrt(gamma_sq);
    double n0 = event.ior_in, n1 = event.ior_out;
    FresnelSplit split;
    double rp = (n1 * beta - n0 * gamma) / (n1 * beta + n0 * gamma);
    double rs = (n0 * beta - n1 * gamma) / (n0 * beta + n1 * gamma);
    split.r_parallel = rp * rp;
    split.r_perpendicular = rs * rs;
    split.r = 0.5 * (split.r_parallel + split.r_perpendicular);
    return split;
}

Scene::Scene(TriMesh mesh, MediumMap media)
    : mesh_(std::move(mesh)), media_(std::move(media)) {
    mesh_.validate();
    media_.validate();
    accel_ = std::make_unique<Accel>(mesh_);
}

PiecewisePath straight_path(const Vec3& origin, const Vec3& direction) {
    PiecewisePath path;
    path.points = {origin};
    path.directions = {normalize(direction)};
    path.cumulative = {0.0};
    path.segment_medium = {kAmbientMedium};
    return path;
}

namespace {

/// Containment chain at x, outermost first (probe ray crosses the
/// innermost boundary soonest).
std::vector<int> medium_stack_at(const Scene& scene, const Vec3& x) {
    std::vector<int> stack = {kAmbientMedium};
    int inner = scene.medium_at(x);
    if (inner == kAmbientMedium) return stack;

    // Collect every odd-parity region and order by first-crossing distance.
    Vec3 probe = normalize(Vec3{0.5377397195426784, 0.7830902235404664, 0.3121442402463274});
    std::vector<SurfaceHit> hits;
    scene.accel().all_hits(x, probe, 0.0, hits);
    std::vector<std::pair<double, int>> first_t;  // (first crossing, region)
    std::vector<std::pair<int, int>> parity;      // (region, count)
    for (const SurfaceHit& h : hits) {
        auto it = std::find_if(parity.begin(), parity.end(),
                               [&](const auto& p) { return p.first == h.region; });
        if (it == parity.end()) {
            parity.emplace_back(h.region, 1);
            first_t.emplace_back(h.t, h.region);
        } else {
            it->second += 1;
            auto ft = std::find_if(first_t.begin(), first_t.end(),
                                   [&](const auto& p) { return p.second == h.region; });
            ft->first = std::min(ft->first, h.t);
        }
    }
    std::sort(first_t.begin(), first_t.end(), std::greater<>());  // outermost first
    for (const auto& [t, region] : first_t) {
        auto it = std::find_if(parity.begin(), parity.end(),
                               [&](const auto& p) { return p.first == region; });
        if (it->second % 2 == 1) stack.push_back(region);
    }
    return stack;
}

}  // namespace

PiecewisePath trace_refraction_path(const Scene& scene, const Vec3& origin,
                                    const Vec3& direction, const TraceOptions& options) {
    check_unit(direction, "ray direction");

    PiecewisePath path = straight_path(origin, direction);
    std::vector<int> stack = medium_stack_at(scene, origin);
    path.segment_medium = {stack.back()};

    Vec3 p = origin;
    Vec3 d = path.directions[0];

    while (path.bend_count() < options.max_bends) {
        auto hit = scene.accel().intersect(p, d, 0.0);
        if (!hit) break;

        if (!path.first_hit_valid) {
            path.first_hit_valid = true;
            path.first_hit = *hit;
        }

        double cos_in = std::abs(dot(d, hit->normal));
        bool grazing = cos_in < kGrazingThreshold;

        int medium_in = stack.back();
        int medium_out;
        bool pops = !hit->entering && stack.size() > 1 && stack.back() == hit->region;
        if (pops) {
            medium_out = stack[stack.size() - 2];
        } else if (hit->entering) {
            medium_out = hit->region;
        } else {
            // Exit of a region we never entered (degenerate overlap): skip.
            grazing = true;
            medium_out = medium_in;
        }

        if (grazing) {
            // No interface change; step past the surface, segment continues.
            p = hit->position + d * kSurfaceEpsilon;
            continue;
        }

        InterfaceEvent event;
        event.position = hit->position;
        event.incoming_dir = d;
        event.normal = hit->normal;
        event.ior_in = scene.media().at(medium_in).ior;
        event.ior_out = scene.media().at(medium_out).ior;

        auto [next_dir, kind] = refract_or_tir(event);

        if (path.bend_count() == 0) {
            // Fresnel split of the first surface event (Eq. 6 uses only it).
            path.first_surface_reflectance =
                kind == EventKind::TotalInternalReflection ? 1.0 : fresnel(event).r;
        }

        if (kind == EventKind::TotalInternalReflection && !options.enable_tir) {
            // Ablated TIR: pass straight through as if transmitted.
            next_dir = d;
            kind = EventKind::Refraction;
        }

        if (kind == EventKind::Refraction) {
            if (pops)
                stack.pop_back();
            else
                stack.push_back(hit->region);
        }
        // TIR keeps the medium stack unchanged.

        // Cumulative distance is the running sum of vertex gaps.
        double tau = path.cumulative.back() + length(hit->position - path.points.back());
        path.points.push_back(hit->position);
        path.directions.push_back(next_dir);
        path.cumulative.push_back(tau);
        path.segment_medium.push_back(stack.back());
        path.events.push_back(kind);

        p = hit->position + next_dir * kSurfaceEpsilon;
        d = next_dir;
    }

    return path;
}

PiecewisePath trace_reflection_path(const Scene& scene, const Vec3& origin,
                                    const Vec3& direction) {
    check_unit(direction, "ray direction");

    auto hit = scene.accel().intersect(origin, direction, 0.0);
    if (!hit) return straight_path(origin, direction);

    Vec3 d0 = normalize(direction);
    Vec3 d1 = d0 - hit->normal * (2.0 * dot(d0, hit->normal));
    d1 = normalize(d1);

    PiecewisePath path;
    path.points = {origin, hit->position};
    path.directions = {d0, d1};
    path.cumulative = {0.0, hit->t};
    // The reflected segment is not re-refracted; treat it as ambient.
    path.segment_medium = {kAmbientMedium, kAmbientMedium};
    path.events = {EventKind::Refraction};
    path.first_hit_valid = true;
    path.first_hit = *hit;

    int medium_in = medium_stack_at(scene, origin).back();
    int medium_out = hit->entering ? hit->region : kAmbientMedium;
    InterfaceEvent event;
    event.position = hit->position;
    event.incoming_dir = d0;
    event.normal = hit->normal;
    event.ior_in = scene.media().at(medium_in).ior;
    event.ior_out = scene.media().at(medium_out).ior;
    path.first_surface_reflectance =
        event.gamma_squared() < 0.0 ? 1.0 : fresnel(event).r;
    return path;
}

}  // namespace refref
