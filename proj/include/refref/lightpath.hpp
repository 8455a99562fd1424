#pragma once

#include <memory>
#include <utility>
#include <vector>

#include "refref/bvh.hpp"
#include "refref/mesh.hpp"

namespace refref {

/// After any interface event, rays restart at hit + eps * direction.
constexpr double kSurfaceEpsilon = 1e-4;
/// |d.n| below this is a grazing hit: no interface change is applied.
constexpr double kGrazingThreshold = 1e-7;

constexpr int kDefaultMaxBends = 10;

enum class EventKind { Refraction, TotalInternalReflection };

/// One dielectric interface crossing, with the scalars of the vector
/// Snell construction.
struct InterfaceEvent {
    Vec3 position;
    Vec3 incoming_dir;  // unit
    Vec3 normal;        // unit, oriented against incoming_dir
    double ior_in = 1.0;
    double ior_out = 1.0;

    double alpha() const { return ior_in / ior_out; }
    double beta() const { return -dot(incoming_dir, normal); }
    double gamma_squared() const {
        double a = alpha(), b = beta();
        return 1.0 - a * a * (1.0 - b * b);
    }
};

struct FresnelSplit {
    double r_parallel = 0;
    double r_perpendicular = 0;
    double r = 0;  // unpolarized mean
};

/// Piecewise-linear light path: K+1 vertices and directions, cumulative
/// arc distances (the segment past the last vertex extends to infinity).
struct PiecewisePath {
    std::vector<Vec3> points;        // p_0..p_K
    std::vector<Vec3> directions;    // d_0..d_K
    std::vector<double> cumulative;  // tau_0..tau_K
    std::vector<int> segment_medium; // medium id of segment i = [p_i, p_{i+1})
    std::vector<EventKind> events;   // kinds at p_1..p_K
    double first_surface_reflectance = 0;  // R; 0 when the ray misses, 1 on first-hit TIR
    bool first_hit_valid = false;
    SurfaceHit first_hit;  // set when the primary ray hits geometry

    int bend_count() const { return static_cast<int>(points.size()) - 1; }

    /// Segment index containing arc distance t (half-open [tau_i, tau_{i+1})).
    int segment_index(double t) const;
    /// r(t) and the direction of its segment.
    std::pair<Vec3, Vec3> point_at(double t) const;
};

/// Snell refraction, or the law of reflection when the transmitted ray
/// does not exist. The returned direction is unit length.
std::pair<Vec3, EventKind> refract_or_tir(const InterfaceEvent& event);

/// Unpolarized Fresnel reflectance at an interface below the critical
/// angle. Throws if the event is in the total-internal-reflection regime.
FresnelSplit fresnel(const InterfaceEvent& event);

/// Immutable traced scene: labeled geometry plus media.
class Scene {
public:
    Scene(TriMesh mesh, MediumMap media);

    const TriMesh& mesh() const { return mesh_; }
    const MediumMap& media() const { return media_; }
    const Accel& accel() const { return *accel_; }

    int medium_at(const Vec3& x) const { return refref::medium_at(*accel_, media_, x); }

private:
    TriMesh mesh_;
    MediumMap media_;
    std::unique_ptr<Accel> accel_;
};

struct TraceOptions {
    int max_bends = kDefaultMaxBends;
    bool enable_tir = true;  // ablation: off = transmit straight through at TIR events
};

/// Multi-bend refraction path through the scene's dielectrics.
PiecewisePath trace_refraction_path(const Scene& scene, const Vec3& origin,
                                    const Vec3& direction,
                                    const TraceOptions& options = {});

/// Single explicit reflection at the first surface; the reflected segment
/// is not traced further.
PiecewisePath trace_reflection_path(const Scene& scene, const Vec3& origin,
                                    const Vec3& direction);

/// Straight path (no interaction with geometry); R = 0.
PiecewisePath straight_path(const Vec3& origin, const Vec3& direction);

}  // namespace refref
