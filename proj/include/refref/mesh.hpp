#pragma once

#include <optional>
#include <string>
#include <vector>

#include "refref/math.hpp"

namespace refref {

constexpr int kAmbientMedium = 0;

struct Triangle {
    int v0 = 0, v1 = 0, v2 = 0;
    int region = 1;  // medium id of the enclosed volume
};

/// Watertight labeled triangle mesh. Winding is counter-clockwise seen
/// from outside the labeled region, so the geometric normal points out.
struct TriMesh {
    std::vector<Vec3> vertices;
    std::vector<Vec3> normals;  // per-vertex, unit length
    std::vector<Triangle> triangles;

    Vec3 triangle_geometric_normal(int tri) const;

    /// Area-weighted per-vertex normals from incident faces.
    void recompute_normals();

    /// Checks index ranges, normal lengths and per-region closedness
    /// (every region edge shared by exactly two of its triangles, with
    /// vertices matched by position so split seams still count).
    /// Throws std::runtime_error on violation.
    void validate() const;

    void bounds(Vec3& lo, Vec3& hi) const;
};

struct Medium {
    double ior = 1.0;       // refractive index, >= 1
    Vec3 absorption{0, 0, 0};  // per-channel, 1/scene-unit
};

/// Medium id -> optical properties. Id 0 is the ambient medium (ior 1).
struct MediumMap {
    std::vector<Medium> media;

    MediumMap() { media.push_back(Medium{}); }

    int add(double ior, const Vec3& absorption = {0, 0, 0});
    const Medium& at(int id) const;
    void validate() const;
};

struct SurfaceHit {
    double t = 0;
    Vec3 position;
    Vec3 normal;        // interpolated, unit, oriented so dot(dir, normal) < 0
    int triangle = -1;
    int region = kAmbientMedium;  // label of the surface's enclosed volume
    bool entering = false;        // ray crosses from outside the region inward
    int medium_near = kAmbientMedium;  // incoming side (tracer refines via its stack)
    int medium_far = kAmbientMedium;   // far side
};

// --- primitive generators (make_primitive dispatch lives in the CLI layer) ---

TriMesh make_icosphere(double radius, int subdivisions, int region = 1,
                       const Vec3& center = {0, 0, 0});
TriMesh make_box(double sx, double sy, double sz, int region = 1,
                 const Vec3& center = {0, 0, 0});
TriMesh make_cylinder(double radius, double height, int segments, int region = 1);
TriMesh make_torus(double major_radius, double minor_radius, int segments_major,
                   int segments_minor, int region = 1);
/// Two concentric spheres with distinct medium ids (region, region + 1).
TriMesh make_nested_spheres(double outer_radius, double inner_radius, int subdivisions,
                            int region = 1);

/// Moves each vertex toward its one-ring centroid by `factor`, repeated.
/// Vertices are clustered by position so seam-split meshes stay watertight.
/// Topology and region labels are unchanged; normals are recomputed.
TriMesh laplacian_smooth(const TriMesh& mesh, double factor, int iterations);

/// Deterministic per-vertex jitter, used to degrade geometry for the
/// proxy-mesh training mode.
TriMesh jitter_vertices(const TriMesh& mesh, double sigma, uint64_t seed);

// ASCII OBJ with one `o medium_<id>` group per region label.
void write_obj(const TriMesh& mesh, const std::string& path);
TriMesh read_obj(const std::string& path);

void write_medium_map(const MediumMap& map, const std::string& path);
MediumMap read_medium_map(const std::string& path);

}  // namespace refref
