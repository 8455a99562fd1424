#pragma once

#include <memory>
#include <optional>
#include <vector>

#include "refref/mesh.hpp"

namespace refref {

/// Bounding-volume hierarchy over a TriMesh. Immutable after construction;
/// all queries are const and thread-safe.
class Accel {
public:
    /// Throws on an empty mesh.
    explicit Accel(const TriMesh& mesh);

    /// Nearest hit with t > t_min, or nullopt. The returned normal is the
    /// barycentric interpolation of vertex normals, re-normalized and
    /// oriented against the ray direction.
    std::optional<SurfaceHit> intersect(const Vec3& origin, const Vec3& direction,
                                        double t_min = 0.0) const;

    /// All hits with t > t_min, unsorted. Used for parity queries.
    void all_hits(const Vec3& origin, const Vec3& direction, double t_min,
                  std::vector<SurfaceHit>& out) const;

    const TriMesh& mesh() const { return *mesh_; }

private:
    struct Node {
        Vec3 lo, hi;
        int left = -1;        // internal: left child index; leaf: first triangle
        int right_child = -1; // internal only
        int count = 0;        // leaf triangle count, 0 for internal nodes
    };

    int build_node(std::vector<int>& tris, int begin, int end,
                   const std::vector<Vec3>& centroids);
    bool intersect_triangle(int tri, const Vec3& o, const Vec3& d, double t_min,
                            double t_max, double& t, double& u, double& v) const;
    SurfaceHit make_hit(int tri, const Vec3& o, const Vec3& d, double t, double u,
                        double v) const;

    const TriMesh* mesh_;
    std::vector<Node> nodes_;
    std::vector<int> order_;  // triangle indices, leaf-contiguous
};

/// Innermost medium containing x, via crossing parity along a probe ray.
/// Among odd-parity regions, the one whose boundary is crossed first is
/// the innermost for nested geometry. Returns the ambient id when outside
/// every region.
int medium_at(const Accel& accel, const MediumMap& map, const Vec3& x);

}  // namespace refref
