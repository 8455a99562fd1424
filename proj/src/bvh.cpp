#include "refref/bvh.hpp"

#include <algorithm>
#include <map>
#include <stdexcept>

namespace refref {

namespace {

struct Aabb {
    Vec3 lo{kInf, kInf, kInf};
    Vec3 hi{-kInf, -kInf, -kInf};
    void grow(const Vec3& p) {
        lo = min(lo, p);
        hi = max(hi, p);
    }
};

bool slab_test(const Vec3& lo, const Vec3& hi, const Vec3& o, const Vec3& inv_d,
               double t_max) {
    double t0 = 0.0, t1 = t_max;
    for (int a = 0; a < 3; ++a) {
        double ta = (lo[a] - o[a]) * inv_d[a];
        double tb = (hi[a] - o[a]) * inv_d[a];
        if (ta > tb) std::swap(ta, tb);
        t0 = std::max(t0, ta);
        t1 = std::min(t1, tb);
        if (t0 > t1) return false;
    }
    return true;
}

}  // namespace

Accel::Accel(const TriMesh& mesh) : mesh_(&mesh) {
    if (mesh.triangles.empty()) throw std::runtime_error("empty mesh");
    int n = static_cast<int>(mesh.triangles.size());
    order_.resize(n);
    std::vector<Vec3> centroids(n);
    for (int i = 0; i < n; ++i) {
        order_[i] = i;
        const Triangle& t = mesh.triangles[i];
        centroids[i] =
            (mesh.vertices[t.v0] + mesh.vertices[t.v1] + mesh.vertices[t.v2]) / 3.0;
    }
    nodes_.reserve(2 * n);
    build_node(order_, 0, n, centroids);
}

int Accel::build_node(std::vector<int>& tris, int begin, int end,
                      const std::vector<Vec3>& centroids) {
    Aabb box;
    for (int i = begin; i < end; ++i) {
        const Triangle& t = mesh_->triangles[tris[i]];
        box.grow(mesh_->vertices[t.v0]);
        box.grow(mesh_->vertices[t.v1]);
        box.grow(mesh_->vertices[t.v2]);
    }
    int node_index = static_cast<int>(nodes_.size());
    Node node;
    node.lo = box.lo;
    node.hi = box.hi;
    node.left = begin;
    node.count = end - begin;
    nodes_.push_back(node);

    const int leaf_size = 4;
    if (end - begin <= leaf_size) return node_index;

    // Split at the centroid median along the widest axis.
    Vec3 extent = box.hi - box.lo;
    int axis = 0;
    if (extent.y > extent[axis]) axis = 1;
    if (extent.z > extent[axis]) axis = 2;
    int mid = (begin + end) / 2;
    std::nth_element(tris.begin() + begin, tris.begin() + mid, tris.begin() + end,
                     [&](int a, int b) { return centroids[a][axis] < centroids[b][axis]; });

    int left = build_node(tris, begin, mid, centroids);
    int right = build_node(tris, mid, end, centroids);
    nodes_[node_index].left = left;
    nodes_[node_index].right_child = right;
    nodes_[node_index].count = 0;
    return node_index;
}

bool Accel::intersect_triangle(int tri, const Vec3& o, const Vec3& d, double t_min,
                               double t_max, double& t, double& u, double& v) const {
    const Triangle& f = mesh_->triangles[tri];
    const Vec3& p0 = mesh_->vertices[f.v0];
    Vec3 e1 = mesh_->vertices[f.v1] - p0;
    Vec3 e2 = mesh_->vertices[f.v2] - p0;
    Vec3 pvec = cross(d, e2);
    double det = dot(e1, pvec);
    if (std::abs(det) < 1e-16) return false;
    double inv_det = 1.0 / det;
    Vec3 tvec = o - p0;
    u = dot(tvec, pvec) * inv_det;
    if (u < 0.0 || u > 1.0) return false;
    Vec3 qvec = cross(tvec, e1);
    v = dot(d, qvec) * inv_det;
    if (v < 0.0 || u + v > 1.0) return false;
    t = dot(e2, qvec) * inv_det;
    return t > t_min && t < t_max;
}

SurfaceHit Accel::make_hit(int tri, const Vec3& o, const Vec3& d, double t, double u,
                           double v) const {
    const Triangle& f = mesh_->triangles[tri];
    SurfaceHit hit;
    hit.t = t;
    hit.position = o + d * t;
    hit.triangle = tri;
    hit.region = f.region;
    Vec3 n = mesh_->normals[f.v0] * (1.0 - u - v) + mesh_->normals[f.v1] * u +
             mesh_->normals[f.v2] * v;
    double len = length(n);
    n = len > 1e-20 ? n / len : mesh_->triangle_geometric_normal(tri);
    hit.entering = dot(d, mesh_->triangle_geometric_normal(tri)) < 0.0;
    if (dot(d, n) > 0.0) n = -n;
    hit.normal = n;
    hit.medium_near = hit.entering ? kAmbientMedium : f.region;
    hit.medium_far = hit.entering ? f.region : kAmbientMedium;
    return hit;
}

std::optional<SurfaceHit> Accel::intersect(const Vec3& origin, const Vec3& direction,
                                           double t_min) const {
    Vec3 inv_d{1.0 / direction.x, 1.0 / direction.y, 1.0 / direction.z};
    double best_t = kInf, best_u = 0, best_v = 0;
    int best_tri = -1;

    int stack[64];
    int sp = 0;
    stack[sp++] = 0;
    while (sp > 0) {
        const Node& node = nodes_[stack[--sp]];
        if (!slab_test(node.lo, node.hi, origin, inv_d, best_t)) continue;
        if (node.count > 0) {
            for (int i = node.left; i < node.left + node.count; ++i) {
                double t, u, v;
                if (intersect_triangle(order_[i], origin, direction, t_min, best_t, t, u,
                                       v)) {
                    best_t = t;
                    best_u = u;
                    best_v = v;
                    best_tri = order_[i];
                }
            }
        } else {
            stack[sp++] = node.left;
            stack[sp++] = node.right_child;
        }
    }
    if (best_tri < 0) return std::nullopt;
    return make_hit(best_tri, origin, direction, best_t, best_u, best_v);
}

void Accel::all_hits(const Vec3& origin, const Vec3& direction, double t_min,
                     std::vector<SurfaceHit>& out) const {
    out.clear();
    Vec3 inv_d{1.0 / direction.x, 1.0 / direction.y, 1.0 / direction.z};
    int stack[64];
    int sp = 0;
    stack[sp++] = 0;
    while (sp > 0) {
        const Node& node = nodes_[stack[--sp]];
        if (!slab_test(node.lo, node.hi, origin, inv_d, kInf)) continue;
        if (node.count > 0) {
            for (int i = node.left; i < node.left + node.count; ++i) {
                double t, u, v;
                if (intersect_triangle(order_[i], origin, direction, t_min, kInf, t, u, v))
                    out.push_back(make_hit(order_[i], origin, direction, t, u, v));
            }
        } else {
            stack[sp++] = node.left;
            stack[sp++] = node.right_child;
        }
    }
}

int medium_at(const Accel& accel, const MediumMap& map, const Vec3& x) {
    // Probe direction chosen away from axis/edge alignments.
    Vec3 d = normalize(Vec3{0.5377397195426784, 0.7830902235404664, 0.3121442402463274});
    std::vector<SurfaceHit> hits;
    accel.all_hits(x, d, 0.0, hits);

    std::map<int, std::pair<int, double>> per_region;  // region -> (count, first t)
    for (const SurfaceHit& h : hits) {
        auto [it, inserted] = per_region.emplace(h.region, std::make_pair(0, h.t));
        it->second.first += 1;
        it->second.second = std::min(it->second.second, h.t);
    }
    int best = kAmbientMedium;
    double best_t = kInf;
    for (const auto& [region, info] : per_region) {
        if (info.first % 2 == 1 && info.second < best_t) {
            best = region;
            best_t = info.second;
        }
    }
    (void)map;
    return best;
}

}  // namespace refref
