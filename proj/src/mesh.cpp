#include "refref/mesh.hpp"

#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <unordered_map>

#include "refref/rng.hpp"

namespace refref {

namespace {

// Quantized position key so seam-split vertices cluster together.
struct PosKey {
    int64_t x, y, z;
    bool operator==(const PosKey& o) const { return x == o.x && y == o.y && z == o.z; }
};
struct PosKeyHash {
    size_t operator()(const PosKey& k) const {
        uint64_t h = static_cast<uint64_t>(k.x) * 0x9e3779b97f4a7c15ull;
        h ^= static_cast<uint64_t>(k.y) * 0xbf58476d1ce4e5b9ull;
        h ^= static_cast<uint64_t>(k.z) * 0x94d049bb133111ebull;
        return static_cast<size_t>(h ^ (h >> 29));
    }
};

PosKey quantize(const Vec3& p) {
    const double scale = 1.0 / 1e-9;
    return {static_cast<int64_t>(std::llround(p.x * scale)),
            static_cast<int64_t>(std::llround(p.y * scale)),
            static_cast<int64_t>(std::llround(p.z * scale))};
}

/// Maps each vertex to a cluster id shared by all vertices at the same position.
std::vector<int> position_clusters(const TriMesh& mesh, int* n_clusters) {
    std::unordered_map<PosKey, int, PosKeyHash> ids;
    std::vector<int> cluster(mesh.vertices.size());
    for (size_t i = 0; i < mesh.vertices.size(); ++i) {
        auto key = quantize(mesh.vertices[i]);
        auto [it, inserted] = ids.emplace(key, static_cast<int>(ids.size()));
        cluster[i] = it->second;
    }
    *n_clusters = static_cast<int>(ids.size());
    return cluster;
}

}  // namespace

Vec3 TriMesh::triangle_geometric_normal(int tri) const {
    const Triangle& t = triangles[tri];
    Vec3 n = cross(vertices[t.v1] - vertices[t.v0], vertices[t.v2] - vertices[t.v0]);
    double len = length(n);
    return len > 0 ? n / len : Vec3{0, 0, 1};
}

void TriMesh::recompute_normals() {
    normals.assign(vertices.size(), Vec3{0, 0, 0});
    for (size_t i = 0; i < triangles.size(); ++i) {
        const Triangle& t = triangles[i];
        // Cross product magnitude carries the area weighting.
        Vec3 n = cross(vertices[t.v1] - vertices[t.v0], vertices[t.v2] - vertices[t.v0]);
        normals[t.v0] += n;
        normals[t.v1] += n;
        normals[t.v2] += n;
    }
    for (auto& n : normals) {
        double len = length(n);
        n = len > 1e-20 ? n / len : Vec3{0, 0, 1};
    }
}

void TriMesh::validate() const {
    if (triangles.empty()) throw std::runtime_error("empty mesh");
    if (normals.size() != vertices.size())
        throw std::runtime_error("mesh normals/vertices size mismatch");
    int nv = static_cast<int>(vertices.size());
    for (const Triangle& t : triangles) {
        if (t.v0 < 0 || t.v0 >= nv || t.v1 < 0 || t.v1 >= nv || t.v2 < 0 || t.v2 >= nv)
            throw std::runtime_error("triangle index out of range");
    }
    for (const Vec3& n : normals) {
        if (std::abs(length(n) - 1.0) > 1e-6)
            throw std::runtime_error("vertex normal not unit length");
    }

    // Closedness per region: each edge (by position cluster) must be used
    // exactly twice, once in each direction.
    int n_clusters = 0;
    std::vector<int> cluster = position_clusters(*this, &n_clusters);
    std::map<std::tuple<int, int, int>, int> edge_count;  // (region, lo, hi) -> signed count
    for (const Triangle& t : triangles) {
        int c[3] = {cluster[t.v0], cluster[t.v1], cluster[t.v2]};
        for (int e = 0; e < 3; ++e) {
            int a = c[e], b = c[(e + 1) % 3];
            if (a == b) throw std::runtime_error("degenerate triangle edge");
            int lo = std::min(a, b), hi = std::max(a, b);
            edge_count[{t.region, lo, hi}] += (a < b) ? 1 : -1;
        }
    }
    for (const auto& [key, count] : edge_count) {
        if (count != 0)
            throw std::runtime_error("region " + std::to_string(std::get<0>(key)) +
                                     " is not closed");
    }
}

void TriMesh::bounds(Vec3& lo, Vec3& hi) const {
    lo = Vec3{kInf, kInf, kInf};
    hi = -lo;
    for (const Vec3& v : vertices) {
        lo = min(lo, v);
        hi = max(hi, v);
    }
}

int MediumMap::add(double ior, const Vec3& absorption) {
    if (ior < 1.0) throw std::runtime_error("refractive index must be >= 1");
    if (absorption.x < 0 || absorption.y < 0 || absorption.z < 0)
        throw std::runtime_error("absorption must be >= 0");
    media.push_back(Medium{ior, absorption});
    return static_cast<int>(media.size()) - 1;
}

const Medium& MediumMap::at(int id) const {
    if (id < 0 || id >= static_cast<int>(media.size()))
        throw std::runtime_error("unknown medium id " + std::to_string(id));
    return media[id];
}

void MediumMap::validate() const {
    if (media.empty() || media[0].ior != 1.0)
        throw std::runtime_error("ambient medium (id 0, ior 1) missing");
    for (const Medium& m : media) {
        if (m.ior < 1.0) throw std::runtime_error("refractive index must be >= 1");
        if (m.absorption.x < 0 || m.absorption.y < 0 || m.absorption.z < 0)
            throw std::runtime_error("absorption must be >= 0");
    }
}

// --- primitives -------------------------------------------------------------

TriMesh make_icosphere(double radius, int subdivisions, int region, const Vec3& center) {
    if (radius <= 0) throw std::runtime_error("non-positive radius");
    if (subdivisions < 0) throw std::runtime_error("negative subdivision level");

    const double phi = (1.0 + std::sqrt(5.0)) / 2.0;
    std::vector<Vec3> verts = {
        {-1, phi, 0}, {1, phi, 0}, {-1, -phi, 0}, {1, -phi, 0},
        {0, -1, phi}, {0, 1, phi}, {0, -1, -phi}, {0, 1, -phi},
        {phi, 0, -1}, {phi, 0, 1}, {-phi, 0, -1}, {-phi, 0, 1}};
    for (auto& v : verts) v = normalize(v);
    std::vector<std::array<int, 3>> faces = {
        {0, 11, 5}, {0, 5, 1}, {0, 1, 7}, {0, 7, 10}, {0, 10, 11},
        {1, 5, 9}, {5, 11, 4}, {11, 10, 2}, {10, 7, 6}, {7, 1, 8},
        {3, 9, 4}, {3, 4, 2}, {3, 2, 6}, {3, 6, 8}, {3, 8, 9},
        {4, 9, 5}, {2, 4, 11}, {6, 2, 10}, {8, 6, 7}, {9, 8, 1}};

    for (int s = 0; s < subdivisions; ++s) {
        std::map<std::pair<int, int>, int> midpoint;
        auto mid = [&](int a, int b) {
            auto key = std::minmax(a, b);
            auto it = midpoint.find(key);
            if (it != midpoint.end()) return it->second;
            verts.push_back(normalize((verts[a] + verts[b]) * 0.5));
            int idx = static_cast<int>(verts.size()) - 1;
            midpoint[key] = idx;
            return idx;
        };
        std::vector<std::array<int, 3>> next;
        next.reserve(faces.size() * 4);
        for (auto [a, b, c] : faces) {
            int ab = mid(a, b), bc = mid(b, c), ca = mid(c, a);
            next.push_back({a, ab, ca});
            next.push_back({b, bc, ab});
            next.push_back({c, ca, bc});
            next.push_back({ab, bc, ca});
        }
        faces = std::move(next);
    }

    TriMesh mesh;
    mesh.vertices.reserve(verts.size());
    mesh.normals.reserve(verts.size());
    for (const Vec3& v : verts) {
        mesh.vertices.push_back(v * radius + center);
        mesh.normals.push_back(v);
    }
    mesh.triangles.reserve(faces.size());
    for (auto [a, b, c] : faces) mesh.triangles.push_back({a, b, c, region});
    return mesh;
}

TriMesh make_box(double sx, double sy, double sz, int region, const Vec3& center) {
    if (sx <= 0 || sy <= 0 || sz <= 0) throw std::runtime_error("non-positive dimension");
    TriMesh mesh;
    Vec3 h{sx / 2, sy / 2, sz / 2};
    // Per-face vertices (duplicated at corners) so face normals stay flat.
    struct Face {
        Vec3 n, u, v;
    };
    const Face faces[6] = {
        {{1, 0, 0}, {0, 1, 0}, {0, 0, 1}},   {{-1, 0, 0}, {0, 0, 1}, {0, 1, 0}},
        {{0, 1, 0}, {0, 0, 1}, {1, 0, 0}},   {{0, -1, 0}, {1, 0, 0}, {0, 0, 1}},
        {{0, 0, 1}, {1, 0, 0}, {0, 1, 0}},   {{0, 0, -1}, {0, 1, 0}, {1, 0, 0}}};
    for (const Face& f : faces) {
        int base = static_cast<int>(mesh.vertices.size());
        Vec3 c = f.n * h;
        Vec3 u = f.u * h, v = f.v * h;
        mesh.vertices.push_back(c - u - v + center);
        mesh.vertices.push_back(c + u - v + center);
        mesh.vertices.push_back(c + u + v + center);
        mesh.vertices.push_back(c - u + v + center);
        for (int k = 0; k < 4; ++k) mesh.normals.push_back(f.n);
        mesh.triangles.push_back({base, base + 1, base + 2, region});
        mesh.triangles.push_back({base, base + 2, base + 3, region});
    }
    return mesh;
}

TriMesh make_cylinder(double radius, double height, int segments, int region) {
    if (radius <= 0 || height <= 0) throw std::runtime_error("non-positive dimension");
    if (segments < 3) throw std::runtime_error("cylinder needs >= 3 segments");
    TriMesh mesh;
    double hz = height / 2;
    // Side ring (radial normals).
    for (int i = 0; i < segments; ++i) {
        double a = 2 * kPi * i / segments;
        Vec3 n{std::cos(a), std::sin(a), 0};
        mesh.vertices.push_back({radius * n.x, radius * n.y, -hz});
        mesh.normals.push_back(n);
        mesh.vertices.push_back({radius * n.x, radius * n.y, hz});
        mesh.normals.push_back(n);
    }
    for (int i = 0; i < segments; ++i) {
        int j = (i + 1) % segments;
        int b0 = 2 * i, t0 = 2 * i + 1, b1 = 2 * j, t1 = 2 * j + 1;
        mesh.triangles.push_back({b0, b1, t1, region});
        mesh.triangles.push_back({b0, t1, t0, region});
    }
    // Caps (axial normals, duplicated rim vertices).
    for (int cap = 0; cap < 2; ++cap) {
        double z = cap == 0 ? -hz : hz;
        Vec3 n{0, 0, cap == 0 ? -1.0 : 1.0};
        int center = static_cast<int>(mesh.vertices.size());
        mesh.vertices.push_back({0, 0, z});
        mesh.normals.push_back(n);
        int ring = static_cast<int>(mesh.vertices.size());
        for (int i = 0; i < segments; ++i) {
            double a = 2 * kPi * i / segments;
            mesh.vertices.push_back({radius * std::cos(a), radius * std::sin(a), z});
            mesh.normals.push_back(n);
        }
        for (int i = 0; i < segments; ++i) {
            int j = (i + 1) % segments;
            if (cap == 0)
                mesh.triangles.push_back({center, ring + j, ring + i, region});
            else
                mesh.triangles.push_back({center, ring + i, ring + j, region});
        }
    }
    return mesh;
}

TriMesh make_torus(double major_radius, double minor_radius, int segments_major,
                   int segments_minor, int region) {
    if (major_radius <= 0 || minor_radius <= 0) throw std::runtime_error("non-positive dimension");
    if (segments_major < 3 || segments_minor < 3) throw std::runtime_error("too few segments");
    TriMesh mesh;
    for (int i = 0; i < segments_major; ++i) {
        double u = 2 * kPi * i / segments_major;
        Vec3 ring_dir{std::cos(u), std::sin(u), 0};
        for (int j = 0; j < segments_minor; ++j) {
            double v = 2 * kPi * j / segments_minor;
            Vec3 n = ring_dir * std::cos(v) + Vec3{0, 0, 1} * std::sin(v);
            mesh.vertices.push_back(ring_dir * major_radius + n * minor_radius);
            mesh.normals.push_back(n);
        }
    }
    auto idx = [&](int i, int j) {
        return (i % segments_major) * segments_minor + (j % segments_minor);
    };
    for (int i = 0; i < segments_major; ++i) {
        for (int j = 0; j < segments_minor; ++j) {
            int a = idx(i, j), b = idx(i + 1, j), c = idx(i + 1, j + 1), d = idx(i, j + 1);
            mesh.triangles.push_back({a, b, c, region});
            mesh.triangles.push_back({a, c, d, region});
        }
    }
    return mesh;
}

TriMesh make_nested_spheres(double outer_radius, double inner_radius, int subdivisions,
                            int region) {
    if (inner_radius <= 0 || outer_radius <= inner_radius)
        throw std::runtime_error("nested spheres need 0 < inner < outer");
    TriMesh mesh = make_icosphere(outer_radius, subdivisions, region);
    TriMesh inner = make_icosphere(inner_radius, subdivisions, region + 1);
    int base = static_cast<int>(mesh.vertices.size());
    mesh.vertices.insert(mesh.vertices.end(), inner.vertices.begin(), inner.vertices.end());
    mesh.normals.insert(mesh.normals.end(), inner.normals.begin(), inner.normals.end());
    for (Triangle t : inner.triangles) {
        t.v0 += base;
        t.v1 += base;
        t.v2 += base;
        mesh.triangles.push_back(t);
    }
    return mesh;
}

TriMesh laplacian_smooth(const TriMesh& mesh, double factor, int iterations) {
    if (factor < 0 || factor > 1) throw std::runtime_error("smoothing factor must be in [0,1]");
    if (iterations < 0) throw std::runtime_error("negative iteration count");

    int n_clusters = 0;
    std::vector<int> cluster = position_clusters(mesh, &n_clusters);

    // One-ring adjacency over position clusters (deduplicated).
    std::vector<std::vector<int>> ring(n_clusters);
    auto link = [&](int a, int b) {
        auto& r = ring[a];
        if (std::find(r.begin(), r.end(), b) == r.end()) r.push_back(b);
    };
    for (const Triangle& t : mesh.triangles) {
        int c[3] = {cluster[t.v0], cluster[t.v1], cluster[t.v2]};
        for (int e = 0; e < 3; ++e) {
            link(c[e], c[(e + 1) % 3]);
            link(c[(e + 1) % 3], c[e]);
        }
    }

    std::vector<Vec3> pos(n_clusters);
    for (size_t i = 0; i < mesh.vertices.size(); ++i) pos[cluster[i]] = mesh.vertices[i];

    std::vector<Vec3> next(n_clusters);
    for (int it = 0; it < iterations; ++it) {
        for (int c = 0; c < n_clusters; ++c) {
            if (ring[c].empty()) {
                next[c] = pos[c];
                continue;
            }
            Vec3 centroid{0, 0, 0};
            for (int nb : ring[c]) centroid += pos[nb];
            centroid = centroid / static_cast<double>(ring[c].size());
            next[c] = pos[c] + (centroid - pos[c]) * factor;
        }
        pos.swap(next);
    }

    TriMesh out = mesh;
    for (size_t i = 0; i < out.vertices.size(); ++i) out.vertices[i] = pos[cluster[i]];
    if (iterations > 0) out.recompute_normals();
    return out;
}

TriMesh jitter_vertices(const TriMesh& mesh, double sigma, uint64_t seed) {
    int n_clusters = 0;
    std::vector<int> cluster = position_clusters(mesh, &n_clusters);
    std::vector<Vec3> offset(n_clusters);
    for (int c = 0; c < n_clusters; ++c) {
        Rng rng(seed, static_cast<uint64_t>(c) + 1);
        // Box-Muller pairs.
        auto gauss = [&rng]() {
            double u1 = std::max(rng.next_double(), 1e-12);
            double u2 = rng.next_double();
            return std::sqrt(-2.0 * std::log(u1)) * std::cos(2 * kPi * u2);
        };
        offset[c] = Vec3{gauss(), gauss(), gauss()} * sigma;
    }
    TriMesh out = mesh;
    for (size_t i = 0; i < out.vertices.size(); ++i) out.vertices[i] += offset[cluster[i]];
    out.recompute_normals();
    return out;
}

// --- OBJ + medium map I/O ---------------------------------------------------

void write_obj(const TriMesh& mesh, const std::string& path) {
    std::ofstream f(path);
    if (!f) throw std::runtime_error("cannot open " + path + " for writing");
    f.precision(17);
    for (const Vec3& v : mesh.vertices) f << "v " << v.x << " " << v.y << " " << v.z << "\n";
    for (const Vec3& n : mesh.normals) f << "vn " << n.x << " " << n.y << " " << n.z << "\n";
    int current_region = std::numeric_limits<int>::min();
    for (const Triangle& t : mesh.triangles) {
        if (t.region != current_region) {
            f << "o medium_" << t.region << "\n";
            current_region = t.region;
        }
        f << "f " << t.v0 + 1 << "//" << t.v0 + 1 << " " << t.v1 + 1 << "//" << t.v1 + 1
          << " " << t.v2 + 1 << "//" << t.v2 + 1 << "\n";
    }
}

TriMesh read_obj(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("cannot open " + path);
    TriMesh mesh;
    int region = 1;
    std::string line;
    while (std::getline(f, line)) {
        std::istringstream ss(line);
        std::string tag;
        ss >> tag;
        if (tag == "v") {
            Vec3 v;
            ss >> v.x >> v.y >> v.z;
            mesh.vertices.push_back(v);
        } else if (tag == "vn") {
            Vec3 n;
            ss >> n.x >> n.y >> n.z;
            mesh.normals.push_back(n);
        } else if (tag == "o" || tag == "g") {
            std::string name;
            ss >> name;
            if (name.rfind("medium_", 0) == 0) region = std::stoi(name.substr(7));
        } else if (tag == "f") {
            int idx[3];
            for (int k = 0; k < 3; ++k) {
                std::string tok;
                ss >> tok;
                idx[k] = std::stoi(tok.substr(0, tok.find('/'))) - 1;
            }
            mesh.triangles.push_back({idx[0], idx[1], idx[2], region});
        }
    }
    if (mesh.normals.size() != mesh.vertices.size()) mesh.recompute_normals();
    return mesh;
}

void write_medium_map(const MediumMap& map, const std::string& path) {
    std::ofstream f(path);
    if (!f) throw std::runtime_error("cannot open " + path + " for writing");
    f.precision(17);
    for (size_t id = 0; id < map.media.size(); ++id) {
        const Medium& m = map.media[id];
        f << id << " " << m.ior << " " << m.absorption.x << " " << m.absorption.y << " "
          << m.absorption.z << "\n";
    }
}

MediumMap read_medium_map(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("cannot open " + path);
    MediumMap map;
    map.media.clear();
    std::string line;
    while (std::getline(f, line)) {
        if (line.empty() || line[0] == '#') continue;
        std::istringstream ss(line);
        int id;
        Medium m;
        if (!(ss >> id >> m.ior >> m.absorption.x >> m.absorption.y >> m.absorption.z))
            throw std::runtime_error("malformed medium map line: " + line);
        if (id != static_cast<int>(map.media.size()))
            throw std::runtime_error("medium ids must be dense and ordered");
        map.media.push_back(m);
    }
    map.validate();
    return map;
}

}  // namespace refref
