#include "refref/field.hpp"

#include <cstring>
#include <fstream>
#include <stdexcept>

namespace refref {

void sh_basis(int degree, const Vec3& d, double* out) {
    out[0] = 0.28209479177387814;
    if (degree >= 1) {
        out[1] = 0.4886025119029199 * d.y;
        out[2] = 0.4886025119029199 * d.z;
        out[3] = 0.4886025119029199 * d.x;
    }
    if (degree >= 2) {
        out[4] = 1.0925484305920792 * d.x * d.y;
        out[5] = 1.0925484305920792 * d.y * d.z;
        out[6] = 0.31539156525252005 * (3.0 * d.z * d.z - 1.0);
        out[7] = 1.0925484305920792 * d.x * d.z;
        out[8] = 0.5462742152960396 * (d.x * d.x - d.y * d.y);
    }
}

VoxelField::VoxelField(int nx, int ny, int nz, const Vec3& lo, const Vec3& hi,
                       int sh_degree)
    : lo_(lo), hi_(hi), sh_degree_(sh_degree) {
    if (nx < 2 || ny < 2 || nz < 2) throw std::runtime_error("grid resolution must be >= 2");
    if (sh_degree < 0 || sh_degree > kMaxShDegree)
        throw std::runtime_error("unsupported SH degree");
    if (!(hi.x > lo.x && hi.y > lo.y && hi.z > lo.z))
        throw std::runtime_error("invalid field bounds");
    res_[0] = nx;
    res_[1] = ny;
    res_[2] = nz;
    params_.assign(parameter_count(), 0.0);
}

VoxelField::Stencil VoxelField::stencil(const Vec3& x) const {
    Stencil st;
    Vec3 extent = hi_ - lo_;
    double fx = (x.x - lo_.x) / extent.x * (res_[0] - 1);
    double fy = (x.y - lo_.y) / extent.y * (res_[1] - 1);
    double fz = (x.z - lo_.z) / extent.z * (res_[2] - 1);
    if (fx < 0 || fy < 0 || fz < 0 || fx > res_[0] - 1 || fy > res_[1] - 1 ||
        fz > res_[2] - 1)
        return st;

    int ix = std::min(static_cast<int>(fx), res_[0] - 2);
    int iy = std::min(static_cast<int>(fy), res_[1] - 2);
    int iz = std::min(static_cast<int>(fz), res_[2] - 2);
    double ux = fx - ix, uy = fy - iy, uz = fz - iz;

    int64_t sy = res_[0];
    int64_t sz = static_cast<int64_t>(res_[0]) * res_[1];
    int64_t base = ix + iy * sy + iz * sz;
    const double wx[2] = {1 - ux, ux};
    const double wy[2] = {1 - uy, uy};
    const double wz[2] = {1 - uz, uz};
    for (int c = 0; c < 8; ++c) {
        int dx = c & 1, dy = (c >> 1) & 1, dz = (c >> 2) & 1;
        st.node[c] = base + dx + dy * sy + dz * sz;
        st.weight[c] = wx[dx] * wy[dy] * wz[dz];
    }
    st.count = 8;
    return st;
}

namespace {

template <int Nsh>
VoxelField::RawSample query_raw_impl(const VoxelField& f, const VoxelField::Stencil& st,
                                     const double* sh, const double* p) {
    VoxelField::RawSample raw;
    for (int c = 0; c < st.count; ++c) {
        double w = st.weight[c];
        int64_t node = st.node[c];
        raw.density_preact += w * p[f.density_index(node)];
        const double* coeffs = p + f.sh_index(node, 0, 0);  // 3 channels contiguous
        for (int ch = 0; ch < 3; ++ch) {
            double acc = 0;
            for (int m = 0; m < Nsh; ++m) acc += coeffs[ch * Nsh + m] * sh[m];
            raw.color_raw[ch] += w * acc;
        }
    }
    return raw;
}

}  // namespace

VoxelField::RawSample VoxelField::query_raw(const Stencil& st, const double* sh) const {
    if (st.count == 0) return RawSample{};
    const double* p = params_.data();
    switch (sh_count()) {
        case 1: return query_raw_impl<1>(*this, st, sh, p);
        case 4: return query_raw_impl<4>(*this, st, sh, p);
        default: return query_raw_impl<9>(*this, st, sh, p);
    }
}

VoxelField::Sample VoxelField::query(const Vec3& x, const Vec3& d) const {
    Stencil st = stencil(x);
    if (st.count == 0) return {Vec3{0, 0, 0}, 0.0};
    double sh[(kMaxShDegree + 1) * (kMaxShDegree + 1)];
    sh_basis(sh_degree_, d, sh);
    RawSample raw = query_raw(st, sh);
    return {Vec3{sigmoid(raw.color_raw[0]), sigmoid(raw.color_raw[1]),
                 sigmoid(raw.color_raw[2])},
            softplus(raw.density_preact)};
}

namespace {
constexpr char kMagic[8] = {'R', 'R', 'V', 'F', '0', '0', '0', '1'};
}

void VoxelField::save(const std::string& path) const {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open " + path + " for writing");
    f.write(kMagic, 8);
    int32_t res32[3] = {res_[0], res_[1], res_[2]};
    int32_t degree = sh_degree_;
    double bounds[6] = {lo_.x, lo_.y, lo_.z, hi_.x, hi_.y, hi_.z};
    f.write(reinterpret_cast<const char*>(res32), sizeof res32);
    f.write(reinterpret_cast<const char*>(&degree), sizeof degree);
    f.write(reinterpret_cast<const char*>(bounds), sizeof bounds);
    f.write(reinterpret_cast<const char*>(params_.data()),
            static_cast<std::streamsize>(params_.size() * sizeof(double)));
    if (!f) throw std::runtime_error("write failed: " + path);
}

VoxelField VoxelField::load(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open " + path);
    char magic[8];
    f.read(magic, 8);
    if (!f || std::memcmp(magic, kMagic, 8) != 0)
        throw std::runtime_error("not a field checkpoint: " + path);
    int32_t res32[3], degree;
    double bounds[6];
    f.read(reinterpret_cast<char*>(res32), sizeof res32);
    f.read(reinterpret_cast<char*>(&degree), sizeof degree);
    f.read(reinterpret_cast<char*>(bounds), sizeof bounds);
    if (!f) throw std::runtime_error("truncated field checkpoint: " + path);
    VoxelField field(res32[0], res32[1], res32[2], Vec3{bounds[0], bounds[1], bounds[2]},
                     Vec3{bounds[3], bounds[4], bounds[5]}, degree);
    f.read(reinterpret_cast<char*>(field.params_.data()),
           static_cast<std::streamsize>(field.params_.size() * sizeof(double)));
    if (!f) throw std::runtime_error("truncated field checkpoint: " + path);
    return field;
}

BackgroundModel::Hit BackgroundModel::hit(const Vec3& x, const Vec3& d) const {
    Hit result;
    switch (kind) {
        case Kind::Constant:
            result.radiance = color_a;
            result.t = kInf;
            return result;
        case Kind::TexturedCube: {
            // Exit point of the axis-aligned cube [-extent, extent]^3.
            double t_exit = kInf;
            int face_axis = -1;
            for (int a = 0; a < 3; ++a) {
                double da = d[a];
                if (std::abs(da) < 1e-15) continue;
                double bound = da > 0 ? extent : -extent;
                double t = (bound - x[a]) / da;
                if (t > 0 && t < t_exit) {
                    t_exit = t;
                    face_axis = a;
                }
            }
            if (face_axis < 0 || !std::isfinite(t_exit) ||
                std::abs(x[0]) > extent + 1e-9 || std::abs(x[1]) > extent + 1e-9 ||
                std::abs(x[2]) > extent + 1e-9) {
                result.escaped = true;
                return result;
            }
            Vec3 p = x + d * t_exit;
            int ua = (face_axis + 1) % 3, va = (face_axis + 2) % 3;
            int64_t cu = static_cast<int64_t>(std::floor((p[ua] + extent) * frequency_u));
            int64_t cv = static_cast<int64_t>(std::floor((p[va] + extent) * frequency_v));
            result.radiance = ((cu + cv) % 2 + 2) % 2 == 0 ? color_a : color_b;
            if (face_tint) {
                static const Vec3 kFaceTint[6] = {
                    {1.0, 0.55, 0.55}, {0.55, 1.0, 1.0},   // +x, -x
                    {0.55, 1.0, 0.55}, {1.0, 0.55, 1.0},   // +y, -y
                    {0.55, 0.55, 1.0}, {1.0, 1.0, 0.55},   // +z, -z
                };
                const Vec3& tint = kFaceTint[2 * face_axis + (d[face_axis] > 0 ? 0 : 1)];
                result.radiance = {result.radiance.x * tint.x,
                                   result.radiance.y * tint.y,
                                   result.radiance.z * tint.z};
            }
            result.t = t_exit;
            return result;
        }
        case Kind::TexturedSphere: {
            // Exit point of the sphere |p| = extent, origin inside.
            double b = dot(x, d);
            double c = dot(x, x) - extent * extent;
            double disc = b * b - c;
            if (c > 1e-9 || disc < 0) {
                result.escaped = true;
                return result;
            }
            double t = -b + std::sqrt(disc);
            Vec3 p = normalize(x + d * t);
            double latitude = std::acos(std::clamp(p.z, -1.0, 1.0));  // [0, pi]
            double longitude = std::atan2(p.y, p.x) + kPi;            // [0, 2pi]
            int64_t cu = static_cast<int64_t>(std::floor(latitude / kPi * frequency_u));
            int64_t cv =
                static_cast<int64_t>(std::floor(longitude / (2 * kPi) * frequency_v));
            result.radiance = ((cu + cv) % 2 + 2) % 2 == 0 ? color_a : color_b;
            result.t = t;
            return result;
        }
    }
    result.escaped = true;
    return result;
}

}  // namespace refref
