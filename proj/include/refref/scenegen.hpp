#pragma once

#include <map>
#include <string>
#include <vector>

#include "refref/camera.hpp"
#include "refref/field.hpp"
#include "refref/image.hpp"
#include "refref/mesh.hpp"
#include "refref/renderer.hpp"

namespace refref {

/// Camera at `position` looking at `target`. The reference up axis flips
/// to +x when the view direction is too close to the pole.
Camera look_at_camera(const Vec3& position, const Vec3& target, double fov_x, int width,
                      int height);

/// Viewpoints uniform (by area) on a sphere around `look_at`.
std::vector<Camera> cameras_random_sphere(int n, double radius, const Vec3& look_at,
                                          uint64_t seed, double fov_x, int width,
                                          int height);

/// Ordered helical rig: azimuth advances uniformly over turns * 2pi while
/// height ascends linearly over [z_min, z_max]; all look at `center`.
std::vector<Camera> cameras_helical(int n, double radius, double z_min, double z_max,
                                    double turns, const Vec3& center, double fov_x,
                                    int width, int height);

struct RenderSettings {
    int width = 64, height = 64;
    int spp = 4;
    double fov_x = 0.6911112070083618;
    double t_near = 0.05;
    double t_far = 5.0;
};

/// Full recipe for one dataset: object + media, background, camera rigs.
struct SceneSpec {
    std::string name;
    TriMesh mesh;
    MediumMap media;
    BackgroundModel background;
    std::vector<Camera> train_cameras, val_cameras, test_cameras;
    RenderSettings render;
    uint64_t seed = 0;
};

/// Bundled desk-scale presets: convex-sphere, torus, nested-spheres,
/// tir-cube. Throws with the preset list on an unknown name.
SceneSpec make_preset(const std::string& name, uint64_t seed,
                      const RenderSettings& render);
std::vector<std::string> preset_names();

/// Renders every split with the ground-truth renderer and writes the
/// NeRF-synthetic-style tree: transforms_{split}.json manifests,
/// per-frame PNG/PFM/mask assets, mesh OBJ, medium map, scene metadata.
void write_dataset(const SceneSpec& spec, const std::string& out_dir);

/// One split of a dataset on disk.
struct DatasetSplit {
    std::vector<Camera> cameras;
    std::vector<std::string> frame_paths;  // relative, no extension
};

struct Dataset {
    std::string dir;
    double camera_angle_x = 0;
    std::map<std::string, DatasetSplit> splits;
    TriMesh mesh;
    MediumMap media;
    BackgroundModel background;
    double t_near = 0.05, t_far = 5.0;
    std::string scene_name;

    const DatasetSplit& split(const std::string& name) const;
    Image load_image(const std::string& split, int frame) const;
    Image load_depth(const std::string& split, int frame) const;
    Image load_mask(const std::string& split, int frame) const;
};

/// Inverse of write_dataset (poses, metadata; images load lazily).
Dataset read_dataset(const std::string& dir);

/// 4x4 row-major camera-to-world matrix in the manifest convention.
std::array<std::array<double, 4>, 4> camera_matrix(const Camera& cam);
Camera camera_from_matrix(const std::array<std::array<double, 4>, 4>& m, double fov_x,
                          int width, int height);

}  // namespace refref
