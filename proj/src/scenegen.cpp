#include "refref/scenegen.hpp"

#include <filesystem>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

#include "refref/rng.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace refref {

Camera look_at_camera(const Vec3& position, const Vec3& target, double fov_x, int width,
                      int height) {
    Vec3 forward = normalize(target - position);
    Vec3 up{0, 0, 1};
    if (std::abs(dot(forward, up)) > 0.99) up = Vec3{1, 0, 0};
    Vec3 right = normalize(cross(forward, up));
    Vec3 true_up = cross(right, forward);

    Camera cam;
    cam.to_world.cx = right;
    cam.to_world.cy = true_up;
    cam.to_world.cz = -forward;  // camera looks down -z
    cam.to_world.t = position;
    cam.fov_x = fov_x;
    cam.width = width;
    cam.height = height;
    return cam;
}

std::vector<Camera> cameras_random_sphere(int n, double radius, const Vec3& look_at,
                                          uint64_t seed, double fov_x, int width,
                                          int height) {
    if (n < 1) throw std::runtime_error("camera count must be >= 1");
    if (radius <= 0) throw std::runtime_error("camera radius must be > 0");
    std::vector<Camera> cams;
    cams.reserve(n);
    for (int i = 0; i < n; ++i) {
        Rng rng(seed, static_cast<uint64_t>(i));
        double z = 1.0 - 2.0 * rng.next_double();
        double phi = 2.0 * kPi * rng.next_double();
        double rho = std::sqrt(std::max(0.0, 1.0 - z * z));
        Vec3 pos = look_at + Vec3{rho * std::cos(phi), rho * std::sin(phi), z} * radius;
        cams.push_back(look_at_camera(pos, look_at, fov_x, width, height));
    }
    return cams;
}

std::vector<Camera> cameras_helical(int n, double radius, double z_min, double z_max,
                                    double turns, const Vec3& center, double fov_x,
                                    int width, int height) {
    if (n < 2) throw std::runtime_error("helical rig needs >= 2 cameras");
    std::vector<Camera> cams;
    cams.reserve(n);
    for (int i = 0; i < n; ++i) {
        double azimuth = 2.0 * kPi * turns * i / n;
        double z = z_min + (z_max - z_min) * i / (n - 1);
        Vec3 pos = center + Vec3{radius * std::cos(azimuth), radius * std::sin(azimuth), z};
        cams.push_back(look_at_camera(pos, center, fov_x, width, height));
    }
    return cams;
}

std::vector<std::string> preset_names() {
    return {"convex-sphere", "torus", "nested-spheres", "tir-cube"};
}

SceneSpec make_preset(const std::string& name, uint64_t seed, const RenderSettings& render) {
    SceneSpec spec;
    spec.name = name;
    spec.render = render;
    spec.seed = seed;

    BackgroundModel checker_cube;
    checker_cube.kind = BackgroundModel::Kind::TexturedCube;
    checker_cube.extent = 1.8;
    checker_cube.frequency_u = 1.25;
    checker_cube.frequency_v = 1.25;
    checker_cube.color_a = {0.85, 0.75, 0.55};
    checker_cube.color_b = {0.15, 0.25, 0.45};

    if (name == "convex-sphere") {
        spec.mesh = make_icosphere(0.5, 4, 1);
        // Mild tint: the sphere stays clearly translucent, so most of the
        // refracted background detail survives for reconstruction.
        spec.media.add(1.5, {0.6, 0.8, 1.1});
        spec.background = checker_cube;
        spec.background.frequency_u = 2.5;
        spec.background.frequency_v = 2.5;
    } else if (name == "torus") {
        spec.mesh = make_torus(0.35, 0.18, 48, 24, 1);
        spec.media.add(1.5, {1.0, 1.6, 2.6});
        spec.background.kind = BackgroundModel::Kind::TexturedSphere;
        spec.background.extent = 1.8;
        spec.background.frequency_u = 6;
        spec.background.frequency_v = 12;
        spec.background.color_a = {0.8, 0.7, 0.5};
        spec.background.color_b = {0.2, 0.3, 0.5};
    } else if (name == "nested-spheres") {
        spec.mesh = make_nested_spheres(0.5, 0.28, 4, 1);
        spec.media.add(1.5, {0.5, 0.8, 1.2});
        spec.media.add(1.8, {2.0, 1.0, 0.5});
        spec.background = checker_cube;
    } else if (name == "tir-cube") {
        spec.mesh = make_box(0.8, 0.8, 0.8, 1);
        // Light tint only: internal-reflection paths run 2-3 units inside
        // the glass, and the content they transport has to stay bright for
        // reflection/TIR handling to matter to the reconstruction.
        spec.media.add(1.5, {0.4, 0.6, 0.9});
        spec.background = checker_cube;
        // Distinct hue per wall face: a total-internal-reflection bounce
        // lands on a different face than a straight transmission would, so
        // mistracing it produces a wrong hue, not just a shifted checker.
        spec.background.face_tint = true;
    } else {
        std::string all;
        for (const auto& p : preset_names()) all += (all.empty() ? "" : ", ") + p;
        throw std::runtime_error("unknown preset '" + name + "' (available: " + all + ")");
    }

    const double rig_radius = 1.6;
    spec.train_cameras = cameras_random_sphere(50, rig_radius, {0, 0, 0}, seed,
                                               render.fov_x, render.width, render.height);
    spec.val_cameras = cameras_random_sphere(10, rig_radius, {0, 0, 0}, seed ^ 0x9e3779b97f4a7c15ull,
                                             render.fov_x, render.width, render.height);
    spec.test_cameras = cameras_helical(20, rig_radius, -0.6, 0.6, 1.0, {0, 0, 0},
                                        render.fov_x, render.width, render.height);
    return spec;
}

std::array<std::array<double, 4>, 4> camera_matrix(const Camera& cam) {
    const Transform& T = cam.to_world;
    return {{{T.cx.x, T.cy.x, T.cz.x, T.t.x},
             {T.cx.y, T.cy.y, T.cz.y, T.t.y},
             {T.cx.z, T.cy.z, T.cz.z, T.t.z},
             {0, 0, 0, 1}}};
}

Camera camera_from_matrix(const std::array<std::array<double, 4>, 4>& m, double fov_x,
                          int width, int height) {
    Camera cam;
    cam.to_world.cx = {m[0][0], m[1][0], m[2][0]};
    cam.to_world.cy = {m[0][1], m[1][1], m[2][1]};
    cam.to_world.cz = {m[0][2], m[1][2], m[2][2]};
    cam.to_world.t = {m[0][3], m[1][3], m[2][3]};
    cam.fov_x = fov_x;
    cam.width = width;
    cam.height = height;
    return cam;
}

namespace {

json background_to_json(const BackgroundModel& bg) {
    const char* kind = bg.kind == BackgroundModel::Kind::Constant ? "constant"
                       : bg.kind == BackgroundModel::Kind::TexturedCube ? "textured-cube"
                                                                        : "textured-sphere";
    return {{"kind", kind},
            {"extent", bg.extent},
            {"frequency_u", bg.frequency_u},
            {"frequency_v", bg.frequency_v},
            {"color_a", {bg.color_a.x, bg.color_a.y, bg.color_a.z}},
            {"color_b", {bg.color_b.x, bg.color_b.y, bg.color_b.z}},
            {"face_tint", bg.face_tint}};
}

BackgroundModel background_from_json(const json& j) {
    BackgroundModel bg;
    std::string kind = j.at("kind");
    bg.kind = kind == "constant" ? BackgroundModel::Kind::Constant
              : kind == "textured-cube" ? BackgroundModel::Kind::TexturedCube
              : kind == "textured-sphere"
                  ? BackgroundModel::Kind::TexturedSphere
                  : throw std::runtime_error("unknown background kind: " + kind);
    bg.extent = j.at("extent");
    bg.frequency_u = j.at("frequency_u");
    bg.frequency_v = j.at("frequency_v");
    bg.face_tint = j.value("face_tint", false);
    auto a = j.at("color_a"), b = j.at("color_b");
    bg.color_a = {a[0], a[1], a[2]};
    bg.color_b = {b[0], b[1], b[2]};
    return bg;
}

void write_manifest(const std::string& path, double camera_angle_x, int width, int height,
                    const std::vector<Camera>& cams,
                    const std::vector<std::string>& frame_paths) {
    json manifest;
    manifest["camera_angle_x"] = camera_angle_x;
    manifest["w"] = width;
    manifest["h"] = height;
    manifest["frames"] = json::array();
    for (size_t i = 0; i < cams.size(); ++i) {
        auto m = camera_matrix(cams[i]);
        json frame;
        frame["file_path"] = frame_paths[i];
        frame["transform_matrix"] = m;
        manifest["frames"].push_back(frame);
    }
    std::ofstream f(path);
    if (!f) throw std::runtime_error("cannot open " + path + " for writing");
    f << manifest.dump(2) << "\n";
}

}  // namespace

void write_dataset(const SceneSpec& spec, const std::string& out_dir) {
    Scene scene(spec.mesh, spec.media);

    fs::create_directories(out_dir);
    const struct {
        const char* name;
        const std::vector<Camera>* cams;
    } splits[] = {{"train", &spec.train_cameras},
                  {"val", &spec.val_cameras},
                  {"test", &spec.test_cameras}};

    for (const auto& split : splits) {
        fs::create_directories(fs::path(out_dir) / split.name);
        std::vector<std::string> frame_paths;
        for (size_t i = 0; i < split.cams->size(); ++i) {
            std::string rel = std::string("./") + split.name + "/r_" + std::to_string(i);
            frame_paths.push_back(rel);

            GroundTruthConfig gt;
            gt.spp = spec.render.spp;
            gt.seed = spec.seed ^ (Rng(spec.seed, std::hash<std::string>{}(split.name)).next_u64() +
                                   i * 0x9e3779b97f4a7c15ull);
            GroundTruthRender render = render_ground_truth(scene, spec.background,
                                                           (*split.cams)[i], gt);
            std::string base = out_dir + "/" + split.name + "/r_" + std::to_string(i);
            write_png(render.image, base + ".png");
            write_pfm(render.depth, base + "_depth.pfm");
            write_png(render.mask, base + "_mask.png");
        }
        write_manifest(out_dir + "/transforms_" + split.name + ".json", spec.render.fov_x,
                       spec.render.width, spec.render.height, *split.cams, frame_paths);
    }

    write_obj(spec.mesh, out_dir + "/mesh.obj");
    write_medium_map(spec.media, out_dir + "/media.txt");

    json scene_meta;
    scene_meta["name"] = spec.name;
    scene_meta["background"] = background_to_json(spec.background);
    scene_meta["t_near"] = spec.render.t_near;
    scene_meta["t_far"] = spec.render.t_far;
    scene_meta["mesh"] = "mesh.obj";
    scene_meta["media"] = "media.txt";
    std::ofstream f(out_dir + "/scene.json");
    if (!f) throw std::runtime_error("cannot open " + out_dir + "/scene.json for writing");
    f << scene_meta.dump(2) << "\n";
}

const DatasetSplit& Dataset::split(const std::string& name) const {
    auto it = splits.find(name);
    if (it == splits.end()) throw std::runtime_error("dataset has no split '" + name + "'");
    return it->second;
}

Image Dataset::load_image(const std::string& split_name, int frame) const {
    return read_png(dir + "/" + split(split_name).frame_paths[frame] + ".png");
}
Image Dataset::load_depth(const std::string& split_name, int frame) const {
    return read_pfm(dir + "/" + split(split_name).frame_paths[frame] + "_depth.pfm");
}
Image Dataset::load_mask(const std::string& split_name, int frame) const {
    return read_png(dir + "/" + split(split_name).frame_paths[frame] + "_mask.png");
}

Dataset read_dataset(const std::string& dir) {
    Dataset ds;
    ds.dir = dir;

    std::ifstream sf(dir + "/scene.json");
    if (!sf) throw std::runtime_error("missing scene.json in " + dir);
    json scene_meta = json::parse(sf);
    ds.scene_name = scene_meta.at("name");
    ds.background = background_from_json(scene_meta.at("background"));
    ds.t_near = scene_meta.at("t_near");
    ds.t_far = scene_meta.at("t_far");
    ds.mesh = read_obj(dir + "/" + scene_meta.at("mesh").get<std::string>());
    ds.media = read_medium_map(dir + "/" + scene_meta.at("media").get<std::string>());

    for (const char* name : {"train", "val", "test"}) {
        std::string path = dir + "/transforms_" + name + ".json";
        std::ifstream f(path);
        if (!f) throw std::runtime_error("missing manifest " + path);
        json manifest = json::parse(f);
        ds.camera_angle_x = manifest.at("camera_angle_x");
        int width = manifest.value("w", 0);
        int height = manifest.value("h", 0);
        DatasetSplit split;
        for (const auto& frame : manifest.at("frames")) {
            std::array<std::array<double, 4>, 4> m;
            const auto& tm = frame.at("transform_matrix");
            for (int r = 0; r < 4; ++r)
                for (int c = 0; c < 4; ++c) m[r][c] = tm[r][c];
            split.cameras.push_back(
                camera_from_matrix(m, ds.camera_angle_x, width, height));
            split.frame_paths.push_back(frame.at("file_path"));
        }
        ds.splits[name] = std::move(split);
    }
    return ds;
}

}  // namespace refref
