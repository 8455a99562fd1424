#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "refref/metrics.hpp"
#include "refref/parallel.hpp"
#include "refref/scenegen.hpp"
#include "refref/train.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace refref;

namespace {

constexpr const char* kVersion = "refref-0.1.0";

/// Errors that mean the invocation was wrong (exit 2), as opposed to a
/// failure while doing the work (exit 1).
struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

class RunManifest {
public:
    RunManifest(std::string path, std::string command, json config, uint64_t seed)
        : path_(std::move(path)), start_(std::chrono::steady_clock::now()) {
        doc_["command"] = std::move(command);
        doc_["config"] = std::move(config);
        doc_["seed"] = seed;
        doc_["version"] = kVersion;
        doc_["status"] = "running";
        write();
    }

    void finalize() {
        auto elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                                     start_);
        doc_["status"] = "ok";
        doc_["wall_seconds"] = elapsed.count();
        write();
    }

private:
    void write() const {
        std::ofstream f(path_);
        if (!f) throw std::runtime_error("cannot write manifest " + path_);
        f << doc_.dump(2) << "\n";
    }

    std::string path_;
    json doc_;
    std::chrono::steady_clock::time_point start_;
};

std::map<std::string, std::string> parse_overrides(const std::vector<std::string>& kvs) {
    std::map<std::string, std::string> out;
    for (const auto& kv : kvs) {
        auto eq = kv.find('=');
        if (eq == std::string::npos || eq == 0)
            throw UsageError("--config expects key=value, got '" + kv + "'");
        out[kv.substr(0, eq)] = kv.substr(eq + 1);
    }
    return out;
}

void apply_overrides(TrainConfig& cfg, std::map<std::string, std::string> kvs) {
    auto take_int = [&](const char* key, auto& field) {
        auto it = kvs.find(key);
        if (it == kvs.end()) return;
        field = static_cast<std::remove_reference_t<decltype(field)>>(
            std::stoll(it->second));
        kvs.erase(it);
    };
    auto take_double = [&](const char* key, double& field) {
        auto it = kvs.find(key);
        if (it == kvs.end()) return;
        field = std::stod(it->second);
        kvs.erase(it);
    };
    take_int("iterations", cfg.iterations);
    take_int("batch_size", cfg.batch_size);
    take_double("lr_init", cfg.lr_init);
    take_double("lr_final", cfg.lr_final);
    take_int("warmup_steps", cfg.warmup_steps);
    take_double("lr_scale", cfg.lr_scale);
    take_double("lambda_dist", cfg.lambda_dist);
    take_int("grid_resolution", cfg.grid_resolution);
    take_int("sh_degree", cfg.sh_degree);
    take_double("init_density_preact", cfg.init_density_preact);
    take_int("seed_object_surface", cfg.seed_object_surface);
    take_double("init_surface_density_preact", cfg.init_surface_density_preact);
    take_int("log_every", cfg.log_every);
    take_int("checkpoint_every", cfg.checkpoint_every);
    take_int("n_uniform", cfg.render.n_uniform);
    take_int("n_resample", cfg.render.n_resample);
    take_double("t_near", cfg.render.t_near);
    take_double("t_far", cfg.render.t_far);
    take_int("max_bends", cfg.render.max_bends);
    if (!kvs.empty()) throw UsageError("unknown --config key '" + kvs.begin()->first + "'");
}

json train_config_json(const TrainConfig& c, const std::string& mode) {
    return {{"mode", mode},
            {"iterations", c.iterations},
            {"batch_size", c.batch_size},
            {"lr_init", c.lr_init},
            {"lr_final", c.lr_final},
            {"warmup_steps", c.warmup_steps},
            {"lr_scale", c.lr_scale},
            {"lambda_dist", c.lambda_dist},
            {"grid_resolution", c.grid_resolution},
            {"sh_degree", c.sh_degree},
            {"init_density_preact", c.init_density_preact},
            {"seed_object_surface", c.seed_object_surface},
            {"init_surface_density_preact", c.init_surface_density_preact},
            {"n_uniform", c.render.n_uniform},
            {"n_resample", c.render.n_resample},
            {"t_near", c.render.t_near},
            {"t_far", c.render.t_far},
            {"max_bends", c.render.max_bends},
            {"corrected_distortion", c.ablation.corrected_distortion},
            {"first_surface_reflection", c.ablation.first_surface_reflection},
            {"tir", c.ablation.tir},
            {"path_mode", c.render.path_mode == PathMode::Straight ? "straight" : "bent"}};
}

/// The proxy geometry a silhouette-based estimate would give: ground truth
/// degraded by seeded jitter, then aggressively smoothed.
TriMesh proxy_mesh(const TriMesh& truth, uint64_t seed) {
    return laplacian_smooth(jitter_vertices(truth, 0.02, seed ^ 0x7228aa1ff3u), 1.0, 100);
}

struct ModeSetup {
    TriMesh mesh;
    PathMode path_mode = PathMode::Bent;
    bool reflection = true;
};

ModeSetup setup_mode(const Dataset& ds, const std::string& mode, uint64_t seed) {
    ModeSetup s;
    if (mode == "oracle") {
        s.mesh = ds.mesh;
    } else if (mode == "r3f") {
        s.mesh = proxy_mesh(ds.mesh, seed);
    } else if (mode == "straight") {
        s.mesh = ds.mesh;  // unused for path bending, still defines the mask geometry
        s.path_mode = PathMode::Straight;
        s.reflection = false;
    } else {
        throw UsageError("unknown mode '" + mode + "' (expected oracle, r3f, straight)");
    }
    return s;
}

int cmd_gen(const std::string& preset, const std::string& out_dir, uint64_t seed, int spp,
            int resolution) {
    auto names = preset_names();
    if (std::find(names.begin(), names.end(), preset) == names.end()) {
        std::string all;
        for (const auto& p : names) all += (all.empty() ? "" : ", ") + p;
        throw UsageError("unknown preset '" + preset + "' (available: " + all + ")");
    }
    RenderSettings rs;
    rs.width = rs.height = resolution;
    rs.spp = spp;
    fs::create_directories(out_dir);
    RunManifest manifest(out_dir + "/manifest.json", "gen",
                         {{"preset", preset},
                          {"out", out_dir},
                          {"spp", spp},
                          {"resolution", resolution}},
                         seed);
    SceneSpec spec = make_preset(preset, seed, rs);
    write_dataset(spec, out_dir);
    manifest.finalize();
    std::cout << "wrote dataset '" << preset << "' to " << out_dir << "\n";
    return 0;
}

int cmd_train(const std::string& dataset_dir, const std::string& out_dir,
              const std::string& mode, const AblationSwitches& ablation, int iters,
              int batch, uint64_t seed, const std::vector<std::string>& overrides) {
    if (mode == "straight" && !ablation.tir)
        throw UsageError("--no-tir is meaningless with --mode straight (no bending at all)");

    Dataset ds = read_dataset(dataset_dir);
    ModeSetup setup = setup_mode(ds, mode, seed);

    TrainConfig cfg;
    cfg.iterations = iters;
    cfg.batch_size = batch;
    cfg.seed = seed;
    cfg.ablation = ablation;
    cfg.render.t_near = ds.t_near;
    cfg.render.t_far = ds.t_far;
    cfg.render.path_mode = setup.path_mode;
    cfg.render.enable_reflection = setup.reflection;
    apply_overrides(cfg, parse_overrides(overrides));
    fs::create_directories(out_dir);
    cfg.checkpoint_path = out_dir + "/checkpoint.bin";
    cfg.loss_csv_path = out_dir + "/loss.csv";

    json config = train_config_json(cfg, mode);
    config["dataset"] = dataset_dir;
    config["out"] = out_dir;
    RunManifest manifest(out_dir + "/manifest.json", "train", config, seed);

    const DatasetSplit& split = ds.split("train");
    std::vector<Image> images;
    images.reserve(split.cameras.size());
    for (size_t i = 0; i < split.cameras.size(); ++i)
        images.push_back(ds.load_image("train", static_cast<int>(i)));

    Scene scene(setup.mesh, ds.media);
    train(scene, split.cameras, images, cfg,
          [&](int it, const LossReport& r, double lr) {
              std::cout << "iter " << it << "  loss " << r.total << "  rgb " << r.rgb
                        << "  dist " << r.dist << "  psnr " << r.psnr << "  lr " << lr
                        << "\n";
          });
    manifest.finalize();
    std::cout << "checkpoint: " << cfg.checkpoint_path << "\n";
    return 0;
}

RenderConfig eval_render_config(const Dataset& ds, const ModeSetup& setup) {
    RenderConfig rc;
    rc.t_near = ds.t_near;
    rc.t_far = ds.t_far;
    rc.path_mode = setup.path_mode;
    rc.enable_reflection = setup.reflection;
    return rc;
}

int cmd_eval(const std::string& checkpoint, const std::string& dataset_dir,
             const std::string& split_name, const std::string& mode,
             const std::string& out_csv, uint64_t seed) {
    if (!fs::exists(checkpoint)) throw UsageError("missing checkpoint: " + checkpoint);
    VoxelField field = VoxelField::load(checkpoint);
    Dataset ds = read_dataset(dataset_dir);
    ModeSetup setup = setup_mode(ds, mode, seed);
    Scene scene(setup.mesh, ds.media);
    RenderConfig rc = eval_render_config(ds, setup);

    EvalReport report;
    report.scene = ds.scene_name;
    report.method = mode;
    const DatasetSplit& split = ds.split(split_name);
    for (size_t i = 0; i < split.cameras.size(); ++i) {
        FieldViewRender r = render_field_view(scene, field, split.cameras[i], rc, seed);
        Image gt = ds.load_image(split_name, static_cast<int>(i));
        Image mask = ds.load_mask(split_name, static_cast<int>(i));
        Image depth = ds.load_depth(split_name, static_cast<int>(i));
        ViewMetrics v;
        v.psnr = psnr(r.image, gt);
        v.psnr_masked = psnr(r.image, gt, &mask);
        v.ssim = ssim(r.image, gt);
        v.dmae = dmae(r.depth, depth);
        v.dmae_masked = dmae(r.depth, depth, &mask);
        report.views.push_back(v);
    }
    if (!out_csv.empty()) report.write_csv(out_csv);
    std::cout << report.table();
    return 0;
}

int cmd_render(const std::string& checkpoint, const std::string& dataset_dir,
               const std::string& split_name, int index, bool with_depth,
               const std::string& mode, const std::string& out_dir, uint64_t seed) {
    if (!fs::exists(checkpoint)) throw UsageError("missing checkpoint: " + checkpoint);
    VoxelField field = VoxelField::load(checkpoint);
    Dataset ds = read_dataset(dataset_dir);
    ModeSetup setup = setup_mode(ds, mode, seed);
    Scene scene(setup.mesh, ds.media);
    RenderConfig rc = eval_render_config(ds, setup);

    const DatasetSplit& split = ds.split(split_name);
    int n = static_cast<int>(split.cameras.size());
    if (index >= n) throw UsageError("camera index " + std::to_string(index) +
                                     " out of range (split has " + std::to_string(n) +
                                     " cameras)");
    fs::create_directories(out_dir);
    RunManifest manifest(out_dir + "/manifest.json", "render",
                         {{"checkpoint", checkpoint},
                          {"dataset", dataset_dir},
                          {"split", split_name},
                          {"index", index},
                          {"depth", with_depth},
                          {"mode", mode}},
                         seed);
    int lo = index < 0 ? 0 : index;
    int hi = index < 0 ? n : index + 1;
    for (int i = lo; i < hi; ++i) {
        FieldViewRender r = render_field_view(scene, field, split.cameras[i], rc, seed);
        std::string base = out_dir + "/frame_" + std::to_string(i);
        write_png(r.image, base + ".png");
        if (with_depth) write_pfm(r.depth, base + "_depth.pfm");
    }
    manifest.finalize();
    std::cout << "wrote " << (hi - lo) << " frame(s) to " << out_dir << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Refractive light-path radiance field toolkit"};
    app.set_version_flag("--version", kVersion);
    app.require_subcommand(1);

    int threads = 0;
    if (const char* env = std::getenv("REFREF_THREADS")) threads = std::atoi(env);
    app.add_option("--threads", threads, "worker thread cap (0 = hardware)");

    // gen
    auto* gen = app.add_subcommand("gen", "generate a synthetic dataset");
    std::string gen_preset, gen_out;
    uint64_t gen_seed = 1;
    int gen_spp = 4, gen_res = 64;
    gen->add_option("--preset", gen_preset, "scene preset name")->required();
    gen->add_option("--out", gen_out, "output directory")->required();
    gen->add_option("--seed", gen_seed, "master seed");
    gen->add_option("--spp", gen_spp, "ground-truth samples per pixel");
    gen->add_option("--resolution", gen_res, "square image size in pixels");

    // train
    auto* train_cmd = app.add_subcommand("train", "fit a radiance field to a dataset");
    std::string train_ds, train_out = "run", train_mode = "oracle";
    int train_iters = 2000, train_batch = 1024;
    uint64_t train_seed = 1;
    bool no_reflection = false, no_tir = false, uncorrected = false;
    std::vector<std::string> train_overrides;
    train_cmd->add_option("dataset", train_ds, "dataset directory")->required();
    train_cmd->add_option("--out", train_out, "run output directory");
    train_cmd->add_option("--mode", train_mode, "oracle | r3f | straight");
    train_cmd->add_option("--iters", train_iters, "optimization steps");
    train_cmd->add_option("--batch", train_batch, "rays per step");
    train_cmd->add_option("--seed", train_seed, "master seed");
    train_cmd->add_flag("--no-reflection", no_reflection,
                        "drop the first-surface reflection term");
    train_cmd->add_flag("--no-tir", no_tir, "transmit straight through instead of TIR");
    train_cmd->add_flag("--uncorrected-distortion", uncorrected,
                        "penalize in-object weights too");
    train_cmd->add_option("--config", train_overrides, "key=value config override");

    // eval
    auto* eval_cmd = app.add_subcommand("eval", "score a checkpoint against a dataset split");
    std::string eval_ckpt, eval_ds, eval_split = "test", eval_mode = "oracle", eval_csv;
    uint64_t eval_seed = 1;
    eval_cmd->add_option("checkpoint", eval_ckpt, "field checkpoint")->required();
    eval_cmd->add_option("dataset", eval_ds, "dataset directory")->required();
    eval_cmd->add_option("--split", eval_split, "train | val | test");
    eval_cmd->add_option("--mode", eval_mode, "path mode used for rendering");
    eval_cmd->add_option("--out", eval_csv, "report CSV path");
    eval_cmd->add_option("--seed", eval_seed, "sampling seed");

    // render
    auto* render_cmd = app.add_subcommand("render", "render checkpoint frames");
    std::string rend_ckpt, rend_ds, rend_split = "test", rend_mode = "oracle",
                rend_out = "frames";
    int rend_index = -1;
    bool rend_depth = false;
    uint64_t rend_seed = 1;
    render_cmd->add_option("checkpoint", rend_ckpt, "field checkpoint")->required();
    render_cmd->add_option("dataset", rend_ds, "dataset directory (cameras + scene)")
        ->required();
    render_cmd->add_option("--split", rend_split, "camera split");
    render_cmd->add_option("--index", rend_index, "camera index (-1 = all)");
    render_cmd->add_flag("--depth", rend_depth, "also write median-depth PFMs");
    render_cmd->add_option("--mode", rend_mode, "path mode used for rendering");
    render_cmd->add_option("--out", rend_out, "output directory");
    render_cmd->add_option("--seed", rend_seed, "sampling seed");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        set_thread_count(threads);
        if (gen->parsed()) return cmd_gen(gen_preset, gen_out, gen_seed, gen_spp, gen_res);
        if (train_cmd->parsed()) {
            AblationSwitches ab;
            ab.first_surface_reflection = !no_reflection;
            ab.tir = !no_tir;
            ab.corrected_distortion = !uncorrected;
            return cmd_train(train_ds, train_out, train_mode, ab, train_iters, train_batch,
                             train_seed, train_overrides);
        }
        if (eval_cmd->parsed())
            return cmd_eval(eval_ckpt, eval_ds, eval_split, eval_mode, eval_csv, eval_seed);
        if (render_cmd->parsed())
            return cmd_render(rend_ckpt, rend_ds, rend_split, rend_index, rend_depth,
                              rend_mode, rend_out, rend_seed);
    } catch (const UsageError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
