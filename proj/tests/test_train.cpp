#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "refref/scenegen.hpp"
#include "refref/train.hpp"

using namespace refref;

namespace {

Scene far_away_scene() {
    TriMesh mesh = make_icosphere(0.05, 1, 1, {50, 0, 0});
    MediumMap media;
    media.add(1.5);
    return Scene(std::move(mesh), std::move(media));
}

Scene glass_sphere_scene() {
    TriMesh mesh = make_icosphere(0.5, 3);
    MediumMap media;
    media.add(1.5);
    return Scene(std::move(mesh), std::move(media));
}

}  // namespace

TEST_CASE("learning rate schedule: linear warmup then exponential decay") {
    TrainConfig c;
    c.iterations = 2000;
    c.lr_init = 8e-3;
    c.lr_final = 1e-3;
    c.warmup_steps = 100;
    CHECK(learning_rate(c, 0) == doctest::Approx(8e-3 / 100).epsilon(1e-12));
    CHECK(learning_rate(c, 49) == doctest::Approx(8e-3 * 0.5).epsilon(1e-12));
    CHECK(learning_rate(c, 100) == doctest::Approx(8e-3).epsilon(1e-12));
    CHECK(learning_rate(c, 1999) ==
          doctest::Approx(8e-3 * std::pow(1e-3 / 8e-3, 1899.0 / 1900.0)).epsilon(1e-9));
    for (int i = 101; i < 2000; i += 97)
        CHECK(learning_rate(c, i) < learning_rate(c, i - 1));
}

TEST_CASE("single-sample gradient matches the hand derivation") {
    Scene scene = far_away_scene();
    VoxelField field(2, 2, 2, {-1, -1, -1}, {1, 1, 1}, 0);
    const double p0 = -0.5, c0 = 0.8;
    for (int64_t node = 0; node < 8; ++node) {
        field.parameters()[field.density_index(node)] = p0;
        for (int ch = 0; ch < 3; ++ch) field.parameters()[field.sh_index(node, ch, 0)] = c0;
    }

    TrainConfig config;
    config.render.n_uniform = 1;
    config.render.n_resample = 0;
    config.render.t_near = 0.1;
    config.render.t_far = 0.9;
    config.lambda_dist = 0.01;
    config.batch_size = 1;

    std::vector<TrainRay> rays(1);
    rays[0].origin = {-0.45, 0.01, 0.02};
    rays[0].direction = {1, 0, 0};
    rays[0].target_srgb = {0.2, 0.3, 0.4};

    std::vector<double> grads;
    LossReport report = backward(scene, field, rays, config, 0, grads);
    REQUIRE(grads.size() == static_cast<size_t>(field.parameter_count()));

    // Forward pass by hand: constant field, one interval of width 0.8.
    const double kY00 = 0.28209479177387814;
    double sigma = softplus(p0);
    double c = sigmoid(c0 * kY00);
    double dt = 0.8, span = 0.8;
    double w = 1.0 - std::exp(-sigma * dt);
    double lin = w * c;
    double yhat = linear_to_srgb(lin);
    double loss = 0;
    for (double y : {0.2, 0.3, 0.4}) loss += (yhat - y) * (yhat - y) / 3.0;
    double dist = w * w * (dt / span) / 3.0;
    CHECK(report.rgb == doctest::Approx(loss).epsilon(1e-10));
    CHECK(report.dist == doctest::Approx(dist).epsilon(1e-10));
    CHECK(report.total == doctest::Approx(loss + 0.01 * dist).epsilon(1e-10));

    // d(total)/dw, then through w -> sigma -> preactivation.
    double dL_dw = 0;
    for (double y : {0.2, 0.3, 0.4})
        dL_dw += (2.0 / 3.0) * (yhat - y) * linear_to_srgb_derivative(lin) * c;
    dL_dw += 0.01 * (2.0 / 3.0) * w * (dt / span);
    double dw_dsigma = dt * std::exp(-sigma * dt);
    double expect_density = dL_dw * dw_dsigma * softplus_derivative(p0);
    double got_density = 0;
    for (int64_t node = 0; node < 8; ++node) got_density += grads[field.density_index(node)];
    CHECK(got_density == doctest::Approx(expect_density).epsilon(1e-6));  // float-accumulated

    // Color path: loss -> srgb -> sigmoid -> SH coefficient.
    for (int ch = 0; ch < 3; ++ch) {
        double y = 0.2 + 0.1 * ch;
        double expect_color = (2.0 / 3.0) * (yhat - y) * linear_to_srgb_derivative(lin) *
                              w * c * (1.0 - c) * kY00;
        double got = 0;
        for (int64_t node = 0; node < 8; ++node) got += grads[field.sh_index(node, ch, 0)];
        CHECK(got == doctest::Approx(expect_color).epsilon(1e-6));
    }
}

TEST_CASE("matching target on an empty field yields exactly zero gradients") {
    Scene scene = far_away_scene();
    VoxelField field(4, 4, 4, {-2, -2, -2}, {2, 2, 2}, 1);
    for (int64_t node = 0; node < field.node_count(); ++node)
        field.parameters()[field.density_index(node)] = -50.0;  // density ~ 2e-22

    TrainConfig config;
    config.render.n_uniform = 16;
    config.render.n_resample = 8;
    std::vector<TrainRay> rays(4);
    for (int i = 0; i < 4; ++i) {
        rays[i].origin = {-1.5, 0.1 * i, 0.05};
        rays[i].direction = normalize(Vec3{1, 0.02 * i, 0});
        rays[i].target_srgb = {0, 0, 0};  // what an empty field renders
    }
    std::vector<double> grads;
    LossReport report = backward(scene, field, rays, config, 0, grads);
    CHECK(report.rgb == doctest::Approx(0.0));
    for (double g : grads) CHECK(g == 0.0);
}

TEST_CASE("reverse-mode gradients match finite differences on a bent path") {
    Scene scene = glass_sphere_scene();
    VoxelField field(8, 8, 8, {-2, -2, -2}, {2, 2, 2}, 2);
    Rng rng(31, 0);
    for (double& p : field.parameters()) p = (rng.next_double() - 0.5) * 2.0;

    TrainConfig config;
    config.render.n_uniform = 40;
    // No pdf pass here: resampled positions depend on the parameters, so
    // finite differences would pick up the sampling shift that the analytic
    // gradient (correctly) treats as fixed.
    config.render.n_resample = 0;
    config.lambda_dist = 0.01;

    // Rays through the glass sphere so the paths actually bend.
    std::vector<TrainRay> rays;
    int bent = 0;
    for (int i = 0; i < 16; ++i) {
        TrainRay r;
        r.origin = {-1.6, -0.3 + 0.04 * i, 0.05};
        r.direction = normalize(Vec3{1.0, 0.18 - 0.022 * i, -0.02});
        r.target_srgb = {0.2 + 0.03 * i / 16.0, 0.5, 0.3};
        PiecewisePath p = trace_refraction_path(scene, r.origin, r.direction);
        bent += p.bend_count() > 0;
        rays.push_back(r);
    }
    CHECK(bent >= 12);

    std::vector<double> grads;
    backward(scene, field, rays, config, 0, grads);

    // The 50 largest entries, checked against central differences.
    std::vector<int64_t> order(grads.size());
    std::iota(order.begin(), order.end(), 0);
    std::partial_sort(order.begin(), order.begin() + 50, order.end(),
                      [&](int64_t a, int64_t b) {
                          return std::abs(grads[a]) > std::abs(grads[b]);
                      });
    const double h = 1e-4;
    std::vector<double> scratch;
    for (int k = 0; k < 50; ++k) {
        int64_t i = order[k];
        double saved = field.parameters()[i];
        field.parameters()[i] = saved + h;
        double up = backward(scene, field, rays, config, 0, scratch).total;
        field.parameters()[i] = saved - h;
        double down = backward(scene, field, rays, config, 0, scratch).total;
        field.parameters()[i] = saved;
        double fd = (up - down) / (2 * h);
        CHECK(std::abs(grads[i] - fd) / std::max(1e-12, std::abs(fd)) <= 1e-4);
    }
}

TEST_CASE("training fits a constant image") {
    Scene scene = far_away_scene();
    std::vector<Camera> cameras;
    cameras.push_back(look_at_camera({1.6, 0, 0.2}, {0, 0, 0}, 0.6911112070083618, 8, 8));
    cameras.push_back(look_at_camera({-1.2, 1.0, -0.2}, {0, 0, 0}, 0.6911112070083618, 8, 8));
    std::vector<Image> images;
    for (int v = 0; v < 2; ++v) {
        Image img(8, 8, 3);
        std::fill(img.data.begin(), img.data.end(), 0.5f);
        images.push_back(img);
    }

    TrainConfig config;
    config.iterations = 800;
    config.batch_size = 128;
    config.warmup_steps = 10;
    config.grid_resolution = 8;
    config.sh_degree = 0;
    config.render.n_uniform = 32;
    config.render.n_resample = 16;
    config.lambda_dist = 0.0;
    config.seed = 5;
    config.log_every = 0;

    VoxelField field = train(scene, cameras, images, config);
    Rng rng(1, 0);
    RenderConfig render = config.effective_render();
    int checked = 0;
    for (int x = 1; x < 8; x += 3)
        for (int y = 1; y < 8; y += 3) {
            auto [o, d] = cameras[0].ray(x, y);
            RenderedPixel px = render_pixel(scene, field, o, d, render, rng);
            for (double v : {px.srgb.x, px.srgb.y, px.srgb.z})
                CHECK(v == doctest::Approx(0.5).epsilon(2.0 / 255 / 0.5));
            ++checked;
        }
    CHECK(checked > 0);
}

TEST_CASE("training is bitwise deterministic for a fixed seed") {
    Scene scene = glass_sphere_scene();
    std::vector<Camera> cameras{
        look_at_camera({1.6, 0.2, 0.3}, {0, 0, 0}, 0.6911112070083618, 8, 8)};
    Image img(8, 8, 3);
    for (int y = 0; y < 8; ++y)
        for (int x = 0; x < 8; ++x)
            img.set_pixel(x, y, {0.1 + 0.1 * (x % 3), 0.5, 0.2 + 0.05 * y});
    std::vector<Image> images{img};

    TrainConfig config;
    config.iterations = 40;
    config.batch_size = 32;
    config.warmup_steps = 5;
    config.grid_resolution = 6;
    config.sh_degree = 1;
    config.render.n_uniform = 16;
    config.render.n_resample = 8;
    config.seed = 11;
    config.log_every = 0;

    VoxelField a = train(scene, cameras, images, config);
    VoxelField b = train(scene, cameras, images, config);
    REQUIRE(a.parameter_count() == b.parameter_count());
    for (int64_t i = 0; i < a.parameter_count(); ++i)
        CHECK(a.parameters()[i] == b.parameters()[i]);  // exact equality
}

TEST_CASE("training aborts when the loss diverges") {
    Scene scene = far_away_scene();
    std::vector<Camera> cameras{
        look_at_camera({1.6, 0, 0}, {0, 0, 0}, 0.6911112070083618, 8, 8)};
    TrainConfig config;
    config.iterations = 2000;
    config.batch_size = 32;
    config.warmup_steps = 0;
    config.lr_init = 50.0;  // absurd step size: parameters oscillate wildly
    config.lr_final = 50.0;
    config.grid_resolution = 6;
    config.sh_degree = 0;
    config.render.n_uniform = 16;
    config.render.n_resample = 8;
    config.seed = 3;
    config.log_every = 0;

    // Targets rendered from the untrained field, so the loss starts near
    // zero and any blow-up trips the 10x divergence guard.
    VoxelField init(config.grid_resolution, config.grid_resolution,
                    config.grid_resolution, config.grid_lower, config.grid_upper,
                    config.sh_degree);
    for (int64_t node = 0; node < init.node_count(); ++node)
        init.parameters()[init.density_index(node)] = config.init_density_preact;
    FieldViewRender view =
        render_field_view(scene, init, cameras[0], config.effective_render(), 1);
    std::vector<Image> images{view.image};

    CHECK_THROWS(train(scene, cameras, images, config));
}
