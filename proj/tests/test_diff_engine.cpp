#include "doctest.h"

#include "factgs/compositor.hpp"
#include "factgs/diff_engine.hpp"
#include "factgs/scene.hpp"

#include "support/oracles.hpp"

#include <cmath>
#include <cstring>
#include <random>
#include <vector>

using namespace factgs;

namespace {

LossConfig l1_only() {
    LossConfig cfg;
    cfg.eta = 1.0; // similarity windows do not fit the tiny gradcheck views
    cfg.mask_weight = 1.0;
    return cfg;
}

bool all_zero(const std::vector<double>& v) {
    for (double x : v)
        if (x != 0.0) return false;
    return true;
}

bool sets_equal(const GradientSet& a, const GradientSet& b) {
    const auto eq = [](const std::vector<double>& x, const std::vector<double>& y) {
        return x.size() == y.size() &&
               (x.empty() || std::memcmp(x.data(), y.data(), x.size() * sizeof(double)) == 0);
    };
    return eq(a.center, b.center) && eq(a.quaternion, b.quaternion) &&
           eq(a.raw_scales, b.raw_scales) && eq(a.raw_opacity, b.raw_opacity) &&
           eq(a.sh, b.sh) && eq(a.rgb, b.rgb) && eq(a.raw_alpha, b.raw_alpha) &&
           eq(a.disp, b.disp);
}

double max_set_diff(const GradientSet& a, const GradientSet& b) {
    double worst = 0.0;
    const auto scan = [&](const std::vector<double>& x, const std::vector<double>& y) {
        for (std::size_t i = 0; i < x.size(); ++i)
            worst = std::max(worst, std::abs(x[i] - y[i]));
    };
    scan(a.center, b.center);
    scan(a.quaternion, b.quaternion);
    scan(a.raw_scales, b.raw_scales);
    scan(a.raw_opacity, b.raw_opacity);
    scan(a.sh, b.sh);
    scan(a.rgb, b.rgb);
    scan(a.raw_alpha, b.raw_alpha);
    scan(a.disp, b.disp);
    return worst;
}

} // namespace

TEST_CASE("gradients of a random textured scene pass finite differences") {
    // Texture sampling is piecewise linear, so the scene must keep every
    // perturbed coordinate clear of cell boundaries at the probe step; this
    // seed does (verified against shrinking steps, where all seeds converge).
    const Scene scene = oracles::random_scene(9002);
    const Camera cam = oracles::test_camera(8);
    const std::vector<View> views = {oracles::offset_view(scene, cam, RenderMode::Fact, 1, true)};
    const GradCheckReport report = grad_check(scene, views, l1_only(), RenderMode::Fact);
    for (const BlockReport& block : report.blocks) {
        INFO("block ", static_cast<int>(block.block), " rel ", block.max_rel_error);
        CHECK(block.pass);
    }
    CHECK(report.pass);
}

TEST_CASE("gradients with a frozen warp field pass finite differences") {
    oracles::SceneParams params;
    params.nonzero_disp = false;
    const Scene scene = oracles::random_scene(9002, params);
    const Camera cam = oracles::test_camera(8, 0.2);
    const std::vector<View> views = {
        oracles::offset_view(scene, cam, RenderMode::Fact, 2, true)};
    CHECK(grad_check(scene, views, l1_only(), RenderMode::Fact).pass);
}

TEST_CASE("untextured rendering passes finite differences") {
    const Scene scene = oracles::random_scene(9003);
    const Camera cam = oracles::test_camera(8, -0.15);
    const std::vector<View> views = {
        oracles::offset_view(scene, cam, RenderMode::NoTexture, 3, true)};
    CHECK(grad_check(scene, views, l1_only(), RenderMode::NoTexture).pass);
}

TEST_CASE("a zero tolerance flags every block") {
    const Scene scene = oracles::random_scene(9004);
    const Camera cam = oracles::test_camera(8);
    const std::vector<View> views = {oracles::offset_view(scene, cam, RenderMode::Fact, 4, true)};
    const GradCheckReport report =
        grad_check(scene, views, l1_only(), RenderMode::Fact, 1e-4, 0.0, 0.0);
    CHECK(!report.pass);
    for (const BlockReport& block : report.blocks) CHECK(!block.pass);
}

TEST_CASE("a disabled warp scale yields exactly zero displacement gradients") {
    Scene scene = oracles::random_scene(9005);
    scene.lambda = 0.0;
    const Camera cam = oracles::test_camera(8);
    const std::vector<View> views = {oracles::offset_view(scene, cam, RenderMode::Fact, 5, true)};
    const auto [loss, grads] = backward(scene, views, l1_only(), RenderMode::Fact);
    CHECK(loss > 0.0);
    CHECK(all_zero(grads.disp));
    CHECK(!all_zero(grads.rgb)); // the texture itself still receives signal
}

TEST_CASE("an exact reconstruction receives zero gradient everywhere") {
    const Scene scene = oracles::random_scene(9006);
    const Camera cam = oracles::test_camera(8);
    const RenderOutput out = render(scene, cam, RenderMode::Fact);
    View view;
    view.camera = cam;
    view.image = out.color;
    view.mask = out.alpha;
    const auto [loss, grads] = backward(scene, {view}, l1_only(), RenderMode::Fact);
    CHECK(loss == 0.0);
    CHECK(all_zero(grads.center));
    CHECK(all_zero(grads.quaternion));
    CHECK(all_zero(grads.raw_scales));
    CHECK(all_zero(grads.raw_opacity));
    CHECK(all_zero(grads.sh));
    CHECK(all_zero(grads.rgb));
    CHECK(all_zero(grads.raw_alpha));
    CHECK(all_zero(grads.disp));
}

TEST_CASE("view averaging is linear in the view list") {
    std::mt19937_64 rng(9100);
    for (int i = 0; i < 200; ++i) {
        oracles::SceneParams params;
        params.n_primitives = 2;
        const Scene scene = oracles::random_scene(9100 + i, params);
        const Camera cam_a = oracles::test_camera(8, 0.1);
        const Camera cam_b = oracles::test_camera(8, -0.2);
        const View va = oracles::offset_view(scene, cam_a, RenderMode::Fact, 10 + i, true);
        const View vb = oracles::offset_view(scene, cam_b, RenderMode::Fact, 20 + i, true);

        const auto [loss_a, grad_a] = backward(scene, va, l1_only(), RenderMode::Fact);
        const auto [loss_b, grad_b] = backward(scene, vb, l1_only(), RenderMode::Fact);
        const auto [loss_ab, grad_ab] = backward(scene, {va, vb}, l1_only(), RenderMode::Fact);

        CHECK(std::abs(loss_ab - 0.5 * (loss_a + loss_b)) <= 1e-10);
        GradientSet mean = grad_a;
        const auto blend = [](std::vector<double>& x, const std::vector<double>& y) {
            for (std::size_t k = 0; k < x.size(); ++k) x[k] = 0.5 * (x[k] + y[k]);
        };
        blend(mean.center, grad_b.center);
        blend(mean.quaternion, grad_b.quaternion);
        blend(mean.raw_scales, grad_b.raw_scales);
        blend(mean.raw_opacity, grad_b.raw_opacity);
        blend(mean.sh, grad_b.sh);
        blend(mean.rgb, grad_b.rgb);
        blend(mean.raw_alpha, grad_b.raw_alpha);
        blend(mean.disp, grad_b.disp);
        CHECK(max_set_diff(grad_ab, mean) <= 1e-10);

        // Duplicating a view leaves the mean untouched.
        const auto [loss_dup, grad_dup] = backward(scene, {va, va}, l1_only(), RenderMode::Fact);
        CHECK(std::abs(loss_dup - loss_a) <= 1e-12);
        CHECK(max_set_diff(grad_dup, grad_a) <= 1e-12);
    }
}

TEST_CASE("the loss terms scale their gradients independently") {
    std::mt19937_64 rng(9200);
    for (int i = 0; i < 200; ++i) {
        oracles::SceneParams params;
        params.n_primitives = 2;
        const Scene scene = oracles::random_scene(9200 + i, params);
        const Camera cam = oracles::test_camera(8);
        const View view = oracles::offset_view(scene, cam, RenderMode::Fact, 30 + i, true);

        LossConfig cfg = l1_only();
        const double a = oracles::uniform(rng, 0.2, 1.5);
        const double b = oracles::uniform(rng, 0.2, 1.5);
        cfg.mask_weight = a;
        const auto [loss_a, grad_a] = backward(scene, view, cfg, RenderMode::Fact);
        cfg.mask_weight = b;
        const auto [loss_b, grad_b] = backward(scene, view, cfg, RenderMode::Fact);
        cfg.mask_weight = a + b;
        const auto [loss_ab, grad_ab] = backward(scene, view, cfg, RenderMode::Fact);
        cfg.mask_weight = 0.0;
        const auto [loss_0, grad_0] = backward(scene, view, cfg, RenderMode::Fact);

        CHECK(std::abs((loss_ab - loss_0) - (loss_a - loss_0) - (loss_b - loss_0)) <= 1e-10);
        GradientSet combined = grad_a;
        const auto fold = [](std::vector<double>& x, const std::vector<double>& y,
                             const std::vector<double>& z) {
            for (std::size_t k = 0; k < x.size(); ++k) x[k] = x[k] + y[k] - z[k];
        };
        fold(combined.center, grad_b.center, grad_0.center);
        fold(combined.quaternion, grad_b.quaternion, grad_0.quaternion);
        fold(combined.raw_scales, grad_b.raw_scales, grad_0.raw_scales);
        fold(combined.raw_opacity, grad_b.raw_opacity, grad_0.raw_opacity);
        fold(combined.sh, grad_b.sh, grad_0.sh);
        fold(combined.rgb, grad_b.rgb, grad_0.rgb);
        fold(combined.raw_alpha, grad_b.raw_alpha, grad_0.raw_alpha);
        fold(combined.disp, grad_b.disp, grad_0.disp);
        CHECK(max_set_diff(grad_ab, combined) <= 1e-10);
    }
}

TEST_CASE("fragments hidden by the transmittance cutoff get zero gradient") {
    std::mt19937_64 rng(9300);
    for (int i = 0; i < 200; ++i) {
        // Opaque front splat fully covering a smaller rear splat.
        Scene scene;
        GaussianPrimitive front;
        front.quaternion = Quat{1.0, 0.0, 0.0, 0.0};
        front.center = Vec3{0.0, 0.0, 1.0};
        // Enormous footprint: every ray's transmittance drops below the
        // cutoff right after this fragment, truncating the rear one.
        front.raw_scales = {std::log(200.0), std::log(200.0)};
        front.raw_opacity = 40.0;
        front.sh.assign(3, 0.0);
        GaussianPrimitive rear = front;
        rear.center = Vec3{oracles::uniform(rng, -0.05, 0.05), oracles::uniform(rng, -0.05, 0.05),
                           0.0};
        rear.raw_scales = {std::log(0.05), std::log(0.05)};
        rear.raw_opacity = oracles::uniform(rng, -1.0, 2.0);
        for (double& c : rear.sh) c = oracles::uniform(rng, -0.4, 0.4);
        scene.primitives = {front, rear};
        TextureMap opaque = make_neutral_texture(2);
        for (double& v : opaque.raw_alpha) v = 40.0;
        TextureMap rear_tex = make_neutral_texture(2);
        for (double& v : rear_tex.rgb) v = oracles::uniform(rng, -0.4, 0.4);
        scene.textures = {opaque, rear_tex};
        scene.deformations = {make_zero_deformation(2), make_zero_deformation(2)};

        const Camera cam = oracles::test_camera(8);
        const View view = oracles::offset_view(scene, cam, RenderMode::Fact, 40 + i, true);
        const auto [loss, grads] = backward(scene, view, l1_only(), RenderMode::Fact);
        CHECK(loss > 0.0);
        // Rear primitive: parameter slices for primitive index 1.
        for (int k = 0; k < 3; ++k) CHECK(grads.center[3 + k] == 0.0);
        for (int k = 0; k < 4; ++k) CHECK(grads.quaternion[4 + k] == 0.0);
        for (int k = 0; k < 2; ++k) CHECK(grads.raw_scales[2 + k] == 0.0);
        CHECK(grads.raw_opacity[1] == 0.0);
        for (int k = 0; k < 3; ++k) CHECK(grads.sh[3 + k] == 0.0);
        for (int k = 0; k < 12; ++k) CHECK(grads.rgb[12 + k] == 0.0);
        for (int k = 0; k < 4; ++k) CHECK(grads.raw_alpha[4 + k] == 0.0);
        for (int k = 0; k < 8; ++k) CHECK(grads.disp[8 + k] == 0.0);
        // The front primitive still learns.
        const bool front_learns = !all_zero(grads.raw_opacity) || !all_zero(grads.sh);
        CHECK(front_learns);
    }
}

TEST_CASE("deterministic accumulation is bit-identical across thread counts") {
    for (int i = 0; i < 200; ++i) {
        oracles::SceneParams params;
        params.n_primitives = 2;
        const Scene scene = oracles::random_scene(9400 + i, params);
        const Camera cam = oracles::test_camera(8, 0.05 * (i % 5));
        const View view = oracles::offset_view(scene, cam, RenderMode::Fact, 50 + i, true);

        TapeConfig tape;
        tape.mode = TapeConfig::Mode::Deterministic;
        tape.threads = 1;
        const auto [loss_serial, grad_serial] =
            backward(scene, view, l1_only(), RenderMode::Fact, tape);
        tape.threads = 4;
        const auto [loss_mt, grad_mt] = backward(scene, view, l1_only(), RenderMode::Fact, tape);
        CHECK(loss_serial == loss_mt);
        CHECK(sets_equal(grad_serial, grad_mt));
        const auto [loss_again, grad_again] =
            backward(scene, view, l1_only(), RenderMode::Fact, tape);
        CHECK(loss_mt == loss_again);
        CHECK(sets_equal(grad_mt, grad_again));
    }
}

TEST_CASE("fast accumulation stays within tolerance of deterministic") {
    for (int i = 0; i < 50; ++i) {
        const Scene scene = oracles::random_scene(9500 + i);
        const Camera cam = oracles::test_camera(12);
        const View view = oracles::offset_view(scene, cam, RenderMode::Fact, 60 + i, true);

        TapeConfig det;
        det.mode = TapeConfig::Mode::Deterministic;
        TapeConfig fast;
        fast.mode = TapeConfig::Mode::Fast;
        fast.threads = 4;
        const auto [loss_det, grad_det] = backward(scene, view, l1_only(), RenderMode::Fact, det);
        const auto [loss_fast, grad_fast] =
            backward(scene, view, l1_only(), RenderMode::Fact, fast);
        CHECK(std::abs(loss_det - loss_fast) <= 1e-10);
        CHECK(max_set_diff(grad_det, grad_fast) <= 1e-5);
    }
}

TEST_CASE("the reported loss equals the forward objective") {
    for (int i = 0; i < 20; ++i) {
        const Scene scene = oracles::random_scene(9600 + i);
        const Camera cam = oracles::test_camera(8);
        const std::vector<View> views = {
            oracles::offset_view(scene, cam, RenderMode::Fact, 70 + i, true)};
        LossConfig cfg = l1_only();
        cfg.fold_reg_weight = (i % 2 == 0) ? 0.0 : 0.5;
        const double fwd = forward_loss(scene, views, cfg, RenderMode::Fact);
        const auto [bwd, grads] = backward(scene, views, cfg, RenderMode::Fact);
        CHECK(fwd == doctest::Approx(bwd).epsilon(1e-14));
    }
}

TEST_CASE("fold regularization pushes displacement gradients toward unfolding") {
    Scene scene = oracles::random_scene(9700);
    const int tau = scene.tau();
    // Fold one field hard so the penalty is active.
    for (int j = 0; j < tau; ++j)
        for (int i = 0; i < tau; ++i)
            scene.deformations[0].disp[2 * (j * tau + i)] = -2.5 * (i + 0.5);
    scene.lambda = 1.0;
    const Camera cam = oracles::test_camera(8);
    const View view = oracles::offset_view(scene, cam, RenderMode::Fact, 80, true);

    LossConfig cfg = l1_only();
    cfg.fold_reg_weight = 0.0;
    const auto [loss_off, grad_off] = backward(scene, view, cfg, RenderMode::Fact);
    cfg.fold_reg_weight = 1.0;
    const auto [loss_on, grad_on] = backward(scene, view, cfg, RenderMode::Fact);
    CHECK(loss_on == doctest::Approx(loss_off + fold_penalty(scene)).epsilon(1e-12));
    CHECK(!sets_equal(grad_off, grad_on));
    // Central-difference check of the penalty term through the full backward.
    const double h = 1e-5;
    std::mt19937_64 rng(9701);
    for (int probe = 0; probe < 10; ++probe) {
        const int idx = oracles::uniform_int(
            rng, 0, static_cast<int>(scene.deformations[0].disp.size()) - 1);
        Scene plus = scene;
        plus.deformations[0].disp[idx] += h;
        Scene minus = scene;
        minus.deformations[0].disp[idx] -= h;
        const double fd = (forward_loss(plus, {view}, cfg, RenderMode::Fact) -
                           forward_loss(minus, {view}, cfg, RenderMode::Fact)) /
                          (2 * h);
        const double got = grad_on.disp[idx];
        CHECK(std::abs(got - fd) <= 1e-3 * std::max({1.0, std::abs(got), std::abs(fd)}));
    }
}
