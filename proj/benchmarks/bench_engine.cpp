// Microbenchmarks for the rendering, differentiation, and warp-sampling hot
// paths. Scenes are deterministic so numbers are comparable across runs.

#include "factgs/compositor.hpp"
#include "factgs/diff_engine.hpp"
#include "factgs/losses.hpp"
#include "factgs/scene.hpp"
#include "factgs/synthetic_bench.hpp"
#include "factgs/trainer.hpp"
#include "factgs/warp.hpp"

#include <benchmark/benchmark.h>

#include <cstdint>
#include <random>
#include <utility>
#include <vector>

namespace {

using namespace factgs;

double unit_draw(std::mt19937_64& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

// gen_scene lays out the quad with neutral textures; give the textures and
// warp fields generic content so sampling and gradients do real work.
std::pair<Scene, std::vector<View>> bench_scene(int image_size) {
    PatternSpec pattern;
    pattern.size = image_size;
    SceneGenConfig cfg;
    cfg.n_primitives = 16;
    cfg.tau = 4;
    cfg.views = 3;
    cfg.image_size = image_size;
    auto [scene, views] = gen_scene(gen_pattern(pattern), cfg);
    std::mt19937_64 rng(12345);
    for (TextureMap& tex : scene.textures) {
        for (double& v : tex.rgb) v = unit_draw(rng) - 0.5;
        for (double& v : tex.raw_alpha) v = 4.0 * unit_draw(rng);
    }
    for (DeformationField& field : scene.deformations) {
        for (double& v : field.disp) v = 0.6 * unit_draw(rng) - 0.3;
    }
    return {std::move(scene), std::move(views)};
}

void BM_RenderForward(benchmark::State& state) {
    const int size = static_cast<int>(state.range(0));
    const RenderMode mode = state.range(1) ? RenderMode::Fact : RenderMode::Uniform;
    const auto [scene, views] = bench_scene(size);
    for (auto _ : state) {
        benchmark::DoNotOptimize(render(scene, views.front().camera, mode));
    }
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(size) * size);
}
BENCHMARK(BM_RenderForward)
    ->ArgsProduct({{32, 64}, {0, 1}})
    ->ArgNames({"px", "fact"})
    ->Unit(benchmark::kMillisecond);

void BM_Backward(benchmark::State& state) {
    const int size = static_cast<int>(state.range(0));
    const bool fast = state.range(1) != 0;
    auto [scene, views] = bench_scene(size);
    views.resize(1);
    LossConfig cfg;
    TapeConfig tape;
    tape.mode = fast ? TapeConfig::Mode::Fast : TapeConfig::Mode::Deterministic;
    for (auto _ : state) {
        benchmark::DoNotOptimize(backward(scene, views, cfg, RenderMode::Fact, tape));
    }
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(size) * size);
}
BENCHMARK(BM_Backward)
    ->ArgsProduct({{32, 64}, {0, 1}})
    ->ArgNames({"px", "fast"})
    ->Unit(benchmark::kMillisecond);

void BM_SampleDirect(benchmark::State& state) {
    const auto [scene, views] = bench_scene(32);
    const TextureMap& tex = scene.textures.front();
    std::mt19937_64 rng(7);
    std::vector<double> coords(2048);
    for (double& c : coords) c = 4.0 * unit_draw(rng);
    std::size_t i = 0;
    for (auto _ : state) {
        const double u = coords[i % coords.size()];
        const double v = coords[(i + 1) % coords.size()];
        benchmark::DoNotOptimize(sample_texture(tex, u, v));
        ++i;
    }
    state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_SampleDirect);

void BM_SampleWarped(benchmark::State& state) {
    const auto [scene, views] = bench_scene(32);
    const TextureMap& tex = scene.textures.front();
    const DeformationField& field = scene.deformations.front();
    std::mt19937_64 rng(7);
    std::vector<double> coords(2048);
    for (double& c : coords) c = 4.0 * unit_draw(rng);
    std::size_t i = 0;
    for (auto _ : state) {
        const double u = coords[i % coords.size()];
        const double v = coords[(i + 1) % coords.size()];
        const Vec2 w = warp_uv(u, v, field, scene.lambda);
        benchmark::DoNotOptimize(sample_texture(tex, w.x, w.y));
        ++i;
    }
    state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_SampleWarped);

void BM_WarpJacobian(benchmark::State& state) {
    const auto [scene, views] = bench_scene(32);
    const DeformationField& field = scene.deformations.front();
    std::mt19937_64 rng(7);
    std::vector<double> coords(2048);
    for (double& c : coords) c = 4.0 * unit_draw(rng);
    std::size_t i = 0;
    for (auto _ : state) {
        const double u = coords[i % coords.size()];
        const double v = coords[(i + 1) % coords.size()];
        benchmark::DoNotOptimize(warp_jacobian(u, v, field, scene.lambda));
        ++i;
    }
    state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_WarpJacobian);

void BM_CompositeRay(benchmark::State& state) {
    const int count = static_cast<int>(state.range(0));
    std::mt19937_64 rng(99);
    std::vector<Fragment> frags(static_cast<std::size_t>(count));
    for (int k = 0; k < count; ++k) {
        frags[static_cast<std::size_t>(k)].prim = k;
        frags[static_cast<std::size_t>(k)].depth = 1.0 + k;
        frags[static_cast<std::size_t>(k)].color = {unit_draw(rng), unit_draw(rng),
                                                    unit_draw(rng)};
        frags[static_cast<std::size_t>(k)].weight = 0.2 * unit_draw(rng);
    }
    const Vec3 bg{0.1, 0.2, 0.3};
    for (auto _ : state) {
        benchmark::DoNotOptimize(composite_ray(frags, bg));
    }
    state.SetItemsProcessed(state.iterations() * count);
}
BENCHMARK(BM_CompositeRay)->Arg(4)->Arg(16)->Arg(64);

void BM_Ssim(benchmark::State& state) {
    const int size = static_cast<int>(state.range(0));
    std::mt19937_64 rng(11);
    Image a(size, size, 3);
    Image b(size, size, 3);
    for (double& v : a.pixels) v = unit_draw(rng);
    for (double& v : b.pixels) v = unit_draw(rng);
    for (auto _ : state) {
        benchmark::DoNotOptimize(ssim_index(a, b));
    }
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(size) * size);
}
BENCHMARK(BM_Ssim)->Arg(64)->Arg(128)->Unit(benchmark::kMillisecond);

void BM_AdamStep(benchmark::State& state) {
    auto [scene, views] = bench_scene(32);
    OptimizerState opt = OptimizerState::zeros_like(scene);
    GradientSet grads = GradientSet::zeros_like(scene);
    std::mt19937_64 rng(5);
    for (ParamBlock block : kParamBlocks) {
        for (double& g : grads.block(block)) g = unit_draw(rng) - 0.5;
    }
    for (auto _ : state) {
        adam_step(scene, grads, opt, LearningRates{}, AdamConfig{});
    }
    state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_AdamStep);

void BM_TrainIteration(benchmark::State& state) {
    auto [scene, views] = bench_scene(32);
    views.resize(1);
    OptimizerState opt = OptimizerState::zeros_like(scene);
    LossConfig cfg;
    for (auto _ : state) {
        auto [loss, grads] = backward(scene, views, cfg, RenderMode::Fact);
        benchmark::DoNotOptimize(loss);
        adam_step(scene, grads, opt, LearningRates{}, AdamConfig{});
    }
    state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_TrainIteration)->Unit(benchmark::kMillisecond);

} // namespace

BENCHMARK_MAIN();
