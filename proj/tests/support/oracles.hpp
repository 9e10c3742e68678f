#pragma once

// Independent reference implementations used to check the library, written
// from the math directly rather than by calling into the code under test.

#include "factgs/compositor.hpp"
#include "factgs/image.hpp"
#include "factgs/scene.hpp"
#include "factgs/vec.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

namespace oracles {

inline double uniform(std::mt19937_64& rng, double lo, double hi) {
    // Portable: derive the double from the raw 64-bit draw so sequences are
    // identical across standard libraries.
    const double unit = static_cast<double>(rng() >> 11) * 0x1.0p-53;
    return lo + (hi - lo) * unit;
}

inline int uniform_int(std::mt19937_64& rng, int lo, int hi) { // inclusive bounds
    return lo + static_cast<int>(rng() % static_cast<std::uint64_t>(hi - lo + 1));
}

// ---------------------------------------------------------------------------
// Bilinear lookup written independently: pure index arithmetic over a flat
// channel array, texel centers at half-integers, borders clamped.
inline double bilinear_reference(const std::vector<double>& values, int tau, int stride,
                                 int channel, double u, double v) {
    const double fu = u - 0.5;
    const double fv = v - 0.5;
    double iu = std::floor(fu);
    double iv = std::floor(fv);
    const double au = fu - iu;
    const double av = fv - iv;
    auto texel = [&](double col, double row) {
        const int c = std::clamp(static_cast<int>(col), 0, tau - 1);
        const int r = std::clamp(static_cast<int>(row), 0, tau - 1);
        return values[(static_cast<std::size_t>(r) * tau + c) * stride + channel];
    };
    return (1.0 - av) * ((1.0 - au) * texel(iu, iv) + au * texel(iu + 1.0, iv)) +
           av * ((1.0 - au) * texel(iu, iv + 1.0) + au * texel(iu + 1.0, iv + 1.0));
}

// ---------------------------------------------------------------------------
// Direct expansion of the front-to-back blending sum: every prefix product is
// recomputed from scratch, and the background enters with the full product.
struct CompositeOracle {
    factgs::Vec3 rgb;
    double alpha = 0.0;
};

inline CompositeOracle composite_reference(const std::vector<factgs::Fragment>& frags,
                                           const factgs::Vec3& background) {
    CompositeOracle out;
    factgs::Vec3 sum{0.0, 0.0, 0.0};
    for (std::size_t i = 0; i < frags.size(); ++i) {
        double prefix = 1.0;
        for (std::size_t j = 0; j < i; ++j) prefix *= 1.0 - frags[j].weight;
        sum += frags[i].color * (frags[i].weight * prefix);
    }
    double total = 1.0;
    for (const factgs::Fragment& f : frags) total *= 1.0 - f.weight;
    out.rgb = sum + background * total;
    out.alpha = 1.0 - total;
    return out;
}

// ---------------------------------------------------------------------------
// Standalone Sobel pass with replicate padding over one texture, written
// against the raw rgb array.
inline double sobel_frequency_reference(const std::vector<double>& rgb, int tau) {
    static const int kx[3][3] = {{-1, 0, 1}, {-2, 0, 2}, {-1, 0, 1}};
    static const int ky[3][3] = {{-1, -2, -1}, {0, 0, 0}, {1, 2, 1}};
    auto texel = [&](int row, int col, int c) {
        row = std::clamp(row, 0, tau - 1);
        col = std::clamp(col, 0, tau - 1);
        return rgb[(static_cast<std::size_t>(row) * tau + col) * 3 + c];
    };
    double sum = 0.0;
    for (int c = 0; c < 3; ++c) {
        for (int row = 0; row < tau; ++row) {
            for (int col = 0; col < tau; ++col) {
                double gx = 0.0;
                double gy = 0.0;
                for (int dy = -1; dy <= 1; ++dy) {
                    for (int dx = -1; dx <= 1; ++dx) {
                        const double t = texel(row + dy, col + dx, c);
                        gx += kx[dy + 1][dx + 1] * t;
                        gy += ky[dy + 1][dx + 1] * t;
                    }
                }
                sum += std::sqrt(gx * gx + gy * gy);
            }
        }
    }
    return sum / (3.0 * tau * tau);
}

// ---------------------------------------------------------------------------
// SSIM of two constant images in closed form (variances and covariance are
// exactly zero, so only the luminance term differs from 1).
inline double ssim_constant_reference(double mu_a, double mu_b) {
    const double c1 = 0.01 * 0.01;
    return (2.0 * mu_a * mu_b + c1) / (mu_a * mu_a + mu_b * mu_b + c1);
}

// ---------------------------------------------------------------------------
// Scene and view builders for gradient and training tests. Randomized but
// always valid; primitives sit near the z=0 plane with mild tilts, textures
// and deformations carry generic nonzero content.
struct SceneParams {
    int n_primitives = 4;
    int tau = 3;
    int sh_degree = 1;
    bool nonzero_disp = true;
    double lambda = 1.0;
    double disp_amplitude = 0.4;
};

inline factgs::Scene random_scene(std::uint64_t seed, const SceneParams& p = {}) {
    std::mt19937_64 rng(seed);
    factgs::Scene scene;
    scene.xi = 3.0;
    scene.lambda = p.lambda;
    scene.background = {uniform(rng, 0.0, 0.3), uniform(rng, 0.0, 0.3), uniform(rng, 0.0, 0.3)};

    const int grid = static_cast<int>(std::ceil(std::sqrt(static_cast<double>(p.n_primitives))));
    const double delta = 2.0 / grid;
    const int coeffs = factgs::sh_coeff_count(p.sh_degree);
    scene.primitives.resize(static_cast<std::size_t>(p.n_primitives));
    for (int k = 0; k < p.n_primitives; ++k) {
        factgs::GaussianPrimitive& prim = scene.primitives[static_cast<std::size_t>(k)];
        const int row = k / grid;
        const int col = k % grid;
        prim.center = {-1.0 + (col + 0.5) * delta + uniform(rng, -0.1, 0.1),
                       1.0 - (row + 0.5) * delta + uniform(rng, -0.1, 0.1),
                       uniform(rng, -0.05, 0.05)};
        prim.quaternion = {1.0, uniform(rng, -0.15, 0.15), uniform(rng, -0.15, 0.15),
                           uniform(rng, -0.15, 0.15)};
        prim.raw_scales = {std::log(delta) + uniform(rng, -0.3, 0.3),
                           std::log(delta) + uniform(rng, -0.3, 0.3)};
        prim.raw_opacity = uniform(rng, 0.5, 2.5);
        prim.sh.resize(static_cast<std::size_t>(coeffs) * 3);
        for (double& c : prim.sh) c = uniform(rng, -0.3, 0.3);
    }
    scene.textures.resize(scene.size());
    scene.deformations.resize(scene.size());
    const std::size_t t2 = static_cast<std::size_t>(p.tau) * p.tau;
    for (std::size_t k = 0; k < scene.size(); ++k) {
        factgs::TextureMap& tex = scene.textures[k];
        tex.tau = p.tau;
        tex.rgb.resize(t2 * 3);
        tex.raw_alpha.resize(t2);
        for (double& v : tex.rgb) v = uniform(rng, -0.3, 0.4);
        for (double& v : tex.raw_alpha) v = uniform(rng, 1.0, 5.0);
        factgs::DeformationField& field = scene.deformations[k];
        field.tau = p.tau;
        field.disp.resize(t2 * 2);
        if (p.nonzero_disp) {
            for (double& v : field.disp) v = uniform(rng, -p.disp_amplitude, p.disp_amplitude);
        } else {
            std::fill(field.disp.begin(), field.disp.end(), 0.0);
        }
    }
    return scene;
}

inline factgs::Camera test_camera(int size, double angle_rad = 0.0, double radius = 3.0) {
    const factgs::Vec3 position{radius * std::sin(angle_rad), 0.0, radius * std::cos(angle_rad)};
    const factgs::Vec3 forward = factgs::normalized(position * -1.0);
    const factgs::Vec3 right =
        factgs::normalized(factgs::cross(factgs::Vec3{0.0, -1.0, 0.0}, forward));
    const factgs::Vec3 down = factgs::cross(forward, right);
    factgs::Camera cam;
    cam.width = size;
    cam.height = size;
    cam.fx = 1.2 * size;
    cam.fy = 1.2 * size;
    cam.cx = size / 2.0;
    cam.cy = size / 2.0;
    for (int r = 0; r < 3; ++r) {
        cam.rotation(r, 0) = right[r];
        cam.rotation(r, 1) = down[r];
        cam.rotation(r, 2) = forward[r];
    }
    cam.translation = position;
    return cam;
}

/// View whose reference differs from the current render by a sign-stable
/// margin everywhere, so L1 subgradients are constant under small parameter
/// perturbations (keeps finite differences of the loss well-behaved).
inline factgs::View offset_view(const factgs::Scene& scene, const factgs::Camera& camera,
                                factgs::RenderMode mode, std::uint64_t seed,
                                bool with_mask = true) {
    std::mt19937_64 rng(seed);
    const factgs::RenderOutput out = factgs::render(scene, camera, mode, 1);
    factgs::View view;
    view.camera = camera;
    view.image = out.color;
    for (double& v : view.image.pixels) {
        const double offset = uniform(rng, 0.08, 0.3);
        v = v < 0.5 ? v + offset : v - offset;
    }
    if (with_mask) {
        view.mask = out.alpha;
        for (double& v : view.mask.pixels) {
            const double offset = uniform(rng, 0.08, 0.3);
            v = v < 0.5 ? v + offset : v - offset;
        }
    }
    return view;
}

inline factgs::Image random_image(std::mt19937_64& rng, int w, int h, int c) {
    factgs::Image img(w, h, c);
    for (double& v : img.pixels) v = uniform(rng, 0.0, 1.0);
    return img;
}

} // namespace oracles
