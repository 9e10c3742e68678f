#pragma once

#include "factgs/scene.hpp"
#include "factgs/vec.hpp"

namespace factgs {

/// One bilinear lookup into a tau x tau grid with texel centers at
/// (i+0.5, j+0.5) and border clamp. On exact cell boundaries the slope is
/// taken from the cell toward the lower index; in the half-texel border
/// bands the clamped indices coincide, so position derivatives vanish.
struct BilinearTap {
    int i0 = 0, i1 = 0; // column indices (u axis), clamped to [0, tau-1]
    int j0 = 0, j1 = 0; // row indices (v axis)
    double wu = 0.0, wv = 0.0;
    double w00 = 0.0, w10 = 0.0, w01 = 0.0, w11 = 0.0; // corner weights, sum to 1
};

BilinearTap bilinear_tap(int tau, double u, double v);

/// Value and position derivatives of a bilinear lookup over one channel of a
/// row-major grid with `stride` doubles per texel.
struct BilinearSample {
    double value = 0.0;
    double d_du = 0.0;
    double d_dv = 0.0;
};

BilinearSample bilinear_sample(const double* grid, int tau, int stride, int channel,
                               const BilinearTap& tap);

/// Texture-space warp Jacobian d(u',v')/d(u,v) of the unclamped warp.
struct Jacobian2 {
    Mat2 m;
    double det = 1.0;
};

/// Continuous extension of the per-texel displacement grid; out-of-domain
/// queries clamp to the border.
Vec2 eval_deformation(const DeformationField& field, double u, double v);

/// (u', v') = (u, v) + lambda * D(u, v), clamped to [0, tau]^2 before lookup.
/// `raw` optionally receives the pre-clamp warped coordinates.
Vec2 warp_uv(double u, double v, const DeformationField& field, double lambda,
             Vec2* raw = nullptr);

/// Identity plus lambda times the analytic derivative of the bilinear
/// displacement interpolant. det == 1 for constant fields.
Jacobian2 warp_jacobian(double u, double v, const DeformationField& field, double lambda);

struct TextureSample {
    Vec3 rgb;
    double alpha = 0.0; // interpolated in activated (post-logistic) space
};

/// Bilinear RGBA lookup at already-warped coordinates.
TextureSample sample_texture(const TextureMap& texture, double u_prime, double v_prime);

/// Per-channel spatial gradient of the warped lookup, the chain-rule
/// identity J^T * grad T evaluated at the warped point. Diagnostic only;
/// the render loop never calls this.
struct WarpedColorGradient {
    Vec2 r, g, b;
};

WarpedColorGradient warped_color_gradient(const TextureMap& texture, const DeformationField& field,
                                          double lambda, double u, double v);

} // namespace factgs
