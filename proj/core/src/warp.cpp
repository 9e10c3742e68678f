#include "factgs/warp.hpp"

#include <algorithm>
#include <cmath>

namespace factgs {

namespace {

struct AxisTap {
    int lo = 0, hi = 0;
    double w = 0.0; // weight toward hi
};

AxisTap axis_tap(int tau, double coord) {
    double x = coord - 0.5;
    // ceil(x)-1 picks the lower cell when x sits exactly on a grid node.
    double f = std::ceil(x) - 1.0;
    AxisTap tap;
    tap.w = x - f;
    int lo = static_cast<int>(f);
    tap.lo = std::clamp(lo, 0, tau - 1);
    tap.hi = std::clamp(lo + 1, 0, tau - 1);
    return tap;
}

} // namespace

BilinearTap bilinear_tap(int tau, double u, double v) {
    AxisTap a = axis_tap(tau, u);
    AxisTap b = axis_tap(tau, v);
    BilinearTap tap;
    tap.i0 = a.lo;
    tap.i1 = a.hi;
    tap.j0 = b.lo;
    tap.j1 = b.hi;
    tap.wu = a.w;
    tap.wv = b.w;
    tap.w00 = (1.0 - a.w) * (1.0 - b.w);
    tap.w10 = a.w * (1.0 - b.w);
    tap.w01 = (1.0 - a.w) * b.w;
    tap.w11 = a.w * b.w;
    return tap;
}

BilinearSample bilinear_sample(const double* grid, int tau, int stride, int channel,
                               const BilinearTap& tap) {
    auto at = [&](int j, int i) { return grid[(static_cast<std::size_t>(j) * tau + i) * stride + channel]; };
    double v00 = at(tap.j0, tap.i0);
    double v10 = at(tap.j0, tap.i1);
    double v01 = at(tap.j1, tap.i0);
    double v11 = at(tap.j1, tap.i1);
    BilinearSample s;
    s.value = tap.w00 * v00 + tap.w10 * v10 + tap.w01 * v01 + tap.w11 * v11;
    // Border bands clamp both indices to the same texel, so these vanish there.
    s.d_du = (1.0 - tap.wv) * (v10 - v00) + tap.wv * (v11 - v01);
    s.d_dv = (1.0 - tap.wu) * (v01 - v00) + tap.wu * (v11 - v10);
    return s;
}

Vec2 eval_deformation(const DeformationField& field, double u, double v) {
    BilinearTap tap = bilinear_tap(field.tau, u, v);
    return {bilinear_sample(field.disp.data(), field.tau, 2, 0, tap).value,
            bilinear_sample(field.disp.data(), field.tau, 2, 1, tap).value};
}

Vec2 warp_uv(double u, double v, const DeformationField& field, double lambda, Vec2* raw) {
    Vec2 d = eval_deformation(field, u, v);
    double hi = static_cast<double>(field.tau);
    double up = u + lambda * d.x;
    double vp = v + lambda * d.y;
    if (raw) *raw = {up, vp};
    return {std::clamp(up, 0.0, hi), std::clamp(vp, 0.0, hi)};
}

Jacobian2 warp_jacobian(double u, double v, const DeformationField& field, double lambda) {
    BilinearTap tap = bilinear_tap(field.tau, u, v);
    BilinearSample du = bilinear_sample(field.disp.data(), field.tau, 2, 0, tap);
    BilinearSample dv = bilinear_sample(field.disp.data(), field.tau, 2, 1, tap);
    Jacobian2 jac;
    jac.m.m00 = 1.0 + lambda * du.d_du;
    jac.m.m01 = lambda * du.d_dv;
    jac.m.m10 = lambda * dv.d_du;
    jac.m.m11 = 1.0 + lambda * dv.d_dv;
    jac.det = jac.m.det();
    return jac;
}

TextureSample sample_texture(const TextureMap& texture, double u_prime, double v_prime) {
    BilinearTap tap = bilinear_tap(texture.tau, u_prime, v_prime);
    TextureSample s;
    s.rgb = {bilinear_sample(texture.rgb.data(), texture.tau, 3, 0, tap).value,
             bilinear_sample(texture.rgb.data(), texture.tau, 3, 1, tap).value,
             bilinear_sample(texture.rgb.data(), texture.tau, 3, 2, tap).value};
    // Alpha is interpolated between activated texels, not raw ones.
    auto raw = [&](int j, int i) { return texture.raw_alpha[static_cast<std::size_t>(j) * texture.tau + i]; };
    s.alpha = tap.w00 * logistic(raw(tap.j0, tap.i0)) + tap.w10 * logistic(raw(tap.j0, tap.i1)) +
              tap.w01 * logistic(raw(tap.j1, tap.i0)) + tap.w11 * logistic(raw(tap.j1, tap.i1));
    return s;
}

WarpedColorGradient warped_color_gradient(const TextureMap& texture, const DeformationField& field,
                                          double lambda, double u, double v) {
    Jacobian2 jac = warp_jacobian(u, v, field, lambda);
    Vec2 d = eval_deformation(field, u, v);
    BilinearTap tap = bilinear_tap(texture.tau, u + lambda * d.x, v + lambda * d.y);

    WarpedColorGradient g;
    Vec2* rows[3] = {&g.r, &g.g, &g.b};
    for (int c = 0; c < 3; ++c) {
        BilinearSample s = bilinear_sample(texture.rgb.data(), texture.tau, 3, c, tap);
        *rows[c] = jac.m.transpose_mul({s.d_du, s.d_dv});
    }
    return g;
}

} // namespace factgs
