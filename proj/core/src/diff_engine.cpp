#include "factgs/diff_engine.hpp"

#include "factgs/errors.hpp"
#include "factgs/parallel.hpp"
#include "factgs/warp.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace factgs {

GradientSet GradientSet::zeros_like(const Scene& scene) {
    GradientSet g;
    for (ParamBlock b : kParamBlocks) g.block(b).assign(param_block_size(scene, b), 0.0);
    return g;
}

std::vector<double>& GradientSet::block(ParamBlock b) {
    switch (b) {
        case ParamBlock::Center: return center;
        case ParamBlock::Quaternion: return quaternion;
        case ParamBlock::RawScales: return raw_scales;
        case ParamBlock::RawOpacity: return raw_opacity;
        case ParamBlock::Sh: return sh;
        case ParamBlock::Rgb: return rgb;
        case ParamBlock::RawAlpha: return raw_alpha;
        case ParamBlock::Disp: return disp;
    }
    return center; // unreachable
}

const std::vector<double>& GradientSet::block(ParamBlock b) const {
    return const_cast<GradientSet*>(this)->block(b);
}

void GradientSet::accumulate(const GradientSet& other) {
    for (ParamBlock b : kParamBlocks) {
        std::vector<double>& dst = block(b);
        const std::vector<double>& src = other.block(b);
        for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
    }
}

namespace {

// Partials of the basis vectors with respect to the normalized quaternion
// components (w, x, y, z), read off the rotation-matrix entries.
struct QuatBasisDerivs {
    Vec3 dtb[4], dtg[4], dn[4];
};

QuatBasisDerivs quat_basis_derivs(const Quat& q) {
    const double w = q.w, x = q.x, y = q.y, z = q.z;
    QuatBasisDerivs d;
    // t_beta = (1-2(y^2+z^2), 2(xy+wz), 2(xz-wy))
    d.dtb[0] = {0.0, 2.0 * z, -2.0 * y};
    d.dtb[1] = {0.0, 2.0 * y, 2.0 * z};
    d.dtb[2] = {-4.0 * y, 2.0 * x, -2.0 * w};
    d.dtb[3] = {-4.0 * z, 2.0 * w, 2.0 * x};
    // t_gamma = (2(xy-wz), 1-2(x^2+z^2), 2(yz+wx))
    d.dtg[0] = {-2.0 * z, 0.0, 2.0 * x};
    d.dtg[1] = {2.0 * y, -4.0 * x, 2.0 * w};
    d.dtg[2] = {2.0 * x, 0.0, 2.0 * z};
    d.dtg[3] = {-2.0 * w, -4.0 * z, 2.0 * y};
    // n = (2(xz+wy), 2(yz-wx), 1-2(x^2+y^2))
    d.dn[0] = {2.0 * y, -2.0 * x, 0.0};
    d.dn[1] = {2.0 * z, -2.0 * w, -4.0 * x};
    d.dn[2] = {2.0 * w, 2.0 * z, -4.0 * y};
    d.dn[3] = {2.0 * x, 2.0 * y, 0.0};
    return d;
}

bool inside(double raw, double lo, double hi) { return raw >= lo && raw <= hi; }

// Adjoint of one fragment's shading: distributes dL/d(color) and
// dL/d(weight) onto every parameter the fragment touched.
void fragment_backward(const Scene& scene, const ActivatedPrimitive& act, int prim,
                       RenderMode mode, const Ray& ray, const Intersection& isect,
                       const ShadeDetail& det, const Vec3& gc, double gw, GradientSet& grads) {
    const std::size_t k = static_cast<std::size_t>(prim);
    const double footprint = det.footprint;
    const double alpha_tex = det.tex_alpha;
    const double opacity = act.opacity;

    // weight = alpha_tex * footprint * opacity
    const double g_alpha_tex = det.textured ? gw * footprint * opacity : 0.0;
    const double g_footprint = gw * alpha_tex * opacity;
    const double g_opacity = gw * alpha_tex * footprint;
    grads.raw_opacity[k] += g_opacity * opacity * (1.0 - opacity);

    // color = c_tex + clamp0(base_raw); the SH clamp gates per channel.
    const double gbase[3] = {det.base_raw.x >= 0.0 ? gc.x : 0.0,
                             det.base_raw.y >= 0.0 ? gc.y : 0.0,
                             det.base_raw.z >= 0.0 ? gc.z : 0.0};
    {
        double basis[16];
        sh_basis(ray.direction, act.sh_degree, basis);
        const int coeffs = sh_coeff_count(act.sh_degree);
        double* dst = grads.sh.data() + k * static_cast<std::size_t>(coeffs) * 3;
        for (int l = 0; l < coeffs; ++l) {
            dst[3 * l + 0] += gbase[0] * basis[l];
            dst[3 * l + 1] += gbase[1] * basis[l];
            dst[3 * l + 2] += gbase[2] * basis[l];
        }
    }

    // Footprint path: G = exp(-(beta^2+gamma^2)/2).
    double g_beta = g_footprint * (-isect.beta) * footprint;
    double g_gamma = g_footprint * (-isect.gamma) * footprint;

    if (det.textured) {
        const TextureMap& tex = scene.textures[k];
        const int tau = tex.tau;
        const std::size_t t2 = static_cast<std::size_t>(tau) * tau;

        // Texture lookup at the warped point.
        const BilinearTap tap = bilinear_tap(tau, det.warped.x, det.warped.y);
        const std::size_t c00 = static_cast<std::size_t>(tap.j0) * tau + tap.i0;
        const std::size_t c10 = static_cast<std::size_t>(tap.j0) * tau + tap.i1;
        const std::size_t c01 = static_cast<std::size_t>(tap.j1) * tau + tap.i0;
        const std::size_t c11 = static_cast<std::size_t>(tap.j1) * tau + tap.i1;

        double gu = 0.0, gv = 0.0; // dL/d(warped u, v)
        {
            double* drgb = grads.rgb.data() + k * t2 * 3;
            const double gch[3] = {gc.x, gc.y, gc.z};
            for (int c = 0; c < 3; ++c) {
                const BilinearSample s = bilinear_sample(tex.rgb.data(), tau, 3, c, tap);
                gu += gch[c] * s.d_du;
                gv += gch[c] * s.d_dv;
                drgb[c00 * 3 + c] += gch[c] * tap.w00;
                drgb[c10 * 3 + c] += gch[c] * tap.w10;
                drgb[c01 * 3 + c] += gch[c] * tap.w01;
                drgb[c11 * 3 + c] += gch[c] * tap.w11;
            }
        }
        {
            // Alpha interpolates activated texels: a = logistic(raw).
            const double* rawa = tex.raw_alpha.data();
            const double a00 = logistic(rawa[c00]), a10 = logistic(rawa[c10]);
            const double a01 = logistic(rawa[c01]), a11 = logistic(rawa[c11]);
            gu += g_alpha_tex * ((1.0 - tap.wv) * (a10 - a00) + tap.wv * (a11 - a01));
            gv += g_alpha_tex * ((1.0 - tap.wu) * (a01 - a00) + tap.wu * (a11 - a10));
            double* da = grads.raw_alpha.data() + k * t2;
            da[c00] += g_alpha_tex * tap.w00 * a00 * (1.0 - a00);
            da[c10] += g_alpha_tex * tap.w10 * a10 * (1.0 - a10);
            da[c01] += g_alpha_tex * tap.w01 * a01 * (1.0 - a01);
            da[c11] += g_alpha_tex * tap.w11 * a11 * (1.0 - a11);
        }

        const double hi = static_cast<double>(tau);
        if (mode == RenderMode::Fact && !scene.deformations.empty()) {
            // Post-warp clamp subgradient.
            gu = inside(det.warped_raw.x, 0.0, hi) ? gu : 0.0;
            gv = inside(det.warped_raw.y, 0.0, hi) ? gv : 0.0;

            const DeformationField& field = scene.deformations[k];
            const BilinearTap dtap = bilinear_tap(tau, det.uv.x, det.uv.y);
            const std::size_t d00 = static_cast<std::size_t>(dtap.j0) * tau + dtap.i0;
            const std::size_t d10 = static_cast<std::size_t>(dtap.j0) * tau + dtap.i1;
            const std::size_t d01 = static_cast<std::size_t>(dtap.j1) * tau + dtap.i0;
            const std::size_t d11 = static_cast<std::size_t>(dtap.j1) * tau + dtap.i1;

            // (u', v') = (u, v) + lambda * D(u, v): displacement corners.
            double* dd = grads.disp.data() + k * t2 * 2;
            dd[d00 * 2 + 0] += scene.lambda * gu * dtap.w00;
            dd[d10 * 2 + 0] += scene.lambda * gu * dtap.w10;
            dd[d01 * 2 + 0] += scene.lambda * gu * dtap.w01;
            dd[d11 * 2 + 0] += scene.lambda * gu * dtap.w11;
            dd[d00 * 2 + 1] += scene.lambda * gv * dtap.w00;
            dd[d10 * 2 + 1] += scene.lambda * gv * dtap.w10;
            dd[d01 * 2 + 1] += scene.lambda * gv * dtap.w01;
            dd[d11 * 2 + 1] += scene.lambda * gv * dtap.w11;

            // Chain to the pre-warp coordinates through J = I + lambda*J_D.
            const BilinearSample du = bilinear_sample(field.disp.data(), tau, 2, 0, dtap);
            const BilinearSample dv = bilinear_sample(field.disp.data(), tau, 2, 1, dtap);
            const double m00 = 1.0 + scene.lambda * du.d_du;
            const double m01 = scene.lambda * du.d_dv;
            const double m10 = scene.lambda * dv.d_du;
            const double m11 = 1.0 + scene.lambda * dv.d_dv;
            const double gu_pre = m00 * gu + m10 * gv;
            const double gv_pre = m01 * gu + m11 * gv;
            gu = gu_pre;
            gv = gv_pre;
        }

        // UV clamp subgradient, then the affine map u = (beta+xi)/(2 xi)*tau.
        const double gu0 = inside(det.uv_raw.x, 0.0, hi) ? gu : 0.0;
        const double gv0 = inside(det.uv_raw.y, 0.0, hi) ? gv : 0.0;
        const double scale_uv = static_cast<double>(tau) / (2.0 * scene.xi);
        g_beta += gu0 * scale_uv;
        g_gamma += gv0 * scale_uv;
    }

    // Intersection adjoint: (g_beta, g_gamma) onto center, quaternion, scales.
    const Vec3 d = ray.direction;
    const Vec3 hit_point = ray.origin + d * isect.t;
    const Vec3 delta = hit_point - act.center;
    const double denom = dot(d, act.normal);

    grads.raw_scales[k * 2 + 0] += g_beta * (-isect.beta);
    grads.raw_scales[k * 2 + 1] += g_gamma * (-isect.gamma);

    // d(beta)/d(center) = ((t_beta . d)/(d . n) * n - t_beta)/s_beta.
    const Vec3 dbeta_dc = (act.normal * (dot(act.t_beta, d) / denom) - act.t_beta) * (1.0 / act.s_beta);
    const Vec3 dgamma_dc =
        (act.normal * (dot(act.t_gamma, d) / denom) - act.t_gamma) * (1.0 / act.s_gamma);
    grads.center[k * 3 + 0] += g_beta * dbeta_dc.x + g_gamma * dgamma_dc.x;
    grads.center[k * 3 + 1] += g_beta * dbeta_dc.y + g_gamma * dgamma_dc.y;
    grads.center[k * 3 + 2] += g_beta * dbeta_dc.z + g_gamma * dgamma_dc.z;

    // Quaternion: through the basis vectors and the normalization.
    const Quat& q = scene.primitives[k].quaternion;
    const double qn = q.norm();
    const Quat qh{q.w / qn, q.x / qn, q.y / qn, q.z / qn};
    const QuatBasisDerivs qd = quat_basis_derivs(qh);
    double g_qhat[4];
    for (int j = 0; j < 4; ++j) {
        // dt/dqhat_j = -(delta . dn_j)/(d . n); beta = (delta . t_beta)/s_beta
        // with d(delta) = d * dt.
        const double dt = -dot(delta, qd.dn[j]) / denom;
        const double dbeta = (dot(d, act.t_beta) * dt + dot(delta, qd.dtb[j])) / act.s_beta;
        const double dgamma = (dot(d, act.t_gamma) * dt + dot(delta, qd.dtg[j])) / act.s_gamma;
        g_qhat[j] = g_beta * dbeta + g_gamma * dgamma;
    }
    const double qhv[4] = {qh.w, qh.x, qh.y, qh.z};
    double proj = 0.0;
    for (int j = 0; j < 4; ++j) proj += g_qhat[j] * qhv[j];
    for (int j = 0; j < 4; ++j) {
        grads.quaternion[k * 4 + j] += (g_qhat[j] - qhv[j] * proj) / qn;
    }
}

struct PixelScratch {
    std::vector<RayHit> hits;
    std::vector<Fragment> frags;
    std::vector<ShadeDetail> details;
    std::vector<double> trans;
};

void pixel_backward(const Scene& scene, const std::vector<ActivatedPrimitive>& acts,
                    RenderMode mode, double cutoff, const Ray& ray, const Vec3& g_color,
                    double g_alpha, GradientSet& grads, PixelScratch& scratch) {
    collect_hits(scene, acts, ray, scratch.hits);
    if (scratch.hits.empty()) return; // pure background: no parameter touches it

    const std::size_t n = scratch.hits.size();
    scratch.frags.resize(n);
    scratch.details.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        const RayHit& hit = scratch.hits[i];
        const std::size_t k = static_cast<std::size_t>(hit.prim);
        const TextureMap* tex = scene.textures.empty() ? nullptr : &scene.textures[k];
        const DeformationField* def =
            scene.deformations.empty() ? nullptr : &scene.deformations[k];
        scratch.frags[i] =
            fragment_weight_and_color(acts[k], tex, def, scene.lambda, scene.xi, hit.isect,
                                      ray.direction, mode, hit.prim, &scratch.details[i]);
    }

    // Forward sweep mirroring composite_ray, retaining per-fragment
    // transmittance and the truncation point m.
    scratch.trans.resize(n);
    Vec3 raw{0.0, 0.0, 0.0};
    double transmittance = 1.0;
    std::size_t m = 0;
    for (std::size_t i = 0; i < n; ++i) {
        if (transmittance < cutoff) break;
        scratch.trans[i] = transmittance;
        raw += scratch.frags[i].color * (scratch.frags[i].weight * transmittance);
        transmittance *= 1.0 - scratch.frags[i].weight;
        m = i + 1;
    }
    raw += scene.background * transmittance;

    // Final [0,1] clamp subgradient on the composited color.
    const Vec3 g_out{inside(raw.x, 0.0, 1.0) ? g_color.x : 0.0,
                     inside(raw.y, 0.0, 1.0) ? g_color.y : 0.0,
                     inside(raw.z, 0.0, 1.0) ? g_color.z : 0.0};

    // Backward sweep: suffix holds the composite of everything behind the
    // current fragment (background included), trem the transmittance product
    // behind it. Truncated fragments (i >= m) receive exactly zero gradient.
    Vec3 suffix = scene.background;
    double trem = 1.0;
    for (std::size_t i = m; i-- > 0;) {
        const Fragment& frag = scratch.frags[i];
        const double t_i = scratch.trans[i];
        const Vec3 gc = g_out * (frag.weight * t_i);
        const double gw =
            dot(g_out, frag.color - suffix) * t_i + g_alpha * t_i * trem;
        fragment_backward(scene, acts[static_cast<std::size_t>(frag.prim)], frag.prim, mode, ray,
                          scratch.hits[i].isect, scratch.details[i], gc, gw, grads);
        suffix = frag.color * frag.weight + suffix * (1.0 - frag.weight);
        trem *= 1.0 - frag.weight;
    }
}

// Fold-penalty adjoint: d/d(disp) of fold_reg_weight * fold_penalty(scene).
void fold_backward(const Scene& scene, double weight, GradientSet& grads) {
    const int tau = scene.tau();
    if (tau == 0 || scene.deformations.empty()) return;
    const std::size_t t2 = static_cast<std::size_t>(tau) * tau;
    const double count = static_cast<double>(scene.deformations.size()) * static_cast<double>(t2);
    for (std::size_t k = 0; k < scene.deformations.size(); ++k) {
        const DeformationField& field = scene.deformations[k];
        double* dd = grads.disp.data() + k * t2 * 2;
        for (int row = 0; row < tau; ++row) {
            for (int col = 0; col < tau; ++col) {
                const BilinearTap tap = bilinear_tap(tau, col + 0.5, row + 0.5);
                const BilinearSample du = bilinear_sample(field.disp.data(), tau, 2, 0, tap);
                const BilinearSample dv = bilinear_sample(field.disp.data(), tau, 2, 1, tap);
                const double m00 = 1.0 + scene.lambda * du.d_du;
                const double m01 = scene.lambda * du.d_dv;
                const double m10 = scene.lambda * dv.d_du;
                const double m11 = 1.0 + scene.lambda * dv.d_dv;
                const double det = m00 * m11 - m01 * m10;
                if (det >= 0.0) continue;
                const double g_det = weight * 2.0 * det / count;
                const double g_m[4] = {g_det * m11, -g_det * m10, -g_det * m01, g_det * m00};
                // Corner partials of the bilinear derivative along u and v.
                const std::size_t idx[4] = {
                    static_cast<std::size_t>(tap.j0) * tau + tap.i0,
                    static_cast<std::size_t>(tap.j0) * tau + tap.i1,
                    static_cast<std::size_t>(tap.j1) * tau + tap.i0,
                    static_cast<std::size_t>(tap.j1) * tau + tap.i1,
                };
                const double ddu[4] = {-(1.0 - tap.wv), 1.0 - tap.wv, -tap.wv, tap.wv};
                const double ddv[4] = {-(1.0 - tap.wu), -tap.wu, 1.0 - tap.wu, tap.wu};
                for (int c = 0; c < 4; ++c) {
                    dd[idx[c] * 2 + 0] +=
                        scene.lambda * (g_m[0] * ddu[c] + g_m[1] * ddv[c]);
                    dd[idx[c] * 2 + 1] +=
                        scene.lambda * (g_m[2] * ddu[c] + g_m[3] * ddv[c]);
                }
            }
        }
    }
}

void validate_or_throw(const Scene& scene) {
    const std::vector<std::string> violations = validate_scene(scene);
    if (!violations.empty()) {
        throw ValidationError("backward: invalid scene: " + violations.front());
    }
}

std::pair<double, GradientSet> backward_span(const Scene& scene, const View* const* views,
                                             std::size_t count, const LossConfig& cfg,
                                             RenderMode mode, const TapeConfig& tape) {
    if (count == 0) throw ValidationError("backward: at least one view required");
    validate_or_throw(scene);

    std::vector<ActivatedPrimitive> acts(scene.size());
    for (std::size_t k = 0; k < scene.size(); ++k) acts[k] = activate(scene.primitives[k]);

    GradientSet grads = GradientSet::zeros_like(scene);
    const double inv_views = 1.0 / static_cast<double>(count);
    double loss_sum = 0.0;

    const bool fast = tape.mode == TapeConfig::Mode::Fast;
    const int workers = fast ? resolve_threads(tape.threads) : 1;
    std::vector<GradientSet> worker_grads;
    if (fast) {
        worker_grads.assign(static_cast<std::size_t>(workers), GradientSet::zeros_like(scene));
    }

    for (std::size_t vi = 0; vi < count; ++vi) {
        const View& view = *views[vi];
        const RenderOutput rendered =
            render(scene, view.camera, mode, tape.threads, tape.transmittance_cutoff);
        LossGradients lg = total_loss_grad(rendered, view, cfg);
        loss_sum += lg.value;
        for (double& v : lg.d_color.pixels) v *= inv_views;
        for (double& v : lg.d_alpha.pixels) v *= inv_views;

        const Camera& camera = view.camera;
        auto run_rows = [&](GradientSet& target, int row_begin, int row_end) {
            PixelScratch scratch;
            for (int y = row_begin; y < row_end; ++y) {
                for (int x = 0; x < camera.width; ++x) {
                    const Vec3 g_color{lg.d_color.at(y, x, 0), lg.d_color.at(y, x, 1),
                                       lg.d_color.at(y, x, 2)};
                    const double g_alpha = lg.d_alpha.at(y, x, 0);
                    if (g_color.x == 0.0 && g_color.y == 0.0 && g_color.z == 0.0 &&
                        g_alpha == 0.0) {
                        continue;
                    }
                    const Ray ray = generate_ray(camera, x + 0.5, y + 0.5);
                    pixel_backward(scene, acts, mode, tape.transmittance_cutoff, ray, g_color,
                                   g_alpha, target, scratch);
                }
            }
        };

        if (fast) {
            parallel_chunks(0, camera.height, workers, [&](int w, int lo, int hi) {
                run_rows(worker_grads[static_cast<std::size_t>(w)], lo, hi);
            });
        } else {
            run_rows(grads, 0, camera.height);
        }
    }

    if (fast) {
        for (const GradientSet& wg : worker_grads) grads.accumulate(wg);
    }

    double loss = loss_sum * inv_views;
    if (cfg.fold_reg_weight > 0.0 && mode == RenderMode::Fact) {
        loss += cfg.fold_reg_weight * fold_penalty(scene);
        fold_backward(scene, cfg.fold_reg_weight, grads);
    }

    for (ParamBlock b : kParamBlocks) {
        for (double v : grads.block(b)) {
            if (!std::isfinite(v)) {
                throw ValidationError(std::string("backward: non-finite gradient in block '") +
                                      param_block_name(b) + "'");
            }
        }
    }
    return {loss, std::move(grads)};
}

} // namespace

double forward_loss(const Scene& scene, const std::vector<View>& views, const LossConfig& cfg,
                    RenderMode mode, const TapeConfig& tape) {
    if (views.empty()) throw ValidationError("forward_loss: at least one view required");
    double sum = 0.0;
    for (const View& view : views) {
        const RenderOutput rendered =
            render(scene, view.camera, mode, tape.threads, tape.transmittance_cutoff);
        sum += total_loss(rendered, view, cfg);
    }
    double loss = sum / static_cast<double>(views.size());
    if (cfg.fold_reg_weight > 0.0 && mode == RenderMode::Fact) {
        loss += cfg.fold_reg_weight * fold_penalty(scene);
    }
    return loss;
}

std::pair<double, GradientSet> backward(const Scene& scene, const std::vector<View>& views,
                                        const LossConfig& cfg, RenderMode mode,
                                        const TapeConfig& tape) {
    std::vector<const View*> ptrs(views.size());
    for (std::size_t i = 0; i < views.size(); ++i) ptrs[i] = &views[i];
    return backward_span(scene, ptrs.data(), ptrs.size(), cfg, mode, tape);
}

std::pair<double, GradientSet> backward(const Scene& scene, const View& view,
                                        const LossConfig& cfg, RenderMode mode,
                                        const TapeConfig& tape) {
    const View* ptr = &view;
    return backward_span(scene, &ptr, 1, cfg, mode, tape);
}

GradCheckReport grad_check(const Scene& scene, const std::vector<View>& views,
                           const LossConfig& cfg, RenderMode mode, double h, double tol,
                           double abs_floor, const TapeConfig& tape) {
    if (!(h > 0.0)) throw ValidationError("grad_check: h must be positive");
    const auto [loss, grads] = backward(scene, views, cfg, mode, tape);
    (void)loss;

    Scene work = scene;
    GradCheckReport report;
    for (ParamBlock b : kParamBlocks) {
        BlockReport row;
        row.block = b;
        const std::vector<double>& g = grads.block(b);
        row.size = g.size();
        std::size_t idx = 0;
        visit_param_block(work, b, [&](double& p) {
            const double saved = p;
            p = saved + h;
            const double up = forward_loss(work, views, cfg, mode, tape);
            p = saved - h;
            const double down = forward_loss(work, views, cfg, mode, tape);
            p = saved;
            const double fd = (up - down) / (2.0 * h);
            const double diff = std::abs(fd - g[idx]);
            const double rel =
                diff <= abs_floor ? 0.0 : diff / std::max(std::abs(fd), std::abs(g[idx]));
            if (rel >= row.max_rel_error) {
                row.max_rel_error = rel;
                row.analytic = g[idx];
                row.numeric = fd;
                row.worst_index = idx;
            }
            ++idx;
        });
        row.pass = row.max_rel_error < tol;
        report.pass = report.pass && row.pass;
        report.blocks.push_back(row);
    }
    return report;
}

std::string format_report(const GradCheckReport& report) {
    std::ostringstream out;
    out.precision(6);
    for (const BlockReport& row : report.blocks) {
        out << (row.pass ? "PASS" : "FAIL") << "  " << param_block_name(row.block)
            << "  n=" << row.size << "  max_rel=" << row.max_rel_error
            << "  worst_index=" << row.worst_index << "  grad=" << row.analytic
            << "  fd=" << row.numeric << "\n";
    }
    out << (report.pass ? "gradient check passed" : "gradient check FAILED") << "\n";
    return out.str();
}

} // namespace factgs
