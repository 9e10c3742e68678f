#include "factgs/scene.hpp"

#include "factgs/errors.hpp"

#include <cmath>
#include <cstddef>

namespace factgs {

namespace {

bool all_finite(const double* v, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) {
        if (!std::isfinite(v[i])) return false;
    }
    return true;
}

// 3DGS-lineage real SH constants.
constexpr double kSH0 = 0.28209479177387814;
constexpr double kSH1 = 0.4886025119029199;
constexpr double kSH2[5] = {1.0925484305920792, -1.0925484305920792, 0.31539156525252005,
                            -1.0925484305920792, 0.5462742152960396};
constexpr double kSH3[7] = {-0.5900435899266435, 2.890611442640554,  -0.4570457994644658,
                            0.3731763325901154,  -0.4570457994644658, 1.445305721320277,
                            -0.5900435899266435};

} // namespace

int GaussianPrimitive::sh_degree() const {
    int coeffs = static_cast<int>(sh.size() / 3);
    int degree = 0;
    while ((degree + 1) * (degree + 1) < coeffs) ++degree;
    return degree;
}

TextureMap make_neutral_texture(int tau) {
    TextureMap t;
    t.tau = tau;
    t.rgb.assign(static_cast<std::size_t>(tau) * tau * 3, 0.0);
    t.raw_alpha.assign(static_cast<std::size_t>(tau) * tau, kNeutralRawAlpha);
    return t;
}

DeformationField make_zero_deformation(int tau) {
    DeformationField d;
    d.tau = tau;
    d.disp.assign(static_cast<std::size_t>(tau) * tau * 2, 0.0);
    return d;
}

ActivatedPrimitive activate(const GaussianPrimitive& prim) {
    const Quat& q = prim.quaternion;
    double qn = q.norm();
    if (qn == 0.0 || !std::isfinite(qn)) {
        throw ValidationError("activate: quaternion must be nonzero and finite");
    }
    if (!std::isfinite(prim.raw_scales[0]) || !std::isfinite(prim.raw_scales[1]) ||
        !std::isfinite(prim.raw_opacity) || !std::isfinite(prim.center.x) ||
        !std::isfinite(prim.center.y) || !std::isfinite(prim.center.z)) {
        throw ValidationError("activate: raw values must be finite");
    }

    double w = q.w / qn, x = q.x / qn, y = q.y / qn, z = q.z / qn;

    ActivatedPrimitive out;
    out.center = prim.center;
    // Columns of the rotation matrix of the normalized quaternion.
    out.t_beta = {1.0 - 2.0 * (y * y + z * z), 2.0 * (x * y + w * z), 2.0 * (x * z - w * y)};
    out.t_gamma = {2.0 * (x * y - w * z), 1.0 - 2.0 * (x * x + z * z), 2.0 * (y * z + w * x)};
    out.normal = {2.0 * (x * z + w * y), 2.0 * (y * z - w * x), 1.0 - 2.0 * (x * x + y * y)};
    out.s_beta = std::exp(prim.raw_scales[0]);
    out.s_gamma = std::exp(prim.raw_scales[1]);
    out.opacity = logistic(prim.raw_opacity);
    out.sh = prim.sh.data();
    out.sh_degree = prim.sh_degree();
    return out;
}

void sh_basis(const Vec3& dir, int degree, double* out) {
    Vec3 d = dir;
    double n = norm(d);
    if (n > 0.0 && std::abs(n - 1.0) > 1e-12) d = d / n;
    double x = d.x, y = d.y, z = d.z;

    out[0] = kSH0;
    if (degree < 1) return;
    out[1] = -kSH1 * y;
    out[2] = kSH1 * z;
    out[3] = -kSH1 * x;
    if (degree < 2) return;
    double xx = x * x, yy = y * y, zz = z * z;
    out[4] = kSH2[0] * x * y;
    out[5] = kSH2[1] * y * z;
    out[6] = kSH2[2] * (2.0 * zz - xx - yy);
    out[7] = kSH2[3] * x * z;
    out[8] = kSH2[4] * (xx - yy);
    if (degree < 3) return;
    out[9] = kSH3[0] * y * (3.0 * xx - yy);
    out[10] = kSH3[1] * x * y * z;
    out[11] = kSH3[2] * y * (4.0 * zz - xx - yy);
    out[12] = kSH3[3] * z * (2.0 * zz - 3.0 * xx - 3.0 * yy);
    out[13] = kSH3[4] * x * (4.0 * zz - xx - yy);
    out[14] = kSH3[5] * z * (xx - yy);
    out[15] = kSH3[6] * x * (xx - 3.0 * yy);
}

Vec3 eval_sh_color(const double* coeffs, int degree, const Vec3& view_dir, Vec3* raw) {
    double basis[16];
    sh_basis(view_dir, degree, basis);
    int n = sh_coeff_count(degree);
    Vec3 c{0.5, 0.5, 0.5};
    for (int i = 0; i < n; ++i) {
        c.x += coeffs[3 * i + 0] * basis[i];
        c.y += coeffs[3 * i + 1] * basis[i];
        c.z += coeffs[3 * i + 2] * basis[i];
    }
    if (raw) *raw = c;
    return {std::max(0.0, c.x), std::max(0.0, c.y), std::max(0.0, c.z)};
}

Vec3 eval_sh_color(const std::vector<double>& coeffs, int degree, const Vec3& view_dir) {
    return eval_sh_color(coeffs.data(), degree, view_dir);
}

std::vector<std::string> validate_scene(const Scene& scene) {
    std::vector<std::string> violations;
    auto flag = [&](const std::string& msg) { violations.push_back(msg); };

    std::size_t n = scene.primitives.size();
    if (scene.textures.size() != n || scene.deformations.size() != n) {
        flag("list length mismatch: primitives=" + std::to_string(n) +
             " textures=" + std::to_string(scene.textures.size()) +
             " deformations=" + std::to_string(scene.deformations.size()));
    }
    if (!(scene.xi > 0.0)) flag("xi must be positive");
    if (!(scene.lambda >= 0.0) || !std::isfinite(scene.lambda)) {
        flag("lambda must be finite and non-negative");
    }
    for (double b : {scene.background.x, scene.background.y, scene.background.z}) {
        if (!(b >= 0.0 && b <= 1.0)) {
            flag("background channel out of [0,1]");
            break;
        }
    }

    int tau = scene.tau();
    int degree = scene.sh_degree();
    for (std::size_t i = 0; i < n; ++i) {
        const auto& p = scene.primitives[i];
        std::string tag = "primitive " + std::to_string(i) + ": ";
        if (p.quaternion.norm() == 0.0) flag(tag + "zero quaternion");
        if (!std::isfinite(p.quaternion.norm()) || !std::isfinite(p.raw_opacity) ||
            !std::isfinite(p.raw_scales[0]) || !std::isfinite(p.raw_scales[1]) ||
            !std::isfinite(p.center.x) || !std::isfinite(p.center.y) || !std::isfinite(p.center.z) ||
            !all_finite(p.sh.data(), p.sh.size())) {
            flag(tag + "non-finite value");
            continue;
        }
        if (p.sh.size() != static_cast<std::size_t>(3 * sh_coeff_count(p.sh_degree())) ||
            p.sh_degree() > kMaxShDegree) {
            flag(tag + "sh coefficient count is not 3*(L+1)^2 with L <= 3");
        }
        if (p.sh_degree() != degree) flag(tag + "sh degree differs across scene");
    }
    for (std::size_t i = 0; i < scene.textures.size(); ++i) {
        const auto& t = scene.textures[i];
        std::string tag = "texture " + std::to_string(i) + ": ";
        std::size_t texels = static_cast<std::size_t>(t.tau) * t.tau;
        if (t.tau < 1) flag(tag + "tau must be >= 1");
        if (t.rgb.size() != texels * 3 || t.raw_alpha.size() != texels) {
            flag(tag + "texel array does not match tau x tau");
        } else if (!all_finite(t.rgb.data(), t.rgb.size()) ||
                   !all_finite(t.raw_alpha.data(), t.raw_alpha.size())) {
            flag(tag + "non-finite texel");
        }
        if (t.tau != tau) flag(tag + "tau differs across scene");
    }
    for (std::size_t i = 0; i < scene.deformations.size(); ++i) {
        const auto& d = scene.deformations[i];
        std::string tag = "deformation " + std::to_string(i) + ": ";
        std::size_t texels = static_cast<std::size_t>(d.tau) * d.tau;
        if (d.disp.size() != texels * 2) {
            flag(tag + "displacement array does not match tau x tau x 2");
        } else if (!all_finite(d.disp.data(), d.disp.size())) {
            flag(tag + "non-finite displacement");
        }
        if (d.tau != tau) flag(tag + "tau differs across scene");
    }
    return violations;
}

} // namespace factgs
