#pragma once

#include "factgs/image.hpp"
#include "factgs/vec.hpp"

#include <string>
#include <vector>

namespace factgs {

constexpr int kMaxShDegree = 3;

constexpr int sh_coeff_count(int degree) { return (degree + 1) * (degree + 1); }

/// One tangent-plane splat. Raw values live in optimization-friendly spaces:
/// scales in log space, opacity in logit space, quaternion unnormalized.
struct GaussianPrimitive {
    Vec3 center;
    Quat quaternion;
    std::array<double, 2> raw_scales{0.0, 0.0};
    double raw_opacity = 0.0;
    /// SH coefficients, coefficient-major with interleaved rgb:
    /// size 3 * (degree+1)^2, layout c0.r c0.g c0.b c1.r ...
    std::vector<double> sh;

    int sh_degree() const;
};

/// Activation of a primitive: orthonormal tangent frame, positive scales,
/// opacity in (0,1). Holds a pointer into the source primitive's SH block.
struct ActivatedPrimitive {
    Vec3 center;
    Vec3 t_beta, t_gamma, normal;
    double s_beta = 1.0, s_gamma = 1.0;
    double opacity = 0.5;
    const double* sh = nullptr;
    int sh_degree = 0;
};

/// Per-primitive RGBA texel grid. rgb texels are unbounded residual values,
/// alpha texels are stored raw and pass through a logistic per texel.
struct TextureMap {
    int tau = 0;
    std::vector<double> rgb;       // tau*tau*3, row-major, rgb interleaved
    std::vector<double> raw_alpha; // tau*tau
};

/// Per-primitive displacement grid defining the texture-space warp.
/// Displacements are in texel units; the warp scale lambda lives in the
/// training config.
struct DeformationField {
    int tau = 0;
    std::vector<double> disp; // tau*tau*2, row-major, (du, dv) interleaved
};

struct Camera {
    double fx = 0.0, fy = 0.0, cx = 0.0, cy = 0.0;
    int width = 0, height = 0;
    Mat3 rotation;    // world_from_camera rotation
    Vec3 translation; // world_from_camera translation == camera center
};

/// A reference observation: camera pose plus the ground-truth image in
/// linear [0,1] values and an optional coverage mask for the alpha loss.
struct View {
    Camera camera;
    Image image;
    Image mask; // empty when absent

    bool has_mask() const { return !mask.pixels.empty(); }
};

struct Scene {
    std::vector<GaussianPrimitive> primitives;
    std::vector<TextureMap> textures;
    std::vector<DeformationField> deformations;
    double xi = 3.0;     // texture-support half-width in sigma units
    double lambda = 1.0; // deformation-warp scale; 0 disables the warp
    Vec3 background{0.0, 0.0, 0.0};

    int tau() const { return textures.empty() ? 0 : textures.front().tau; }
    int sh_degree() const { return primitives.empty() ? 0 : primitives.front().sh_degree(); }
    std::size_t size() const { return primitives.size(); }
};

inline double logistic(double x) { return 1.0 / (1.0 + std::exp(-x)); }
inline double logit(double p) { return std::log(p / (1.0 - p)); }

/// Neutral texture init: zero rgb residual, raw alpha +4 (alpha ~ 0.982).
/// An untrained textured scene then renders like the plain splat model.
constexpr double kNeutralRawAlpha = 4.0;

TextureMap make_neutral_texture(int tau);
DeformationField make_zero_deformation(int tau);

/// Raw -> active mapping. Throws ValidationError for a zero quaternion or
/// non-finite raw values.
ActivatedPrimitive activate(const GaussianPrimitive& prim);

/// Real SH basis values for degrees 0..degree, 3DGS constant convention.
/// `out` must hold (degree+1)^2 doubles; dir is normalized defensively.
void sh_basis(const Vec3& dir, int degree, double* out);

/// Sigma c_lm Y_lm(dir) + 0.5 per channel, clamped below at zero. `raw`
/// optionally receives the pre-clamp value (the clamp subgradient gate).
Vec3 eval_sh_color(const double* coeffs, int degree, const Vec3& view_dir, Vec3* raw = nullptr);
Vec3 eval_sh_color(const std::vector<double>& coeffs, int degree, const Vec3& view_dir);

/// Checks every type invariant; reports all violations instead of throwing.
std::vector<std::string> validate_scene(const Scene& scene);

} // namespace factgs
