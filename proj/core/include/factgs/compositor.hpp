#pragma once

#include "factgs/geometry.hpp"
#include "factgs/image.hpp"
#include "factgs/scene.hpp"

#include <vector>

namespace factgs {

/// Appearance path selector. NoTexture shades from SH alone (plain splats),
/// Uniform samples the per-primitive texture at the direct UV mapping, and
/// Fact routes UVs through the learned deformation warp first.
enum class RenderMode { NoTexture, Uniform, Fact };

/// One blending term of a ray's front-to-back sum.
struct Fragment {
    int prim = -1;       // primitive index; also the depth tie-break key
    double depth = 0.0;  // exact ray-plane distance
    Vec3 color;          // c_tex + c_base, pre-clamp
    double weight = 0.0; // alpha_tex * footprint * opacity, in [0,1)
};

struct RenderOutput {
    Image color; // H x W x 3 linear values clamped to [0,1]
    Image alpha; // H x W accumulated opacity
};

struct CompositeResult {
    Vec3 rgb; // includes the background term, pre-clamp
    double alpha = 0.0;
};

/// Rays stop accumulating once transmittance drops below this; the backward
/// pass truncates at the same point, so dropped fragments get zero gradient.
constexpr double kTransmittanceCutoff = 1e-4;

/// An accepted, culled ray-primitive hit prior to shading. Kept around by the
/// backward pass, which needs the local coordinates.
struct RayHit {
    int prim = -1;
    Intersection isect;
};

/// Intersects every primitive, culls fragments outside the texture support
/// (beta^2 + gamma^2 > xi^2), and sorts by (depth, primitive index). Shared
/// by forward and backward passes so both walk identical fragment sequences.
void collect_hits(const Scene& scene, const std::vector<ActivatedPrimitive>& activated,
                  const Ray& ray, std::vector<RayHit>& out);

/// Forward intermediates of one fragment's shading, retained for the adjoint
/// pass. *_raw values are the pre-clamp inputs that drive clamp subgradients.
struct ShadeDetail {
    double footprint = 1.0; // Gaussian weight at (beta, gamma)
    Vec3 base;              // clamped SH color
    Vec3 base_raw;          // SH color before the clamp at zero
    Vec2 uv_raw;            // affine UV before clamping to [0, tau]
    Vec2 uv;                // clamped UV
    Vec2 warped_raw;        // uv + lambda * D(uv) before clamping (Fact only)
    Vec2 warped;            // texture lookup point; equals uv in Uniform mode
    bool textured = false;  // texture path taken
    double tex_alpha = 1.0; // sampled texture alpha (1 when untextured)
};

/// Shades one accepted hit: footprint weight, SH base color, and the
/// mode-dependent texture term. `texture`/`deformation` may be null for
/// modes that do not use them; `detail` optionally captures intermediates.
Fragment fragment_weight_and_color(const ActivatedPrimitive& prim, const TextureMap* texture,
                                   const DeformationField* deformation, double lambda, double xi,
                                   const Intersection& isect, const Vec3& view_dir,
                                   RenderMode mode, int prim_index = -1,
                                   ShadeDetail* detail = nullptr);

/// collect_hits + fragment_weight_and_color over a whole ray.
void gather_fragments(const Scene& scene, const std::vector<ActivatedPrimitive>& activated,
                      const Ray& ray, RenderMode mode, std::vector<Fragment>& out);

/// Front-to-back volumetric alpha blending with an explicit background term:
/// returns (sum_i color_i w_i prod_j<i (1-w_j) + T_final * background,
/// 1 - T_final). Fragments must arrive depth-sorted (asserted in debug
/// builds); accumulation stops at the transmittance cutoff.
CompositeResult composite_ray(const std::vector<Fragment>& fragments, const Vec3& background,
                              double transmittance_cutoff = kTransmittanceCutoff);

/// Full-frame forward render. Rows are distributed across `threads` workers
/// (0 = hardware concurrency); every pixel is written exactly once, so the
/// output is identical for any thread count.
RenderOutput render(const Scene& scene, const Camera& camera, RenderMode mode, int threads = 0,
                    double transmittance_cutoff = kTransmittanceCutoff);

} // namespace factgs
