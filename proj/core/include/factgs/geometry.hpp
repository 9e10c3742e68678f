#pragma once

#include "factgs/scene.hpp"
#include "factgs/vec.hpp"

#include <optional>

namespace factgs {

struct Ray {
    Vec3 origin;
    Vec3 direction; // unit norm
};

/// Result of a ray / tangent-plane hit. beta and gamma are the local plane
/// coordinates in sigma units; u and v are filled once the texture mapping
/// is applied (uv_from_local).
struct Intersection {
    double t = 0.0;
    double beta = 0.0, gamma = 0.0;
    double u = 0.0, v = 0.0;
};

/// Self-intersection guard: hits closer than this along the ray are rejected.
constexpr double kNearEpsilon = 1e-4;
/// Rays this close to parallel with the plane are misses.
constexpr double kParallelEpsilon = 1e-9;

/// Pinhole ray through the continuous pixel position (px, py); callers pass
/// pixel centers as x+0.5, y+0.5. Throws for out-of-bounds positions.
Ray generate_ray(const Camera& camera, double px, double py);

/// Inverts the plane parameterization P(beta, gamma) = c + s_b*t_b*beta + s_g*t_g*gamma.
/// Returns nullopt for parallel rays and hits behind the near epsilon.
std::optional<Intersection> intersect_tangent_plane(const Ray& ray, const ActivatedPrimitive& prim);

/// Gaussian footprint weight exp(-(beta^2+gamma^2)/2). Callers cull
/// fragments with beta^2+gamma^2 > xi^2.
inline double gaussian_weight(double beta, double gamma) {
    return std::exp(-0.5 * (beta * beta + gamma * gamma));
}

/// Affine map from local plane coordinates to texel coordinates,
/// u = (beta+xi)/(2 xi) * tau, clamped to [0, tau]. Textures are per-primitive
/// patches; clamping (not wrapping) keeps opposite edges from leaking.
/// `raw` optionally receives the pre-clamp coordinates (clamp subgradients
/// key off them).
Vec2 uv_from_local(double beta, double gamma, double xi, int tau, Vec2* raw = nullptr);

} // namespace factgs
