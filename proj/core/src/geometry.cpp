#include "factgs/geometry.hpp"

#include "factgs/errors.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace factgs {

Ray generate_ray(const Camera& camera, double px, double py) {
    if (!(px >= 0.0 && px < camera.width && py >= 0.0 && py < camera.height)) {
        throw ValidationError("generate_ray: pixel (" + std::to_string(px) + ", " +
                              std::to_string(py) + ") outside image bounds");
    }
    // Camera convention: x right, y down, z forward.
    Vec3 dir_cam{(px - camera.cx) / camera.fx, (py - camera.cy) / camera.fy, 1.0};
    Vec3 dir_world = camera.rotation * dir_cam;
    return Ray{camera.translation, normalized(dir_world)};
}

std::optional<Intersection> intersect_tangent_plane(const Ray& ray, const ActivatedPrimitive& prim) {
    double denom = dot(ray.direction, prim.normal);
    if (std::abs(denom) < kParallelEpsilon) return std::nullopt;
    double t = dot(prim.center - ray.origin, prim.normal) / denom;
    if (t <= kNearEpsilon) return std::nullopt;

    Vec3 delta = ray.origin + ray.direction * t - prim.center;
    Intersection hit;
    hit.t = t;
    hit.beta = dot(delta, prim.t_beta) / prim.s_beta;
    hit.gamma = dot(delta, prim.t_gamma) / prim.s_gamma;
    return hit;
}

Vec2 uv_from_local(double beta, double gamma, double xi, int tau, Vec2* raw) {
    double scale = static_cast<double>(tau) / (2.0 * xi);
    double u = (beta + xi) * scale;
    double v = (gamma + xi) * scale;
    if (raw) *raw = {u, v};
    return {std::clamp(u, 0.0, static_cast<double>(tau)),
            std::clamp(v, 0.0, static_cast<double>(tau))};
}

} // namespace factgs
