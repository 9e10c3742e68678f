#include "factgs/compositor.hpp"

#include "factgs/parallel.hpp"
#include "factgs/warp.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>

namespace factgs {

void collect_hits(const Scene& scene, const std::vector<ActivatedPrimitive>& activated,
                  const Ray& ray, std::vector<RayHit>& out) {
    out.clear();
    const double cull = scene.xi * scene.xi;
    for (std::size_t k = 0; k < activated.size(); ++k) {
        auto isect = intersect_tangent_plane(ray, activated[k]);
        if (!isect) continue;
        if (isect->beta * isect->beta + isect->gamma * isect->gamma > cull) continue;
        out.push_back({static_cast<int>(k), *isect});
    }
    std::sort(out.begin(), out.end(), [](const RayHit& a, const RayHit& b) {
        if (a.isect.t != b.isect.t) return a.isect.t < b.isect.t;
        return a.prim < b.prim;
    });
}

Fragment fragment_weight_and_color(const ActivatedPrimitive& prim, const TextureMap* texture,
                                   const DeformationField* deformation, double lambda, double xi,
                                   const Intersection& isect, const Vec3& view_dir,
                                   RenderMode mode, int prim_index, ShadeDetail* detail) {
    Fragment frag;
    frag.prim = prim_index;
    frag.depth = isect.t;

    ShadeDetail local;
    ShadeDetail& det = detail ? *detail : local;

    det.footprint = gaussian_weight(isect.beta, isect.gamma);
    det.base = eval_sh_color(prim.sh, prim.sh_degree, view_dir, &det.base_raw);

    Vec3 tex_rgb{0.0, 0.0, 0.0};
    det.textured = mode != RenderMode::NoTexture && texture != nullptr;
    if (det.textured) {
        det.uv = uv_from_local(isect.beta, isect.gamma, xi, texture->tau, &det.uv_raw);
        det.warped = det.uv;
        det.warped_raw = det.uv;
        if (mode == RenderMode::Fact && deformation != nullptr) {
            det.warped = warp_uv(det.uv.x, det.uv.y, *deformation, lambda, &det.warped_raw);
        }
        const TextureSample sample = sample_texture(*texture, det.warped.x, det.warped.y);
        tex_rgb = sample.rgb;
        det.tex_alpha = sample.alpha;
    }

    frag.color = tex_rgb + det.base;
    frag.weight = det.tex_alpha * det.footprint * prim.opacity;
    return frag;
}

void gather_fragments(const Scene& scene, const std::vector<ActivatedPrimitive>& activated,
                      const Ray& ray, RenderMode mode, std::vector<Fragment>& out) {
    thread_local std::vector<RayHit> hits;
    collect_hits(scene, activated, ray, hits);
    out.clear();
    out.reserve(hits.size());
    for (const RayHit& hit : hits) {
        const TextureMap* texture =
            scene.textures.empty() ? nullptr : &scene.textures[static_cast<std::size_t>(hit.prim)];
        const DeformationField* deformation =
            scene.deformations.empty() ? nullptr
                                       : &scene.deformations[static_cast<std::size_t>(hit.prim)];
        out.push_back(fragment_weight_and_color(activated[static_cast<std::size_t>(hit.prim)],
                                                texture, deformation, scene.lambda, scene.xi,
                                                hit.isect, ray.direction, mode, hit.prim));
    }
}

CompositeResult composite_ray(const std::vector<Fragment>& fragments, const Vec3& background,
                              double transmittance_cutoff) {
#ifndef NDEBUG
    for (std::size_t i = 1; i < fragments.size(); ++i) {
        assert((fragments[i - 1].depth < fragments[i].depth ||
                (fragments[i - 1].depth == fragments[i].depth &&
                 fragments[i - 1].prim <= fragments[i].prim)) &&
               "composite_ray: fragments must be depth-sorted");
    }
#endif
    Vec3 accum{0.0, 0.0, 0.0};
    double transmittance = 1.0;
    for (const Fragment& frag : fragments) {
        if (transmittance < transmittance_cutoff) break;
        accum += frag.color * (frag.weight * transmittance);
        transmittance *= 1.0 - frag.weight;
    }
    return {accum + background * transmittance, 1.0 - transmittance};
}

RenderOutput render(const Scene& scene, const Camera& camera, RenderMode mode, int threads,
                    double transmittance_cutoff) {
    RenderOutput out;
    out.color = Image(camera.width, camera.height, 3);
    out.alpha = Image(camera.width, camera.height, 1);

    std::vector<ActivatedPrimitive> activated(scene.size());
    for (std::size_t k = 0; k < scene.size(); ++k) activated[k] = activate(scene.primitives[k]);

    parallel_chunks(0, camera.height, threads, [&](int, int row_begin, int row_end) {
        std::vector<Fragment> fragments;
        for (int y = row_begin; y < row_end; ++y) {
            for (int x = 0; x < camera.width; ++x) {
                const Ray ray = generate_ray(camera, x + 0.5, y + 0.5);
                gather_fragments(scene, activated, ray, mode, fragments);
                const CompositeResult result =
                    composite_ray(fragments, scene.background, transmittance_cutoff);
                out.color.at(y, x, 0) = std::clamp(result.rgb.x, 0.0, 1.0);
                out.color.at(y, x, 1) = std::clamp(result.rgb.y, 0.0, 1.0);
                out.color.at(y, x, 2) = std::clamp(result.rgb.z, 0.0, 1.0);
                out.alpha.at(y, x, 0) = result.alpha;
            }
        }
    });
    return out;
}

} // namespace factgs
