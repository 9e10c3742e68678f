#pragma once

#include "factgs/scene.hpp"

#include <array>
#include <cstddef>

namespace factgs {

/// Canonical ordering of the trainable parameter blocks. Gradient buffers,
/// optimizer moments, finite-difference sweeps, and checkpoint serialization
/// all iterate blocks - and scalars within a block - in this one order.
enum class ParamBlock : int {
    Center = 0,
    Quaternion,
    RawScales,
    RawOpacity,
    Sh,
    Rgb,
    RawAlpha,
    Disp,
};

constexpr std::array<ParamBlock, 8> kParamBlocks = {
    ParamBlock::Center,   ParamBlock::Quaternion, ParamBlock::RawScales, ParamBlock::RawOpacity,
    ParamBlock::Sh,       ParamBlock::Rgb,        ParamBlock::RawAlpha,  ParamBlock::Disp,
};

inline const char* param_block_name(ParamBlock block) {
    switch (block) {
        case ParamBlock::Center: return "center";
        case ParamBlock::Quaternion: return "quaternion";
        case ParamBlock::RawScales: return "raw_scales";
        case ParamBlock::RawOpacity: return "raw_opacity";
        case ParamBlock::Sh: return "sh";
        case ParamBlock::Rgb: return "rgb";
        case ParamBlock::RawAlpha: return "raw_alpha";
        case ParamBlock::Disp: return "disp";
    }
    return "?";
}

/// Scalar count of one block for a given scene shape.
inline std::size_t param_block_size(const Scene& scene, ParamBlock block) {
    const std::size_t n = scene.size();
    const std::size_t t2 = static_cast<std::size_t>(scene.tau()) * scene.tau();
    const std::size_t coeffs = static_cast<std::size_t>(sh_coeff_count(scene.sh_degree()));
    switch (block) {
        case ParamBlock::Center: return n * 3;
        case ParamBlock::Quaternion: return n * 4;
        case ParamBlock::RawScales: return n * 2;
        case ParamBlock::RawOpacity: return n;
        case ParamBlock::Sh: return n * coeffs * 3;
        case ParamBlock::Rgb: return n * t2 * 3;
        case ParamBlock::RawAlpha: return n * t2;
        case ParamBlock::Disp: return n * t2 * 2;
    }
    return 0;
}

/// Visits every scalar of one block in canonical order: fn(double&). The
/// visit order defines the flat index used by gradients and moments.
template <class SceneT, class Fn>
void visit_param_block(SceneT& scene, ParamBlock block, Fn&& fn) {
    switch (block) {
        case ParamBlock::Center:
            for (auto& p : scene.primitives) {
                fn(p.center.x);
                fn(p.center.y);
                fn(p.center.z);
            }
            break;
        case ParamBlock::Quaternion:
            for (auto& p : scene.primitives) {
                fn(p.quaternion.w);
                fn(p.quaternion.x);
                fn(p.quaternion.y);
                fn(p.quaternion.z);
            }
            break;
        case ParamBlock::RawScales:
            for (auto& p : scene.primitives) {
                fn(p.raw_scales[0]);
                fn(p.raw_scales[1]);
            }
            break;
        case ParamBlock::RawOpacity:
            for (auto& p : scene.primitives) fn(p.raw_opacity);
            break;
        case ParamBlock::Sh:
            for (auto& p : scene.primitives) {
                for (auto& c : p.sh) fn(c);
            }
            break;
        case ParamBlock::Rgb:
            for (auto& t : scene.textures) {
                for (auto& c : t.rgb) fn(c);
            }
            break;
        case ParamBlock::RawAlpha:
            for (auto& t : scene.textures) {
                for (auto& c : t.raw_alpha) fn(c);
            }
            break;
        case ParamBlock::Disp:
            for (auto& d : scene.deformations) {
                for (auto& c : d.disp) fn(c);
            }
            break;
    }
}

} // namespace factgs
