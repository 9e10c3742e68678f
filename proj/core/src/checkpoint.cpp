#include "factgs/trainer.hpp"

#include "factgs/crc32.hpp"
#include "factgs/errors.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <iterator>
#include <string>
#include <vector>

namespace factgs {

namespace {

constexpr char kMagic[8] = {'F', 'A', 'C', 'T', 'G', 'S', '0', '1'};
constexpr std::uint32_t kFormatVersion = 1;

void put_u32(std::vector<unsigned char>& buf, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) buf.push_back(static_cast<unsigned char>(v >> (8 * i)));
}

void put_f64(std::vector<unsigned char>& buf, double v) {
    const std::uint64_t bits = std::bit_cast<std::uint64_t>(v);
    for (int i = 0; i < 8; ++i) buf.push_back(static_cast<unsigned char>(bits >> (8 * i)));
}

/// Sequential little-endian reader over the loaded file image. Bounds were
/// established once up front, so reads never recheck.
struct Cursor {
    const unsigned char* p;

    std::uint32_t u32() {
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(p[i]) << (8 * i);
        p += 4;
        return v;
    }
    double f64() {
        std::uint64_t bits = 0;
        for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(p[i]) << (8 * i);
        p += 8;
        return std::bit_cast<double>(bits);
    }
};

/// Total trainable scalars for a given shape; equals the sum of the
/// param_block_size values.
std::uint64_t scalar_count(std::uint64_t n, std::uint64_t tau, std::uint64_t degree) {
    const std::uint64_t coeffs = (degree + 1) * (degree + 1);
    const std::uint64_t t2 = tau * tau;
    return n * (10 + 3 * coeffs + 6 * t2);
}

} // namespace

void save_checkpoint(const Scene& scene, const OptimizerState& state, RenderMode mode,
                     const std::string& path) {
    const std::vector<std::string> violations = validate_scene(scene);
    if (!violations.empty()) {
        throw ValidationError("save_checkpoint: invalid scene: " + violations.front());
    }
    for (ParamBlock b : kParamBlocks) {
        const std::size_t expect = param_block_size(scene, b);
        if (state.m.block(b).size() != expect || state.v.block(b).size() != expect) {
            throw ValidationError(
                std::string("save_checkpoint: optimizer state does not match scene in block '") +
                param_block_name(b) + "'");
        }
    }

    std::vector<unsigned char> buf;
    buf.insert(buf.end(), kMagic, kMagic + 8);
    put_u32(buf, kFormatVersion);
    put_u32(buf, static_cast<std::uint32_t>(scene.size()));
    put_u32(buf, static_cast<std::uint32_t>(scene.tau()));
    put_u32(buf, static_cast<std::uint32_t>(scene.sh_degree()));

    put_f64(buf, scene.xi);
    put_f64(buf, scene.background.x);
    put_f64(buf, scene.background.y);
    put_f64(buf, scene.background.z);
    put_f64(buf, scene.lambda);
    put_f64(buf, static_cast<double>(static_cast<int>(mode)));

    for (ParamBlock b : kParamBlocks) {
        visit_param_block(scene, b, [&](const double& p) { put_f64(buf, p); });
    }
    for (ParamBlock b : kParamBlocks) {
        for (double v : state.m.block(b)) put_f64(buf, v);
    }
    for (ParamBlock b : kParamBlocks) {
        for (double v : state.v.block(b)) put_f64(buf, v);
    }
    put_f64(buf, static_cast<double>(state.step));
    put_u32(buf, crc32(buf.data(), buf.size()));

    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open checkpoint for writing: " + path);
    out.write(reinterpret_cast<const char*>(buf.data()),
              static_cast<std::streamsize>(buf.size()));
    out.flush();
    if (!out) throw IoError("failed writing checkpoint: " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open checkpoint: " + path);
    std::vector<unsigned char> buf{std::istreambuf_iterator<char>(in),
                                   std::istreambuf_iterator<char>()};
    if (in.bad()) throw IoError("failed reading checkpoint: " + path);

    if (buf.size() < 12) {
        throw CheckpointTruncatedError("checkpoint shorter than its header: " + path);
    }
    if (!std::equal(kMagic, kMagic + 8, buf.begin())) {
        throw CheckpointVersionError("not a checkpoint file (bad magic): " + path);
    }
    Cursor cur{buf.data() + 8};
    const std::uint32_t version = cur.u32();
    if (version != kFormatVersion) {
        throw CheckpointVersionError("unsupported checkpoint version " +
                                     std::to_string(version) + ": " + path);
    }
    if (buf.size() < 24) {
        throw CheckpointTruncatedError("checkpoint shorter than its header: " + path);
    }
    const std::uint32_t count = cur.u32();
    const std::uint32_t tau = cur.u32();
    const std::uint32_t degree = cur.u32();
    if (degree > static_cast<std::uint32_t>(kMaxShDegree)) {
        throw CheckpointError("checkpoint declares sh degree " + std::to_string(degree) +
                              " (max " + std::to_string(kMaxShDegree) + "): " + path);
    }

    const std::uint64_t scalars = scalar_count(count, tau, degree);
    const std::uint64_t expected = 24 + 8 * (6 + 3 * scalars + 1) + 4;
    if (buf.size() < expected) {
        throw CheckpointTruncatedError("checkpoint truncated: expected " +
                                       std::to_string(expected) + " bytes, found " +
                                       std::to_string(buf.size()) + ": " + path);
    }
    if (buf.size() > expected) {
        throw CheckpointTruncatedError("checkpoint has trailing bytes: expected " +
                                       std::to_string(expected) + " bytes, found " +
                                       std::to_string(buf.size()) + ": " + path);
    }
    const std::uint32_t stored_crc = Cursor{buf.data() + expected - 4}.u32();
    if (crc32(buf.data(), expected - 4) != stored_crc) {
        throw CheckpointChecksumError("checkpoint checksum mismatch: " + path);
    }

    Checkpoint ckpt;
    Scene& scene = ckpt.scene;
    scene.xi = cur.f64();
    scene.background.x = cur.f64();
    scene.background.y = cur.f64();
    scene.background.z = cur.f64();
    scene.lambda = cur.f64();
    const double mode_code = cur.f64();
    if (mode_code == 0.0) {
        ckpt.mode = RenderMode::NoTexture;
    } else if (mode_code == 1.0) {
        ckpt.mode = RenderMode::Uniform;
    } else if (mode_code == 2.0) {
        ckpt.mode = RenderMode::Fact;
    } else {
        throw CheckpointError("checkpoint declares unknown render mode: " + path);
    }

    const std::size_t coeffs = static_cast<std::size_t>(sh_coeff_count(static_cast<int>(degree)));
    const std::size_t t2 = static_cast<std::size_t>(tau) * tau;
    scene.primitives.resize(count);
    for (GaussianPrimitive& prim : scene.primitives) prim.sh.assign(coeffs * 3, 0.0);
    scene.textures.resize(count);
    for (TextureMap& tex : scene.textures) {
        tex.tau = static_cast<int>(tau);
        tex.rgb.assign(t2 * 3, 0.0);
        tex.raw_alpha.assign(t2, 0.0);
    }
    scene.deformations.resize(count);
    for (DeformationField& field : scene.deformations) {
        field.tau = static_cast<int>(tau);
        field.disp.assign(t2 * 2, 0.0);
    }

    for (ParamBlock b : kParamBlocks) {
        visit_param_block(scene, b, [&](double& p) { p = cur.f64(); });
    }
    ckpt.state = OptimizerState::zeros_like(scene);
    for (ParamBlock b : kParamBlocks) {
        for (double& v : ckpt.state.m.block(b)) v = cur.f64();
    }
    for (ParamBlock b : kParamBlocks) {
        for (double& v : ckpt.state.v.block(b)) v = cur.f64();
    }
    const double step = cur.f64();
    if (!(step >= 0.0) || step != std::floor(step) || step > 9.007199254740992e15) {
        throw CheckpointError("checkpoint step counter is not a non-negative integer: " + path);
    }
    ckpt.state.step = static_cast<std::int64_t>(step);

    const std::vector<std::string> violations = validate_scene(scene);
    if (!violations.empty()) {
        throw CheckpointError("checkpoint encodes an invalid scene: " + violations.front() +
                              ": " + path);
    }
    return ckpt;
}

} // namespace factgs
