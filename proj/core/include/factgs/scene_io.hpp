#pragma once

#include "factgs/scene.hpp"

#include <string>
#include <vector>

namespace factgs {

/// Scene documents are JSON: header keys `xi`, `background` (3 numbers),
/// `tau`, `sh_degree`, optional `lambda`, an array `primitives` (each with
/// `center`[3], `quaternion`[4] (w,x,y,z), `raw_scales`[2], `raw_opacity`,
/// flat `sh`), and optional `textures` / `deformations` arrays holding one
/// flat row-major channel-interleaved texel list per primitive (r,g,b,
/// raw_alpha and du,dv respectively). Missing texture or deformation arrays
/// mean neutral initialization.
///
/// Errors are ValidationError with distinct message prefixes: "scene file
/// syntax error:" (malformed JSON), "scene file missing field:", and "scene
/// file invalid:" (well-formed but violating a scene invariant). A throw
/// never yields a partial scene.
Scene parse_scene_text(const std::string& text);

/// Canonical serialization: sorted keys, shortest round-trip numbers,
/// textures and deformations always explicit. serialize(parse(x)) is the
/// canonical form of x.
std::string serialize_scene(const Scene& scene);

Scene load_scene(const std::string& path);
void save_scene(const Scene& scene, const std::string& path);

/// One record of a camera document: intrinsics/extrinsics plus the reference
/// image path and an optional mask path. Paths are stored as written in the
/// file; loaders resolve them relative to the document's directory.
struct CameraFileEntry {
    Camera camera;
    std::string image_path;
    std::string mask_path; // empty = no mask
};

/// Camera documents are JSON: array `views`, each entry with `fx`, `fy`,
/// `cx`, `cy`, `width`, `height`, `world_from_camera` (3x4 row-major, 12
/// numbers), `image_path`, optional `mask_path`. Same error categories as
/// scene documents with the "camera file" prefix.
std::vector<CameraFileEntry> parse_camera_text(const std::string& text);
std::string serialize_cameras(const std::vector<CameraFileEntry>& entries);

std::vector<CameraFileEntry> load_camera_file(const std::string& path);
void save_camera_file(const std::vector<CameraFileEntry>& entries, const std::string& path);

/// Loads a camera document and every referenced image: reference images are
/// decoded to linear (through the inverse sRGB transfer when srgb is set),
/// masks always load linearly and must be single-channel. Unresolvable paths
/// raise IoError.
std::vector<View> load_views(const std::string& path, bool srgb = false);

} // namespace factgs
