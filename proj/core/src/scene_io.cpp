#include "factgs/scene_io.hpp"

#include "factgs/errors.hpp"
#include "factgs/image.hpp"

#include "json.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>
#include <utility>

namespace factgs {

namespace {

using nlohmann::json;

[[noreturn]] void missing(const std::string& doc, const std::string& field) {
    throw ValidationError(doc + " file missing field: " + field);
}

[[noreturn]] void invalid(const std::string& doc, const std::string& what) {
    throw ValidationError(doc + " file invalid: " + what);
}

json parse_json(const std::string& doc, const std::string& text) {
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        throw ValidationError(doc + " file syntax error: " + e.what());
    }
}

double require_number(const std::string& doc, const json& node, const std::string& field,
                      const std::string& where) {
    if (!node.contains(field)) missing(doc, where + field);
    const json& v = node.at(field);
    if (!v.is_number()) invalid(doc, where + field + " must be a number");
    return v.get<double>();
}

int require_int(const std::string& doc, const json& node, const std::string& field,
                const std::string& where) {
    if (!node.contains(field)) missing(doc, where + field);
    const json& v = node.at(field);
    if (!v.is_number_integer()) invalid(doc, where + field + " must be an integer");
    return v.get<int>();
}

std::vector<double> require_array(const std::string& doc, const json& node,
                                  const std::string& field, std::size_t arity,
                                  const std::string& where) {
    if (!node.contains(field)) missing(doc, where + field);
    const json& v = node.at(field);
    if (!v.is_array()) invalid(doc, where + field + " must be an array");
    if (v.size() != arity) {
        invalid(doc, where + field + " must have " + std::to_string(arity) + " entries, got " +
                         std::to_string(v.size()));
    }
    std::vector<double> out;
    out.reserve(arity);
    for (const json& e : v) {
        if (!e.is_number()) invalid(doc, where + field + " entries must be numbers");
        out.push_back(e.get<double>());
    }
    return out;
}

std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    if (in.bad()) throw IoError("failed reading file: " + path);
    return buf.str();
}

void write_text_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open file for writing: " + path);
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    out.flush();
    if (!out) throw IoError("failed writing file: " + path);
}

} // namespace

Scene parse_scene_text(const std::string& text) {
    const std::string doc = "scene";
    const json root = parse_json(doc, text);
    if (!root.is_object()) invalid(doc, "top level must be an object");

    Scene scene;
    scene.xi = require_number(doc, root, "xi", "");
    const std::vector<double> bg = require_array(doc, root, "background", 3, "");
    scene.background = {bg[0], bg[1], bg[2]};
    const int tau = require_int(doc, root, "tau", "");
    const int sh_degree = require_int(doc, root, "sh_degree", "");
    if (root.contains("lambda")) {
        if (!root.at("lambda").is_number()) invalid(doc, "lambda must be a number");
        scene.lambda = root.at("lambda").get<double>();
    }
    if (tau < 1) invalid(doc, "tau must be >= 1");
    if (sh_degree < 0 || sh_degree > kMaxShDegree) {
        invalid(doc, "sh_degree must lie in [0, " + std::to_string(kMaxShDegree) + "]");
    }

    if (!root.contains("primitives")) missing(doc, "primitives");
    const json& prims = root.at("primitives");
    if (!prims.is_array() || prims.empty()) {
        invalid(doc, "primitives must be a non-empty array");
    }
    const std::size_t n = prims.size();
    const std::size_t sh_len = static_cast<std::size_t>(sh_coeff_count(sh_degree)) * 3;
    const std::size_t t2 = static_cast<std::size_t>(tau) * tau;

    scene.primitives.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        const std::string where = "primitives[" + std::to_string(i) + "].";
        const json& p = prims[i];
        if (!p.is_object()) invalid(doc, "primitives[" + std::to_string(i) + "] must be an object");
        GaussianPrimitive prim;
        const std::vector<double> center = require_array(doc, p, "center", 3, where);
        prim.center = {center[0], center[1], center[2]};
        const std::vector<double> q = require_array(doc, p, "quaternion", 4, where);
        prim.quaternion = {q[0], q[1], q[2], q[3]};
        const std::vector<double> s = require_array(doc, p, "raw_scales", 2, where);
        prim.raw_scales = {s[0], s[1]};
        prim.raw_opacity = require_number(doc, p, "raw_opacity", where);
        prim.sh = require_array(doc, p, "sh", sh_len, where);
        scene.primitives.push_back(std::move(prim));
    }

    if (root.contains("textures")) {
        const json& texs = root.at("textures");
        if (!texs.is_array() || texs.size() != n) {
            invalid(doc, "textures must be an array with one entry per primitive");
        }
        scene.textures.reserve(n);
        for (std::size_t i = 0; i < n; ++i) {
            const std::string where = "textures[" + std::to_string(i) + "]";
            if (!texs[i].is_array() || texs[i].size() != t2 * 4) {
                invalid(doc, where + " must be a flat array of " + std::to_string(t2 * 4) +
                                 " texel values (r,g,b,raw_alpha interleaved)");
            }
            TextureMap tex;
            tex.tau = tau;
            tex.rgb.reserve(t2 * 3);
            tex.raw_alpha.reserve(t2);
            for (std::size_t k = 0; k < t2; ++k) {
                for (int c = 0; c < 4; ++c) {
                    const json& e = texs[i][k * 4 + static_cast<std::size_t>(c)];
                    if (!e.is_number()) invalid(doc, where + " entries must be numbers");
                    const double v = e.get<double>();
                    if (c < 3) {
                        tex.rgb.push_back(v);
                    } else {
                        tex.raw_alpha.push_back(v);
                    }
                }
            }
            scene.textures.push_back(std::move(tex));
        }
    } else {
        scene.textures.assign(n, make_neutral_texture(tau));
    }

    if (root.contains("deformations")) {
        const json& defs = root.at("deformations");
        if (!defs.is_array() || defs.size() != n) {
            invalid(doc, "deformations must be an array with one entry per primitive");
        }
        scene.deformations.reserve(n);
        for (std::size_t i = 0; i < n; ++i) {
            const std::string where = "deformations[" + std::to_string(i) + "]";
            if (!defs[i].is_array() || defs[i].size() != t2 * 2) {
                invalid(doc, where + " must be a flat array of " + std::to_string(t2 * 2) +
                                 " displacement values (du,dv interleaved)");
            }
            DeformationField field;
            field.tau = tau;
            field.disp.reserve(t2 * 2);
            for (const json& e : defs[i]) {
                if (!e.is_number()) invalid(doc, where + " entries must be numbers");
                field.disp.push_back(e.get<double>());
            }
            scene.deformations.push_back(std::move(field));
        }
    } else {
        scene.deformations.assign(n, make_zero_deformation(tau));
    }

    const std::vector<std::string> violations = validate_scene(scene);
    if (!violations.empty()) invalid(doc, violations.front());
    return scene;
}

std::string serialize_scene(const Scene& scene) {
    json root;
    root["xi"] = scene.xi;
    root["lambda"] = scene.lambda;
    root["background"] = {scene.background.x, scene.background.y, scene.background.z};
    root["tau"] = scene.tau();
    root["sh_degree"] = scene.sh_degree();

    json prims = json::array();
    for (const GaussianPrimitive& prim : scene.primitives) {
        json p;
        p["center"] = {prim.center.x, prim.center.y, prim.center.z};
        p["quaternion"] = {prim.quaternion.w, prim.quaternion.x, prim.quaternion.y,
                           prim.quaternion.z};
        p["raw_scales"] = {prim.raw_scales[0], prim.raw_scales[1]};
        p["raw_opacity"] = prim.raw_opacity;
        p["sh"] = prim.sh;
        prims.push_back(std::move(p));
    }
    root["primitives"] = std::move(prims);

    json texs = json::array();
    for (const TextureMap& tex : scene.textures) {
        json flat = json::array();
        const std::size_t t2 = tex.rgb.size() / 3;
        for (std::size_t k = 0; k < t2; ++k) {
            flat.push_back(tex.rgb[k * 3 + 0]);
            flat.push_back(tex.rgb[k * 3 + 1]);
            flat.push_back(tex.rgb[k * 3 + 2]);
            flat.push_back(tex.raw_alpha[k]);
        }
        texs.push_back(std::move(flat));
    }
    root["textures"] = std::move(texs);

    json defs = json::array();
    for (const DeformationField& field : scene.deformations) defs.push_back(field.disp);
    root["deformations"] = std::move(defs);

    return root.dump(2) + "\n";
}

Scene load_scene(const std::string& path) { return parse_scene_text(read_text_file(path)); }

void save_scene(const Scene& scene, const std::string& path) {
    write_text_file(path, serialize_scene(scene));
}

std::vector<CameraFileEntry> parse_camera_text(const std::string& text) {
    const std::string doc = "camera";
    const json root = parse_json(doc, text);
    if (!root.is_object()) invalid(doc, "top level must be an object");
    if (!root.contains("views")) missing(doc, "views");
    const json& views = root.at("views");
    if (!views.is_array() || views.empty()) invalid(doc, "views must be a non-empty array");

    std::vector<CameraFileEntry> entries;
    entries.reserve(views.size());
    for (std::size_t i = 0; i < views.size(); ++i) {
        const std::string where = "views[" + std::to_string(i) + "].";
        const json& v = views[i];
        if (!v.is_object()) invalid(doc, "views[" + std::to_string(i) + "] must be an object");
        CameraFileEntry entry;
        entry.camera.fx = require_number(doc, v, "fx", where);
        entry.camera.fy = require_number(doc, v, "fy", where);
        entry.camera.cx = require_number(doc, v, "cx", where);
        entry.camera.cy = require_number(doc, v, "cy", where);
        entry.camera.width = require_int(doc, v, "width", where);
        entry.camera.height = require_int(doc, v, "height", where);
        if (entry.camera.width < 1 || entry.camera.height < 1) {
            invalid(doc, where + "width/height must be >= 1");
        }
        if (!(entry.camera.fx > 0.0) || !(entry.camera.fy > 0.0)) {
            invalid(doc, where + "fx/fy must be positive");
        }
        const std::vector<double> wfc =
            require_array(doc, v, "world_from_camera", 12, where);
        for (int r = 0; r < 3; ++r) {
            for (int c = 0; c < 3; ++c) {
                entry.camera.rotation(r, c) = wfc[static_cast<std::size_t>(r) * 4 + c];
            }
        }
        entry.camera.translation = {wfc[3], wfc[7], wfc[11]};
        if (!v.contains("image_path")) missing(doc, where + "image_path");
        if (!v.at("image_path").is_string()) invalid(doc, where + "image_path must be a string");
        entry.image_path = v.at("image_path").get<std::string>();
        if (v.contains("mask_path")) {
            if (!v.at("mask_path").is_string()) invalid(doc, where + "mask_path must be a string");
            entry.mask_path = v.at("mask_path").get<std::string>();
        }
        entries.push_back(std::move(entry));
    }
    return entries;
}

std::string serialize_cameras(const std::vector<CameraFileEntry>& entries) {
    json views = json::array();
    for (const CameraFileEntry& entry : entries) {
        json v;
        v["fx"] = entry.camera.fx;
        v["fy"] = entry.camera.fy;
        v["cx"] = entry.camera.cx;
        v["cy"] = entry.camera.cy;
        v["width"] = entry.camera.width;
        v["height"] = entry.camera.height;
        json wfc = json::array();
        for (int r = 0; r < 3; ++r) {
            for (int c = 0; c < 3; ++c) wfc.push_back(entry.camera.rotation(r, c));
            wfc.push_back(entry.camera.translation[r]);
        }
        v["world_from_camera"] = std::move(wfc);
        v["image_path"] = entry.image_path;
        if (!entry.mask_path.empty()) v["mask_path"] = entry.mask_path;
        views.push_back(std::move(v));
    }
    json root;
    root["views"] = std::move(views);
    return root.dump(2) + "\n";
}

std::vector<CameraFileEntry> load_camera_file(const std::string& path) {
    return parse_camera_text(read_text_file(path));
}

void save_camera_file(const std::vector<CameraFileEntry>& entries, const std::string& path) {
    write_text_file(path, serialize_cameras(entries));
}

std::vector<View> load_views(const std::string& path, bool srgb) {
    const std::vector<CameraFileEntry> entries = load_camera_file(path);
    const std::filesystem::path base = std::filesystem::path(path).parent_path();
    auto resolve = [&](const std::string& p) {
        const std::filesystem::path fp(p);
        return fp.is_absolute() ? fp.string() : (base / fp).string();
    };

    std::vector<View> views;
    views.reserve(entries.size());
    for (std::size_t i = 0; i < entries.size(); ++i) {
        View view;
        view.camera = entries[i].camera;
        view.image = read_image(resolve(entries[i].image_path), srgb);
        if (view.image.channels != 3) {
            throw ValidationError("camera file invalid: views[" + std::to_string(i) +
                                  "] reference image must have 3 channels");
        }
        if (view.image.width != view.camera.width || view.image.height != view.camera.height) {
            throw ValidationError("camera file invalid: views[" + std::to_string(i) +
                                  "] image size does not match the camera intrinsics");
        }
        if (!entries[i].mask_path.empty()) {
            view.mask = read_image(resolve(entries[i].mask_path), false);
            if (view.mask.channels != 1) {
                throw ValidationError("camera file invalid: views[" + std::to_string(i) +
                                      "] mask must be single-channel");
            }
            if (view.mask.width != view.camera.width ||
                view.mask.height != view.camera.height) {
                throw ValidationError("camera file invalid: views[" + std::to_string(i) +
                                      "] mask size does not match the camera intrinsics");
            }
        }
        views.push_back(std::move(view));
    }
    return views;
}

} // namespace factgs
