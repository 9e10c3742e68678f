#include "doctest.h"

#include "factgs/errors.hpp"
#include "factgs/image.hpp"
#include "factgs/scene_io.hpp"

#include "support/oracles.hpp"

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <vector>

using namespace factgs;

namespace {

const char* kMinimalScene = R"({
  "xi": 3.0,
  "background": [0.0, 0.0, 0.0],
  "tau": 2,
  "sh_degree": 0,
  "primitives": [
    {
      "center": [0.0, 0.5, -1.0],
      "quaternion": [1.0, 0.0, 0.0, 0.0],
      "raw_scales": [0.0, 0.0],
      "raw_opacity": 0.0,
      "sh": [0.1, 0.2, 0.3]
    }
  ]
})";

std::string temp_file(const std::string& name) {
    return (std::filesystem::temp_directory_path() / name).string();
}

std::vector<unsigned char> file_bytes(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in.good());
    return std::vector<unsigned char>(std::istreambuf_iterator<char>(in),
                                      std::istreambuf_iterator<char>());
}

bool message_contains(const std::exception& e, const std::string& needle) {
    return std::string(e.what()).find(needle) != std::string::npos;
}

} // namespace

TEST_CASE("a minimal document parses to a neutral-texture scene") {
    const Scene scene = parse_scene_text(kMinimalScene);
    REQUIRE(scene.size() == 1);
    CHECK(scene.xi == 3.0);
    CHECK(scene.lambda == 1.0); // default when the key is absent
    CHECK(scene.tau() == 2);
    CHECK(scene.primitives[0].center.y == 0.5);
    CHECK(scene.primitives[0].sh[2] == 0.3);
    REQUIRE(scene.textures.size() == 1);
    CHECK(scene.textures[0].tau == 2);
    for (double v : scene.textures[0].rgb) CHECK(v == 0.0);
    for (double v : scene.textures[0].raw_alpha) CHECK(v == kNeutralRawAlpha);
    for (double v : scene.deformations[0].disp) CHECK(v == 0.0);
    CHECK(validate_scene(scene).empty());
}

TEST_CASE("syntax, schema, and invariant errors carry distinct prefixes") {
    try {
        (void)parse_scene_text("{ not json");
        FAIL("expected a throw");
    } catch (const ValidationError& e) {
        CHECK(message_contains(e, "scene file syntax error:"));
    }
    try {
        (void)parse_scene_text(R"({"xi": 3.0})");
        FAIL("expected a throw");
    } catch (const ValidationError& e) {
        CHECK(message_contains(e, "scene file missing field:"));
    }
    std::string bad = kMinimalScene;
    const auto pos = bad.find("\"xi\": 3.0");
    bad.replace(pos, 9, "\"xi\": -1.0");
    try {
        (void)parse_scene_text(bad);
        FAIL("expected a throw");
    } catch (const ValidationError& e) {
        CHECK(message_contains(e, "scene file invalid:"));
    }
}

TEST_CASE("arity mistakes name the offending primitive and field") {
    std::string bad = kMinimalScene;
    const auto pos = bad.find("\"raw_scales\": [0.0, 0.0]");
    bad.replace(pos, 24, "\"raw_scales\": [0.0, 0.0, 0.0]");
    try {
        (void)parse_scene_text(bad);
        FAIL("expected a throw");
    } catch (const ValidationError& e) {
        CHECK(message_contains(e, "primitives[0]"));
        CHECK(message_contains(e, "raw_scales"));
    }
}

TEST_CASE("serialization is canonical and round-trips") {
    const Scene scene = parse_scene_text(kMinimalScene);
    const std::string canonical = serialize_scene(scene);
    const Scene reparsed = parse_scene_text(canonical);
    CHECK(serialize_scene(reparsed) == canonical);
    // The canonical form spells out optional sections.
    CHECK(canonical.find("\"textures\"") != std::string::npos);
    CHECK(canonical.find("\"deformations\"") != std::string::npos);
    CHECK(canonical.find("\"lambda\"") != std::string::npos);
}

TEST_CASE("random scenes survive serialize-parse-serialize unchanged") {
    for (int i = 0; i < 200; ++i) {
        oracles::SceneParams params;
        params.n_primitives = 1 + (i % 3);
        const Scene scene = oracles::random_scene(6000 + i, params);
        const std::string text = serialize_scene(scene);
        const Scene back = parse_scene_text(text);
        CHECK(serialize_scene(back) == text);
        REQUIRE(back.size() == scene.size());
        CHECK(back.primitives[0].center.x == scene.primitives[0].center.x);
        CHECK(back.primitives[0].quaternion.w == scene.primitives[0].quaternion.w);
        CHECK(back.textures[0].rgb == scene.textures[0].rgb);
        CHECK(back.deformations[0].disp == scene.deformations[0].disp);
        CHECK(back.xi == scene.xi);
        CHECK(back.lambda == scene.lambda);
    }
}

TEST_CASE("scene files round-trip through disk") {
    const Scene scene = oracles::random_scene(6500);
    const std::string path = temp_file("factgs_scene_roundtrip.json");
    save_scene(scene, path);
    const Scene loaded = load_scene(path);
    CHECK(serialize_scene(loaded) == serialize_scene(scene));
    std::filesystem::remove(path);
    CHECK_THROWS_AS((void)load_scene(path), IoError);
}

TEST_CASE("camera documents round-trip and resolve relative paths") {
    const std::filesystem::path dir =
        std::filesystem::temp_directory_path() / "factgs_views_test";
    std::filesystem::create_directories(dir);

    Image ref(8, 8, 3);
    for (std::size_t i = 0; i < ref.pixels.size(); ++i) ref.pixels[i] = (i % 7) / 7.0;
    write_image(ref, (dir / "ref.ppm").string(), ImageFormat::Ppm, false);
    Image mask(8, 8, 1);
    for (std::size_t i = 0; i < mask.pixels.size(); ++i) mask.pixels[i] = i % 2 ? 1.0 : 0.0;
    write_pgm(mask, (dir / "mask.pgm").string());

    CameraFileEntry entry;
    entry.camera = oracles::test_camera(8);
    entry.image_path = "ref.ppm";
    entry.mask_path = "mask.pgm";
    const std::string doc = (dir / "cameras.json").string();
    save_camera_file({entry}, doc);

    const std::vector<CameraFileEntry> parsed = load_camera_file(doc);
    REQUIRE(parsed.size() == 1);
    CHECK(parsed[0].image_path == "ref.ppm"); // stored verbatim
    CHECK(parsed[0].camera.fx == entry.camera.fx);
    CHECK(parsed[0].camera.rotation(1, 2) == entry.camera.rotation(1, 2));
    CHECK(parsed[0].camera.translation.z == entry.camera.translation.z);

    const std::vector<View> views = load_views(doc);
    REQUIRE(views.size() == 1);
    CHECK(views[0].image.width == 8);
    CHECK(views[0].has_mask());
    // 8-bit quantization round trip: within half a step.
    for (std::size_t i = 0; i < ref.pixels.size(); ++i)
        CHECK(std::abs(views[0].image.pixels[i] - ref.pixels[i]) <= 0.5 / 255.0 + 1e-12);
    for (std::size_t i = 0; i < mask.pixels.size(); ++i)
        CHECK(views[0].mask.pixels[i] == mask.pixels[i]);

    std::filesystem::remove_all(dir);
}

TEST_CASE("camera documents reject missing images and size mismatches") {
    const std::filesystem::path dir =
        std::filesystem::temp_directory_path() / "factgs_views_bad";
    std::filesystem::create_directories(dir);

    CameraFileEntry entry;
    entry.camera = oracles::test_camera(8);
    entry.image_path = "missing.ppm";
    const std::string doc = (dir / "cameras.json").string();
    save_camera_file({entry}, doc);
    CHECK_THROWS_AS((void)load_views(doc), IoError);

    // Present but the wrong size for the declared camera.
    Image small(4, 4, 3);
    write_image(small, (dir / "missing.ppm").string(), ImageFormat::Ppm, false);
    CHECK_THROWS_AS((void)load_views(doc), ValidationError);

    std::filesystem::remove_all(dir);
}

TEST_CASE("camera parse errors carry the camera file prefix") {
    try {
        (void)parse_camera_text("[1, 2");
        FAIL("expected a throw");
    } catch (const ValidationError& e) {
        CHECK(message_contains(e, "camera file syntax error:"));
    }
    try {
        (void)parse_camera_text(R"({"views": [{"fx": 1.0}]})");
        FAIL("expected a throw");
    } catch (const ValidationError& e) {
        CHECK(message_contains(e, "camera file missing field:"));
    }
}

TEST_CASE("quantization rounds half away from zero at the anchors") {
    CHECK(quantize_channel(0.0, false) == 0);
    CHECK(quantize_channel(1.0, false) == 255);
    CHECK(quantize_channel(0.5, false) == 128); // 127.5 rounds up
    CHECK(quantize_channel(-0.2, false) == 0);  // defensive clamp
    CHECK(quantize_channel(1.7, false) == 255);
}

TEST_CASE("the transfer curve hits its standard anchors") {
    CHECK(srgb_encode(0.0) == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(srgb_encode(1.0) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(srgb_encode(0.5) == doctest::Approx(0.7353569830524495).epsilon(1e-9));
    CHECK(quantize_channel(0.5, true) == 188);
    // Below the linear-segment knee.
    CHECK(srgb_encode(0.002) == doctest::Approx(0.002 * 12.92).epsilon(1e-12));
}

TEST_CASE("the transfer curve inverts itself") {
    std::mt19937_64 rng(661);
    for (int i = 0; i < 250; ++i) {
        const double v = oracles::uniform(rng, 0.0, 1.0);
        CHECK(srgb_decode(srgb_encode(v)) == doctest::Approx(v).epsilon(1e-12));
    }
}

TEST_CASE("binary image payloads are exact and reproducible") {
    Image one(1, 1, 3);
    one.pixels = {1.0, 1.0, 1.0};
    const std::string path = temp_file("factgs_one.ppm");
    write_image(one, path, ImageFormat::Ppm, false);
    const std::vector<unsigned char> expected = {'P', '6', '\n', '1', ' ', '1', '\n',
                                                 '2', '5', '5', '\n', 255, 255, 255};
    CHECK(file_bytes(path) == expected);
    write_image(one, path, ImageFormat::Ppm, false);
    CHECK(file_bytes(path) == expected); // byte-identical on rewrite
    std::filesystem::remove(path);
}

TEST_CASE("a golden gradient image has frozen bytes") {
    Image img(2, 2, 3);
    img.pixels = {0.0, 0.25, 0.5, 0.75, 1.0, 0.1, 0.2, 0.3, 0.4, 0.6, 0.7, 0.8};
    const std::string path = temp_file("factgs_golden.ppm");
    write_image(img, path, ImageFormat::Ppm, false);
    const std::vector<unsigned char> expected = {
        'P', '6', '\n', '2', ' ', '2', '\n', '2', '5', '5', '\n',
        0, 64, 128, 191, 255, 26, 51, 77, 102, 153, 179, 204};
    CHECK(file_bytes(path) == expected);
    std::filesystem::remove(path);
}

TEST_CASE("images survive the write-read round trip in both formats") {
    std::mt19937_64 rng(662);
    Image img = oracles::random_image(rng, 6, 4, 3);
    for (ImageFormat format : {ImageFormat::Ppm, ImageFormat::Png}) {
        const std::string path =
            temp_file(format == ImageFormat::Ppm ? "factgs_rt.ppm" : "factgs_rt.png");
        write_image(img, path, format, false);
        const Image back = read_image(path);
        REQUIRE(back.width == 6);
        REQUIRE(back.height == 4);
        REQUIRE(back.channels == 3);
        for (std::size_t i = 0; i < img.pixels.size(); ++i)
            CHECK(std::abs(back.pixels[i] - img.pixels[i]) <= 0.5 / 255.0 + 1e-12);
        std::filesystem::remove(path);
    }
}

TEST_CASE("both formats quantize to identical byte values") {
    std::mt19937_64 rng(663);
    const Image img = oracles::random_image(rng, 5, 5, 3);
    const std::string ppm = temp_file("factgs_match.ppm");
    const std::string png = temp_file("factgs_match.png");
    write_image(img, ppm, ImageFormat::Ppm, true);
    write_image(img, png, ImageFormat::Png, true);
    const Image from_ppm = read_image(ppm);
    const Image from_png = read_image(png);
    CHECK(from_ppm.pixels == from_png.pixels);
    std::filesystem::remove(ppm);
    std::filesystem::remove(png);
}

TEST_CASE("single-channel masks round-trip through PGM") {
    Image mask(3, 2, 1);
    mask.pixels = {0.0, 1.0, 0.0, 1.0, 1.0, 0.0};
    const std::string path = temp_file("factgs_mask.pgm");
    write_pgm(mask, path);
    const Image back = read_image(path);
    REQUIRE(back.channels == 1);
    CHECK(back.pixels == mask.pixels);
    std::filesystem::remove(path);
}

TEST_CASE("corrupt image files are reported as such") {
    const std::string path = temp_file("factgs_corrupt.ppm");
    std::ofstream(path, std::ios::binary) << "P6\n4 4\n255\nab"; // truncated payload
    CHECK_THROWS_AS((void)read_image(path), IoError);
    std::ofstream(path, std::ios::binary) << "Q9\n";
    CHECK_THROWS_AS((void)read_image(path), IoError);
    std::filesystem::remove(path);
    CHECK_THROWS_AS((void)read_image(path), IoError);
}
