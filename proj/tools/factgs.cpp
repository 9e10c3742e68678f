#include "factgs/compositor.hpp"
#include "factgs/diff_engine.hpp"
#include "factgs/errors.hpp"
#include "factgs/image.hpp"
#include "factgs/losses.hpp"
#include "factgs/scene_io.hpp"
#include "factgs/synthetic_bench.hpp"
#include "factgs/trainer.hpp"

#include "CLI11.hpp"
#include "json.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

namespace {

using namespace factgs;

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitCheckFailed = 3;

std::string indexed_name(const char* stem, std::size_t index, const char* ext) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%s_%03zu.%s", stem, index, ext);
    return buf;
}

void write_csv_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open report for writing: " + path);
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    if (!out) throw IoError("failed writing report: " + path);
}

// ---------------------------------------------------------------- synth ---

struct SynthArgs {
    std::string pattern = "checkerboard";
    int size = 64;
    std::string out_dir;
    int views = 5;
    std::uint64_t seed = 0;
    int primitives = 16;
    int tau = 4;
    int sh_degree = 0;
    int image_size = 64;
    double cell = 8.0;
    double period_min = 4.0;
    double period_max = 32.0;
    double edge_pos = 0.5;
};

int cmd_synth(const SynthArgs& args) {
    PatternSpec spec;
    spec.kind = pattern_kind_from_name(args.pattern);
    spec.size = args.size;
    spec.cell = args.cell;
    spec.period_min = args.period_min;
    spec.period_max = args.period_max;
    spec.edge_pos = args.edge_pos;

    SceneGenConfig gen;
    gen.n_primitives = args.primitives;
    gen.tau = args.tau;
    gen.sh_degree = args.sh_degree;
    gen.views = args.views;
    gen.image_size = args.image_size;

    const Image pattern = gen_pattern(spec);
    auto [scene, views] = gen_scene(pattern, gen);

    namespace fs = std::filesystem;
    fs::create_directories(args.out_dir);
    const fs::path dir(args.out_dir);

    write_image(pattern, (dir / "pattern.png").string(), ImageFormat::Png, false);
    save_scene(scene, (dir / "scene.json").string());

    std::vector<CameraFileEntry> entries;
    entries.reserve(views.size());
    for (std::size_t i = 0; i < views.size(); ++i) {
        const std::string image_name = indexed_name("view", i, "ppm");
        const std::string mask_name = indexed_name("mask", i, "pgm");
        write_image(views[i].image, (dir / image_name).string(), ImageFormat::Ppm, false);
        write_pgm(views[i].mask, (dir / mask_name).string());
        CameraFileEntry entry;
        entry.camera = views[i].camera;
        entry.image_path = image_name;
        entry.mask_path = mask_name;
        entries.push_back(std::move(entry));
    }
    save_camera_file(entries, (dir / "cameras.json").string());

    std::cout << "wrote " << views.size() << " views, scene.json, cameras.json to "
              << args.out_dir << "\n";
    (void)args.seed; // layout and patterns are fully deterministic
    return kExitOk;
}

// ---------------------------------------------------------------- train ---

struct TrainArgs {
    std::string scene_path;
    std::string cameras_path;
    std::string stage = "both";
    int iters = -1;
    int stage1_iters = 2000;
    int stage2_iters = 2000;
    double lambda = 1.0;
    double eta = 0.2;
    double lr_tex = 2.5e-3;
    double lr_def = 1e-3;
    double mask_weight = 1.0;
    double fold_reg = 0.0;
    std::uint64_t seed = 0;
    std::string mode = "fact";
    std::string checkpoint_out;
    int checkpoint_every = 0;
    bool deterministic = false;
    bool srgb = false;
    int threads = 0;
    std::string loss_out;
};

int cmd_train(const TrainArgs& args) {
    Scene scene = load_scene(args.scene_path);
    const std::vector<View> views = load_views(args.cameras_path, args.srgb);

    TrainConfig cfg;
    if (args.iters >= 0) {
        cfg.stage1_iters = args.iters;
        cfg.stage2_iters = args.iters;
    } else {
        cfg.stage1_iters = args.stage1_iters;
        cfg.stage2_iters = args.stage2_iters;
    }
    cfg.mode = render_mode_from_name(args.mode);
    cfg.lambda = args.lambda;
    cfg.eta = args.eta;
    cfg.mask_weight = args.mask_weight;
    cfg.fold_reg_weight = args.fold_reg;
    cfg.seed = args.seed;
    cfg.rates.texture = args.lr_tex;
    cfg.rates.deformation = args.lr_def;
    cfg.checkpoint_every = args.checkpoint_every;
    cfg.checkpoint_path = args.checkpoint_out;
    cfg.tape.mode = args.deterministic ? TapeConfig::Mode::Deterministic : TapeConfig::Mode::Fast;
    cfg.tape.threads = args.threads;

    TrainResult result;
    std::vector<double> history;
    RenderMode final_mode = cfg.mode;
    if (args.stage == "1") {
        result = stage1_train(std::move(scene), views, cfg);
        final_mode = RenderMode::Uniform; // stage 1 leaves textures neutral
    } else if (args.stage == "2") {
        result = stage2_train(std::move(scene), views, cfg);
    } else if (args.stage == "both") {
        TrainResult first = stage1_train(std::move(scene), views, cfg);
        history = std::move(first.loss_history);
        result = stage2_train(std::move(first.scene), views, cfg);
    } else {
        throw ValidationError("--stage must be 1, 2, or both");
    }
    history.insert(history.end(), result.loss_history.begin(), result.loss_history.end());

    if (!history.empty()) {
        std::cout << "final loss " << history.back() << " after " << history.size()
                  << " iterations\n";
    }
    if (!args.checkpoint_out.empty()) {
        save_checkpoint(result.scene, result.state, final_mode, args.checkpoint_out);
        std::cout << "checkpoint written to " << args.checkpoint_out << "\n";
    }
    if (!args.loss_out.empty()) {
        std::ostringstream csv;
        csv.precision(17);
        csv << "iteration,loss\n";
        for (std::size_t i = 0; i < history.size(); ++i) csv << i << ',' << history[i] << '\n';
        write_csv_file(args.loss_out, csv.str());
    }
    return kExitOk;
}

// --------------------------------------------------------------- render ---

int cmd_render(const std::string& checkpoint_path, const std::string& cameras_path,
               const std::string& out_dir, bool srgb, int threads) {
    const Checkpoint ckpt = load_checkpoint(checkpoint_path);
    const std::vector<CameraFileEntry> entries = load_camera_file(cameras_path);

    namespace fs = std::filesystem;
    fs::create_directories(out_dir);
    const fs::path dir(out_dir);
    for (std::size_t i = 0; i < entries.size(); ++i) {
        const RenderOutput out = render(ckpt.scene, entries[i].camera, ckpt.mode, threads);
        write_image(out.color, (dir / indexed_name("view", i, "png")).string(),
                    ImageFormat::Png, srgb);
        write_pgm(out.alpha, (dir / indexed_name("alpha", i, "pgm")).string());
    }
    std::cout << "rendered " << entries.size() << " views to " << out_dir << "\n";
    return kExitOk;
}

// ----------------------------------------------------------------- eval ---

int cmd_eval(const std::string& checkpoint_path, const std::string& cameras_path,
             const std::string& report_path, bool srgb, int threads) {
    const Checkpoint ckpt = load_checkpoint(checkpoint_path);
    const std::vector<View> views = load_views(cameras_path, srgb);

    std::ostringstream csv;
    csv.precision(17);
    csv << "view,psnr_db,ssim\n";
    double psnr_sum = 0.0;
    double ssim_sum = 0.0;
    for (std::size_t i = 0; i < views.size(); ++i) {
        const RenderOutput out = render(ckpt.scene, views[i].camera, ckpt.mode, threads);
        const double p = psnr(out.color, views[i].image);
        const double s = ssim_index(out.color, views[i].image);
        csv << i << ',' << p << ',' << s << '\n';
        psnr_sum += p;
        ssim_sum += s;
    }
    const double n = static_cast<double>(views.size());
    csv << "mean," << psnr_sum / n << ',' << ssim_sum / n << '\n';
    write_csv_file(report_path, csv.str());
    std::cout << "mean psnr " << psnr_sum / n << " dB, mean ssim " << ssim_sum / n << " over "
              << views.size() << " views\n";
    return kExitOk;
}

// -------------------------------------------------------------- analyze ---

int cmd_analyze(const std::string& checkpoint_path, const std::string& out_dir,
                const std::string& cameras_path, double alpha_exp, double epsilon,
                int density_res) {
    const Checkpoint ckpt = load_checkpoint(checkpoint_path);
    namespace fs = std::filesystem;
    fs::create_directories(out_dir);
    const fs::path dir(out_dir);

    const FrequencyReport freq = frequency_report(ckpt.scene.textures);
    write_frequency_csv(freq, (dir / "texture_freq.csv").string(),
                        (dir / "texture_freq_hist.csv").string());

    auto normalize_to_unit = [](Image& img) {
        double peak = 0.0;
        for (double v : img.pixels) peak = std::max(peak, v);
        if (peak > 0.0) {
            for (double& v : img.pixels) v /= peak;
        }
    };

    const int tau = ckpt.scene.tau();
    for (std::size_t k = 0; k < ckpt.scene.size(); ++k) {
        // |det J| displayed with identity mapped to mid-gray (value / 2).
        Image jac = jacobian_density_map(ckpt.scene.deformations[k], ckpt.scene.lambda,
                                         density_res);
        for (double& v : jac.pixels) v = std::min(v / 2.0, 1.0);
        write_pgm(jac, (dir / indexed_name("jacobian", k, "pgm")).string());

        // Target sampling density of the stored texture content, peak-scaled.
        Image patch(tau, tau, 3);
        const TextureMap& tex = ckpt.scene.textures[k];
        for (std::size_t i = 0; i < patch.pixels.size(); ++i) patch.pixels[i] = tex.rgb[i];
        Image density = target_density(patch, alpha_exp, epsilon);
        normalize_to_unit(density);
        write_pgm(density, (dir / indexed_name("target_density", k, "pgm")).string());
    }

    if (!cameras_path.empty()) {
        const std::vector<View> views = load_views(cameras_path, false);
        for (std::size_t i = 0; i < views.size(); ++i) {
            Image density = target_density(views[i].image, alpha_exp, epsilon);
            normalize_to_unit(density);
            write_pgm(density, (dir / indexed_name("view_density", i, "pgm")).string());
        }
    }

    std::cout << "mean texture frequency " << freq.mean << ", median " << freq.median << "; "
              << "wrote per-texture maps for " << ckpt.scene.size() << " primitives to "
              << out_dir << "\n";
    return kExitOk;
}

// ------------------------------------------------------------- gradcheck ---

int cmd_gradcheck(const std::string& scene_path, const std::string& cameras_path, double h,
                  double tol, double eta, bool srgb) {
    const Scene scene = load_scene(scene_path);
    const std::vector<View> views = load_views(cameras_path, srgb);
    LossConfig cfg;
    cfg.eta = eta;
    const GradCheckReport report = grad_check(scene, views, cfg, RenderMode::Fact, h, tol);
    std::cout << format_report(report);
    return report.pass ? kExitOk : kExitCheckFailed;
}

// -------------------------------------------------------------- compare ---

int cmd_compare(const std::string& config_path, const std::string& report_path) {
    std::ifstream in(config_path, std::ios::binary);
    if (!in) throw IoError("cannot open config: " + config_path);
    nlohmann::json root;
    try {
        root = nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw ValidationError(std::string("config file syntax error: ") + e.what());
    }

    PatternSpec spec;
    if (root.contains("pattern")) {
        const auto& p = root.at("pattern");
        if (p.contains("kind")) spec.kind = pattern_kind_from_name(p.at("kind").get<std::string>());
        if (p.contains("size")) spec.size = p.at("size").get<int>();
        if (p.contains("cell")) spec.cell = p.at("cell").get<double>();
        if (p.contains("period_min")) spec.period_min = p.at("period_min").get<double>();
        if (p.contains("period_max")) spec.period_max = p.at("period_max").get<double>();
        if (p.contains("edge_pos")) spec.edge_pos = p.at("edge_pos").get<double>();
    }

    SceneGenConfig gen;
    if (root.contains("scene")) {
        const auto& s = root.at("scene");
        if (s.contains("n_primitives")) gen.n_primitives = s.at("n_primitives").get<int>();
        if (s.contains("tau")) gen.tau = s.at("tau").get<int>();
        if (s.contains("sh_degree")) gen.sh_degree = s.at("sh_degree").get<int>();
        if (s.contains("views")) gen.views = s.at("views").get<int>();
        if (s.contains("image_size")) gen.image_size = s.at("image_size").get<int>();
    }

    TrainConfig train;
    if (root.contains("train")) {
        const auto& t = root.at("train");
        if (t.contains("stage1_iters")) train.stage1_iters = t.at("stage1_iters").get<int>();
        if (t.contains("stage2_iters")) train.stage2_iters = t.at("stage2_iters").get<int>();
        if (t.contains("lambda")) train.lambda = t.at("lambda").get<double>();
        if (t.contains("eta")) train.eta = t.at("eta").get<double>();
        if (t.contains("mask_weight")) train.mask_weight = t.at("mask_weight").get<double>();
        if (t.contains("fold_reg_weight")) {
            train.fold_reg_weight = t.at("fold_reg_weight").get<double>();
        }
        if (t.contains("seed")) train.seed = t.at("seed").get<std::uint64_t>();
        if (t.contains("deterministic") && t.at("deterministic").get<bool>()) {
            train.tape.mode = TapeConfig::Mode::Deterministic;
        } else {
            train.tape.mode = TapeConfig::Mode::Fast;
        }
        if (t.contains("threads")) train.tape.threads = t.at("threads").get<int>();
    }
    gen.lambda = train.lambda;

    std::vector<CompareRun> runs;
    if (!root.contains("runs") || !root.at("runs").is_array() || root.at("runs").empty()) {
        throw ValidationError("config file missing field: runs");
    }
    for (const auto& r : root.at("runs")) {
        CompareRun run;
        if (!r.contains("mode")) throw ValidationError("config file missing field: runs[].mode");
        run.mode = render_mode_from_name(r.at("mode").get<std::string>());
        run.tau = r.contains("tau") ? r.at("tau").get<int>() : gen.tau;
        runs.push_back(run);
    }
    const std::string out_dir = root.contains("out_dir") ? root.at("out_dir").get<std::string>()
                                                         : std::string{};

    const ExperimentReport report = run_comparison(spec, gen, train, runs, out_dir);
    write_experiment_csv(report, report_path);
    for (const ExperimentRow& row : report.rows) {
        std::cout << render_mode_name(row.mode) << " tau=" << row.tau
                  << " texel_params=" << row.texel_params << " psnr=" << row.psnr_db
                  << " ssim=" << row.ssim << " mean_freq=" << row.mean_freq << "\n";
    }
    std::cout << "report written to " << report_path << "\n";
    return kExitOk;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Textured Gaussian splatting with frequency-adaptive texture warps"};
    app.require_subcommand(1);

    SynthArgs synth;
    CLI::App* synth_cmd =
        app.add_subcommand("synth", "Generate an analytic pattern, scene, cameras, and views");
    synth_cmd->add_option("--pattern", synth.pattern,
                          "checkerboard | stripes | frequency_sweep | flat_plus_edge");
    synth_cmd->add_option("--size", synth.size, "pattern size in pixels");
    synth_cmd->add_option("--out-dir", synth.out_dir, "output directory")->required();
    synth_cmd->add_option("--views", synth.views, "number of orbit views");
    synth_cmd->add_option("--seed", synth.seed, "seed recorded for provenance");
    synth_cmd->add_option("--primitives", synth.primitives, "number of Gaussians");
    synth_cmd->add_option("--tau", synth.tau, "texture resolution per Gaussian");
    synth_cmd->add_option("--sh-degree", synth.sh_degree, "spherical harmonics degree");
    synth_cmd->add_option("--image-size", synth.image_size, "rendered view resolution");
    synth_cmd->add_option("--cell", synth.cell, "checkerboard cell / stripe period, pixels");
    synth_cmd->add_option("--period-min", synth.period_min, "sweep period at the right edge");
    synth_cmd->add_option("--period-max", synth.period_max, "sweep period at the left edge");
    synth_cmd->add_option("--edge-pos", synth.edge_pos, "edge position fraction");

    TrainArgs train;
    CLI::App* train_cmd = app.add_subcommand("train", "Optimize a scene against its views");
    train_cmd->add_option("--scene", train.scene_path, "scene file")->required();
    train_cmd->add_option("--cameras", train.cameras_path, "camera file")->required();
    train_cmd->add_option("--stage", train.stage, "1 | 2 | both");
    train_cmd->add_option("--iters", train.iters, "iterations (applies to every selected stage)");
    train_cmd->add_option("--stage1-iters", train.stage1_iters, "stage 1 iterations");
    train_cmd->add_option("--stage2-iters", train.stage2_iters, "stage 2 iterations");
    train_cmd->add_option("--lambda", train.lambda, "deformation warp scale");
    train_cmd->add_option("--eta", train.eta, "L1 weight in the photometric loss");
    train_cmd->add_option("--lr-tex", train.lr_tex, "texture learning rate");
    train_cmd->add_option("--lr-def", train.lr_def, "deformation learning rate");
    train_cmd->add_option("--mask-weight", train.mask_weight, "alpha supervision weight");
    train_cmd->add_option("--fold-reg", train.fold_reg, "fold penalty weight");
    train_cmd->add_option("--seed", train.seed, "view sampling seed");
    train_cmd->add_option("--mode", train.mode, "fact | uniform | no_texture");
    train_cmd->add_option("--checkpoint-out", train.checkpoint_out, "final checkpoint path");
    train_cmd->add_option("--checkpoint-every", train.checkpoint_every,
                          "snapshot cadence in iterations (0 = never)");
    train_cmd->add_flag("--deterministic", train.deterministic,
                        "bit-reproducible gradient accumulation");
    train_cmd->add_flag("--srgb", train.srgb, "decode reference images from sRGB");
    train_cmd->add_option("--threads", train.threads, "worker threads (0 = hardware)");
    train_cmd->add_option("--loss-out", train.loss_out, "per-iteration loss CSV");

    std::string render_checkpoint, render_cameras, render_out_dir;
    bool render_srgb = false;
    int render_threads = 0;
    CLI::App* render_cmd = app.add_subcommand("render", "Render checkpoint views");
    render_cmd->add_option("--checkpoint", render_checkpoint, "checkpoint file")->required();
    render_cmd->add_option("--cameras", render_cameras, "camera file")->required();
    render_cmd->add_option("--out-dir", render_out_dir, "output directory")->required();
    render_cmd->add_flag("--srgb", render_srgb, "encode output through the sRGB transfer");
    render_cmd->add_option("--threads", render_threads, "worker threads (0 = hardware)");

    std::string eval_checkpoint, eval_cameras, eval_report;
    bool eval_srgb = false;
    int eval_threads = 0;
    CLI::App* eval_cmd = app.add_subcommand("eval", "PSNR/SSIM against reference views");
    eval_cmd->add_option("--checkpoint", eval_checkpoint, "checkpoint file")->required();
    eval_cmd->add_option("--cameras", eval_cameras, "camera file")->required();
    eval_cmd->add_option("--report", eval_report, "CSV output path")->required();
    eval_cmd->add_flag("--srgb", eval_srgb, "decode reference images from sRGB");
    eval_cmd->add_option("--threads", eval_threads, "worker threads (0 = hardware)");

    std::string analyze_checkpoint, analyze_out_dir, analyze_cameras;
    double analyze_alpha = 1.0;
    double analyze_eps = 1e-3;
    int analyze_res = 32;
    CLI::App* analyze_cmd =
        app.add_subcommand("analyze", "Frequency histograms and sampling-density maps");
    analyze_cmd->add_option("--checkpoint", analyze_checkpoint, "checkpoint file")->required();
    analyze_cmd->add_option("--out-dir", analyze_out_dir, "output directory")->required();
    analyze_cmd->add_option("--cameras", analyze_cameras,
                            "optional camera file for reference-image density maps");
    analyze_cmd->add_option("--alpha", analyze_alpha, "target-density exponent");
    analyze_cmd->add_option("--epsilon", analyze_eps, "target-density floor");
    analyze_cmd->add_option("--density-res", analyze_res, "Jacobian map resolution");

    std::string gc_scene, gc_cameras;
    double gc_h = 1e-4;
    double gc_tol = 1e-3;
    double gc_eta = 0.2;
    bool gc_srgb = false;
    CLI::App* gc_cmd = app.add_subcommand("gradcheck", "Finite-difference gradient validation");
    gc_cmd->set_help_flag("--help", "print help"); // frees -h for the step size below
    gc_cmd->add_option("--scene", gc_scene, "scene file")->required();
    gc_cmd->add_option("--cameras", gc_cameras, "camera file")->required();
    gc_cmd->add_option("--h", gc_h, "central difference step");
    gc_cmd->add_option("--tol", gc_tol, "relative error tolerance");
    gc_cmd->add_option("--eta", gc_eta, "L1 weight (1 = skip SSIM, allows tiny views)");
    gc_cmd->add_flag("--srgb", gc_srgb, "decode reference images from sRGB");

    std::string cmp_config, cmp_report;
    CLI::App* cmp_cmd = app.add_subcommand("compare", "Run the mode-comparison experiment");
    cmp_cmd->add_option("--config", cmp_config, "experiment config JSON")->required();
    cmp_cmd->add_option("--report", cmp_report, "CSV output path")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (*synth_cmd) return cmd_synth(synth);
        if (*train_cmd) return cmd_train(train);
        if (*render_cmd) {
            return cmd_render(render_checkpoint, render_cameras, render_out_dir, render_srgb,
                              render_threads);
        }
        if (*eval_cmd) {
            return cmd_eval(eval_checkpoint, eval_cameras, eval_report, eval_srgb, eval_threads);
        }
        if (*analyze_cmd) {
            return cmd_analyze(analyze_checkpoint, analyze_out_dir, analyze_cameras,
                               analyze_alpha, analyze_eps, analyze_res);
        }
        if (*gc_cmd) return cmd_gradcheck(gc_scene, gc_cameras, gc_h, gc_tol, gc_eta, gc_srgb);
        if (*cmp_cmd) return cmd_compare(cmp_config, cmp_report);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitData;
    }
    return kExitUsage;
}
