#include "factgs/losses.hpp"

#include "factgs/errors.hpp"
#include "factgs/warp.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <limits>

namespace factgs {

namespace {

constexpr int kWin = 11;
constexpr double kSsimC1 = 0.01 * 0.01;
constexpr double kSsimC2 = 0.03 * 0.03;

// 11-tap Gaussian window, sigma 1.5, normalized to sum 1.
const std::array<double, kWin>& ssim_kernel() {
    static const std::array<double, kWin> kernel = [] {
        std::array<double, kWin> k{};
        double sum = 0.0;
        for (int i = 0; i < kWin; ++i) {
            const double d = i - (kWin - 1) / 2.0;
            k[i] = std::exp(-d * d / (2.0 * 1.5 * 1.5));
            sum += k[i];
        }
        for (double& v : k) v /= sum;
        return k;
    }();
    return kernel;
}

void check_same_shape(const Image& a, const Image& b, const char* what) {
    if (a.width != b.width || a.height != b.height || a.channels != b.channels) {
        throw ValidationError(std::string(what) + ": image shapes differ");
    }
}

// Window-weighted sums of x, y, x^2, y^2, xy over every window fully inside
// the image (separable passes). Output fields are hv x wv.
struct WindowMoments {
    int hv = 0, wv = 0;
    std::vector<double> mx, my, sxx, syy, sxy;
};

WindowMoments window_moments(const std::vector<double>& x, const std::vector<double>& y,
                             int width, int height) {
    const auto& kern = ssim_kernel();
    WindowMoments m;
    m.hv = height - kWin + 1;
    m.wv = width - kWin + 1;
    const std::size_t n_valid = static_cast<std::size_t>(m.hv) * m.wv;
    m.mx.assign(n_valid, 0.0);
    m.my.assign(n_valid, 0.0);
    m.sxx.assign(n_valid, 0.0);
    m.syy.assign(n_valid, 0.0);
    m.sxy.assign(n_valid, 0.0);

    // Horizontal pass: height rows, wv columns, five quantities interleaved.
    const std::size_t n_h = static_cast<std::size_t>(height) * m.wv;
    std::vector<double> h(n_h * 5, 0.0);
    for (int row = 0; row < height; ++row) {
        const double* px = x.data() + static_cast<std::size_t>(row) * width;
        const double* py = y.data() + static_cast<std::size_t>(row) * width;
        double* out = h.data() + static_cast<std::size_t>(row) * m.wv * 5;
        for (int col = 0; col < m.wv; ++col) {
            double sx = 0.0, sy = 0.0, sxx = 0.0, syy = 0.0, sxy = 0.0;
            for (int k = 0; k < kWin; ++k) {
                const double w = kern[k];
                const double vx = px[col + k];
                const double vy = py[col + k];
                sx += w * vx;
                sy += w * vy;
                sxx += w * vx * vx;
                syy += w * vy * vy;
                sxy += w * vx * vy;
            }
            out[col * 5 + 0] = sx;
            out[col * 5 + 1] = sy;
            out[col * 5 + 2] = sxx;
            out[col * 5 + 3] = syy;
            out[col * 5 + 4] = sxy;
        }
    }
    // Vertical pass over the horizontal sums.
    for (int row = 0; row < m.hv; ++row) {
        for (int col = 0; col < m.wv; ++col) {
            double acc[5] = {0.0, 0.0, 0.0, 0.0, 0.0};
            for (int k = 0; k < kWin; ++k) {
                const double w = kern[k];
                const double* src = h.data() + (static_cast<std::size_t>(row + k) * m.wv + col) * 5;
                for (int q = 0; q < 5; ++q) acc[q] += w * src[q];
            }
            const std::size_t at = static_cast<std::size_t>(row) * m.wv + col;
            m.mx[at] = acc[0];
            m.my[at] = acc[1];
            m.sxx[at] = acc[2];
            m.syy[at] = acc[3];
            m.sxy[at] = acc[4];
        }
    }
    return m;
}

// Transpose of the valid-window weighted sum: spreads a field defined on the
// hv x wv valid grid back onto the full height x width grid.
std::vector<double> spread_field(const std::vector<double>& field, int hv, int wv, int width,
                                 int height) {
    const auto& kern = ssim_kernel();
    // Vertical spread: rows grow from hv to height.
    std::vector<double> tmp(static_cast<std::size_t>(height) * wv, 0.0);
    for (int row = 0; row < height; ++row) {
        for (int k = 0; k < kWin; ++k) {
            const int src_row = row - k;
            if (src_row < 0 || src_row >= hv) continue;
            const double w = kern[k];
            const double* src = field.data() + static_cast<std::size_t>(src_row) * wv;
            double* dst = tmp.data() + static_cast<std::size_t>(row) * wv;
            for (int col = 0; col < wv; ++col) dst[col] += w * src[col];
        }
    }
    // Horizontal spread: columns grow from wv to width.
    std::vector<double> out(static_cast<std::size_t>(height) * width, 0.0);
    for (int row = 0; row < height; ++row) {
        const double* src = tmp.data() + static_cast<std::size_t>(row) * wv;
        double* dst = out.data() + static_cast<std::size_t>(row) * width;
        for (int col = 0; col < wv; ++col) {
            const double v = src[col];
            if (v == 0.0) continue;
            for (int k = 0; k < kWin; ++k) dst[col + k] += kern[k] * v;
        }
    }
    return out;
}

std::vector<double> extract_plane(const Image& img, int channel) {
    std::vector<double> plane(static_cast<std::size_t>(img.width) * img.height);
    for (int y = 0; y < img.height; ++y) {
        for (int x = 0; x < img.width; ++x) {
            plane[static_cast<std::size_t>(y) * img.width + x] = img.at(y, x, channel);
        }
    }
    return plane;
}

// Shared forward/backward SSIM core; d_a may be null (forward only).
double ssim_impl(const Image& a, const Image& b, Image* d_a) {
    check_same_shape(a, b, "ssim_index");
    if (a.width < kWin || a.height < kWin) {
        throw ValidationError("ssim_index: image smaller than the 11x11 window");
    }
    if (d_a) *d_a = Image(a.width, a.height, a.channels);

    const int hv = a.height - kWin + 1;
    const int wv = a.width - kWin + 1;
    const std::size_t n_valid = static_cast<std::size_t>(hv) * wv;
    const double count = static_cast<double>(n_valid) * a.channels;

    double total = 0.0;
    std::vector<double> c1f, c2f, c3f;
    for (int c = 0; c < a.channels; ++c) {
        const std::vector<double> x = extract_plane(a, c);
        const std::vector<double> y = extract_plane(b, c);
        const WindowMoments m = window_moments(x, y, a.width, a.height);
        if (d_a) {
            c1f.assign(n_valid, 0.0);
            c2f.assign(n_valid, 0.0);
            c3f.assign(n_valid, 0.0);
        }
        for (std::size_t p = 0; p < n_valid; ++p) {
            const double mx = m.mx[p], my = m.my[p];
            const double sigma_x2 = m.sxx[p] - mx * mx;
            const double sigma_y2 = m.syy[p] - my * my;
            const double sigma_xy = m.sxy[p] - mx * my;
            const double a1 = 2.0 * mx * my + kSsimC1;
            const double a2 = 2.0 * sigma_xy + kSsimC2;
            const double b1 = mx * mx + my * my + kSsimC1;
            const double b2 = sigma_x2 + sigma_y2 + kSsimC2;
            const double s = (a1 * a2) / (b1 * b2);
            total += s;
            if (d_a) {
                const double ds_dmx = (2.0 * my * a2) / (b1 * b2) - s * (2.0 * mx) / b1;
                const double ds_dsx2 = -s / b2;
                const double ds_dsxy = (2.0 * a1) / (b1 * b2);
                // Convert (mx, sigma_x2, sigma_xy) partials to partials in the
                // raw window sums (mx, sxx, sxy), which are linear in x.
                c1f[p] = (ds_dmx - 2.0 * mx * ds_dsx2 - my * ds_dsxy) / count;
                c2f[p] = ds_dsx2 / count;
                c3f[p] = ds_dsxy / count;
            }
        }
        if (d_a) {
            const std::vector<double> s1 = spread_field(c1f, hv, wv, a.width, a.height);
            const std::vector<double> s2 = spread_field(c2f, hv, wv, a.width, a.height);
            const std::vector<double> s3 = spread_field(c3f, hv, wv, a.width, a.height);
            for (int row = 0; row < a.height; ++row) {
                for (int col = 0; col < a.width; ++col) {
                    const std::size_t q = static_cast<std::size_t>(row) * a.width + col;
                    d_a->at(row, col, c) = s1[q] + 2.0 * x[q] * s2[q] + y[q] * s3[q];
                }
            }
        }
    }
    return total / count;
}

double sgn(double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); }

} // namespace

double l1_loss(const Image& a, const Image& b) {
    check_same_shape(a, b, "l1_loss");
    double sum = 0.0;
    for (std::size_t i = 0; i < a.pixels.size(); ++i) sum += std::abs(a.pixels[i] - b.pixels[i]);
    return sum / static_cast<double>(a.pixels.size());
}

double ssim_index(const Image& a, const Image& b) { return ssim_impl(a, b, nullptr); }

double ssim_index_grad(const Image& a, const Image& b, Image& d_a) {
    return ssim_impl(a, b, &d_a);
}

double psnr(const Image& a, const Image& b) {
    check_same_shape(a, b, "psnr");
    double sum = 0.0;
    for (std::size_t i = 0; i < a.pixels.size(); ++i) {
        const double d = a.pixels[i] - b.pixels[i];
        sum += d * d;
    }
    const double mse = sum / static_cast<double>(a.pixels.size());
    if (mse == 0.0) return std::numeric_limits<double>::infinity();
    return 10.0 * std::log10(1.0 / mse);
}

double total_loss(const RenderOutput& rendered, const View& view, const LossConfig& cfg) {
    check_same_shape(rendered.color, view.image, "total_loss");
    double loss = cfg.eta * l1_loss(rendered.color, view.image);
    if (cfg.eta != 1.0) {
        loss += (1.0 - cfg.eta) * (1.0 - ssim_index(rendered.color, view.image));
    }
    if (view.has_mask()) {
        check_same_shape(rendered.alpha, view.mask, "total_loss (mask)");
        loss += cfg.mask_weight * l1_loss(rendered.alpha, view.mask);
    }
    return loss;
}

LossGradients total_loss_grad(const RenderOutput& rendered, const View& view,
                              const LossConfig& cfg) {
    check_same_shape(rendered.color, view.image, "total_loss");
    LossGradients out;
    out.d_color = Image(rendered.color.width, rendered.color.height, 3);
    out.d_alpha = Image(rendered.alpha.width, rendered.alpha.height, 1);

    const double n_color = static_cast<double>(rendered.color.pixels.size());
    double l1_sum = 0.0;
    for (std::size_t i = 0; i < rendered.color.pixels.size(); ++i) {
        const double d = rendered.color.pixels[i] - view.image.pixels[i];
        l1_sum += std::abs(d);
        out.d_color.pixels[i] = cfg.eta * sgn(d) / n_color;
    }
    out.value = cfg.eta * (l1_sum / n_color);

    if (cfg.eta != 1.0) {
        Image d_ssim;
        const double s = ssim_index_grad(rendered.color, view.image, d_ssim);
        out.value += (1.0 - cfg.eta) * (1.0 - s);
        for (std::size_t i = 0; i < out.d_color.pixels.size(); ++i) {
            out.d_color.pixels[i] -= (1.0 - cfg.eta) * d_ssim.pixels[i];
        }
    }

    if (view.has_mask()) {
        check_same_shape(rendered.alpha, view.mask, "total_loss (mask)");
        const double n_alpha = static_cast<double>(rendered.alpha.pixels.size());
        double mask_sum = 0.0;
        for (std::size_t i = 0; i < rendered.alpha.pixels.size(); ++i) {
            const double d = rendered.alpha.pixels[i] - view.mask.pixels[i];
            mask_sum += std::abs(d);
            out.d_alpha.pixels[i] = cfg.mask_weight * sgn(d) / n_alpha;
        }
        out.value += cfg.mask_weight * (mask_sum / n_alpha);
    }
    return out;
}

double texture_frequency(const TextureMap& texture) {
    const int tau = texture.tau;
    if (tau <= 0) return 0.0;
    auto texel = [&](int row, int col, int c) {
        row = std::clamp(row, 0, tau - 1);
        col = std::clamp(col, 0, tau - 1);
        return texture.rgb[(static_cast<std::size_t>(row) * tau + col) * 3 + c];
    };
    double sum = 0.0;
    for (int row = 0; row < tau; ++row) {
        for (int col = 0; col < tau; ++col) {
            for (int c = 0; c < 3; ++c) {
                const double gx = (texel(row - 1, col + 1, c) + 2.0 * texel(row, col + 1, c) +
                                   texel(row + 1, col + 1, c)) -
                                  (texel(row - 1, col - 1, c) + 2.0 * texel(row, col - 1, c) +
                                   texel(row + 1, col - 1, c));
                const double gy = (texel(row + 1, col - 1, c) + 2.0 * texel(row + 1, col, c) +
                                   texel(row + 1, col + 1, c)) -
                                  (texel(row - 1, col - 1, c) + 2.0 * texel(row - 1, col, c) +
                                   texel(row - 1, col + 1, c));
                sum += std::sqrt(gx * gx + gy * gy);
            }
        }
    }
    return sum / (3.0 * tau * tau);
}

double fold_penalty(const Scene& scene) {
    if (scene.deformations.empty()) return 0.0;
    double sum = 0.0;
    std::size_t count = 0;
    for (const DeformationField& field : scene.deformations) {
        for (int row = 0; row < field.tau; ++row) {
            for (int col = 0; col < field.tau; ++col) {
                const Jacobian2 jac =
                    warp_jacobian(col + 0.5, row + 0.5, field, scene.lambda);
                const double neg = std::min(jac.det, 0.0);
                sum += neg * neg;
                ++count;
            }
        }
    }
    return count == 0 ? 0.0 : sum / static_cast<double>(count);
}

Image target_density(const Image& patch, double alpha_exp, double epsilon) {
    if (!(alpha_exp > 0.0) || !(epsilon > 0.0)) {
        throw ValidationError("target_density: alpha_exp and epsilon must be positive");
    }
    Image out(patch.width, patch.height, 1);
    // Central differences inside, one-sided at the borders, so constant-slope
    // ramps map to an exactly constant density.
    auto diff1d = [](double lo, double hi, bool one_sided) {
        return one_sided ? hi - lo : (hi - lo) / 2.0;
    };
    for (int y = 0; y < patch.height; ++y) {
        for (int x = 0; x < patch.width; ++x) {
            double sq = 0.0;
            for (int c = 0; c < patch.channels; ++c) {
                double gx = 0.0, gy = 0.0;
                if (patch.width > 1) {
                    const int x0 = std::max(x - 1, 0);
                    const int x1 = std::min(x + 1, patch.width - 1);
                    gx = diff1d(patch.at(y, x0, c), patch.at(y, x1, c), x1 - x0 == 1);
                }
                if (patch.height > 1) {
                    const int y0 = std::max(y - 1, 0);
                    const int y1 = std::min(y + 1, patch.height - 1);
                    gy = diff1d(patch.at(y0, x, c), patch.at(y1, x, c), y1 - y0 == 1);
                }
                sq += gx * gx + gy * gy;
            }
            out.at(y, x, 0) = std::pow(std::sqrt(sq) + epsilon, alpha_exp);
        }
    }
    return out;
}

Image jacobian_density_map(const DeformationField& field, double lambda, int resolution) {
    if (resolution < field.tau) {
        throw ValidationError("jacobian_density_map: resolution must be >= tau");
    }
    Image out(resolution, resolution, 1);
    const double step = static_cast<double>(field.tau) / resolution;
    for (int row = 0; row < resolution; ++row) {
        for (int col = 0; col < resolution; ++col) {
            const double u = (col + 0.5) * step;
            const double v = (row + 0.5) * step;
            out.at(row, col, 0) = std::abs(warp_jacobian(u, v, field, lambda).det);
        }
    }
    return out;
}

FrequencyReport frequency_report(const std::vector<TextureMap>& textures, int bins) {
    if (bins < 1) throw ValidationError("frequency_report: bins must be >= 1");
    FrequencyReport report;
    report.per_texture_freq.reserve(textures.size());
    for (const TextureMap& t : textures) report.per_texture_freq.push_back(texture_frequency(t));

    const std::size_t n = report.per_texture_freq.size();
    double max_freq = 0.0;
    double sum = 0.0;
    for (double f : report.per_texture_freq) {
        max_freq = std::max(max_freq, f);
        sum += f;
    }
    report.mean = n == 0 ? 0.0 : sum / static_cast<double>(n);

    std::vector<double> sorted = report.per_texture_freq;
    std::sort(sorted.begin(), sorted.end());
    if (n > 0) {
        report.median =
            n % 2 == 1 ? sorted[n / 2] : 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]);
    }

    const double span = max_freq > 0.0 ? max_freq : 1.0;
    report.bin_edges.resize(static_cast<std::size_t>(bins) + 1);
    for (int i = 0; i <= bins; ++i) {
        report.bin_edges[static_cast<std::size_t>(i)] = span * i / bins;
    }
    report.counts.assign(static_cast<std::size_t>(bins), 0);
    for (double f : report.per_texture_freq) {
        int idx = static_cast<int>(std::floor(f / span * bins));
        idx = std::clamp(idx, 0, bins - 1);
        ++report.counts[static_cast<std::size_t>(idx)];
    }
    return report;
}

void write_frequency_csv(const FrequencyReport& report, const std::string& per_texture_path,
                         const std::string& histogram_path) {
    std::ofstream per(per_texture_path);
    if (!per) throw IoError("write_frequency_csv: cannot open " + per_texture_path);
    per.precision(17);
    per << "texture_index,freq\n";
    for (std::size_t i = 0; i < report.per_texture_freq.size(); ++i) {
        per << i << "," << report.per_texture_freq[i] << "\n";
    }

    std::ofstream hist(histogram_path);
    if (!hist) throw IoError("write_frequency_csv: cannot open " + histogram_path);
    hist.precision(17);
    hist << "bin_low,bin_high,count\n";
    for (std::size_t i = 0; i < report.counts.size(); ++i) {
        hist << report.bin_edges[i] << "," << report.bin_edges[i + 1] << "," << report.counts[i]
             << "\n";
    }
}

} // namespace factgs
