#include "refref/metrics.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>

namespace refref {

namespace {

void check_dims(const Image& a, const Image& b, const char* what) {
    if (a.width != b.width || a.height != b.height)
        throw std::runtime_error(std::string(what) + ": image dimensions differ");
}

void check_mask(const Image& mask, const Image& a, const char* what) {
    check_dims(mask, a, what);
    for (int y = 0; y < mask.height; ++y)
        for (int x = 0; x < mask.width; ++x)
            if (mask.at(x, y, 0) > 0.5f) return;
    throw std::runtime_error(std::string(what) + ": mask selects no pixels");
}

double luminance(const Image& img, int x, int y) {
    Vec3 p = img.pixel(x, y);
    return 0.299 * p.x + 0.587 * p.y + 0.114 * p.z;
}

}  // namespace

double psnr(const Image& a, const Image& b, const Image* mask) {
    check_dims(a, b, "psnr");
    if (a.channels != b.channels) throw std::runtime_error("psnr: channel counts differ");
    if (mask) check_mask(*mask, a, "psnr");

    double sum = 0;
    int64_t count = 0;
    for (int y = 0; y < a.height; ++y)
        for (int x = 0; x < a.width; ++x) {
            if (mask && mask->at(x, y, 0) <= 0.5f) continue;
            for (int c = 0; c < a.channels; ++c) {
                double d = static_cast<double>(a.at(x, y, c)) - b.at(x, y, c);
                sum += d * d;
            }
            count += a.channels;
        }
    double mse = sum / static_cast<double>(count);
    if (mse <= 0) return 99.0;
    return std::min(99.0, 10.0 * std::log10(1.0 / mse));
}

double ssim(const Image& a, const Image& b) {
    check_dims(a, b, "ssim");
    constexpr int kRadius = 5;  // 11x11 window
    constexpr double kSigma = 1.5;
    constexpr double kC1 = 0.01 * 0.01;
    constexpr double kC2 = 0.03 * 0.03;
    if (a.width < 2 * kRadius + 1 || a.height < 2 * kRadius + 1)
        throw std::runtime_error("ssim: image smaller than the 11x11 window");

    double kernel[2 * kRadius + 1];
    for (int i = -kRadius; i <= kRadius; ++i)
        kernel[i + kRadius] = std::exp(-0.5 * i * i / (kSigma * kSigma));

    std::vector<double> la(static_cast<size_t>(a.width) * a.height);
    std::vector<double> lb(la.size());
    for (int y = 0; y < a.height; ++y)
        for (int x = 0; x < a.width; ++x) {
            la[static_cast<size_t>(y) * a.width + x] = luminance(a, x, y);
            lb[static_cast<size_t>(y) * a.width + x] = luminance(b, x, y);
        }

    double total = 0;
    for (int y = 0; y < a.height; ++y)
        for (int x = 0; x < a.width; ++x) {
            double w_sum = 0, ma = 0, mb = 0, maa = 0, mbb = 0, mab = 0;
            for (int dy = -kRadius; dy <= kRadius; ++dy) {
                int yy = y + dy;
                if (yy < 0 || yy >= a.height) continue;
                for (int dx = -kRadius; dx <= kRadius; ++dx) {
                    int xx = x + dx;
                    if (xx < 0 || xx >= a.width) continue;
                    double w = kernel[dy + kRadius] * kernel[dx + kRadius];
                    double va = la[static_cast<size_t>(yy) * a.width + xx];
                    double vb = lb[static_cast<size_t>(yy) * a.width + xx];
                    w_sum += w;
                    ma += w * va;
                    mb += w * vb;
                    maa += w * va * va;
                    mbb += w * vb * vb;
                    mab += w * va * vb;
                }
            }
            ma /= w_sum;
            mb /= w_sum;
            double var_a = maa / w_sum - ma * ma;
            double var_b = mbb / w_sum - mb * mb;
            double cov = mab / w_sum - ma * mb;
            total += ((2 * ma * mb + kC1) * (2 * cov + kC2)) /
                     ((ma * ma + mb * mb + kC1) * (var_a + var_b + kC2));
        }
    return total / (static_cast<double>(a.width) * a.height);
}

double dmae(const Image& predicted, const Image& reference, const Image* mask) {
    check_dims(predicted, reference, "dmae");
    if (mask) check_mask(*mask, predicted, "dmae");

    double sum = 0;
    int64_t count = 0;
    for (int y = 0; y < predicted.height; ++y)
        for (int x = 0; x < predicted.width; ++x) {
            if (mask && mask->at(x, y, 0) <= 0.5f) continue;
            double p = predicted.at(x, y, 0);
            double r = reference.at(x, y, 0);
            if (!std::isfinite(p) || !std::isfinite(r))
                throw std::runtime_error("dmae: non-finite depth at evaluated pixel");
            sum += std::abs(p - r);
            ++count;
        }
    if (count == 0) throw std::runtime_error("dmae: no evaluated pixels");
    return sum / static_cast<double>(count);
}

ViewMetrics EvalReport::mean() const {
    if (views.empty()) throw std::runtime_error("EvalReport: no views");
    ViewMetrics m;
    for (const auto& v : views) {
        m.psnr += v.psnr;
        m.psnr_masked += v.psnr_masked;
        m.ssim += v.ssim;
        m.dmae += v.dmae;
        m.dmae_masked += v.dmae_masked;
    }
    double n = static_cast<double>(views.size());
    m.psnr /= n;
    m.psnr_masked /= n;
    m.ssim /= n;
    m.dmae /= n;
    m.dmae_masked /= n;
    return m;
}

std::string EvalReport::csv() const {
    std::string out = "scene,method,view,psnr,psnr_m,ssim,lpips,dmae,dmae_m\n";
    char line[256];
    auto row = [&](const std::string& view, const ViewMetrics& v) {
        std::snprintf(line, sizeof(line), "%s,%s,%s,%.6f,%.6f,%.6f,,%.6f,%.6f\n",
                      scene.c_str(), method.c_str(), view.c_str(), v.psnr, v.psnr_masked,
                      v.ssim, v.dmae, v.dmae_masked);
        out += line;
    };
    for (size_t i = 0; i < views.size(); ++i) row(std::to_string(i), views[i]);
    row("mean", mean());
    return out;
}

std::string EvalReport::table() const {
    char line[256];
    std::string out;
    std::snprintf(line, sizeof(line), "%-20s %-18s %8s %8s %8s %8s %8s %8s\n",
                  "scene", "method", "PSNR", "PSNR_M", "SSIM", "LPIPS", "DMAE", "DMAE_M");
    out += line;
    ViewMetrics m = mean();
    std::snprintf(line, sizeof(line), "%-20s %-18s %8.2f %8.2f %8.4f %8s %8.4f %8.4f\n",
                  scene.c_str(), method.c_str(), m.psnr, m.psnr_masked, m.ssim, "-",
                  m.dmae, m.dmae_masked);
    out += line;
    return out;
}

void EvalReport::write_csv(const std::string& path) const {
    std::ofstream f(path);
    if (!f) throw std::runtime_error("cannot open " + path + " for writing");
    f << csv();
}

}  // namespace refref
