#pragma once

#include <optional>
#include <string>
#include <vector>

#include "refref/image.hpp"

namespace refref {

/// 10 log10(1 / MSE) over all channels, restricted to mask-positive pixels
/// when a mask is given. Identical inputs cap at 99 dB.
double psnr(const Image& a, const Image& b, const Image* mask = nullptr);

/// Mean local SSIM on luminance with an 11x11 Gaussian window (sigma 1.5),
/// k1 = 0.01, k2 = 0.03, dynamic range 1. Border windows are truncated and
/// renormalized, so ssim(a, a) == 1 exactly.
double ssim(const Image& a, const Image& b);

/// Mean absolute difference of two distance maps over evaluated pixels.
double dmae(const Image& predicted, const Image& reference, const Image* mask = nullptr);

struct ViewMetrics {
    double psnr = 0;
    double psnr_masked = 0;
    double ssim = 0;
    double dmae = 0;
    double dmae_masked = 0;
};

struct EvalReport {
    std::string scene;
    std::string method;  // e.g. "oracle", "straight", "oracle/no-tir"
    std::vector<ViewMetrics> views;

    ViewMetrics mean() const;
    /// CSV with a per-view row plus a trailing "mean" row. The LPIPS column
    /// is present but empty (no learned perceptual model here).
    std::string csv() const;
    /// Aligned text table, columns PSNR, PSNR_M, SSIM, LPIPS, DMAE, DMAE_M.
    std::string table() const;
    void write_csv(const std::string& path) const;
};

}  // namespace refref
