#pragma once

#include "citysplat/core/types.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace citysplat::metrics {

inline constexpr int kSsimWindow = 11;
inline constexpr double kSsimSigma = 1.5;
inline constexpr double kSsimC1 = 0.01 * 0.01;
inline constexpr double kSsimC2 = 0.03 * 0.03;

/// Mean SSIM over the valid region (no padding) of an 11x11 Gaussian window,
/// sigma 1.5, dynamic range 1, averaged over the three channels. Both images
/// must have equal dimensions of at least 11x11; otherwise InvalidParameter.
double ssim(const Image& a, const Image& b);

/// 1 - ssim(a, b).
double l_ssim(const Image& a, const Image& b);

/// 10 log10(1 / MSE); +infinity when the images are identical.
double psnr(const Image& a, const Image& b);

double mse(const Image& a, const Image& b);

/// Mean absolute channel difference.
double l1(const Image& a, const Image& b);

/// (1 - lambda) * L1 + lambda * (1 - SSIM).
double training_loss(const Image& render, const Image& gt, double lambda);

struct MetricReport {
    double ssim = 1.0;
    double psnr = 0.0; ///< +infinity when psnr_infinite
    bool psnr_infinite = false;
    double l1 = 0.0;
    double loss = 0.0;
};

MetricReport evaluate(const Image& render, const Image& gt, double lambda = 0.2);

struct MetricRow {
    std::uint32_t image_id = 0;
    MetricReport report;
};

/// JSON array of {image_id, ssim, psnr, l1}; an infinite PSNR is written as null.
std::string metrics_json(const std::vector<MetricRow>& rows);

} // namespace citysplat::metrics
