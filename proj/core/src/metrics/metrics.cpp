#include "citysplat/metrics/metrics.hpp"

#include "citysplat/core/errors.hpp"

#include <fmt/format.h>
#include <json.hpp>

#include <array>
#include <cmath>
#include <limits>

namespace citysplat::metrics {

namespace {

void require_same_size(const Image& a, const Image& b) {
    if (a.width != b.width || a.height != b.height) {
        throw InvalidParameter(
            fmt::format("image size mismatch: {}x{} vs {}x{}", a.width, a.height, b.width, b.height));
    }
    if (a.pixels.size() != 3 * a.pixel_count() || b.pixels.size() != 3 * b.pixel_count()) {
        throw InvalidParameter("image pixel buffer does not match its dimensions");
    }
}

std::array<double, kSsimWindow> gaussian_window() {
    std::array<double, kSsimWindow> w{};
    double sum = 0.0;
    const int half = kSsimWindow / 2;
    for (int i = 0; i < kSsimWindow; ++i) {
        const double d = i - half;
        w[i] = std::exp(-d * d / (2.0 * kSsimSigma * kSsimSigma));
        sum += w[i];
    }
    for (double& v : w) {
        v /= sum;
    }
    return w;
}

} // namespace

double ssim(const Image& a, const Image& b) {
    require_same_size(a, b);
    if (a.width < kSsimWindow || a.height < kSsimWindow) {
        throw InvalidParameter(fmt::format("SSIM needs images of at least {0}x{0}", kSsimWindow));
    }
    static const auto win = gaussian_window();
    const int W = a.width;
    const int H = a.height;
    const int ow = W - kSsimWindow + 1;
    const int oh = H - kSsimWindow + 1;

    // Five moment planes filtered horizontally (ow x H), then vertically.
    std::vector<double> h(5 * static_cast<std::size_t>(ow) * H);
    double total = 0.0;
    for (int c = 0; c < 3; ++c) {
        for (int y = 0; y < H; ++y) {
            for (int x = 0; x < ow; ++x) {
                double m[5] = {0, 0, 0, 0, 0};
                for (int k = 0; k < kSsimWindow; ++k) {
                    const double va = a.at(x + k, y)[c];
                    const double vb = b.at(x + k, y)[c];
                    const double w = win[k];
                    m[0] += w * va;
                    m[1] += w * vb;
                    m[2] += w * va * va;
                    m[3] += w * vb * vb;
                    m[4] += w * va * vb;
                }
                double* dst = &h[5 * (static_cast<std::size_t>(y) * ow + x)];
                for (int i = 0; i < 5; ++i) {
                    dst[i] = m[i];
                }
            }
        }
        double channel = 0.0;
        for (int y = 0; y < oh; ++y) {
            for (int x = 0; x < ow; ++x) {
                double m[5] = {0, 0, 0, 0, 0};
                for (int k = 0; k < kSsimWindow; ++k) {
                    const double* src = &h[5 * (static_cast<std::size_t>(y + k) * ow + x)];
                    for (int i = 0; i < 5; ++i) {
                        m[i] += win[k] * src[i];
                    }
                }
                const double mu_a = m[0];
                const double mu_b = m[1];
                const double var_a = m[2] - mu_a * mu_a;
                const double var_b = m[3] - mu_b * mu_b;
                const double cov = m[4] - mu_a * mu_b;
                channel += ((2.0 * mu_a * mu_b + kSsimC1) * (2.0 * cov + kSsimC2)) /
                           ((mu_a * mu_a + mu_b * mu_b + kSsimC1) * (var_a + var_b + kSsimC2));
            }
        }
        total += channel / (static_cast<double>(ow) * oh);
    }
    return total / 3.0;
}

double l_ssim(const Image& a, const Image& b) { return 1.0 - ssim(a, b); }

double mse(const Image& a, const Image& b) {
    require_same_size(a, b);
    if (a.pixels.empty()) {
        return 0.0;
    }
    double sum = 0.0;
    for (std::size_t i = 0; i < a.pixels.size(); ++i) {
        const double d = static_cast<double>(a.pixels[i]) - b.pixels[i];
        sum += d * d;
    }
    return sum / static_cast<double>(a.pixels.size());
}

double psnr(const Image& a, const Image& b) {
    const double e = mse(a, b);
    if (e == 0.0) {
        return std::numeric_limits<double>::infinity();
    }
    return 10.0 * std::log10(1.0 / e);
}

double l1(const Image& a, const Image& b) {
    require_same_size(a, b);
    if (a.pixels.empty()) {
        return 0.0;
    }
    double sum = 0.0;
    for (std::size_t i = 0; i < a.pixels.size(); ++i) {
        sum += std::abs(static_cast<double>(a.pixels[i]) - b.pixels[i]);
    }
    return sum / static_cast<double>(a.pixels.size());
}

double training_loss(const Image& render, const Image& gt, double lambda) {
    if (!std::isfinite(lambda)) {
        throw InvalidParameter("lambda must be finite");
    }
    return (1.0 - lambda) * l1(render, gt) + lambda * (1.0 - ssim(render, gt));
}

MetricReport evaluate(const Image& render, const Image& gt, double lambda) {
    MetricReport r;
    r.ssim = ssim(render, gt);
    r.psnr = psnr(render, gt);
    r.psnr_infinite = std::isinf(r.psnr);
    r.l1 = l1(render, gt);
    r.loss = (1.0 - lambda) * r.l1 + lambda * (1.0 - r.ssim);
    return r;
}

std::string metrics_json(const std::vector<MetricRow>& rows) {
    nlohmann::json out = nlohmann::json::array();
    for (const auto& row : rows) {
        out.push_back({{"image_id", row.image_id},
                       {"ssim", row.report.ssim},
                       {"psnr", row.report.psnr_infinite ? nlohmann::json(nullptr) : nlohmann::json(row.report.psnr)},
                       {"l1", row.report.l1}});
    }
    return out.dump(2) + "\n";
}

} // namespace citysplat::metrics
