#include "synthaug/transforms.hpp"

#include <cmath>

#include <json.hpp>

#include "synthaug/common.hpp"
#include "synthaug/imageio.hpp"

namespace F = torch::nn::functional;

namespace synthaug::transforms {

std::string NormStats::to_json() const {
    nlohmann::json j;
    j["mean"] = mean;
    j["std"] = std;
    return j.dump(2) + "\n";
}

NormStats NormStats::from_json(const std::string& text) {
    nlohmann::json j = nlohmann::json::parse(text, nullptr, false);
    if (j.is_discarded()) throw DataError("NormStats: invalid JSON");
    NormStats s;
    try {
        s.mean = j.at("mean").get<std::vector<double>>();
        s.std = j.at("std").get<std::vector<double>>();
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("NormStats: ") + e.what());
    }
    if (s.mean.size() != s.std.size()) throw DataError("NormStats: mean/std size mismatch");
    return s;
}

torch::Tensor resize(const torch::Tensor& img, std::int64_t height, std::int64_t width) {
    if (height <= 0 || width <= 0) {
        throw UsageError("resize: target dimensions must be positive");
    }
    if (img.dim() != 3 || img.size(1) <= 0 || img.size(2) <= 0) {
        throw UsageError("resize: expected a CxHxW image with positive spatial dims");
    }
    if (img.size(1) == height && img.size(2) == width) return img.clone();
    auto out = F::interpolate(img.unsqueeze(0),
                              F::InterpolateFuncOptions()
                                  .size(std::vector<std::int64_t>{height, width})
                                  .mode(torch::kBilinear)
                                  .align_corners(false));
    return out.squeeze(0);
}

torch::Tensor hflip(const torch::Tensor& img) { return img.flip({-1}); }

torch::Tensor rotate(const torch::Tensor& img, double degrees) {
    if (img.dim() != 3) throw UsageError("rotate: expected a CxHxW image");
    const auto h = img.size(1), w = img.size(2);
    const double theta = degrees * M_PI / 180.0;
    const double c = std::cos(theta), s = std::sin(theta);
    const double cx = (static_cast<double>(w) - 1.0) / 2.0;
    const double cy = (static_cast<double>(h) - 1.0) / 2.0;

    // Inverse map: each output pixel samples src = R(-theta) (dst - center) + center.
    auto ys = torch::arange(h, torch::kFloat64).sub(cy).view({h, 1}).expand({h, w});
    auto xs = torch::arange(w, torch::kFloat64).sub(cx).view({1, w}).expand({h, w});
    auto src_x = xs * c + ys * s + cx;
    auto src_y = -xs * s + ys * c + cy;

    // Normalized grid for align_corners=true: u = 2x/(W-1) - 1.
    auto gx = w > 1 ? src_x.mul(2.0 / (w - 1)).sub(1.0) : torch::zeros_like(src_x);
    auto gy = h > 1 ? src_y.mul(2.0 / (h - 1)).sub(1.0) : torch::zeros_like(src_y);
    auto grid = torch::stack({gx, gy}, 2).unsqueeze(0).to(torch::kFloat32);

    auto out = F::grid_sample(img.unsqueeze(0), grid,
                              F::GridSampleFuncOptions()
                                  .mode(torch::kBilinear)
                                  .padding_mode(torch::kBorder)
                                  .align_corners(true));
    return out.squeeze(0);
}

NormStats compute_norm_stats(const dataset::Manifest& train, std::int64_t image_size) {
    if (train.split != dataset::Split::train) {
        throw UsageError("compute_norm_stats: statistics come from the train split only");
    }
    if (train.empty()) throw UsageError("compute_norm_stats: empty manifest");

    torch::NoGradGuard no_grad;
    const std::int64_t channels = 3;
    std::vector<double> sum(channels, 0.0), sumsq(channels, 0.0);
    double count = 0.0;
    for (const auto& rec : train.records) {
        auto img = resize(imageio::load_image(rec.path), image_size, image_size).to(torch::kFloat64);
        for (std::int64_t ch = 0; ch < channels; ++ch) {
            sum[ch] += img[ch].sum().item<double>();
            sumsq[ch] += img[ch].square().sum().item<double>();
        }
        count += static_cast<double>(image_size * image_size);
    }

    NormStats stats;
    for (std::int64_t ch = 0; ch < channels; ++ch) {
        const double mean = sum[ch] / count;
        const double var = std::max(sumsq[ch] / count - mean * mean, 0.0);
        stats.mean.push_back(mean);
        stats.std.push_back(std::max(std::sqrt(var), NormStats::kEps));
    }
    return stats;
}

namespace {

std::pair<torch::Tensor, torch::Tensor> stat_tensors(const NormStats& stats,
                                                     const torch::Tensor& img) {
    if (static_cast<std::int64_t>(stats.mean.size()) != img.size(0)) {
        throw UsageError("normalize: stats have " + std::to_string(stats.mean.size()) +
                         " channels, image has " + std::to_string(img.size(0)));
    }
    auto opts = torch::TensorOptions().dtype(img.dtype());
    auto mean = torch::tensor(stats.mean, torch::kFloat64).to(opts).view({-1, 1, 1});
    auto std = torch::tensor(stats.std, torch::kFloat64).to(opts).view({-1, 1, 1});
    return {mean, std};
}

}  // namespace

torch::Tensor normalize(const torch::Tensor& img, const NormStats& stats) {
    auto [mean, std] = stat_tensors(stats, img);
    return (img - mean) / std;
}

torch::Tensor denormalize(const torch::Tensor& img, const NormStats& stats) {
    auto [mean, std] = stat_tensors(stats, img);
    return img * std + mean;
}

torch::Tensor augment_classifier(const torch::Tensor& img, const AugmentPolicy& policy,
                                 rng::CounterRng& rng) {
    const bool flip = rng.uniform() < policy.hflip_probability;
    const double angle = rng.uniform(-policy.rotation_limit_degrees, policy.rotation_limit_degrees);
    auto out = flip ? hflip(img) : img;
    if (angle != 0.0) out = rotate(out, angle);
    return out.contiguous();
}

torch::Tensor normal_tensor(std::vector<std::int64_t> shape, rng::CounterRng& rng) {
    constexpr double kTwoPi = 6.28318530717958647692;
    auto t = torch::empty(shape, torch::kFloat32);
    auto* data = t.data_ptr<float>();
    const std::int64_t n = t.numel();
    for (std::int64_t i = 0; i < n; i += 2) {
        const double u1 = 1.0 - rng.uniform();  // (0, 1]: keeps the log finite
        const double u2 = rng.uniform();
        const double radius = std::sqrt(-2.0 * std::log(u1));
        data[i] = static_cast<float>(radius * std::cos(kTwoPi * u2));
        if (i + 1 < n) data[i + 1] = static_cast<float>(radius * std::sin(kTwoPi * u2));
    }
    return t;
}

}  // namespace synthaug::transforms
