#include "synthaug/diffaug.hpp"

#include <cmath>

#include "synthaug/common.hpp"

namespace F = torch::nn::functional;

namespace synthaug::diffaug {

std::string to_string(Op op) {
    switch (op) {
        case Op::color: return "color";
        case Op::translation: return "translation";
        default: return "cutout";
    }
}

Op parse_op(const std::string& s) {
    if (s == "color") return Op::color;
    if (s == "translation") return Op::translation;
    if (s == "cutout") return Op::cutout;
    throw UsageError("unknown diffaug op '" + s + "'");
}

bool DiffAugSample::same_draws_as(const DiffAugSample& other) const {
    if (batch_size != other.batch_size || policy.ops != other.policy.ops) return false;
    auto tensors_equal = [](const torch::Tensor& a, const torch::Tensor& b) {
        if (a.defined() != b.defined()) return false;
        return !a.defined() || torch::equal(a, b);
    };
    return tensors_equal(brightness, other.brightness) &&
           tensors_equal(saturation, other.saturation) &&
           tensors_equal(contrast, other.contrast) && shift_x == other.shift_x &&
           shift_y == other.shift_y && cut_cy == other.cut_cy && cut_cx == other.cut_cx;
}

DiffAugSample sample_diffaug(const DiffAugPolicy& policy, std::int64_t batch_size,
                             std::int64_t height, std::int64_t width, rng::CounterRng& rng) {
    DiffAugSample s;
    s.policy = policy;
    s.batch_size = batch_size;

    auto draw_vec = [&](double lo, double hi) {
        std::vector<float> v(static_cast<std::size_t>(batch_size));
        for (auto& x : v) x = static_cast<float>(rng.uniform(lo, hi));
        return torch::tensor(v);
    };

    for (Op op : policy.ops) {
        switch (op) {
            case Op::color:
                s.brightness = draw_vec(-policy.brightness_range, policy.brightness_range);
                s.saturation = draw_vec(1.0 - policy.saturation_range, 1.0 + policy.saturation_range);
                s.contrast = draw_vec(1.0 - policy.contrast_range, 1.0 + policy.contrast_range);
                break;
            case Op::translation: {
                const auto rx = std::llround(static_cast<double>(width) * policy.translation_frac);
                const auto ry = std::llround(static_cast<double>(height) * policy.translation_frac);
                for (std::int64_t i = 0; i < batch_size; ++i) {
                    s.shift_x.push_back(rng.uniform_int(-rx, rx));
                    s.shift_y.push_back(rng.uniform_int(-ry, ry));
                }
                break;
            }
            case Op::cutout:
                for (std::int64_t i = 0; i < batch_size; ++i) {
                    s.cut_cy.push_back(rng.uniform_int(0, height - 1));
                    s.cut_cx.push_back(rng.uniform_int(0, width - 1));
                }
                break;
        }
    }
    return s;
}

namespace {

torch::Tensor apply_color(const torch::Tensor& x, const DiffAugSample& s) {
    const auto n = x.size(0);
    auto out = x + s.brightness.view({n, 1, 1, 1});
    auto ch_mean = out.mean(1, /*keepdim=*/true);
    out = (out - ch_mean) * s.saturation.view({n, 1, 1, 1}) + ch_mean;
    auto img_mean = out.mean({1, 2, 3}, /*keepdim=*/true);
    out = (out - img_mean) * s.contrast.view({n, 1, 1, 1}) + img_mean;
    return out;
}

// Positive shift moves content down/right; exposed border is zero-filled.
torch::Tensor apply_translation(const torch::Tensor& x, const DiffAugSample& s) {
    const auto n = x.size(0), h = x.size(2), w = x.size(3);
    std::int64_t ry = 0, rx = 0;
    for (std::int64_t i = 0; i < n; ++i) {
        ry = std::max(ry, std::abs(s.shift_y[static_cast<std::size_t>(i)]));
        rx = std::max(rx, std::abs(s.shift_x[static_cast<std::size_t>(i)]));
    }
    if (ry == 0 && rx == 0) return x;
    auto padded = F::pad(x, F::PadFuncOptions({rx, rx, ry, ry}));
    std::vector<torch::Tensor> rows;
    rows.reserve(static_cast<std::size_t>(n));
    for (std::int64_t i = 0; i < n; ++i) {
        const auto sy = s.shift_y[static_cast<std::size_t>(i)];
        const auto sx = s.shift_x[static_cast<std::size_t>(i)];
        rows.push_back(padded[i].slice(1, ry - sy, ry - sy + h).slice(2, rx - sx, rx - sx + w));
    }
    return torch::stack(rows);
}

torch::Tensor apply_cutout(const torch::Tensor& x, const DiffAugSample& s) {
    const auto n = x.size(0), h = x.size(2), w = x.size(3);
    const auto ch = std::llround(static_cast<double>(h) * s.policy.cutout_frac);
    const auto cw = std::llround(static_cast<double>(w) * s.policy.cutout_frac);
    if (ch <= 0 || cw <= 0) return x;
    auto mask = torch::ones({n, 1, h, w}, x.options().requires_grad(false));
    for (std::int64_t i = 0; i < n; ++i) {
        const auto cy = s.cut_cy[static_cast<std::size_t>(i)];
        const auto cx = s.cut_cx[static_cast<std::size_t>(i)];
        const auto y0 = std::clamp<std::int64_t>(cy - ch / 2, 0, h);
        const auto y1 = std::clamp<std::int64_t>(cy - ch / 2 + ch, 0, h);
        const auto x0 = std::clamp<std::int64_t>(cx - cw / 2, 0, w);
        const auto x1 = std::clamp<std::int64_t>(cx - cw / 2 + cw, 0, w);
        if (y1 > y0 && x1 > x0) mask[i].slice(1, y0, y1).slice(2, x0, x1).zero_();
    }
    return x * mask;
}

}  // namespace

torch::Tensor apply_diffaug(const torch::Tensor& batch, const DiffAugSample& sample) {
    if (batch.dim() != 4) throw UsageError("apply_diffaug: expected an NCHW batch");
    if (sample.policy.empty()) return batch;
    if (batch.size(0) != sample.batch_size) {
        throw UsageError("apply_diffaug: sample drawn for batch size " +
                         std::to_string(sample.batch_size) + ", got " +
                         std::to_string(batch.size(0)));
    }
    auto out = batch;
    for (Op op : sample.policy.ops) {
        switch (op) {
            case Op::color: out = apply_color(out, sample); break;
            case Op::translation: out = apply_translation(out, sample); break;
            case Op::cutout: out = apply_cutout(out, sample); break;
        }
    }
    return out;
}

torch::Tensor diff_augment(const torch::Tensor& batch, const DiffAugPolicy& policy,
                           rng::CounterRng& rng) {
    if (policy.empty()) return batch;
    auto sample = sample_diffaug(policy, batch.size(0), batch.size(2), batch.size(3), rng);
    return apply_diffaug(batch, sample);
}

}  // namespace synthaug::diffaug
