#ifndef SYNTHAUG_DIFFAUG_HPP
#define SYNTHAUG_DIFFAUG_HPP

#include <cstdint>
#include <string>
#include <vector>

#include <torch/torch.h>

#include "synthaug/rng.hpp"

namespace synthaug::diffaug {

enum class Op { color, translation, cutout };

std::string to_string(Op op);
Op parse_op(const std::string& s);

// Ops are applied in the order listed. All magnitudes at 0 collapse every op
// to the identity. Every op is differentiable in the pixels almost
// everywhere (translation/cutout are linear once their offsets are fixed).
struct DiffAugPolicy {
    std::vector<Op> ops;
    double brightness_range = 0.5;  // shift ~ U(-r, r)
    double saturation_range = 1.0;  // factor ~ U(1-r, 1+r)
    double contrast_range = 0.5;    // factor ~ U(1-r, 1+r)
    double translation_frac = 0.125;
    double cutout_frac = 0.5;

    bool empty() const { return ops.empty(); }

    static DiffAugPolicy standard() {
        DiffAugPolicy p;
        p.ops = {Op::color, Op::translation, Op::cutout};
        return p;
    }
    static DiffAugPolicy none() { return DiffAugPolicy{}; }
};

// One realization of the per-sample random draws. Sampled once per
// discriminator step and applied to both the real and the fake batch.
struct DiffAugSample {
    DiffAugPolicy policy;
    std::int64_t batch_size = 0;
    torch::Tensor brightness;   // (N) float
    torch::Tensor saturation;   // (N) float
    torch::Tensor contrast;     // (N) float
    std::vector<std::int64_t> shift_x, shift_y;      // per sample, pixels
    std::vector<std::int64_t> cut_cy, cut_cx;        // per sample, cutout centers

    bool same_draws_as(const DiffAugSample& other) const;
};

DiffAugSample sample_diffaug(const DiffAugPolicy& policy, std::int64_t batch_size,
                             std::int64_t height, std::int64_t width, rng::CounterRng& rng);

// Applies a fixed sample; differentiable w.r.t. `batch`.
torch::Tensor apply_diffaug(const torch::Tensor& batch, const DiffAugSample& sample);

// Convenience: sample + apply in one call.
torch::Tensor diff_augment(const torch::Tensor& batch, const DiffAugPolicy& policy,
                           rng::CounterRng& rng);

}  // namespace synthaug::diffaug

#endif
