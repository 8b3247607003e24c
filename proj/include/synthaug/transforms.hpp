#ifndef SYNTHAUG_TRANSFORMS_HPP
#define SYNTHAUG_TRANSFORMS_HPP

#include <cstdint>
#include <string>
#include <vector>

#include <torch/torch.h>

#include "synthaug/dataset.hpp"
#include "synthaug/rng.hpp"

namespace synthaug::transforms {

// Per-channel statistics of the training split, computed after resize.
struct NormStats {
    std::vector<double> mean;
    std::vector<double> std;  // floored at kEps

    static constexpr double kEps = 1e-6;

    std::string to_json() const;
    static NormStats from_json(const std::string& text);
};

struct AugmentPolicy {
    double hflip_probability = 0.5;
    double rotation_limit_degrees = 5.0;
};

// Bilinear, half-pixel centers, border clamp; aspect ratio is not preserved.
// Returns a copy even when the input already has the target size.
torch::Tensor resize(const torch::Tensor& img, std::int64_t height, std::int64_t width);

torch::Tensor hflip(const torch::Tensor& img);

// Rotates about the image center by `degrees` (counterclockwise in x-right,
// y-down pixel coordinates), bilinear sampling with border replication.
torch::Tensor rotate(const torch::Tensor& img, double degrees);

// Population mean/std over all pixels of all images, per channel, after
// resizing each image to image_size x image_size.
NormStats compute_norm_stats(const dataset::Manifest& train, std::int64_t image_size);

torch::Tensor normalize(const torch::Tensor& img, const NormStats& stats);
torch::Tensor denormalize(const torch::Tensor& img, const NormStats& stats);

// Random hflip then random rotation, both driven by `rng`. A fixed rng key
// makes this a pure function of (img, policy, key); both draws are consumed
// regardless of the policy so the stream layout never depends on it.
torch::Tensor augment_classifier(const torch::Tensor& img, const AugmentPolicy& policy,
                                 rng::CounterRng& rng);

// Standard-normal tensor filled from the counter rng (Box-Muller), so the
// values depend only on the rng key and never on global torch state.
torch::Tensor normal_tensor(std::vector<std::int64_t> shape, rng::CounterRng& rng);

}  // namespace synthaug::transforms

#endif
