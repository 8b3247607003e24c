#ifndef SYNTHAUG_GAN_HPP
#define SYNTHAUG_GAN_HPP

#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <torch/torch.h>

#include "synthaug/dataset.hpp"
#include "synthaug/diffaug.hpp"
#include "synthaug/rng.hpp"

namespace synthaug::gan {

struct GanConfig {
    std::int64_t resolution = 32;      // output side, power of two >= 8
    std::int64_t latent_dim = 64;
    std::int64_t w_dim = 64;
    std::int64_t mapping_depth = 4;
    std::int64_t channels_base = 128;  // feature width at the 4x4 root
    std::int64_t channels_max = 256;
    double lr_g = 0.002;
    double lr_d = 0.002;
    double beta1 = 0.0;
    double beta2 = 0.99;
    double r1_gamma = 10.0;
    std::int64_t r1_interval = 16;     // lazy penalty cadence, in d-steps
    std::int64_t batch_size = 16;
    std::int64_t total_steps = 1000;
    std::int64_t checkpoint_every = 0;  // 0 = final checkpoint only
    bool use_ema = true;
    double ema_beta = 0.995;
    diffaug::DiffAugPolicy augment = diffaug::DiffAugPolicy::standard();
    std::uint64_t seed = 0;

    void validate() const;
    std::int64_t num_levels() const;                  // 4x4 root up to resolution
    std::int64_t level_resolution(std::int64_t level) const;
    std::int64_t level_channels(std::int64_t level) const;
    std::string canonical_json() const;
};

GanConfig gan_config_from_json(const std::string& text);

// z -> normalized mapping MLP -> w
class MappingImpl : public torch::nn::Module {
public:
    MappingImpl(std::int64_t latent_dim, std::int64_t w_dim, std::int64_t depth);
    torch::Tensor forward(const torch::Tensor& z);

private:
    std::vector<torch::nn::Linear> layers_;
};
TORCH_MODULE(Mapping);

// One synthesis stage: optional 2x upsample, conv, per-sample noise with a
// learned strength, leaky relu, then AdaIN driven by a per-level affine of w.
class SynthLevelImpl : public torch::nn::Module {
public:
    SynthLevelImpl(std::int64_t in_channels, std::int64_t out_channels, std::int64_t w_dim,
                   bool upsample);
    torch::Tensor forward(const torch::Tensor& x, const torch::Tensor& w,
                          const torch::Tensor& noise);

    bool upsamples() const { return upsample_; }
    std::int64_t out_channels() const { return out_channels_; }

private:
    torch::nn::Conv2d conv_{nullptr};
    torch::nn::Linear style_{nullptr};  // w -> (scale, bias) per channel
    torch::Tensor noise_strength_;
    bool upsample_ = false;
    std::int64_t out_channels_ = 0;
};
TORCH_MODULE(SynthLevel);

class GeneratorImpl : public torch::nn::Module {
public:
    explicit GeneratorImpl(const GanConfig& cfg);

    torch::Tensor map_latent(const torch::Tensor& z);

    // One style vector per level allows mixing; noise holds one (N,1,r,r)
    // tensor per level. Output is tanh-bounded in [-1, 1].
    torch::Tensor synthesize(const std::vector<torch::Tensor>& styles,
                             const std::vector<torch::Tensor>& noise);
    torch::Tensor forward(const torch::Tensor& z, const std::vector<torch::Tensor>& noise);

    std::vector<torch::Tensor> sample_noise(std::int64_t batch, rng::CounterRng& rng) const;
    std::vector<torch::Tensor> sample_noise(std::int64_t batch) const;  // torch global rng

    const GanConfig& config() const { return cfg_; }

private:
    GanConfig cfg_;
    Mapping mapping_{nullptr};
    torch::Tensor const_input_;
    std::vector<SynthLevel> levels_;
    torch::nn::Conv2d to_rgb_{nullptr};
};
TORCH_MODULE(Generator);

class DiscriminatorImpl : public torch::nn::Module {
public:
    explicit DiscriminatorImpl(const GanConfig& cfg);
    torch::Tensor forward(const torch::Tensor& x);  // (N,) logits

private:
    GanConfig cfg_;
    torch::nn::Conv2d from_rgb_{nullptr};
    std::vector<torch::nn::Conv2d> convs_;
    torch::nn::Linear fc_{nullptr};
};
TORCH_MODULE(Discriminator);

// Non-saturating logistic GAN losses (softplus form).
torch::Tensor d_logistic_loss(const torch::Tensor& real_logits, const torch::Tensor& fake_logits);
torch::Tensor g_nonsaturating_loss(const torch::Tensor& fake_logits);

// (gamma / 2) * E_batch[ sum over pixels of |grad_x D(x)|^2 ]. The callable
// form accepts any per-sample-logit critic, e.g. a closed-form linear one.
torch::Tensor r1_penalty(const std::function<torch::Tensor(const torch::Tensor&)>& critic,
                         const torch::Tensor& images, double gamma);
torch::Tensor r1_penalty(Discriminator& d, const torch::Tensor& images, double gamma);

struct StepResult {
    double d_loss = 0.0;
    double g_loss = 0.0;
    double r1 = 0.0;
    bool r1_applied = false;
};

// Instrumentation: the augmentation draws actually used inside a step.
struct DiffAugTrace {
    std::optional<diffaug::DiffAugSample> d_step;
    std::optional<diffaug::DiffAugSample> g_step;
};

// One adversarial round: a discriminator update on a shared-augmentation
// real/fake pair (lazy R1 on schedule), then a generator update whose
// gradient flows through freshly drawn augmentations.
StepResult gan_step(Generator& g, Discriminator& d, torch::optim::Adam& opt_g,
                    torch::optim::Adam& opt_d, const torch::Tensor& real_batch,
                    const GanConfig& cfg, std::int64_t step, DiffAugTrace* trace = nullptr);

struct GanTrainResult {
    Generator generator{nullptr};
    Generator generator_ema{nullptr};  // equals generator when use_ema is off
    Discriminator discriminator{nullptr};
    dataset::Label class_label = dataset::Label::negative;
    std::vector<StepResult> log;
};

// Trains one single-class model. All records must share one label; images are
// resized to cfg.resolution and scaled to [-1, 1]. Deterministic given cfg.seed.
GanTrainResult train_gan(const dataset::Manifest& manifest, const GanConfig& cfg,
                         const std::optional<std::filesystem::path>& checkpoint_dir = {});

void save_gan_checkpoint(GanTrainResult& result, const GanConfig& cfg, std::int64_t step,
                         const std::filesystem::path& bin_path);

struct LoadedGan {
    Generator generator{nullptr};
    Generator generator_ema{nullptr};
    Discriminator discriminator{nullptr};
    GanConfig cfg;
    dataset::Label class_label = dataset::Label::negative;
    std::int64_t step = 0;
};

LoadedGan load_gan_checkpoint(const std::filesystem::path& bin_path);

}  // namespace synthaug::gan

#endif
