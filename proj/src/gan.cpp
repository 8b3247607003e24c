#include "synthaug/gan.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "synthaug/common.hpp"
#include "synthaug/imageio.hpp"
#include "synthaug/tensor_store.hpp"
#include "synthaug/transforms.hpp"

namespace synthaug::gan {

using json = nlohmann::ordered_json;
namespace F = torch::nn::functional;

namespace {



bool power_of_two(std::int64_t v) { return v > 0 && (v & (v - 1)) == 0; }

json policy_to_json(const diffaug::DiffAugPolicy& p) {
    json ops = json::array();
    for (auto op : p.ops) ops.push_back(diffaug::to_string(op));
    json j;
    j["ops"] = std::move(ops);
    j["brightness_range"] = p.brightness_range;
    j["saturation_range"] = p.saturation_range;
    j["contrast_range"] = p.contrast_range;
    j["translation_frac"] = p.translation_frac;
    j["cutout_frac"] = p.cutout_frac;
    return j;
}

diffaug::DiffAugPolicy policy_from_json(const json& j) {
    diffaug::DiffAugPolicy p;
    p.ops.clear();
    for (const auto& op : j.at("ops")) p.ops.push_back(diffaug::parse_op(op.get<std::string>()));
    p.brightness_range = j.value("brightness_range", p.brightness_range);
    p.saturation_range = j.value("saturation_range", p.saturation_range);
    p.contrast_range = j.value("contrast_range", p.contrast_range);
    p.translation_frac = j.value("translation_frac", p.translation_frac);
    p.cutout_frac = j.value("cutout_frac", p.cutout_frac);
    return p;
}

json config_to_json(const GanConfig& cfg) {
    json j;
    j["resolution"] = cfg.resolution;
    j["latent_dim"] = cfg.latent_dim;
    j["w_dim"] = cfg.w_dim;
    j["mapping_depth"] = cfg.mapping_depth;
    j["channels_base"] = cfg.channels_base;
    j["channels_max"] = cfg.channels_max;
    j["lr_g"] = cfg.lr_g;
    j["lr_d"] = cfg.lr_d;
    j["beta1"] = cfg.beta1;
    j["beta2"] = cfg.beta2;
    j["r1_gamma"] = cfg.r1_gamma;
    j["r1_interval"] = cfg.r1_interval;
    j["batch_size"] = cfg.batch_size;
    j["total_steps"] = cfg.total_steps;
    j["checkpoint_every"] = cfg.checkpoint_every;
    j["use_ema"] = cfg.use_ema;
    j["ema_beta"] = cfg.ema_beta;
    j["augment"] = policy_to_json(cfg.augment);
    j["seed"] = cfg.seed;
    return j;
}

GanConfig config_from_json(const json& j) {
    GanConfig cfg;
    cfg.resolution = j.value("resolution", cfg.resolution);
    cfg.latent_dim = j.value("latent_dim", cfg.latent_dim);
    cfg.w_dim = j.value("w_dim", cfg.w_dim);
    cfg.mapping_depth = j.value("mapping_depth", cfg.mapping_depth);
    cfg.channels_base = j.value("channels_base", cfg.channels_base);
    cfg.channels_max = j.value("channels_max", cfg.channels_max);
    cfg.lr_g = j.value("lr_g", cfg.lr_g);
    cfg.lr_d = j.value("lr_d", cfg.lr_d);
    cfg.beta1 = j.value("beta1", cfg.beta1);
    cfg.beta2 = j.value("beta2", cfg.beta2);
    cfg.r1_gamma = j.value("r1_gamma", cfg.r1_gamma);
    cfg.r1_interval = j.value("r1_interval", cfg.r1_interval);
    cfg.batch_size = j.value("batch_size", cfg.batch_size);
    cfg.total_steps = j.value("total_steps", cfg.total_steps);
    cfg.checkpoint_every = j.value("checkpoint_every", cfg.checkpoint_every);
    cfg.use_ema = j.value("use_ema", cfg.use_ema);
    cfg.ema_beta = j.value("ema_beta", cfg.ema_beta);
    if (j.contains("augment")) cfg.augment = policy_from_json(j["augment"]);
    cfg.seed = j.value("seed", cfg.seed);
    return cfg;
}

void copy_module_state(torch::nn::Module& dst, torch::nn::Module& src) {
    torch::NoGradGuard no_grad;
    auto dst_params = dst.named_parameters();
    for (const auto& item : src.named_parameters()) dst_params[item.key()].copy_(item.value());
    auto dst_buffers = dst.named_buffers();
    for (const auto& item : src.named_buffers()) dst_buffers[item.key()].copy_(item.value());
}

void check_finite(double value, const char* what, std::int64_t step) {
    if (!std::isfinite(value))
        throw NumericError(std::string("non-finite ") + what + " at adversarial step " +
                           std::to_string(step));
}

store::TensorMap prefixed(const store::TensorMap& m, const std::string& prefix) {
    store::TensorMap out;
    for (const auto& [name, tensor] : m) out.emplace(prefix + name, tensor);
    return out;
}

store::TensorMap strip_prefix(const store::TensorMap& m, const std::string& prefix) {
    store::TensorMap out;
    for (const auto& [name, tensor] : m)
        if (name.rfind(prefix, 0) == 0) out.emplace(name.substr(prefix.size()), tensor);
    return out;
}

}  // namespace

void GanConfig::validate() const {
    if (!power_of_two(resolution) || resolution < 8)
        throw UsageError("gan resolution must be a power of two >= 8, got " +
                         std::to_string(resolution));
    if (latent_dim < 2) throw UsageError("latent_dim must be at least 2");
    if (w_dim < 2) throw UsageError("w_dim must be at least 2");
    if (mapping_depth < 1) throw UsageError("mapping_depth must be positive");
    if (channels_base < 8 || channels_max < 8)
        throw UsageError("channel widths must be at least 8");
    if (lr_g <= 0.0 || lr_d <= 0.0) throw UsageError("gan learning rates must be positive");
    if (beta1 < 0.0 || beta1 >= 1.0 || beta2 < 0.0 || beta2 >= 1.0)
        throw UsageError("Adam betas must lie in [0, 1)");
    if (r1_gamma < 0.0) throw UsageError("r1_gamma must be non-negative");
    if (r1_interval < 1) throw UsageError("r1_interval must be positive");
    if (batch_size < 1) throw UsageError("batch_size must be positive");
    if (total_steps < 1) throw UsageError("total_steps must be positive");
    if (checkpoint_every < 0) throw UsageError("checkpoint_every must be non-negative");
    if (ema_beta <= 0.0 || ema_beta >= 1.0) throw UsageError("ema_beta must lie in (0, 1)");
}

std::int64_t GanConfig::num_levels() const {
    std::int64_t n = 1;
    for (std::int64_t r = 4; r < resolution; r *= 2) ++n;
    return n;
}

std::int64_t GanConfig::level_resolution(std::int64_t level) const {
    return std::int64_t{4} << level;
}

std::int64_t GanConfig::level_channels(std::int64_t level) const {
    const std::int64_t halved = channels_base >> level;
    return std::max<std::int64_t>(8, std::min(channels_max, halved));
}

std::string GanConfig::canonical_json() const { return config_to_json(*this).dump(); }

GanConfig gan_config_from_json(const std::string& text) {
    try {
        return config_from_json(json::parse(text));
    } catch (const json::exception& e) {
        throw DataError(std::string("malformed gan config: ") + e.what());
    }
}

MappingImpl::MappingImpl(std::int64_t latent_dim, std::int64_t w_dim, std::int64_t depth) {
    std::int64_t in = latent_dim;
    for (std::int64_t i = 0; i < depth; ++i) {
        auto layer = torch::nn::Linear(in, w_dim);
        layers_.push_back(register_module("fc" + std::to_string(i), layer));
        in = w_dim;
    }
}

torch::Tensor MappingImpl::forward(const torch::Tensor& z) {
    if (z.dim() != 2) throw UsageError("mapping expects a (N, latent_dim) batch");
    auto x = z / torch::sqrt(z.pow(2).mean(1, true) + 1e-8);
    for (auto& layer : layers_) x = torch::leaky_relu(layer->forward(x), 0.2);
    return x;
}

SynthLevelImpl::SynthLevelImpl(std::int64_t in_channels, std::int64_t out_channels,
                               std::int64_t w_dim, bool upsample)
    : upsample_(upsample), out_channels_(out_channels) {
    conv_ = register_module(
        "conv", torch::nn::Conv2d(torch::nn::Conv2dOptions(in_channels, out_channels, 3).padding(1)));
    style_ = register_module("style", torch::nn::Linear(w_dim, 2 * out_channels));
    // Nonzero start makes the noise path contribute from the first forward.
    noise_strength_ = register_parameter("noise_strength", torch::full({1}, 0.1));
}

torch::Tensor SynthLevelImpl::forward(const torch::Tensor& x, const torch::Tensor& w,
                                      const torch::Tensor& noise) {
    auto h = x;
    if (upsample_) {
        const auto sz = h.sizes();
        h = F::interpolate(h, F::InterpolateFuncOptions()
                                  .size(std::vector<std::int64_t>{sz[2] * 2, sz[3] * 2})
                                  .mode(torch::kNearest));
    }
    h = conv_->forward(h);
    if (noise.sizes() != torch::IntArrayRef({h.size(0), 1, h.size(2), h.size(3)})) {
        std::ostringstream os;
        os << "noise shape " << noise.sizes() << " does not match features " << h.sizes();
        throw UsageError(os.str());
    }
    h = h + noise_strength_ * noise;
    h = torch::leaky_relu(h, 0.2);

    // AdaIN: instance-normalize, then shift by the style affine of w.
    auto mean = h.mean({2, 3}, true);
    auto var = (h - mean).pow(2).mean({2, 3}, true);
    h = (h - mean) / torch::sqrt(var + 1e-8);
    auto style = style_->forward(w);  // (N, 2C)
    auto parts = style.chunk(2, 1);
    auto scale = (1.0 + parts[0]).unsqueeze(-1).unsqueeze(-1);
    auto bias = parts[1].unsqueeze(-1).unsqueeze(-1);
    return h * scale + bias;
}

GeneratorImpl::GeneratorImpl(const GanConfig& cfg) : cfg_(cfg) {
    cfg_.validate();
    mapping_ = register_module("mapping", Mapping(cfg_.latent_dim, cfg_.w_dim, cfg_.mapping_depth));
    const_input_ = register_parameter("const_input",
                                      torch::randn({cfg_.level_channels(0), 4, 4}));
    std::int64_t in = cfg_.level_channels(0);
    for (std::int64_t level = 0; level < cfg_.num_levels(); ++level) {
        const std::int64_t out = cfg_.level_channels(level);
        auto stage = SynthLevel(in, out, cfg_.w_dim, level > 0);
        levels_.push_back(register_module("level" + std::to_string(level), stage));
        in = out;
    }
    to_rgb_ = register_module("to_rgb", torch::nn::Conv2d(torch::nn::Conv2dOptions(in, 3, 1)));
}

torch::Tensor GeneratorImpl::map_latent(const torch::Tensor& z) {
    if (z.dim() != 2 || z.size(1) != cfg_.latent_dim)
        throw UsageError("latent batch must be (N, " + std::to_string(cfg_.latent_dim) + ")");
    return mapping_->forward(z);
}

torch::Tensor GeneratorImpl::synthesize(const std::vector<torch::Tensor>& styles,
                                        const std::vector<torch::Tensor>& noise) {
    const auto n_levels = static_cast<std::size_t>(cfg_.num_levels());
    if (styles.size() != n_levels)
        throw UsageError("expected " + std::to_string(n_levels) + " style vectors, got " +
                         std::to_string(styles.size()));
    if (noise.size() != n_levels)
        throw UsageError("expected " + std::to_string(n_levels) + " noise maps, got " +
                         std::to_string(noise.size()));
    const std::int64_t batch = styles[0].size(0);
    for (const auto& w : styles)
        if (w.dim() != 2 || w.size(0) != batch || w.size(1) != cfg_.w_dim)
            throw UsageError("style vectors must all be (N, w_dim)");

    auto x = const_input_.unsqueeze(0).expand({batch, -1, -1, -1});
    for (std::size_t level = 0; level < n_levels; ++level)
        x = levels_[level]->forward(x, styles[level], noise[level]);
    return torch::tanh(to_rgb_->forward(x));
}

torch::Tensor GeneratorImpl::forward(const torch::Tensor& z,
                                     const std::vector<torch::Tensor>& noise) {
    auto w = map_latent(z);
    std::vector<torch::Tensor> styles(static_cast<std::size_t>(cfg_.num_levels()), w);
    return synthesize(styles, noise);
}

std::vector<torch::Tensor> GeneratorImpl::sample_noise(std::int64_t batch,
                                                       rng::CounterRng& rng) const {
    std::vector<torch::Tensor> out;
    for (std::int64_t level = 0; level < cfg_.num_levels(); ++level) {
        const std::int64_t r = cfg_.level_resolution(level);
        out.push_back(transforms::normal_tensor({batch, 1, r, r}, rng));
    }
    return out;
}

std::vector<torch::Tensor> GeneratorImpl::sample_noise(std::int64_t batch) const {
    std::vector<torch::Tensor> out;
    for (std::int64_t level = 0; level < cfg_.num_levels(); ++level) {
        const std::int64_t r = cfg_.level_resolution(level);
        out.push_back(torch::randn({batch, 1, r, r}));
    }
    return out;
}

DiscriminatorImpl::DiscriminatorImpl(const GanConfig& cfg) : cfg_(cfg) {
    cfg_.validate();
    const std::int64_t n = cfg_.num_levels();
    std::int64_t c = cfg_.level_channels(n - 1);
    from_rgb_ = register_module("from_rgb",
                                torch::nn::Conv2d(torch::nn::Conv2dOptions(3, c, 1)));
    int idx = 0;
    auto add_conv = [&](std::int64_t in, std::int64_t out) {
        auto conv = torch::nn::Conv2d(torch::nn::Conv2dOptions(in, out, 3).padding(1));
        convs_.push_back(register_module("conv" + std::to_string(idx++), conv));
    };
    for (std::int64_t level = n - 1; level > 0; --level) {
        const std::int64_t c_next = cfg_.level_channels(level - 1);
        add_conv(c, c);
        add_conv(c, c_next);
        c = c_next;
    }
    add_conv(c, c);
    fc_ = register_module("fc", torch::nn::Linear(c * 4 * 4, 1));
}

torch::Tensor DiscriminatorImpl::forward(const torch::Tensor& x) {
    if (x.dim() != 4 || x.size(1) != 3 || x.size(2) != cfg_.resolution ||
        x.size(3) != cfg_.resolution) {
        std::ostringstream os;
        os << "discriminator expects (N, 3, " << cfg_.resolution << ", " << cfg_.resolution
           << "), got " << x.sizes();
        throw UsageError(os.str());
    }
    auto h = torch::leaky_relu(from_rgb_->forward(x), 0.2);
    std::size_t k = 0;
    for (std::int64_t level = cfg_.num_levels() - 1; level > 0; --level) {
        h = torch::leaky_relu(convs_[k++]->forward(h), 0.2);
        h = torch::leaky_relu(convs_[k++]->forward(h), 0.2);
        h = F::avg_pool2d(h, F::AvgPool2dFuncOptions(2));
    }
    h = torch::leaky_relu(convs_[k++]->forward(h), 0.2);
    return fc_->forward(h.flatten(1)).squeeze(1);
}

torch::Tensor d_logistic_loss(const torch::Tensor& real_logits,
                              const torch::Tensor& fake_logits) {
    return torch::softplus(-real_logits).mean() + torch::softplus(fake_logits).mean();
}

torch::Tensor g_nonsaturating_loss(const torch::Tensor& fake_logits) {
    return torch::softplus(-fake_logits).mean();
}

torch::Tensor r1_penalty(const std::function<torch::Tensor(const torch::Tensor&)>& critic,
                         const torch::Tensor& images, double gamma) {
    if (gamma < 0.0) throw UsageError("r1 gamma must be non-negative");
    auto x = images.detach().clone().requires_grad_(true);
    auto out = critic(x).sum();
    auto grads = torch::autograd::grad({out}, {x}, /*grad_outputs=*/{},
                                       /*retain_graph=*/c10::nullopt, /*create_graph=*/true);
    auto per_sample = grads[0].pow(2).reshape({x.size(0), -1}).sum(1);
    return (gamma / 2.0) * per_sample.mean();
}

torch::Tensor r1_penalty(Discriminator& d, const torch::Tensor& images, double gamma) {
    return r1_penalty([&d](const torch::Tensor& x) { return d->forward(x); }, images, gamma);
}

StepResult gan_step(Generator& g, Discriminator& d, torch::optim::Adam& opt_g,
                    torch::optim::Adam& opt_d, const torch::Tensor& real_batch,
                    const GanConfig& cfg, std::int64_t step, DiffAugTrace* trace) {
    const std::int64_t res = cfg.resolution;
    if (real_batch.dim() != 4 || real_batch.size(1) != 3 || real_batch.size(2) != res ||
        real_batch.size(3) != res)
        throw UsageError("real batch must be (N, 3, " + std::to_string(res) + ", " +
                         std::to_string(res) + ")");
    const std::int64_t batch = real_batch.size(0);
    const auto ustep = static_cast<std::uint64_t>(step);
    StepResult result;

    // Discriminator update. The fake batch is detached; real and fake share
    // one set of augmentation draws.
    auto z_rng_d = rng::CounterRng::keyed({cfg.seed, ustep, 0, rng::kStreamLatent});
    auto z_d = transforms::normal_tensor({batch, cfg.latent_dim}, z_rng_d);
    auto noise_rng_d = rng::CounterRng::keyed({cfg.seed, ustep, 0, rng::kStreamNoise});
    auto noise_d = g->sample_noise(batch, noise_rng_d);
    torch::Tensor fake_d;
    {
        torch::NoGradGuard no_grad;
        fake_d = g->forward(z_d, noise_d);
    }
    auto aug_rng_d = rng::CounterRng::keyed({cfg.seed, ustep, 0, rng::kStreamDiffAug});
    auto sample_d = diffaug::sample_diffaug(cfg.augment, batch, res, res, aug_rng_d);
    auto d_real = d->forward(diffaug::apply_diffaug(real_batch.detach(), sample_d));
    auto d_fake = d->forward(diffaug::apply_diffaug(fake_d, sample_d));
    auto d_loss = d_logistic_loss(d_real, d_fake);
    result.d_loss = d_loss.item<double>();
    check_finite(result.d_loss, "discriminator loss", step);

    auto d_total = d_loss;
    if (cfg.r1_gamma > 0.0 && step % cfg.r1_interval == 0) {
        auto r1 = r1_penalty(d, real_batch, cfg.r1_gamma);
        result.r1 = r1.item<double>();
        result.r1_applied = true;
        check_finite(result.r1, "r1 penalty", step);
        d_total = d_total + r1;
    }
    opt_d.zero_grad();
    d_total.backward();
    opt_d.step();

    // Generator update with fresh draws; gradient flows through the
    // augmentation into the generator.
    auto z_rng_g = rng::CounterRng::keyed({cfg.seed, ustep, 1, rng::kStreamLatent});
    auto z_g = transforms::normal_tensor({batch, cfg.latent_dim}, z_rng_g);
    auto noise_rng_g = rng::CounterRng::keyed({cfg.seed, ustep, 1, rng::kStreamNoise});
    auto noise_g = g->sample_noise(batch, noise_rng_g);
    auto fake_g = g->forward(z_g, noise_g);
    auto aug_rng_g = rng::CounterRng::keyed({cfg.seed, ustep, 1, rng::kStreamDiffAug});
    auto sample_g = diffaug::sample_diffaug(cfg.augment, batch, res, res, aug_rng_g);
    auto g_loss = g_nonsaturating_loss(d->forward(diffaug::apply_diffaug(fake_g, sample_g)));
    result.g_loss = g_loss.item<double>();
    check_finite(result.g_loss, "generator loss", step);
    opt_g.zero_grad();
    g_loss.backward();
    opt_g.step();

    if (trace) {
        trace->d_step = sample_d;
        trace->g_step = sample_g;
    }
    return result;
}

GanTrainResult train_gan(const dataset::Manifest& manifest, const GanConfig& cfg,
                         const std::optional<std::filesystem::path>& checkpoint_dir) {
    cfg.validate();
    if (manifest.records.empty()) throw UsageError("gan training needs a non-empty manifest");
    const dataset::Label label = manifest.records.front().label;
    for (const auto& rec : manifest.records)
        if (rec.label != label)
            throw UsageError("gan training expects a single-class manifest; found both labels");

    torch::manual_seed(static_cast<std::int64_t>(cfg.seed));
    GanTrainResult out;
    out.generator = Generator(cfg);
    out.discriminator = Discriminator(cfg);
    out.class_label = label;
    if (cfg.use_ema) {
        out.generator_ema = Generator(cfg);
        copy_module_state(*out.generator_ema, *out.generator);
    } else {
        out.generator_ema = out.generator;
    }

    std::vector<torch::Tensor> images;
    images.reserve(manifest.records.size());
    for (const auto& rec : manifest.records) {
        auto img = transforms::resize(imageio::load_image(rec.path), cfg.resolution, cfg.resolution);
        images.push_back(img * 2.0 - 1.0);  // [0,1] -> [-1,1]
    }
    const auto n = static_cast<std::int64_t>(images.size());

    auto g_options = torch::optim::AdamOptions(cfg.lr_g).betas(std::make_tuple(cfg.beta1, cfg.beta2));
    auto d_options = torch::optim::AdamOptions(cfg.lr_d).betas(std::make_tuple(cfg.beta1, cfg.beta2));
    torch::optim::Adam opt_g(out.generator->parameters(), g_options);
    torch::optim::Adam opt_d(out.discriminator->parameters(), d_options);

    out.log.reserve(static_cast<std::size_t>(cfg.total_steps));
    for (std::int64_t step = 0; step < cfg.total_steps; ++step) {
        auto batch_rng = rng::CounterRng::keyed(
            {cfg.seed, static_cast<std::uint64_t>(step), rng::kStreamBatch});
        std::vector<torch::Tensor> chunk;
        chunk.reserve(static_cast<std::size_t>(cfg.batch_size));
        for (std::int64_t b = 0; b < cfg.batch_size; ++b)
            chunk.push_back(images[static_cast<std::size_t>(batch_rng.uniform_int(0, n - 1))]);
        auto real = torch::stack(chunk);

        out.log.push_back(gan_step(out.generator, out.discriminator, opt_g, opt_d, real, cfg, step));

        if (cfg.use_ema) {
            torch::NoGradGuard no_grad;
            auto shadow = out.generator_ema->named_parameters();
            for (const auto& item : out.generator->named_parameters())
                shadow[item.key()].mul_(cfg.ema_beta).add_(item.value(), 1.0 - cfg.ema_beta);
        }

        if (checkpoint_dir && cfg.checkpoint_every > 0 &&
            (step + 1) % cfg.checkpoint_every == 0 && step + 1 < cfg.total_steps) {
            const auto path = *checkpoint_dir / ("gan_" + dataset::to_string(label) + "_step" +
                                                 std::to_string(step + 1) + ".bin");
            save_gan_checkpoint(out, cfg, step + 1, path);
        }
    }

    if (checkpoint_dir) {
        const auto path = *checkpoint_dir / ("gan_" + dataset::to_string(label) + "_final.bin");
        save_gan_checkpoint(out, cfg, cfg.total_steps, path);
    }
    return out;
}

void save_gan_checkpoint(GanTrainResult& result, const GanConfig& cfg, std::int64_t step,
                         const std::filesystem::path& bin_path) {
    store::TensorMap combined = prefixed(store::state_dict(*result.generator), "g.");
    auto ema = prefixed(store::state_dict(*result.generator_ema), "g_ema.");
    combined.insert(ema.begin(), ema.end());
    auto disc = prefixed(store::state_dict(*result.discriminator), "d.");
    combined.insert(disc.begin(), disc.end());
    store::save_tensors(combined, bin_path);

    json sidecar;
    sidecar["config"] = config_to_json(cfg);
    sidecar["class_label"] = dataset::to_string(result.class_label);
    sidecar["step"] = step;
    store::write_text_atomic(std::filesystem::path(bin_path.string() + ".json"),
                             sidecar.dump(2) + "\n");
}

LoadedGan load_gan_checkpoint(const std::filesystem::path& bin_path) {
    const auto json_path = std::filesystem::path(bin_path.string() + ".json");
    if (!std::filesystem::exists(bin_path))
        throw IoError("gan checkpoint not found: " + bin_path.string());
    if (!std::filesystem::exists(json_path))
        throw IoError("gan checkpoint sidecar not found: " + json_path.string());

    std::ifstream in(json_path, std::ios::binary);
    json sidecar;
    try {
        sidecar = json::parse(in);
    } catch (const json::parse_error& e) {
        throw DataError("malformed gan sidecar " + json_path.string() + ": " + e.what());
    }

    LoadedGan out;
    try {
        out.cfg = config_from_json(sidecar.at("config"));
        out.class_label = dataset::parse_label(sidecar.at("class_label").get<std::string>());
        out.step = sidecar.at("step").get<std::int64_t>();
    } catch (const json::exception& e) {
        throw DataError("malformed gan sidecar " + json_path.string() + ": " + e.what());
    }

    out.generator = Generator(out.cfg);
    out.generator_ema = Generator(out.cfg);
    out.discriminator = Discriminator(out.cfg);
    auto combined = store::load_tensors(bin_path);
    store::load_state_dict(*out.generator, strip_prefix(combined, "g."));
    store::load_state_dict(*out.generator_ema, strip_prefix(combined, "g_ema."));
    store::load_state_dict(*out.discriminator, strip_prefix(combined, "d."));
    out.generator->eval();
    out.generator_ema->eval();
    out.discriminator->eval();
    return out;
}

}  // namespace synthaug::gan
