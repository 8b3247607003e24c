#include "synthaug/synthesis.hpp"

#include <cstdio>
#include <vector>

#include "synthaug/common.hpp"
#include "synthaug/imageio.hpp"
#include "synthaug/rng.hpp"
#include "synthaug/transforms.hpp"

namespace synthaug::synthesis {

namespace {

std::string image_name(std::int64_t index) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "syn_%06lld.png", static_cast<long long>(index));
    return buf;
}

std::string record_id(dataset::Label label, std::int64_t index) {
    return "syn:" + dataset::to_string(label) + ":" + std::to_string(index);
}

}  // namespace

torch::Tensor generate_class(gan::Generator& g, dataset::Label label, std::int64_t begin,
                             std::int64_t count, std::uint64_t seed, bool grayscale) {
    if (begin < 0) throw UsageError("generation index must be non-negative");
    if (count < 1) throw UsageError("generation count must be positive");

    torch::NoGradGuard no_grad;
    g->eval();
    const auto& cfg = g->config();
    const auto label_tag = static_cast<std::uint64_t>(dataset::label_index(label));
    const std::int64_t n_levels = cfg.num_levels();

    const std::int64_t first_group = begin / kGenerationBatch;
    const std::int64_t last_group = (begin + count - 1) / kGenerationBatch;
    std::vector<torch::Tensor> groups;
    groups.reserve(static_cast<std::size_t>(last_group - first_group + 1));

    for (std::int64_t group = first_group; group <= last_group; ++group) {
        const std::int64_t group_begin = group * kGenerationBatch;
        std::vector<torch::Tensor> zs;
        zs.reserve(kGenerationBatch);
        std::vector<std::vector<torch::Tensor>> noise_parts(static_cast<std::size_t>(n_levels));
        for (std::int64_t j = 0; j < kGenerationBatch; ++j) {
            const auto idx = static_cast<std::uint64_t>(group_begin + j);
            auto z_rng = rng::CounterRng::keyed({seed, label_tag, idx, rng::kStreamLatent});
            zs.push_back(transforms::normal_tensor({1, cfg.latent_dim}, z_rng));
            auto noise_rng = rng::CounterRng::keyed({seed, label_tag, idx, rng::kStreamNoise});
            for (std::int64_t level = 0; level < n_levels; ++level) {
                const std::int64_t r = cfg.level_resolution(level);
                noise_parts[static_cast<std::size_t>(level)].push_back(
                    transforms::normal_tensor({1, 1, r, r}, noise_rng));
            }
        }
        auto z = torch::cat(zs);
        std::vector<torch::Tensor> noise;
        noise.reserve(static_cast<std::size_t>(n_levels));
        for (auto& parts : noise_parts) noise.push_back(torch::cat(parts));

        auto images = (g->forward(z, noise) + 1.0) * 0.5;  // [-1,1] -> [0,1]
        images = images.clamp(0.0, 1.0);
        if (grayscale) images = images.mean(1, true).repeat({1, 3, 1, 1});
        groups.push_back(images);
    }

    auto all = groups.size() == 1 ? groups.front() : torch::cat(groups);
    return all.narrow(0, begin - first_group * kGenerationBatch, count).contiguous();
}

JobResult run_job(gan::LoadedGan& positive, gan::LoadedGan& negative, const SynthesisJob& job) {
    if (job.per_class < 1) throw UsageError("per_class must be positive");
    if (positive.class_label != dataset::Label::positive)
        throw UsageError("positive-slot generator was trained on '" +
                         dataset::to_string(positive.class_label) + "'");
    if (negative.class_label != dataset::Label::negative)
        throw UsageError("negative-slot generator was trained on '" +
                         dataset::to_string(negative.class_label) + "'");

    std::error_code ec;
    std::filesystem::create_directories(job.out_dir, ec);
    if (ec) throw IoError("cannot create " + job.out_dir.string() + ": " + ec.message());

    JobResult result;
    result.manifest.split = dataset::Split::train;
    result.manifest.name = "synthetic";

    struct ClassSlot {
        dataset::Label label;
        gan::LoadedGan* gan;
    };
    for (const auto& slot : {ClassSlot{dataset::Label::negative, &negative},
                             ClassSlot{dataset::Label::positive, &positive}}) {
        auto& g = slot.gan->cfg.use_ema ? slot.gan->generator_ema : slot.gan->generator;
        const auto class_dir = job.out_dir / dataset::to_string(slot.label);
        std::filesystem::create_directories(class_dir, ec);
        if (ec) throw IoError("cannot create " + class_dir.string() + ": " + ec.message());

        for (std::int64_t group_begin = 0; group_begin < job.per_class;
             group_begin += kGenerationBatch) {
            const std::int64_t group_count =
                std::min(kGenerationBatch, job.per_class - group_begin);
            bool any_missing = false;
            for (std::int64_t j = 0; j < group_count; ++j)
                if (!std::filesystem::exists(class_dir / image_name(group_begin + j)))
                    any_missing = true;

            torch::Tensor images;
            if (any_missing)
                images = generate_class(g, slot.label, group_begin, group_count, job.seed,
                                        job.grayscale);
            for (std::int64_t j = 0; j < group_count; ++j) {
                const std::int64_t index = group_begin + j;
                const auto path = class_dir / image_name(index);
                if (std::filesystem::exists(path)) {
                    ++result.reused;
                } else {
                    imageio::save_png(images[j], path);
                    ++result.written;
                }
                dataset::ImageRecord rec;
                rec.record_id = record_id(slot.label, index);
                rec.patient_id = rec.record_id;  // synthetic images have no shared patient
                rec.path = path;
                rec.label = slot.label;
                rec.source = dataset::Source::synthetic;
                rec.view = dataset::View::unknown;
                result.manifest.records.push_back(std::move(rec));
            }
        }
    }

    dataset::save_manifest(result.manifest, job.out_dir / "manifest.csv");
    return result;
}

}  // namespace synthaug::synthesis
