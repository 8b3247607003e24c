#ifndef SYNTHAUG_SYNTHESIS_HPP
#define SYNTHAUG_SYNTHESIS_HPP

#include <cstdint>
#include <filesystem>

#include <torch/torch.h>

#include "synthaug/dataset.hpp"
#include "synthaug/gan.hpp"

namespace synthaug::synthesis {

// Generation always runs in groups of this width, so an image's bytes depend
// only on (seed, class, index) and never on how the request was windowed.
inline constexpr std::int64_t kGenerationBatch = 16;

struct SynthesisJob {
    std::filesystem::path out_dir;
    std::int64_t per_class = 0;
    std::uint64_t seed = 0;
    bool grayscale = true;  // collapse to the channel mean before saving
};

// Images for class-stream indices [begin, begin + count), float in [0, 1],
// shape (count, 3, R, R). Pure function of (generator weights, seed, label,
// index).
torch::Tensor generate_class(gan::Generator& g, dataset::Label label, std::int64_t begin,
                             std::int64_t count, std::uint64_t seed, bool grayscale = true);

struct JobResult {
    dataset::Manifest manifest;
    std::int64_t written = 0;  // PNGs produced by this call
    std::int64_t reused = 0;   // already on disk and kept
};

// Writes per_class PNGs per label under out_dir/{negative,positive}/ plus a
// manifest.csv. Existing files are trusted (writes are atomic) and skipped,
// so a partially produced corpus resumes where it stopped and deleted files
// regenerate byte-identically.
JobResult run_job(gan::LoadedGan& positive, gan::LoadedGan& negative, const SynthesisJob& job);

}  // namespace synthaug::synthesis

#endif
