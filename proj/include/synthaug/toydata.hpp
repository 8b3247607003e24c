#ifndef SYNTHAUG_TOYDATA_HPP
#define SYNTHAUG_TOYDATA_HPP

#include <cstdint>
#include <filesystem>

#include <torch/torch.h>

#include "synthaug/dataset.hpp"

namespace synthaug::toydata {

// Procedural two-class corpus: each image is a shaded ramp with pixel noise;
// the positive class additionally carries a bright blob at a random
// location. With the default blob range the classes are separable enough
// that a small model reaches perfect accuracy, which makes end-to-end runs
// cheap to check; lowering blob_lo mixes in faint positives so a baseline
// trained on few positives has real headroom to improve on.
struct ToySpec {
    std::filesystem::path root;
    std::int64_t image_size = 64;
    std::int64_t train_negative = 200;
    std::int64_t train_positive = 30;  // imbalanced on purpose
    std::int64_t val_negative = 20;
    std::int64_t val_positive = 20;
    std::int64_t test_negative = 50;
    std::int64_t test_positive = 50;
    std::uint64_t seed = 0;
    double blob_lo = 0.5;  // positive blob amplitude ~ U(blob_lo, blob_hi)
    double blob_hi = 0.5;
};

// One image, (3, size, size) float in [0, 1], grayscale replicated. Pure
// function of the arguments; `stream` keeps the three splits independent.
torch::Tensor toy_image(dataset::Label label, std::uint64_t seed, std::uint64_t stream,
                        std::int64_t index, std::int64_t size, double blob_lo = 0.5,
                        double blob_hi = 0.5);

struct ToyCorpus {
    dataset::Manifest train;
    dataset::Manifest val;
    dataset::Manifest test;
};

// Writes PNGs plus train.csv / validation.csv / test.csv under spec.root.
// Every image gets its own patient id, namespaced by split, so splits are
// patient-disjoint by construction. Existing files are overwritten.
ToyCorpus make_toy_corpus(const ToySpec& spec);

}  // namespace synthaug::toydata

#endif
