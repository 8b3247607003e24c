#ifndef SYNTHAUG_EXPERIMENT_HPP
#define SYNTHAUG_EXPERIMENT_HPP

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include "synthaug/classifier.hpp"
#include "synthaug/gan.hpp"
#include "synthaug/metrics.hpp"
#include "synthaug/transforms.hpp"

namespace synthaug::experiment {

struct DataPaths {
    std::filesystem::path train;
    std::filesystem::path val;
    std::filesystem::path test;
};

struct ExperimentConfig {
    std::string name = "experiment";
    std::uint64_t seed = 0;
    int threads = 1;
    std::filesystem::path out_dir;
    DataPaths data;
    classifier::ClassifierConfig model;
    classifier::TrainConfig train;
    transforms::AugmentPolicy augment;
    gan::GanConfig gan;
    std::int64_t synth_per_class = 64;
    bool synth_grayscale = true;
};

// Parses the experiment JSON; relative paths resolve against the config
// file's directory. Per-arm "train_a"/"train_b" sections are accepted only
// when they match "train" exactly — the two arms may differ in nothing but
// their training data.
ExperimentConfig load_experiment_config(const std::filesystem::path& path);

struct RunOptions {
    bool resume = false;  // skip stages whose marker, inputs and outputs all match
    std::optional<std::uint64_t> seed_override;
};

struct RunOutcome {
    metrics::EvalReport arm_a;  // trained on real data only
    metrics::EvalReport arm_b;  // trained on real + synthetic
    metrics::DeltaReport delta;
};

// Full pipeline: norm stats -> per-class adversarial training -> synthetic
// corpus -> both classifier arms -> evaluation -> comparison. Every stage
// leaves a completion marker carrying a hash chained through all upstream
// inputs; a resumed run reruns exactly the stages whose inputs changed or
// whose outputs are missing. Machine-readable progress events go to stdout,
// human-readable tables to stderr. Deterministic given the seed.
RunOutcome run_experiment(const ExperimentConfig& cfg, const RunOptions& opts = {});

}  // namespace synthaug::experiment

#endif
