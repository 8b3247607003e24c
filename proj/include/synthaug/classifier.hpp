#ifndef SYNTHAUG_CLASSIFIER_HPP
#define SYNTHAUG_CLASSIFIER_HPP

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <torch/torch.h>

#include "synthaug/dataset.hpp"
#include "synthaug/models.hpp"
#include "synthaug/tensor_store.hpp"
#include "synthaug/transforms.hpp"

namespace synthaug::classifier {

enum class Backbone { tiny_resnet, resnet50_shape };

std::string to_string(Backbone b);
Backbone parse_backbone(const std::string& s);

struct ClassifierConfig {
    Backbone backbone = Backbone::tiny_resnet;
    std::optional<std::filesystem::path> pretrained_weights;
    std::int64_t input_size = 0;  // 0 = backbone default (tiny 64, resnet50 224)

    static constexpr std::int64_t kNumClasses = 2;

    std::int64_t resolved_input_size() const {
        if (input_size > 0) return input_size;
        return backbone == Backbone::resnet50_shape ? 224 : 64;
    }
};

enum class LossKind { cross_entropy };

struct TrainConfig {
    std::int64_t batch_size = 16;
    double beta1 = 0.9;
    double beta2 = 0.999;
    LossKind loss = LossKind::cross_entropy;
    double initial_lr = 0.001;
    double max_lr = 0.006;
    std::int64_t freeze_epochs = 5;
    std::int64_t main_epochs = 30;
    std::uint64_t seed = 0;

    void validate() const;
    // Canonical serialization, used both for sidecars and for the
    // same-hyperparameters hash check across experiment arms.
    std::string canonical_json() const;
};

enum class Phase { frozen, full };

struct ScheduleState {
    Phase phase = Phase::frozen;
    std::int64_t epoch = 0;
    std::int64_t global_step = 0;
    double current_lr = 0.0;
};

inline Phase phase_for_epoch(const TrainConfig& cfg, std::int64_t epoch) {
    return epoch < cfg.freeze_epochs ? Phase::frozen : Phase::full;
}

struct EpochStats {
    double train_loss = 0.0;
    double val_loss = 0.0;
    double val_accuracy = 0.0;
    double lr_end = 0.0;
};

struct TrainHistory {
    std::vector<EpochStats> epochs;
    std::vector<double> phase2_lr_log;  // realized lr, one entry per unfrozen step
};

// A backbone plus the knowledge of which parameters form the 2-output head.
class Model {
public:
    Model() = default;
    Model(ClassifierConfig cfg, std::shared_ptr<models::BackboneImpl> net)
        : cfg_(std::move(cfg)), net_(std::move(net)) {}

    bool defined() const { return net_ != nullptr; }
    const ClassifierConfig& config() const { return cfg_; }
    std::shared_ptr<models::BackboneImpl> net() { return net_; }

    torch::Tensor forward(const torch::Tensor& batch) { return net_->forward(batch); }

    std::vector<torch::Tensor> head_parameters() const;
    std::vector<torch::Tensor> backbone_parameters() const;
    std::vector<torch::Tensor> all_parameters() const;

    store::TensorMap state() const { return store::state_dict(*net_); }
    store::TensorMap backbone_state() const;  // parameters + buffers, head excluded

    std::int64_t parameter_count() const { return models::parameter_count(*net_); }

private:
    ClassifierConfig cfg_;
    std::shared_ptr<models::BackboneImpl> net_;
};

// Builds the configured backbone with a freshly initialized 2-output head.
// pretrained_weights, when set, must contain exactly the backbone tensors;
// extra, missing or mismatched names raise DataError listing them.
Model build_model(const ClassifierConfig& cfg);

std::string classifier_config_json(const ClassifierConfig& cfg);
ClassifierConfig classifier_config_from_json(const std::string& text);
TrainConfig train_config_from_json(const std::string& text);

// Warmup rises initial -> max over the first round(0.3 * total) steps, then
// anneals max -> initial/100 over the rest; cosine on both segments.
double one_cycle_lr(std::int64_t step, std::int64_t total_steps, double initial_lr,
                    double max_lr);

// Softmax probabilities, one row per sample. Inputs are expected to be
// normalized; a suspicious value range only warns.
torch::Tensor predict(Model& model, const torch::Tensor& batch);

// Argmax with ties broken toward class index 0 (negative).
std::vector<dataset::Label> classify(const torch::Tensor& probabilities);

// Two-phase schedule: freeze_epochs epochs of head-only training at a fixed
// initial_lr with a fully static backbone, then main_epochs epochs of full
// training under the one-cycle schedule. Deterministic given cfg.seed.
TrainHistory train(Model& model, const dataset::Manifest& train_manifest,
                   const dataset::Manifest& val_manifest, const TrainConfig& cfg,
                   const transforms::NormStats& stats,
                   const transforms::AugmentPolicy& augment = {});

// Per-record predicted labels over a manifest, in manifest order.
std::vector<dataset::Label> predict_manifest(Model& model, const dataset::Manifest& manifest,
                                             const transforms::NormStats& stats,
                                             std::int64_t batch_size = 16);

void save_checkpoint(Model& model, const TrainConfig& train_cfg,
                     const transforms::NormStats& stats, const TrainHistory& history,
                     const std::filesystem::path& bin_path);

struct LoadedCheckpoint {
    Model model;
    TrainConfig train_cfg;
    transforms::NormStats stats;
    TrainHistory history;
};

LoadedCheckpoint load_checkpoint(const std::filesystem::path& bin_path);

}  // namespace synthaug::classifier

#endif
