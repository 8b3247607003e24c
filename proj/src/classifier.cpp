#include "synthaug/classifier.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <memory>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "synthaug/common.hpp"
#include "synthaug/imageio.hpp"
#include "synthaug/rng.hpp"

namespace synthaug::classifier {

using json = nlohmann::ordered_json;

namespace {

constexpr const char* kHeadPrefix = "fc.";
constexpr double kPi = 3.14159265358979323846;

bool is_head_name(const std::string& name) {
    return name.rfind(kHeadPrefix, 0) == 0;
}

json cc_to_json(const ClassifierConfig& cfg) {
    json j;
    j["backbone"] = to_string(cfg.backbone);
    j["input_size"] = cfg.resolved_input_size();
    if (cfg.pretrained_weights) j["pretrained_weights"] = cfg.pretrained_weights->string();
    return j;
}

ClassifierConfig cc_from_json(const json& j) {
    ClassifierConfig cfg;
    if (j.contains("backbone")) cfg.backbone = parse_backbone(j["backbone"].get<std::string>());
    cfg.input_size = j.value("input_size", cfg.input_size);
    if (j.contains("pretrained_weights"))
        cfg.pretrained_weights = std::filesystem::path(j["pretrained_weights"].get<std::string>());
    return cfg;
}

json tc_to_json(const TrainConfig& cfg) {
    json j;
    j["batch_size"] = cfg.batch_size;
    j["beta1"] = cfg.beta1;
    j["beta2"] = cfg.beta2;
    j["loss"] = "cross-entropy";
    j["initial_lr"] = cfg.initial_lr;
    j["max_lr"] = cfg.max_lr;
    j["freeze_epochs"] = cfg.freeze_epochs;
    j["main_epochs"] = cfg.main_epochs;
    j["seed"] = cfg.seed;
    return j;
}

TrainConfig tc_from_json(const json& j) {
    TrainConfig cfg;
    cfg.batch_size = j.value("batch_size", cfg.batch_size);
    cfg.beta1 = j.value("beta1", cfg.beta1);
    cfg.beta2 = j.value("beta2", cfg.beta2);
    if (j.contains("loss") && j["loss"].get<std::string>() != "cross-entropy")
        throw UsageError("unsupported loss: " + j["loss"].get<std::string>());
    cfg.initial_lr = j.value("initial_lr", cfg.initial_lr);
    cfg.max_lr = j.value("max_lr", cfg.max_lr);
    cfg.freeze_epochs = j.value("freeze_epochs", cfg.freeze_epochs);
    cfg.main_epochs = j.value("main_epochs", cfg.main_epochs);
    cfg.seed = j.value("seed", cfg.seed);
    return cfg;
}

json history_to_json(const TrainHistory& h) {
    json epochs = json::array();
    for (const auto& e : h.epochs) {
        json je;
        je["train_loss"] = e.train_loss;
        je["val_loss"] = e.val_loss;
        je["val_accuracy"] = e.val_accuracy;
        je["lr_end"] = e.lr_end;
        epochs.push_back(std::move(je));
    }
    json j;
    j["epochs"] = std::move(epochs);
    j["phase2_lr_log"] = h.phase2_lr_log;
    return j;
}

TrainHistory history_from_json(const json& j) {
    TrainHistory h;
    for (const auto& je : j.at("epochs")) {
        EpochStats e;
        e.train_loss = je.at("train_loss").get<double>();
        e.val_loss = je.at("val_loss").get<double>();
        e.val_accuracy = je.at("val_accuracy").get<double>();
        e.lr_end = je.at("lr_end").get<double>();
        h.epochs.push_back(e);
    }
    if (j.contains("phase2_lr_log")) h.phase2_lr_log = j["phase2_lr_log"].get<std::vector<double>>();
    return h;
}

void set_adam_lr(torch::optim::Adam& opt, double lr) {
    for (auto& group : opt.param_groups())
        static_cast<torch::optim::AdamOptions&>(group.options()).lr(lr);
}

torch::optim::Adam make_adam(std::vector<torch::Tensor> params, const TrainConfig& cfg,
                             double lr) {
    auto options = torch::optim::AdamOptions(lr).betas(std::make_tuple(cfg.beta1, cfg.beta2));
    return torch::optim::Adam(std::move(params), options);
}

// Images resized once up front; augmentation and normalization happen per use.
std::vector<torch::Tensor> load_resized(const dataset::Manifest& m, std::int64_t size) {
    std::vector<torch::Tensor> out;
    out.reserve(m.records.size());
    for (const auto& rec : m.records)
        out.push_back(transforms::resize(imageio::load_image(rec.path), size, size));
    return out;
}

torch::Tensor labels_tensor(const dataset::Manifest& m, std::size_t begin, std::size_t end) {
    std::vector<std::int64_t> raw;
    raw.reserve(end - begin);
    for (std::size_t i = begin; i < end; ++i)
        raw.push_back(static_cast<std::int64_t>(m.records[i].label));
    return torch::tensor(raw, torch::kInt64);
}

struct EvalNumbers {
    double loss = 0.0;
    double accuracy = 0.0;
};

EvalNumbers evaluate_split(Model& model, const std::vector<torch::Tensor>& images,
                           const dataset::Manifest& manifest,
                           const transforms::NormStats& stats, std::int64_t batch_size) {
    torch::NoGradGuard no_grad;
    const bool was_training = model.net()->is_training();
    model.net()->eval();

    double loss_sum = 0.0;
    std::int64_t correct = 0;
    const std::size_t n = images.size();
    for (std::size_t begin = 0; begin < n; begin += static_cast<std::size_t>(batch_size)) {
        const std::size_t end = std::min(n, begin + static_cast<std::size_t>(batch_size));
        std::vector<torch::Tensor> chunk;
        chunk.reserve(end - begin);
        for (std::size_t i = begin; i < end; ++i)
            chunk.push_back(transforms::normalize(images[i], stats));
        auto batch = torch::stack(chunk);
        auto labels = labels_tensor(manifest, begin, end);
        auto logits = model.forward(batch);
        auto loss = torch::nn::functional::cross_entropy(
            logits, labels,
            torch::nn::functional::CrossEntropyFuncOptions().reduction(torch::kSum));
        loss_sum += loss.item<double>();
        auto pred = logits.argmax(1);
        correct += (pred == labels).sum().item<std::int64_t>();
    }
    if (was_training) model.net()->train();
    EvalNumbers out;
    out.loss = loss_sum / static_cast<double>(n);
    out.accuracy = static_cast<double>(correct) / static_cast<double>(n);
    return out;
}

}  // namespace

std::string to_string(Backbone b) {
    switch (b) {
        case Backbone::tiny_resnet: return "tiny-resnet";
        case Backbone::resnet50_shape: return "reference-resnet50-shape";
    }
    throw UsageError("invalid backbone value");
}

Backbone parse_backbone(const std::string& s) {
    if (s == "tiny-resnet") return Backbone::tiny_resnet;
    if (s == "reference-resnet50-shape") return Backbone::resnet50_shape;
    throw UsageError("unknown backbone: '" + s + "'");
}

void TrainConfig::validate() const {
    if (batch_size < 1) throw UsageError("batch_size must be positive");
    if (beta1 < 0.0 || beta1 >= 1.0 || beta2 < 0.0 || beta2 >= 1.0)
        throw UsageError("Adam betas must lie in [0, 1)");
    if (initial_lr <= 0.0) throw UsageError("initial_lr must be positive");
    if (max_lr <= initial_lr)
        throw UsageError("max_lr must exceed initial_lr (one-cycle warmup has nowhere to go)");
    if (freeze_epochs < 0) throw UsageError("freeze_epochs must be non-negative");
    // main_epochs may be 0: a head-only fine-tune is a legitimate run.
    if (main_epochs < 0) throw UsageError("main_epochs must be non-negative");
    if (freeze_epochs + main_epochs < 1) throw UsageError("no epochs to train");
}

std::string TrainConfig::canonical_json() const {
    return tc_to_json(*this).dump();
}

std::string classifier_config_json(const ClassifierConfig& cfg) {
    return cc_to_json(cfg).dump();
}

ClassifierConfig classifier_config_from_json(const std::string& text) {
    try {
        return cc_from_json(json::parse(text));
    } catch (const json::exception& e) {
        throw DataError(std::string("malformed classifier config: ") + e.what());
    }
}

TrainConfig train_config_from_json(const std::string& text) {
    try {
        return tc_from_json(json::parse(text));
    } catch (const json::exception& e) {
        throw DataError(std::string("malformed train config: ") + e.what());
    }
}

std::vector<torch::Tensor> Model::head_parameters() const {
    std::vector<torch::Tensor> out;
    for (const auto& p : net_->named_parameters())
        if (is_head_name(p.key())) out.push_back(p.value());
    return out;
}

std::vector<torch::Tensor> Model::backbone_parameters() const {
    std::vector<torch::Tensor> out;
    for (const auto& p : net_->named_parameters())
        if (!is_head_name(p.key())) out.push_back(p.value());
    return out;
}

std::vector<torch::Tensor> Model::all_parameters() const {
    return net_->parameters();
}

store::TensorMap Model::backbone_state() const {
    store::TensorMap full = store::state_dict(*net_);
    store::TensorMap out;
    for (auto& [name, tensor] : full)
        if (!is_head_name(name)) out.emplace(name, std::move(tensor));
    return out;
}

Model build_model(const ClassifierConfig& cfg) {
    std::shared_ptr<models::BackboneImpl> net;
    switch (cfg.backbone) {
        case Backbone::tiny_resnet: net = std::make_shared<models::TinyResNetImpl>(); break;
        case Backbone::resnet50_shape: net = std::make_shared<models::ResNet50Impl>(); break;
    }
    Model model(cfg, net);

    if (cfg.pretrained_weights) {
        const auto& path = *cfg.pretrained_weights;
        if (!std::filesystem::exists(path))
            throw IoError("pretrained weights not found: " + path.string());
        store::TensorMap loaded = store::load_tensors(path);
        store::TensorMap expected = model.backbone_state();

        std::vector<std::string> problems;
        for (const auto& [name, tensor] : loaded) {
            auto it = expected.find(name);
            if (it == expected.end()) {
                problems.push_back(is_head_name(name) ? "head tensor not loadable: " + name
                                                      : "unexpected tensor: " + name);
                continue;
            }
            if (it->second.sizes() != tensor.sizes()) {
                std::ostringstream os;
                os << "shape mismatch: " << name << " expected " << it->second.sizes()
                   << " got " << tensor.sizes();
                problems.push_back(os.str());
            }
        }
        for (const auto& [name, tensor] : expected)
            if (loaded.find(name) == loaded.end())
                problems.push_back("missing tensor: " + name);
        if (!problems.empty()) {
            std::string msg = "pretrained weights do not match " + to_string(cfg.backbone) + ":";
            for (const auto& p : problems) msg += "\n  " + p;
            throw DataError(msg);
        }

        torch::NoGradGuard no_grad;
        auto params = net->named_parameters();
        auto buffers = net->named_buffers();
        for (auto& [name, tensor] : loaded) {
            if (auto* p = params.find(name)) p->copy_(tensor);
            else if (auto* b = buffers.find(name)) b->copy_(tensor);
        }
    }
    return model;
}

double one_cycle_lr(std::int64_t step, std::int64_t total_steps, double initial_lr,
                    double max_lr) {
    if (total_steps < 1) throw UsageError("one-cycle schedule needs at least one step");
    if (step < 0 || step >= total_steps)
        throw UsageError("one-cycle step " + std::to_string(step) + " outside [0, " +
                         std::to_string(total_steps) + ")");
    if (max_lr <= initial_lr) throw UsageError("one-cycle needs max_lr > initial_lr");

    const auto peak = static_cast<std::int64_t>(std::llround(0.3 * static_cast<double>(total_steps)));
    const double final_lr = initial_lr / 100.0;
    if (step <= peak) {
        if (peak == 0) return max_lr;
        const double t = static_cast<double>(step) / static_cast<double>(peak);
        return initial_lr + (max_lr - initial_lr) * 0.5 * (1.0 - std::cos(kPi * t));
    }
    const auto tail = total_steps - 1 - peak;
    if (tail == 0) return final_lr;
    const double t = static_cast<double>(step - peak) / static_cast<double>(tail);
    return final_lr + (max_lr - final_lr) * 0.5 * (1.0 + std::cos(kPi * t));
}

torch::Tensor predict(Model& model, const torch::Tensor& batch) {
    if (batch.dim() != 4)
        throw UsageError("predict expects a (N, C, H, W) batch");
    const double lo = batch.min().item<double>();
    const double hi = batch.max().item<double>();
    if (lo < -20.0 || hi > 20.0)
        std::cerr << "warning: input range [" << lo << ", " << hi
                  << "] looks unnormalized\n";
    torch::NoGradGuard no_grad;
    const bool was_training = model.net()->is_training();
    model.net()->eval();
    auto probs = torch::softmax(model.forward(batch), 1);
    if (was_training) model.net()->train();
    return probs;
}

std::vector<dataset::Label> classify(const torch::Tensor& probabilities) {
    if (probabilities.dim() != 2 || probabilities.size(1) != 2)
        throw UsageError("classify expects (N, 2) probabilities");
    auto acc = probabilities.accessor<float, 2>();
    std::vector<dataset::Label> out;
    out.reserve(static_cast<std::size_t>(acc.size(0)));
    for (std::int64_t i = 0; i < acc.size(0); ++i)
        out.push_back(acc[i][1] > acc[i][0] ? dataset::Label::positive
                                            : dataset::Label::negative);
    return out;
}

TrainHistory train(Model& model, const dataset::Manifest& train_manifest,
                   const dataset::Manifest& val_manifest, const TrainConfig& cfg,
                   const transforms::NormStats& stats,
                   const transforms::AugmentPolicy& augment) {
    cfg.validate();
    if (!model.defined()) throw UsageError("train called on an empty model");
    if (train_manifest.records.empty()) throw UsageError("training manifest is empty");
    if (val_manifest.records.empty()) throw UsageError("validation manifest is empty");

    torch::manual_seed(static_cast<std::int64_t>(cfg.seed));
    const std::int64_t size = model.config().resolved_input_size();
    const auto train_images = load_resized(train_manifest, size);
    const auto val_images = load_resized(val_manifest, size);

    const auto n = static_cast<std::int64_t>(train_images.size());
    const std::int64_t steps_per_epoch = (n + cfg.batch_size - 1) / cfg.batch_size;
    const std::int64_t phase2_total = cfg.main_epochs * steps_per_epoch;

    TrainHistory history;
    history.phase2_lr_log.reserve(static_cast<std::size_t>(phase2_total));

    // Phase 1: head only, backbone completely static (eval mode keeps the
    // batch-norm running stats untouched as well).
    for (const auto& p : model.backbone_parameters()) p.set_requires_grad(false);
    for (const auto& p : model.head_parameters()) p.set_requires_grad(true);
    auto optimizer = std::make_unique<torch::optim::Adam>(
        make_adam(model.head_parameters(), cfg, cfg.initial_lr));

    const std::int64_t total_epochs = cfg.freeze_epochs + cfg.main_epochs;
    std::int64_t phase2_step = 0;
    for (std::int64_t epoch = 0; epoch < total_epochs; ++epoch) {
        const bool frozen = phase_for_epoch(cfg, epoch) == Phase::frozen;
        if (!frozen && epoch == cfg.freeze_epochs) {
            for (const auto& p : model.all_parameters()) p.set_requires_grad(true);
            // Fresh optimizer state: the head-only moments do not carry over.
            optimizer = std::make_unique<torch::optim::Adam>(
                make_adam(model.all_parameters(), cfg, cfg.initial_lr));
        }
        if (frozen) model.net()->eval();
        else model.net()->train();

        std::vector<std::int64_t> order(static_cast<std::size_t>(n));
        std::iota(order.begin(), order.end(), 0);
        auto shuffle_rng = rng::CounterRng::keyed(
            {cfg.seed, static_cast<std::uint64_t>(epoch),
             static_cast<std::uint64_t>(rng::StreamTag::kStreamShuffle)});
        std::shuffle(order.begin(), order.end(), shuffle_rng);

        double loss_sum = 0.0;
        double epoch_lr = cfg.initial_lr;
        for (std::int64_t step = 0; step < steps_per_epoch; ++step) {
            const std::int64_t begin = step * cfg.batch_size;
            const std::int64_t end = std::min(n, begin + cfg.batch_size);

            std::vector<torch::Tensor> chunk;
            std::vector<std::int64_t> raw_labels;
            chunk.reserve(static_cast<std::size_t>(end - begin));
            for (std::int64_t i = begin; i < end; ++i) {
                const std::int64_t idx = order[static_cast<std::size_t>(i)];
                auto aug_rng = rng::CounterRng::keyed(
                    {cfg.seed, static_cast<std::uint64_t>(epoch), static_cast<std::uint64_t>(idx),
                     static_cast<std::uint64_t>(rng::StreamTag::kStreamAugment)});
                auto img = transforms::augment_classifier(
                    train_images[static_cast<std::size_t>(idx)], augment, aug_rng);
                chunk.push_back(transforms::normalize(img, stats));
                raw_labels.push_back(static_cast<std::int64_t>(
                    train_manifest.records[static_cast<std::size_t>(idx)].label));
            }
            auto batch = torch::stack(chunk);
            auto labels = torch::tensor(raw_labels, torch::kInt64);

            double lr = cfg.initial_lr;
            if (!frozen) {
                lr = one_cycle_lr(phase2_step, phase2_total, cfg.initial_lr, cfg.max_lr);
                set_adam_lr(*optimizer, lr);
                history.phase2_lr_log.push_back(lr);
                ++phase2_step;
            }
            epoch_lr = lr;

            auto logits = model.forward(batch);
            auto loss = torch::nn::functional::cross_entropy(logits, labels);
            const double loss_value = loss.item<double>();
            if (!std::isfinite(loss_value))
                throw NumericError("non-finite training loss at epoch " + std::to_string(epoch) +
                                   " step " + std::to_string(step) + " (lr " +
                                   std::to_string(lr) + ")");
            optimizer->zero_grad();
            loss.backward();
            optimizer->step();
            loss_sum += loss_value;
        }

        auto val = evaluate_split(model, val_images, val_manifest, stats, cfg.batch_size);
        EpochStats e;
        e.train_loss = loss_sum / static_cast<double>(steps_per_epoch);
        e.val_loss = val.loss;
        e.val_accuracy = val.accuracy;
        e.lr_end = epoch_lr;
        history.epochs.push_back(e);
    }
    model.net()->eval();
    return history;
}

std::vector<dataset::Label> predict_manifest(Model& model, const dataset::Manifest& manifest,
                                             const transforms::NormStats& stats,
                                             std::int64_t batch_size) {
    if (batch_size < 1) throw UsageError("batch_size must be positive");
    const std::int64_t size = model.config().resolved_input_size();
    std::vector<dataset::Label> out;
    out.reserve(manifest.records.size());
    const std::size_t n = manifest.records.size();
    for (std::size_t begin = 0; begin < n; begin += static_cast<std::size_t>(batch_size)) {
        const std::size_t end = std::min(n, begin + static_cast<std::size_t>(batch_size));
        std::vector<torch::Tensor> chunk;
        chunk.reserve(end - begin);
        for (std::size_t i = begin; i < end; ++i) {
            auto img = transforms::resize(imageio::load_image(manifest.records[i].path), size, size);
            chunk.push_back(transforms::normalize(img, stats));
        }
        auto probs = predict(model, torch::stack(chunk));
        auto labels = classify(probs);
        out.insert(out.end(), labels.begin(), labels.end());
    }
    return out;
}

void save_checkpoint(Model& model, const TrainConfig& train_cfg,
                     const transforms::NormStats& stats, const TrainHistory& history,
                     const std::filesystem::path& bin_path) {
    if (!model.defined()) throw UsageError("cannot checkpoint an empty model");
    store::save_tensors(model.state(), bin_path);

    json sidecar;
    sidecar["config"]["classifier"] = cc_to_json(model.config());
    sidecar["config"]["train"] = json::parse(train_cfg.canonical_json());
    sidecar["norm_stats"] = json::parse(stats.to_json());
    sidecar["history"] = history_to_json(history);

    store::write_text_atomic(std::filesystem::path(bin_path.string() + ".json"),
                             sidecar.dump(2) + "\n");
}

LoadedCheckpoint load_checkpoint(const std::filesystem::path& bin_path) {
    const auto json_path = std::filesystem::path(bin_path.string() + ".json");
    if (!std::filesystem::exists(bin_path))
        throw IoError("checkpoint not found: " + bin_path.string());
    if (!std::filesystem::exists(json_path))
        throw IoError("checkpoint sidecar not found: " + json_path.string());

    std::ifstream in(json_path, std::ios::binary);
    json sidecar;
    try {
        sidecar = json::parse(in);
    } catch (const json::parse_error& e) {
        throw DataError("malformed checkpoint sidecar " + json_path.string() + ": " + e.what());
    }

    LoadedCheckpoint out;
    try {
        ClassifierConfig model_cfg = cc_from_json(sidecar.at("config").at("classifier"));
        model_cfg.pretrained_weights.reset();  // weights come from the checkpoint itself
        out.model = build_model(model_cfg);
        out.train_cfg = tc_from_json(sidecar.at("config").at("train"));
        out.stats = transforms::NormStats::from_json(sidecar.at("norm_stats").dump());
        out.history = history_from_json(sidecar.at("history"));
    } catch (const json::exception& e) {
        throw DataError("malformed checkpoint sidecar " + json_path.string() + ": " + e.what());
    }

    store::load_state_dict(*out.model.net(), store::load_tensors(bin_path));
    out.model.net()->eval();
    return out;
}

}  // namespace synthaug::classifier
