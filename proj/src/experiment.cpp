#include "synthaug/experiment.hpp"

#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <vector>

#include <json.hpp>
#include <torch/torch.h>

#include "synthaug/common.hpp"
#include "synthaug/dataset.hpp"
#include "synthaug/rng.hpp"
#include "synthaug/synthesis.hpp"
#include "synthaug/tensor_store.hpp"

namespace synthaug::experiment {

using json = nlohmann::ordered_json;

namespace {

std::string read_text(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

std::string hex64(std::uint64_t v) {
    char buf[19];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

void emit_event(const std::string& event, const std::string& experiment,
                const std::string& stage, std::uint64_t hash = 0) {
    json j;
    j["event"] = event;
    j["experiment"] = experiment;
    if (!stage.empty()) j["stage"] = stage;
    if (hash != 0) j["hash"] = hex64(hash);
    std::cout << j.dump() << "\n" << std::flush;
}

// Linear chain of stages. Each stage folds its own inputs into the running
// hash, so a change anywhere invalidates everything downstream of it.
class StageLedger {
public:
    StageLedger(std::filesystem::path dir, std::string experiment, bool resume)
        : dir_(std::move(dir)), experiment_(std::move(experiment)), resume_(resume) {}

    std::uint64_t run(const std::string& name, const std::string& inputs,
                      const std::vector<std::filesystem::path>& outputs,
                      const std::function<void()>& body,
                      const std::function<bool()>& outputs_ok = nullptr) {
        chain_ = rng::fnv1a(inputs, rng::fnv1a(name, chain_));
        const auto marker = dir_ / (".done_" + name);

        const auto outputs_present = [&] {
            if (outputs_ok) return outputs_ok();
            for (const auto& p : outputs)
                if (!std::filesystem::exists(p)) return false;
            return true;
        };

        if (resume_ && std::filesystem::exists(marker)) {
            std::string stored = read_text(marker);
            if (!stored.empty() && stored.back() == '\n') stored.pop_back();
            if (stored == hex64(chain_) && outputs_present()) {
                emit_event("stage_skipped", experiment_, name, chain_);
                return chain_;
            }
        }

        emit_event("stage_start", experiment_, name);
        body();
        store::write_text_atomic(marker, hex64(chain_) + "\n");
        emit_event("stage_done", experiment_, name, chain_);
        return chain_;
    }

private:
    std::filesystem::path dir_;
    std::string experiment_;
    bool resume_;
    std::uint64_t chain_ = 0xcbf29ce484222325ULL;
};

transforms::AugmentPolicy augment_from_json(const json& j) {
    transforms::AugmentPolicy p;
    p.hflip_probability = j.value("hflip_probability", p.hflip_probability);
    p.rotation_limit_degrees = j.value("rotation_limit_degrees", p.rotation_limit_degrees);
    return p;
}

std::filesystem::path resolve(const std::filesystem::path& base,
                              const std::filesystem::path& p) {
    return p.is_absolute() ? p : base / p;
}

void require_disjoint(const dataset::Manifest& a, const dataset::Manifest& b) {
    auto shared = dataset::check_disjoint(a, b);
    if (shared.empty()) return;
    std::string msg = "patient overlap between " + a.name + " and " + b.name + ":";
    for (std::size_t i = 0; i < shared.size() && i < 5; ++i) msg += " " + shared[i];
    if (shared.size() > 5) msg += " (+" + std::to_string(shared.size() - 5) + " more)";
    throw DataError(msg);
}

}  // namespace

ExperimentConfig load_experiment_config(const std::filesystem::path& path) {
    json j;
    try {
        std::ifstream in(path, std::ios::binary);
        if (!in) throw IoError("cannot open experiment config: " + path.string());
        j = json::parse(in);
    } catch (const json::parse_error& e) {
        throw UsageError("malformed experiment config " + path.string() + ": " + e.what());
    }

    const auto base = path.has_parent_path() ? path.parent_path() : std::filesystem::path(".");
    ExperimentConfig cfg;
    try {
        cfg.name = j.value("name", cfg.name);
        cfg.seed = j.value("seed", cfg.seed);
        cfg.threads = j.value("threads", cfg.threads);
        if (!j.contains("out_dir"))
            throw UsageError("experiment config needs an out_dir");
        cfg.out_dir = resolve(base, j["out_dir"].get<std::string>());

        const auto& data = j.at("data");
        cfg.data.train = resolve(base, data.at("train").get<std::string>());
        cfg.data.val = resolve(base, data.at("val").get<std::string>());
        cfg.data.test = resolve(base, data.at("test").get<std::string>());

        if (j.contains("classifier"))
            cfg.model = classifier::classifier_config_from_json(j["classifier"].dump());
        if (j.contains("train"))
            cfg.train = classifier::train_config_from_json(j["train"].dump());
        if (j.contains("augment")) cfg.augment = augment_from_json(j["augment"]);
        if (j.contains("gan")) cfg.gan = gan::gan_config_from_json(j["gan"].dump());
        if (j.contains("synthesis")) {
            cfg.synth_per_class = j["synthesis"].value("per_class", cfg.synth_per_class);
            cfg.synth_grayscale = j["synthesis"].value("grayscale", cfg.synth_grayscale);
        }

        // Arms must be identical apart from their data; a divergent override
        // would silently invalidate the comparison, so it is refused.
        for (const char* arm : {"train_a", "train_b"}) {
            if (!j.contains(arm)) continue;
            auto override_cfg = classifier::train_config_from_json(j[arm].dump());
            if (override_cfg.canonical_json() != cfg.train.canonical_json())
                throw UsageError(std::string(arm) +
                                 " differs from the shared train section; the two arms may "
                                 "differ only in training data");
        }
    } catch (const json::exception& e) {
        throw UsageError("malformed experiment config " + path.string() + ": " + e.what());
    }

    if (cfg.synth_per_class < 1) throw UsageError("synthesis.per_class must be positive");
    if (cfg.threads < 1) throw UsageError("threads must be positive");
    cfg.train.validate();
    cfg.gan.validate();
    return cfg;
}

RunOutcome run_experiment(const ExperimentConfig& cfg, const RunOptions& opts) {
    torch::set_num_threads(cfg.threads);
    const std::uint64_t seed = opts.seed_override.value_or(cfg.seed);

    std::error_code ec;
    std::filesystem::create_directories(cfg.out_dir, ec);
    if (ec) throw IoError("cannot create " + cfg.out_dir.string() + ": " + ec.message());

    auto train_m = dataset::load_manifest(cfg.data.train, dataset::Split::train);
    auto val_m = dataset::load_manifest(cfg.data.val, dataset::Split::validation);
    auto test_m = dataset::load_manifest(cfg.data.test, dataset::Split::test);
    require_disjoint(train_m, val_m);
    require_disjoint(train_m, test_m);
    require_disjoint(val_m, test_m);
    const auto counts = dataset::class_counts(train_m);
    if (counts.positive == 0 || counts.negative == 0)
        throw DataError("training split must contain both classes (got " +
                        std::to_string(counts.positive) + " positive, " +
                        std::to_string(counts.negative) + " negative)");

    // Everything that should invalidate downstream stages on change is
    // folded into the hash chain: manifest contents, per-stage configs and
    // the derived seeds.
    const std::uint64_t h_train = rng::fnv1a(read_text(cfg.data.train));
    const std::uint64_t h_val = rng::fnv1a(read_text(cfg.data.val));
    const std::uint64_t h_test = rng::fnv1a(read_text(cfg.data.test));

    const std::uint64_t seed_gan_neg = rng::derive_key({seed, rng::fnv1a("gan-negative")});
    const std::uint64_t seed_gan_pos = rng::derive_key({seed, rng::fnv1a("gan-positive")});
    const std::uint64_t seed_synth = rng::derive_key({seed, rng::fnv1a("synthesize")});
    const std::uint64_t seed_model = rng::derive_key({seed, rng::fnv1a("model-init")});
    const std::uint64_t seed_train = rng::derive_key({seed, rng::fnv1a("train-classifier")});

    // Both arms run the same schedule from the same initialization seed; the
    // only difference is the records they see.
    classifier::TrainConfig arm_cfg = cfg.train;
    arm_cfg.seed = seed_train;
    const std::uint64_t arm_hash = rng::fnv1a(arm_cfg.canonical_json());
    emit_event("arm_config", cfg.name, "", arm_hash);

    const auto stats_path = cfg.out_dir / "stats" / "norm_stats.json";
    const auto gan_dir = cfg.out_dir / "gan";
    const auto synth_dir = cfg.out_dir / "synthetic";
    const auto synth_manifest_path = synth_dir / "manifest.csv";
    const auto arm_a_dir = cfg.out_dir / "arm_a";
    const auto arm_b_dir = cfg.out_dir / "arm_b";
    const auto compare_path = cfg.out_dir / "compare.json";

    StageLedger ledger(cfg.out_dir, cfg.name, opts.resume);

    const std::string size_tag = std::to_string(cfg.model.resolved_input_size());
    ledger.run("stats", hex64(h_train) + ":" + size_tag, {stats_path}, [&] {
        auto stats = transforms::compute_norm_stats(train_m, cfg.model.resolved_input_size());
        store::write_text_atomic(stats_path, stats.to_json());
    });
    auto stats = transforms::NormStats::from_json(read_text(stats_path));

    const auto gan_stage = [&](dataset::Label label, std::uint64_t gan_seed) {
        gan::GanConfig g = cfg.gan;
        g.seed = gan_seed;
        const auto final_bin = gan_dir / ("gan_" + dataset::to_string(label) + "_final.bin");
        ledger.run("gan_" + dataset::to_string(label), g.canonical_json() + ":" + hex64(h_train),
                   {final_bin, std::filesystem::path(final_bin.string() + ".json")}, [&] {
                       auto subset = dataset::filter_by_label(train_m, label);
                       std::filesystem::create_directories(gan_dir);
                       gan::train_gan(subset, g, gan_dir);
                   });
        return final_bin;
    };
    const auto gan_neg_bin = gan_stage(dataset::Label::negative, seed_gan_neg);
    const auto gan_pos_bin = gan_stage(dataset::Label::positive, seed_gan_pos);

    synthesis::SynthesisJob job;
    job.out_dir = synth_dir;
    job.per_class = cfg.synth_per_class;
    job.seed = seed_synth;
    job.grayscale = cfg.synth_grayscale;
    const auto synth_outputs_ok = [&] {
        if (!std::filesystem::exists(synth_manifest_path)) return false;
        try {
            auto m = dataset::load_manifest(synth_manifest_path, dataset::Split::train);
            if (static_cast<std::int64_t>(m.size()) != 2 * cfg.synth_per_class) return false;
            for (const auto& rec : m.records)
                if (!std::filesystem::exists(rec.path)) return false;
            return true;
        } catch (const Error&) {
            return false;
        }
    };
    ledger.run("synthesize",
               std::to_string(cfg.synth_per_class) + ":" + (cfg.synth_grayscale ? "g" : "c") +
                   ":" + hex64(seed_synth),
               {synth_manifest_path},
               [&] {
                   auto pos = gan::load_gan_checkpoint(gan_pos_bin);
                   auto neg = gan::load_gan_checkpoint(gan_neg_bin);
                   synthesis::run_job(pos, neg, job);
               },
               synth_outputs_ok);

    const auto train_stage = [&](const std::string& stage, const std::filesystem::path& arm_dir,
                                 const std::function<dataset::Manifest()>& make_train) {
        const auto bin = arm_dir / "classifier.bin";
        ledger.run(stage,
                   arm_cfg.canonical_json() + ":" + classifier::classifier_config_json(cfg.model) +
                       ":" + hex64(h_val) + ":" + hex64(seed_model),
                   {bin, std::filesystem::path(bin.string() + ".json")}, [&] {
                       torch::manual_seed(static_cast<std::int64_t>(seed_model));
                       auto model = classifier::build_model(cfg.model);
                       auto history =
                           classifier::train(model, make_train(), val_m, arm_cfg, stats, cfg.augment);
                       std::filesystem::create_directories(arm_dir);
                       classifier::save_checkpoint(model, arm_cfg, stats, history, bin);
                   });
        return bin;
    };
    const auto arm_a_bin = train_stage("train_arm_a", arm_a_dir, [&] { return train_m; });
    const auto arm_b_bin = train_stage("train_arm_b", arm_b_dir, [&] {
        auto synth_m = dataset::load_manifest(synth_manifest_path, dataset::Split::train);
        return dataset::merge(train_m, synth_m);
    });

    const auto eval_stage = [&](const std::string& stage, const std::filesystem::path& arm_dir,
                                const std::filesystem::path& bin, const std::string& model_name) {
        const auto report_path = arm_dir / "eval.json";
        const auto predictions_path = arm_dir / "predictions.csv";
        ledger.run(stage, hex64(h_test) + ":" + model_name, {report_path, predictions_path}, [&] {
            auto loaded = classifier::load_checkpoint(bin);
            auto predictions = classifier::predict_manifest(loaded.model, test_m, loaded.stats,
                                                            cfg.train.batch_size);
            std::vector<metrics::PredictionRow> rows;
            std::vector<dataset::Label> truths;
            rows.reserve(predictions.size());
            truths.reserve(predictions.size());
            for (std::size_t i = 0; i < predictions.size(); ++i) {
                rows.push_back({test_m.records[i].record_id, test_m.records[i].label,
                                predictions[i]});
                truths.push_back(test_m.records[i].label);
            }
            metrics::save_predictions(rows, predictions_path);
            auto rep = metrics::report(metrics::confusion(predictions, truths), model_name,
                                       test_m.name);
            store::write_text_atomic(report_path, metrics::report_to_json(rep));
            metrics::render_table(std::cerr, {rep});
        });
        return report_path;
    };
    const auto eval_a_path = eval_stage("eval_arm_a", arm_a_dir, arm_a_bin, "real-only");
    const auto eval_b_path = eval_stage("eval_arm_b", arm_b_dir, arm_b_bin, "real-plus-synthetic");

    RunOutcome outcome;
    outcome.arm_a = metrics::report_from_json(read_text(eval_a_path));
    outcome.arm_b = metrics::report_from_json(read_text(eval_b_path));
    ledger.run("compare", "", {compare_path}, [&] {
        auto delta = metrics::compare(outcome.arm_a, outcome.arm_b);
        store::write_text_atomic(compare_path, metrics::delta_to_json(delta));
        metrics::render_delta(std::cerr, delta);
    });
    outcome.delta = metrics::compare(outcome.arm_a, outcome.arm_b);
    emit_event("experiment_done", cfg.name, "");
    return outcome;
}

}  // namespace synthaug::experiment
