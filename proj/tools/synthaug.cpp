// Command-line front end: experiment orchestration plus direct access to the
// individual pipeline stages.
#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <torch/torch.h>

#include "synthaug/classifier.hpp"
#include "synthaug/common.hpp"
#include "synthaug/dataset.hpp"
#include "synthaug/experiment.hpp"
#include "synthaug/gan.hpp"
#include "synthaug/metrics.hpp"
#include "synthaug/synthesis.hpp"
#include "synthaug/tensor_store.hpp"
#include "synthaug/transforms.hpp"

namespace {

using namespace synthaug;

std::optional<std::uint64_t> env_seed() {
    const char* raw = std::getenv("SYNTHAUG_SEED");
    if (!raw || !*raw) return std::nullopt;
    try {
        std::size_t used = 0;
        const auto value = std::stoull(raw, &used);
        if (used != std::string(raw).size())
            throw UsageError(std::string("SYNTHAUG_SEED is not a number: ") + raw);
        return value;
    } catch (const std::logic_error&) {
        throw UsageError(std::string("SYNTHAUG_SEED is not a number: ") + raw);
    }
}

// Precedence: --seed flag, then SYNTHAUG_SEED, then the per-command default.
std::optional<std::uint64_t> pick_seed(const CLI::Option* flag, std::uint64_t flag_value) {
    if (flag->count() > 0) return flag_value;
    return env_seed();
}

std::string read_text(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

void write_or_print(const std::string& text, const std::string& out_path) {
    if (out_path.empty())
        std::cout << text;
    else
        store::write_text_atomic(out_path, text);
}

int run_command(const std::string& config_path, bool resume,
                std::optional<std::uint64_t> seed_override) {
    auto cfg = experiment::load_experiment_config(config_path);
    experiment::RunOptions opts;
    opts.resume = resume;
    opts.seed_override = seed_override;
    experiment::run_experiment(cfg, opts);
    return 0;
}

int prepare_data_command(const std::string& train_csv, const std::string& val_csv,
                         const std::string& test_csv, std::int64_t input_size,
                         const std::string& out_path) {
    auto train_m = dataset::load_manifest(train_csv, dataset::Split::train);
    auto val_m = dataset::load_manifest(val_csv, dataset::Split::validation);
    auto test_m = dataset::load_manifest(test_csv, dataset::Split::test);

    struct Pair {
        const dataset::Manifest* a;
        const dataset::Manifest* b;
    };
    for (const auto& [a, b] : {Pair{&train_m, &val_m}, Pair{&train_m, &test_m},
                               Pair{&val_m, &test_m}}) {
        auto shared = dataset::check_disjoint(*a, *b);
        if (!shared.empty())
            throw DataError("patient overlap between " + a->name + " and " + b->name + ": " +
                            shared.front() +
                            (shared.size() > 1
                                 ? " (+" + std::to_string(shared.size() - 1) + " more)"
                                 : ""));
    }

    for (const auto* m : {&train_m, &val_m, &test_m}) {
        const auto counts = dataset::class_counts(*m);
        std::cerr << m->name << ": " << counts.total() << " records (" << counts.positive
                  << " positive, " << counts.negative << " negative)\n";
    }

    auto stats = transforms::compute_norm_stats(train_m, input_size);
    write_or_print(stats.to_json(), out_path);
    return 0;
}

int train_gan_command(const std::string& manifest_csv, const std::string& label_str,
                      const std::string& config_path, const std::string& out_dir,
                      std::optional<std::uint64_t> seed) {
    auto manifest = dataset::load_manifest(manifest_csv, dataset::Split::train);
    if (!label_str.empty())
        manifest = dataset::filter_by_label(manifest, dataset::parse_label(label_str));

    gan::GanConfig cfg;
    if (!config_path.empty()) cfg = gan::gan_config_from_json(read_text(config_path));
    if (seed) cfg.seed = *seed;
    gan::train_gan(manifest, cfg, std::filesystem::path(out_dir));
    return 0;
}

int synthesize_command(const std::string& positive_ckpt, const std::string& negative_ckpt,
                       const std::string& out_dir, std::int64_t per_class, bool color,
                       std::optional<std::uint64_t> seed) {
    auto positive = gan::load_gan_checkpoint(positive_ckpt);
    auto negative = gan::load_gan_checkpoint(negative_ckpt);
    synthesis::SynthesisJob job;
    job.out_dir = out_dir;
    job.per_class = per_class;
    job.seed = seed.value_or(0);
    job.grayscale = !color;
    auto result = synthesis::run_job(positive, negative, job);
    std::cerr << "synthesized " << result.written << " new, kept " << result.reused
              << " existing\n";
    return 0;
}

int train_classifier_command(const std::string& train_csv, const std::string& val_csv,
                             const std::string& stats_path, const std::string& out_bin,
                             const std::string& config_path,
                             const classifier::TrainConfig& overrides,
                             const std::vector<std::string>& overridden,
                             const std::string& backbone, std::int64_t input_size,
                             std::optional<std::uint64_t> seed) {
    auto train_m = dataset::load_manifest(train_csv, dataset::Split::train);
    auto val_m = dataset::load_manifest(val_csv, dataset::Split::validation);
    auto stats = transforms::NormStats::from_json(read_text(stats_path));

    classifier::TrainConfig cfg;
    if (!config_path.empty()) cfg = classifier::train_config_from_json(read_text(config_path));
    for (const auto& name : overridden) {
        if (name == "batch-size") cfg.batch_size = overrides.batch_size;
        else if (name == "initial-lr") cfg.initial_lr = overrides.initial_lr;
        else if (name == "max-lr") cfg.max_lr = overrides.max_lr;
        else if (name == "freeze-epochs") cfg.freeze_epochs = overrides.freeze_epochs;
        else if (name == "main-epochs") cfg.main_epochs = overrides.main_epochs;
    }
    if (seed) cfg.seed = *seed;

    classifier::ClassifierConfig model_cfg;
    if (!backbone.empty()) model_cfg.backbone = classifier::parse_backbone(backbone);
    model_cfg.input_size = input_size;

    torch::manual_seed(static_cast<std::int64_t>(cfg.seed));
    auto model = classifier::build_model(model_cfg);
    auto history = classifier::train(model, train_m, val_m, cfg, stats);
    classifier::save_checkpoint(model, cfg, stats, history, out_bin);
    std::cerr << "final val accuracy " << history.epochs.back().val_accuracy << "\n";
    return 0;
}

int evaluate_command(const std::string& checkpoint, const std::string& manifest_csv,
                     const std::string& predictions_csv, const std::string& model_name,
                     const std::string& out_path) {
    metrics::EvalReport rep;
    if (!predictions_csv.empty()) {
        auto rows = metrics::load_predictions(predictions_csv);
        std::vector<dataset::Label> preds, truths;
        preds.reserve(rows.size());
        truths.reserve(rows.size());
        for (const auto& row : rows) {
            preds.push_back(row.predicted);
            truths.push_back(row.truth);
        }
        const auto name = model_name.empty() ? "predictions" : model_name;
        rep = metrics::report(metrics::confusion(preds, truths), name,
                              std::filesystem::path(predictions_csv).stem().string());
    } else {
        auto loaded = classifier::load_checkpoint(checkpoint);
        auto test_m = dataset::load_manifest(manifest_csv, dataset::Split::test);
        auto preds = classifier::predict_manifest(loaded.model, test_m, loaded.stats,
                                                  loaded.train_cfg.batch_size);
        std::vector<dataset::Label> truths;
        truths.reserve(test_m.size());
        for (const auto& rec : test_m.records) truths.push_back(rec.label);
        const auto name =
            model_name.empty() ? std::filesystem::path(checkpoint).stem().string() : model_name;
        rep = metrics::report(metrics::confusion(preds, truths), name, test_m.name);
    }
    metrics::render_table(std::cerr, {rep});
    write_or_print(metrics::report_to_json(rep), out_path);
    return 0;
}

int compare_command(const std::string& a_path, const std::string& b_path,
                    const std::string& out_path) {
    auto a = metrics::report_from_json(read_text(a_path));
    auto b = metrics::report_from_json(read_text(b_path));
    auto delta = metrics::compare(a, b);
    metrics::render_delta(std::cerr, delta);
    write_or_print(metrics::delta_to_json(delta), out_path);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"training and evaluation harness for classifier augmentation with "
                 "synthesized images"};
    app.require_subcommand(1);

    // run
    auto* run = app.add_subcommand("run", "run a full two-arm experiment from a config file");
    std::string run_config;
    bool run_resume = false;
    std::uint64_t run_seed = 0;
    run->add_option("--config", run_config, "experiment config JSON")->required();
    run->add_flag("--resume", run_resume, "skip stages whose inputs and outputs are intact");
    auto* run_seed_opt = run->add_option("--seed", run_seed, "override the config seed");

    // prepare-data
    auto* prep = app.add_subcommand("prepare-data",
                                    "check split integrity and compute train-split statistics");
    std::string prep_train, prep_val, prep_test, prep_out;
    std::int64_t prep_size = 64;
    prep->add_option("--train", prep_train, "training manifest CSV")->required();
    prep->add_option("--val", prep_val, "validation manifest CSV")->required();
    prep->add_option("--test", prep_test, "test manifest CSV")->required();
    prep->add_option("--input-size", prep_size, "side length used for statistics");
    prep->add_option("--out", prep_out, "output stats JSON (stdout when omitted)");

    // train-gan
    auto* tg = app.add_subcommand("train-gan", "train a single-class image synthesizer");
    std::string tg_manifest, tg_label, tg_config, tg_out;
    std::uint64_t tg_seed = 0;
    tg->add_option("--manifest", tg_manifest, "training manifest CSV")->required();
    tg->add_option("--label", tg_label, "restrict to one class: positive|negative");
    tg->add_option("--config", tg_config, "gan config JSON");
    tg->add_option("--out", tg_out, "checkpoint directory")->required();
    auto* tg_seed_opt = tg->add_option("--seed", tg_seed, "training seed");

    // synthesize
    auto* sy = app.add_subcommand("synthesize", "write a synthetic corpus from two checkpoints");
    std::string sy_pos, sy_neg, sy_out;
    std::int64_t sy_per_class = 64;
    bool sy_color = false;
    std::uint64_t sy_seed = 0;
    sy->add_option("--positive", sy_pos, "positive-class checkpoint")->required();
    sy->add_option("--negative", sy_neg, "negative-class checkpoint")->required();
    sy->add_option("--out", sy_out, "output directory")->required();
    sy->add_option("--per-class", sy_per_class, "images per class");
    sy->add_flag("--color", sy_color, "keep channels instead of collapsing to gray");
    auto* sy_seed_opt = sy->add_option("--seed", sy_seed, "generation seed");

    // train-classifier
    auto* tc = app.add_subcommand("train-classifier", "fine-tune the two-class classifier");
    std::string tc_train, tc_val, tc_stats, tc_out, tc_config, tc_backbone;
    std::int64_t tc_input_size = 0;
    classifier::TrainConfig tc_overrides;
    std::uint64_t tc_seed = 0;
    tc->add_option("--train", tc_train, "training manifest CSV")->required();
    tc->add_option("--val", tc_val, "validation manifest CSV")->required();
    tc->add_option("--stats", tc_stats, "normalization stats JSON")->required();
    tc->add_option("--out", tc_out, "output checkpoint path")->required();
    tc->add_option("--config", tc_config, "train config JSON");
    tc->add_option("--backbone", tc_backbone, "tiny-resnet | reference-resnet50-shape");
    tc->add_option("--input-size", tc_input_size, "square input side (0 = backbone default)");
    auto* tc_bs = tc->add_option("--batch-size", tc_overrides.batch_size, "");
    auto* tc_il = tc->add_option("--initial-lr", tc_overrides.initial_lr, "");
    auto* tc_ml = tc->add_option("--max-lr", tc_overrides.max_lr, "");
    auto* tc_fe = tc->add_option("--freeze-epochs", tc_overrides.freeze_epochs, "");
    auto* tc_me = tc->add_option("--main-epochs", tc_overrides.main_epochs, "");
    auto* tc_seed_opt = tc->add_option("--seed", tc_seed, "training seed");

    // evaluate
    auto* ev = app.add_subcommand("evaluate", "score a checkpoint or a predictions file");
    std::string ev_ckpt, ev_manifest, ev_preds, ev_model, ev_out;
    auto* ev_ckpt_opt = ev->add_option("--checkpoint", ev_ckpt, "classifier checkpoint");
    auto* ev_manifest_opt = ev->add_option("--manifest", ev_manifest, "test manifest CSV");
    auto* ev_preds_opt = ev->add_option("--predictions", ev_preds, "predictions CSV");
    ev->add_option("--model", ev_model, "model name for the report");
    ev->add_option("--out", ev_out, "output report JSON (stdout when omitted)");
    ev_ckpt_opt->excludes(ev_preds_opt);
    ev_ckpt_opt->needs(ev_manifest_opt);
    ev_manifest_opt->excludes(ev_preds_opt);

    // compare
    auto* cp = app.add_subcommand("compare", "delta table between two report files");
    std::string cp_a, cp_b, cp_out;
    cp->add_option("--a", cp_a, "baseline report JSON")->required();
    cp->add_option("--b", cp_b, "comparison report JSON")->required();
    cp->add_option("--out", cp_out, "output delta JSON (stdout when omitted)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);  // prints help, exits 0
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return static_cast<int>(ErrorCode::usage);
    }

    try {
        if (*run) return run_command(run_config, run_resume, pick_seed(run_seed_opt, run_seed));
        if (*prep) return prepare_data_command(prep_train, prep_val, prep_test, prep_size, prep_out);
        if (*tg)
            return train_gan_command(tg_manifest, tg_label, tg_config, tg_out,
                                     pick_seed(tg_seed_opt, tg_seed));
        if (*sy)
            return synthesize_command(sy_pos, sy_neg, sy_out, sy_per_class, sy_color,
                                      pick_seed(sy_seed_opt, sy_seed));
        if (*tc) {
            std::vector<std::string> overridden;
            if (tc_bs->count()) overridden.push_back("batch-size");
            if (tc_il->count()) overridden.push_back("initial-lr");
            if (tc_ml->count()) overridden.push_back("max-lr");
            if (tc_fe->count()) overridden.push_back("freeze-epochs");
            if (tc_me->count()) overridden.push_back("main-epochs");
            return train_classifier_command(tc_train, tc_val, tc_stats, tc_out, tc_config,
                                            tc_overrides, overridden, tc_backbone, tc_input_size,
                                            pick_seed(tc_seed_opt, tc_seed));
        }
        if (*ev) {
            if (ev_preds.empty() && ev_ckpt.empty())
                throw UsageError("evaluate needs --checkpoint with --manifest, or --predictions");
            return evaluate_command(ev_ckpt, ev_manifest, ev_preds, ev_model, ev_out);
        }
        if (*cp) return compare_command(cp_a, cp_b, cp_out);
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return e.exit_code();
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
