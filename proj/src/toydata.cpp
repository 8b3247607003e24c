#include "synthaug/toydata.hpp"

#include <cstdio>

#include "synthaug/common.hpp"
#include "synthaug/imageio.hpp"
#include "synthaug/rng.hpp"
#include "synthaug/transforms.hpp"

namespace synthaug::toydata {

namespace {

std::string image_name(std::int64_t index) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "img_%05lld.png", static_cast<long long>(index));
    return buf;
}

dataset::Manifest make_split(const ToySpec& spec, dataset::Split split, std::uint64_t stream,
                             std::int64_t n_negative, std::int64_t n_positive) {
    dataset::Manifest m;
    m.split = split;
    m.name = "toy-" + dataset::to_string(split);
    const auto split_dir = spec.root / dataset::to_string(split);

    std::int64_t index = 0;
    for (auto label : {dataset::Label::negative, dataset::Label::positive}) {
        const std::int64_t n = label == dataset::Label::negative ? n_negative : n_positive;
        const auto class_dir = split_dir / dataset::to_string(label);
        std::error_code ec;
        std::filesystem::create_directories(class_dir, ec);
        if (ec) throw IoError("cannot create " + class_dir.string() + ": " + ec.message());
        for (std::int64_t i = 0; i < n; ++i, ++index) {
            auto img = toy_image(label, spec.seed, stream, i, spec.image_size, spec.blob_lo,
                                 spec.blob_hi);
            const auto path = class_dir / image_name(i);
            imageio::save_png(img, path);

            dataset::ImageRecord rec;
            rec.record_id = "toy:" + dataset::to_string(split) + ":" +
                            dataset::to_string(label) + ":" + std::to_string(i);
            rec.patient_id = rec.record_id;
            rec.path = path;
            rec.label = label;
            rec.source = dataset::Source::real;
            rec.view = i % 2 == 0 ? dataset::View::PA : dataset::View::AP;
            m.records.push_back(std::move(rec));
        }
    }
    dataset::save_manifest(m, spec.root / (dataset::to_string(split) + ".csv"));
    return m;
}

}  // namespace

torch::Tensor toy_image(dataset::Label label, std::uint64_t seed, std::uint64_t stream,
                        std::int64_t index, std::int64_t size, double blob_lo,
                        double blob_hi) {
    if (size < 8) throw UsageError("toy images need size >= 8");
    if (!(blob_lo > 0.0 && blob_lo <= blob_hi && blob_hi <= 1.0))
        throw UsageError("toy blob amplitude range needs 0 < lo <= hi <= 1");
    auto rng = rng::CounterRng::keyed({seed, stream,
                                       static_cast<std::uint64_t>(dataset::label_index(label)),
                                       static_cast<std::uint64_t>(index)});

    const double base = rng.uniform(0.25, 0.45);
    const double slope = rng.uniform(0.1, 0.3);
    auto ramp = torch::linspace(0.0, slope, size, torch::kFloat32).view({size, 1}) + base;
    auto img = ramp.expand({size, size}).clone();

    auto noise = transforms::normal_tensor({size, size}, rng);
    img = img + 0.03 * noise;

    if (label == dataset::Label::positive) {
        const double cy = rng.uniform(0.25, 0.75) * static_cast<double>(size - 1);
        const double cx = rng.uniform(0.25, 0.75) * static_cast<double>(size - 1);
        const double sigma = static_cast<double>(size) / 8.0;
        // Drawn after the geometry so the default range reproduces corpora
        // generated before amplitude became configurable.
        const double amp = rng.uniform(blob_lo, blob_hi);
        auto ys = torch::arange(size, torch::kFloat32).view({size, 1});
        auto xs = torch::arange(size, torch::kFloat32).view({1, size});
        auto d2 = (ys - cy).pow(2) + (xs - cx).pow(2);
        img = img + amp * torch::exp(-d2 / (2.0 * sigma * sigma));
    }

    img = img.clamp(0.0, 1.0);
    return img.unsqueeze(0).repeat({3, 1, 1}).contiguous();
}

ToyCorpus make_toy_corpus(const ToySpec& spec) {
    if (spec.train_negative < 1 || spec.train_positive < 1 || spec.val_negative < 1 ||
        spec.val_positive < 1 || spec.test_negative < 1 || spec.test_positive < 1)
        throw UsageError("every toy split needs at least one image per class");

    ToyCorpus out;
    out.train = make_split(spec, dataset::Split::train, 101, spec.train_negative,
                           spec.train_positive);
    out.val = make_split(spec, dataset::Split::validation, 102, spec.val_negative,
                         spec.val_positive);
    out.test = make_split(spec, dataset::Split::test, 103, spec.test_negative,
                          spec.test_positive);
    return out;
}

}  // namespace synthaug::toydata
