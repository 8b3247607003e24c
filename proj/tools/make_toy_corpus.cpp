// Generates the procedural two-class corpus used by the examples in the
// README and by the end-to-end tests.
#include <iostream>

#include <CLI11.hpp>

#include "synthaug/common.hpp"
#include "synthaug/toydata.hpp"

int main(int argc, char** argv) {
    using namespace synthaug;

    CLI::App app{"write a small procedural two-class image corpus with manifests"};
    toydata::ToySpec spec;
    std::string root;
    app.add_option("--out", root, "corpus root directory")->required();
    app.add_option("--size", spec.image_size, "square image side");
    app.add_option("--seed", spec.seed, "generation seed");
    app.add_option("--train-negative", spec.train_negative, "");
    app.add_option("--train-positive", spec.train_positive, "");
    app.add_option("--val-negative", spec.val_negative, "");
    app.add_option("--val-positive", spec.val_positive, "");
    app.add_option("--test-negative", spec.test_negative, "");
    app.add_option("--test-positive", spec.test_positive, "");
    app.add_option("--blob-lo", spec.blob_lo, "min positive blob amplitude");
    app.add_option("--blob-hi", spec.blob_hi, "max positive blob amplitude");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return static_cast<int>(ErrorCode::usage);
    }

    try {
        spec.root = root;
        auto corpus = toydata::make_toy_corpus(spec);
        std::cerr << "wrote " << corpus.train.size() << " train, " << corpus.val.size()
                  << " val, " << corpus.test.size() << " test images under " << root << "\n";
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return e.exit_code();
    }
    return 0;
}
