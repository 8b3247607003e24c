#ifndef SYNTHAUG_DATASET_HPP
#define SYNTHAUG_DATASET_HPP

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "synthaug/common.hpp"

namespace synthaug::dataset {

// Class index encoding is fixed here: negative = 0, positive = 1.
enum class Label : int { negative = 0, positive = 1 };
enum class Source : int { real = 0, synthetic = 1 };
enum class View : int { PA = 0, AP = 1, unknown = 2 };
enum class Split : int { train = 0, validation = 1, test = 2 };

std::string to_string(Label l);
std::string to_string(Source s);
std::string to_string(View v);
std::string to_string(Split s);
Label parse_label(const std::string& s);    // throws DataError on unknown
Source parse_source(const std::string& s);  // throws DataError on unknown
View parse_view(const std::string& s);      // throws DataError on unknown
Split parse_split(const std::string& s);    // throws UsageError on unknown

inline int label_index(Label l) { return static_cast<int>(l); }

struct ImageRecord {
    std::string record_id;
    std::string patient_id;           // defaults to record_id when absent
    std::filesystem::path path;       // resolved against the manifest's directory
    Label label = Label::negative;
    Source source = Source::real;
    View view = View::unknown;

    bool operator==(const ImageRecord&) const = default;
};

struct ClassCounts {
    std::int64_t positive = 0;
    std::int64_t negative = 0;

    std::int64_t total() const { return positive + negative; }
    ClassCounts operator+(const ClassCounts& o) const {
        return {positive + o.positive, negative + o.negative};
    }
    bool operator==(const ClassCounts&) const = default;
};

// Immutable after load; safe to share across readers.
struct Manifest {
    std::vector<ImageRecord> records;
    Split split = Split::train;
    std::string name;

    std::size_t size() const { return records.size(); }
    bool empty() const { return records.empty(); }
};

// CSV with header `record_id,patient_id,path,label,source,view`, UTF-8,
// fields must not contain commas. Relative paths resolve against the
// manifest's directory. Image files are not opened here.
Manifest load_manifest(const std::filesystem::path& csv_path, Split split);

// Inverse of load_manifest: image paths are written relative to the output
// CSV's directory when possible, absolute otherwise.
void save_manifest(const Manifest& m, const std::filesystem::path& csv_path);

ClassCounts class_counts(const Manifest& m);

// Patient ids present in both manifests, sorted, deduplicated. Empty means
// the split pair is patient-disjoint.
std::vector<std::string> check_disjoint(const Manifest& a, const Manifest& b);

// Concatenates a real train manifest with a synthetic train manifest.
// Synthetic record and patient ids get a "syn:" namespace prefix unless they
// already carry one.
Manifest merge(const Manifest& real, const Manifest& synthetic);

// Records of one class, order preserved. Used to build per-class GAN corpora.
Manifest filter_by_label(const Manifest& m, Label label);

}  // namespace synthaug::dataset

#endif
