#ifndef SYNTHAUG_METRICS_HPP
#define SYNTHAUG_METRICS_HPP

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "synthaug/dataset.hpp"

namespace synthaug::metrics {

using dataset::Label;

// 2x2 counts with the positive class as "positive". tp+fn = ground-truth
// positives, fp+tn = ground-truth negatives.
struct ConfusionMatrix {
    std::int64_t tp = 0;
    std::int64_t fn = 0;
    std::int64_t fp = 0;
    std::int64_t tn = 0;

    std::int64_t total() const { return tp + fn + fp + tn; }
    bool operator==(const ConfusionMatrix&) const = default;
};

struct PerClassMetrics {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
};

// Stored at full precision; rounding happens only when rendering tables.
// `degenerate` names metrics whose denominator was zero (value forced to 0).
struct EvalReport {
    std::string model_name;
    std::string dataset_name;
    ConfusionMatrix counts;
    double accuracy = 0.0;
    PerClassMetrics positive;
    PerClassMetrics negative;
    std::vector<std::string> degenerate;
};

// Signed differences b - a, in percentage points.
struct DeltaReport {
    std::string dataset_name;
    std::string model_a;
    std::string model_b;
    double accuracy_pp = 0.0;
    double f1_positive_pp = 0.0;
    double f1_negative_pp = 0.0;
    double precision_positive_pp = 0.0;
    double precision_negative_pp = 0.0;
    double recall_positive_pp = 0.0;
    double recall_negative_pp = 0.0;
};

ConfusionMatrix confusion(std::span<const Label> predictions, std::span<const Label> truths);

EvalReport report(const ConfusionMatrix& cm, const std::string& model_name = "",
                  const std::string& dataset_name = "");

DeltaReport compare(const EvalReport& a, const EvalReport& b);

std::string report_to_json(const EvalReport& r);
EvalReport report_from_json(const std::string& text);
std::string delta_to_json(const DeltaReport& d);

// Fixed-width table, columns ordered Accuracy, F1 pos/neg, Precision
// pos/neg, Recall pos/neg; values rounded to 4 decimals.
void render_table(std::ostream& os, const std::vector<EvalReport>& rows);
void render_delta(std::ostream& os, const DeltaReport& d);

// Per-record predictions CSV with header `record_id,label,predicted`, so a
// report can be recomputed without the model that produced it.
struct PredictionRow {
    std::string record_id;
    Label truth = Label::negative;
    Label predicted = Label::negative;

    bool operator==(const PredictionRow&) const = default;
};

void save_predictions(const std::vector<PredictionRow>& rows,
                      const std::filesystem::path& path);
std::vector<PredictionRow> load_predictions(const std::filesystem::path& path);

}  // namespace synthaug::metrics

#endif
