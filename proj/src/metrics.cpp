#include "synthaug/metrics.hpp"

#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>

#include <json.hpp>

#include "synthaug/tensor_store.hpp"

namespace synthaug::metrics {

namespace {

// Zero-denominator convention: value 0, metric name appended to the
// report's degenerate list.
double ratio(std::int64_t num, std::int64_t den, const std::string& name,
             std::vector<std::string>& degenerate) {
    if (den == 0) {
        degenerate.push_back(name);
        return 0.0;
    }
    return static_cast<double>(num) / static_cast<double>(den);
}

double harmonic(double p, double r, const std::string& name,
                std::vector<std::string>& degenerate) {
    if (p + r == 0.0) {
        degenerate.push_back(name);
        return 0.0;
    }
    return 2.0 * p * r / (p + r);
}

}  // namespace

ConfusionMatrix confusion(std::span<const Label> predictions, std::span<const Label> truths) {
    if (predictions.size() != truths.size()) {
        throw UsageError("confusion: prediction/truth length mismatch (" +
                         std::to_string(predictions.size()) + " vs " +
                         std::to_string(truths.size()) + ")");
    }
    if (predictions.empty()) throw UsageError("confusion: empty inputs");

    ConfusionMatrix cm;
    for (std::size_t i = 0; i < truths.size(); ++i) {
        const bool pred_pos = predictions[i] == Label::positive;
        const bool true_pos = truths[i] == Label::positive;
        if (true_pos) {
            (pred_pos ? cm.tp : cm.fn)++;
        } else {
            (pred_pos ? cm.fp : cm.tn)++;
        }
    }
    return cm;
}

EvalReport report(const ConfusionMatrix& cm, const std::string& model_name,
                  const std::string& dataset_name) {
    if (cm.total() == 0) throw UsageError("report: empty confusion matrix");

    EvalReport r;
    r.model_name = model_name;
    r.dataset_name = dataset_name;
    r.counts = cm;
    r.accuracy = static_cast<double>(cm.tp + cm.tn) / static_cast<double>(cm.total());

    r.positive.precision = ratio(cm.tp, cm.tp + cm.fp, "precision_positive", r.degenerate);
    r.positive.recall = ratio(cm.tp, cm.tp + cm.fn, "recall_positive", r.degenerate);
    r.positive.f1 = harmonic(r.positive.precision, r.positive.recall, "f1_positive", r.degenerate);

    // Negative-class metrics with the label polarity swapped.
    r.negative.precision = ratio(cm.tn, cm.tn + cm.fn, "precision_negative", r.degenerate);
    r.negative.recall = ratio(cm.tn, cm.tn + cm.fp, "recall_negative", r.degenerate);
    r.negative.f1 = harmonic(r.negative.precision, r.negative.recall, "f1_negative", r.degenerate);
    return r;
}

DeltaReport compare(const EvalReport& a, const EvalReport& b) {
    if (a.dataset_name != b.dataset_name) {
        throw UsageError("compare: reports are for different datasets ('" + a.dataset_name +
                         "' vs '" + b.dataset_name + "')");
    }
    DeltaReport d;
    d.dataset_name = a.dataset_name;
    d.model_a = a.model_name;
    d.model_b = b.model_name;
    d.accuracy_pp = (b.accuracy - a.accuracy) * 100.0;
    d.f1_positive_pp = (b.positive.f1 - a.positive.f1) * 100.0;
    d.f1_negative_pp = (b.negative.f1 - a.negative.f1) * 100.0;
    d.precision_positive_pp = (b.positive.precision - a.positive.precision) * 100.0;
    d.precision_negative_pp = (b.negative.precision - a.negative.precision) * 100.0;
    d.recall_positive_pp = (b.positive.recall - a.positive.recall) * 100.0;
    d.recall_negative_pp = (b.negative.recall - a.negative.recall) * 100.0;
    return d;
}

std::string report_to_json(const EvalReport& r) {
    nlohmann::json j;
    j["model"] = r.model_name;
    j["dataset"] = r.dataset_name;
    j["counts"] = {{"tp", r.counts.tp}, {"fn", r.counts.fn}, {"fp", r.counts.fp}, {"tn", r.counts.tn}};
    j["accuracy"] = r.accuracy;
    j["per_class"] = {
        {"positive",
         {{"precision", r.positive.precision}, {"recall", r.positive.recall}, {"f1", r.positive.f1}}},
        {"negative",
         {{"precision", r.negative.precision}, {"recall", r.negative.recall}, {"f1", r.negative.f1}}},
    };
    j["degenerate"] = r.degenerate;
    return j.dump(2) + "\n";
}

EvalReport report_from_json(const std::string& text) {
    nlohmann::json j = nlohmann::json::parse(text, nullptr, /*allow_exceptions=*/false);
    if (j.is_discarded()) throw DataError("report_from_json: invalid JSON");
    try {
        EvalReport r;
        r.model_name = j.at("model").get<std::string>();
        r.dataset_name = j.at("dataset").get<std::string>();
        const auto& c = j.at("counts");
        r.counts = {c.at("tp").get<std::int64_t>(), c.at("fn").get<std::int64_t>(),
                    c.at("fp").get<std::int64_t>(), c.at("tn").get<std::int64_t>()};
        r.accuracy = j.at("accuracy").get<double>();
        const auto& pos = j.at("per_class").at("positive");
        const auto& neg = j.at("per_class").at("negative");
        r.positive = {pos.at("precision").get<double>(), pos.at("recall").get<double>(),
                      pos.at("f1").get<double>()};
        r.negative = {neg.at("precision").get<double>(), neg.at("recall").get<double>(),
                      neg.at("f1").get<double>()};
        r.degenerate = j.value("degenerate", std::vector<std::string>{});
        return r;
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("report_from_json: ") + e.what());
    }
}

std::string delta_to_json(const DeltaReport& d) {
    nlohmann::json j;
    j["dataset"] = d.dataset_name;
    j["model_a"] = d.model_a;
    j["model_b"] = d.model_b;
    j["delta_pp"] = {
        {"accuracy", d.accuracy_pp},
        {"f1_positive", d.f1_positive_pp},
        {"f1_negative", d.f1_negative_pp},
        {"precision_positive", d.precision_positive_pp},
        {"precision_negative", d.precision_negative_pp},
        {"recall_positive", d.recall_positive_pp},
        {"recall_negative", d.recall_negative_pp},
    };
    return j.dump(2) + "\n";
}

void render_table(std::ostream& os, const std::vector<EvalReport>& rows) {
    os << std::left << std::setw(20) << "Model" << std::right
       << std::setw(10) << "Accuracy" << std::setw(10) << "F1 pos" << std::setw(10) << "F1 neg"
       << std::setw(10) << "Prec pos" << std::setw(10) << "Prec neg"
       << std::setw(10) << "Rec pos" << std::setw(10) << "Rec neg" << "\n";
    os << std::string(90, '-') << "\n";
    os << std::fixed << std::setprecision(4);
    for (const auto& r : rows) {
        os << std::left << std::setw(20) << r.model_name << std::right
           << std::setw(10) << r.accuracy
           << std::setw(10) << r.positive.f1 << std::setw(10) << r.negative.f1
           << std::setw(10) << r.positive.precision << std::setw(10) << r.negative.precision
           << std::setw(10) << r.positive.recall << std::setw(10) << r.negative.recall << "\n";
    }
    os.unsetf(std::ios::fixed);
    os << std::setprecision(6);
}

void render_delta(std::ostream& os, const DeltaReport& d) {
    os << std::fixed << std::setprecision(2);
    os << "delta (" << d.model_b << " - " << d.model_a << ") on " << d.dataset_name
       << ", percentage points:\n"
       << "  accuracy      " << std::showpos << d.accuracy_pp << "\n"
       << "  f1 pos/neg    " << d.f1_positive_pp << " / " << d.f1_negative_pp << "\n"
       << "  prec pos/neg  " << d.precision_positive_pp << " / " << d.precision_negative_pp << "\n"
       << "  recall pos/neg " << d.recall_positive_pp << " / " << d.recall_negative_pp << "\n"
       << std::noshowpos;
    os.unsetf(std::ios::fixed);
    os << std::setprecision(6);
}

void save_predictions(const std::vector<PredictionRow>& rows,
                      const std::filesystem::path& path) {
    std::string text = "record_id,label,predicted\n";
    for (const auto& row : rows) {
        if (row.record_id.find(',') != std::string::npos)
            throw UsageError("record id contains a comma: " + row.record_id);
        text += row.record_id + "," + dataset::to_string(row.truth) + "," +
                dataset::to_string(row.predicted) + "\n";
    }
    store::write_text_atomic(path, text);
}

std::vector<PredictionRow> load_predictions(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open predictions file: " + path.string());
    std::string line;
    if (!std::getline(in, line)) throw DataError("empty predictions file: " + path.string());
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != "record_id,label,predicted")
        throw DataError("predictions " + path.string() + ": unexpected header '" + line + "'");

    std::vector<PredictionRow> out;
    std::size_t row_number = 1;
    while (std::getline(in, line)) {
        ++row_number;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto c1 = line.find(',');
        const auto c2 = c1 == std::string::npos ? std::string::npos : line.find(',', c1 + 1);
        if (c2 == std::string::npos || line.find(',', c2 + 1) != std::string::npos)
            throw DataError("predictions " + path.string() + " row " +
                            std::to_string(row_number) + ": expected 3 fields");
        PredictionRow row;
        row.record_id = line.substr(0, c1);
        row.truth = dataset::parse_label(line.substr(c1 + 1, c2 - c1 - 1));
        row.predicted = dataset::parse_label(line.substr(c2 + 1));
        out.push_back(std::move(row));
    }
    if (out.empty()) throw DataError("predictions " + path.string() + ": no rows");
    return out;
}

}  // namespace synthaug::metrics
