#include "synthaug/dataset.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>
#include <unordered_set>

namespace synthaug::dataset {

namespace {

constexpr const char* kHeader = "record_id,patient_id,path,label,source,view";

std::vector<std::string> split_fields(const std::string& line) {
    std::vector<std::string> out;
    std::string field;
    std::istringstream ss(line);
    while (std::getline(ss, field, ',')) out.push_back(field);
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

std::string strip_cr(std::string s) {
    if (!s.empty() && s.back() == '\r') s.pop_back();
    return s;
}

bool has_syn_prefix(const std::string& id) { return id.rfind("syn:", 0) == 0; }

}  // namespace

std::string to_string(Label l) { return l == Label::positive ? "positive" : "negative"; }
std::string to_string(Source s) { return s == Source::real ? "real" : "synthetic"; }

std::string to_string(View v) {
    switch (v) {
        case View::PA: return "PA";
        case View::AP: return "AP";
        default: return "unknown";
    }
}

std::string to_string(Split s) {
    switch (s) {
        case Split::train: return "train";
        case Split::validation: return "validation";
        default: return "test";
    }
}

Label parse_label(const std::string& s) {
    if (s == "positive") return Label::positive;
    if (s == "negative") return Label::negative;
    throw DataError("unknown label '" + s + "'");
}

Source parse_source(const std::string& s) {
    if (s == "real") return Source::real;
    if (s == "synthetic") return Source::synthetic;
    throw DataError("unknown source '" + s + "'");
}

View parse_view(const std::string& s) {
    if (s == "PA") return View::PA;
    if (s == "AP") return View::AP;
    if (s == "unknown" || s.empty()) return View::unknown;
    throw DataError("unknown view '" + s + "'");
}

Split parse_split(const std::string& s) {
    if (s == "train") return Split::train;
    if (s == "validation") return Split::validation;
    if (s == "test") return Split::test;
    throw UsageError("unknown split '" + s + "'");
}

Manifest load_manifest(const std::filesystem::path& csv_path, Split split) {
    std::ifstream in(csv_path);
    if (!in) throw IoError("cannot open manifest: " + csv_path.string());

    const auto base_dir = csv_path.has_parent_path() ? csv_path.parent_path()
                                                     : std::filesystem::path(".");

    std::string line;
    if (!std::getline(in, line)) throw DataError("empty manifest: " + csv_path.string());
    if (strip_cr(line) != kHeader) {
        throw DataError("manifest " + csv_path.string() + ": bad header, expected '" +
                        kHeader + "'");
    }

    Manifest m;
    m.split = split;
    m.name = csv_path.stem().string();

    std::unordered_set<std::string> seen_ids;
    std::size_t row = 0;
    while (std::getline(in, line)) {
        line = strip_cr(line);
        if (line.empty()) continue;
        ++row;
        auto fields = split_fields(line);
        if (fields.size() != 6) {
            throw DataError("manifest " + csv_path.string() + " row " + std::to_string(row) +
                            ": expected 6 columns, got " + std::to_string(fields.size()));
        }
        ImageRecord rec;
        rec.record_id = fields[0];
        if (rec.record_id.empty()) {
            throw DataError("manifest " + csv_path.string() + " row " + std::to_string(row) +
                            ": empty record_id");
        }
        rec.patient_id = fields[1].empty() ? fields[0] : fields[1];
        std::filesystem::path p = fields[2];
        rec.path = p.is_absolute() ? p : base_dir / p;
        try {
            rec.label = parse_label(fields[3]);
            rec.source = parse_source(fields[4]);
            rec.view = parse_view(fields[5]);
        } catch (const DataError& e) {
            throw DataError("manifest " + csv_path.string() + " row " + std::to_string(row) +
                            ": " + e.what());
        }
        if (!seen_ids.insert(rec.record_id).second) {
            throw DataError("manifest " + csv_path.string() + ": duplicate record_id '" +
                            rec.record_id + "'");
        }
        m.records.push_back(std::move(rec));
    }
    return m;
}

void save_manifest(const Manifest& m, const std::filesystem::path& csv_path) {
    const auto base_dir = csv_path.has_parent_path() ? csv_path.parent_path()
                                                     : std::filesystem::path(".");
    std::ofstream out(csv_path, std::ios::trunc);
    if (!out) throw IoError("cannot write manifest: " + csv_path.string());
    out << kHeader << "\n";
    for (const auto& rec : m.records) {
        std::error_code ec;
        auto rel = std::filesystem::relative(rec.path, base_dir, ec);
        const auto path_str = (ec || rel.empty()) ? rec.path.string() : rel.string();
        for (const auto& field : {rec.record_id, rec.patient_id, path_str}) {
            if (field.find_first_of(",\n\r") != std::string::npos) {
                throw DataError("manifest field contains a comma or newline: '" + field + "'");
            }
        }
        out << rec.record_id << ',' << rec.patient_id << ',' << path_str << ','
            << to_string(rec.label) << ',' << to_string(rec.source) << ','
            << to_string(rec.view) << "\n";
    }
    if (!out) throw IoError("failed writing manifest: " + csv_path.string());
}

ClassCounts class_counts(const Manifest& m) {
    ClassCounts c;
    for (const auto& rec : m.records) {
        (rec.label == Label::positive ? c.positive : c.negative)++;
    }
    return c;
}

std::vector<std::string> check_disjoint(const Manifest& a, const Manifest& b) {
    std::set<std::string> pa, pb;
    for (const auto& r : a.records) pa.insert(r.patient_id);
    for (const auto& r : b.records) pb.insert(r.patient_id);
    std::vector<std::string> shared;
    std::set_intersection(pa.begin(), pa.end(), pb.begin(), pb.end(),
                          std::back_inserter(shared));
    return shared;
}

Manifest merge(const Manifest& real, const Manifest& synthetic) {
    if (real.split != Split::train || synthetic.split != Split::train) {
        throw UsageError("merge requires two train-split manifests (got " +
                         to_string(real.split) + " and " + to_string(synthetic.split) + ")");
    }
    for (const auto& r : synthetic.records) {
        if (r.source != Source::synthetic) {
            throw UsageError("merge: record '" + r.record_id +
                             "' in the synthetic manifest has source=real");
        }
    }

    Manifest out;
    out.split = Split::train;
    out.name = real.name + "+synth";
    out.records = real.records;

    std::unordered_set<std::string> ids, patients;
    for (const auto& r : real.records) {
        ids.insert(r.record_id);
        patients.insert(r.patient_id);
    }
    for (ImageRecord rec : synthetic.records) {
        if (rec.patient_id.empty()) rec.patient_id = rec.record_id;
        if (!has_syn_prefix(rec.record_id)) rec.record_id = "syn:" + rec.record_id;
        if (!has_syn_prefix(rec.patient_id)) rec.patient_id = "syn:" + rec.patient_id;
        if (!ids.insert(rec.record_id).second) {
            throw DataError("merge: record_id collision on '" + rec.record_id + "'");
        }
        if (patients.count(rec.patient_id)) {
            throw DataError("merge: synthetic patient_id '" + rec.patient_id +
                            "' overlaps a real patient");
        }
        out.records.push_back(std::move(rec));
    }
    return out;
}

Manifest filter_by_label(const Manifest& m, Label label) {
    Manifest out;
    out.split = m.split;
    out.name = m.name + ":" + to_string(label);
    for (const auto& r : m.records) {
        if (r.label == label) out.records.push_back(r);
    }
    return out;
}

}  // namespace synthaug::dataset
