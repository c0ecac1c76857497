#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "boost.hpp"
#include "config.hpp"
#include "csv.hpp"
#include "deploy.hpp"
#include "detect.hpp"
#include "inject.hpp"
#include "json_util.hpp"
#include "model.hpp"
#include "table.hpp"

namespace boostclean {

/// Loads a labelled CSV. Without a configured label column the last column is the label.
inline Loaded load_labelled_text(const std::string& text, const Config& config) {
    LoadOptions opts;
    opts.delimiter = config.delimiter;
    opts.label_column = config.label_column;
    if (!opts.label_column) {
        const auto rows = csv::parse(text, config.delimiter);
        if (rows.empty() || rows.front().empty()) throw ValidationError("csv: missing header row");
        opts.label_column = rows.front().back().text;
    }
    return load_csv_text(text, opts, config.types);
}

inline Loaded load_labelled(const std::string& path, const Config& config) {
    return load_labelled_text(csv::read_file(path), config);
}

/// detect: schema inference, every detector generator, per-predicate hits.
inline nlohmann::json cmd_detect(const std::string& csv_path, const Config& config) {
    const Loaded loaded = load_labelled(csv_path, config);
    const auto library = default_library(config.detect);
    const Detection d = generate_all(library, loaded.table, config.seed, config.threads);
    nlohmann::json preds = nlohmann::json::array();
    for (std::size_t i = 0; i < d.predicates.size(); ++i) {
        nlohmann::json j = to_json(d.reports[i]);
        j["type"] = std::string(d.predicates[i]->type());
        std::vector<std::uint64_t> rows;
        for (const auto& r : loaded.table.records) {
            if (d.predicates[i]->matches(r)) rows.push_back(r.row_id);
        }
        j["rows"] = rows;
        preds.push_back(std::move(j));
    }
    return {{"load", to_json(loaded.report)}, {"seed", config.seed}, {"predicates", std::move(preds)}};
}

struct SelectResult {
    std::string model;  // deployed model bytes
    nlohmann::json report;
    Ensemble ensemble;
};

/// select: load, split, detect on train, build candidates, boost, deploy.
inline SelectResult cmd_select(const std::string& csv_path, const Config& config) {
    const Loaded loaded = load_labelled(csv_path, config);
    const Dataset data = split(loaded.table, config.test_fraction, config.seed);
    const auto library = default_library(config.detect);
    const Detection d = generate_all(library, data.train, config.seed, config.threads);
    const CandidateSet cs = build_candidates(d.predicates, config.repairs, data.train, data.test, config.seed,
                                             reference_trainer(config.classifier), config.threads);
    SelectOptions so;
    so.never_worse = config.never_worse;
    Ensemble e = boost_select(cs, config.budget, config.seed, so);

    nlohmann::json detection = nlohmann::json::array();
    for (const auto& r : d.reports) detection.push_back(to_json(r));
    SelectResult out;
    out.report = {{"seed", config.seed},
                  {"budget", config.budget},
                  {"train_rows", data.train.rows()},
                  {"test_rows", data.test.rows()},
                  {"detection", std::move(detection)},
                  {"selection", selection_report(e, cs)}};
    out.model = serialize_model(DeployedModel{data.schema, e});
    out.ensemble = std::move(e);
    return out;
}

namespace detail {

/// Raw CSV plus the model's feature columns mapped onto it.
struct ScoringInput {
    std::vector<std::string> header;
    std::vector<csv::Row> rows;
    Table table;
};

inline ScoringInput scoring_input(const std::string& text, const Schema& schema, char delimiter, bool need_label) {
    ScoringInput in;
    auto rows = csv::parse(text, delimiter);
    if (rows.empty()) throw ValidationError("csv: missing header row");
    for (const auto& f : rows.front()) in.header.push_back(f.text);
    in.rows.assign(rows.begin() + 1, rows.end());
    auto position = [&](const std::string& name) -> std::optional<std::size_t> {
        for (std::size_t i = 0; i < in.header.size(); ++i) {
            if (in.header[i] == name) return i;
        }
        return std::nullopt;
    };
    std::vector<std::size_t> cols;
    for (const auto& c : schema.columns) {
        auto p = position(c.name);
        if (!p) throw ValidationError("csv: model column '" + c.name + "' is absent");
        cols.push_back(*p);
    }
    std::optional<std::size_t> label_at;
    if (schema.label_column) label_at = position(*schema.label_column);
    if (need_label && !label_at) throw ValidationError("csv: label column is absent");
    in.table.schema = schema;
    for (std::size_t r = 0; r < in.rows.size(); ++r) {
        const auto& row = in.rows[r];
        Record rec;
        rec.row_id = r;
        for (auto c : cols) rec.values.push_back(c < row.size() ? cell_value(row[c]) : Value::missing());
        if (label_at && *label_at < row.size()) rec.label = cell_value(row[*label_at]);
        in.table.records.push_back(std::move(rec));
    }
    return in;
}

inline void append_row(std::string& out, const csv::Row& row, char delimiter) {
    for (std::size_t i = 0; i < row.size(); ++i) {
        if (i) out.push_back(delimiter);
        csv::write_field(out, row[i].text, delimiter, row[i].quoted);
    }
}

} // namespace detail

/// predict: the input CSV with a trailing prediction column.
inline std::string cmd_predict_text(const DeployedModel& model, const std::string& text, char delimiter = ',') {
    const auto in = detail::scoring_input(text, model.schema, delimiter, false);
    std::string name = "prediction";
    while (std::find(in.header.begin(), in.header.end(), name) != in.header.end()) name = "_" + name;
    std::string out;
    csv::Row header;
    for (const auto& h : in.header) header.push_back({h, false});
    header.push_back({name, false});
    detail::append_row(out, header, delimiter);
    out.push_back('\n');
    for (std::size_t r = 0; r < in.rows.size(); ++r) {
        detail::append_row(out, in.rows[r], delimiter);
        if (!in.rows[r].empty()) out.push_back(delimiter);
        append_value(out, ensemble_predict(model.ensemble, in.table.records[r]), delimiter);
        out.push_back('\n');
    }
    return out;
}

inline std::string cmd_predict(const std::string& model_path, const std::string& csv_path, char delimiter = ',') {
    return cmd_predict_text(load_deployed(model_path), csv::read_file(csv_path), delimiter);
}

/// evaluate: accuracy, per-class precision/recall, and AUC for binary models.
inline nlohmann::json cmd_evaluate_text(const DeployedModel& model, const std::string& text, char delimiter = ',') {
    const auto in = detail::scoring_input(text, model.schema, delimiter, true);
    const auto& e = model.ensemble;
    std::vector<Value> pred;
    std::vector<const Record*> rows;
    for (const auto& r : in.table.records) {
        if (r.label.is_missing()) continue;
        rows.push_back(&r);
        pred.push_back(ensemble_predict(e, r));
    }
    if (rows.empty()) throw DegenerateDataError("evaluate: no labelled rows");
    std::size_t correct = 0;
    std::vector<Value> classes = e.labels;
    for (const auto* r : rows) {
        if (std::find(classes.begin(), classes.end(), r->label) == classes.end()) classes.push_back(r->label);
    }
    nlohmann::json per_class = nlohmann::json::array();
    for (std::size_t i = 0; i < rows.size(); ++i) correct += pred[i] == rows[i]->label;
    for (const auto& c : classes) {
        std::size_t tp = 0, predicted = 0, actual = 0;
        for (std::size_t i = 0; i < rows.size(); ++i) {
            const bool p = pred[i] == c, a = rows[i]->label == c;
            tp += p && a;
            predicted += p;
            actual += a;
        }
        nlohmann::json j{{"label", value_to_report(c)}, {"support", actual}};
        j["precision"] = predicted ? nlohmann::json(static_cast<double>(tp) / static_cast<double>(predicted)) : nlohmann::json();
        j["recall"] = actual ? nlohmann::json(static_cast<double>(tp) / static_cast<double>(actual)) : nlohmann::json();
        per_class.push_back(std::move(j));
    }
    nlohmann::json out{{"rows", rows.size()},
                       {"accuracy", static_cast<double>(correct) / static_cast<double>(rows.size())},
                       {"per_class", std::move(per_class)}};
    out["auc"] = nullptr;
    if (e.binary && !e.labels.empty()) {
        const Value& positive = e.labels.front();
        std::vector<double> scores;
        std::vector<char> is_pos;
        for (const auto* r : rows) {
            scores.push_back(ensemble_margin(e, *r, positive));
            is_pos.push_back(r->label == positive);
        }
        if (auto a = auc(scores, is_pos)) out["auc"] = *a;
        out["positive_label"] = value_to_report(positive);
    }
    return out;
}

inline nlohmann::json cmd_evaluate(const std::string& model_path, const std::string& csv_path, char delimiter = ',') {
    return cmd_evaluate_text(load_deployed(model_path), csv::read_file(csv_path), delimiter);
}

struct InjectOutput {
    std::string dirty_csv;
    nlohmann::json truth;
};

/// inject: the dirty CSV and its ground truth.
inline InjectOutput cmd_inject(const std::string& csv_path, const InjectionSpec& spec, const Config& config) {
    const Loaded loaded = load_labelled(csv_path, config);
    const auto res = inject(loaded.table, spec);
    return {write_csv(res.dirty, config.delimiter), truth_to_json(res, res.dirty.schema, spec.seed)};
}

} // namespace boostclean
