#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <nlohmann/json.hpp>

#include "detect.hpp"
#include "json_util.hpp"
#include "model.hpp"
#include "table.hpp"

namespace boostclean {

/// Where a repair acts: on records before training/prediction, or on the label
/// after the classifier has spoken.
enum class Stage { data, prediction };

inline std::string_view to_string(Stage s) { return s == Stage::data ? "data" : "prediction"; }

inline Stage stage_from_string(std::string_view s) {
    if (s == "data") return Stage::data;
    if (s == "prediction") return Stage::prediction;
    throw ValidationError("unknown repair stage: " + std::string(s));
}

enum class RepairKind { impute_mean, impute_median, impute_mode, discard, default_prediction };

inline std::string_view to_string(RepairKind k) {
    switch (k) {
    case RepairKind::impute_mean: return "impute_mean";
    case RepairKind::impute_median: return "impute_median";
    case RepairKind::impute_mode: return "impute_mode";
    case RepairKind::discard: return "discard";
    case RepairKind::default_prediction: return "default_prediction";
    }
    return "";
}

inline RepairKind repair_kind_from_string(std::string_view s) {
    for (auto k : {RepairKind::impute_mean, RepairKind::impute_median, RepairKind::impute_mode, RepairKind::discard,
                   RepairKind::default_prediction}) {
        if (to_string(k) == s) return k;
    }
    throw ValidationError("unknown repair: " + std::string(s));
}

inline bool allowed_at(RepairKind k, Stage s) {
    switch (k) {
    case RepairKind::discard: return s == Stage::data;
    case RepairKind::default_prediction: return s == Stage::prediction;
    default: return true;
    }
}

/// A repair with its training statistic already captured.
struct RepairFunction {
    RepairKind kind = RepairKind::impute_mean;
    std::optional<std::size_t> column;  // imputations only
    Value fill;                         // imputed value, or the default label

    std::string name() const { return std::string(to_string(kind)); }

    /// Applies the repair to `current` given the cells the paired predicate
    /// flagged. Returns nullopt when the record is discarded. Never mutates inputs.
    std::optional<Record> apply(const Record& current, const Record& /*original*/, const ColumnSet& violated) const {
        switch (kind) {
        case RepairKind::discard:
            return std::nullopt;
        case RepairKind::default_prediction:
            return current;
        default: {
            Record out = current;
            if (column && std::binary_search(violated.begin(), violated.end(), *column)) out.values[*column] = fill;
            return out;
        }
        }
    }

    nlohmann::json to_json() const {
        nlohmann::json j{{"kind", name()}, {"fill", value_to_json(fill)}};
        j["column"] = column ? nlohmann::json(*column) : nlohmann::json();
        return j;
    }

    static RepairFunction from_json(const nlohmann::json& j) {
        RepairFunction f;
        f.kind = repair_kind_from_string(j.at("kind").get<std::string>());
        if (!j.at("column").is_null()) f.column = j.at("column").get<std::size_t>();
        f.fill = value_from_json(j.at("fill"));
        return f;
    }
};

/// Flags of `predicate` over every train record, reused across repair kinds.
inline std::vector<ColumnSet> violations_of(const Predicate& predicate, const Table& train) {
    std::vector<ColumnSet> out;
    out.reserve(train.rows());
    for (const auto& r : train.records) out.push_back(predicate.evaluate(r));
    return out;
}

namespace detail {

inline bool flagged(const ColumnSet& v, std::size_t column) { return std::binary_search(v.begin(), v.end(), column); }

inline std::vector<double> clean_numbers(const Table& train, std::size_t column, std::span<const ColumnSet> violations) {
    std::vector<double> xs;
    for (std::size_t i = 0; i < train.rows(); ++i) {
        if (flagged(violations[i], column)) continue;
        const Value& v = train.records[i].values[column];
        if (v.is_number()) xs.push_back(v.as_number());
    }
    return xs;
}

} // namespace detail

/// Mean of the column over train cells the predicate does not flag.
inline std::optional<RepairFunction> impute_mean(const Table& train, std::size_t column,
                                                 std::span<const ColumnSet> violations) {
    if (train.schema.columns[column].type != ColumnType::numeric) return std::nullopt;
    const auto xs = detail::clean_numbers(train, column, violations);
    if (xs.empty()) return std::nullopt;
    double sum = 0.0;
    for (double x : xs) sum += x;
    return RepairFunction{RepairKind::impute_mean, column, Value::number(sum / static_cast<double>(xs.size()))};
}

/// Median (average of the two middle values for even counts).
inline std::optional<RepairFunction> impute_median(const Table& train, std::size_t column,
                                                   std::span<const ColumnSet> violations) {
    if (train.schema.columns[column].type != ColumnType::numeric) return std::nullopt;
    auto xs = detail::clean_numbers(train, column, violations);
    if (xs.empty()) return std::nullopt;
    std::sort(xs.begin(), xs.end());
    const std::size_t n = xs.size();
    const double med = n % 2 ? xs[n / 2] : (xs[n / 2 - 1] + xs[n / 2]) / 2.0;
    return RepairFunction{RepairKind::impute_median, column, Value::number(med)};
}

/// Most frequent unflagged, well-typed value; ties go to the first seen in train order.
inline std::optional<RepairFunction> impute_mode(const Table& train, std::size_t column,
                                                 std::span<const ColumnSet> violations) {
    const ColumnType type = train.schema.columns[column].type;
    std::unordered_map<Value, std::size_t, ValueHash> counts;
    std::vector<Value> order;
    for (std::size_t i = 0; i < train.rows(); ++i) {
        if (detail::flagged(violations[i], column)) continue;
        const Value& v = train.records[i].values[column];
        if (v.is_missing() || violates_type_signature(v, type)) continue;
        if (counts[v]++ == 0) order.push_back(v);
    }
    if (order.empty()) return std::nullopt;
    const Value* best = &order.front();
    for (const auto& v : order) {
        if (counts[v] > counts[*best]) best = &v;
    }
    return RepairFunction{RepairKind::impute_mode, column, *best};
}

inline RepairFunction discard_record() { return RepairFunction{RepairKind::discard, std::nullopt, Value::missing()}; }

/// Overrides the prediction with the majority training label.
inline RepairFunction default_prediction(const Table& train) {
    Value label = majority_label(train);
    if (label.is_missing()) throw DegenerateDataError("default_prediction: no labelled training rows");
    return RepairFunction{RepairKind::default_prediction, std::nullopt, std::move(label)};
}

/// A (predicate, repair) pair resolved to one stage.
class ConditionalRepair {
public:
    ConditionalRepair(PredicatePtr predicate, RepairFunction repair, Stage stage)
        : predicate_(std::move(predicate)), repair_(std::move(repair)), stage_(stage) {
        if (!predicate_) throw ValidationError("conditional repair: null predicate");
        if (!allowed_at(repair_.kind, stage_)) {
            throw ValidationError("conditional repair: " + repair_.name() + " cannot run at the " +
                                  std::string(to_string(stage_)) + " stage");
        }
    }

    const Predicate& predicate() const { return *predicate_; }
    const PredicatePtr& predicate_ptr() const { return predicate_; }
    const RepairFunction& repair() const { return repair_; }
    Stage stage() const { return stage_; }

    /// Data stage: the predicate is tested on the (possibly already cleaned)
    /// current record. nullopt means the record is dropped.
    std::optional<Record> apply(const Record& current, const Record& original) const {
        const ColumnSet violated = predicate_->evaluate(current);
        if (violated.empty()) return current;
        return repair_.apply(current, original, violated);
    }

    /// Cleans a record that is about to be predicted. Discards cannot drop test
    /// records, so they leave the record untouched.
    Record clean_for_prediction(const Record& current, const Record& original) const {
        if (repair_.kind == RepairKind::discard) return current;
        auto out = apply(current, original);
        return out ? std::move(*out) : current;
    }

    /// Prediction stage: whether this repair claims the record. Tested on the
    /// original, uncleaned record.
    bool claims(const Record& original) const { return predicate_->matches(original); }

    /// Prediction stage output for a claimed record.
    Value predict(const Record& cleaned, const Record& original, const Classifier& classifier) const {
        if (repair_.kind == RepairKind::default_prediction) return repair_.fill;
        const ColumnSet violated = predicate_->evaluate(original);
        auto repaired = repair_.apply(cleaned, original, violated);
        return classifier.predict(repaired ? *repaired : cleaned);
    }

    std::string describe() const {
        std::string s = predicate_->id() + " -> " + repair_.name();
        if (repair_.column) s += "[" + std::to_string(*repair_.column) + "]";
        return s + " (" + std::string(to_string(stage_)) + ")";
    }

    nlohmann::json to_json() const {
        return {{"predicate_id", predicate_->id()}, {"repair", repair_.to_json()},
                {"stage", std::string(to_string(stage_))}};
    }

private:
    PredicatePtr predicate_;
    RepairFunction repair_;
    Stage stage_;
};

/// L^d(r, r): folds the data repairs in order; each sees the current record and
/// the original. Dropped records are removed.
inline Table apply_data_repairs(std::span<const ConditionalRepair> repairs, const Table& table) {
    for (const auto& l : repairs) {
        if (l.stage() != Stage::data) throw ValidationError("apply_data_repairs: prediction repair in data sequence");
    }
    Table out;
    out.schema = table.schema;
    out.records.reserve(table.rows());
    for (const auto& original : table.records) {
        std::optional<Record> cur = original;
        for (const auto& l : repairs) {
            cur = l.apply(*cur, original);
            if (!cur) break;
        }
        if (cur) out.records.push_back(std::move(*cur));
    }
    return out;
}

/// L^d(r, r) for a record about to be predicted (discards are ignored).
inline Record clean_record(std::span<const ConditionalRepair> repairs, const Record& original) {
    Record cur = original;
    for (const auto& l : repairs) {
        if (l.stage() == Stage::data) cur = l.clean_for_prediction(cur, original);
    }
    return cur;
}

/// The last prediction repair whose predicate matches the original record wins;
/// with none, the classifier's answer on the cleaned record stands.
inline Value apply_prediction_repair(std::span<const ConditionalRepair> repairs, const Record& cleaned,
                                     const Record& original, const Classifier& classifier) {
    for (auto it = repairs.rbegin(); it != repairs.rend(); ++it) {
        if (it->stage() != Stage::prediction) throw ValidationError("apply_prediction_repair: data repair in sequence");
        if (it->claims(original)) return it->predict(cleaned, original, classifier);
    }
    return classifier.predict(cleaned);
}

/// Ordered sequence L with its data/prediction partitions.
struct RepairPlan {
    std::vector<ConditionalRepair> steps;
    std::vector<double> alphas;  // optional, parallel to steps

    std::vector<ConditionalRepair> data_steps() const {
        std::vector<ConditionalRepair> out;
        for (const auto& s : steps) {
            if (s.stage() == Stage::data) out.push_back(s);
        }
        return out;
    }

    std::vector<ConditionalRepair> prediction_steps() const {
        std::vector<ConditionalRepair> out;
        for (const auto& s : steps) {
            if (s.stage() == Stage::prediction) out.push_back(s);
        }
        return out;
    }

    nlohmann::json to_json() const {
        nlohmann::json arr = nlohmann::json::array();
        for (std::size_t i = 0; i < steps.size(); ++i) {
            const auto& s = steps[i];
            nlohmann::json j{{"predicate_id", s.predicate().id()}, {"repair_name", s.repair().name()},
                             {"stage", std::string(to_string(s.stage()))}};
            j["column"] = s.repair().column ? nlohmann::json(*s.repair().column) : nlohmann::json();
            j["alpha"] = i < alphas.size() ? nlohmann::json(alphas[i]) : nlohmann::json();
            arr.push_back(std::move(j));
        }
        return arr;
    }
};

/// C_L: one classifier trained on L^d(train), with L^p layered on top.
class SequentialCleanClassifier final : public Classifier {
public:
    SequentialCleanClassifier(RepairPlan plan, ClassifierPtr inner)
        : data_(plan.data_steps()), prediction_(plan.prediction_steps()), inner_(std::move(inner)) {}

    std::string_view type() const override { return "sequential_clean"; }
    const std::vector<Value>& labels() const override { return inner_->labels(); }

    Value predict(const Record& r) const override {
        const Record cleaned = clean_record(data_, r);
        return apply_prediction_repair(prediction_, cleaned, r, *inner_);
    }

    nlohmann::json to_json() const override {
        throw ValidationError("sequential_clean classifiers are not serializable; deploy the ensemble instead");
    }

private:
    std::vector<ConditionalRepair> data_;
    std::vector<ConditionalRepair> prediction_;
    ClassifierPtr inner_;
};

inline std::shared_ptr<SequentialCleanClassifier> compile_plan(const RepairPlan& plan, const Table& train,
                                                               const TrainProcedure& train_fn, std::uint64_t seed) {
    const auto data = plan.data_steps();
    return std::make_shared<SequentialCleanClassifier>(plan, train_fn(apply_data_repairs(data, train), seed));
}

} // namespace boostclean
