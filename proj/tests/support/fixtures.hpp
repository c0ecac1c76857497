#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include <boostclean/boostclean.hpp>

namespace fixtures {

using boostclean::ColumnType;
using boostclean::Record;
using boostclean::Table;
using boostclean::Value;

inline Value N(double x) { return Value::number(x); }
inline Value T(std::string s) { return Value::text(std::move(s)); }
inline Value M() { return Value::missing(); }

inline Table make_table(const std::vector<std::pair<std::string, ColumnType>>& cols,
                        const std::vector<std::vector<Value>>& rows, const std::vector<Value>& labels = {}) {
    Table t;
    for (const auto& [name, type] : cols) t.schema.columns.push_back({name, type});
    t.schema.label_column = "label";
    t.schema.label_position = cols.size();
    for (std::size_t i = 0; i < rows.size(); ++i) {
        Record r;
        r.values = rows[i];
        r.label = i < labels.size() ? labels[i] : Value::missing();
        r.row_id = i;
        t.records.push_back(std::move(r));
    }
    return t;
}

/// Census-style table: age (numeric), hours (numeric), income (numeric),
/// work (categorical), region (categorical); binary label from a noisy linear rule.
inline Table census_like(std::size_t n, std::uint64_t seed) {
    boostclean::Rng rng(seed);
    const char* works[] = {"Private", "Self-emp", "Gov"};
    const char* regions[] = {"North", "South", "East", "West"};
    Table t;
    t.schema.columns = {{"age", ColumnType::numeric},
                        {"hours", ColumnType::numeric},
                        {"income", ColumnType::numeric},
                        {"work", ColumnType::categorical},
                        {"region", ColumnType::categorical}};
    t.schema.label_column = "label";
    t.schema.label_position = 5;
    for (std::size_t i = 0; i < n; ++i) {
        const bool y = rng.uniform() < 0.4;
        Record r;
        r.row_id = i;
        const std::size_t region = rng.below(4);
        r.values = {N(std::round((y ? 45.0 : 35.0) + 8.0 * rng.normal())),
                    N(std::round(10.0 * ((y ? 44.0 : 38.0) + 6.0 * rng.normal())) / 10.0),
                    N(std::round((y ? 60000.0 : 42000.0) + 9000.0 * rng.normal())),
                    T(works[rng.below(3)]),
                    T(regions[region])};
        r.label = T(y ? "high" : "low");
        t.records.push_back(std::move(r));
    }
    return t;
}

/// Two-feature interleaved moons with a little noise; labels "a"/"b".
inline Table moons(std::size_t n, std::uint64_t seed, double noise = 0.15) {
    boostclean::Rng rng(seed);
    Table t;
    t.schema.columns = {{"x", ColumnType::numeric}, {"y", ColumnType::numeric}};
    t.schema.label_column = "label";
    t.schema.label_position = 2;
    const double pi = std::acos(-1.0);
    for (std::size_t i = 0; i < n; ++i) {
        const bool upper = i % 2 == 0;
        const double a = pi * rng.uniform();
        double x = upper ? std::cos(a) : 1.0 - std::cos(a);
        double y = upper ? std::sin(a) : 0.5 - std::sin(a);
        x += noise * rng.normal();
        y += noise * rng.normal();
        Record r;
        r.row_id = i;
        r.values = {N(x), N(y)};
        r.label = T(upper ? "a" : "b");
        t.records.push_back(std::move(r));
    }
    return t;
}

/// A fixed classifier: predicts `then_label` when feature `column` is at most
/// `threshold`, `else_label` otherwise.
class Stump final : public boostclean::Classifier {
public:
    Stump(std::size_t column, double threshold, Value then_label, Value else_label)
        : column_(column), threshold_(threshold), then_(std::move(then_label)), else_(std::move(else_label)),
          labels_{then_, else_} {}
    std::string_view type() const override { return "stump"; }
    Value predict(const Record& r) const override {
        const Value& v = r.values[column_];
        return v.is_number() && v.as_number() <= threshold_ ? then_ : else_;
    }
    const std::vector<Value>& labels() const override { return labels_; }
    nlohmann::json to_json() const override {
        return {{"type", "stump"},
                {"column", column_},
                {"threshold", threshold_},
                {"then", boostclean::value_to_json(then_)},
                {"else", boostclean::value_to_json(else_)}};
    }

private:
    std::size_t column_;
    double threshold_;
    Value then_, else_;
    std::vector<Value> labels_;
};

/// Predicts from a lookup keyed by row_id; used to script arbitrary candidates.
class Scripted final : public boostclean::Classifier {
public:
    Scripted(std::vector<Value> by_row, std::vector<Value> labels)
        : by_row_(std::move(by_row)), labels_(std::move(labels)) {}
    std::string_view type() const override { return "scripted"; }
    Value predict(const Record& r) const override { return by_row_.at(r.row_id); }
    const std::vector<Value>& labels() const override { return labels_; }
    nlohmann::json to_json() const override { return {{"type", "scripted"}}; }

private:
    std::vector<Value> by_row_;
    std::vector<Value> labels_;
};

/// Random small selection problem: `k` scripted candidates over `n` test rows,
/// each right with its own probability. Candidate 0 plays the base.
inline std::pair<boostclean::CandidateSet, Table> random_problem(std::size_t n, std::size_t k, std::size_t n_labels,
                                                                 std::uint64_t seed) {
    boostclean::Rng rng(seed);
    std::vector<Value> labels;
    for (std::size_t c = 0; c < n_labels; ++c) labels.push_back(T("c" + std::to_string(c)));
    Table test;
    test.schema.columns = {{"x", ColumnType::numeric}};
    test.schema.label_column = "label";
    for (std::size_t i = 0; i < n; ++i) {
        Record r;
        r.row_id = i;
        r.values = {N(static_cast<double>(i))};
        r.label = labels[rng.below(n_labels)];
        test.records.push_back(std::move(r));
    }
    std::vector<boostclean::Member> members;
    for (std::size_t j = 0; j < k; ++j) {
        const double p = 0.45 + 0.4 * rng.uniform();
        std::vector<Value> preds;
        for (const auto& r : test.records) preds.push_back(rng.uniform() < p ? r.label : labels[rng.below(n_labels)]);
        members.push_back({j, std::nullopt, std::make_shared<Scripted>(preds, labels)});
    }
    auto cs = boostclean::start_candidates(labels, labels.front(), test);
    boostclean::add_members(cs, std::move(members), test);
    return {std::move(cs), std::move(test)};
}

} // namespace fixtures
