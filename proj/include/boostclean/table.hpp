#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include <nlohmann/json.hpp>

#include "csv.hpp"
#include "error.hpp"
#include "rng.hpp"
#include "types.hpp"
#include "value.hpp"

namespace boostclean {

struct Column {
    std::string name;
    ColumnType type = ColumnType::text;
    bool operator==(const Column&) const = default;
};

/// Feature columns in file order. The label column, when present, is kept out of
/// `columns`; `label_position` remembers where it sat in the source header so
/// tables can be written back in their original layout.
struct Schema {
    std::vector<Column> columns;
    std::optional<std::string> label_column;
    std::size_t label_position = 0;

    std::size_t size() const { return columns.size(); }

    std::optional<std::size_t> find(std::string_view name) const {
        for (std::size_t i = 0; i < columns.size(); ++i) {
            if (columns[i].name == name) return i;
        }
        return std::nullopt;
    }

    std::size_t index_of(std::string_view name) const {
        if (auto i = find(name)) return *i;
        throw ValidationError("unknown column: " + std::string(name));
    }

    bool operator==(const Schema&) const = default;
};

struct Record {
    std::vector<Value> values;
    Value label;
    std::uint64_t row_id = 0;

    bool operator==(const Record&) const = default;
};

/// Immutable once loaded: every operation that "changes" a table returns a new one.
struct Table {
    Schema schema;
    std::vector<Record> records;

    std::size_t rows() const { return records.size(); }
    bool empty() const { return records.empty(); }
};

struct Dataset {
    Table train;
    Table test;
    Schema schema;
};

struct LoadOptions {
    char delimiter = ',';
    bool header = true;
    std::optional<std::string> label_column;
    bool infer_types = true;
};

struct LoadReport {
    std::size_t rows = 0;
    std::size_t columns = 0;
    std::vector<std::uint64_t> malformed_rows;
    Schema inferred_schema;
};

inline nlohmann::json schema_to_json(const Schema& schema) {
    nlohmann::json cols = nlohmann::json::array();
    for (const auto& c : schema.columns) {
        cols.push_back({{"name", c.name}, {"type", std::string(to_string(c.type))}});
    }
    nlohmann::json j{{"columns", cols}};
    j["label_column"] = schema.label_column ? nlohmann::json(*schema.label_column) : nlohmann::json();
    j["label_position"] = schema.label_position;
    return j;
}

inline Schema schema_from_json(const nlohmann::json& j) {
    Schema s;
    for (const auto& c : j.at("columns")) {
        s.columns.push_back({c.at("name").get<std::string>(),
                             column_type_from_string(c.at("type").get<std::string>())});
    }
    if (!j.at("label_column").is_null()) s.label_column = j.at("label_column").get<std::string>();
    s.label_position = j.at("label_position").get<std::size_t>();
    return s;
}

inline nlohmann::json to_json(const LoadReport& r) {
    return {{"rows", r.rows},
            {"columns", r.columns},
            {"malformed_rows", r.malformed_rows},
            {"inferred_schema", schema_to_json(r.inferred_schema)}};
}

struct TypeInferenceOptions {
    double numeric_fraction = 0.95;
    double date_fraction = 0.95;
    double address_fraction = 0.95;
    std::size_t categorical_min_distinct = 20;
    double categorical_row_fraction = 0.01;
};

inline Value cell_value(const csv::Field& f) {
    if (f.quoted && f.text.empty()) return Value::text("");
    return Value::parse(f.text);
}

struct Loaded {
    Table table;
    LoadReport report;
};

inline Schema infer_types(const Table& table, const TypeInferenceOptions& options = {});

/// Builds a table from raw CSV text. Rows whose width differs from the header are
/// kept (padded with Missing or truncated) and listed in the report.
inline Loaded load_csv_text(std::string_view text, const LoadOptions& options = {},
                            const TypeInferenceOptions& type_options = {}) {
    auto rows = csv::parse(text, options.delimiter);
    std::vector<std::string> header;
    std::size_t first = 0;
    if (options.header) {
        if (rows.empty()) throw ValidationError("csv: missing header row");
        for (auto& f : rows[0]) header.push_back(f.text);
        first = 1;
    } else if (!rows.empty()) {
        for (std::size_t i = 0; i < rows[0].size(); ++i) header.push_back("c" + std::to_string(i));
    }
    {
        std::unordered_set<std::string> seen;
        for (const auto& h : header) {
            if (!seen.insert(h).second) throw ValidationError("csv: duplicate header name '" + h + "'");
        }
    }
    if (rows.size() <= first) throw ValidationError("csv: no data rows");

    Loaded out;
    Schema& schema = out.table.schema;
    std::optional<std::size_t> label_at;
    if (options.label_column) {
        auto it = std::find(header.begin(), header.end(), *options.label_column);
        if (it == header.end()) throw ValidationError("label column not found: " + *options.label_column);
        label_at = static_cast<std::size_t>(it - header.begin());
        schema.label_column = *options.label_column;
        schema.label_position = *label_at;
    }
    for (std::size_t i = 0; i < header.size(); ++i) {
        if (i != label_at) schema.columns.push_back({header[i], ColumnType::text});
    }

    const std::size_t width = header.size();
    out.table.records.reserve(rows.size() - first);
    for (std::size_t r = first; r < rows.size(); ++r) {
        const auto& row = rows[r];
        Record rec;
        rec.row_id = r - first;
        if (row.size() != width) out.report.malformed_rows.push_back(rec.row_id);
        rec.values.reserve(schema.size());
        for (std::size_t i = 0; i < width; ++i) {
            Value v = i < row.size() ? cell_value(row[i]) : Value::missing();
            if (i == label_at) {
                rec.label = std::move(v);
            } else {
                rec.values.push_back(std::move(v));
            }
        }
        out.table.records.push_back(std::move(rec));
    }
    if (options.infer_types) schema = infer_types(out.table, type_options);
    out.report.rows = out.table.rows();
    out.report.columns = width;
    out.report.inferred_schema = schema;
    return out;
}

inline Loaded load_csv(const std::string& path, const LoadOptions& options = {},
                       const TypeInferenceOptions& type_options = {}) {
    return load_csv_text(csv::read_file(path), options, type_options);
}

inline void append_value(std::string& out, const Value& v, char delimiter) {
    if (v.is_missing()) return;
    if (v.is_text()) {
        csv::write_field(out, v.as_text(), delimiter, v.as_text().empty());
        return;
    }
    out += v.str();
}

/// Writes a table in its original column layout (label column restored in place).
inline std::string write_csv(const Table& table, char delimiter = ',') {
    const Schema& s = table.schema;
    std::vector<std::string> header;
    for (const auto& c : s.columns) header.push_back(c.name);
    if (s.label_column) header.insert(header.begin() + static_cast<std::ptrdiff_t>(s.label_position), *s.label_column);
    std::string out;
    for (std::size_t i = 0; i < header.size(); ++i) {
        if (i) out.push_back(delimiter);
        csv::write_field(out, header[i], delimiter);
    }
    out.push_back('\n');
    for (const auto& rec : table.records) {
        std::size_t feature = 0;
        for (std::size_t i = 0; i < header.size(); ++i) {
            if (i) out.push_back(delimiter);
            if (s.label_column && i == s.label_position) {
                append_value(out, rec.label, delimiter);
            } else {
                append_value(out, rec.values[feature++], delimiter);
            }
        }
        out.push_back('\n');
    }
    return out;
}

/// Per column, over non-Missing cells: Numeric, Date, Address by the configured
/// fractions, then Categorical if the distinct count is small, else Text.
inline Schema infer_types(const Table& table, const TypeInferenceOptions& options) {
    if (table.empty()) throw ValidationError("infer_types: empty table");
    Schema schema = table.schema;
    const std::size_t cat_bound = std::max(
        options.categorical_min_distinct,
        static_cast<std::size_t>(std::floor(options.categorical_row_fraction * static_cast<double>(table.rows()))));
    for (std::size_t c = 0; c < schema.size(); ++c) {
        std::size_t present = 0, numbers = 0, dates = 0, addresses = 0;
        std::unordered_set<Value, ValueHash> distinct;
        for (const auto& rec : table.records) {
            const Value& v = rec.values[c];
            if (v.is_missing()) continue;
            ++present;
            if (v.is_number() || Value::parse_number(v.as_text())) {
                ++numbers;
            } else {
                if (has_date_components(v.as_text())) ++dates;
                if (has_address_components(v.as_text())) ++addresses;
            }
            if (distinct.size() <= cat_bound) distinct.insert(v);
        }
        const double n = static_cast<double>(present);
        ColumnType t;
        if (present > 0 && numbers >= options.numeric_fraction * n) {
            t = ColumnType::numeric;
        } else if (present > 0 && dates >= options.date_fraction * n) {
            t = ColumnType::date;
        } else if (present > 0 && addresses >= options.address_fraction * n) {
            t = ColumnType::address;
        } else if (distinct.size() <= cat_bound) {
            t = ColumnType::categorical;
        } else {
            t = ColumnType::text;
        }
        schema.columns[c].type = t;
    }
    return schema;
}

inline Table with_schema(Table table, Schema schema) {
    table.schema = std::move(schema);
    return table;
}

/// Deterministic train/test split. Only labelled rows are eligible for the test
/// side; unlabelled rows always stay in train. Both halves keep file order.
inline Dataset split(const Table& table, double test_fraction, std::uint64_t seed) {
    if (!(test_fraction > 0.0 && test_fraction < 1.0)) {
        throw ValidationError("split: test fraction must lie in (0, 1)");
    }
    std::vector<std::size_t> labelled;
    for (std::size_t i = 0; i < table.rows(); ++i) {
        if (!table.records[i].label.is_missing()) labelled.push_back(i);
    }
    if (labelled.empty()) throw DegenerateDataError("split: every label is missing");

    auto n_test = static_cast<std::size_t>(std::llround(test_fraction * static_cast<double>(table.rows())));
    n_test = std::clamp<std::size_t>(n_test, 1, labelled.size());
    if (n_test >= table.rows()) throw DegenerateDataError("split: not enough rows for a non-empty train side");

    Rng rng(seed);
    rng.shuffle(std::span<std::size_t>(labelled));
    std::vector<char> is_test(table.rows(), 0);
    for (std::size_t i = 0; i < n_test; ++i) is_test[labelled[i]] = 1;

    Dataset d;
    d.schema = table.schema;
    d.train.schema = table.schema;
    d.test.schema = table.schema;
    for (std::size_t i = 0; i < table.rows(); ++i) {
        (is_test[i] ? d.test : d.train).records.push_back(table.records[i]);
    }
    return d;
}

/// Labels in order of first appearance.
inline std::vector<Value> label_order(const Table& table) {
    std::vector<Value> labels;
    std::unordered_set<Value, ValueHash> seen;
    for (const auto& r : table.records) {
        if (!r.label.is_missing() && seen.insert(r.label).second) labels.push_back(r.label);
    }
    return labels;
}

/// Most frequent non-missing label; ties go to the earliest label in row order.
inline Value majority_label(const Table& table) {
    std::unordered_map<Value, std::size_t, ValueHash> counts;
    for (const auto& r : table.records) {
        if (!r.label.is_missing()) ++counts[r.label];
    }
    Value best;
    std::size_t best_count = 0;
    for (const auto& l : label_order(table)) {
        if (counts[l] > best_count) {
            best = l;
            best_count = counts[l];
        }
    }
    return best;
}

} // namespace boostclean
