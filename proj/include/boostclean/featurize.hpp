#pragma once

#include <algorithm>
#include <array>
#include <cctype>
#include <cstddef>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "table.hpp"

namespace boostclean {

/// Numeric view of a record plus, for every feature, the schema column it came from.
struct FeatureVector {
    std::vector<double> values;
    std::vector<std::size_t> attribution;
};

/// Maps records to fixed-width feature vectors. `fit` once on the training table,
/// then `transform` is pure and may be called concurrently.
class Featurizer {
public:
    virtual ~Featurizer() = default;

    virtual std::string_view type() const = 0;
    virtual void fit(const Table& train) = 0;
    virtual std::size_t width() const = 0;
    virtual const std::vector<std::size_t>& attribution() const = 0;
    virtual void transform_into(const Record& record, std::span<double> out) const = 0;

    FeatureVector transform(const Record& record) const {
        FeatureVector fv;
        fv.values.resize(width());
        transform_into(record, fv.values);
        fv.attribution = attribution();
        return fv;
    }

    /// Attributes that fail outright, without going through an outlier model.
    virtual ColumnSet short_circuit(const Record&) const { return {}; }

    virtual nlohmann::json to_json() const = 0;
};

using FeaturizerPtr = std::shared_ptr<const Featurizer>;

/// One feature per Numeric column. Non-numbers contribute the column's train mean
/// so this view stays blind to missingness.
class NumericFeaturizer final : public Featurizer {
public:
    std::string_view type() const override { return "numeric"; }

    void fit(const Table& train) override {
        columns_.clear();
        means_.clear();
        for (std::size_t c = 0; c < train.schema.size(); ++c) {
            if (train.schema.columns[c].type != ColumnType::numeric) continue;
            double sum = 0.0;
            std::size_t n = 0;
            for (const auto& r : train.records) {
                if (r.values[c].is_number()) {
                    sum += r.values[c].as_number();
                    ++n;
                }
            }
            columns_.push_back(c);
            means_.push_back(n ? sum / static_cast<double>(n) : 0.0);
        }
    }

    std::size_t width() const override { return columns_.size(); }
    const std::vector<std::size_t>& attribution() const override { return columns_; }
    const std::vector<double>& means() const { return means_; }

    void transform_into(const Record& record, std::span<double> out) const override {
        for (std::size_t i = 0; i < columns_.size(); ++i) {
            const Value& v = record.values[columns_[i]];
            out[i] = v.is_number() ? v.as_number() : means_[i];
        }
    }

    nlohmann::json to_json() const override {
        return {{"type", "numeric"}, {"columns", columns_}, {"means", means_}};
    }

    static std::shared_ptr<NumericFeaturizer> from_json(const nlohmann::json& j) {
        auto f = std::make_shared<NumericFeaturizer>();
        f->columns_ = j.at("columns").get<std::vector<std::size_t>>();
        f->means_ = j.at("means").get<std::vector<double>>();
        return f;
    }

private:
    std::vector<std::size_t> columns_;
    std::vector<double> means_;
};

/// Hand-curated missing-value patterns. `sentinels` is the user-extensible part.
struct MissingPatterns {
    std::vector<std::string> null_words{"nan", "inf", "+inf", "-inf", "infinity", "-infinity",
                                        "n/a", "none", "null"};
    std::vector<std::string> sentinels{"-999", "?", "--"};
};

/// Bit positions produced per column by MissingFeaturizer.
enum MissingBit : std::size_t {
    missing_storage = 0,
    missing_blank = 1,
    missing_null_word = 2,
    missing_no_alnum = 3,
    missing_sentinel = 4,
    missing_bit_count = 5,
};

namespace detail {

inline std::string_view trim(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    return s;
}

inline bool iequals(std::string_view a, std::string_view b) {
    return a.size() == b.size() && std::equal(a.begin(), a.end(), b.begin(), [](char x, char y) {
               return std::tolower(static_cast<unsigned char>(x)) == std::tolower(static_cast<unsigned char>(y));
           });
}

inline bool matches_sentinel(const Value& v, std::string_view sentinel) {
    if (v.is_text()) return iequals(trim(v.as_text()), trim(sentinel));
    if (v.is_number()) {
        auto s = Value::parse_number(sentinel);
        return s && *s == v.as_number();
    }
    return false;
}

} // namespace detail

inline std::array<bool, missing_bit_count> missing_bits(const Value& v, const MissingPatterns& patterns) {
    std::array<bool, missing_bit_count> bits{};
    if (v.is_missing()) {
        bits[missing_storage] = true;
        return bits;
    }
    if (v.is_text()) {
        const auto t = detail::trim(v.as_text());
        bits[missing_blank] = t.empty();
        bits[missing_null_word] = std::any_of(patterns.null_words.begin(), patterns.null_words.end(),
                                              [&](const auto& w) { return detail::iequals(t, w); });
        bits[missing_no_alnum] = std::none_of(t.begin(), t.end(), [](char c) {
            return std::isalnum(static_cast<unsigned char>(c)) || (static_cast<unsigned char>(c) & 0x80);
        });
    }
    bits[missing_sentinel] = std::any_of(patterns.sentinels.begin(), patterns.sentinels.end(),
                                         [&](const auto& s) { return detail::matches_sentinel(v, s); });
    return bits;
}

inline bool is_missing_like(const Value& v, const MissingPatterns& patterns) {
    const auto bits = missing_bits(v, patterns);
    return std::any_of(bits.begin(), bits.end(), [](bool b) { return b; });
}

/// Five 0/1 features per column, one per missing pattern.
class MissingFeaturizer final : public Featurizer {
public:
    explicit MissingFeaturizer(MissingPatterns patterns = {}) : patterns_(std::move(patterns)) {}

    std::string_view type() const override { return "missing"; }

    void fit(const Table& train) override {
        attribution_.clear();
        for (std::size_t c = 0; c < train.schema.size(); ++c) {
            for (std::size_t b = 0; b < missing_bit_count; ++b) attribution_.push_back(c);
        }
    }

    std::size_t width() const override { return attribution_.size(); }
    const std::vector<std::size_t>& attribution() const override { return attribution_; }
    const MissingPatterns& patterns() const { return patterns_; }

    void transform_into(const Record& record, std::span<double> out) const override {
        const std::size_t columns = attribution_.size() / missing_bit_count;
        for (std::size_t c = 0; c < columns; ++c) {
            const auto bits = missing_bits(record.values[c], patterns_);
            for (std::size_t b = 0; b < missing_bit_count; ++b) out[c * missing_bit_count + b] = bits[b] ? 1.0 : 0.0;
        }
    }

    nlohmann::json to_json() const override {
        return {{"type", "missing"},
                {"null_words", patterns_.null_words},
                {"sentinels", patterns_.sentinels},
                {"columns", attribution_.size() / missing_bit_count}};
    }

private:
    MissingPatterns patterns_;
    std::vector<std::size_t> attribution_;
};

/// Attributes of `record` whose value breaks the column's type signature.
inline ColumnSet check_type_signature(const Record& record, const Schema& schema) {
    ColumnSet out;
    for (std::size_t c = 0; c < schema.size(); ++c) {
        if (violates_type_signature(record.values[c], schema.columns[c].type)) out.push_back(c);
    }
    return out;
}

/// Parsing/type featurizer. It produces no vector features; every violation is a
/// short-circuit hit.
class TypeSignatureFeaturizer final : public Featurizer {
public:
    std::string_view type() const override { return "type"; }
    void fit(const Table& train) override { schema_ = train.schema; }
    std::size_t width() const override { return 0; }
    const std::vector<std::size_t>& attribution() const override { return empty_; }
    void transform_into(const Record&, std::span<double>) const override {}
    ColumnSet short_circuit(const Record& record) const override { return check_type_signature(record, schema_); }
    nlohmann::json to_json() const override { return {{"type", "type"}, {"schema", schema_to_json(schema_)}}; }

private:
    Schema schema_;
    std::vector<std::size_t> empty_;
};

} // namespace boostclean
