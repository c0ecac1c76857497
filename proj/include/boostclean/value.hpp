#pragma once

#include <charconv>
#include <cmath>
#include <cstddef>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <system_error>
#include <variant>
#include <vector>

namespace boostclean {

/// A single cell: Missing, a finite Number, or verbatim Text.
class Value {
public:
    struct Missing {
        bool operator==(const Missing&) const = default;
    };

    Value() = default;
    static Value missing() { return Value{}; }
    static Value number(double v) { return Value{Storage{std::in_place_index<1>, v}}; }
    static Value text(std::string s) { return Value{Storage{std::in_place_index<2>, std::move(s)}}; }

    /// Classifies a raw (unquoted) cell. Empty -> Missing, finite float -> Number,
    /// everything else (including "nan", "inf") -> Text.
    static Value parse(std::string_view raw) {
        if (raw.empty()) {
            return missing();
        }
        if (auto v = parse_number(raw)) {
            return number(*v);
        }
        return text(std::string(raw));
    }

    /// Strict float parse that tolerates surrounding blanks and rejects NaN/Inf.
    static std::optional<double> parse_number(std::string_view raw) {
        std::size_t b = 0;
        std::size_t e = raw.size();
        while (b < e && (raw[b] == ' ' || raw[b] == '\t')) ++b;
        while (e > b && (raw[e - 1] == ' ' || raw[e - 1] == '\t')) --e;
        if (b == e) {
            return std::nullopt;
        }
        std::string_view s = raw.substr(b, e - b);
        if (s.front() == '+') {
            s.remove_prefix(1);
            if (s.empty() || s.front() == '-' || s.front() == '+') return std::nullopt;
        }
        double v = 0.0;
        const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
        if (ec != std::errc{} || ptr != s.data() + s.size() || !std::isfinite(v)) {
            return std::nullopt;
        }
        return v;
    }

    bool is_missing() const { return storage_.index() == 0; }
    bool is_number() const { return storage_.index() == 1; }
    bool is_text() const { return storage_.index() == 2; }

    double as_number() const { return std::get<1>(storage_); }
    const std::string& as_text() const { return std::get<2>(storage_); }

    /// Canonical textual form: "" for Missing, shortest round-trip digits for Number.
    std::string str() const {
        switch (storage_.index()) {
        case 0:
            return {};
        case 1:
            return format_number(as_number());
        default:
            return as_text();
        }
    }

    static std::string format_number(double v) {
        char buf[64];
        const auto res = std::to_chars(buf, buf + sizeof buf, v);
        return std::string(buf, res.ptr);
    }

    bool operator==(const Value& other) const = default;

    std::size_t hash() const {
        switch (storage_.index()) {
        case 0:
            return 0x51ed27u;
        case 1:
            return std::hash<double>{}(as_number()) ^ 0x9e3779b9u;
        default:
            return std::hash<std::string>{}(as_text());
        }
    }

private:
    using Storage = std::variant<Missing, double, std::string>;
    explicit Value(Storage s) : storage_(std::move(s)) {}

    Storage storage_;
};

struct ValueHash {
    std::size_t operator()(const Value& v) const { return v.hash(); }
};

/// Sorted, duplicate-free list of column indices. Predicates report the
/// attributes they implicate with this type.
using ColumnSet = std::vector<std::size_t>;

} // namespace boostclean
