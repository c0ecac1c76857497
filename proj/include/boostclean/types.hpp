#pragma once

#include <algorithm>
#include <array>
#include <cctype>
#include <string>
#include <string_view>
#include <vector>

#include "error.hpp"
#include "value.hpp"

namespace boostclean {

enum class ColumnType { numeric, categorical, text, date, address };

inline std::string_view to_string(ColumnType t) {
    switch (t) {
    case ColumnType::numeric: return "numeric";
    case ColumnType::categorical: return "categorical";
    case ColumnType::text: return "text";
    case ColumnType::date: return "date";
    case ColumnType::address: return "address";
    }
    return "text";
}

inline ColumnType column_type_from_string(std::string_view s) {
    for (auto t : {ColumnType::numeric, ColumnType::categorical, ColumnType::text, ColumnType::date,
                   ColumnType::address}) {
        if (to_string(t) == s) return t;
    }
    throw ValidationError("unknown column type: " + std::string(s));
}

namespace detail {

inline std::string lower(std::string_view s) {
    std::string out(s);
    for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return out;
}

struct Token {
    std::string text;
    bool numeric = false;
};

inline std::vector<Token> alnum_tokens(std::string_view s) {
    std::vector<Token> out;
    std::string cur;
    bool cur_digit = false;
    auto flush = [&] {
        if (!cur.empty()) out.push_back({cur, cur_digit});
        cur.clear();
    };
    for (char ch : s) {
        const auto c = static_cast<unsigned char>(ch);
        if (std::isdigit(c)) {
            if (!cur.empty() && !cur_digit) flush();
            cur_digit = true;
            cur.push_back(ch);
        } else if (std::isalpha(c)) {
            if (!cur.empty() && cur_digit) flush();
            cur_digit = false;
            cur.push_back(static_cast<char>(std::tolower(c)));
        } else {
            flush();
        }
    }
    flush();
    return out;
}

inline int month_number(std::string_view word) {
    static constexpr std::array<std::string_view, 12> names{
        "january", "february", "march", "april", "may", "june",
        "july", "august", "september", "october", "november", "december"};
    for (std::size_t i = 0; i < names.size(); ++i) {
        if (word == names[i] || word == names[i].substr(0, 3) || (i == 8 && word == "sept")) {
            return static_cast<int>(i) + 1;
        }
    }
    return 0;
}

inline bool is_date_filler(std::string_view word) {
    static constexpr std::array<std::string_view, 21> words{
        "mon", "monday", "tue", "tues", "tuesday", "wed", "wednesday", "thu", "thur", "thursday", "fri",
        "friday", "sat", "saturday", "sun", "sunday", "am", "pm", "t", "z", "utc"};
    return std::find(words.begin(), words.end(), word) != words.end() || word == "gmt" || word == "st" ||
           word == "nd" || word == "rd" || word == "th";
}

inline bool is_year(const Token& t, bool allow_two_digit) {
    if (!t.numeric) return false;
    if (t.text.size() == 4) {
        const int y = std::stoi(t.text);
        return y >= 1000 && y <= 2999;
    }
    return allow_two_digit && t.text.size() == 2;
}

inline bool in_range(const Token& t, int lo, int hi) {
    if (!t.numeric || t.text.size() > 2) return false;
    const int v = std::stoi(t.text);
    return v >= lo && v <= hi;
}

} // namespace detail

/// True when the text carries a recognizable (month, day, year) triple, e.g.
/// "2015-09-10", "9/10/15", "Sep 10, 2015" or "10 September 2015 14:00".
inline bool has_date_components(std::string_view s) {
    using detail::Token;
    const auto tokens = detail::alnum_tokens(s);
    std::vector<Token> nums;
    int month_word = 0;
    for (const auto& t : tokens) {
        if (t.numeric) {
            nums.push_back(t);
        } else if (int m = detail::month_number(t.text); m != 0 && month_word == 0) {
            month_word = m;
        } else if (!detail::is_date_filler(t.text)) {
            return false;
        }
    }
    if (month_word != 0) {
        // month name + day + year in either order
        if (nums.size() < 2) return false;
        return (detail::in_range(nums[0], 1, 31) && detail::is_year(nums[1], false)) ||
               (detail::is_year(nums[0], false) && detail::in_range(nums[1], 1, 31));
    }
    if (nums.size() < 3) return false;
    const Token& a = nums[0];
    const Token& b = nums[1];
    const Token& c = nums[2];
    if (detail::is_year(a, false) && detail::in_range(b, 1, 12) && detail::in_range(c, 1, 31)) return true;
    if (detail::is_year(c, true) && ((detail::in_range(a, 1, 12) && detail::in_range(b, 1, 31)) ||
                                     (detail::in_range(a, 1, 31) && detail::in_range(b, 1, 12)))) {
        return true;
    }
    return false;
}

/// True when the text has a street part ("<number> <name words>") followed by a
/// comma-separated city part, e.g. "12 Main St, Springfield, IL".
inline bool has_address_components(std::string_view s) {
    const auto comma = s.find(',');
    if (comma == std::string_view::npos) return false;
    const auto street = detail::alnum_tokens(s.substr(0, comma));
    if (street.size() < 2 || !street.front().numeric) return false;
    const bool named = std::any_of(street.begin() + 1, street.end(), [](const auto& t) { return !t.numeric; });
    if (!named) return false;
    const auto rest = detail::alnum_tokens(s.substr(comma + 1));
    return std::any_of(rest.begin(), rest.end(), [](const auto& t) { return !t.numeric && t.text.size() >= 2; });
}

/// Whether a single cell breaks its column's type signature. Missing cells never
/// do (they are the missing-value detector's business); categorical and text
/// columns have no signature.
inline bool violates_type_signature(const Value& v, ColumnType type) {
    if (v.is_missing()) return false;
    switch (type) {
    case ColumnType::numeric:
        return !v.is_number();
    case ColumnType::date:
        return !v.is_text() || !has_date_components(v.as_text());
    case ColumnType::address:
        return !v.is_text() || !has_address_components(v.as_text());
    case ColumnType::categorical:
    case ColumnType::text:
        return false;
    }
    return false;
}

} // namespace boostclean
