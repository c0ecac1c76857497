#pragma once

#include <cstddef>
#include <fstream>
#include <iterator>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "error.hpp"

namespace boostclean::csv {

/// One parsed field. `quoted` distinguishes `""` (empty text) from an empty cell.
struct Field {
    std::string text;
    bool quoted = false;
};

using Row = std::vector<Field>;

/// RFC-4180 reader: quoted fields, doubled quotes, embedded delimiters and
/// newlines, LF or CRLF line endings. Blank lines are skipped.
inline std::vector<Row> parse(std::string_view data, char delimiter = ',') {
    std::vector<Row> rows;
    Row row;
    Field field;
    bool in_quotes = false;
    bool field_started = false;

    auto end_field = [&] {
        row.push_back(std::move(field));
        field = Field{};
        field_started = false;
    };
    auto end_row = [&] {
        const bool blank = row.empty() && !field_started && field.text.empty() && !field.quoted;
        if (!blank) {
            end_field();
            rows.push_back(std::move(row));
        }
        row.clear();
        field = Field{};
        field_started = false;
    };

    for (std::size_t i = 0; i < data.size(); ++i) {
        const char c = data[i];
        if (in_quotes) {
            if (c == '"') {
                if (i + 1 < data.size() && data[i + 1] == '"') {
                    field.text.push_back('"');
                    ++i;
                } else {
                    in_quotes = false;
                }
            } else {
                field.text.push_back(c);
            }
            continue;
        }
        if (c == '"' && !field_started) {
            in_quotes = true;
            field.quoted = true;
            field_started = true;
        } else if (c == delimiter) {
            end_field();
        } else if (c == '\n') {
            end_row();
        } else if (c == '\r') {
            if (i + 1 < data.size() && data[i + 1] == '\n') {
                ++i;
            }
            end_row();
        } else {
            field.text.push_back(c);
            field_started = true;
        }
    }
    if (in_quotes) {
        throw ValidationError("csv: unterminated quoted field");
    }
    end_row();
    return rows;
}

inline std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw ValidationError("cannot read file: " + path);
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

/// Quotes a field when it contains the delimiter, a quote, CR/LF, or when
/// `force` is set (used for empty text so it does not read back as Missing).
inline void write_field(std::string& out, std::string_view text, char delimiter, bool force = false) {
    const bool needs = force || text.find_first_of(std::string{delimiter, '"', '\n', '\r'}) != std::string_view::npos;
    if (!needs) {
        out.append(text);
        return;
    }
    out.push_back('"');
    for (char c : text) {
        if (c == '"') out.push_back('"');
        out.push_back(c);
    }
    out.push_back('"');
}

} // namespace boostclean::csv
