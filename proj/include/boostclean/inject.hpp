#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <nlohmann/json.hpp>

#include "detect.hpp"
#include "error.hpp"
#include "json_util.hpp"
#include "rng.hpp"
#include "table.hpp"

namespace boostclean {

enum class InjectionKind { missing_sentinel, numeric_outlier, header_row, swap_columns, rare_cooccurrence };

inline std::string_view to_string(InjectionKind k) {
    switch (k) {
    case InjectionKind::missing_sentinel: return "missing-sentinel";
    case InjectionKind::numeric_outlier: return "numeric-outlier";
    case InjectionKind::header_row: return "header-row";
    case InjectionKind::swap_columns: return "swap-columns";
    case InjectionKind::rare_cooccurrence: return "rare-co-occurrence";
    }
    return "";
}

inline InjectionKind injection_kind_from_string(std::string_view s) {
    for (auto k : {InjectionKind::missing_sentinel, InjectionKind::numeric_outlier, InjectionKind::header_row,
                   InjectionKind::swap_columns, InjectionKind::rare_cooccurrence}) {
        if (to_string(k) == s) return k;
    }
    throw ValidationError("unknown injection kind: " + std::string(s));
}

struct Injection {
    InjectionKind kind = InjectionKind::missing_sentinel;
    std::vector<std::string> columns;  // header-row: empty means every feature column
    double fraction = 0.1;
    std::optional<double> rho;           // probability a pick comes from the target class
    std::optional<Value> target_label;   // default: first label in file order
    double sigma = 10.0;                 // numeric-outlier distance in standard deviations
    std::string sentinel = "?";
};

struct InjectionSpec {
    std::vector<Injection> injections;
    std::uint64_t seed = 0;
};

struct InjectedCell {
    std::uint64_t row = 0;
    std::size_t column = 0;
    InjectionKind kind = InjectionKind::missing_sentinel;
};

struct InjectionResult {
    Table dirty;
    std::vector<InjectedCell> truth;  // sorted by (row, column); only cells that changed
    std::map<std::string, std::vector<std::uint64_t>> rows_by_kind;
};

inline Injection injection_from_json(const nlohmann::json& j) {
    static const std::set<std::string> allowed{"kind", "columns", "fraction", "rho", "target_label", "sigma", "sentinel"};
    for (const auto& [k, _] : j.items()) {
        if (!allowed.count(k)) throw ValidationError("injection: unknown key '" + k + "'");
    }
    Injection in;
    in.kind = injection_kind_from_string(j.at("kind").get<std::string>());
    if (j.contains("columns")) in.columns = j.at("columns").get<std::vector<std::string>>();
    if (j.contains("fraction")) in.fraction = j.at("fraction").get<double>();
    if (j.contains("rho") && !j.at("rho").is_null()) in.rho = j.at("rho").get<double>();
    if (j.contains("target_label") && !j.at("target_label").is_null()) {
        const auto& t = j.at("target_label");
        in.target_label = t.is_number() ? Value::number(t.get<double>()) : Value::parse(t.get<std::string>());
    }
    if (j.contains("sigma")) in.sigma = j.at("sigma").get<double>();
    if (j.contains("sentinel")) in.sentinel = j.at("sentinel").get<std::string>();
    return in;
}

inline InjectionSpec injection_spec_from_json(const nlohmann::json& j) {
    for (const auto& [k, _] : j.items()) {
        if (k != "injections" && k != "seed") throw ValidationError("injection spec: unknown key '" + k + "'");
    }
    InjectionSpec s;
    if (j.contains("seed")) s.seed = j.at("seed").get<std::uint64_t>();
    for (const auto& ji : j.at("injections")) s.injections.push_back(injection_from_json(ji));
    return s;
}

namespace detail {

/// round(fraction * N) distinct rows; with rho, each pick comes from the target
/// class with probability rho while that pool lasts.
inline std::vector<std::size_t> pick_rows(const Table& t, const Injection& in, Rng& rng) {
    const std::size_t n = t.rows();
    const auto count = static_cast<std::size_t>(std::llround(in.fraction * static_cast<double>(n)));
    if (count > n) throw ValidationError("injection: fraction selects more rows than exist");
    if (!in.rho) {
        std::vector<std::size_t> all(n);
        for (std::size_t i = 0; i < n; ++i) all[i] = i;
        rng.shuffle(std::span<std::size_t>(all));
        all.resize(count);
        std::sort(all.begin(), all.end());
        return all;
    }
    Value target = in.target_label ? *in.target_label : Value::missing();
    if (target.is_missing()) {
        const auto labels = label_order(t);
        if (labels.empty()) throw ValidationError("injection: rho needs labelled rows");
        target = labels.front();
    }
    std::vector<std::size_t> in_class, rest;
    for (std::size_t i = 0; i < n; ++i) (t.records[i].label == target ? in_class : rest).push_back(i);
    rng.shuffle(std::span<std::size_t>(in_class));
    rng.shuffle(std::span<std::size_t>(rest));
    std::vector<std::size_t> out;
    std::size_t a = 0, b = 0;
    for (std::size_t k = 0; k < count; ++k) {
        const bool want_target = rng.uniform() < *in.rho;
        if ((want_target && a < in_class.size()) || b >= rest.size()) {
            out.push_back(in_class[a++]);
        } else {
            out.push_back(rest[b++]);
        }
    }
    std::sort(out.begin(), out.end());
    return out;
}

inline std::vector<std::size_t> resolve_columns(const Schema& s, const std::vector<std::string>& names) {
    std::vector<std::size_t> out;
    for (const auto& n : names) out.push_back(s.index_of(n));
    return out;
}

/// The most frequent value pair of columns (a, b) that never co-occurs in `t`.
inline std::pair<Value, Value> rare_pair(const Table& t, std::size_t a, std::size_t b) {
    std::unordered_map<Value, std::size_t, ValueHash> ca, cb;
    std::set<std::pair<std::string, std::string>> seen;
    std::vector<Value> va, vb;
    for (const auto& r : t.records) {
        if (ca[r.values[a]]++ == 0) va.push_back(r.values[a]);
        if (cb[r.values[b]]++ == 0) vb.push_back(r.values[b]);
        seen.emplace(r.values[a].str(), r.values[b].str());
    }
    std::stable_sort(va.begin(), va.end(), [&](const Value& x, const Value& y) { return ca[x] > ca[y]; });
    std::stable_sort(vb.begin(), vb.end(), [&](const Value& x, const Value& y) { return cb[x] > cb[y]; });
    std::optional<std::pair<Value, Value>> best;
    std::size_t best_score = 0;
    for (const auto& x : va) {
        if (x.is_missing()) continue;
        for (const auto& y : vb) {
            if (y.is_missing() || seen.count({x.str(), y.str()})) continue;
            const std::size_t score = std::min(ca[x], cb[y]);
            if (!best || score > best_score) {
                best = std::make_pair(x, y);
                best_score = score;
            }
        }
    }
    if (!best) throw ValidationError("injection: every value pair already co-occurs");
    return *best;
}

} // namespace detail

/// Applies every injection in order to a copy of `clean`. The label column is
/// never touched. Ground truth lists exactly the cells that end up different.
inline InjectionResult inject(const Table& clean, const InjectionSpec& spec) {
    InjectionResult res;
    res.dirty = clean;
    Table& t = res.dirty;
    std::map<std::pair<std::uint64_t, std::size_t>, InjectionKind> writer;
    Rng rng(spec.seed);
    for (const auto& in : spec.injections) {
        if (!(in.fraction > 0.0 && in.fraction < 1.0)) throw ValidationError("injection: fraction must lie in (0, 1)");
        if (in.rho && !(*in.rho >= 0.0 && *in.rho <= 1.0)) throw ValidationError("injection: rho must lie in [0, 1]");
        auto cols = detail::resolve_columns(t.schema, in.columns);
        auto rows = detail::pick_rows(t, in, rng);
        auto mark = [&](std::size_t row, std::size_t col) { writer[{t.records[row].row_id, col}] = in.kind; };
        auto& kind_rows = res.rows_by_kind[std::string(to_string(in.kind))];
        for (auto r : rows) kind_rows.push_back(t.records[r].row_id);

        switch (in.kind) {
        case InjectionKind::missing_sentinel: {
            if (cols.empty()) throw ValidationError("missing-sentinel: no target column");
            const Value v = Value::parse(in.sentinel);
            for (auto r : rows) {
                for (auto c : cols) {
                    t.records[r].values[c] = v;
                    mark(r, c);
                }
            }
            break;
        }
        case InjectionKind::numeric_outlier: {
            if (cols.empty()) throw ValidationError("numeric-outlier: no target column");
            for (auto c : cols) {
                double sum = 0.0, sq = 0.0;
                std::size_t n = 0;
                for (const auto& rec : clean.records) {
                    if (rec.values[c].is_number()) {
                        sum += rec.values[c].as_number();
                        ++n;
                    }
                }
                if (n == 0) throw ValidationError("numeric-outlier: column has no numbers");
                const double mean = sum / static_cast<double>(n);
                for (const auto& rec : clean.records) {
                    if (rec.values[c].is_number()) sq += std::pow(rec.values[c].as_number() - mean, 2);
                }
                const double sd = std::sqrt(sq / static_cast<double>(n));
                for (auto r : rows) {
                    const double sign = rng.uniform() < 0.5 ? -1.0 : 1.0;
                    t.records[r].values[c] = Value::number(mean + sign * in.sigma * (sd > 0 ? sd : 1.0));
                    mark(r, c);
                }
            }
            break;
        }
        case InjectionKind::header_row: {
            if (cols.empty()) {
                for (std::size_t c = 0; c < t.schema.size(); ++c) cols.push_back(c);
            }
            for (auto r : rows) {
                for (auto c : cols) {
                    t.records[r].values[c] = Value::text(t.schema.columns[c].name);
                    mark(r, c);
                }
            }
            break;
        }
        case InjectionKind::swap_columns: {
            if (cols.size() != 2) throw ValidationError("swap-columns: needs exactly two columns");
            for (auto r : rows) {
                std::swap(t.records[r].values[cols[0]], t.records[r].values[cols[1]]);
                mark(r, cols[0]);
                mark(r, cols[1]);
            }
            break;
        }
        case InjectionKind::rare_cooccurrence: {
            if (cols.size() != 2) throw ValidationError("rare-co-occurrence: needs exactly two columns");
            const auto [a, b] = detail::rare_pair(clean, cols[0], cols[1]);
            for (auto r : rows) {
                t.records[r].values[cols[0]] = a;
                t.records[r].values[cols[1]] = b;
                mark(r, cols[0]);
                mark(r, cols[1]);
            }
            break;
        }
        }
    }
    std::unordered_map<std::uint64_t, std::size_t> pos;
    for (std::size_t i = 0; i < clean.rows(); ++i) pos[clean.records[i].row_id] = i;
    for (const auto& [key, kind] : writer) {
        const auto i = pos.at(key.first);
        if (!(clean.records[i].values[key.second] == t.records[i].values[key.second])) {
            res.truth.push_back({key.first, key.second, kind});
        }
    }
    return res;
}

inline nlohmann::json truth_to_json(const InjectionResult& r, const Schema& s, std::uint64_t seed) {
    nlohmann::json cells = nlohmann::json::array();
    for (const auto& c : r.truth) {
        cells.push_back({{"row", c.row}, {"column", s.columns[c.column].name}, {"kind", std::string(to_string(c.kind))}});
    }
    return {{"seed", seed}, {"cells", std::move(cells)}, {"rows_by_kind", r.rows_by_kind}};
}

/// Fraction of ground-truth cells that some predicate implicates on the dirty table.
inline double cell_recall(std::span<const PredicatePtr> predicates, const Table& dirty,
                          std::span<const InjectedCell> truth) {
    if (truth.empty()) return 1.0;
    std::unordered_map<std::uint64_t, std::size_t> pos;
    for (std::size_t i = 0; i < dirty.rows(); ++i) pos[dirty.records[i].row_id] = i;
    std::map<std::uint64_t, std::set<std::size_t>> flagged;
    std::size_t hit = 0;
    for (const auto& cell : truth) {
        auto it = flagged.find(cell.row);
        if (it == flagged.end()) {
            std::set<std::size_t> cols;
            const auto& rec = dirty.records[pos.at(cell.row)];
            for (const auto& p : predicates) {
                for (auto c : p->evaluate(rec)) cols.insert(c);
            }
            it = flagged.emplace(cell.row, std::move(cols)).first;
        }
        hit += it->second.count(cell.column);
    }
    return static_cast<double>(hit) / static_cast<double>(truth.size());
}

} // namespace boostclean
