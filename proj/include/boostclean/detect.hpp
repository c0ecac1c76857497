#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "embedding.hpp"
#include "featurize.hpp"
#include "isoforest.hpp"
#include "parallel.hpp"
#include "table.hpp"

namespace boostclean {

enum class PredicateKind { defined_rule, derived_rule };

inline std::string_view to_string(PredicateKind k) {
    return k == PredicateKind::defined_rule ? "defined-rule" : "derived-rule";
}

/// A fitted test over a record. `evaluate` returns the implicated attributes;
/// the record is a candidate dirty record iff the set is non-empty. All training
/// aggregates are captured at construction, so evaluation is pure.
class Predicate {
public:
    explicit Predicate(std::string id) : id_(std::move(id)) {}
    virtual ~Predicate() = default;

    const std::string& id() const { return id_; }
    virtual std::string_view type() const = 0;
    virtual PredicateKind kind() const = 0;
    virtual ColumnSet evaluate(const Record& record) const = 0;
    /// Every attribute `evaluate` can ever return.
    virtual ColumnSet scope() const = 0;
    virtual nlohmann::json params() const = 0;

    bool matches(const Record& record) const { return !evaluate(record).empty(); }

    nlohmann::json to_json() const { return {{"id", id_}, {"type", std::string(type())}, {"params", params()}}; }

private:
    std::string id_;
};

using PredicatePtr = std::shared_ptr<const Predicate>;

/// {column} iff any missing-value pattern matches the column's cell.
class MissingValuePredicate final : public Predicate {
public:
    MissingValuePredicate(std::string id, std::size_t column, MissingPatterns patterns)
        : Predicate(std::move(id)), column_(column), patterns_(std::move(patterns)) {}

    std::string_view type() const override { return "missing"; }
    PredicateKind kind() const override { return PredicateKind::defined_rule; }
    ColumnSet evaluate(const Record& r) const override {
        if (is_missing_like(r.values[column_], patterns_)) return {column_};
        return {};
    }
    ColumnSet scope() const override { return {column_}; }
    nlohmann::json params() const override {
        return {{"column", column_}, {"null_words", patterns_.null_words}, {"sentinels", patterns_.sentinels}};
    }

    static PredicatePtr from_json(const std::string& id, const nlohmann::json& p) {
        MissingPatterns pats;
        pats.null_words = p.at("null_words").get<std::vector<std::string>>();
        pats.sentinels = p.at("sentinels").get<std::vector<std::string>>();
        return std::make_shared<MissingValuePredicate>(id, p.at("column").get<std::size_t>(), std::move(pats));
    }

private:
    std::size_t column_;
    MissingPatterns patterns_;
};

/// {column} iff the cell breaks the column's type signature.
class TypeSignaturePredicate final : public Predicate {
public:
    TypeSignaturePredicate(std::string id, std::size_t column, ColumnType type)
        : Predicate(std::move(id)), column_(column), type_(type) {}

    std::string_view type() const override { return "type"; }
    PredicateKind kind() const override { return PredicateKind::defined_rule; }
    ColumnSet evaluate(const Record& r) const override {
        if (violates_type_signature(r.values[column_], type_)) return {column_};
        return {};
    }
    ColumnSet scope() const override { return {column_}; }
    nlohmann::json params() const override {
        return {{"column", column_}, {"column_type", std::string(to_string(type_))}};
    }

    static PredicatePtr from_json(const std::string& id, const nlohmann::json& p) {
        return std::make_shared<TypeSignaturePredicate>(id, p.at("column").get<std::size_t>(),
                                                        column_type_from_string(p.at("column_type").get<std::string>()));
    }

private:
    std::size_t column_;
    ColumnType type_;
};

/// |v - mean| > k * stddev per Numeric column, with train mean and stddev.
class ZScorePredicate final : public Predicate {
public:
    struct Stat {
        std::size_t column = 0;
        double mean = 0.0;
        double stddev = 0.0;
    };

    ZScorePredicate(std::string id, std::vector<Stat> stats, double k)
        : Predicate(std::move(id)), stats_(std::move(stats)), k_(k) {}

    std::string_view type() const override { return "zscore"; }
    PredicateKind kind() const override { return PredicateKind::defined_rule; }
    ColumnSet evaluate(const Record& r) const override {
        ColumnSet out;
        for (const auto& s : stats_) {
            const Value& v = r.values[s.column];
            if (v.is_number() && std::abs(v.as_number() - s.mean) > k_ * s.stddev) out.push_back(s.column);
        }
        return out;
    }
    ColumnSet scope() const override {
        ColumnSet out;
        for (const auto& s : stats_) out.push_back(s.column);
        return out;
    }
    nlohmann::json params() const override {
        nlohmann::json stats = nlohmann::json::array();
        for (const auto& s : stats_) stats.push_back({{"column", s.column}, {"mean", s.mean}, {"stddev", s.stddev}});
        return {{"k", k_}, {"stats", stats}};
    }
    const std::vector<Stat>& stats() const { return stats_; }

    static PredicatePtr from_json(const std::string& id, const nlohmann::json& p) {
        std::vector<Stat> stats;
        for (const auto& s : p.at("stats")) {
            stats.push_back({s.at("column").get<std::size_t>(), s.at("mean").get<double>(), s.at("stddev").get<double>()});
        }
        return std::make_shared<ZScorePredicate>(id, std::move(stats), p.at("k").get<double>());
    }

private:
    std::vector<Stat> stats_;
    double k_;
};

FeaturizerPtr featurizer_from_json(const nlohmann::json& j);

/// Isolation forest compiled over a featurizer: flagged records implicate the
/// attributes behind the forest's shallow splits along their paths.
class ForestPredicate final : public Predicate {
public:
    ForestPredicate(std::string id, FeaturizerPtr featurizer, IsoForest forest, std::size_t top_m,
                    std::size_t depth_limit)
        : Predicate(std::move(id)), featurizer_(std::move(featurizer)), forest_(std::move(forest)), top_m_(top_m),
          depth_limit_(depth_limit) {}

    std::string_view type() const override { return "forest"; }
    PredicateKind kind() const override { return PredicateKind::derived_rule; }

    AnomalyVerdict verdict(const Record& r) const {
        std::vector<double> x(featurizer_->width());
        featurizer_->transform_into(r, x);
        return isoforest_verdict(forest_, x, featurizer_->attribution(), top_m_, depth_limit_);
    }

    double score(const Record& r) const {
        std::vector<double> x(featurizer_->width());
        featurizer_->transform_into(r, x);
        return forest_.score(x);
    }

    ColumnSet evaluate(const Record& r) const override { return verdict(r).implicated; }

    ColumnSet scope() const override {
        ColumnSet out(featurizer_->attribution().begin(), featurizer_->attribution().end());
        std::sort(out.begin(), out.end());
        out.erase(std::unique(out.begin(), out.end()), out.end());
        return out;
    }

    nlohmann::json params() const override {
        return {{"featurizer", featurizer_->to_json()}, {"forest", forest_.to_json()}, {"top_m", top_m_},
                {"depth_limit", depth_limit_}};
    }

    const IsoForest& forest() const { return forest_; }
    const Featurizer& featurizer() const { return *featurizer_; }

    static PredicatePtr from_json(const std::string& id, const nlohmann::json& p) {
        return std::make_shared<ForestPredicate>(id, featurizer_from_json(p.at("featurizer")),
                                                 IsoForest::from_json(p.at("forest")), p.at("top_m").get<std::size_t>(),
                                                 p.at("depth_limit").get<std::size_t>());
    }

private:
    FeaturizerPtr featurizer_;
    IsoForest forest_;
    std::size_t top_m_;
    std::size_t depth_limit_;
};

/// Wraps a user function. Usable for detection and selection, but a deployed
/// model containing one can only be reloaded if the same type is registered.
class FunctionPredicate final : public Predicate {
public:
    using Fn = std::function<ColumnSet(const Record&)>;
    FunctionPredicate(std::string id, ColumnSet scope, Fn fn, nlohmann::json params = nlohmann::json::object())
        : Predicate(std::move(id)), scope_(std::move(scope)), fn_(std::move(fn)), params_(std::move(params)) {}

    std::string_view type() const override { return "function"; }
    PredicateKind kind() const override { return PredicateKind::defined_rule; }
    ColumnSet evaluate(const Record& r) const override { return fn_(r); }
    ColumnSet scope() const override { return scope_; }
    nlohmann::json params() const override { return params_; }

private:
    ColumnSet scope_;
    Fn fn_;
    nlohmann::json params_;
};

// ---------------------------------------------------------------------------
// Serialization registry

using PredicateFactory = std::function<PredicatePtr(const std::string& id, const nlohmann::json& params)>;

inline std::map<std::string, PredicateFactory>& predicate_registry() {
    static std::map<std::string, PredicateFactory> registry{
        {"missing", MissingValuePredicate::from_json},
        {"type", TypeSignaturePredicate::from_json},
        {"zscore", ZScorePredicate::from_json},
        {"forest", ForestPredicate::from_json},
    };
    return registry;
}

/// Makes a custom predicate type loadable from deployed models.
inline void register_predicate_type(const std::string& type, PredicateFactory factory) {
    predicate_registry()[type] = std::move(factory);
}

inline PredicatePtr predicate_from_json(const nlohmann::json& j) {
    const auto type = j.at("type").get<std::string>();
    auto it = predicate_registry().find(type);
    if (it == predicate_registry().end()) throw ValidationError("unknown predicate type: " + type);
    return it->second(j.at("id").get<std::string>(), j.at("params"));
}

inline FeaturizerPtr featurizer_from_json(const nlohmann::json& j) {
    const auto type = j.at("type").get<std::string>();
    if (type == "numeric") return NumericFeaturizer::from_json(j);
    if (type == "embedding") return EmbeddingFeaturizer::from_json(j);
    throw ValidationError("featurizer type cannot be restored: " + type);
}

// ---------------------------------------------------------------------------
// Detector generators

struct DetectOptions {
    bool missing = true;
    bool type = true;
    bool quantitative = true;
    bool embedding = true;
    MissingPatterns patterns;
    double zscore_k = 5.0;
    IsoForestParams forest;
    EmbeddingParams embedding_params;
    std::size_t threads = 1;
};

struct DetectorGenerator {
    std::string name;
    std::function<std::vector<PredicatePtr>(const Table& train, std::uint64_t seed)> generate;
};

/// One predicate per column with at least one missing-pattern hit in train.
inline std::vector<PredicatePtr> gen_missing(const Table& train, const MissingPatterns& patterns = {}) {
    std::vector<PredicatePtr> out;
    for (std::size_t c = 0; c < train.schema.size(); ++c) {
        const bool hit = std::any_of(train.records.begin(), train.records.end(),
                                     [&](const Record& r) { return is_missing_like(r.values[c], patterns); });
        if (hit) {
            out.push_back(std::make_shared<MissingValuePredicate>("missing:" + train.schema.columns[c].name, c, patterns));
        }
    }
    return out;
}

/// One predicate per signature-bearing column that has a violation in train.
inline std::vector<PredicatePtr> gen_type(const Table& train) {
    std::vector<PredicatePtr> out;
    for (std::size_t c = 0; c < train.schema.size(); ++c) {
        const auto t = train.schema.columns[c].type;
        if (t == ColumnType::categorical || t == ColumnType::text) continue;
        const bool hit = std::any_of(train.records.begin(), train.records.end(),
                                     [&](const Record& r) { return violates_type_signature(r.values[c], t); });
        if (hit) out.push_back(std::make_shared<TypeSignaturePredicate>("type:" + train.schema.columns[c].name, c, t));
    }
    return out;
}

inline std::shared_ptr<ZScorePredicate> make_zscore_predicate(const Table& train, double k) {
    std::vector<ZScorePredicate::Stat> stats;
    for (std::size_t c = 0; c < train.schema.size(); ++c) {
        if (train.schema.columns[c].type != ColumnType::numeric) continue;
        double sum = 0.0, sq = 0.0;
        std::size_t n = 0;
        for (const auto& r : train.records) {
            if (!r.values[c].is_number()) continue;
            sum += r.values[c].as_number();
            ++n;
        }
        if (n == 0) continue;
        const double mean = sum / static_cast<double>(n);
        for (const auto& r : train.records) {
            if (r.values[c].is_number()) sq += (r.values[c].as_number() - mean) * (r.values[c].as_number() - mean);
        }
        stats.push_back({c, mean, std::sqrt(sq / static_cast<double>(n))});
    }
    return std::make_shared<ZScorePredicate>("zscore:numeric", std::move(stats), k);
}

inline std::shared_ptr<ForestPredicate> make_forest_predicate(std::string id, FeaturizerPtr featurizer,
                                                              const Table& train, const IsoForestParams& params,
                                                              std::uint64_t seed, std::size_t threads = 1) {
    std::vector<std::vector<double>> points;
    points.reserve(train.rows());
    for (const auto& r : train.records) points.push_back(featurizer->transform(r).values);
    auto forest = fit_isoforest(points, params, seed, threads);
    return std::make_shared<ForestPredicate>(std::move(id), std::move(featurizer), std::move(forest), params.top_m,
                                             params.attribution_depth);
}

/// 5-sigma rule plus an isolation forest over the numeric featurizer.
inline std::vector<PredicatePtr> gen_quantitative(const Table& train, std::uint64_t seed, double k = 5.0,
                                                  const IsoForestParams& params = {}, std::size_t threads = 1) {
    std::vector<PredicatePtr> out;
    auto z = make_zscore_predicate(train, k);
    if (z->stats().empty() || train.rows() < 2) return out;
    out.push_back(z);
    auto numeric = std::make_shared<NumericFeaturizer>();
    numeric->fit(train);
    out.push_back(make_forest_predicate("iso:numeric", numeric, train, params, seed, threads));
    return out;
}

/// Trains record embeddings and compiles an isolation forest over them.
inline std::vector<PredicatePtr> gen_embedding(const Table& train, const EmbeddingParams& emb, std::uint64_t seed,
                                               const IsoForestParams& params = {}, std::size_t threads = 1) {
    EmbeddingParams p = emb;
    p.seed = seed;
    auto featurizer = std::make_shared<EmbeddingFeaturizer>(p);
    try {
        featurizer->fit(train);
    } catch (const ValidationError&) {
        return {};  // nothing to embed
    }
    if (train.rows() < 2) return {};
    return {make_forest_predicate("iso:embedding", featurizer, train, params, seed, threads)};
}

inline std::vector<DetectorGenerator> default_library(const DetectOptions& o = {}) {
    std::vector<DetectorGenerator> lib;
    if (o.missing) lib.push_back({"missing", [o](const Table& t, std::uint64_t) { return gen_missing(t, o.patterns); }});
    if (o.type) lib.push_back({"type", [](const Table& t, std::uint64_t) { return gen_type(t); }});
    if (o.quantitative) {
        lib.push_back({"quantitative", [o](const Table& t, std::uint64_t seed) {
                           return gen_quantitative(t, seed, o.zscore_k, o.forest, o.threads);
                       }});
    }
    if (o.embedding) {
        lib.push_back({"embedding", [o](const Table& t, std::uint64_t seed) {
                           return gen_embedding(t, o.embedding_params, seed, o.forest, o.threads);
                       }});
    }
    return lib;
}

struct PredicateReport {
    std::string id;
    PredicateKind kind = PredicateKind::defined_rule;
    std::size_t train_hits = 0;
    std::vector<std::uint64_t> sample_rows;  // at most 10
};

struct Detection {
    std::vector<PredicatePtr> predicates;
    std::vector<PredicateReport> reports;
};

inline std::vector<PredicateReport> hit_report(std::span<const PredicatePtr> predicates, const Table& train,
                                               std::size_t threads = 1) {
    std::vector<PredicateReport> reports(predicates.size());
    parallel_for(predicates.size(), threads, [&](std::size_t i) {
        auto& rep = reports[i];
        rep.id = predicates[i]->id();
        rep.kind = predicates[i]->kind();
        for (const auto& r : train.records) {
            if (!predicates[i]->matches(r)) continue;
            ++rep.train_hits;
            if (rep.sample_rows.size() < 10) rep.sample_rows.push_back(r.row_id);
        }
    });
    return reports;
}

/// Runs every generator on the training table and concatenates the predicates
/// in library order.
inline Detection generate_all(std::span<const DetectorGenerator> library, const Table& train, std::uint64_t seed,
                              std::size_t threads = 1) {
    std::vector<std::vector<PredicatePtr>> parts(library.size());
    parallel_for(library.size(), threads, [&](std::size_t i) { parts[i] = library[i].generate(train, seed); });
    Detection d;
    for (auto& p : parts) {
        for (auto& pred : p) d.predicates.push_back(std::move(pred));
    }
    d.reports = hit_report(d.predicates, train, threads);
    return d;
}

inline nlohmann::json to_json(const PredicateReport& r) {
    return {{"id", r.id}, {"kind", std::string(to_string(r.kind))}, {"train_hits", r.train_hits},
            {"sample_rows", r.sample_rows}};
}

} // namespace boostclean
