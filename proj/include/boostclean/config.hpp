#pragma once

#include <cstdint>
#include <fstream>
#include <iterator>
#include <optional>
#include <set>
#include <string>

#include <nlohmann/json.hpp>

#include "boost.hpp"
#include "detect.hpp"
#include "error.hpp"
#include "model.hpp"
#include "table.hpp"

namespace boostclean {

/// Everything a command needs. Every field starts at its module default.
struct Config {
    std::uint64_t seed = 0;
    std::size_t budget = 5;
    double test_fraction = 0.2;
    std::size_t threads = 1;
    std::optional<std::string> label_column;  // default: the last CSV column
    char delimiter = ',';
    bool never_worse = true;
    TypeInferenceOptions types;
    DetectOptions detect;
    RepairLibrary repairs;
    ForestHyperparams classifier;
};

namespace detail {

inline void reject_unknown(const nlohmann::json& j, const std::set<std::string>& allowed, const std::string& where) {
    if (!j.is_object()) throw ValidationError("config: " + where + " must be an object");
    for (const auto& [key, _] : j.items()) {
        if (!allowed.count(key)) throw ValidationError("config: unknown key '" + where + key + "'");
    }
}

template <class T>
void read(const nlohmann::json& j, const char* key, T& out, const std::string& where) {
    if (!j.contains(key)) return;
    try {
        out = j.at(key).get<T>();
    } catch (const nlohmann::json::exception&) {
        throw ValidationError("config: bad value for '" + where + key + "'");
    }
}

} // namespace detail

/// Applies a config document on top of `base`. Unknown keys are errors.
inline Config apply_config(Config c, const nlohmann::json& j) {
    using detail::read;
    detail::reject_unknown(j,
                           {"seed", "budget", "test_fraction", "threads", "label_column", "delimiter", "never_worse",
                            "types", "detectors", "repairs", "classifier"},
                           "");
    read(j, "seed", c.seed, "");
    read(j, "budget", c.budget, "");
    read(j, "test_fraction", c.test_fraction, "");
    read(j, "threads", c.threads, "");
    read(j, "never_worse", c.never_worse, "");
    if (j.contains("label_column")) {
        if (j["label_column"].is_null()) {
            c.label_column.reset();
        } else {
            std::string s;
            read(j, "label_column", s, "");
            c.label_column = s;
        }
    }
    if (j.contains("delimiter")) {
        std::string d;
        read(j, "delimiter", d, "");
        if (d.size() != 1) throw ValidationError("config: delimiter must be one character");
        c.delimiter = d[0];
    }
    if (j.contains("types")) {
        const auto& t = j["types"];
        detail::reject_unknown(t,
                               {"numeric_fraction", "date_fraction", "address_fraction", "categorical_min_distinct",
                                "categorical_row_fraction"},
                               "types.");
        read(t, "numeric_fraction", c.types.numeric_fraction, "types.");
        read(t, "date_fraction", c.types.date_fraction, "types.");
        read(t, "address_fraction", c.types.address_fraction, "types.");
        read(t, "categorical_min_distinct", c.types.categorical_min_distinct, "types.");
        read(t, "categorical_row_fraction", c.types.categorical_row_fraction, "types.");
    }
    if (j.contains("detectors")) {
        const auto& d = j["detectors"];
        detail::reject_unknown(d,
                               {"missing", "type", "quantitative", "embedding", "null_words", "sentinels", "zscore_k",
                                "forest", "embedding_params"},
                               "detectors.");
        read(d, "missing", c.detect.missing, "detectors.");
        read(d, "type", c.detect.type, "detectors.");
        read(d, "quantitative", c.detect.quantitative, "detectors.");
        read(d, "embedding", c.detect.embedding, "detectors.");
        read(d, "null_words", c.detect.patterns.null_words, "detectors.");
        read(d, "sentinels", c.detect.patterns.sentinels, "detectors.");
        read(d, "zscore_k", c.detect.zscore_k, "detectors.");
        if (d.contains("forest")) {
            const auto& f = d["forest"];
            const std::string w = "detectors.forest.";
            detail::reject_unknown(f, {"n_trees", "sample_size", "contamination", "top_m", "attribution_depth"}, w);
            read(f, "n_trees", c.detect.forest.n_trees, w);
            read(f, "sample_size", c.detect.forest.sample_size, w);
            read(f, "contamination", c.detect.forest.contamination, w);
            read(f, "top_m", c.detect.forest.top_m, w);
            read(f, "attribution_depth", c.detect.forest.attribution_depth, w);
        }
        if (d.contains("embedding_params")) {
            const auto& e = d["embedding_params"];
            const std::string w = "detectors.embedding_params.";
            detail::reject_unknown(e, {"dim", "epochs", "negatives", "learning_rate", "min_count"}, w);
            read(e, "dim", c.detect.embedding_params.dim, w);
            read(e, "epochs", c.detect.embedding_params.epochs, w);
            read(e, "negatives", c.detect.embedding_params.negatives, w);
            read(e, "learning_rate", c.detect.embedding_params.learning_rate, w);
            read(e, "min_count", c.detect.embedding_params.min_count, w);
        }
    }
    if (j.contains("repairs")) {
        const auto& r = j["repairs"];
        detail::reject_unknown(r,
                               {"impute_mean", "impute_median", "impute_mode", "discard", "default_prediction",
                                "prediction_imputation"},
                               "repairs.");
        read(r, "impute_mean", c.repairs.impute_mean, "repairs.");
        read(r, "impute_median", c.repairs.impute_median, "repairs.");
        read(r, "impute_mode", c.repairs.impute_mode, "repairs.");
        read(r, "discard", c.repairs.discard, "repairs.");
        read(r, "default_prediction", c.repairs.default_prediction, "repairs.");
        read(r, "prediction_imputation", c.repairs.prediction_imputation, "repairs.");
    }
    if (j.contains("classifier")) {
        const auto& m = j["classifier"];
        detail::reject_unknown(m, {"n_trees", "max_depth", "min_leaf", "text_top_k"}, "classifier.");
        read(m, "n_trees", c.classifier.n_trees, "classifier.");
        read(m, "max_depth", c.classifier.max_depth, "classifier.");
        read(m, "min_leaf", c.classifier.min_leaf, "classifier.");
        read(m, "text_top_k", c.classifier.text_top_k, "classifier.");
    }
    if (!(c.test_fraction > 0.0 && c.test_fraction < 1.0)) throw ValidationError("config: test_fraction must lie in (0, 1)");
    if (c.threads == 0) throw ValidationError("config: threads must be positive");
    c.detect.threads = c.threads;
    return c;
}

inline Config parse_config(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ValidationError(std::string("config: ") + e.what());
    }
    return apply_config(Config{}, j);
}

inline Config load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot read config " + path);
    return parse_config(std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>()));
}

} // namespace boostclean
