#pragma once

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <numeric>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include <nlohmann/json.hpp>

#include "error.hpp"
#include "json_util.hpp"
#include "parallel.hpp"
#include "rng.hpp"
#include "table.hpp"

namespace boostclean {

/// Black-box classifier over schema-conforming records.
class Classifier {
public:
    virtual ~Classifier() = default;
    virtual std::string_view type() const = 0;
    virtual Value predict(const Record& record) const = 0;
    /// Labels seen in training, in order of first appearance.
    virtual const std::vector<Value>& labels() const = 0;
    virtual nlohmann::json to_json() const = 0;
};

using ClassifierPtr = std::shared_ptr<const Classifier>;

/// train(table, seed) -> classifier. Must be deterministic under the seed.
using TrainProcedure = std::function<ClassifierPtr(const Table& train, std::uint64_t seed)>;

struct ForestHyperparams {
    std::size_t n_trees = 25;
    std::size_t max_depth = 8;
    std::size_t min_leaf = 2;
    std::size_t text_top_k = 100;
};

/// Record -> dense vector: Numeric pass-through (non-numbers become the train
/// mean), Categorical one-hot over the train vocabulary, Text/Date/Address
/// bag-of-words over the top-K train tokens of the column.
class TabularEncoder {
public:
    struct Block {
        std::size_t column = 0;
        enum class Kind { numeric, one_hot, bag_of_words } kind = Kind::numeric;
        double mean = 0.0;
        std::vector<std::string> vocabulary;
        std::unordered_map<std::string, std::size_t> lookup;
        std::size_t offset = 0;
    };

    static std::vector<std::string> words(std::string_view s) {
        std::vector<std::string> out;
        std::string cur;
        for (char ch : s) {
            const auto c = static_cast<unsigned char>(ch);
            if (std::isalnum(c) || (c & 0x80)) {
                cur.push_back(static_cast<char>(std::tolower(c)));
            } else if (!cur.empty()) {
                out.push_back(std::move(cur));
                cur.clear();
            }
        }
        if (!cur.empty()) out.push_back(std::move(cur));
        return out;
    }

    void fit(const Table& train, std::size_t text_top_k) {
        blocks_.clear();
        width_ = 0;
        for (std::size_t c = 0; c < train.schema.size(); ++c) {
            Block b;
            b.column = c;
            b.offset = width_;
            switch (train.schema.columns[c].type) {
            case ColumnType::numeric: {
                b.kind = Block::Kind::numeric;
                double sum = 0.0;
                std::size_t n = 0;
                for (const auto& r : train.records) {
                    if (r.values[c].is_number()) {
                        sum += r.values[c].as_number();
                        ++n;
                    }
                }
                b.mean = n ? sum / static_cast<double>(n) : 0.0;
                break;
            }
            case ColumnType::categorical: {
                b.kind = Block::Kind::one_hot;
                for (const auto& r : train.records) {
                    if (r.values[c].is_missing()) continue;
                    auto key = r.values[c].str();
                    if (b.lookup.emplace(key, b.vocabulary.size()).second) b.vocabulary.push_back(std::move(key));
                }
                break;
            }
            default: {
                b.kind = Block::Kind::bag_of_words;
                std::unordered_map<std::string, std::pair<std::size_t, std::size_t>> counts;  // word -> (count, first)
                std::size_t order = 0;
                for (const auto& r : train.records) {
                    if (r.values[c].is_missing()) continue;
                    for (auto& w : words(r.values[c].str())) {
                        auto [it, fresh] = counts.try_emplace(std::move(w), 0, order);
                        if (fresh) ++order;
                        ++it->second.first;
                    }
                }
                std::vector<std::pair<std::string, std::pair<std::size_t, std::size_t>>> ranked(counts.begin(),
                                                                                                counts.end());
                std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
                    if (a.second.first != b.second.first) return a.second.first > b.second.first;
                    return a.second.second < b.second.second;
                });
                for (std::size_t i = 0; i < ranked.size() && i < text_top_k; ++i) {
                    b.lookup.emplace(ranked[i].first, b.vocabulary.size());
                    b.vocabulary.push_back(ranked[i].first);
                }
                break;
            }
            }
            width_ += b.kind == Block::Kind::numeric ? 1 : b.vocabulary.size();
            blocks_.push_back(std::move(b));
        }
    }

    std::size_t width() const { return width_; }

    void encode(const Record& r, std::span<double> out) const {
        std::fill(out.begin(), out.end(), 0.0);
        for (const auto& b : blocks_) {
            const Value& v = r.values[b.column];
            switch (b.kind) {
            case Block::Kind::numeric:
                out[b.offset] = v.is_number() ? v.as_number() : b.mean;
                break;
            case Block::Kind::one_hot:
                if (!v.is_missing()) {
                    auto it = b.lookup.find(v.str());
                    if (it != b.lookup.end()) out[b.offset + it->second] = 1.0;
                }
                break;
            case Block::Kind::bag_of_words:
                if (!v.is_missing()) {
                    for (const auto& w : words(v.str())) {
                        auto it = b.lookup.find(w);
                        if (it != b.lookup.end()) out[b.offset + it->second] += 1.0;
                    }
                }
                break;
            }
        }
    }

    nlohmann::json to_json() const {
        nlohmann::json blocks = nlohmann::json::array();
        for (const auto& b : blocks_) {
            blocks.push_back({{"column", b.column}, {"kind", static_cast<int>(b.kind)}, {"mean", b.mean},
                              {"vocabulary", b.vocabulary}, {"offset", b.offset}});
        }
        return {{"width", width_}, {"blocks", blocks}};
    }

    static TabularEncoder from_json(const nlohmann::json& j) {
        TabularEncoder e;
        e.width_ = j.at("width").get<std::size_t>();
        for (const auto& jb : j.at("blocks")) {
            Block b;
            b.column = jb.at("column").get<std::size_t>();
            b.kind = static_cast<Block::Kind>(jb.at("kind").get<int>());
            b.mean = jb.at("mean").get<double>();
            b.vocabulary = jb.at("vocabulary").get<std::vector<std::string>>();
            b.offset = jb.at("offset").get<std::size_t>();
            for (std::size_t i = 0; i < b.vocabulary.size(); ++i) b.lookup.emplace(b.vocabulary[i], i);
            e.blocks_.push_back(std::move(b));
        }
        return e;
    }

private:
    std::vector<Block> blocks_;
    std::size_t width_ = 0;
};

/// Flat CART tree; `feature[i] < 0` marks a leaf whose class is `value[i]`.
struct DecisionTree {
    std::vector<std::int32_t> feature;
    std::vector<double> threshold;  // x <= threshold goes left
    std::vector<std::uint32_t> left, right, value;

    std::uint32_t predict(std::span<const double> x) const {
        std::size_t n = 0;
        while (feature[n] >= 0) n = x[static_cast<std::size_t>(feature[n])] <= threshold[n] ? left[n] : right[n];
        return value[n];
    }
};

namespace detail {

struct TreeBuilder {
    const std::vector<double>& X;  // row-major n x width
    std::size_t width;
    const std::vector<std::uint32_t>& y;
    std::size_t n_classes;
    const ForestHyperparams& hp;
    std::size_t mtry;
    Rng& rng;
    DecisionTree tree;
    std::vector<std::size_t> features;
    std::vector<std::pair<double, std::uint32_t>> column;

    std::uint32_t make_leaf(const std::vector<std::size_t>& counts) {
        const auto best = std::max_element(counts.begin(), counts.end()) - counts.begin();
        const auto id = static_cast<std::uint32_t>(tree.feature.size());
        tree.feature.push_back(-1);
        tree.threshold.push_back(0.0);
        tree.left.push_back(0);
        tree.right.push_back(0);
        tree.value.push_back(static_cast<std::uint32_t>(best));
        return id;
    }

    std::uint32_t build(std::vector<std::size_t>& rows, std::size_t depth) {
        std::vector<std::size_t> counts(n_classes, 0);
        for (auto r : rows) ++counts[y[r]];
        const std::size_t n = rows.size();
        const bool pure = std::count_if(counts.begin(), counts.end(), [](std::size_t c) { return c > 0; }) <= 1;
        if (pure || depth >= hp.max_depth || n < 2 * hp.min_leaf) return make_leaf(counts);

        double parent = static_cast<double>(n);
        for (auto c : counts) parent -= static_cast<double>(c) * static_cast<double>(c) / static_cast<double>(n);

        for (std::size_t i = 0; i < mtry; ++i) std::swap(features[i], features[i + rng.below(width - i)]);

        double best_impurity = parent - 1e-12;
        std::int64_t best_feature = -1;
        double best_threshold = 0.0;
        std::vector<std::size_t> left_counts(n_classes);
        for (std::size_t fi = 0; fi < mtry; ++fi) {
            const std::size_t f = features[fi];
            column.clear();
            for (auto r : rows) column.emplace_back(X[r * width + f], y[r]);
            std::sort(column.begin(), column.end());
            if (column.front().first == column.back().first) continue;
            std::fill(left_counts.begin(), left_counts.end(), 0);
            double left_sq = 0.0;
            double right_sq = 0.0;
            for (auto c : counts) right_sq += static_cast<double>(c) * static_cast<double>(c);
            for (std::size_t i = 0; i + 1 < n; ++i) {
                const std::uint32_t cls = column[i].second;
                const double lc = static_cast<double>(left_counts[cls]);
                const double rc = static_cast<double>(counts[cls] - left_counts[cls]);
                left_sq += 2.0 * lc + 1.0;
                right_sq -= 2.0 * rc - 1.0;
                ++left_counts[cls];
                const std::size_t nl = i + 1;
                const std::size_t nr = n - nl;
                if (column[i].first == column[i + 1].first || nl < hp.min_leaf || nr < hp.min_leaf) continue;
                const double impurity = (static_cast<double>(nl) - left_sq / static_cast<double>(nl)) +
                                        (static_cast<double>(nr) - right_sq / static_cast<double>(nr));
                if (impurity < best_impurity) {
                    best_impurity = impurity;
                    best_feature = static_cast<std::int64_t>(f);
                    best_threshold = column[i].first + (column[i + 1].first - column[i].first) / 2.0;
                    if (!(best_threshold < column[i + 1].first)) best_threshold = column[i].first;
                }
            }
        }
        if (best_feature < 0) return make_leaf(counts);

        std::vector<std::size_t> lrows, rrows;
        for (auto r : rows) {
            (X[r * width + static_cast<std::size_t>(best_feature)] <= best_threshold ? lrows : rrows).push_back(r);
        }
        rows.clear();
        rows.shrink_to_fit();
        const auto id = static_cast<std::uint32_t>(tree.feature.size());
        tree.feature.push_back(static_cast<std::int32_t>(best_feature));
        tree.threshold.push_back(best_threshold);
        tree.left.push_back(0);
        tree.right.push_back(0);
        tree.value.push_back(0);
        const auto l = build(lrows, depth + 1);
        const auto r = build(rrows, depth + 1);
        tree.left[id] = l;
        tree.right[id] = r;
        return id;
    }
};

} // namespace detail

/// Random forest of gini CART trees with bootstrap sampling and sqrt(F)
/// features per split. Majority vote; ties go to the earlier training label.
class RandomForestClassifier final : public Classifier {
public:
    std::string_view type() const override { return "random_forest"; }
    const std::vector<Value>& labels() const override { return labels_; }
    const TabularEncoder& encoder() const { return encoder_; }
    const std::vector<DecisionTree>& trees() const { return trees_; }

    std::size_t predict_index(const Record& r) const {
        std::vector<double> x(encoder_.width());
        encoder_.encode(r, x);
        std::vector<std::size_t> votes(labels_.size(), 0);
        for (const auto& t : trees_) ++votes[t.predict(x)];
        return static_cast<std::size_t>(std::max_element(votes.begin(), votes.end()) - votes.begin());
    }

    Value predict(const Record& r) const override { return labels_[predict_index(r)]; }

    nlohmann::json to_json() const override {
        nlohmann::json labels = nlohmann::json::array();
        for (const auto& l : labels_) labels.push_back(value_to_json(l));
        nlohmann::json trees = nlohmann::json::array();
        for (const auto& t : trees_) {
            trees.push_back({{"feature", t.feature}, {"threshold", t.threshold}, {"left", t.left},
                             {"right", t.right}, {"value", t.value}});
        }
        return {{"type", "random_forest"}, {"labels", labels}, {"encoder", encoder_.to_json()}, {"trees", trees}};
    }

    static std::shared_ptr<RandomForestClassifier> from_json(const nlohmann::json& j) {
        auto c = std::make_shared<RandomForestClassifier>();
        for (const auto& l : j.at("labels")) c->labels_.push_back(value_from_json(l));
        c->encoder_ = TabularEncoder::from_json(j.at("encoder"));
        for (const auto& jt : j.at("trees")) {
            DecisionTree t;
            t.feature = jt.at("feature").get<std::vector<std::int32_t>>();
            t.threshold = jt.at("threshold").get<std::vector<double>>();
            t.left = jt.at("left").get<std::vector<std::uint32_t>>();
            t.right = jt.at("right").get<std::vector<std::uint32_t>>();
            t.value = jt.at("value").get<std::vector<std::uint32_t>>();
            c->trees_.push_back(std::move(t));
        }
        return c;
    }

    friend std::shared_ptr<RandomForestClassifier> train_reference(const Table&, std::uint64_t,
                                                                   const ForestHyperparams&);

private:
    std::vector<Value> labels_;
    TabularEncoder encoder_;
    std::vector<DecisionTree> trees_;
};

/// The built-in reference learner. Rows with a Missing label are ignored.
inline std::shared_ptr<RandomForestClassifier> train_reference(const Table& table, std::uint64_t seed,
                                                               const ForestHyperparams& hp = {}) {
    std::vector<const Record*> rows;
    for (const auto& r : table.records) {
        if (!r.label.is_missing()) rows.push_back(&r);
    }
    if (rows.size() < 2) throw DegenerateDataError("train: need at least two labelled rows");
    if (hp.n_trees == 0 || hp.min_leaf == 0) throw ValidationError("train: n_trees and min_leaf must be positive");

    auto clf = std::make_shared<RandomForestClassifier>();
    clf->labels_ = label_order(table);
    if (clf->labels_.size() < 2) throw DegenerateDataError("train: training labels are constant");
    clf->encoder_.fit(table, hp.text_top_k);
    const std::size_t width = clf->encoder_.width();
    if (width == 0) throw DegenerateDataError("train: no usable features");

    std::unordered_map<Value, std::uint32_t, ValueHash> label_index;
    for (std::size_t i = 0; i < clf->labels_.size(); ++i) label_index.emplace(clf->labels_[i], static_cast<std::uint32_t>(i));

    const std::size_t n = rows.size();
    std::vector<double> X(n * width);
    std::vector<std::uint32_t> y(n);
    for (std::size_t i = 0; i < n; ++i) {
        clf->encoder_.encode(*rows[i], std::span<double>(X.data() + i * width, width));
        y[i] = label_index.at(rows[i]->label);
    }

    const std::size_t mtry = std::max<std::size_t>(1, static_cast<std::size_t>(std::floor(std::sqrt(static_cast<double>(width)))));
    Rng rng(seed);
    for (std::size_t t = 0; t < hp.n_trees; ++t) {
        std::vector<std::size_t> sample(n);
        for (auto& s : sample) s = rng.below(n);
        detail::TreeBuilder builder{X, width, y, clf->labels_.size(), hp, mtry, rng, {}, {}, {}};
        builder.features.resize(width);
        std::iota(builder.features.begin(), builder.features.end(), std::size_t{0});
        builder.build(sample, 0);
        clf->trees_.push_back(std::move(builder.tree));
    }
    return clf;
}

inline TrainProcedure reference_trainer(ForestHyperparams hp = {}) {
    return [hp](const Table& t, std::uint64_t seed) -> ClassifierPtr { return train_reference(t, seed, hp); };
}

using ClassifierFactory = std::function<ClassifierPtr(const nlohmann::json&)>;

inline std::map<std::string, ClassifierFactory>& classifier_registry() {
    static std::map<std::string, ClassifierFactory> registry{
        {"random_forest", [](const nlohmann::json& j) -> ClassifierPtr { return RandomForestClassifier::from_json(j); }},
    };
    return registry;
}

inline ClassifierPtr classifier_from_json(const nlohmann::json& j) {
    const auto type = j.at("type").get<std::string>();
    auto it = classifier_registry().find(type);
    if (it == classifier_registry().end()) throw ValidationError("unknown classifier type: " + type);
    return it->second(j);
}

// ---------------------------------------------------------------------------
// Metrics

/// Fraction of test records whose prediction equals their label.
inline double accuracy(const Classifier& clf, const Table& test) {
    if (test.empty()) throw ValidationError("accuracy: empty test set");
    std::size_t correct = 0;
    for (const auto& r : test.records) correct += clf.predict(r) == r.label ? 1 : 0;
    return static_cast<double>(correct) / static_cast<double>(test.rows());
}

/// sum_i W_i [pred_i == y_i] / sum_i W_i over the test records.
inline double weighted_accuracy(const std::map<std::uint64_t, Value>& predictions, const Table& test,
                                const std::map<std::uint64_t, double>& weights) {
    double num = 0.0, den = 0.0;
    bool positive = false;
    for (const auto& r : test.records) {
        const double w = weights.at(r.row_id);
        if (w < 0.0) throw ValidationError("weighted_accuracy: negative weight");
        positive = positive || w > 0.0;
        den += w;
        if (predictions.at(r.row_id) == r.label) num += w;
    }
    if (!positive) throw ValidationError("weighted_accuracy: all weights are zero");
    return num / den;
}

/// Area under the ROC curve via the rank-sum statistic with averaged ties.
/// Returns nullopt when only one class is present.
inline std::optional<double> auc(std::span<const double> scores, std::span<const char> positive) {
    const std::size_t n = scores.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
    double pos_rank_sum = 0.0;
    std::size_t n_pos = 0;
    for (std::size_t i = 0; i < n;) {
        std::size_t j = i;
        while (j < n && scores[order[j]] == scores[order[i]]) ++j;
        const double avg_rank = (static_cast<double>(i) + static_cast<double>(j - 1)) / 2.0 + 1.0;
        for (std::size_t k = i; k < j; ++k) {
            if (positive[order[k]]) {
                pos_rank_sum += avg_rank;
                ++n_pos;
            }
        }
        i = j;
    }
    const std::size_t n_neg = n - n_pos;
    if (n_pos == 0 || n_neg == 0) return std::nullopt;
    const double np = static_cast<double>(n_pos);
    return (pos_rank_sum - np * (np + 1.0) / 2.0) / (np * static_cast<double>(n_neg));
}

} // namespace boostclean
