#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <numeric>
#include <span>
#include <vector>

#include <nlohmann/json.hpp>

#include "error.hpp"
#include "parallel.hpp"
#include "rng.hpp"
#include "value.hpp"

namespace boostclean {

struct IsoForestParams {
    std::size_t n_trees = 100;
    std::size_t sample_size = 256;  // psi
    double contamination = 0.05;    // fraction of training points flagged; fixes tau
    std::size_t top_m = 3;
    std::size_t attribution_depth = 0;  // 0: isolation credit over full paths; else split counts at depths [0, d)
};

/// Average path length of an unsuccessful BST search over n points,
/// c(n) = 2 H(n-1) - 2 (n-1) / n.
inline double average_path_length(std::size_t n) {
    if (n <= 1) return 0.0;
    double h = 0.0;
    for (std::size_t i = 1; i < n; ++i) h += 1.0 / static_cast<double>(i);
    const double m = static_cast<double>(n);
    return 2.0 * h - 2.0 * (m - 1.0) / m;
}

struct IsoNode {
    std::int32_t feature = -1;  // -1 marks a leaf
    double threshold = 0.0;     // x < threshold goes left
    std::uint32_t left = 0;
    std::uint32_t right = 0;
    std::uint32_t size = 0;     // training samples that reached the node

    bool leaf() const { return feature < 0; }
    bool operator==(const IsoNode&) const = default;
};

struct IsoTree {
    std::vector<IsoNode> nodes;  // root at 0
    bool operator==(const IsoTree&) const = default;
};

struct AnomalyVerdict {
    double score = 0.0;
    bool flagged = false;
    ColumnSet implicated;
};

class IsoForest {
public:
    const std::vector<IsoTree>& trees() const { return trees_; }
    std::size_t sample_size() const { return sample_size_; }
    std::size_t height_limit() const { return height_limit_; }
    std::size_t width() const { return width_; }
    double threshold() const { return threshold_; }
    bool degenerate() const { return degenerate_; }
    const IsoForestParams& params() const { return params_; }

    void set_threshold(double tau) {
        if (!(tau > 0.0 && tau < 1.0)) throw ValidationError("isoforest: threshold must lie in (0, 1)");
        threshold_ = tau;
    }

    /// Path depth to the leaf plus c(leaf size) for truncated leaves.
    double path_length(const IsoTree& tree, std::span<const double> x) const {
        std::size_t node = 0;
        double depth = 0.0;
        while (!tree.nodes[node].leaf()) {
            const auto& n = tree.nodes[node];
            node = x[static_cast<std::size_t>(n.feature)] < n.threshold ? n.left : n.right;
            depth += 1.0;
        }
        return depth + average_path_length(tree.nodes[node].size);
    }

    double mean_path_length(std::span<const double> x) const {
        check_width(x);
        double total = 0.0;
        for (const auto& t : trees_) total += path_length(t, x);
        return total / static_cast<double>(trees_.size());
    }

    /// s = 2^(-E[h(x)] / c(psi)); higher is more anomalous.
    double score(std::span<const double> x) const {
        return std::exp2(-mean_path_length(x) / average_path_length(sample_size_));
    }

    bool flags(double s) const { return !degenerate_ && s > threshold_; }

    /// Per-feature counts of splits met at depth < `depth_limit` on x's paths.
    std::vector<std::size_t> shallow_split_counts(std::span<const double> x, std::size_t depth_limit) const {
        check_width(x);
        std::vector<std::size_t> counts(width_, 0);
        for (const auto& t : trees_) {
            std::size_t node = 0;
            for (std::size_t depth = 0; depth < depth_limit && !t.nodes[node].leaf(); ++depth) {
                const auto& n = t.nodes[node];
                ++counts[static_cast<std::size_t>(n.feature)];
                node = x[static_cast<std::size_t>(n.feature)] < n.threshold ? n.left : n.right;
            }
        }
        return counts;
    }

    /// Per-feature isolation credit over x's full paths: each split adds
    /// log2(parent size / size of the child x enters), so cuts that strand x
    /// among few training samples dominate.
    std::vector<double> isolation_weights(std::span<const double> x) const {
        check_width(x);
        std::vector<double> w(width_, 0.0);
        for (const auto& t : trees_) {
            std::size_t node = 0;
            while (!t.nodes[node].leaf()) {
                const auto& n = t.nodes[node];
                const auto f = static_cast<std::size_t>(n.feature);
                const std::size_t next = x[f] < n.threshold ? n.left : n.right;
                const double child = std::max<double>(t.nodes[next].size, 1.0);
                w[f] += std::log2(static_cast<double>(n.size) / child);
                node = next;
            }
        }
        return w;
    }

    /// Sets tau so that (at most) a `contamination` fraction of `points` is flagged.
    void calibrate(std::span<const std::vector<double>> points, double contamination) {
        if (points.empty() || degenerate_) return;
        std::vector<double> scores;
        scores.reserve(points.size());
        for (const auto& p : points) scores.push_back(score(p));
        std::sort(scores.begin(), scores.end(), std::greater<>());
        const auto k = static_cast<std::size_t>(std::floor(contamination * static_cast<double>(scores.size())));
        double tau = scores[std::min(k, scores.size() - 1)];
        tau = std::clamp(tau, 1e-12, 1.0 - 1e-12);
        threshold_ = tau;
    }

    nlohmann::json to_json() const {
        nlohmann::json trees = nlohmann::json::array();
        for (const auto& t : trees_) trees.push_back(node_json(t, 0));
        return {{"sample_size", sample_size_}, {"height_limit", height_limit_}, {"width", width_},
                {"threshold", threshold_},     {"degenerate", degenerate_},     {"n_trees", params_.n_trees},
                {"contamination", params_.contamination}, {"top_m", params_.top_m},
                {"attribution_depth", params_.attribution_depth}, {"trees", trees}};
    }

    static IsoForest from_json(const nlohmann::json& j) {
        IsoForest f;
        f.sample_size_ = j.at("sample_size").get<std::size_t>();
        f.height_limit_ = j.at("height_limit").get<std::size_t>();
        f.width_ = j.at("width").get<std::size_t>();
        f.threshold_ = j.at("threshold").get<double>();
        f.degenerate_ = j.at("degenerate").get<bool>();
        f.params_.n_trees = j.at("n_trees").get<std::size_t>();
        f.params_.contamination = j.at("contamination").get<double>();
        f.params_.top_m = j.at("top_m").get<std::size_t>();
        f.params_.attribution_depth = j.at("attribution_depth").get<std::size_t>();
        for (const auto& t : j.at("trees")) {
            IsoTree tree;
            read_node(t, tree);
            f.trees_.push_back(std::move(tree));
        }
        return f;
    }

    friend IsoForest fit_isoforest(std::span<const std::vector<double>> points, const IsoForestParams& params,
                                   std::uint64_t seed, std::size_t threads);

private:
    void check_width(std::span<const double> x) const {
        if (x.size() != width_) throw ValidationError("isoforest: feature width mismatch");
    }

    static nlohmann::json node_json(const IsoTree& t, std::size_t i) {
        const auto& n = t.nodes[i];
        if (n.leaf()) return {{"size", n.size}};
        return {{"feature", n.feature}, {"threshold", n.threshold}, {"size", n.size},
                {"left", node_json(t, n.left)}, {"right", node_json(t, n.right)}};
    }

    static std::uint32_t read_node(const nlohmann::json& j, IsoTree& t) {
        const auto idx = static_cast<std::uint32_t>(t.nodes.size());
        t.nodes.push_back({});
        t.nodes[idx].size = j.at("size").get<std::uint32_t>();
        if (j.contains("feature")) {
            t.nodes[idx].feature = j.at("feature").get<std::int32_t>();
            t.nodes[idx].threshold = j.at("threshold").get<double>();
            const auto l = read_node(j.at("left"), t);
            const auto r = read_node(j.at("right"), t);
            t.nodes[idx].left = l;
            t.nodes[idx].right = r;
        }
        return idx;
    }

    std::vector<IsoTree> trees_;
    std::size_t sample_size_ = 2;
    std::size_t height_limit_ = 1;
    std::size_t width_ = 0;
    double threshold_ = 0.5;
    bool degenerate_ = false;
    IsoForestParams params_;
};

namespace detail {

inline void grow_iso_tree(IsoTree& tree, std::span<const std::vector<double>> points,
                          std::vector<std::size_t>& idx, std::size_t begin, std::size_t end, std::size_t depth,
                          std::size_t height_limit, std::size_t width, Rng& rng) {
    const auto me = static_cast<std::uint32_t>(tree.nodes.size());
    tree.nodes.push_back({});
    tree.nodes[me].size = static_cast<std::uint32_t>(end - begin);
    if (end - begin <= 1 || depth >= height_limit) return;

    // candidate features: those not constant over this node's samples
    std::vector<std::size_t> usable;
    std::vector<std::pair<double, double>> ranges;
    for (std::size_t f = 0; f < width; ++f) {
        double lo = points[idx[begin]][f], hi = lo;
        for (std::size_t i = begin + 1; i < end; ++i) {
            const double v = points[idx[i]][f];
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
        if (lo < hi) {
            usable.push_back(f);
            ranges.emplace_back(lo, hi);
        }
    }
    if (usable.empty()) return;

    const std::size_t pick = rng.below(usable.size());
    const std::size_t f = usable[pick];
    const auto [lo, hi] = ranges[pick];
    double thr = lo + rng.uniform_open() * (hi - lo);
    if (!(thr > lo && thr <= hi)) thr = hi;

    const auto mid_it = std::partition(idx.begin() + static_cast<std::ptrdiff_t>(begin),
                                       idx.begin() + static_cast<std::ptrdiff_t>(end),
                                       [&](std::size_t i) { return points[i][f] < thr; });
    const auto mid = static_cast<std::size_t>(mid_it - idx.begin());

    tree.nodes[me].feature = static_cast<std::int32_t>(f);
    tree.nodes[me].threshold = thr;
    const auto l = static_cast<std::uint32_t>(tree.nodes.size());
    grow_iso_tree(tree, points, idx, begin, mid, depth + 1, height_limit, width, rng);
    const auto r = static_cast<std::uint32_t>(tree.nodes.size());
    grow_iso_tree(tree, points, idx, mid, end, depth + 1, height_limit, width, rng);
    tree.nodes[me].left = l;
    tree.nodes[me].right = r;
}

} // namespace detail

/// Grows `n_trees` isolation trees, tree i from its own stream seeded with
/// seed + i, so any thread count gives the same forest. The threshold is then
/// calibrated on the training points from `contamination`.
inline IsoForest fit_isoforest(std::span<const std::vector<double>> points, const IsoForestParams& params,
                               std::uint64_t seed, std::size_t threads = 1) {
    if (points.size() < 2) throw ValidationError("isoforest: need at least two points");
    if (params.n_trees == 0) throw ValidationError("isoforest: n_trees must be positive");
    if (params.sample_size < 2) throw ValidationError("isoforest: sample size must be at least 2");
    const std::size_t width = points.front().size();
    for (const auto& p : points) {
        if (p.size() != width) throw ValidationError("isoforest: points differ in width");
    }

    IsoForest forest;
    forest.params_ = params;
    forest.width_ = width;
    forest.sample_size_ = std::min(params.sample_size, points.size());
    forest.height_limit_ = static_cast<std::size_t>(std::ceil(std::log2(static_cast<double>(forest.sample_size_))));
    forest.trees_.resize(params.n_trees);

    parallel_for(params.n_trees, threads, [&](std::size_t t) {
        Rng rng(seed + t);
        std::vector<std::size_t> all(points.size());
        std::iota(all.begin(), all.end(), std::size_t{0});
        // partial Fisher-Yates: the first sample_size entries become the subsample
        for (std::size_t i = 0; i < forest.sample_size_; ++i) {
            std::swap(all[i], all[i + rng.below(all.size() - i)]);
        }
        all.resize(forest.sample_size_);
        detail::grow_iso_tree(forest.trees_[t], points, all, 0, all.size(), 0, forest.height_limit_, width, rng);
    });

    forest.degenerate_ = std::all_of(forest.trees_.begin(), forest.trees_.end(),
                                     [](const IsoTree& t) { return t.nodes.size() == 1; });
    forest.calibrate(points, params.contamination);
    return forest;
}

/// Scores x and, when flagged, names the `top_m` attributes with the most
/// credit: isolation weights when `depth_limit` is 0, otherwise counts of
/// splits met above that depth. Credit is pooled per
/// attribute so that multi-feature attributes (embedding blocks) compete fairly;
/// ties go to the attribute with the lower first feature index.
inline AnomalyVerdict isoforest_verdict(const IsoForest& forest, std::span<const double> x,
                                        std::span<const std::size_t> attribution, std::size_t top_m,
                                        std::size_t depth_limit) {
    AnomalyVerdict v;
    v.score = forest.score(x);
    v.flagged = forest.flags(v.score);
    if (!v.flagged) return v;

    std::vector<double> counts;
    if (depth_limit == 0) {
        counts = forest.isolation_weights(x);
    } else {
        const auto c = forest.shallow_split_counts(x, depth_limit);
        counts.assign(c.begin(), c.end());
    }
    std::map<std::size_t, std::pair<double, std::size_t>> per_attr;  // attr -> (credit, first feature)
    for (std::size_t f = 0; f < counts.size(); ++f) {
        auto [it, inserted] = per_attr.try_emplace(attribution[f], 0.0, f);
        it->second.first += counts[f];
    }
    std::vector<std::pair<std::size_t, std::pair<double, std::size_t>>> ranked(per_attr.begin(), per_attr.end());
    std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
        if (a.second.first != b.second.first) return a.second.first > b.second.first;
        return a.second.second < b.second.second;
    });
    for (std::size_t i = 0; i < ranked.size() && i < top_m; ++i) {
        if (ranked[i].second.first <= 0.0) break;
        v.implicated.push_back(ranked[i].first);
    }
    if (v.implicated.empty() && !ranked.empty()) v.implicated.push_back(ranked.front().first);
    std::sort(v.implicated.begin(), v.implicated.end());
    return v;
}

} // namespace boostclean
