#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include <nlohmann/json.hpp>

#include "binary_io.hpp"
#include "featurize.hpp"
#include "rng.hpp"
#include "table.hpp"

namespace boostclean {

struct EmbeddingParams {
    std::size_t dim = 32;
    std::size_t epochs = 10;
    std::size_t negatives = 5;
    double learning_rate = 0.025;
    std::size_t min_count = 2;
    std::uint64_t seed = 0;
};

/// Record embeddings in the word2vec style: every (column, value) pair of a record
/// is a word and the record is its document.
///
/// Categorical and Text columns contribute their verbatim value; Numeric columns
/// contribute the train-quartile bucket of the number (or the raw cell when it is
/// not a number). Values rarer than `min_count` share one "rare" token per column
/// during training. At transform time anything outside the frequent vocabulary
/// embeds as the zero vector.
class EmbeddingModel {
public:
    struct Slot {
        std::size_t column = 0;  // schema index
        std::string name;
        bool numeric = false;
        std::array<double, 3> cuts{};  // quartile boundaries for numeric slots
        std::unordered_map<std::string, std::uint32_t> vocab;
    };

    static constexpr std::string_view magic = "BCEMBED1";
    static constexpr std::uint32_t format_version = 1;

    std::size_t dim() const { return dim_; }
    std::size_t vocabulary_size() const { return tokens_.size(); }
    const std::vector<Slot>& slots() const { return slots_; }
    const std::vector<double>& epoch_losses() const { return epoch_losses_; }

    /// Vector of a vocabulary entry; `nullptr` when the token is unknown.
    const float* vector_of(std::size_t slot, const std::string& key) const {
        const auto& vocab = slots_[slot].vocab;
        auto it = vocab.find(key);
        if (it == vocab.end()) return nullptr;
        return vectors_.data() + static_cast<std::size_t>(it->second) * dim_;
    }

    /// Convenience lookup by column name and raw value.
    std::vector<float> token_vector(std::string_view column, const Value& v) const {
        for (std::size_t s = 0; s < slots_.size(); ++s) {
            if (slots_[s].name != column) continue;
            const float* p = vector_of(s, key(slots_[s], v));
            return p ? std::vector<float>(p, p + dim_) : std::vector<float>(dim_, 0.0f);
        }
        throw ValidationError("embedding: column not embedded: " + std::string(column));
    }

    /// Token key of a cell for a slot.
    static std::string key(const Slot& slot, const Value& v) {
        if (v.is_missing()) return std::string("\x01missing");
        if (slot.numeric && v.is_number()) {
            const double x = v.as_number();
            int b = 0;
            while (b < 3 && x > slot.cuts[static_cast<std::size_t>(b)]) ++b;
            return std::string("\x01q") + static_cast<char>('0' + b);
        }
        return v.str();
    }

    static std::string rare_key() { return std::string("\x01rare"); }

    void embed_into(const Record& record, std::span<double> out) const {
        for (std::size_t s = 0; s < slots_.size(); ++s) {
            const float* p = vector_of(s, key(slots_[s], record.values[slots_[s].column]));
            for (std::size_t k = 0; k < dim_; ++k) out[s * dim_ + k] = p ? static_cast<double>(p[k]) : 0.0;
        }
    }

    std::string serialize() const {
        binary::Writer w;
        w.bytes(magic);
        w.u32(format_version);
        w.u32(static_cast<std::uint32_t>(dim_));
        w.u32(static_cast<std::uint32_t>(slots_.size()));
        for (const auto& s : slots_) {
            w.u32(static_cast<std::uint32_t>(s.column));
            w.str(s.name);
            w.u8(s.numeric ? 1 : 0);
            for (double c : s.cuts) w.f64(c);
        }
        w.u32(static_cast<std::uint32_t>(tokens_.size()));
        for (const auto& t : tokens_) {
            w.u32(static_cast<std::uint32_t>(t.slot));
            w.str(t.key);
        }
        for (float x : vectors_) w.f32(x);
        return w.take();
    }

    static EmbeddingModel deserialize(std::string_view data) {
        binary::Reader r(data);
        if (r.bytes(magic.size()) != magic) throw ValidationError("embedding: bad magic bytes");
        if (r.u32() != format_version) throw ValidationError("embedding: unsupported format version");
        EmbeddingModel m;
        m.dim_ = r.u32();
        m.slots_.resize(r.u32());
        for (auto& s : m.slots_) {
            s.column = r.u32();
            s.name = r.str();
            s.numeric = r.u8() != 0;
            for (double& c : s.cuts) c = r.f64();
        }
        m.tokens_.resize(r.u32());
        for (std::size_t i = 0; i < m.tokens_.size(); ++i) {
            auto& t = m.tokens_[i];
            t.slot = r.u32();
            t.key = r.str();
            if (t.slot >= m.slots_.size()) throw ValidationError("embedding: token slot out of range");
            if (t.key != rare_key()) m.slots_[t.slot].vocab.emplace(t.key, static_cast<std::uint32_t>(i));
        }
        m.vectors_.resize(m.tokens_.size() * m.dim_);
        for (float& x : m.vectors_) x = r.f32();
        if (!r.done()) throw ValidationError("embedding: trailing bytes");
        return m;
    }

    friend EmbeddingModel train_embeddings(const Table& train, const EmbeddingParams& params);

private:
    struct TokenInfo {
        std::size_t slot = 0;
        std::string key;
    };

    std::size_t dim_ = 0;
    std::vector<Slot> slots_;
    std::vector<TokenInfo> tokens_;
    std::vector<float> vectors_;
    std::vector<double> epoch_losses_;
};

namespace detail {

inline double quantile_sorted(const std::vector<double>& xs, double p) {
    if (xs.empty()) return 0.0;
    const double pos = p * static_cast<double>(xs.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(lo + 1, xs.size() - 1);
    return xs[lo] + (xs[hi] - xs[lo]) * (pos - static_cast<double>(lo));
}

inline double sigmoid(double x) {
    if (x > 30.0) return 1.0;
    if (x < -30.0) return 0.0;
    return 1.0 / (1.0 + std::exp(-x));
}

} // namespace detail

/// Skip-gram with negative sampling where every ordered pair of distinct token
/// positions in a record is a (center, context) example. Single-threaded and
/// deterministic under `params.seed`. The published token vector is the sum of
/// the input and output vectors.
inline EmbeddingModel train_embeddings(const Table& train, const EmbeddingParams& params) {
    if (train.empty()) throw ValidationError("train_embeddings: empty table");
    if (params.dim == 0) throw ValidationError("train_embeddings: dim must be positive");
    EmbeddingModel m;
    m.dim_ = params.dim;
    for (std::size_t c = 0; c < train.schema.size(); ++c) {
        const auto t = train.schema.columns[c].type;
        if (t != ColumnType::categorical && t != ColumnType::text && t != ColumnType::numeric) continue;
        EmbeddingModel::Slot slot;
        slot.column = c;
        slot.name = train.schema.columns[c].name;
        slot.numeric = t == ColumnType::numeric;
        if (slot.numeric) {
            std::vector<double> xs;
            for (const auto& r : train.records) {
                if (r.values[c].is_number()) xs.push_back(r.values[c].as_number());
            }
            std::sort(xs.begin(), xs.end());
            slot.cuts = {detail::quantile_sorted(xs, 0.25), detail::quantile_sorted(xs, 0.5),
                         detail::quantile_sorted(xs, 0.75)};
        }
        m.slots_.push_back(std::move(slot));
    }
    if (m.slots_.empty()) throw ValidationError("train_embeddings: no eligible columns");

    // Vocabulary: frequent keys first (in order of first appearance), then one
    // rare token per slot that needs it.
    const std::size_t n_slots = m.slots_.size();
    std::vector<std::map<std::string, std::size_t>> counts(n_slots);
    std::vector<std::vector<std::string>> first_seen(n_slots);
    std::vector<std::vector<std::string>> keys(train.rows(), std::vector<std::string>(n_slots));
    for (std::size_t r = 0; r < train.rows(); ++r) {
        for (std::size_t s = 0; s < n_slots; ++s) {
            auto k = EmbeddingModel::key(m.slots_[s], train.records[r].values[m.slots_[s].column]);
            if (counts[s][k]++ == 0) first_seen[s].push_back(k);
            keys[r][s] = std::move(k);
        }
    }
    std::vector<std::uint32_t> rare_id(n_slots, UINT32_MAX);
    std::vector<double> token_count;
    for (std::size_t s = 0; s < n_slots; ++s) {
        for (const auto& k : first_seen[s]) {
            if (counts[s][k] < params.min_count) continue;
            m.slots_[s].vocab.emplace(k, static_cast<std::uint32_t>(m.tokens_.size()));
            m.tokens_.push_back({s, k});
            token_count.push_back(static_cast<double>(counts[s][k]));
        }
    }
    for (std::size_t s = 0; s < n_slots; ++s) {
        double rare = 0.0;
        for (const auto& k : first_seen[s]) {
            if (counts[s][k] < params.min_count) rare += static_cast<double>(counts[s][k]);
        }
        if (rare > 0.0) {
            rare_id[s] = static_cast<std::uint32_t>(m.tokens_.size());
            m.tokens_.push_back({s, EmbeddingModel::rare_key()});
            token_count.push_back(rare);
        }
    }

    std::vector<std::vector<std::uint32_t>> docs(train.rows());
    std::size_t pairs_per_epoch = 0;
    for (std::size_t r = 0; r < train.rows(); ++r) {
        for (std::size_t s = 0; s < n_slots; ++s) {
            auto it = m.slots_[s].vocab.find(keys[r][s]);
            docs[r].push_back(it != m.slots_[s].vocab.end() ? it->second : rare_id[s]);
        }
        pairs_per_epoch += n_slots * (n_slots - 1);
    }

    const std::size_t V = m.tokens_.size();
    const std::size_t d = params.dim;
    std::vector<double> cumulative(V);
    double total = 0.0;
    for (std::size_t i = 0; i < V; ++i) {
        total += std::pow(token_count[i], 0.75);
        cumulative[i] = total;
    }

    Rng rng(params.seed);
    std::vector<double> w_in(V * d), w_out(V * d, 0.0);
    for (auto& x : w_in) x = (rng.uniform() - 0.5) / static_cast<double>(d);

    auto sample_negative = [&] {
        const double u = rng.uniform() * total;
        auto it = std::upper_bound(cumulative.begin(), cumulative.end(), u);
        return static_cast<std::uint32_t>(std::min<std::size_t>(static_cast<std::size_t>(it - cumulative.begin()), V - 1));
    };

    const double total_steps = static_cast<double>(std::max<std::size_t>(1, params.epochs * pairs_per_epoch));
    double step = 0.0;
    std::vector<double> grad(d);
    std::vector<std::size_t> order(train.rows());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

    for (std::size_t epoch = 0; epoch < params.epochs; ++epoch) {
        rng.shuffle(std::span<std::size_t>(order));
        double loss = 0.0;
        std::size_t examples = 0;
        for (std::size_t r : order) {
            const auto& doc = docs[r];
            for (std::size_t i = 0; i < doc.size(); ++i) {
                for (std::size_t j = 0; j < doc.size(); ++j) {
                    if (i == j) continue;
                    const double lr = params.learning_rate * std::max(1e-4, 1.0 - step / total_steps);
                    step += 1.0;
                    double* center = w_in.data() + static_cast<std::size_t>(doc[i]) * d;
                    std::fill(grad.begin(), grad.end(), 0.0);
                    for (std::size_t n = 0; n <= params.negatives; ++n) {
                        std::uint32_t target = doc[j];
                        double label = 1.0;
                        if (n > 0) {
                            target = sample_negative();
                            if (target == doc[j]) continue;
                            label = 0.0;
                        }
                        double* out = w_out.data() + static_cast<std::size_t>(target) * d;
                        double dot = 0.0;
                        for (std::size_t k = 0; k < d; ++k) dot += center[k] * out[k];
                        const double p = detail::sigmoid(dot);
                        loss -= std::log(std::max(1e-12, label > 0.0 ? p : 1.0 - p));
                        const double g = (label - p) * lr;
                        for (std::size_t k = 0; k < d; ++k) {
                            grad[k] += g * out[k];
                            out[k] += g * center[k];
                        }
                    }
                    for (std::size_t k = 0; k < d; ++k) center[k] += grad[k];
                    ++examples;
                }
            }
        }
        m.epoch_losses_.push_back(examples ? loss / static_cast<double>(examples) : 0.0);
    }

    m.vectors_.resize(V * d);
    for (std::size_t i = 0; i < V * d; ++i) m.vectors_[i] = static_cast<float>(w_in[i] + w_out[i]);
    return m;
}

/// Concatenated per-attribute token vectors, in schema column order.
inline FeatureVector embed_record(const EmbeddingModel& model, const Record& record) {
    FeatureVector fv;
    fv.values.resize(model.slots().size() * model.dim());
    model.embed_into(record, fv.values);
    for (const auto& s : model.slots()) {
        for (std::size_t k = 0; k < model.dim(); ++k) fv.attribution.push_back(s.column);
    }
    return fv;
}

inline double cosine_similarity(std::span<const float> a, std::span<const float> b) {
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        dot += static_cast<double>(a[i]) * b[i];
        na += static_cast<double>(a[i]) * a[i];
        nb += static_cast<double>(b[i]) * b[i];
    }
    if (na == 0.0 || nb == 0.0) return 0.0;
    return dot / std::sqrt(na * nb);
}

class EmbeddingFeaturizer final : public Featurizer {
public:
    explicit EmbeddingFeaturizer(EmbeddingParams params = {}) : params_(params) {}
    explicit EmbeddingFeaturizer(EmbeddingModel model) : model_(std::move(model)) { rebuild_attribution(); }

    std::string_view type() const override { return "embedding"; }

    void fit(const Table& train) override {
        model_ = train_embeddings(train, params_);
        rebuild_attribution();
    }

    std::size_t width() const override { return attribution_.size(); }
    const std::vector<std::size_t>& attribution() const override { return attribution_; }
    const EmbeddingModel& model() const { return model_; }

    void transform_into(const Record& record, std::span<double> out) const override {
        model_.embed_into(record, out);
    }

    nlohmann::json to_json() const override {
        const auto blob = model_.serialize();
        return {{"type", "embedding"},
                {"model", nlohmann::json::binary(std::vector<std::uint8_t>(blob.begin(), blob.end()))}};
    }

    static std::shared_ptr<EmbeddingFeaturizer> from_json(const nlohmann::json& j) {
        const auto& bin = j.at("model").get_binary();
        return std::make_shared<EmbeddingFeaturizer>(
            EmbeddingModel::deserialize(std::string_view(reinterpret_cast<const char*>(bin.data()), bin.size())));
    }

private:
    void rebuild_attribution() {
        attribution_.clear();
        for (const auto& s : model_.slots()) {
            for (std::size_t k = 0; k < model_.dim(); ++k) attribution_.push_back(s.column);
        }
    }

    EmbeddingParams params_;
    EmbeddingModel model_;
    std::vector<std::size_t> attribution_;
};

} // namespace boostclean
