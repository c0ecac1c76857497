#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include <nlohmann/json.hpp>

#include "detect.hpp"
#include "model.hpp"
#include "parallel.hpp"
#include "repair.hpp"
#include "table.hpp"

namespace boostclean {

inline constexpr double kEpsilonFloor = 1e-10;
// Errors this close to 1/2 are rounding noise after an update; they stop selection.
inline constexpr double kStopSlack = 1e-12;

/// Which repairs are enumerated for every (predicate, column).
struct RepairLibrary {
    bool impute_mean = true;
    bool impute_median = true;
    bool impute_mode = true;
    bool discard = true;
    bool default_prediction = true;
    bool prediction_imputation = false;  // imputations also offered at the prediction stage
};

/// One voter: a classifier plus the single conditional repair it was built from.
struct Member {
    std::size_t id = 0;
    std::optional<ConditionalRepair> repair;  // empty for the base classifier
    ClassifierPtr classifier;

    Value predict(const Record& record) const {
        if (!repair) return classifier->predict(record);
        if (repair->stage() == Stage::data) return classifier->predict(repair->clean_for_prediction(record, record));
        if (repair->claims(record)) return repair->predict(record, record, *classifier);
        return classifier->predict(record);
    }

    std::string predicate_id() const { return repair ? repair->predicate().id() : std::string(); }
    std::string repair_name() const { return repair ? repair->repair().name() : std::string("none"); }
    std::string describe() const { return repair ? repair->describe() : std::string("base"); }
};

/// Dense ids for labels: train order first, then anything only seen on test.
class LabelSet {
public:
    std::uint32_t intern(const Value& v) {
        auto [it, inserted] = ids_.try_emplace(v, static_cast<std::uint32_t>(values_.size()));
        if (inserted) values_.push_back(v);
        return it->second;
    }
    std::optional<std::uint32_t> find(const Value& v) const {
        auto it = ids_.find(v);
        if (it == ids_.end()) return std::nullopt;
        return it->second;
    }
    const std::vector<Value>& values() const { return values_; }
    std::size_t size() const { return values_.size(); }

private:
    std::vector<Value> values_;
    std::unordered_map<Value, std::uint32_t, ValueHash> ids_;
};

/// A member with its test predictions materialized and indexed by label.
struct Candidate {
    Member member;
    std::vector<std::uint32_t> predictions;          // per test row, label ids
    std::vector<std::vector<std::uint32_t>> index;   // label id -> ascending test rows

    std::size_t id() const { return member.id; }
};

struct SkippedCandidate {
    std::size_t id = 0;
    std::string description;
    std::string reason;
};

/// Everything boosting needs: candidates materialized over one selection test set.
struct CandidateSet {
    LabelSet labels;
    std::vector<std::uint32_t> truth;  // per test row; unlabelled test rows are dropped
    std::vector<Candidate> candidates;
    std::vector<SkippedCandidate> skipped;
    Value default_label;  // majority train label, breaks binary ties

    std::size_t rows() const { return truth.size(); }
};

/// Test rows that carry a label; selection is only defined on those.
inline Table labelled_rows(const Table& test) {
    Table out;
    out.schema = test.schema;
    for (const auto& r : test.records) {
        if (!r.label.is_missing()) out.records.push_back(r);
    }
    return out;
}

/// Starts a candidate set for `test`; `train_labels` fixes the label order.
inline CandidateSet start_candidates(const std::vector<Value>& train_labels, Value default_label, const Table& test) {
    CandidateSet cs;
    for (const auto& l : train_labels) cs.labels.intern(l);
    for (const auto& r : test.records) {
        if (!r.label.is_missing()) cs.truth.push_back(cs.labels.intern(r.label));
    }
    cs.default_label = std::move(default_label);
    return cs;
}

namespace detail {

/// Materialized predictions are first collected as values, then interned once
/// all candidates exist so label ids are stable regardless of thread timing.
inline std::vector<Value> predict_rows(const Member& m, const Table& test) {
    std::vector<Value> out;
    out.reserve(test.rows());
    for (const auto& r : test.records) {
        if (!r.label.is_missing()) out.push_back(m.predict(r));
    }
    return out;
}

inline void index_candidate(Candidate& c, std::size_t n_labels) {
    c.index.assign(n_labels, {});
    for (std::size_t i = 0; i < c.predictions.size(); ++i) {
        c.index[c.predictions[i]].push_back(static_cast<std::uint32_t>(i));
    }
}

} // namespace detail

/// Adds already-built members to `cs`, materializing them over `test`
/// (which must be the table `cs` was started from).
inline void add_members(CandidateSet& cs, std::vector<Member> members, const Table& test, std::size_t threads = 1) {
    std::vector<std::vector<Value>> raw(members.size());
    parallel_for(members.size(), threads, [&](std::size_t i) { raw[i] = detail::predict_rows(members[i], test); });
    for (std::size_t i = 0; i < members.size(); ++i) {
        Candidate c;
        c.member = std::move(members[i]);
        c.predictions.reserve(raw[i].size());
        for (const auto& v : raw[i]) c.predictions.push_back(cs.labels.intern(v));
        cs.candidates.push_back(std::move(c));
    }
    for (auto& c : cs.candidates) detail::index_candidate(c, cs.labels.size());
}

namespace detail {

struct CandidateSpec {
    std::size_t id = 0;
    ConditionalRepair repair;
};

} // namespace detail

/// Enumerates one candidate per applicable (predicate, column, repair) and
/// trains/materializes them. Candidate 0 is the base classifier; candidate i
/// trains with seed + i. Ids are enumeration positions, so skipped candidates
/// leave gaps.
inline CandidateSet build_candidates(std::span<const PredicatePtr> predicates, const RepairLibrary& library,
                                     const Table& train, const Table& test, std::uint64_t seed,
                                     const TrainProcedure& train_fn = reference_trainer(), std::size_t threads = 1) {
    ClassifierPtr base = train_fn(train, seed);
    CandidateSet cs = start_candidates(label_order(train), majority_label(train), test);

    std::vector<std::vector<ColumnSet>> violations(predicates.size());
    parallel_for(predicates.size(), threads,
                 [&](std::size_t p) { violations[p] = violations_of(*predicates[p], train); });

    std::vector<detail::CandidateSpec> specs;
    std::size_t next_id = 1;
    auto add = [&](const PredicatePtr& p, std::optional<RepairFunction> f, Stage stage, std::string what) {
        const std::size_t id = next_id++;
        if (!f) {
            cs.skipped.push_back({id, p->id() + " -> " + what, "statistic undefined: every train cell is flagged"});
            return;
        }
        specs.push_back({id, ConditionalRepair(p, std::move(*f), stage)});
    };
    for (std::size_t p = 0; p < predicates.size(); ++p) {
        const auto& pred = predicates[p];
        const ColumnSet scope = pred->scope();
        for (std::size_t c : scope) {
            const bool numeric = train.schema.columns[c].type == ColumnType::numeric;
            const std::string col = "[" + std::to_string(c) + "]";
            std::vector<std::pair<RepairKind, std::optional<RepairFunction>>> fns;
            if (library.impute_mean && numeric) fns.emplace_back(RepairKind::impute_mean, impute_mean(train, c, violations[p]));
            if (library.impute_median && numeric) {
                fns.emplace_back(RepairKind::impute_median, impute_median(train, c, violations[p]));
            }
            if (library.impute_mode) fns.emplace_back(RepairKind::impute_mode, impute_mode(train, c, violations[p]));
            for (auto& [kind, f] : fns) add(pred, f, Stage::data, std::string(to_string(kind)) + col);
            if (library.prediction_imputation) {
                for (auto& [kind, f] : fns) add(pred, f, Stage::prediction, std::string(to_string(kind)) + col);
            }
        }
        if (library.discard) add(pred, discard_record(), Stage::data, "discard");
        if (library.default_prediction) add(pred, default_prediction(train), Stage::prediction, "default_prediction");
    }

    std::vector<std::optional<Member>> built(specs.size());
    std::vector<std::string> failures(specs.size());
    parallel_for(specs.size(), threads, [&](std::size_t i) {
        const auto& spec = specs[i];
        Member m{spec.id, spec.repair, base};
        if (spec.repair.stage() == Stage::data) {
            const ConditionalRepair one[] = {spec.repair};
            Table repaired = apply_data_repairs(one, train);
            try {
                m.classifier = train_fn(repaired, seed + spec.id);
            } catch (const DegenerateDataError& e) {
                failures[i] = e.what();
                return;
            }
        }
        built[i] = std::move(m);
    });

    std::vector<Member> members;
    members.push_back(Member{0, std::nullopt, base});
    for (std::size_t i = 0; i < specs.size(); ++i) {
        if (built[i]) {
            members.push_back(std::move(*built[i]));
        } else {
            cs.skipped.push_back({specs[i].id, specs[i].repair.describe(), failures[i]});
        }
    }
    std::sort(cs.skipped.begin(), cs.skipped.end(), [](const auto& a, const auto& b) { return a.id < b.id; });
    add_members(cs, std::move(members), test, threads);
    return cs;
}

// ---------------------------------------------------------------------------
// Selection

/// Rows the candidate gets right. With a target class the problem is the
/// one-vs-rest relabelling {+1 if y = target else -1}. Built from the label
/// index, ascending.
inline std::vector<std::uint32_t> correct_rows(const Candidate& c, std::span<const std::uint32_t> truth,
                                               std::optional<std::uint32_t> target = std::nullopt) {
    std::vector<std::uint32_t> rows;
    if (!target) {
        for (std::size_t y = 0; y < c.index.size(); ++y) {
            for (auto r : c.index[y]) {
                if (truth[r] == y) rows.push_back(r);
            }
        }
    } else {
        const std::uint32_t t = *target;
        for (std::size_t y = 0; y < c.index.size(); ++y) {
            const bool says_target = y == t;
            for (auto r : c.index[y]) {
                if (says_target == (truth[r] == t)) rows.push_back(r);
            }
        }
    }
    std::sort(rows.begin(), rows.end());
    return rows;
}

inline std::vector<std::uint32_t> wrong_rows(const Candidate& c, std::span<const std::uint32_t> truth,
                                             std::optional<std::uint32_t> target = std::nullopt) {
    const auto right = correct_rows(c, truth, target);
    std::vector<std::uint32_t> out;
    std::size_t j = 0;
    for (std::uint32_t i = 0; i < truth.size(); ++i) {
        if (j < right.size() && right[j] == i) {
            ++j;
        } else {
            out.push_back(i);
        }
    }
    return out;
}

inline double sum_weights(std::span<const double> w) {
    double s = 0.0;
    for (double x : w) s += x;
    return s;
}

inline double sum_weights(std::span<const double> w, std::span<const std::uint32_t> rows) {
    double s = 0.0;
    for (auto r : rows) s += w[r];
    return s;
}

/// 1 - weighted accuracy, from the materialized index only.
inline double weighted_error(const Candidate& c, std::span<const double> w, std::span<const std::uint32_t> truth,
                             std::optional<std::uint32_t> target = std::nullopt) {
    return sum_weights(w, wrong_rows(c, truth, target)) / sum_weights(w);
}

inline double alpha_for(double epsilon) {
    const double e = std::clamp(epsilon, kEpsilonFloor, 1.0 - kEpsilonFloor);
    return std::log((1.0 - e) / e);
}

/// Multiplies correct rows by e^(-alpha/2) and wrong rows by e^(+alpha/2), then
/// renormalizes. The half step makes the chosen candidate's updated error 1/2.
inline void update_weights(std::vector<double>& w, std::span<const std::uint32_t> wrong, double alpha) {
    const double down = std::exp(-alpha / 2.0);
    const double up = std::exp(alpha / 2.0);
    std::size_t j = 0;
    for (std::size_t i = 0; i < w.size(); ++i) {
        if (j < wrong.size() && wrong[j] == i) {
            w[i] *= up;
            ++j;
        } else {
            w[i] *= down;
        }
    }
    const double total = sum_weights(w);
    for (double& x : w) x /= total;
}

struct Round {
    std::size_t t = 0;
    std::size_t candidate = 0;  // candidate id
    double epsilon = 0.0;       // unclamped weighted error
    double alpha = 0.0;
    bool updated = true;        // false when a perfect round ended selection
    double running_accuracy = 0.0;
};

/// Rounds for one target class (binary problems have a single target).
struct ClassRounds {
    Value label;
    std::vector<Round> rounds;
};

/// Called after every weight update with the new weights.
using RoundObserver = std::function<void(const Round&, std::span<const double> weights)>;

struct Ensemble {
    std::vector<Value> labels;
    bool binary = true;
    Value default_label;
    std::vector<ClassRounds> classes;
    std::optional<std::size_t> single;  // never-worse fallback: this member alone decides
    std::map<std::size_t, Member> members;
    double base_accuracy = 0.0;
    double selection_accuracy = 0.0;
    bool truncated = false;

    std::size_t round_count() const {
        std::size_t n = 0;
        for (const auto& c : classes) n += c.rounds.size();
        return n;
    }
};

namespace detail {

inline std::size_t position_of(const CandidateSet& cs, std::size_t id) {
    for (std::size_t k = 0; k < cs.candidates.size(); ++k) {
        if (cs.candidates[k].id() == id) return k;
    }
    throw ValidationError("unknown candidate id " + std::to_string(id));
}

/// Combines member votes. `vote(id)` returns the member's label id.
template <class Vote>
std::uint32_t decide(const Ensemble& e, const LabelSet& labels, Vote&& vote) {
    auto id_of = [&](const Value& v) { return *labels.find(v); };
    if (e.single) return vote(*e.single);
    if (e.binary) {
        const std::uint32_t pos = id_of(e.classes[0].label);
        double m = 0.0;
        for (const auto& r : e.classes[0].rounds) m += r.alpha * (vote(r.candidate) == pos ? 1.0 : -1.0);
        if (m > 0) return pos;
        if (m < 0) return pos == 0 ? 1 : 0;
        return id_of(e.default_label);
    }
    std::uint32_t best = 0;
    double best_margin = -INFINITY;
    for (const auto& cls : e.classes) {
        const std::uint32_t c = id_of(cls.label);
        double m = 0.0;
        for (const auto& r : cls.rounds) m += r.alpha * (vote(r.candidate) == c ? 1.0 : -1.0);
        if (m > best_margin) {
            best_margin = m;
            best = c;
        }
    }
    return best;
}

inline LabelSet label_set_of(const Ensemble& e) {
    LabelSet s;
    for (const auto& l : e.labels) s.intern(l);
    return s;
}

inline double materialized_accuracy(const Ensemble& e, const CandidateSet& cs) {
    if (cs.rows() == 0) return 0.0;
    std::map<std::size_t, const Candidate*> by_id;
    for (const auto& c : cs.candidates) by_id[c.id()] = &c;
    std::size_t ok = 0;
    for (std::size_t i = 0; i < cs.rows(); ++i) {
        const auto y = decide(e, cs.labels, [&](std::size_t id) { return by_id.at(id)->predictions[i]; });
        ok += y == cs.truth[i];
    }
    return static_cast<double>(ok) / static_cast<double>(cs.rows());
}

inline double candidate_accuracy(const Candidate& c, std::span<const std::uint32_t> truth) {
    if (truth.empty()) return 0.0;
    return static_cast<double>(correct_rows(c, truth).size()) / static_cast<double>(truth.size());
}

} // namespace detail

/// AdaBoost over materialized candidates for the problem "y = target".
/// Ties in weighted accuracy go to the lower candidate id.
inline ClassRounds boost_target(const CandidateSet& cs, std::uint32_t target, std::size_t budget,
                                const RoundObserver& observer = {}) {
    ClassRounds out;
    out.label = cs.labels.values()[target];
    const std::size_t n = cs.rows();
    const std::size_t k = cs.candidates.size();
    if (n == 0 || k == 0) return out;

    std::vector<std::vector<std::uint32_t>> wrong(k);
    for (std::size_t j = 0; j < k; ++j) wrong[j] = wrong_rows(cs.candidates[j], cs.truth, target);

    std::vector<double> w(n, 1.0 / static_cast<double>(n));
    std::vector<double> margin(n, 0.0);
    const bool default_is_target = cs.labels.find(cs.default_label) == target;
    for (std::size_t t = 0; t < budget; ++t) {
        const double total = sum_weights(w);
        std::size_t best = 0;
        double best_err = 2.0;
        for (std::size_t j = 0; j < k; ++j) {
            const double err = sum_weights(w, wrong[j]) / total;
            if (err < best_err || (err == best_err && cs.candidates[j].id() < cs.candidates[best].id())) {
                best_err = err;
                best = j;
            }
        }
        if (best_err >= 0.5 - kStopSlack) break;
        Round r;
        r.t = t;
        r.candidate = cs.candidates[best].id();
        r.epsilon = best_err;
        r.alpha = alpha_for(best_err);
        r.updated = best_err > kEpsilonFloor;

        std::size_t q = 0;
        std::size_t ok = 0;
        for (std::size_t i = 0; i < n; ++i) {
            const bool is_wrong = q < wrong[best].size() && wrong[best][q] == i;
            if (is_wrong) ++q;
            const bool says_target = (cs.truth[i] == target) != is_wrong;
            margin[i] += r.alpha * (says_target ? 1.0 : -1.0);
            const bool pred_target = margin[i] > 0 || (margin[i] == 0 && default_is_target);
            ok += pred_target == (cs.truth[i] == target);
        }
        r.running_accuracy = static_cast<double>(ok) / static_cast<double>(n);

        if (!r.updated) {
            out.rounds.push_back(r);
            break;
        }
        update_weights(w, wrong[best], r.alpha);
        out.rounds.push_back(r);
        if (observer) observer(r, w);
    }
    return out;
}

struct SelectOptions {
    bool never_worse = true;
};

namespace detail {

inline void fill_members(Ensemble& e, const CandidateSet& cs) {
    e.members.clear();
    auto add = [&](std::size_t id) { e.members.emplace(id, cs.candidates[position_of(cs, id)].member); };
    if (e.single) add(*e.single);
    for (const auto& c : e.classes) {
        for (const auto& r : c.rounds) add(r.candidate);
    }
}

/// Keeps the best common prefix, or the best single candidate when no prefix
/// reaches the base accuracy.
inline void enforce_never_worse(Ensemble& e, const CandidateSet& cs) {
    e.selection_accuracy = materialized_accuracy(e, cs);
    if (e.selection_accuracy >= e.base_accuracy) return;
    std::size_t longest = 0;
    for (const auto& c : e.classes) longest = std::max(longest, c.rounds.size());
    const auto full = e.classes;
    std::size_t best_len = 0;
    double best_acc = -1.0;
    for (std::size_t len = 1; len <= longest; ++len) {
        for (std::size_t c = 0; c < e.classes.size(); ++c) {
            e.classes[c].rounds.assign(full[c].rounds.begin(),
                                       full[c].rounds.begin() + static_cast<std::ptrdiff_t>(std::min(len, full[c].rounds.size())));
        }
        const double acc = materialized_accuracy(e, cs);
        if (acc > best_acc) {
            best_acc = acc;
            best_len = len;
        }
    }
    e.truncated = true;
    for (std::size_t c = 0; c < e.classes.size(); ++c) {
        e.classes[c].rounds.assign(full[c].rounds.begin(),
                                   full[c].rounds.begin() + static_cast<std::ptrdiff_t>(std::min(best_len, full[c].rounds.size())));
    }
    if (best_acc >= e.base_accuracy) {
        e.selection_accuracy = best_acc;
        return;
    }
    std::size_t best = 0;
    double acc = -1.0;
    for (const auto& c : cs.candidates) {
        const double a = candidate_accuracy(c, cs.truth);
        if (a > acc) {
            acc = a;
            best = c.id();
        }
    }
    e.classes = full;
    e.single = best;
    e.selection_accuracy = acc;
}

} // namespace detail

/// Boost-and-Clean selection. Two labels: one binary run with the first train
/// label as +1. More: one run per label (one-vs-rest), argmax of margins.
inline Ensemble boost_select(const CandidateSet& cs, std::size_t budget, std::uint64_t /*seed*/ = 0,
                             const SelectOptions& options = {}, const RoundObserver& observer = {}) {
    if (cs.candidates.empty()) throw ValidationError("boost_select: no candidates");
    Ensemble e;
    e.labels = cs.labels.values();
    e.default_label = cs.default_label;
    e.binary = cs.labels.size() <= 2;
    const std::size_t base = detail::position_of(cs, cs.candidates.front().id());
    e.base_accuracy = detail::candidate_accuracy(cs.candidates[base], cs.truth);
    if (e.binary) {
        e.classes.push_back(boost_target(cs, 0, budget, observer));
    } else {
        for (std::uint32_t c = 0; c < cs.labels.size(); ++c) e.classes.push_back(boost_target(cs, c, budget, observer));
    }
    const bool any_round = e.round_count() > 0;
    if (!any_round) {
        e.single = cs.candidates[base].id();
        e.selection_accuracy = e.base_accuracy;
    } else if (options.never_worse) {
        detail::enforce_never_worse(e, cs);
    } else {
        e.selection_accuracy = detail::materialized_accuracy(e, cs);
    }
    detail::fill_members(e, cs);
    return e;
}

/// Same as boost_select; kept as the explicit multi-class entry point.
inline Ensemble one_vs_rest(const CandidateSet& cs, std::size_t budget, std::uint64_t seed = 0,
                            const SelectOptions& options = {}) {
    return boost_select(cs, budget, seed, options);
}

/// Every member votes with its own repair; votes combine by alpha.
inline Value ensemble_predict(const Ensemble& e, const Record& record) {
    LabelSet labels = detail::label_set_of(e);
    std::map<std::size_t, std::uint32_t> cache;
    auto vote = [&](std::size_t id) {
        auto it = cache.find(id);
        if (it != cache.end()) return it->second;
        const Value v = e.members.at(id).predict(record);
        const auto found = labels.find(v);
        const std::uint32_t y = found ? *found : static_cast<std::uint32_t>(labels.size());
        cache.emplace(id, y);
        return y;
    };
    const auto y = detail::decide(e, labels, vote);
    return e.labels.at(y);
}

/// Margin for `positive`: sum of alpha * (+1 if the member votes positive else -1).
/// A single-member ensemble scores +-1.
inline double ensemble_margin(const Ensemble& e, const Record& record, const Value& positive) {
    if (e.single) return e.members.at(*e.single).predict(record) == positive ? 1.0 : -1.0;
    const ClassRounds* cls = nullptr;
    for (const auto& c : e.classes) {
        if (c.label == positive) cls = &c;
    }
    double sign = 1.0;
    if (!cls) {
        cls = &e.classes.front();  // binary, other label
        sign = -1.0;
    }
    std::map<std::size_t, bool> cache;
    double m = 0.0;
    for (const auto& r : cls->rounds) {
        auto it = cache.find(r.candidate);
        if (it == cache.end()) it = cache.emplace(r.candidate, e.members.at(r.candidate).predict(record) == cls->label).first;
        m += r.alpha * (it->second ? 1.0 : -1.0);
    }
    return sign * m;
}

/// Deployable classifier view of an ensemble.
class EnsembleClassifier final : public Classifier {
public:
    explicit EnsembleClassifier(Ensemble e) : e_(std::move(e)) {}
    std::string_view type() const override { return "ensemble"; }
    Value predict(const Record& r) const override { return ensemble_predict(e_, r); }
    const std::vector<Value>& labels() const override { return e_.labels; }
    nlohmann::json to_json() const override {
        throw ValidationError("use deploy() to serialize an ensemble");
    }
    const Ensemble& ensemble() const { return e_; }

private:
    Ensemble e_;
};

/// The chosen repairs in round order (first class for multi-class), with alphas.
inline RepairPlan extract_plan(const Ensemble& e) {
    RepairPlan plan;
    for (const auto& c : e.classes) {
        for (const auto& r : c.rounds) {
            const auto& m = e.members.at(r.candidate);
            if (!m.repair) continue;
            plan.steps.push_back(*m.repair);
            plan.alphas.push_back(r.alpha);
        }
        if (e.binary) break;
    }
    return plan;
}

inline nlohmann::json selection_report(const Ensemble& e, const CandidateSet& cs) {
    nlohmann::json classes = nlohmann::json::array();
    for (const auto& c : e.classes) {
        nlohmann::json rounds = nlohmann::json::array();
        for (const auto& r : c.rounds) {
            const auto& m = cs.candidates[detail::position_of(cs, r.candidate)].member;
            nlohmann::json j{{"t", r.t},
                             {"candidate_id", r.candidate},
                             {"predicate_id", m.predicate_id()},
                             {"repair", m.repair_name()},
                             {"epsilon", r.epsilon},
                             {"alpha", r.alpha},
                             {"running_accuracy", r.running_accuracy}};
            j["column"] = m.repair && m.repair->repair().column ? nlohmann::json(*m.repair->repair().column)
                                                                 : nlohmann::json();
            j["stage"] = m.repair ? nlohmann::json(std::string(to_string(m.repair->stage()))) : nlohmann::json();
            rounds.push_back(std::move(j));
        }
        classes.push_back({{"label", value_to_report(c.label)}, {"rounds", std::move(rounds)}});
    }
    nlohmann::json skipped = nlohmann::json::array();
    for (const auto& s : cs.skipped) skipped.push_back({{"id", s.id}, {"candidate", s.description}, {"reason", s.reason}});
    nlohmann::json labels = nlohmann::json::array();
    for (const auto& l : e.labels) labels.push_back(value_to_report(l));
    nlohmann::json j{{"binary", e.binary},
                     {"labels", std::move(labels)},
                     {"candidates", cs.candidates.size()},
                     {"skipped", std::move(skipped)},
                     {"selection_rows", cs.rows()},
                     {"base_accuracy", e.base_accuracy},
                     {"selection_accuracy", e.selection_accuracy},
                     {"truncated", e.truncated},
                     {"classes", std::move(classes)},
                     {"plan", extract_plan(e).to_json()}};
    j["fallback_candidate"] = e.single ? nlohmann::json(*e.single) : nlohmann::json();
    return j;
}

} // namespace boostclean
