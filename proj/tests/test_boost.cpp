#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include "support/fixtures.hpp"
#include "support/naive_boost.hpp"

using namespace boostclean;
using fixtures::M;
using fixtures::N;
using fixtures::T;

namespace {

std::vector<Value> ab() { return {T("a"), T("b")}; }

/// Axis stumps over both moon features, both polarities.
CandidateSet moon_stumps(const Table& test) {
    std::vector<Member> members;
    std::size_t id = 0;
    for (std::size_t col = 0; col < 2; ++col) {
        for (double th = -1.0; th <= 2.0; th += 0.25) {
            members.push_back({id++, std::nullopt, std::make_shared<fixtures::Stump>(col, th, T("a"), T("b"))});
            members.push_back({id++, std::nullopt, std::make_shared<fixtures::Stump>(col, th, T("b"), T("a"))});
        }
    }
    auto cs = start_candidates(ab(), T("a"), test);
    add_members(cs, std::move(members), test);
    return cs;
}

double best_single(const CandidateSet& cs) {
    double best = 0.0;
    for (const auto& c : cs.candidates) best = std::max(best, detail::candidate_accuracy(c, cs.truth));
    return best;
}

double predict_accuracy(const Ensemble& e, const Table& test) {
    std::size_t ok = 0, n = 0;
    for (const auto& r : test.records) {
        if (r.label.is_missing()) continue;
        ++n;
        ok += ensemble_predict(e, r) == r.label;
    }
    return static_cast<double>(ok) / static_cast<double>(n);
}

PredicatePtr missing_in(std::size_t column) {
    return std::make_shared<FunctionPredicate>("missing", ColumnSet{column}, [column](const Record& r) {
        return r.values[column].is_missing() ? ColumnSet{column} : ColumnSet{};
    });
}

} // namespace

TEST(Candidates, NoPredicatesLeavesOnlyTheBase) {
    const Table train = fixtures::census_like(200, 1);
    const Table test = fixtures::census_like(80, 2);
    const auto cs = build_candidates({}, {}, train, test, 0);
    ASSERT_EQ(cs.candidates.size(), 1u);
    EXPECT_EQ(cs.candidates[0].id(), 0u);
    EXPECT_FALSE(cs.candidates[0].member.repair);
    const auto e = boost_select(cs, 5);
    EXPECT_EQ(e.base_accuracy, e.selection_accuracy);
}

TEST(Candidates, EnumerationPerPredicate) {
    Table train = fixtures::census_like(200, 1);
    for (std::size_t i = 0; i < train.rows(); i += 9) train.records[i].values[0] = M();
    const Table test = fixtures::census_like(80, 2);
    const PredicatePtr preds[] = {missing_in(0)};
    const auto cs = build_candidates(preds, {}, train, test, 0);
    // base, mean, median, mode, discard, default
    ASSERT_EQ(cs.candidates.size(), 6u);
    const char* kinds[] = {"impute_mean", "impute_median", "impute_mode", "discard", "default_prediction"};
    for (std::size_t i = 1; i < 6; ++i) {
        EXPECT_EQ(cs.candidates[i].id(), i);
        EXPECT_EQ(cs.candidates[i].member.repair_name(), kinds[i - 1]);
    }
    EXPECT_EQ(cs.candidates[5].member.repair->stage(), Stage::prediction);

    RepairLibrary lib;
    lib.prediction_imputation = true;
    EXPECT_EQ(build_candidates(preds, lib, train, test, 0).candidates.size(), 9u);
    RepairLibrary none;
    none.impute_mean = none.impute_median = none.impute_mode = none.discard = none.default_prediction = false;
    EXPECT_EQ(build_candidates(preds, none, train, test, 0).candidates.size(), 1u);
}

TEST(Candidates, ThreadCountDoesNotChangePredictions) {
    Table train = fixtures::census_like(200, 3);
    for (std::size_t i = 0; i < train.rows(); i += 7) train.records[i].values[1] = M();
    const Table test = fixtures::census_like(60, 4);
    const PredicatePtr preds[] = {missing_in(1)};
    const auto a = build_candidates(preds, {}, train, test, 5, reference_trainer(), 1);
    const auto b = build_candidates(preds, {}, train, test, 5, reference_trainer(), 4);
    ASSERT_EQ(a.candidates.size(), b.candidates.size());
    for (std::size_t i = 0; i < a.candidates.size(); ++i) {
        EXPECT_EQ(a.candidates[i].predictions, b.candidates[i].predictions);
    }
}

TEST(Candidates, UnlabelledTestRowsAreDropped) {
    Table test = fixtures::census_like(50, 4);
    test.records[3].label = M();
    const auto cs = start_candidates(ab(), T("a"), test);
    EXPECT_EQ(cs.rows(), 49u);
}

TEST(Candidates, IndexIsInverseOfPredictions) {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const auto [cs, test] = fixtures::random_problem(60, 4, 3, seed);
        for (const auto& c : cs.candidates) {
            std::size_t total = 0;
            for (std::uint32_t y = 0; y < c.index.size(); ++y) {
                EXPECT_TRUE(std::is_sorted(c.index[y].begin(), c.index[y].end()));
                for (auto r : c.index[y]) EXPECT_EQ(c.predictions[r], y);
                total += c.index[y].size();
            }
            EXPECT_EQ(total, c.predictions.size());
        }
    }
}

TEST(WeightedError, MatchesDirectScan) {
    Rng rng(11);
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
        const auto [cs, test] = fixtures::random_problem(40, 3, 2 + seed % 3, seed);
        std::vector<double> w(cs.rows());
        for (double& x : w) x = rng.uniform();
        const double total = std::accumulate(w.begin(), w.end(), 0.0);
        for (const auto& c : cs.candidates) {
            double mass = 0.0;
            for (std::size_t i = 0; i < cs.rows(); ++i) mass += c.predictions[i] != cs.truth[i] ? w[i] : 0.0;
            EXPECT_NEAR(weighted_error(c, w, cs.truth), mass / total, 1e-12);
            const std::uint32_t target = 0;
            double mass_t = 0.0;
            for (std::size_t i = 0; i < cs.rows(); ++i) {
                mass_t += (c.predictions[i] == target) != (cs.truth[i] == target) ? w[i] : 0.0;
            }
            EXPECT_NEAR(weighted_error(c, w, cs.truth, target), mass_t / total, 1e-12);
        }
    }
}

TEST(Alpha, Values) {
    EXPECT_DOUBLE_EQ(alpha_for(0.25), std::log(3.0));
    EXPECT_DOUBLE_EQ(alpha_for(0.5), 0.0);
    EXPECT_TRUE(std::isfinite(alpha_for(0.0)));
    EXPECT_NEAR(alpha_for(0.0), std::log((1.0 - kEpsilonFloor) / kEpsilonFloor), 1e-9);
}

TEST(Boost, PerfectCandidateWinsOneRound) {
    Table test = fixtures::moons(100, 1);
    std::vector<Value> truth;
    for (const auto& r : test.records) truth.push_back(r.label);
    std::vector<Member> members;
    members.push_back({0, std::nullopt, std::make_shared<fixtures::Stump>(0, 0.5, T("a"), T("b"))});
    members.push_back({1, std::nullopt, std::make_shared<fixtures::Scripted>(truth, ab())});
    auto cs = start_candidates(ab(), T("a"), test);
    add_members(cs, std::move(members), test);
    const auto e = boost_select(cs, 1);
    ASSERT_EQ(e.classes.size(), 1u);
    ASSERT_EQ(e.classes[0].rounds.size(), 1u);
    const auto& r = e.classes[0].rounds[0];
    EXPECT_EQ(r.candidate, 1u);
    EXPECT_EQ(r.epsilon, 0.0);
    EXPECT_FALSE(r.updated);
    EXPECT_EQ(e.selection_accuracy, 1.0);
    // a perfect round ends selection even with budget left
    EXPECT_EQ(boost_select(cs, 5).round_count(), 1u);
}

TEST(Boost, TieGoesToLowerId) {
    const Table test = fixtures::moons(40, 2);
    std::vector<Member> members;
    for (std::size_t id : {3u, 1u, 2u}) {
        members.push_back({id, std::nullopt, std::make_shared<fixtures::Stump>(0, 0.5, T("a"), T("b"))});
    }
    auto cs = start_candidates(ab(), T("a"), test);
    add_members(cs, std::move(members), test);
    SelectOptions raw;
    raw.never_worse = false;
    const auto e = boost_select(cs, 1, 0, raw);
    ASSERT_EQ(e.round_count(), 1u);
    EXPECT_EQ(e.classes[0].rounds[0].candidate, 1u);
}

TEST(Boost, BudgetZeroIsTheBase) {
    const auto [cs, test] = fixtures::random_problem(50, 4, 2, 3);
    const auto e = boost_select(cs, 0);
    EXPECT_EQ(e.round_count(), 0u);
    ASSERT_TRUE(e.single);
    EXPECT_EQ(*e.single, cs.candidates.front().id());
    EXPECT_EQ(e.selection_accuracy, e.base_accuracy);
}

TEST(Boost, MoonStumpsBeatBestSingleStump) {
    const Table test = fixtures::moons(400, 3);
    const auto cs = moon_stumps(test);
    SelectOptions raw;
    raw.never_worse = false;
    const auto e = boost_select(cs, 5, 0, raw);
    EXPECT_EQ(e.round_count(), 5u);
    EXPECT_GT(e.selection_accuracy, best_single(cs));
    EXPECT_DOUBLE_EQ(predict_accuracy(e, test), e.selection_accuracy);
}

TEST(Boost, WeightsNormalizedAndChosenErrorBecomesHalf) {
    const Table test = fixtures::moons(300, 4);
    const auto cs = moon_stumps(test);
    std::size_t calls = 0;
    auto observer = [&](const Round& r, std::span<const double> w) {
        ++calls;
        EXPECT_NEAR(sum_weights(w), 1.0, 1e-12);
        for (double x : w) EXPECT_GT(x, 0.0);
        const auto& c = cs.candidates[detail::position_of(cs, r.candidate)];
        EXPECT_NEAR(weighted_error(c, w, cs.truth, 0u), 0.5, 1e-12);
    };
    boost_select(cs, 8, 0, {}, observer);
    EXPECT_GT(calls, 2u);
}

TEST(Boost, TrainingErrorBound) {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const auto [cs, test] = fixtures::random_problem(200, 10, 2, seed);
        SelectOptions raw;
        raw.never_worse = false;
        const auto e = boost_select(cs, 10, 0, raw);
        double bound = 1.0;
        for (const auto& r : e.classes[0].rounds) bound *= 2.0 * std::sqrt(r.epsilon * (1.0 - r.epsilon));
        EXPECT_LE(1.0 - e.selection_accuracy, bound + 1e-12) << seed;
    }
}

TEST(Boost, NeverWorseThanTheBase) {
    for (std::uint64_t seed = 0; seed < 40; ++seed) {
        const auto [cs, test] = fixtures::random_problem(80, 6, 2 + seed % 3, seed);
        for (std::size_t budget : {1u, 3u, 8u}) {
            const auto e = boost_select(cs, budget);
            EXPECT_GE(e.selection_accuracy, e.base_accuracy) << seed << " " << budget;
            EXPECT_DOUBLE_EQ(predict_accuracy(e, test), e.selection_accuracy) << seed << " " << budget;
        }
    }
}

TEST(Boost, MatchesNaiveReference) {
    for (std::uint64_t seed = 0; seed < 30; ++seed) {
        const std::size_t n_labels = 2 + seed % 3;
        const auto [cs, test] = fixtures::random_problem(70, 5, n_labels, seed);
        SelectOptions raw;
        raw.never_worse = false;
        const auto e = boost_select(cs, 6, 0, raw);
        const auto ref = naive::select(naive::members_of(cs), test, cs.labels.values(), 6);
        ASSERT_EQ(e.classes.size(), ref.size()) << seed;
        for (std::size_t c = 0; c < ref.size(); ++c) {
            ASSERT_EQ(e.classes[c].rounds.size(), ref[c].size()) << seed;
            for (std::size_t t = 0; t < ref[c].size(); ++t) {
                EXPECT_EQ(e.classes[c].rounds[t].candidate, ref[c][t].candidate);
                EXPECT_NEAR(e.classes[c].rounds[t].epsilon, ref[c][t].epsilon, 1e-12);
                EXPECT_NEAR(e.classes[c].rounds[t].alpha, ref[c][t].alpha, 1e-9);
            }
        }
    }
}

TEST(Boost, ThreeClassOneVsRest) {
    const auto [cs, test] = fixtures::random_problem(150, 8, 3, 21);
    const auto e = one_vs_rest(cs, 5);
    EXPECT_FALSE(e.binary);
    if (!e.single) {
        EXPECT_EQ(e.classes.size(), 3u);
    }
    EXPECT_GE(e.selection_accuracy, e.base_accuracy);
}

TEST(Boost, TwoLabelsRunOnceAndMarginsAreAntisymmetric) {
    const Table test = fixtures::moons(200, 5);
    const auto cs = moon_stumps(test);
    SelectOptions raw;
    raw.never_worse = false;
    const auto e = boost_select(cs, 4, 0, raw);
    ASSERT_TRUE(e.binary);
    ASSERT_EQ(e.classes.size(), 1u);
    EXPECT_EQ(e.classes[0].label, T("a"));
    for (const auto& r : test.records) {
        const double ma = ensemble_margin(e, r, T("a"));
        EXPECT_DOUBLE_EQ(ensemble_margin(e, r, T("b")), -ma);
        if (ma > 0) {
            EXPECT_EQ(ensemble_predict(e, r), T("a"));
        }
        if (ma < 0) {
            EXPECT_EQ(ensemble_predict(e, r), T("b"));
        }
    }
}

TEST(EnsemblePredict, ZeroMarginGoesToDefaultLabel) {
    Ensemble e;
    e.labels = ab();
    e.binary = true;
    e.default_label = T("b");
    e.classes.push_back({T("a"), {Round{0, 1, 0.25, 1.0}, Round{1, 2, 0.25, 1.0}}});
    e.members[1] = Member{1, std::nullopt, std::make_shared<fixtures::Stump>(0, 0.0, T("a"), T("b"))};
    e.members[2] = Member{2, std::nullopt, std::make_shared<fixtures::Stump>(0, 0.0, T("b"), T("a"))};
    EXPECT_EQ(ensemble_predict(e, Record{{N(-1)}, M(), 0}), T("b"));
    e.default_label = T("a");
    EXPECT_EQ(ensemble_predict(e, Record{{N(-1)}, M(), 0}), T("a"));
    e.classes[0].rounds[0].alpha = 2.0;
    EXPECT_EQ(ensemble_predict(e, Record{{N(-1)}, M(), 0}), T("a"));
    EXPECT_EQ(ensemble_predict(e, Record{{N(1)}, M(), 0}), T("b"));
}

TEST(EnsemblePredict, MultiClassArgmaxTieFollowsLabelOrder) {
    Ensemble e;
    e.labels = {T("x"), T("y"), T("z")};
    e.binary = false;
    e.default_label = T("x");
    // one member always says "y"; equal alpha in every class
    e.members[0] = Member{0, std::nullopt, std::make_shared<fixtures::Stump>(0, 1e9, T("y"), T("y"))};
    for (const auto& l : e.labels) e.classes.push_back({l, {Round{0, 0, 0.25, 1.0}}});
    EXPECT_EQ(ensemble_predict(e, Record{{N(0)}, M(), 0}), T("y"));
    e.members[0] = Member{0, std::nullopt, std::make_shared<fixtures::Stump>(0, 1e9, T("q"), T("q"))};
    EXPECT_EQ(ensemble_predict(e, Record{{N(0)}, M(), 0}), T("x"));
}

TEST(EnsemblePredict, PredictionRepairOverridesClassifier) {
    const Table train = fixtures::make_table({{"x", ColumnType::numeric}}, {{N(0)}, {N(1)}}, {T("a"), T("b")});
    const ConditionalRepair dflt(missing_in(0), RepairFunction{RepairKind::default_prediction, std::nullopt, T("b")},
                                 Stage::prediction);
    const Member m{1, dflt, std::make_shared<fixtures::Stump>(0, 0.5, T("a"), T("a"))};
    EXPECT_EQ(m.predict(Record{{M()}, M(), 0}), T("b"));
    EXPECT_EQ(m.predict(Record{{N(0)}, M(), 0}), T("a"));
    const ConditionalRepair impute(missing_in(0), RepairFunction{RepairKind::impute_mean, 0, N(9)}, Stage::data);
    const Member d{2, impute, std::make_shared<fixtures::Stump>(0, 5.0, T("a"), T("b"))};
    EXPECT_EQ(d.predict(Record{{M()}, M(), 0}), T("b"));
}

TEST(SelectionReport, Fields) {
    Table train = fixtures::census_like(300, 7);
    for (std::size_t i = 0; i < train.rows(); i += 5) train.records[i].values[2] = M();
    Table test = fixtures::census_like(120, 8);
    for (std::size_t i = 0; i < test.rows(); i += 5) test.records[i].values[2] = M();
    const PredicatePtr preds[] = {missing_in(2)};
    const auto cs = build_candidates(preds, {}, train, test, 0);
    const auto e = boost_select(cs, 3);
    const auto j = selection_report(e, cs);
    EXPECT_EQ(j["candidates"], cs.candidates.size());
    EXPECT_EQ(j["selection_rows"], 120u);
    EXPECT_EQ(j["binary"], true);
    EXPECT_GE(j["selection_accuracy"].get<double>(), j["base_accuracy"].get<double>());
    ASSERT_EQ(j["classes"].size(), 1u);
    for (const auto& r : j["classes"][0]["rounds"]) {
        EXPECT_TRUE(r.contains("epsilon"));
        EXPECT_TRUE(r.contains("alpha"));
        EXPECT_TRUE(r.contains("predicate_id"));
    }
    EXPECT_EQ(extract_plan(e).steps.size(), j["plan"].size());
}
