#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <set>
#include <sys/wait.h>

#include "support/fixtures.hpp"

using namespace boostclean;
using fixtures::M;
using fixtures::N;
using fixtures::T;
namespace fs = std::filesystem;

namespace {

class Scratch {
public:
    Scratch() {
        dir_ = fs::temp_directory_path() / ("boostclean_cli_" + std::to_string(::getpid()) + "_" + std::to_string(counter()++));
        fs::create_directories(dir_);
    }
    ~Scratch() { fs::remove_all(dir_); }
    std::string path(const std::string& name) const { return (dir_ / name).string(); }
    std::string write(const std::string& name, const std::string& text) const {
        std::ofstream(path(name), std::ios::binary) << text;
        return path(name);
    }

private:
    static int& counter() {
        static int c = 0;
        return c;
    }
    fs::path dir_;
};

std::string slurp(const std::string& path) { return csv::read_file(path); }

/// Census fixture with "?" in a categorical column on a label-correlated subset.
Table census_with_questions(std::size_t n, std::uint64_t seed) {
    Table t = fixtures::census_like(n, seed);
    t.schema.columns.push_back({"country", ColumnType::categorical});
    t.schema.label_position = t.schema.columns.size();
    for (auto& r : t.records) r.values.push_back(r.row_id % 23 == 4 ? T("?") : T("United-States"));
    return t;
}

int run(const std::string& args) {
    const std::string cmd = std::string(BOOSTCLEAN_CLI) + " " + args + " > /dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

Config quick() {
    Config c;
    c.classifier.n_trees = 10;
    return c;
}

} // namespace

TEST(ConfigParse, DefaultsAndOverrides) {
    const Config d = parse_config("{}");
    EXPECT_EQ(d.budget, 5u);
    EXPECT_EQ(d.test_fraction, 0.2);
    const Config c = parse_config(R"({"budget": 3, "seed": 9, "detectors": {"zscore_k": 4.0, "embedding": false}})");
    EXPECT_EQ(c.budget, 3u);
    EXPECT_EQ(c.seed, 9u);
    EXPECT_EQ(c.detect.zscore_k, 4.0);
    EXPECT_FALSE(c.detect.embedding);
}

TEST(ConfigParse, UnknownKeysRejected) {
    EXPECT_THROW(parse_config(R"({"budgett": 3})"), ValidationError);
    EXPECT_THROW(parse_config(R"({"detectors": {"forest": {"trees": 3}}})"), ValidationError);
    EXPECT_THROW(parse_config(R"({"repairs": {"impute": true}})"), ValidationError);
    EXPECT_THROW(parse_config("not json"), ValidationError);
}

TEST(Detect, CleanFixtureHasNoMissingHits) {
    Scratch s;
    const auto csv = s.write("clean.csv", write_csv(fixtures::census_like(300, 1)));
    const auto j = cmd_detect(csv, quick());
    for (const auto& p : j["predicates"]) EXPECT_NE(p["kind"], "missing") << p.dump();
    EXPECT_EQ(j["load"]["rows"], 300);
}

TEST(Detect, QuestionMarkRowsListed) {
    Scratch s;
    const auto csv = s.write("census.csv", write_csv(census_with_questions(300, 2)));
    const auto j = cmd_detect(csv, quick());
    bool found = false;
    for (const auto& p : j["predicates"]) {
        if (p["id"] != "missing:country") continue;
        found = true;
        std::set<std::uint64_t> rows(p["rows"].begin(), p["rows"].end());
        std::set<std::uint64_t> expected;
        for (std::uint64_t i = 0; i < 300; ++i) {
            if (i % 23 == 4) expected.insert(i);
        }
        EXPECT_EQ(rows, expected);
    }
    EXPECT_TRUE(found);
}

TEST(Detect, SameSeedSameReport) {
    Scratch s;
    const auto csv = s.write("census.csv", write_csv(census_with_questions(300, 3)));
    EXPECT_EQ(cmd_detect(csv, quick()).dump(), cmd_detect(csv, quick()).dump());
}

TEST(Select, BudgetZeroIsBaseOnly) {
    Scratch s;
    const auto csv = s.write("census.csv", write_csv(census_with_questions(300, 4)));
    Config c = quick();
    c.budget = 0;
    const auto res = cmd_select(csv, c);
    EXPECT_EQ(res.ensemble.round_count(), 0u);
    ASSERT_TRUE(res.ensemble.single);
    EXPECT_EQ(*res.ensemble.single, 0u);
    EXPECT_TRUE(res.report["selection"]["plan"].empty());
}

TEST(Select, InjectedErrorsYieldNonBaseRounds) {
    Table t = fixtures::census_like(600, 5);
    for (auto& r : t.records) {
        if (r.label == T("high") && r.row_id % 4 == 0) r.values[2] = N(-999);
    }
    Scratch s;
    const auto csv = s.write("dirty.csv", write_csv(t));
    const auto res = cmd_select(csv, quick());
    bool non_base = false;
    for (const auto& r : res.report["selection"]["classes"][0]["rounds"]) non_base |= r["candidate_id"] != 0;
    EXPECT_TRUE(non_base) << res.report["selection"].dump(1);
}

TEST(Select, RerunIsByteIdentical) {
    Scratch s;
    const auto csv = s.write("census.csv", write_csv(census_with_questions(300, 6)));
    const auto a = cmd_select(csv, quick());
    const auto b = cmd_select(csv, quick());
    EXPECT_EQ(a.model, b.model);
    EXPECT_EQ(a.report.dump(), b.report.dump());
}

TEST(Predict, AppendsColumnAndKeepsInput) {
    Scratch s;
    const Table t = census_with_questions(300, 7);
    const auto csv = s.write("census.csv", write_csv(t));
    const auto res = cmd_select(csv, quick());
    const auto model = deserialize_model(res.model);
    const std::string text = "age,hours,income,work,region,country,label\n"
                             "41,40.5,52000,Private,\"North\",United-States,high\n"
                             "30,,41000,Gov,South,?,low\n";
    const auto out = cmd_predict_text(model, text);
    const auto rows = csv::parse(out);
    ASSERT_EQ(rows.size(), 3u);
    EXPECT_EQ(rows[0].back().text, "prediction");
    EXPECT_EQ(rows[1].size(), 8u);
    EXPECT_EQ(out.substr(0, out.find('\n')), "age,hours,income,work,region,country,label,prediction");
    EXPECT_NE(out.find("41,40.5,52000,Private,\"North\",United-States,high,"), std::string::npos);
    EXPECT_EQ(cmd_predict_text(model, text), out);
    for (std::size_t i = 1; i < 3; ++i) {
        const auto& p = rows[i].back().text;
        EXPECT_TRUE(p == "high" || p == "low") << p;
    }
}

TEST(Predict, EmptyInputGivesHeaderOnly) {
    Scratch s;
    const auto csv = s.write("census.csv", write_csv(census_with_questions(300, 8)));
    const auto model = deserialize_model(cmd_select(csv, quick()).model);
    EXPECT_EQ(cmd_predict_text(model, "age,hours,income,work,region,country,label\n"),
              "age,hours,income,work,region,country,label,prediction\n");
    EXPECT_THROW(cmd_predict_text(model, "age,hours\n1,2\n"), ValidationError);
}

TEST(Predict, PredictionRepairOverridesLabel) {
    Schema schema;
    schema.columns = {{"x", ColumnType::numeric}};
    schema.label_column = "label";
    schema.label_position = 1;
    Table train = fixtures::make_table({{"x", ColumnType::numeric}},
                                       {{N(0)}, {N(1)}, {N(2)}, {N(10)}, {N(11)}, {N(12)}},
                                       {T("a"), T("a"), T("a"), T("b"), T("b"), T("b")});
    const auto missing = gen_missing(fixtures::make_table({{"x", ColumnType::numeric}}, {{N(1)}, {T("NaN")}}));
    ASSERT_EQ(missing.size(), 1u);
    Ensemble e;
    e.labels = {T("a"), T("b")};
    e.default_label = T("a");
    e.classes.push_back({T("a"), {Round{0, 1, 0.1, std::log(9.0)}}});
    e.members[1] = Member{1, ConditionalRepair(missing[0], RepairFunction{RepairKind::default_prediction, std::nullopt, T("b")}, Stage::prediction),
                          train_reference(train, 0)};
    const DeployedModel m = deserialize_model(serialize_model({schema, e}));
    const auto out = cmd_predict_text(m, "x,label\n1,\nNaN,\n");
    EXPECT_EQ(out, "x,label,prediction\n1,,a\nNaN,,b\n");
}

TEST(Evaluate, PerfectModelAndSingleClass) {
    Schema schema;
    schema.columns = {{"x", ColumnType::numeric}};
    schema.label_column = "label";
    schema.label_position = 1;
    std::vector<std::vector<Value>> rows;
    std::vector<Value> labels;
    for (int i = 0; i < 40; ++i) {
        rows.push_back({N(i < 20 ? i % 2 : 10 + i % 2)});
        labels.push_back(T(i < 20 ? "a" : "b"));
    }
    const Table train = fixtures::make_table({{"x", ColumnType::numeric}}, rows, labels);
    Ensemble e;
    e.labels = {T("a"), T("b")};
    e.default_label = T("a");
    e.single = 0;
    e.members[0] = Member{0, std::nullopt, train_reference(train, 0)};
    const DeployedModel m{schema, e};
    const auto j = cmd_evaluate_text(m, "x,label\n0,a\n1,a\n10,b\n11,b\n");
    EXPECT_EQ(j["accuracy"], 1.0);
    EXPECT_EQ(j["auc"], 1.0);
    EXPECT_EQ(j["per_class"][0]["precision"], 1.0);
    EXPECT_EQ(j["per_class"][1]["recall"], 1.0);
    const auto one = cmd_evaluate_text(m, "x,label\n0,a\n1,a\n");
    EXPECT_TRUE(one["auc"].is_null());
    EXPECT_THROW(cmd_evaluate_text(m, "x\n0\n"), ValidationError);
}

TEST(Evaluate, RandomScorerAucNearHalf) {
    Rng rng(3);
    std::vector<double> s;
    std::vector<char> y;
    for (int i = 0; i < 1000; ++i) {
        s.push_back(rng.uniform());
        y.push_back(i % 2);
    }
    EXPECT_NEAR(*auc(s, y), 0.5, 0.05);
}

TEST(Inject, ExactCountAndConsistentTruth) {
    Table clean = fixtures::census_like(1000, 9);
    InjectionSpec spec;
    spec.seed = 4;
    Injection in;
    in.kind = InjectionKind::missing_sentinel;
    in.columns = {"age"};
    in.fraction = 0.1;
    spec.injections = {in};
    const auto res = inject(clean, spec);
    EXPECT_EQ(res.truth.size(), 100u);
    std::set<std::pair<std::size_t, std::size_t>> listed;
    for (const auto& c : res.truth) listed.insert({c.row, c.column});
    for (std::size_t r = 0; r < clean.rows(); ++r) {
        for (std::size_t c = 0; c < clean.schema.size(); ++c) {
            const bool differs = !(clean.records[r].values[c] == res.dirty.records[r].values[c]);
            EXPECT_EQ(differs, listed.count({r, c}) == 1) << r << "," << c;
        }
    }
}

TEST(Inject, RhoOneTargetsOneClass) {
    Table clean = fixtures::census_like(500, 10);
    InjectionSpec spec;
    Injection in;
    in.kind = InjectionKind::numeric_outlier;
    in.columns = {"income"};
    in.fraction = 0.1;
    in.rho = 1.0;
    in.target_label = T("high");
    spec.injections = {in};
    const auto res = inject(clean, spec);
    ASSERT_FALSE(res.truth.empty());
    for (const auto& c : res.truth) EXPECT_EQ(clean.records[c.row].label, T("high"));
}

TEST(Inject, AllKindsDeterministicAndRecallComputable) {
    // sector follows region, so a rare pair exists
    Table clean = census_with_questions(400, 11);
    clean.schema.columns[5].name = "sector";
    for (auto& r : clean.records) r.values[5] = T("s-" + r.values[4].as_text());
    const auto spec = injection_spec_from_json(nlohmann::json::parse(R"({
        "seed": 3,
        "injections": [
            {"kind": "missing-sentinel", "columns": ["age"], "fraction": 0.05, "sentinel": "-999"},
            {"kind": "numeric-outlier", "columns": ["income"], "fraction": 0.02},
            {"kind": "header-row", "fraction": 0.01},
            {"kind": "swap-columns", "columns": ["work", "region"], "fraction": 0.02},
            {"kind": "rare-co-occurrence", "columns": ["region", "sector"], "fraction": 0.01}
        ]})"));
    const auto a = inject(clean, spec);
    const auto b = inject(clean, spec);
    EXPECT_EQ(write_csv(a.dirty), write_csv(b.dirty));
    EXPECT_EQ(truth_to_json(a, a.dirty.schema, 3), truth_to_json(b, b.dirty.schema, 3));
    const auto d = generate_all(default_library(), a.dirty, 0);
    const double recall = cell_recall(d.predicates, a.dirty, a.truth);
    EXPECT_GE(recall, 0.0);
    EXPECT_LE(recall, 1.0);
    EXPECT_THROW(injection_spec_from_json(nlohmann::json::parse(R"({"injections": [{"kind": "nope"}]})")),
                 ValidationError);
}

TEST(Binary, ExitCodes) {
    Scratch s;
    const auto csv = s.write("census.csv", write_csv(census_with_questions(300, 12)));
    const auto model = s.path("m.bcm");
    EXPECT_EQ(run("detect " + csv + " --out " + s.path("d.json")), 0);
    EXPECT_EQ(run("select " + csv + " --budget 2 --out " + model + " --report " + s.path("r.json")), 0);
    EXPECT_TRUE(fs::exists(model));
    EXPECT_EQ(run("predict " + model + " " + csv + " --out " + s.path("p.csv")), 0);
    EXPECT_EQ(run("evaluate " + model + " " + csv + " --out " + s.path("e.json")), 0);
    const auto j = nlohmann::json::parse(slurp(s.path("e.json")));
    EXPECT_GT(j["accuracy"].get<double>(), 0.5);

    EXPECT_EQ(run("detect /nonexistent.csv"), 2);
    EXPECT_EQ(run("select " + csv), 2);
    EXPECT_EQ(run("detect " + csv + " --config " + s.write("bad.json", R"({"oops": 1})")), 2);
    EXPECT_EQ(run("frobnicate"), 2);
    const auto single = s.write("single.csv", "x,label\n1,a\n2,a\n3,a\n4,a\n5,a\n6,a\n7,a\n8,a\n9,a\n10,a\n");
    EXPECT_EQ(run("select " + single + " --out " + s.path("s.bcm")), 3);
    EXPECT_EQ(run("--help"), 0);

    const auto spec = s.write("spec.json", R"({"seed": 1, "injections": [{"kind": "missing-sentinel", "columns": ["age"], "fraction": 0.1}]})");
    EXPECT_EQ(run("inject " + csv + " --spec " + spec + " --truth " + s.path("t.json") + " --out " + s.path("dirty.csv")), 0);
    const auto truth = nlohmann::json::parse(slurp(s.path("t.json")));
    EXPECT_EQ(truth["cells"].size(), 30u);
}
