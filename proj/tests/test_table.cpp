#include <gtest/gtest.h>

#include <algorithm>
#include <fstream>
#include <set>

#include "support/fixtures.hpp"

using namespace boostclean;
using fixtures::M;
using fixtures::N;
using fixtures::T;

TEST(Value, ParsesNumbersAndKeepsTextVerbatim) {
    EXPECT_EQ(Value::parse("12.5"), N(12.5));
    EXPECT_EQ(Value::parse("-1"), N(-1));
    EXPECT_EQ(Value::parse(" 3 "), N(3));
    EXPECT_EQ(Value::parse("Private"), T("Private"));
    EXPECT_EQ(Value::parse("12abc"), T("12abc"));
    EXPECT_TRUE(Value::parse("").is_missing());
}

TEST(Value, NonFiniteNumbersStayText) {
    for (const char* s : {"NaN", "nan", "inf", "-Inf", "Infinity", "1e999"}) {
        const Value v = Value::parse(s);
        EXPECT_TRUE(v.is_text()) << s;
        EXPECT_EQ(v.as_text(), s);
    }
}

TEST(Value, NumberFormattingRoundTrips) {
    for (double x : {0.1, 1e-300, 123456789.125, -0.5, 3.0}) {
        EXPECT_EQ(Value::parse(N(x).str()), N(x));
    }
}

TEST(Csv, QuotingAndEmbeddedDelimiters) {
    const auto rows = csv::parse("a,b,c\n\"x,1\",\"he said \"\"hi\"\"\",\"\"\n");
    ASSERT_EQ(rows.size(), 2u);
    ASSERT_EQ(rows[1].size(), 3u);
    EXPECT_EQ(rows[1][0].text, "x,1");
    EXPECT_EQ(rows[1][1].text, "he said \"hi\"");
    EXPECT_TRUE(rows[1][2].quoted);
    EXPECT_EQ(rows[1][2].text, "");
}

TEST(Csv, CrLfAndMultilineField) {
    const auto rows = csv::parse("a,b\r\n\"line1\nline2\",2\r\n");
    ASSERT_EQ(rows.size(), 2u);
    EXPECT_EQ(rows[1][0].text, "line1\nline2");
    EXPECT_EQ(rows[1][1].text, "2");
}

TEST(Csv, UnterminatedQuoteIsAnError) { EXPECT_THROW(csv::parse("a\n\"oops\n"), ValidationError); }

TEST(Load, EmptyCellBecomesMissing) {
    const auto l = load_csv_text("age,work,gain,country\n40,Private,,United-States\n");
    EXPECT_EQ(l.table.records[0].values[0], N(40));
    EXPECT_TRUE(l.table.records[0].values[2].is_missing());
}

TEST(Load, CodingSentinelParsesAsNumber) {
    const auto l = load_csv_text("age,work,gain,country\n57,Local-gov,99999,United-States\n");
    EXPECT_EQ(l.table.records[0].values[2], N(99999));
}

TEST(Load, QuotedEmptyIsEmptyText) {
    const auto l = load_csv_text("a,b\n\"\",1\n");
    EXPECT_EQ(l.table.records[0].values[0], T(""));
}

TEST(Load, ShortRowIsPaddedAndReported) {
    const auto l = load_csv_text("a,b,c,d\n1,2,3,4\n1,2,3\n1,2,3,4,5\n");
    ASSERT_EQ(l.table.rows(), 3u);
    EXPECT_EQ(l.table.records[1].values.size(), 4u);
    EXPECT_TRUE(l.table.records[1].values[3].is_missing());
    EXPECT_EQ(l.table.records[2].values.size(), 4u);
    EXPECT_EQ(l.report.malformed_rows, (std::vector<std::uint64_t>{1, 2}));
    const auto j = to_json(l.report);
    EXPECT_EQ(j["malformed_rows"].size(), 2u);
    EXPECT_EQ(j["rows"], 3);
    EXPECT_EQ(j["columns"], 4);
}

TEST(Load, Errors) {
    EXPECT_THROW(load_csv_text("a,b\n"), ValidationError);
    EXPECT_THROW(load_csv_text("a,a\n1,2\n"), ValidationError);
    EXPECT_THROW(load_csv("/nonexistent/file.csv"), ValidationError);
    LoadOptions o;
    o.label_column = "zzz";
    EXPECT_THROW(load_csv_text("a,b\n1,2\n", o), ValidationError);
}

TEST(Load, LabelColumnIsSeparated) {
    LoadOptions o;
    o.label_column = "y";
    const auto l = load_csv_text("a,y,b\n1,yes,2\n3,,4\n", o);
    EXPECT_EQ(l.table.schema.size(), 2u);
    EXPECT_EQ(l.table.schema.columns[1].name, "b");
    EXPECT_EQ(l.table.records[0].label, T("yes"));
    EXPECT_TRUE(l.table.records[1].label.is_missing());
    EXPECT_EQ(write_csv(l.table), "a,y,b\n1,yes,2\n3,,4\n");
}

TEST(Load, RoundTripIsValueIdentical) {
    LoadOptions o;
    o.label_column = "label";
    const std::string text = "n,s,label\n1.5,\"a,b\",x\n,\"\",y\n-3,plain,x\n7,\"q\"\"uote\",\n";
    const auto a = load_csv_text(text, o);
    const auto b = load_csv_text(write_csv(a.table), o);
    ASSERT_EQ(a.table.rows(), b.table.rows());
    for (std::size_t i = 0; i < a.table.rows(); ++i) {
        EXPECT_EQ(a.table.records[i].values, b.table.records[i].values);
        EXPECT_EQ(a.table.records[i].label, b.table.records[i].label);
    }
    EXPECT_EQ(a.table.schema, b.table.schema);
}

namespace {

Table one_column(const std::vector<Value>& cells) {
    std::vector<std::vector<Value>> rows;
    for (const auto& c : cells) rows.push_back({c});
    return fixtures::make_table({{"c", ColumnType::text}}, rows);
}

} // namespace

TEST(InferTypes, Numeric) {
    EXPECT_EQ(infer_types(one_column({T("12.5"), N(3), N(-1)})).columns[0].type, ColumnType::numeric);
    EXPECT_EQ(infer_types(one_column({N(12.5), N(3), N(-1)})).columns[0].type, ColumnType::numeric);
}

TEST(InferTypes, CategoricalWhenFewDistinct) {
    std::vector<Value> cells;
    for (int i = 0; i < 1000; ++i) cells.push_back(T(i % 3 == 2 ? "USWest" : "USW"));
    EXPECT_EQ(infer_types(one_column(cells)).columns[0].type, ColumnType::categorical);
}

TEST(InferTypes, TextWhenManyDistinct) {
    std::vector<Value> cells;
    for (int i = 0; i < 1000; ++i) cells.push_back(T("name_" + std::to_string(i)));
    EXPECT_EQ(infer_types(one_column(cells)).columns[0].type, ColumnType::text);
}

TEST(InferTypes, DatesAndAddresses) {
    std::vector<Value> dates, addrs;
    for (int i = 1; i <= 30; ++i) {
        dates.push_back(T("2015-09-" + std::to_string(i < 10 ? 10 + i : i)));
        addrs.push_back(T(std::to_string(100 + i) + " Main Street, Springfield " + std::to_string(i)));
    }
    EXPECT_EQ(infer_types(one_column(dates)).columns[0].type, ColumnType::date);
    EXPECT_EQ(infer_types(one_column(addrs)).columns[0].type, ColumnType::address);
}

TEST(InferTypes, FewDirtyCellsDoNotFlipNumeric) {
    std::vector<Value> cells;
    for (int i = 0; i < 100; ++i) cells.push_back(i < 3 ? T("?") : N(i));
    EXPECT_EQ(infer_types(one_column(cells)).columns[0].type, ColumnType::numeric);
    cells.clear();
    for (int i = 0; i < 100; ++i) cells.push_back(i < 10 ? T("?") : N(i));
    EXPECT_NE(infer_types(one_column(cells)).columns[0].type, ColumnType::numeric);
}

TEST(InferTypes, ThresholdsAreConfigurable) {
    std::vector<Value> cells;
    for (int i = 0; i < 100; ++i) cells.push_back(i < 10 ? T("?") : N(i));
    TypeInferenceOptions o;
    o.numeric_fraction = 0.9;
    EXPECT_EQ(infer_types(one_column(cells), o).columns[0].type, ColumnType::numeric);
}

TEST(InferTypes, PermutationInvariant) {
    Table t = fixtures::census_like(300, 3);
    const Schema a = infer_types(t);
    Rng rng(9);
    rng.shuffle(std::span<Record>(t.records));
    EXPECT_EQ(infer_types(t), a);
}

TEST(InferTypes, EmptyTableIsAnError) { EXPECT_THROW(infer_types(Table{}), ValidationError); }

namespace {

Table labelled(std::size_t n, std::size_t missing_first = 0) {
    std::vector<std::vector<Value>> rows;
    std::vector<Value> labels;
    for (std::size_t i = 0; i < n; ++i) {
        rows.push_back({N(static_cast<double>(i))});
        labels.push_back(i < missing_first ? M() : T(i % 2 ? "a" : "b"));
    }
    return fixtures::make_table({{"x", ColumnType::numeric}}, rows, labels);
}

std::vector<std::uint64_t> ids(const Table& t) {
    std::vector<std::uint64_t> out;
    for (const auto& r : t.records) out.push_back(r.row_id);
    return out;
}

} // namespace

TEST(Split, SizesAndDeterminism) {
    const Table t = labelled(10);
    const auto a = split(t, 0.2, 7);
    const auto b = split(t, 0.2, 7);
    EXPECT_EQ(a.train.rows(), 8u);
    EXPECT_EQ(a.test.rows(), 2u);
    EXPECT_EQ(ids(a.test), ids(b.test));
    EXPECT_EQ(ids(a.train), ids(b.train));
}

TEST(Split, TestSideDrawnOnlyFromLabelledRows) {
    const Table t = labelled(10, 3);
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const auto d = split(t, 0.2, seed);
        EXPECT_EQ(d.test.rows(), 2u);
        for (const auto& r : d.test.records) EXPECT_FALSE(r.label.is_missing());
        for (std::uint64_t id = 0; id < 3; ++id) {
            const auto tr = ids(d.train);
            EXPECT_NE(std::find(tr.begin(), tr.end(), id), tr.end());
        }
    }
}

TEST(Split, IsAPartitionKeepingFileOrder) {
    const Table t = labelled(50, 5);
    const auto d = split(t, 0.3, 11);
    std::set<std::uint64_t> all;
    for (auto id : ids(d.train)) EXPECT_TRUE(all.insert(id).second);
    for (auto id : ids(d.test)) EXPECT_TRUE(all.insert(id).second);
    EXPECT_EQ(all.size(), 50u);
    EXPECT_TRUE(std::is_sorted(d.train.records.begin(), d.train.records.end(),
                               [](const Record& a, const Record& b) { return a.row_id < b.row_id; }));
    EXPECT_TRUE(std::is_sorted(d.test.records.begin(), d.test.records.end(),
                               [](const Record& a, const Record& b) { return a.row_id < b.row_id; }));
}

TEST(Split, Errors) {
    EXPECT_THROW(split(labelled(10), 0.0, 1), ValidationError);
    EXPECT_THROW(split(labelled(10), 1.0, 1), ValidationError);
    EXPECT_THROW(split(labelled(4, 4), 0.5, 1), DegenerateDataError);
}

TEST(Labels, OrderAndMajority) {
    const Table t = fixtures::make_table({{"x", ColumnType::numeric}}, {{N(1)}, {N(2)}, {N(3)}, {N(4)}},
                                         {T("b"), T("a"), T("a"), T("b")});
    EXPECT_EQ(label_order(t), (std::vector<Value>{T("b"), T("a")}));
    EXPECT_EQ(majority_label(t), T("b"));
}
