#include "bcpo/config.hpp"
#include "bcpo/csv.hpp"
#include "bcpo/errors.hpp"
#include "bcpo/random.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <cstring>
#include <filesystem>

using namespace bcpo;

TEST(Csv, FormatDoubleRoundTripsExactly) {
    Rng rng(7);
    for (int i = 0; i < 2000; ++i) {
        const double x = (rng.uniform() - 0.5) * std::pow(10.0, rng.uniform_int(40) - 20);
        const std::string text = csv::format_double(x);
        const double back = csv::parse_double(text, "x");
        EXPECT_EQ(std::memcmp(&x, &back, sizeof x), 0) << text;
    }
    EXPECT_EQ(csv::format_double(0.5), "0.5");
    EXPECT_EQ(csv::format_double(std::nan("")), "nan");
}

TEST(Csv, ParseRejectsTrailingGarbage) {
    EXPECT_THROW(csv::parse_double("1.5x", "v"), ValidationError);
    EXPECT_THROW(csv::parse_int("3.0", "v"), ValidationError);
    EXPECT_THROW(csv::parse_int("", "v"), ValidationError);
    EXPECT_EQ(csv::parse_int("-12", "v"), -12);
}

TEST(Csv, WriterJoinsFieldsAndRows) {
    csv::Writer w("a,b");
    w.field(1).field(0.25);
    w.end_row();
    w.field("x").field(-3);
    w.end_row();
    EXPECT_EQ(w.str(), "a,b\n1,0.25\nx,-3\n");
}

TEST(Csv, LinesDropsCarriageReturnsAndTrailingNewline) {
    const auto rows = csv::lines("h\r\n1\r\n2\n");
    ASSERT_EQ(rows.size(), 3u);
    EXPECT_EQ(rows[1], "1");
}

TEST(Csv, ReadMissingFileIsIoError) {
    EXPECT_THROW(csv::read_file("/nonexistent/dir/file.csv"), IoError);
}

TEST(Config, ParsesTrimsAndSkipsComments) {
    FlatConfig c = FlatConfig::parse("# comment\n  grid.slip_prob = 0.2 \n\nname=abc\nflag=true\n");
    double slip = 0.0;
    std::string name;
    bool flag = false;
    c.get("grid.slip_prob", slip);
    c.get("name", name);
    c.get("flag", flag);
    EXPECT_DOUBLE_EQ(slip, 0.2);
    EXPECT_EQ(name, "abc");
    EXPECT_TRUE(flag);
    EXPECT_NO_THROW(c.check_all_consumed());
}

TEST(Config, UnknownKeyIsRejected) {
    FlatConfig c = FlatConfig::parse("known=1\ntypo.key=2\n");
    int known = 0;
    c.get("known", known);
    try {
        c.check_all_consumed();
        FAIL() << "expected ValidationError";
    } catch (const ValidationError& e) {
        EXPECT_NE(std::string(e.what()).find("typo.key"), std::string::npos);
    }
}

TEST(Config, DuplicateAndMalformedLinesAreRejected) {
    EXPECT_THROW(FlatConfig::parse("a=1\na=2\n"), ValidationError);
    EXPECT_THROW(FlatConfig::parse("no equals sign\n"), ValidationError);
    FlatConfig c = FlatConfig::parse("n=abc\n");
    int n = 0;
    EXPECT_THROW(c.get("n", n), ValidationError);
}

TEST(Config, MissingFileNamesThePath) {
    const std::string path = "/nonexistent/settings.cfg";
    try {
        FlatConfig::load(path);
        FAIL() << "expected IoError";
    } catch (const IoError& e) {
        EXPECT_NE(std::string(e.what()).find(path), std::string::npos);
    }
}

TEST(Config, AbsentKeysKeepDefaults) {
    FlatConfig c = FlatConfig::parse("");
    double x = 4.5;
    c.get("missing", x);
    EXPECT_EQ(x, 4.5);
}
