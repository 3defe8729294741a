#include <gtest/gtest.h>

#include <filesystem>
#include <set>

#include "ynn/data.hpp"

using namespace ynn;
namespace fs = std::filesystem;

namespace {

class TempDir {
 public:
  TempDir() : path_(fs::temp_directory_path() / ("ynn_data_" + std::to_string(::testing::UnitTest::GetInstance()->random_seed()) + "_" +
                                                 ::testing::UnitTest::GetInstance()->current_test_info()->name())) {
    fs::create_directories(path_);
  }
  ~TempDir() { fs::remove_all(path_); }
  std::string file(const std::string& name, const std::string& content) const {
    const std::string p = (path_ / name).string();
    write_text_file(p, content);
    return p;
  }
  std::string path(const std::string& name) const { return (path_ / name).string(); }

 private:
  fs::path path_;
};

CsvOptions last_label(std::size_t cols) {
  CsvOptions o;
  o.label_column = cols - 1;
  return o;
}

}  // namespace

TEST(SplitCsvRecord, QuotedFields) {
  EXPECT_EQ(split_csv_record("a,\"b,c\",\"d\"\"e\","),
            (std::vector<std::string>{"a", "b,c", "d\"e", ""}));
  EXPECT_EQ(split_csv_record("1,2\r"), (std::vector<std::string>{"1", "2"}));
}

TEST(LoadCsv, LabelsByFirstAppearance) {
  TempDir tmp;
  const Dataset ds = load_csv(tmp.file("a.csv", "1,2,cat\n3,4,dog\n5,6,cat\n\n"), last_label(3));
  EXPECT_EQ(ds.features, (Matrix{{1, 2}, {3, 4}, {5, 6}}));
  EXPECT_EQ(ds.labels, (std::vector<std::size_t>{0, 1, 0}));
  EXPECT_EQ(ds.class_count, 2u);
  EXPECT_EQ(ds.class_names, (std::vector<std::string>{"cat", "dog"}));
}

TEST(LoadCsv, HeaderAndColumnSelection) {
  TempDir tmp;
  CsvOptions o;
  o.has_header = true;
  o.label_column = 0;
  o.feature_columns = {2};
  const Dataset ds = load_csv(tmp.file("h.csv", "y,a,b\nx,9,1.5\nz,8,-2\n"), o);
  EXPECT_EQ(ds.feature_names, (std::vector<std::string>{"b"}));
  EXPECT_EQ(ds.features, (Matrix{{1.5}, {-2}}));
  EXPECT_EQ(ds.labels, (std::vector<std::size_t>{0, 1}));
}

TEST(LoadCsv, Connect4Encoding) {
  TempDir tmp;
  CsvOptions o = last_label(4);
  o.encoding = connect4_encoding();
  const Dataset ds = load_csv(tmp.file("c4.csv", "x,o,b,win\nb,b,x,loss\n"), o);
  EXPECT_EQ(ds.features, (Matrix{{1, -1, 0}, {0, 0, 1}}));
  EXPECT_EQ(ds.class_names, (std::vector<std::string>{"win", "loss"}));
}

TEST(LoadCsv, BadRowsListLineNumbers) {
  TempDir tmp;
  const std::string p = tmp.file("bad.csv", "1,2,a\n1,q,a\n3,4,b\n5,a\n");
  try {
    load_csv(p, last_label(3));
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("line(s) 2 4"), std::string::npos) << msg;
  }
}

TEST(LoadCsv, Errors) {
  TempDir tmp;
  EXPECT_THROW(load_csv(tmp.path("missing.csv"), {}), IoError);
  EXPECT_THROW(load_csv(tmp.file("e.csv", "\n\n"), {}), ParseError);
  EXPECT_THROW(load_csv(tmp.file("w.csv", "1,2\n"), last_label(5)), ValidationError);
  EXPECT_THROW(load_csv(tmp.file("n.csv", "1,inf,a\n"), last_label(3)), ParseError);
}

TEST(WriteCsv, RoundTripIsExact) {
  TempDir tmp;
  Dataset ds = make_blobs({30, 3, 3, 2.0, 0.5, 7});
  ds.class_names = {"r", "g", "b"};
  write_csv(ds, tmp.path("out.csv"));
  const Dataset back = load_csv(tmp.path("out.csv"), last_label(4));
  EXPECT_EQ(back.features, ds.features);
  EXPECT_EQ(back.labels, ds.labels);
  EXPECT_EQ(back.class_names, ds.class_names);
}

TEST(Normalize, PopulationStandardization) {
  Dataset ds;
  ds.features = Matrix{{0, 5}, {2, 5}};
  ds.labels = {0, 1};
  ds.class_count = 2;
  const Normalized n = normalize(ds);
  EXPECT_EQ(n.data.features, (Matrix{{-1, 0}, {1, 0}}));
  EXPECT_EQ(n.stats.mean, (std::vector<double>{1, 5}));
  EXPECT_EQ(n.stats.std, (std::vector<double>{1, 0}));
}

TEST(Normalize, ZeroMeanUnitVariance) {
  const Normalized n = normalize(make_blobs({100, 5, 4, 3.0, 1.0, 2}));
  const FeatureStats s = feature_stats(n.data);
  for (std::size_t c = 0; c < 5; ++c) {
    EXPECT_NEAR(s.mean[c], 0.0, 1e-12);
    EXPECT_NEAR(s.std[c], 1.0, 1e-12);
  }
}

TEST(Split, StratifiedProportions) {
  const Dataset ds = make_blobs({100, 2, 4, 3.0, 1.0, 1});
  const Split sp = split(ds, {0.8, 3, true});
  EXPECT_EQ(sp.train.size(), 80u);
  EXPECT_EQ(sp.test.size(), 20u);
  std::vector<int> counts(4, 0);
  for (std::size_t l : sp.test.labels) ++counts[l];
  for (int c : counts) EXPECT_EQ(c, 5);
}

TEST(Split, SmallClassesKeepOneOnEachSide) {
  Dataset ds;
  ds.features = Matrix(4, 1, {1, 2, 3, 4});
  ds.labels = {0, 0, 1, 1};
  ds.class_count = 2;
  const Split sp = split(ds, {0.9, 0, true});
  EXPECT_EQ(sp.train.size(), 2u);
  EXPECT_EQ(sp.test.size(), 2u);
  ds.labels = {0, 0, 0, 1};
  EXPECT_THROW(split(ds, {0.5, 0, true}), ValidationError);
  EXPECT_NO_THROW(split(ds, {0.5, 0, false}));
  EXPECT_THROW(split(ds, {1.0, 0, false}), ValidationError);
}

TEST(Split, DeterministicDisjointAndCovering) {
  const Dataset ds = make_blobs({57, 1, 3, 1.0, 1.0, 4});
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const Split a = split(ds, {0.7, seed, seed % 2 == 0});
    const Split b = split(ds, {0.7, seed, seed % 2 == 0});
    EXPECT_EQ(a.train.features, b.train.features);
    EXPECT_EQ(a.test.labels, b.test.labels);
    std::multiset<double> all;
    for (double v : a.train.features.values()) all.insert(v);
    for (double v : a.test.features.values()) all.insert(v);
    EXPECT_EQ(all, std::multiset<double>(ds.features.values().begin(), ds.features.values().end()));
  }
}

TEST(MakeBlobs, BalancedLabels) {
  const Dataset ds = make_blobs({10, 2, 3, 1.0, 0.1, 0});
  EXPECT_EQ(ds.labels, (std::vector<std::size_t>{0, 1, 2, 0, 1, 2, 0, 1, 2, 0}));
  EXPECT_THROW(make_blobs({10, 2, 1, 1.0, 0.1, 0}), ValidationError);
}

TEST(BundledData, OptdigitsShape) {
  CsvOptions o;
  o.label_column = 64;
  const Dataset ds = load_csv(std::string(YNN_DATA_DIR) + "/optdigits.csv", o);
  EXPECT_EQ(ds.size(), 1797u);
  EXPECT_EQ(ds.feature_count(), 64u);
  EXPECT_EQ(ds.class_count, 10u);
}
