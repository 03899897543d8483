#include <gtest/gtest.h>

#include <fstream>
#include <set>

#include "fixtures.hpp"
#include "scenemem/common/container.hpp"
#include "scenemem/common/rng.hpp"
#include "scenemem/common/text_io.hpp"

using namespace scenemem;
using scenemem::testkit::TempDir;

TEST(Container, RoundTripsFloat32) {
  TempDir dir;
  const std::vector<float> values{1.5f, -2.25f, 0.0f, 3e-7f};
  write_container(dir / "a.bin", {{"kind", "test"}}, std::span<const float>(values));
  const auto c = read_container(dir / "a.bin");
  EXPECT_EQ(c.header["kind"], "test");
  EXPECT_EQ(c.header["payload_count"], 4);
  EXPECT_EQ(c.header["dtype"], "f32");
  EXPECT_EQ(c.payload, values);
}

TEST(Container, RoundTripsFloat64Exactly) {
  TempDir dir;
  const std::vector<double> values{0.1, 1.0 / 3.0, -1e300, 5e-324};
  write_container(dir / "b.bin", {}, std::span<const double>(values));
  const auto c = read_container64(dir / "b.bin");
  EXPECT_EQ(c.payload, values);
  EXPECT_THROW(read_container(dir / "b.bin"), std::runtime_error);
}

TEST(Container, RejectsForeignAndTruncatedFiles) {
  TempDir dir;
  std::ofstream(dir / "x.bin") << "NOPE and more bytes";
  EXPECT_THROW(read_container(dir / "x.bin"), std::runtime_error);
  const std::vector<float> values(100, 1.0f);
  write_container(dir / "t.bin", {}, std::span<const float>(values));
  std::filesystem::resize_file(dir / "t.bin", std::filesystem::file_size(dir / "t.bin") - 8);
  EXPECT_THROW(read_container(dir / "t.bin"), std::runtime_error);
  EXPECT_THROW(read_container(dir / "missing.bin"), std::runtime_error);
}

TEST(Rng, SameSeedSameStream) {
  Rng a(42), b(42), c(43);
  bool differs = false;
  for (int i = 0; i < 100; ++i) {
    const auto x = a.next_u64();
    EXPECT_EQ(x, b.next_u64());
    differs |= x != c.next_u64();
  }
  EXPECT_TRUE(differs);
}

TEST(Rng, UniformIndexStaysInRangeAndCoversIt) {
  Rng rng(1);
  std::vector<int> counts(7, 0);
  for (int i = 0; i < 7000; ++i) {
    const auto k = rng.uniform_index(7);
    ASSERT_LT(k, 7u);
    ++counts[k];
  }
  for (int c : counts) EXPECT_GT(c, 800);
}

TEST(Rng, UniformAndNormalMoments) {
  Rng rng(5);
  double su = 0, sn = 0, sn2 = 0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double u = rng.uniform();
    ASSERT_GE(u, 0.0);
    ASSERT_LT(u, 1.0);
    su += u;
    const double z = rng.normal();
    sn += z;
    sn2 += z * z;
  }
  EXPECT_NEAR(su / n, 0.5, 0.005);
  EXPECT_NEAR(sn / n, 0.0, 0.01);
  EXPECT_NEAR(sn2 / n, 1.0, 0.02);
}

TEST(Rng, ShuffleIsAPermutation) {
  Rng rng(9);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<int> v(1 + rng.uniform_index(40));
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = static_cast<int>(i);
    auto s = v;
    rng.shuffle(s);
    std::multiset<int> a(v.begin(), v.end()), b(s.begin(), s.end());
    EXPECT_EQ(a, b);
  }
}

TEST(TextIo, JsonLinesSkipBlankLinesAndReportLineNumbers) {
  TempDir dir;
  write_text_file(dir / "a.jsonl", "{\"a\":1}\n\n{\"a\":2}\n");
  const auto lines = read_json_lines(dir / "a.jsonl");
  ASSERT_EQ(lines.size(), 2u);
  EXPECT_EQ(lines[1].line_number, 3u);
  EXPECT_EQ(lines[1].value["a"], 2);
  write_text_file(dir / "b.jsonl", "{\"a\":1}\n{oops\n");
  try {
    read_json_lines(dir / "b.jsonl");
    FAIL() << "expected a parse error";
  } catch (const std::exception& e) {
    EXPECT_NE(std::string(e.what()).find('2'), std::string::npos);
  }
}

TEST(TextIo, JsonFileRoundTrip) {
  TempDir dir;
  const nlohmann::json doc{{"x", {1, 2, 3}}, {"name", "a b"}};
  write_json_file(dir / "d.json", doc);
  EXPECT_EQ(read_json_file(dir / "d.json"), doc);
}
