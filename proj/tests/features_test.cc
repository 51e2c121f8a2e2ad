#include "kcs/features.h"

#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "oracles/feature_oracle.h"
#include "test_util.h"

namespace kcs {
namespace {

using ::kcs::testing::RandomKeystrokes;

const KeyboardMap& Map() { return DefaultKeyboard(); }

DigraphFeatures Digraph(int cls, double pr_ms) {
  DigraphFeatures d;
  d.adjacency_class = cls;
  d.pr_us = static_cast<Micros>(pr_ms * 1000);
  return d;
}

Template Filled(double v) {
  Template t;
  for (auto& row : t.values_ms) row.fill(v);
  return t;
}

TEST(AdjacencyClassTest, Examples) {
  EXPECT_EQ(Map().AdjacencyClass('A', 'A'), 1);
  EXPECT_EQ(Map().AdjacencyClass('A', 'S'), 2);
  EXPECT_EQ(Map().AdjacencyClass('A', '\n'), 5);
  EXPECT_EQ(Map().AdjacencyClass('a', 'A'), 1);
  EXPECT_EQ(Map().AdjacencyClass('a', 'd'), 3);
  EXPECT_EQ(Map().AdjacencyClass('a', 'g'), 4);
  EXPECT_EQ(Map().AdjacencyClass('a', 'k'), 5);
  EXPECT_EQ(Map().AdjacencyClass(' ', ' '), 1);
  EXPECT_EQ(Map().AdjacencyClass(' ', '\n'), 5);
}

TEST(AdjacencyClassTest, SymmetricTotalAndMatchesIndependentLayout) {
  for (int a = -5; a < 300; ++a) {
    for (int b = -5; b < 300; ++b) {
      const int c = Map().AdjacencyClass(a, b);
      ASSERT_GE(c, 1);
      ASSERT_LE(c, 5);
      ASSERT_EQ(c, Map().AdjacencyClass(b, a));
      ASSERT_EQ(c, oracle::OracleClass(a, b)) << a << "," << b;
    }
  }
}

TEST(AdjacencyClassTest, BoundsAreConfigurable) {
  const auto wide = KeyboardMap::Qwerty({2, 3, 9});
  EXPECT_EQ(wide.AdjacencyClass('a', 'd'), 2);
  EXPECT_EQ(wide.AdjacencyClass('a', 'k'), 4);
}

TEST(ExtractDigraphFeaturesTest, Examples) {
  const std::vector<Keystroke> plain{{'A', 0, 80000}, {'B', 120000, 210000}};
  const auto d = ExtractDigraphFeatures(plain, Map());
  ASSERT_EQ(d.size(), 1u);
  EXPECT_EQ(d[0].pr_us, 80000);
  EXPECT_EQ(d[0].pp_us, 120000);
  EXPECT_EQ(d[0].rr_us, 130000);
  EXPECT_EQ(d[0].rp_abs_us, 40000);

  const std::vector<Keystroke> rollover{{'A', 0, 70000}, {'B', 50000, 120000}};
  const auto r = ExtractDigraphFeatures(rollover, Map());
  EXPECT_EQ(r[0].pr_us, 70000);
  EXPECT_EQ(r[0].pp_us, 50000);
  EXPECT_EQ(r[0].rr_us, 50000);
  EXPECT_EQ(r[0].rp_signed_us, -20000);
  EXPECT_EQ(r[0].rp_abs_us, 20000);
}

TEST(ExtractDigraphFeaturesTest, NeedsTwoKeystrokes) {
  const std::vector<Keystroke> one{{'A', 0, 1}};
  try {
    ExtractDigraphFeatures(one, Map());
    FAIL();
  } catch (const Error& e) {
    EXPECT_STREQ(e.what(), "need at least two keystrokes");
  }
}

TEST(ExtractDigraphFeaturesTest, RrStaysSignedUnderRollover) {
  const std::vector<Keystroke> keys{{'A', 0, 300000}, {'B', 10000, 20000}};
  EXPECT_EQ(ExtractDigraphFeatures(keys, Map())[0].rr_us, -280000);
}

TEST(ExtractDigraphFeaturesTest, CountAndIdentitiesOnRandomSamples) {
  std::mt19937_64 gen(5);
  for (int i = 0; i < 300; ++i) {
    const auto keys = RandomKeystrokes(gen, 2 + i % 199);
    const auto d = ExtractDigraphFeatures(keys, Map());
    ASSERT_EQ(d.size(), keys.size() - 1);
    for (std::size_t k = 0; k < d.size(); ++k) {
      EXPECT_EQ(d[k].pp_us, d[k].pr_us + d[k].rp_signed_us);
      if (k + 1 < d.size()) {
        EXPECT_EQ(d[k].rr_us, d[k].pp_us + d[k + 1].pr_us - d[k].pr_us);
      }
      EXPECT_EQ(d[k].rp_abs_us, std::abs(d[k].rp_signed_us));
    }
  }
}

TEST(BuildTemplateTest, SingleClassMeanImputesEveryOtherClass) {
  const std::vector<DigraphFeatures> d{Digraph(2, 80), Digraph(2, 100)};
  const Template t = BuildTemplate(d, 3, 4);
  for (int c = 0; c < 5; ++c) EXPECT_DOUBLE_EQ(t.values_ms[c][kPr], 90.0);
  EXPECT_EQ(t.counts, (std::array<int, 5>{0, 2, 0, 0, 0}));
  EXPECT_EQ(t.user_id, 3);
  EXPECT_EQ(t.sample_id, 4);
}

TEST(BuildTemplateTest, OneDigraphFillsEveryCell) {
  const std::vector<Keystroke> keys{{'A', 0, 80000}, {'B', 120000, 210000}};
  const Template t = BuildTemplate(ExtractDigraphFeatures(keys, Map()), 1, 1);
  for (const auto& row : t.values_ms) {
    EXPECT_EQ(row, (std::array<double, 4>{80, 120, 130, 40}));
  }
}

TEST(BuildTemplateTest, EmptyInputThrows) {
  EXPECT_THROW(BuildTemplate({}, 1, 1), Error);
}

TEST(BuildTemplateTest, MatchesBruteForceGroupBy) {
  std::mt19937_64 gen(8);
  for (int i = 0; i < 200; ++i) {
    const auto keys = RandomKeystrokes(gen, i == 0 ? 122 : 2 + i % 150);
    const Template t =
        BuildTemplate(ExtractDigraphFeatures(keys, Map()), 1, 1);
    const auto expected = oracle::OracleMeans(oracle::OracleDigraphs(keys));
    for (int c = 0; c < 5; ++c) {
      for (int f = 0; f < 4; ++f) {
        EXPECT_NEAR(t.values_ms[c][f], expected[c][f], 1e-9);
      }
    }
  }
}

TEST(BuildTemplateTest, FullSampleHas121Digraphs) {
  std::mt19937_64 gen(1);
  const auto keys = RandomKeystrokes(gen, 122);
  const Template t = BuildTemplate(ExtractDigraphFeatures(keys, Map()), 1, 1);
  int total = 0;
  for (int n : t.counts) total += n;
  EXPECT_EQ(total, 121);
}

TEST(TemplateFromTraceTest, ShiftInvariant) {
  std::mt19937_64 gen(2);
  const auto keys = RandomKeystrokes(gen, 60);
  const Template base = TemplateFromTrace(EventsFromKeystrokes(1, keys), Map());
  const Template other = Filled(123.25);
  for (Micros delta : {Micros{1}, Micros{1000000}, Micros{3600000000}}) {
    auto shifted = keys;
    for (auto& k : shifted) {
      k.press_us += delta;
      k.release_us += delta;
    }
    const Template t =
        TemplateFromTrace(EventsFromKeystrokes(1, shifted), Map());
    EXPECT_EQ(t, base);
    EXPECT_EQ(EuclideanDistance(t, other), EuclideanDistance(base, other));
  }
}

TEST(EuclideanDistanceTest, Examples) {
  const Template a = Filled(10);
  EXPECT_EQ(EuclideanDistance(a, a), 0.0);
  Template b = a;
  b.values_ms[3][2] += 3;
  EXPECT_DOUBLE_EQ(EuclideanDistance(a, b), 3.0);
  EXPECT_NEAR(EuclideanDistance(a, Filled(11)), std::sqrt(20.0), 1e-12);
}

TEST(EuclideanDistanceTest, MetricPropertiesOnRandomTemplates) {
  std::mt19937_64 gen(4);
  std::uniform_real_distribution<double> v(-500, 500);
  auto random = [&] {
    Template t;
    for (auto& row : t.values_ms) {
      for (double& x : row) x = v(gen);
    }
    return t;
  };
  for (int i = 0; i < 500; ++i) {
    const Template a = random(), b = random(), c = random();
    EXPECT_EQ(EuclideanDistance(a, b), EuclideanDistance(b, a));
    EXPECT_EQ(EuclideanDistance(a, a), 0.0);
    EXPECT_GT(EuclideanDistance(a, b), 0.0);
    EXPECT_LE(EuclideanDistance(a, c),
              EuclideanDistance(a, b) + EuclideanDistance(b, c) + 1e-9);
  }
}

TEST(TemplateCsvTest, RoundTripsToSixDecimals) {
  Template t = Filled(0);
  for (int c = 0; c < 5; ++c) {
    for (int f = 0; f < 4; ++f) t.values_ms[c][f] = c * 10.125 + f - 2.5;
    t.counts[c] = c;
  }
  t.user_id = 4;
  t.sample_id = 9;
  const std::vector<Template> in{t, Filled(1)};
  const std::string csv = TemplatesToCsv(in);
  EXPECT_EQ(csv.substr(0, csv.find('\n')),
            "user_id,sample_id,class,pr_ms,pp_ms,rr_ms,rp_ms,count");
  EXPECT_NE(csv.find("4,9,1,-2.500000,-1.500000,-0.500000,0.500000,0\n"),
            std::string::npos);
  std::istringstream stream(csv);
  const auto back = TemplatesFromCsv(stream);
  ASSERT_EQ(back.size(), 2u);
  EXPECT_EQ(back[0], t);
}

TEST(TemplateCsvTest, RejectsMalformedFiles) {
  const std::string header =
      "user_id,sample_id,class,pr_ms,pp_ms,rr_ms,rp_ms,count\n";
  for (const std::string body :
       {std::string("1,1,1,1,1,1,1,1\n"), std::string("1,1,2,1,1,1,1,1\n"),
        std::string("1,1,1,1,1,1,1\n"), std::string("1,1,1,x,1,1,1,1\n")}) {
    std::istringstream in(header + body);
    EXPECT_THROW(TemplatesFromCsv(in), ParseError) << body;
  }
  std::istringstream bad_header("a,b\n");
  EXPECT_THROW(TemplatesFromCsv(bad_header), ParseError);
}

}  // namespace
}  // namespace kcs
