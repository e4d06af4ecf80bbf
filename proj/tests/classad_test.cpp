// Copyright 2026 The gridsel Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>

#include "gridsel/classad.hpp"
#include "gridsel/text.hpp"
#include "support/generators.hpp"
#include "support/fixtures.hpp"

namespace gridsel::classad {
namespace {

using testing::Rng;

Value eval_text(std::string_view expr, const ClassAd& self = {},
                const ClassAd& other = {}) {
  return evaluate(*parse_expression(expr), MatchContext{self, other});
}

TEST(ClassAdParse, StorageAdFromListing) {
  const ClassAd ad = parse_classad(fixtures::kHugoStorageAd);
  ASSERT_EQ(ad.size(), 5u);
  const std::vector<std::string> names = {"hostname", "volume", "availableSpace",
                                          "MaxRDBandwidth", "requirement"};
  for (std::size_t i = 0; i < names.size(); ++i) {
    EXPECT_EQ(ad.attributes()[i].name, names[i]);
  }
  const auto& avail = std::get<Literal>(ad.find("availableSpace")->node).value;
  EXPECT_EQ(avail, Value::integer(53687091200));
  const auto& bw = std::get<Literal>(ad.find("maxrdbandwidth")->node).value;
  EXPECT_EQ(bw, Value::integer(76800));
  EXPECT_EQ(std::get<Literal>(ad.find("hostname")->node).value,
            Value::text("hugo.mcs.anl.gov"));
}

TEST(ClassAdParse, MinimalAd) {
  const ClassAd ad = parse_classad("a = 1;");
  ASSERT_EQ(ad.size(), 1u);
  EXPECT_EQ(std::get<Literal>(ad.find("a")->node).value, Value::integer(1));
}

TEST(ClassAdParse, LatexQuotedStringsAccepted) {
  const ClassAd ad = parse_classad("hostname = ``hugo.mcs.anl.gov'';");
  EXPECT_EQ(std::get<Literal>(ad.find("hostname")->node).value,
            Value::text("hugo.mcs.anl.gov"));
}

TEST(ClassAdParse, UnitExpansionProperty) {
  Rng rng(7);
  const char suffixes[] = {'K', 'M', 'G', 'T'};
  for (int k = 1; k <= 4; ++k) {
    for (int trial = 0; trial < 200; ++trial) {
      const std::int64_t n = testing::uniform_int(rng, 0, (INT64_MAX >> (10 * k)));
      const std::string text = "x = " + std::to_string(n) + suffixes[k - 1] + ";";
      const ClassAd ad = parse_classad(text);
      EXPECT_EQ(std::get<Literal>(ad.find("x")->node).value,
                Value::integer(n * (std::int64_t{1} << (10 * k))))
          << text;
    }
  }
  EXPECT_EQ(eval_text("75K/Sec"), Value::integer(75 * 1024));
  EXPECT_EQ(eval_text("1.5G"), Value::real(1.5 * 1073741824.0));
  EXPECT_EQ(eval_text("100/Sec"), Value::integer(100));
}

TEST(ClassAdParse, Errors) {
  try {
    parse_classad("a = 1;\nb = (2 + ;");
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 2u);
    EXPECT_EQ(e.column(), 10u);
  }
  EXPECT_THROW(parse_classad("a = 1; A = 2;"), ParseError);
  EXPECT_THROW(parse_classad("requirement = true; requirements = true;"), ParseError);
  EXPECT_THROW(parse_classad("a = 5X;"), ParseError);
  EXPECT_THROW(parse_classad("a = 5Gb;"), ParseError);
  EXPECT_THROW(parse_classad("a = 1 b = 2;"), ParseError);
  EXPECT_THROW(parse_classad("a = \"open;"), ParseError);
  EXPECT_THROW(parse_classad("true = 1;"), ParseError);
  EXPECT_THROW(parse_classad("a = other;"), ParseError);
  EXPECT_THROW(parse_classad("a = 99999999999999999999;"), ParseError);
  EXPECT_THROW(parse_classad("a = 9000000T;"), ParseError);
  try {
    parse_classad("a = 7Q;");
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_NE(e.message().find("unknown unit suffix"), std::string::npos);
  }
}

TEST(ClassAdParse, Int64Extremes) {
  EXPECT_EQ(eval_text("-9223372036854775808"), Value::integer(INT64_MIN));
  EXPECT_EQ(eval_text("9223372036854775807"), Value::integer(INT64_MAX));
  EXPECT_THROW(parse_expression("9223372036854775808"), ParseError);
}

TEST(ClassAdSerialize, CanonicalForm) {
  const ClassAd ad = parse_classad(
      "A=1;b=TRUE;c=(1+2)*3; d = -(4); e = other.x<2||!(y)&&z ;");
  EXPECT_EQ(serialize(ad),
            "A = 1;\n"
            "b = true;\n"
            "c = (1 + 2) * 3;\n"
            "d = -(4);\n"
            "e = other.x < 2 || !y && z;\n");
}

TEST(ClassAdSerialize, RoundTripRandomAds) {
  Rng rng(20260101);
  for (int i = 0; i < 500; ++i) {
    const ClassAd ad = testing::random_ad(rng);
    const std::string text = serialize(ad);
    ClassAd reparsed;
    ASSERT_NO_THROW(reparsed = parse_classad(text)) << text;
    EXPECT_TRUE(structurally_equal(ad, reparsed)) << text;
    EXPECT_EQ(serialize(reparsed), text);
  }
}

TEST(ClassAdEval, HugoPolicyExample) {
  const ClassAd storage = parse_classad(fixtures::kHugoStorageAd);
  const ClassAd app = parse_classad("reqdSpace = 5G;");
  EXPECT_EQ(eval_text("other.reqdSpace < 10G", storage, app), Value::boolean(true));
}

TEST(ClassAdEval, Basics) {
  EXPECT_EQ(eval_text("1 + 1"), Value::integer(2));
  EXPECT_EQ(eval_text("7 / 2"), Value::integer(3));
  EXPECT_EQ(eval_text("7 / 2.0"), Value::real(3.5));
  EXPECT_EQ(eval_text("1 < 1.5"), Value::boolean(true));
  EXPECT_EQ(eval_text("2 == 2.0"), Value::boolean(true));
  EXPECT_EQ(eval_text("\"a\" == \"a\""), Value::boolean(true));
  EXPECT_EQ(eval_text("\"a\" != \"A\""), Value::boolean(true));
  EXPECT_EQ(eval_text("-(3)"), Value::integer(-3));
  EXPECT_EQ(eval_text("!false"), Value::boolean(true));
  EXPECT_EQ(eval_text("1 + 2 * 3"), Value::integer(7));
  EXPECT_EQ(eval_text("10 - 4 - 3"), Value::integer(3));
}

TEST(ClassAdEval, Faults) {
  EXPECT_TRUE(eval_text("\"a\" + 1").is_error());
  EXPECT_TRUE(eval_text("1 / 0").is_error());
  EXPECT_TRUE(eval_text("1.0 / 0").is_error());
  EXPECT_TRUE(eval_text("\"a\" < \"b\"").is_error());
  EXPECT_TRUE(eval_text("1 && true").is_error());
  EXPECT_TRUE(eval_text("!3").is_error());
  EXPECT_TRUE(eval_text("-\"x\"").is_error());
  EXPECT_TRUE(eval_text("9223372036854775807 + 1").is_error());
  EXPECT_TRUE(eval_text("1 == \"1\"").is_error());
  EXPECT_TRUE(eval_text("missing + \"a\"").is_undefined());
  const ClassAd loop = parse_classad("a = b; b = a;");
  EXPECT_TRUE(evaluate_attribute("a", MatchContext{loop, loop}).is_error());
}

TEST(ClassAdEval, UndefinedPropagation) {
  EXPECT_TRUE(eval_text("missing > 3").is_undefined());
  EXPECT_EQ(eval_text("false && (missing > 3)"), Value::boolean(false));
  EXPECT_TRUE(eval_text("missing + 1").is_undefined());
  EXPECT_TRUE(eval_text("-missing").is_undefined());
  EXPECT_TRUE(eval_text("other.x").is_undefined());
}

// Hand-written Kleene table; independent of the evaluator.
TEST(ClassAdEval, ThreeValuedTruthTable) {
  enum T { kT, kF, kU };
  const char* text[] = {"true", "false", "missing"};
  const T and_table[3][3] = {{kT, kF, kU}, {kF, kF, kF}, {kU, kF, kU}};
  const T or_table[3][3] = {{kT, kT, kT}, {kT, kF, kU}, {kT, kU, kU}};
  const auto expect = [](T t) {
    return t == kU ? Value::undefined() : Value::boolean(t == kT);
  };
  for (int a = 0; a < 3; ++a) {
    for (int b = 0; b < 3; ++b) {
      const std::string l = std::string(text[a]) + " && " + text[b];
      const std::string r = std::string(text[a]) + " || " + text[b];
      EXPECT_EQ(eval_text(l), expect(and_table[a][b])) << l;
      EXPECT_EQ(eval_text(r), expect(or_table[a][b])) << r;
    }
  }
}

TEST(ClassAdEval, ScopedResolutionSwapsOther) {
  // b.y refers to its own x and to a's x through `other`.
  const ClassAd a = parse_classad("x = 1; z = other.y;");
  const ClassAd b = parse_classad("x = 10; y = x + other.x;");
  EXPECT_EQ(evaluate_attribute("z", MatchContext{a, b}), Value::integer(11));
}

TEST(ClassAdEval, Pure) {
  Rng rng(99);
  for (int i = 0; i < 200; ++i) {
    const ClassAd a = testing::random_ad(rng);
    const ClassAd b = testing::random_ad(rng);
    for (const auto& attr : a.attributes()) {
      const MatchContext ctx{a, b};
      EXPECT_EQ(evaluate(*attr.expr, ctx), evaluate(*attr.expr, ctx));
    }
  }
}

TEST(ClassAdMatch, CometAndHugo) {
  const ClassAd storage = parse_classad(fixtures::kHugoStorageAd);
  const ClassAd app = parse_classad(fixtures::kCometRequestAd);
  const MatchResult m = match_ads(app, storage);
  EXPECT_TRUE(m.matched);
  EXPECT_EQ(m.rank, Value::integer(53687091200));
  const MatchResult back = match_ads(storage, app);
  EXPECT_TRUE(back.matched);
  EXPECT_TRUE(back.rank.is_undefined());
}

TEST(ClassAdMatch, VacuousAndMissingRequirements) {
  const ClassAd a = parse_classad("requirement = true;");
  const ClassAd b = parse_classad("requirements = true;");
  EXPECT_TRUE(match_ads(a, b).matched);
  EXPECT_TRUE(match_ads(parse_classad("x = 1;"), parse_classad("y = 2;")).matched);
}

TEST(ClassAdMatch, PolicyRejectsLargeRequest) {
  const ClassAd storage = parse_classad(fixtures::kHugoStorageAd);
  std::string big = fixtures::kCometRequestAd;
  big.replace(big.find("reqdSpace = 5G"), 14, "reqdSpace = 20G");
  const MatchResult m = match_ads(parse_classad(big), storage);
  EXPECT_FALSE(m.matched);
  EXPECT_EQ(m.self_requirement, Value::boolean(true));
  EXPECT_EQ(m.other_requirement, Value::boolean(false));
}

TEST(ClassAdMatch, OutcomeSymmetry) {
  Rng rng(5);
  for (int i = 0; i < 500; ++i) {
    const ClassAd a = parse_classad(testing::random_request_text(rng, "comet.xyz.com"));
    const ClassAd b = parse_classad(testing::random_storage_text(rng, i));
    EXPECT_EQ(match_ads(a, b).matched, match_ads(b, a).matched);
    const ClassAd c = testing::random_ad(rng);
    const ClassAd d = testing::random_ad(rng);
    EXPECT_EQ(match_ads(c, d).matched, match_ads(d, c).matched);
  }
}

TEST(ClassAdRank, PrefersMoreAvailableSpace) {
  const ClassAd req = parse_classad(fixtures::kCometRequestAd);
  std::vector<ClassAd> cands = {
      parse_classad("hostname = \"b\"; availableSpace = 20G; MaxRDBandwidth = 60K;"),
      parse_classad("hostname = \"a\"; availableSpace = 50G; MaxRDBandwidth = 60K;"),
  };
  const auto ranked = rank_candidates(req, cands);
  ASSERT_EQ(ranked.size(), 2u);
  EXPECT_EQ(ranked[0].index, 1u);
  EXPECT_EQ(ranked[0].rank, 50.0 * 1073741824.0);
}

TEST(ClassAdRank, Singleton) {
  const ClassAd req = parse_classad("rank = 1;");
  std::vector<ClassAd> cands = {parse_classad("hostname = \"x\";")};
  const auto ranked = rank_candidates(req, cands);
  ASSERT_EQ(ranked.size(), 1u);
  EXPECT_EQ(ranked[0].index, 0u);
}

TEST(ClassAdRank, TieBreakByHostnameThenVolume) {
  const ClassAd req = parse_classad("rank = 1;");
  std::vector<ClassAd> cands = {
      parse_classad("hostname = \"B\"; volume = \"/a\";"),
      parse_classad("hostname = \"a\"; volume = \"/z\";"),
      parse_classad("hostname = \"A\"; volume = \"/b\";"),
  };
  const auto ranked = rank_candidates(req, cands);
  ASSERT_EQ(ranked.size(), 3u);
  EXPECT_EQ(ranked[0].index, 2u);
  EXPECT_EQ(ranked[1].index, 1u);
  EXPECT_EQ(ranked[2].index, 0u);
}

// Brute force: every pair evaluated directly, then a full sort on an
// explicit key tuple with the original index as the final tiebreak.
std::vector<std::size_t> brute_force_order(const ClassAd& req,
                                           const std::vector<ClassAd>& cands) {
  struct Row {
    double rank;
    std::string host;
    std::string volume;
    std::size_t index;
  };
  std::vector<Row> rows;
  for (std::size_t i = 0; i < cands.size(); ++i) {
    const MatchContext rc{req, cands[i]};
    const MatchContext cr{cands[i], req};
    const Expr* rq = req.find("requirement");
    const Expr* cq = cands[i].find("requirements");
    const bool ok1 = rq == nullptr || evaluate(*rq, rc) == Value::boolean(true);
    const bool ok2 = cq == nullptr || evaluate(*cq, cr) == Value::boolean(true);
    if (!ok1 || !ok2) continue;
    double rank = 0;
    if (const Expr* r = req.find("rank")) {
      const Value v = evaluate(*r, rc);
      if (v.is_integer()) rank = static_cast<double>(v.as_integer());
      if (v.is_real() && v.as_real() == v.as_real()) rank = v.as_real();
    }
    const Value h = cands[i].contains("hostname") ? evaluate(*cands[i].find("hostname"), cr) : Value();
    const Value vol = cands[i].contains("volume") ? evaluate(*cands[i].find("volume"), cr) : Value();
    rows.push_back({rank, h.is_text() ? to_lower(h.as_text()) : "",
                    vol.is_text() ? vol.as_text() : "", i});
  }
  std::sort(rows.begin(), rows.end(), [](const Row& a, const Row& b) {
    return std::tie(b.rank, a.host, a.volume, a.index) <
           std::tie(a.rank, b.host, b.volume, b.index);
  });
  std::vector<std::size_t> out;
  for (const auto& r : rows) out.push_back(r.index);
  return out;
}

TEST(ClassAdRank, MatchesBruteForceOracle) {
  Rng rng(314159);
  for (int trial = 0; trial < 200; ++trial) {
    const ClassAd req = parse_classad(testing::random_request_text(rng, "comet.xyz.com"));
    std::vector<ClassAd> cands;
    const auto n = testing::uniform_int(rng, 0, 15);
    for (int i = 0; i < n; ++i) cands.push_back(parse_classad(testing::random_storage_text(rng, i)));
    const auto ranked = rank_candidates(req, cands);
    std::vector<std::size_t> got;
    for (const auto& r : ranked) got.push_back(r.index);
    EXPECT_EQ(got, brute_force_order(req, cands)) << serialize(req);
  }
}

TEST(ClassAdRank, PositiveScalingKeepsOrder) {
  Rng rng(2718);
  for (int trial = 0; trial < 200; ++trial) {
    const ClassAd req = parse_classad(testing::random_request_text(rng, "comet.xyz.com"));
    std::vector<ClassAd> cands;
    const auto n = testing::uniform_int(rng, 1, 12);
    for (int i = 0; i < n; ++i) cands.push_back(parse_classad(testing::random_storage_text(rng, i)));
    const auto base = rank_candidates(req, cands);
    for (const char* factor : {"0.5", "3", "1000"}) {
      ClassAd scaled = req;
      if (const Expr* r = req.find("rank")) {
        scaled.set("rank", Expr::binary(BinaryOp::kMultiply, parse_expression(to_string(*r)),
                                        parse_expression(factor)));
      }
      const auto got = rank_candidates(scaled, cands);
      ASSERT_EQ(got.size(), base.size());
      for (std::size_t i = 0; i < got.size(); ++i) EXPECT_EQ(got[i].index, base[i].index);
    }
  }
}

TEST(ClassAdProjection, CometRequestReferences) {
  const ClassAd app = parse_classad(fixtures::kCometRequestAd);
  const std::string_view roots[] = {"requirement", "rank"};
  const auto names = referenced_other_attributes(app, roots);
  EXPECT_EQ(names, (std::vector<std::string>{"availableSpace", "MaxRDBandwidth"}));
}

TEST(ClassAdProjection, FollowsSelfReferences) {
  const ClassAd app = parse_classad(
      "rank = score; score = other.a + helper; helper = other.b * 2; "
      "requirement = other.A > 0;");
  const std::string_view roots[] = {"requirement", "rank"};
  EXPECT_EQ(referenced_other_attributes(app, roots),
            (std::vector<std::string>{"A", "b"}));
}

}  // namespace
}  // namespace gridsel::classad
