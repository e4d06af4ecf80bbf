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

#include "gridsel/schema.hpp"
#include "gridsel/text.hpp"
#include "support/fixtures.hpp"
#include "support/generators.hpp"

namespace gridsel::schema {
namespace {

VolumeRecord hugo() {
  VolumeRecord r;
  r.hostname = "hugo.mcs.anl.gov";
  r.volume = "/dev/sandbox";
  r.total_space = 100.0 * (1LL << 30);
  r.available_space = 50.0 * (1LL << 30);
  r.mount_point = "/sandbox";
  r.disk_transfer_rate = 40.0 * (1 << 20);
  r.drd_time = 0.008;
  r.dwr_time = 0.009;
  r.requirements = fixtures::kHugoPolicy;
  return r;
}

DirectoryName hugo_dn() { return volume_dn("/dev/sandbox", "hugo.mcs.anl.gov", "MCS", "ANL"); }

std::vector<std::string> lines(const std::string& text) {
  std::vector<std::string> out;
  for (auto l : split(text, '\n')) out.emplace_back(l);
  return out;
}

TEST(SchemaLdif, HugoVolumeLayout) {
  const std::string text = to_ldif(hugo(), hugo_dn());
  const auto l = lines(text);
  ASSERT_GE(l.size(), 4u);
  EXPECT_EQ(l[0], "dn: gss=/dev/sandbox,ou=hugo.mcs.anl.gov,ou=MCS,o=ANL");
  EXPECT_EQ(l[1], "objectclass: GridPhysicalResource");
  EXPECT_EQ(l[2], "objectclass: GridStorageServerVolume");
  EXPECT_NE(text.find("\navailablespace: 53687091200\n"), std::string::npos);
  EXPECT_NE(text.find("\ndrdtime: 0.008\n"), std::string::npos);
  EXPECT_TRUE(text.ends_with("\n\n"));
  EXPECT_EQ(text.find("\n\n"), text.size() - 2);
}

TEST(SchemaLdif, RoundTripIdentity) {
  const auto rec = from_ldif(to_ldif(hugo(), hugo_dn()));
  EXPECT_EQ(rec.dn, hugo_dn());
  ASSERT_TRUE(std::holds_alternative<VolumeRecord>(rec.record));
  EXPECT_EQ(std::get<VolumeRecord>(rec.record), hugo());
}

TEST(SchemaLdif, EmptyInputIsMissingDn) {
  try {
    from_ldif("");
    FAIL() << "expected LdifError";
  } catch (const LdifError& e) {
    EXPECT_STREQ(e.what(), "missing dn");
  }
  EXPECT_THROW(from_ldif("\n\n# only a comment\n"), LdifError);
}

TEST(SchemaLdif, RandomRecordSetsRoundTrip) {
  testing::Rng rng(20260101);
  for (int i = 0; i < 500; ++i) {
    const RecordSet set = testing::random_record_set(rng);
    const auto problems = validate(set);
    ASSERT_TRUE(problems.empty()) << "generator produced invalid set " << i << ": "
                                  << problems.front().attribute << " " << problems.front().reason;
    const std::string text = to_ldif(set);
    const auto back = record_sets_from_ldif(text);
    ASSERT_EQ(back.size(), 1u) << text;
    EXPECT_EQ(back[0], set) << text;
    EXPECT_EQ(to_ldif(back[0]), text);
  }
}

TEST(SchemaLdif, LenientReading) {
  const auto rec = from_ldif(
      "version: 1\r\n"
      "dn: gss=/v, ou=h.example\r\n"
      "ObjectClass: GridStorageServerVolume\r\n"
      "DWRTIME: 0.5\r\n"
      "hostName:    h.example\r\n"
      "Volume: /v\r\n"
      "X-Site-Note: first\r\n"
      "x-site-note: second\r\n"
      "\r\n");
  const auto& v = std::get<VolumeRecord>(rec.record);
  EXPECT_EQ(rec.dn, volume_dn("/v", "h.example", "", ""));
  EXPECT_EQ(v.hostname, "h.example");
  EXPECT_EQ(v.dwr_time, 0.5);
  ASSERT_EQ(v.extras.count("x-site-note"), 1u);
  EXPECT_EQ(v.extras.at("x-site-note"), (std::vector<std::string>{"first", "second"}));
}

TEST(SchemaLdif, MisspelledBandwidthAlias) {
  const auto rec = from_ldif(
      "dn: gss=comet.xyz.com,gss=TransferBandwidth,gss=/v,ou=h\n"
      "objectclass: GridStorageSourceTransferBandwidth\n"
      "sourceurl: gsiftp://comet.xyz.com\n"
      "lastRDBandwith: 76800\n"
      "lastRDurl: gsiftp://comet.xyz.com/f\n");
  const auto& s = std::get<SourceBandwidthRecord>(rec.record);
  EXPECT_EQ(s.last_rd_bandwidth, 76800.0);
  EXPECT_TRUE(s.extras.empty());
  EXPECT_TRUE(validate(s).empty());
}

TEST(SchemaLdif, RejectsOutsideProfile) {
  const std::string head = "dn: gss=/v,ou=h\nobjectclass: GridStorageServerVolume\n";
  EXPECT_THROW(from_ldif(head + "hostname:: aGVsbG8=\n"), LdifError);
  EXPECT_THROW(from_ldif(head + "hostname: h\n continued\n"), LdifError);
  EXPECT_THROW(from_ldif(head + "changetype: add\n"), LdifError);
  EXPECT_THROW(from_ldif(head + "totalspace: 1\ntotalspace: 2\n"), LdifError);
  EXPECT_THROW(from_ldif(head + "totalspace: lots\n"), LdifError);
  EXPECT_THROW(from_ldif("objectclass: GridStorageServerVolume\n"), LdifError);
  EXPECT_THROW(from_ldif("dn: gss=/v,ou=h\nobjectclass: person\n"), LdifError);
  EXPECT_THROW(from_ldif("dn: cn=x\nobjectclass: GridStorageServerVolume\n"), LdifError);
  EXPECT_THROW(from_ldif(head + "\n" + head), LdifError);
}

TEST(SchemaLdif, OrphanChildrenAreErrors) {
  BandwidthRecord bw;
  bw.max_rd = bw.min_rd = bw.avg_rd = 1.0;
  const std::string text = to_ldif(bw, bandwidth_dn(hugo_dn()));
  EXPECT_THROW(record_sets_from_ldif(text), LdifError);
}

TEST(SchemaLdif, RecordSetsGroupByAncestry) {
  RecordSet a{hugo_dn(), hugo(), BandwidthRecord{}, {}};
  a.bandwidth->max_rd = 76800;
  a.bandwidth->min_rd = 76800;
  a.bandwidth->avg_rd = 76800;
  SourceBandwidthRecord s;
  s.source_url = "gsiftp://comet.xyz.com";
  s.last_rd_bandwidth = 76800;
  s.last_rd_url = "gsiftp://comet.xyz.com/data";
  a.sources.push_back(s);
  RecordSet b = a;
  b.volume.volume = "/dev/scratch";
  b.dn = volume_dn("/dev/scratch", "hugo.mcs.anl.gov", "MCS", "ANL");
  b.sources.clear();

  const std::string text = to_ldif(a) + to_ldif(b);
  const auto sets = record_sets_from_ldif(text);
  ASSERT_EQ(sets.size(), 2u);
  EXPECT_EQ(sets[0], a);
  EXPECT_EQ(sets[1], b);
  const auto l = lines(to_ldif(a));
  EXPECT_NE(std::find(l.begin(), l.end(),
                      "dn: gss=gsiftp://comet.xyz.com,gss=TransferBandwidth,"
                      "gss=/dev/sandbox,ou=hugo.mcs.anl.gov,ou=MCS,o=ANL"),
            l.end());
}

TEST(SchemaDn, EscapingRoundTrip) {
  const auto dn = volume_dn("/a,b=c\\d", "h", "", "");
  EXPECT_EQ(dn.str(), "gss=/a\\,b\\=c\\\\d,ou=h");
  EXPECT_EQ(DirectoryName::parse(dn.str()), dn);
  EXPECT_EQ(dn.parent()->str(), "ou=h");
  EXPECT_FALSE(dn.parent()->parent());
  EXPECT_THROW(DirectoryName::parse("gss=/a,cn=b"), std::invalid_argument);
  EXPECT_THROW(DirectoryName::parse("gss="), std::invalid_argument);
  EXPECT_THROW(DirectoryName::parse("gss"), std::invalid_argument);
  EXPECT_THROW(DirectoryName::parse("gss=a\\"), std::invalid_argument);
}

TEST(SchemaValidate, MissingDiskTransferRate) {
  VolumeRecord r = hugo();
  r.disk_transfer_rate.reset();
  const auto v = validate(r);
  ASSERT_EQ(v.size(), 1u);
  EXPECT_EQ(v[0].attribute, "diskTransferRate");
  EXPECT_TRUE(v[0].missing);
  try {
    to_ldif(r, hugo_dn());
    FAIL() << "expected InvalidRecord";
  } catch (const InvalidRecord& e) {
    EXPECT_EQ(e.violations(), v);
  }
}

TEST(SchemaValidate, VolumeRanges) {
  VolumeRecord r = hugo();
  r.available_space = *r.total_space + 1;
  auto v = validate(r);
  ASSERT_EQ(v.size(), 1u);
  EXPECT_EQ(v[0].attribute, "availableSpace");
  EXPECT_FALSE(v[0].missing);

  r = hugo();
  r.disk_transfer_rate = 0;
  r.drd_time = -1;
  r.requirements = "other.x <";
  v = validate(r);
  ASSERT_EQ(v.size(), 3u);
  EXPECT_EQ(v[0].attribute, "diskTransferRate");
  EXPECT_EQ(v[1].attribute, "drdTime");
  EXPECT_EQ(v[2].attribute, "requirements");

  r = hugo();
  r.hostname = "bad\nhost";
  r.extras["hostname"] = {"shadow"};
  EXPECT_EQ(validate(r).size(), 2u);

  EXPECT_GE(validate(VolumeRecord{}).size(), 8u);
}

TEST(SchemaValidate, BandwidthTrios) {
  BandwidthRecord r;
  EXPECT_EQ(validate(r).size(), 1u);
  r.max_rd = 10;
  r.min_rd = 2;
  auto v = validate(r);
  ASSERT_EQ(v.size(), 1u);
  EXPECT_EQ(v[0].attribute, "AvgRDBandwidth");
  EXPECT_TRUE(v[0].missing);
  r.avg_rd = 11;
  v = validate(r);
  ASSERT_EQ(v.size(), 1u);
  EXPECT_EQ(v[0].reason, "above maximum");
  r.avg_rd = 5;
  EXPECT_TRUE(validate(r).empty());
  r.stddev_wr = 1;
  EXPECT_EQ(validate(r).size(), 3u);
}

TEST(SchemaValidate, SourcePairs) {
  SourceBandwidthRecord s;
  s.source_url = "gsiftp://a";
  EXPECT_EQ(validate(s).size(), 1u);
  s.last_wr_bandwidth = 5;
  EXPECT_EQ(validate(s).size(), 1u);  // url missing
  s.last_wr_url = "gsiftp://a/f";
  EXPECT_TRUE(validate(s).empty());
  s.last_rd_url = "gsiftp://a/g";
  EXPECT_EQ(validate(s).size(), 1u);
}

TEST(SchemaClassAd, HugoRecordMatchesComet) {
  BandwidthRecord bw;
  bw.max_rd = bw.min_rd = bw.avg_rd = 76800;
  const auto ad = record_to_classad(hugo(), &bw);
  const auto request = classad::parse_classad(fixtures::kCometRequestAd);
  const auto m = classad::match_ads(request, ad);
  EXPECT_TRUE(m.matched);
  EXPECT_EQ(m.rank, classad::Value::integer(53687091200));
  EXPECT_TRUE(ad.contains("requirements"));
  EXPECT_EQ(classad::evaluate_attribute("hostname", {ad, request}),
            classad::Value::text("hugo.mcs.anl.gov"));
  EXPECT_EQ(classad::evaluate_attribute("drdTime", {ad, request}),
            classad::Value::real(0.008));
}

TEST(SchemaClassAd, SourcesFlattened) {
  SourceBandwidthRecord a;
  a.source_url = "gsiftp://comet.xyz.com:2811/data";
  a.last_rd_bandwidth = 76800;
  a.last_rd_url = a.source_url;
  SourceBandwidthRecord b;
  b.source_url = "gsiftp://other.org";
  b.last_wr_bandwidth = 1.5;
  b.last_wr_url = b.source_url;
  const std::vector<SourceBandwidthRecord> sources{a, b};
  const auto ad = record_to_classad(hugo(), nullptr, sources, "COMET.xyz.com");
  const classad::ClassAd empty;
  const auto get = [&](std::string_view n) {
    return classad::evaluate_attribute(n, {ad, empty});
  };
  EXPECT_EQ(get("lastRDBandwidth_from_0"), classad::Value::integer(76800));
  EXPECT_EQ(get("lastWRBandwidth_from_1"), classad::Value::real(1.5));
  EXPECT_TRUE(get("lastRDBandwidth_from_1").is_undefined());
  EXPECT_EQ(get("lastRDBandwidth"), classad::Value::integer(76800));
  EXPECT_TRUE(get("lastWRBandwidth").is_undefined());
}

}  // namespace
}  // namespace gridsel::schema
