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
#include <json.hpp>
#include <memory>
#include <random>
#include <set>

#include "gridsel/broker.hpp"
#include "gridsel/net.hpp"
#include "gridsel/text.hpp"
#include "support/fixtures.hpp"

namespace gridsel::broker {
namespace {

using namespace std::chrono_literals;
using infosvc::AttributeSource;
using infosvc::InfoService;
using infosvc::NodeConfig;

struct NodeSpec {
  std::string host;
  std::string available = "50G";
  std::string total = "100G";
  std::string policy = fixtures::kHugoPolicy;
  double read_bandwidth = 76800;
  std::vector<std::string> volumes = {"/dev/sandbox"};
};

std::unique_ptr<InfoService> make_node(const NodeSpec& spec) {
  NodeConfig c;
  c.hostname = spec.host;
  c.attributes["disktransferrate"] = AttributeSource::fixed("40M");
  c.attributes["drdtime"] = AttributeSource::fixed("0.008");
  c.attributes["dwrtime"] = AttributeSource::fixed("0.009");
  c.attributes["totalspace"] = AttributeSource::fixed(spec.total);
  c.attributes["availablespace"] = AttributeSource::fixed(spec.available);
  if (!spec.policy.empty()) c.attributes["requirements"] = AttributeSource::fixed(spec.policy);
  for (const auto& v : spec.volumes) {
    infosvc::VolumeConfig vc;
    vc.volume = v;
    vc.attributes["mountpoint"] = AttributeSource::fixed(v);
    c.volumes.push_back(std::move(vc));
  }
  auto svc = std::make_unique<InfoService>(std::move(c));
  if (spec.read_bandwidth > 0) {
    svc->history().record({history::Direction::kRead, "gsiftp://comet.xyz.com/x",
                           spec.read_bandwidth, 1, 1});
  }
  return svc;
}

// In-process grid: one information service per node, all holding `logical`.
struct Grid {
  catalog::Catalog catalog;
  InProcessTransport transport;
  std::vector<std::unique_ptr<InfoService>> nodes;
  std::uint16_t next_port = 7000;

  catalog::ReplicaLocation add(const NodeSpec& spec, const std::string& path = "/dev/sandbox/f") {
    nodes.push_back(make_node(spec));
    const catalog::ReplicaLocation loc{spec.host, {"127.0.0.1", next_port++}, path, "gsiftp"};
    transport.add(loc.infoservice, *nodes.back());
    catalog.add("lfn://f", loc);
    return loc;
  }
};

BrokerRequest comet(Millis timeout = 2000ms) {
  return make_request("lfn://f", fixtures::kCometRequestAd, timeout);
}

std::vector<std::string> ranked_hosts(const SelectionResult& r) {
  std::vector<std::string> out;
  for (const auto& e : r.ranked) out.push_back(r.candidates[e.candidate].location.hostname);
  return out;
}

const CandidateInfo& candidate(const SelectionResult& r, std::string_view host) {
  for (const auto& c : r.candidates) {
    if (c.location.hostname == host) return c;
  }
  throw std::out_of_range(std::string(host));
}

TEST(BrokerRequest, ProjectionAndHost) {
  const auto req = comet();
  EXPECT_EQ(projection(req.ad), (std::vector<std::string>{"availableSpace", "MaxRDBandwidth"}));
  EXPECT_EQ(requester_host(req.ad), "comet.xyz.com");
  EXPECT_TRUE(projection(classad::parse_classad("requirement = true;")).empty());
  EXPECT_THROW(make_request("lfn://f", "x = ;"), classad::ParseError);
  EXPECT_THROW(make_request("lfn://f", "x = 1;", 0ms), std::invalid_argument);
}

TEST(Broker, ThreeHealthyNodesRankedBySpace) {
  Grid g;
  g.add({"a.org", "50G"});
  g.add({"b.org", "80G"});
  g.add({"c.org", "20G"});
  Broker broker(g.catalog, g.transport);
  const auto s = broker.select(comet());
  EXPECT_EQ(ranked_hosts(s.result), (std::vector<std::string>{"b.org", "a.org", "c.org"}));
  ASSERT_TRUE(s.result.chosen());
  EXPECT_EQ(s.result.chosen()->hostname, "b.org");
  EXPECT_TRUE(s.result.excluded.empty());
  EXPECT_DOUBLE_EQ(s.result.ranked[0].rank, 80.0 * 1024 * 1024 * 1024);
  for (const auto& c : s.result.candidates) {
    EXPECT_EQ(c.status, CandidateStatus::kOk) << c.detail;
    ASSERT_TRUE(c.ad);
    EXPECT_TRUE(c.ad->contains("hostname"));
    EXPECT_TRUE(c.ad->contains("volume"));
  }
}

TEST(Broker, WireQueryCarriesProjectionPolicyAndRequester) {
  Grid g;
  g.add({"hugo.mcs.anl.gov"});
  RecordingTransport rec(g.transport);
  Broker broker(g.catalog, rec);
  const auto s = broker.select(comet());
  ASSERT_EQ(rec.requests().size(), 1u);
  EXPECT_EQ(rec.requests()[0].second,
            "QUERY availableSpace,MaxRDBandwidth,requirements FROM comet.xyz.com\n");
  const auto& c = s.result.candidates.at(0);
  EXPECT_EQ(c.requests,
            (std::vector<std::string>{
                "QUERY availableSpace,MaxRDBandwidth,requirements FROM comet.xyz.com"}));
  // The reply carried only what was asked for.
  ASSERT_TRUE(c.records);
  EXPECT_FALSE(c.records->volume.total_space);
  EXPECT_FALSE(c.records->volume.disk_transfer_rate);
  EXPECT_EQ(c.records->volume.available_space, 50.0 * 1024 * 1024 * 1024);
  EXPECT_EQ(c.records->volume.hostname, "hugo.mcs.anl.gov");
  EXPECT_EQ(c.records->volume.volume, "/dev/sandbox");
  EXPECT_EQ(s.result.chosen()->hostname, "hugo.mcs.anl.gov");
  EXPECT_DOUBLE_EQ(s.result.ranked[0].rank, 53687091200.0);
}

TEST(Broker, UnprojectableRequestAsksForEverything) {
  Grid g;
  g.add({"a.org"});
  RecordingTransport rec(g.transport);
  Broker broker(g.catalog, rec);
  const auto s = broker.select(make_request("lfn://f", "requirement = true;"));
  ASSERT_EQ(rec.requests().size(), 1u);
  EXPECT_EQ(rec.requests()[0].second, "QUERY *\n");
  EXPECT_EQ(s.result.candidates[0].status, CandidateStatus::kOk);
  EXPECT_TRUE(s.result.candidates[0].records->volume.total_space);
}

TEST(Broker, PolicyOnOwnAttributesTriggersFollowUp) {
  Grid g;
  g.add({"a.org", "50G", "100G", "other.reqdSpace < availableSpace && totalSpace > 60G"});
  RecordingTransport rec(g.transport);
  Broker broker(g.catalog, rec);
  const auto s = broker.select(comet());
  const auto& c = candidate(s.result, "a.org");
  ASSERT_EQ(c.requests.size(), 2u);
  EXPECT_EQ(c.requests[1],
            "QUERY availableSpace,MaxRDBandwidth,requirements,totalSpace FROM comet.xyz.com");
  ASSERT_TRUE(c.ad);
  EXPECT_TRUE(c.ad->contains("totalSpace"));
  ASSERT_TRUE(s.result.chosen());
  EXPECT_EQ(s.result.chosen()->hostname, "a.org");
}

TEST(Broker, OnlyCatalogEndpointsAndChosenReplicaAreContacted) {
  Grid g;
  std::set<catalog::Endpoint> listed;
  for (int i = 0; i < 6; ++i) {
    listed.insert(g.add({"n" + std::to_string(i) + ".org", std::to_string(10 + i) + "G"})
                      .infoservice);
  }
  // A node that holds no replica of the file.
  g.nodes.push_back(make_node({"bystander.org"}));
  g.transport.add({"127.0.0.1", 9999}, *g.nodes.back());

  RecordingTransport rec(g.transport);
  SimulatedTransfer agent;
  Broker broker(g.catalog, rec);
  const auto s = broker.select(comet(), &agent);
  ASSERT_EQ(rec.requests().size(), 6u);
  for (const auto& [ep, line] : rec.requests()) EXPECT_TRUE(listed.contains(ep)) << ep.str();
  EXPECT_EQ(g.nodes.back()->queries_served(), 0u);
  ASSERT_EQ(agent.attempts().size(), 1u);
  EXPECT_EQ(agent.attempts()[0], *s.result.chosen());
  EXPECT_EQ(s.result.chosen()->hostname, "n5.org");
}

TEST(Broker, MatchIgnoresCandidateOrder) {
  Grid g;
  std::mt19937_64 rng(7);
  for (int i = 0; i < 8; ++i) {
    // Repeated sizes force the hostname tie-break.
    g.add({"h" + std::to_string(i) + ".org", std::to_string(6 + (i % 3)) + "G"});
  }
  Broker broker(g.catalog, g.transport);
  const auto req = comet();
  const auto candidates = broker.search(req);
  const auto baseline = broker.match(req, candidates);
  ASSERT_EQ(baseline.ranked.size(), 8u);
  for (int round = 0; round < 50; ++round) {
    auto shuffled = candidates;
    std::shuffle(shuffled.begin(), shuffled.end(), rng);
    const auto r = broker.match(req, shuffled);
    EXPECT_EQ(ranked_hosts(r), ranked_hosts(baseline));
    EXPECT_EQ(r.chosen(), baseline.chosen());
  }
  EXPECT_EQ(ranked_hosts(baseline).front(), "h2.org");
}

TEST(Broker, FaultsAreClassifiedPerCandidate) {
  Grid g;
  const auto good = g.add({"good.org", "20G"});
  const auto slow = g.add({"slow.org", "90G"});
  const auto gone = g.add({"gone.org", "90G"});
  const auto noisy = g.add({"noisy.org", "90G"});
  const auto err = g.add({"err.org", "90G"});
  g.add({"liar.org", "200G", "100G"});  // availableSpace above totalSpace
  g.add({"bad-policy.org", "90G", "100G", "other.reqdSpace <"});
  g.transport.set_fault(slow.infoservice, InProcessTransport::Fault::kTimeout);
  g.transport.set_fault(gone.infoservice, InProcessTransport::Fault::kRefused);
  g.transport.set_fault(noisy.infoservice, InProcessTransport::Fault::kGarbage);
  g.transport.set_fault(err.infoservice, InProcessTransport::Fault::kError);

  Broker broker(g.catalog, g.transport);
  auto req = comet();
  // Make availableSpace and totalSpace both travel so the liar is caught.
  req.ad.set("rank", classad::parse_expression("other.availableSpace + 0 * other.totalSpace"));
  const auto s = broker.select(req);
  EXPECT_EQ(candidate(s.result, "good.org").status, CandidateStatus::kOk);
  EXPECT_EQ(candidate(s.result, "slow.org").status, CandidateStatus::kTimeout);
  EXPECT_EQ(candidate(s.result, "gone.org").status, CandidateStatus::kUnreachable);
  EXPECT_EQ(candidate(s.result, "noisy.org").status, CandidateStatus::kProtocolError);
  EXPECT_EQ(candidate(s.result, "err.org").status, CandidateStatus::kProtocolError);
  EXPECT_EQ(candidate(s.result, "liar.org").status, CandidateStatus::kInvalidRecord);
  EXPECT_EQ(candidate(s.result, "bad-policy.org").status, CandidateStatus::kInvalidRecord);
  EXPECT_EQ(s.result.excluded.size(), 6u);
  for (const auto& x : s.result.excluded) EXPECT_FALSE(x.reason.empty());
  ASSERT_TRUE(s.result.chosen());
  EXPECT_EQ(s.result.chosen()->hostname, "good.org");
}

TEST(Broker, UnmatchedCandidatesAreExcludedWithReason) {
  Grid g;
  g.add({"small.org", "4G"});                          // requester says no
  g.add({"strict.org", "50G", "100G", "other.reqdSpace < 1G"});  // replica says no
  g.add({"fine.org", "6G"});
  Broker broker(g.catalog, g.transport);
  const auto s = broker.select(comet());
  EXPECT_EQ(ranked_hosts(s.result), (std::vector<std::string>{"fine.org"}));
  ASSERT_EQ(s.result.excluded.size(), 2u);
  for (const auto& x : s.result.excluded) {
    EXPECT_NE(x.reason.find("requirements not met"), std::string::npos) << x.reason;
  }
}

TEST(Broker, LongestVolumePrefixHoldsTheReplica) {
  Grid g;
  g.add({"multi.org", "50G", "100G", fixtures::kHugoPolicy, 76800, {"/data", "/data/big"}},
        "/data/big/f");
  Broker broker(g.catalog, g.transport);
  const auto s = broker.select(comet());
  const auto& c = s.result.candidates.at(0);
  ASSERT_EQ(c.status, CandidateStatus::kOk) << c.detail;
  EXPECT_EQ(c.records->volume.volume, "/data/big");

  Grid h;
  h.add({"multi.org", "50G", "100G", fixtures::kHugoPolicy, 76800, {"/data", "/scratch"}},
        "/elsewhere/f");
  Broker b2(h.catalog, h.transport);
  const auto s2 = b2.select(comet());
  EXPECT_EQ(s2.result.candidates.at(0).status, CandidateStatus::kInvalidRecord);
}

TEST(Broker, FailoverWalksTheRanking) {
  Grid g;
  g.add({"first.org", "90G"});
  g.add({"second.org", "60G"});
  g.add({"third.org", "30G"});
  SimulatedTransfer agent(1 << 20, 1 << 20);
  agent.fail_host("first.org");
  Broker broker(g.catalog, g.transport);
  const auto s = broker.select(comet(), &agent);
  ASSERT_TRUE(s.transfer) << s.transfer_error;
  EXPECT_EQ(s.transfer->replica.hostname, "second.org");
  EXPECT_EQ(s.transfer->position, 1u);
  ASSERT_EQ(s.transfer->failures.size(), 1u);
  EXPECT_EQ(s.transfer->failures[0].first.hostname, "first.org");
  EXPECT_DOUBLE_EQ(s.transfer->result.seconds, 1.0);

  SimulatedTransfer strict_agent;
  strict_agent.fail_host("first.org");
  Broker strict(g.catalog, g.transport, {16, false});
  const auto t = strict.select(comet(), &strict_agent);
  EXPECT_FALSE(t.transfer);
  EXPECT_NE(t.transfer_error.find("first.org"), std::string::npos);
  EXPECT_EQ(strict_agent.attempts().size(), 1u);
}

TEST(Broker, EmptyCatalogChoosesNothing) {
  Grid g;
  SimulatedTransfer agent;
  Broker broker(g.catalog, g.transport);
  const auto s = broker.select(comet(), &agent);
  EXPECT_TRUE(s.result.candidates.empty());
  EXPECT_FALSE(s.result.chosen());
  EXPECT_FALSE(s.transfer);
  EXPECT_EQ(s.transfer_error, "no matching replica");
  EXPECT_THROW(broker.access(comet(), s.result, agent), AccessError);
  EXPECT_TRUE(agent.attempts().empty());
}

TEST(Broker, JsonMirrorsSelection) {
  Grid g;
  g.add({"a.org", "50G"});
  g.add({"b.org", "4G"});
  const auto gone = g.add({"c.org", "90G"});
  g.transport.set_fault(gone.infoservice, InProcessTransport::Fault::kRefused);
  SimulatedTransfer agent;
  Broker broker(g.catalog, g.transport);
  const auto s = broker.select(comet(), &agent);
  const auto j = nlohmann::json::parse(to_json(s));
  EXPECT_EQ(j["logical"], "lfn://f");
  EXPECT_EQ(j["chosen"]["hostname"], "a.org");
  ASSERT_EQ(j["candidates"].size(), 3u);
  EXPECT_EQ(j["candidates"][2]["status"], "unreachable");
  EXPECT_TRUE(j["candidates"][2]["ad"].is_null());
  EXPECT_EQ(j["candidates"][0]["ad"]["availableSpace"], 53687091200LL);
  EXPECT_EQ(j["candidates"][0]["ad"]["requirement"],
            "other.reqdSpace < 10737418240 && other.reqdRDBandwidth < 76800");
  ASSERT_EQ(j["ranked"].size(), 1u);
  EXPECT_EQ(j["ranked"][0]["requester_requirement"], true);
  ASSERT_EQ(j["excluded"].size(), 2u);
  EXPECT_TRUE(j["timings_ms"].contains("search"));
  EXPECT_EQ(j["transfer"]["ok"], true);
  EXPECT_EQ(j["transfer"]["replica"]["hostname"], "a.org");
}

// Oracle: build each replica's ad straight from its numbers and scan.
TEST(BrokerProperty, RandomGridsAgreeWithLinearScan) {
  std::mt19937_64 rng(20260916);
  for (int round = 0; round < 500; ++round) {
    Grid g;
    const int n = std::uniform_int_distribution<int>(0, 6)(rng);
    std::vector<std::pair<std::string, classad::ClassAd>> expected_ads;
    for (int i = 0; i < n; ++i) {
      NodeSpec spec;
      spec.host = "node" + std::to_string(std::uniform_int_distribution<int>(0, 99)(rng)) + ".org";
      if (std::any_of(expected_ads.begin(), expected_ads.end(),
                      [&](const auto& e) { return e.first == spec.host; })) {
        continue;
      }
      const int avail = std::uniform_int_distribution<int>(1, 12)(rng);
      const int limit = std::uniform_int_distribution<int>(1, 12)(rng);
      spec.available = std::to_string(avail) + "G";
      spec.read_bandwidth = std::uniform_int_distribution<int>(20, 100)(rng) * 1024;
      spec.policy = "other.reqdSpace < " + std::to_string(limit) + "G";
      g.add(spec);
      expected_ads.emplace_back(
          spec.host, classad::parse_classad("hostname = \"" + spec.host +
                                            "\"; volume = \"/dev/sandbox\"; availableSpace = " +
                                            spec.available + "; MaxRDBandwidth = " +
                                            format_shortest(spec.read_bandwidth) +
                                            "; requirement = " + spec.policy + ";"));
    }
    const auto req = comet();
    std::optional<std::string> best;
    double best_rank = 0;
    for (const auto& [host, ad] : expected_ads) {
      const auto m = classad::match_ads(req.ad, ad);
      if (!m.matched) continue;
      const double r = classad::rank_key(m.rank);
      if (!best || r > best_rank || (r == best_rank && icompare(host, *best) < 0)) {
        best = host;
        best_rank = r;
      }
    }
    Broker broker(g.catalog, g.transport);
    const auto s = broker.select(req);
    const auto chosen = s.result.chosen();
    ASSERT_EQ(chosen.has_value(), best.has_value()) << "round " << round;
    if (best) EXPECT_EQ(chosen->hostname, *best) << "round " << round;
  }
}

TEST(BrokerWire, TimeoutAndRefusalOverTcp) {
  auto live = make_node({"live.org", "30G"});
  infosvc::Server server(*live);
  server.start("127.0.0.1", 0);

  // Accepts connections into the backlog but never answers.
  net::Socket dead = net::listen_tcp("127.0.0.1", 0);
  const auto dead_port = net::local_port(dead);
  // Bound once, then released: nothing listens there.
  std::uint16_t closed_port = 0;
  {
    net::Socket tmp = net::listen_tcp("127.0.0.1", 0);
    closed_port = net::local_port(tmp);
  }

  catalog::Catalog cat;
  cat.add("lfn://f", {"live.org", {"127.0.0.1", server.port()}, "/dev/sandbox/f", ""});
  cat.add("lfn://f", {"dead.org", {"127.0.0.1", dead_port}, "/dev/sandbox/f", ""});
  cat.add("lfn://f", {"closed.org", {"127.0.0.1", closed_port}, "/dev/sandbox/f", ""});

  WireTransport wire;
  Broker broker(cat, wire);
  const auto t0 = std::chrono::steady_clock::now();
  const auto s = broker.select(comet(500ms));
  const auto took = std::chrono::steady_clock::now() - t0;
  EXPECT_LT(took, 1500ms);
  EXPECT_EQ(candidate(s.result, "dead.org").status, CandidateStatus::kTimeout);
  EXPECT_EQ(candidate(s.result, "closed.org").status, CandidateStatus::kUnreachable);
  EXPECT_EQ(candidate(s.result, "live.org").status, CandidateStatus::kOk)
      << candidate(s.result, "live.org").detail;
  ASSERT_TRUE(s.result.chosen());
  EXPECT_EQ(s.result.chosen()->hostname, "live.org");
  server.stop();
}

}  // namespace
}  // namespace gridsel::broker
