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

#include "gridsel/sim.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <map>
#include <memory>
#include <numeric>
#include <sstream>
#include <thread>

#include "gridsel/broker.hpp"
#include "gridsel/catalog.hpp"
#include "gridsel/infosvc.hpp"
#include "gridsel/net.hpp"
#include "gridsel/text.hpp"

namespace gridsel::sim {

namespace {

using Clock = std::chrono::steady_clock;

classad::ExprPtr number(double v) {
  if (std::trunc(v) == v && std::fabs(v) < 9.2233720368547758e18) {
    return classad::Expr::literal(classad::Value::integer(static_cast<std::int64_t>(v)));
  }
  return classad::Expr::literal(classad::Value::real(v));
}

classad::ExprPtr text(std::string s) {
  return classad::Expr::literal(classad::Value::text(std::move(s)));
}

// Requirement verdict: absent accepts, otherwise Boolean true only.
bool accepts(const classad::ClassAd& self, const classad::ClassAd& other) {
  if (!self.contains("requirement")) return true;
  const classad::Value v = classad::evaluate_attribute("requirement", {self, other});
  return v.is_boolean() && v.as_boolean();
}

double rank_of(const classad::ClassAd& request, const classad::ClassAd& candidate) {
  const classad::Value v = classad::evaluate_attribute("rank", {request, candidate});
  double r = 0;
  if (v.is_integer()) r = static_cast<double>(v.as_integer());
  if (v.is_real()) r = v.as_real();
  return std::isnan(r) ? 0 : r;
}

std::string text_attr(const classad::ClassAd& ad, std::string_view name) {
  const classad::ClassAd none;
  const classad::Value v = classad::evaluate_attribute(name, {ad, none});
  return v.is_text() ? v.as_text() : std::string();
}

std::string describe(const catalog::ReplicaLocation& loc) { return loc.hostname + ":" + loc.path; }

// Answers every connection with junk.
class GarbageServer {
 public:
  GarbageServer() : listener_(net::listen_tcp("127.0.0.1", 0)), port_(net::local_port(listener_)) {
    thread_ = std::thread([this] {
      while (!stop_) {
        try {
          net::Socket s = net::accept_for(listener_, Millis(50));
          if (!s.valid()) continue;
          const auto deadline = Clock::now() + Millis(1000);
          net::read_line(s, deadline, infosvc::kMaxRequestLine);
          net::send_all(s, "garbage\n", deadline);
        } catch (const net::NetError&) {
        }
      }
    });
  }
  ~GarbageServer() {
    stop_ = true;
    thread_.join();
  }
  std::uint16_t port() const { return port_; }

 private:
  net::Socket listener_;
  std::uint16_t port_;
  std::atomic<bool> stop_{false};
  std::thread thread_;
};

// Everything one node needs while a scenario runs.
struct LiveNode {
  const NodeSpec* spec = nullptr;
  std::unique_ptr<infosvc::InfoService> service;
  std::unique_ptr<infosvc::Server> server;
  std::unique_ptr<GarbageServer> garbage;
  net::Socket dead;  // accepts, never answers
  catalog::Endpoint endpoint;
};

std::unique_ptr<infosvc::InfoService> materialize(const NodeSpec& n) {
  using infosvc::AttributeSource;
  infosvc::NodeConfig c;
  c.hostname = n.hostname;
  c.attributes["totalspace"] = AttributeSource::fixed(n.total_space);
  c.attributes["availablespace"] = AttributeSource::fixed(n.available_space);
  c.attributes["disktransferrate"] = AttributeSource::fixed(n.disk_transfer_rate);
  c.attributes["drdtime"] = AttributeSource::fixed(n.drd_time);
  c.attributes["dwrtime"] = AttributeSource::fixed(n.dwr_time);
  if (!n.policy.empty()) c.attributes["requirements"] = AttributeSource::fixed(n.policy);
  infosvc::VolumeConfig v;
  v.volume = n.volume;
  v.attributes["mountpoint"] = AttributeSource::fixed(n.volume);
  c.volumes.push_back(std::move(v));
  auto svc = std::make_unique<infosvc::InfoService>(std::move(c));
  double ts = 0;
  for (const auto& s : n.samples) svc->history().record({s.direction, s.peer, s.bandwidth, 1, ++ts});
  return svc;
}

}  // namespace

// ---------------------------------------------------------------------------
// Oracle
// ---------------------------------------------------------------------------

classad::ClassAd oracle_ad(const NodeSpec& node, std::string_view requester_host) {
  classad::ClassAd ad;
  ad.set("hostname", text(node.hostname));
  ad.set("volume", text(node.volume));
  ad.set("totalSpace", number(classad::parse_quantity(node.total_space)));
  ad.set("availableSpace", number(classad::parse_quantity(node.available_space)));
  ad.set("mountPoint", text(node.volume));
  ad.set("diskTransferRate", number(classad::parse_quantity(node.disk_transfer_rate)));
  ad.set("drdTime", number(classad::parse_quantity(node.drd_time)));
  ad.set("dwrTime", number(classad::parse_quantity(node.dwr_time)));
  if (!node.policy.empty()) ad.set("requirement", classad::parse_expression(node.policy));

  const std::pair<history::Direction, const char*> dirs[] = {
      {history::Direction::kRead, "RD"}, {history::Direction::kWrite, "WR"}};
  for (const auto& [dir, tag] : dirs) {
    std::vector<double> bws;
    std::optional<double> last;
    for (const auto& s : node.samples) {
      if (s.direction != dir) continue;
      bws.push_back(s.bandwidth);
      if (!requester_host.empty() && iequals(host_of(s.peer), requester_host)) last = s.bandwidth;
    }
    if (!bws.empty()) {
      const auto sum = history::summarize(bws);
      const std::string t(tag);
      ad.set("Max" + t + "Bandwidth", number(*sum.max));
      ad.set("Min" + t + "Bandwidth", number(*sum.min));
      ad.set("Avg" + t + "Bandwidth", number(*sum.mean));
      ad.set("StdDev" + t + "Bandwidth", number(*sum.stddev));
    }
    if (last) ad.set("last" + std::string(tag) + "Bandwidth", number(*last));
  }
  return ad;
}

std::optional<std::size_t> oracle(const classad::ClassAd& request,
                                  std::span<const classad::ClassAd> candidates) {
  struct Entry {
    std::size_t index;
    double rank;
    std::string hostname;
    std::string volume;
  };
  std::optional<Entry> best;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    const auto& c = candidates[i];
    if (!accepts(request, c) || !accepts(c, request)) continue;
    Entry e{i, rank_of(request, c), text_attr(c, "hostname"), text_attr(c, "volume")};
    if (!best) {
      best = std::move(e);
      continue;
    }
    bool better = false;
    if (e.rank != best->rank) {
      better = e.rank > best->rank;
    } else if (const int h = icompare(e.hostname, best->hostname); h != 0) {
      better = h < 0;
    } else {
      better = e.volume < best->volume;
    }
    if (better) best = std::move(e);
  }
  if (!best) return std::nullopt;
  return best->index;
}

// ---------------------------------------------------------------------------
// Runs
// ---------------------------------------------------------------------------

std::size_t Report::mismatches() const {
  return std::count_if(requests.begin(), requests.end(),
                       [](const RequestReport& r) { return !r.agrees; });
}

std::size_t Report::expectation_failures() const {
  return std::count_if(requests.begin(), requests.end(),
                       [](const RequestReport& r) { return !r.expectation_met; });
}

Report run(const Scenario& scenario, const RunOptions& options) {
  if (auto p = scenario.problems(); !p.empty()) {
    std::string msg = "invalid scenario";
    for (const auto& s : p) msg += "; " + s;
    throw ScenarioError(msg);
  }
  const auto t0 = Clock::now();

  std::vector<LiveNode> nodes(scenario.nodes.size());
  std::map<std::string, std::size_t> by_host;
  broker::InProcessTransport local;
  broker::WireTransport wire;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    LiveNode& n = nodes[i];
    n.spec = &scenario.nodes[i];
    n.service = materialize(*n.spec);
    by_host[to_lower(n.spec->hostname)] = i;
    if (!options.wire) {
      n.endpoint = {"127.0.0.1", static_cast<std::uint16_t>(10000 + i)};
      local.add(n.endpoint, *n.service);
      using F = broker::InProcessTransport::Fault;
      switch (n.spec->fault) {
        case NodeFault::kNone: break;
        case NodeFault::kTimeout: local.set_fault(n.endpoint, F::kTimeout); break;
        case NodeFault::kRefused: local.set_fault(n.endpoint, F::kRefused); break;
        case NodeFault::kGarbage: local.set_fault(n.endpoint, F::kGarbage); break;
      }
      continue;
    }
    std::uint16_t port = 0;
    switch (n.spec->fault) {
      case NodeFault::kNone: {
        infosvc::ServerOptions so;
        so.workers = 2;
        n.server = std::make_unique<infosvc::Server>(*n.service, so);
        n.server->start("127.0.0.1", 0);
        port = n.server->port();
        break;
      }
      case NodeFault::kTimeout:
        n.dead = net::listen_tcp("127.0.0.1", 0);
        port = net::local_port(n.dead);
        break;
      case NodeFault::kRefused: {
        net::Socket tmp = net::listen_tcp("127.0.0.1", 0);
        port = net::local_port(tmp);
        break;
      }
      case NodeFault::kGarbage:
        n.garbage = std::make_unique<GarbageServer>();
        port = n.garbage->port();
        break;
    }
    n.endpoint = {"127.0.0.1", port};
  }

  catalog::Catalog cat;
  for (const auto& r : scenario.replicas) {
    const LiveNode& n = nodes[by_host.at(to_lower(r.hostname))];
    cat.add(r.logical, {r.hostname, n.endpoint, r.path, "gsiftp"});
  }

  broker::NodeTransport& transport =
      options.wire ? static_cast<broker::NodeTransport&>(wire) : local;
  broker::Broker b(cat, transport, {options.fan_out, true});

  Report report;
  for (std::size_t i = 0; i < scenario.requests.size(); ++i) {
    const RequestSpec& spec = scenario.requests[i];
    RequestReport rr;
    rr.index = i;
    rr.logical = spec.logical;
    const auto r0 = Clock::now();
    const auto request = broker::make_request(spec.logical, spec.ad, scenario.timeout);
    const std::string requester = broker::requester_host(request.ad);

    broker::SimulatedTransfer agent;
    for (const auto& n : nodes) {
      if (auto bw = n.service->history().predict(requester, history::Direction::kRead,
                                                 n.spec->load)) {
        if (*bw > 0) agent.set_bandwidth(n.spec->hostname, *bw);
      }
    }
    const auto sel = b.select(request, options.access ? &agent : nullptr);
    rr.elapsed = std::chrono::duration_cast<Millis>(Clock::now() - r0);
    if (auto c = sel.result.chosen()) rr.chosen = describe(*c);
    if (sel.transfer) rr.transfer_seconds = sel.transfer->result.seconds;
    rr.transfer_error = sel.transfer_error;
    for (const auto& x : sel.result.excluded) {
      rr.excluded.push_back(sel.result.candidates[x.candidate].location.hostname + ": " + x.reason);
    }

    // The oracle sees only the scenario: live holders of the file, full ads.
    std::vector<catalog::ReplicaLocation> live;
    std::vector<classad::ClassAd> ads;
    for (const auto& loc : cat.lookup(spec.logical)) {
      const NodeSpec& n = *nodes[by_host.at(to_lower(loc.hostname))].spec;
      if (n.fault != NodeFault::kNone) continue;
      live.push_back(loc);
      ads.push_back(oracle_ad(n, requester));
    }
    if (auto k = oracle(request.ad, ads)) rr.oracle = describe(live[*k]);
    rr.agrees = rr.chosen == rr.oracle;
    if (spec.expect) {
      if (iequals(*spec.expect, "none")) {
        rr.expectation_met = !rr.chosen;
      } else {
        rr.expectation_met = sel.result.chosen() && iequals(sel.result.chosen()->hostname, *spec.expect);
      }
    }
    report.requests.push_back(std::move(rr));
  }

  for (auto& n : nodes) {
    if (n.server) n.server->stop();
  }
  report.elapsed = std::chrono::duration_cast<Millis>(Clock::now() - t0);
  return report;
}

std::string format_report(const Report& report) {
  std::ostringstream out;
  for (const auto& r : report.requests) {
    out << "request " << r.index + 1 << " " << r.logical << ": chosen "
        << r.chosen.value_or("none") << ", oracle " << r.oracle.value_or("none") << ", "
        << (r.agrees ? "agree" : "MISMATCH");
    if (!r.expectation_met) out << ", UNEXPECTED";
    if (r.transfer_seconds) out << ", transfer " << format_shortest(*r.transfer_seconds) << " s";
    out << ", " << r.elapsed.count() << " ms\n";
    for (const auto& x : r.excluded) out << "  excluded " << x << "\n";
  }
  out << "requests " << report.requests.size() << ", mismatches " << report.mismatches()
      << ", unexpected " << report.expectation_failures() << ", " << report.elapsed.count()
      << " ms\n";
  return out.str();
}

}  // namespace gridsel::sim
