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

#include "gridsel/broker.hpp"

#include <algorithm>
#include <atomic>
#include <thread>

#include "gridsel/net.hpp"
#include "gridsel/text.hpp"

namespace gridsel::broker {

namespace {

using Clock = std::chrono::steady_clock;

Millis elapsed_since(Clock::time_point t0) {
  return std::chrono::duration_cast<Millis>(Clock::now() - t0);
}

bool contains_name(const std::vector<std::string>& names, std::string_view n) {
  return std::any_of(names.begin(), names.end(),
                     [&](const std::string& s) { return iequals(s, n); });
}

// True when `prefix` names `path` or a directory above it.
bool path_under(std::string_view path, std::string_view prefix) {
  if (prefix.empty() || !path.starts_with(prefix)) return false;
  return path.size() == prefix.size() || prefix.back() == '/' || path[prefix.size()] == '/';
}

// Longest volume or mount point containing the replica path; a lone volume
// on the host is taken as is.
const schema::RecordSet* pick_volume(const std::vector<schema::RecordSet>& sets,
                                     const catalog::ReplicaLocation& loc) {
  const schema::RecordSet* best = nullptr;
  std::size_t best_len = 0;
  for (const auto& s : sets) {
    for (std::string_view p : {std::string_view(s.volume.volume),
                               std::string_view(s.volume.mount_point.value_or(""))}) {
      if (path_under(loc.path, p) && (best == nullptr || p.size() > best_len)) {
        best = &s;
        best_len = p.size();
      }
    }
  }
  if (best == nullptr && sets.size() == 1) best = &sets.front();
  return best;
}

// Names the projection leaves out are recovered from the DN. Per-source
// entries in a reply to `FROM host` all describe that host.
void fill_from_dn(schema::RecordSet& set, const std::string& from) {
  const auto& comps = set.dn.components();
  if (set.volume.volume.empty() && !comps.empty()) set.volume.volume = comps[0].second;
  if (set.volume.hostname.empty() && comps.size() > 1) set.volume.hostname = comps[1].second;
  for (auto& src : set.sources) {
    if (src.source_url.empty()) src.source_url = from;
  }
}

}  // namespace

// ---------------------------------------------------------------------------
// Requests
// ---------------------------------------------------------------------------

BrokerRequest make_request(std::string logical, std::string_view ad_text, Millis timeout) {
  if (timeout <= Millis::zero()) throw std::invalid_argument("timeout must be positive");
  return {std::move(logical), classad::parse_classad(ad_text), timeout};
}

std::vector<std::string> projection(const classad::ClassAd& requester) {
  constexpr std::string_view roots[] = {"requirement", "rank"};
  return classad::referenced_other_attributes(requester, roots);
}

std::string requester_host(const classad::ClassAd& requester) {
  const classad::ClassAd none;
  const classad::Value v = classad::evaluate_attribute("hostname", {requester, none});
  return v.is_text() ? v.as_text() : std::string();
}

std::string_view to_string(CandidateStatus s) {
  switch (s) {
    case CandidateStatus::kOk: return "ok";
    case CandidateStatus::kTimeout: return "timeout";
    case CandidateStatus::kUnreachable: return "unreachable";
    case CandidateStatus::kProtocolError: return "protocol_error";
    case CandidateStatus::kInvalidRecord: return "invalid_record";
  }
  return "unknown";
}

std::optional<catalog::ReplicaLocation> SelectionResult::chosen() const {
  if (ranked.empty()) return std::nullopt;
  return candidates.at(ranked.front().candidate).location;
}

// ---------------------------------------------------------------------------
// Transports
// ---------------------------------------------------------------------------

std::string WireTransport::query(const catalog::Endpoint& endpoint, const std::string& request,
                                 Millis timeout) {
  return net::exchange(endpoint.host, endpoint.port, request, timeout);
}

void InProcessTransport::add(const catalog::Endpoint& endpoint, infosvc::InfoService& service) {
  std::lock_guard lock(mu_);
  services_[endpoint] = &service;
}

void InProcessTransport::set_fault(const catalog::Endpoint& endpoint, Fault fault) {
  std::lock_guard lock(mu_);
  faults_[endpoint] = fault;
}

std::string InProcessTransport::query(const catalog::Endpoint& endpoint,
                                      const std::string& request, Millis timeout) {
  infosvc::InfoService* svc = nullptr;
  Fault fault = Fault::kNone;
  bool delay = false;
  {
    std::lock_guard lock(mu_);
    if (auto it = services_.find(endpoint); it != services_.end()) svc = it->second;
    if (auto it = faults_.find(endpoint); it != faults_.end()) fault = it->second;
    delay = delay_timeouts_;
  }
  switch (fault) {
    case Fault::kTimeout:
      if (delay) std::this_thread::sleep_for(timeout);
      throw net::TimeoutError("no reply from " + endpoint.str());
    case Fault::kRefused:
      throw net::UnreachableError("connection to " + endpoint.str() + " refused");
    case Fault::kGarbage:
      return "\x01\x02 not a reply";
    case Fault::kError:
      return "ERR internal error\n";
    case Fault::kNone:
      break;
  }
  if (svc == nullptr) throw net::UnreachableError("nothing at " + endpoint.str());
  std::string_view line = request;
  if (line.ends_with('\n')) line.remove_suffix(1);
  return svc->handle_query(line);
}

std::string RecordingTransport::query(const catalog::Endpoint& endpoint,
                                      const std::string& request, Millis timeout) {
  {
    std::lock_guard lock(mu_);
    requests_.emplace_back(endpoint, request);
  }
  return inner_.query(endpoint, request, timeout);
}

std::vector<std::pair<catalog::Endpoint, std::string>> RecordingTransport::requests() const {
  std::lock_guard lock(mu_);
  return requests_;
}

// ---------------------------------------------------------------------------
// Access
// ---------------------------------------------------------------------------

void SimulatedTransfer::fail_host(std::string hostname) {
  std::lock_guard lock(mu_);
  failing_.insert(to_lower(hostname));
}

void SimulatedTransfer::set_bandwidth(std::string hostname, double bytes_per_second) {
  if (!(bytes_per_second > 0)) throw std::invalid_argument("bandwidth must be positive");
  std::lock_guard lock(mu_);
  bandwidths_[to_lower(hostname)] = bytes_per_second;
}

TransferResult SimulatedTransfer::fetch(const catalog::ReplicaLocation& replica,
                                        std::string_view logical) {
  std::lock_guard lock(mu_);
  attempts_.push_back(replica);
  const std::string host = to_lower(replica.hostname);
  if (failing_.contains(host)) {
    throw std::runtime_error("transfer of " + std::string(logical) + " from " +
                             replica.hostname + " failed");
  }
  double bw = bandwidth_;
  if (auto it = bandwidths_.find(host); it != bandwidths_.end()) bw = it->second;
  return {bytes_, bytes_ / bw};
}

std::vector<catalog::ReplicaLocation> SimulatedTransfer::attempts() const {
  std::lock_guard lock(mu_);
  return attempts_;
}

AccessError::AccessError(std::string message,
                         std::vector<std::pair<catalog::ReplicaLocation, std::string>> failures)
    : std::runtime_error([&] {
        for (const auto& [loc, why] : failures) message += "; " + loc.hostname + ": " + why;
        return message;
      }()),
      failures_(std::move(failures)) {}

// ---------------------------------------------------------------------------
// Broker
// ---------------------------------------------------------------------------

Broker::Broker(const catalog::Catalog& catalog, NodeTransport& transport, BrokerOptions options)
    : catalog_(catalog), transport_(transport), options_(options) {
  if (options_.fan_out == 0) options_.fan_out = 1;
}

CandidateInfo Broker::fetch(const BrokerRequest& request,
                            const catalog::ReplicaLocation& loc) const {
  CandidateInfo info;
  info.location = loc;
  const auto deadline = Clock::now() + request.timeout;
  const std::string from = requester_host(request.ad);

  infosvc::QueryRequest q;
  q.attributes = projection(request.ad);
  q.all = q.attributes.empty();
  // The volume's own policy always travels with the projected attributes.
  if (!q.all && !contains_name(q.attributes, "requirements")) {
    q.attributes.emplace_back("requirements");
  }
  if (!from.empty()) {
    try {
      infosvc::format_request({true, {}, from});
      q.from = from;
    } catch (const std::invalid_argument&) {
      // A hostname the request line cannot carry is simply not sent.
    }
  }

  const auto fail = [&info](CandidateStatus s, std::string detail) {
    info.status = s;
    info.detail = std::move(detail);
    info.records.reset();
    info.ad.reset();
    return info;
  };

  for (int round = 0; round < 2; ++round) {
    std::string line;
    try {
      line = infosvc::format_request(q);
    } catch (const std::invalid_argument& e) {
      return fail(CandidateStatus::kProtocolError, e.what());
    }
    info.requests.push_back(line.substr(0, line.size() - 1));
    const auto left = std::chrono::duration_cast<Millis>(deadline - Clock::now());
    if (left <= Millis::zero()) return fail(CandidateStatus::kTimeout, "deadline passed");

    std::vector<schema::RecordSet> sets;
    try {
      const std::string body = infosvc::response_body(transport_.query(loc.infoservice, line, left));
      sets = schema::record_sets_from_ldif(body);
    } catch (const net::TimeoutError& e) {
      return fail(CandidateStatus::kTimeout, e.what());
    } catch (const net::NetError& e) {
      return fail(CandidateStatus::kUnreachable, e.what());
    } catch (const infosvc::ProtocolError& e) {
      return fail(CandidateStatus::kProtocolError, e.what());
    } catch (const schema::LdifError& e) {
      return fail(CandidateStatus::kProtocolError, e.what());
    } catch (const std::invalid_argument& e) {
      return fail(CandidateStatus::kProtocolError, e.what());
    }

    std::erase_if(sets, [&](schema::RecordSet& s) {
      fill_from_dn(s, q.from);
      return !iequals(s.volume.hostname, loc.hostname);
    });
    const schema::RecordSet* picked = pick_volume(sets, loc);
    if (picked == nullptr) {
      return fail(CandidateStatus::kInvalidRecord,
                  sets.empty() ? "no volume published for " + loc.hostname
                               : "no published volume holds " + loc.path);
    }
    schema::RecordSet set = *picked;

    // A projected reply legitimately lacks mandatory attributes; anything
    // present must still be valid.
    std::vector<schema::Violation> bad = schema::validate(set);
    if (!q.all) std::erase_if(bad, [](const schema::Violation& v) { return v.missing; });
    if (!bad.empty()) return fail(CandidateStatus::kInvalidRecord, schema::InvalidRecord(bad).what());

    classad::ClassAd ad;
    try {
      ad = schema::record_to_classad(set.volume, set.bandwidth ? &*set.bandwidth : nullptr,
                                     set.sources, from);
    } catch (const classad::ParseError& e) {
      return fail(CandidateStatus::kInvalidRecord, std::string("policy: ") + e.what());
    }

    // Attributes the volume's policy reads from its own ad that the first
    // reply did not carry are fetched once more.
    std::vector<std::string> wanted;
    if (round == 0 && !q.all) {
      if (const classad::Expr* policy = ad.find("requirement")) {
        for (auto& name : classad::referenced_self_attributes(*policy)) {
          if (!ad.contains(name) && !contains_name(q.attributes, name) &&
              !contains_name(wanted, name)) {
            wanted.push_back(std::move(name));
          }
        }
      }
    }
    if (wanted.empty()) {
      info.records = std::move(set);
      info.ad = std::move(ad);
      return info;
    }
    q.attributes.insert(q.attributes.end(), wanted.begin(), wanted.end());
  }
  return info;  // unreachable: the second round never asks again
}

std::vector<CandidateInfo> Broker::search(const BrokerRequest& request) const {
  const auto locations = catalog_.lookup(request.logical);
  std::vector<CandidateInfo> out(locations.size());
  std::atomic<std::size_t> next{0};
  const auto work = [&] {
    for (std::size_t i = next++; i < locations.size(); i = next++) {
      out[i] = fetch(request, locations[i]);
    }
  };
  const std::size_t n = std::min(options_.fan_out, locations.size());
  std::vector<std::thread> threads;
  for (std::size_t t = 1; t < n; ++t) threads.emplace_back(work);
  work();
  for (auto& t : threads) t.join();
  return out;
}

SelectionResult Broker::match(const BrokerRequest& request,
                              std::vector<CandidateInfo> candidates) const {
  SelectionResult r;
  r.logical = request.logical;
  r.candidates = std::move(candidates);

  std::vector<classad::ClassAd> ads;
  std::vector<std::size_t> index_of;
  for (std::size_t i = 0; i < r.candidates.size(); ++i) {
    const auto& c = r.candidates[i];
    if (c.status != CandidateStatus::kOk || !c.ad) {
      r.excluded.push_back({i, std::string(to_string(c.status)) + ": " + c.detail});
      continue;
    }
    ads.push_back(*c.ad);
    index_of.push_back(i);
  }
  for (auto& rc : classad::rank_candidates(request.ad, ads)) {
    r.ranked.push_back({index_of[rc.index], std::move(rc.match), rc.rank});
  }
  for (std::size_t k = 0; k < ads.size(); ++k) {
    const std::size_t i = index_of[k];
    if (std::any_of(r.ranked.begin(), r.ranked.end(),
                    [i](const RankedEntry& e) { return e.candidate == i; })) {
      continue;
    }
    const auto m = classad::match_ads(request.ad, ads[k]);
    r.excluded.push_back({i, "requirements not met: requester " +
                                 m.self_requirement.to_string() + ", replica " +
                                 m.other_requirement.to_string()});
  }
  std::sort(r.excluded.begin(), r.excluded.end(),
            [](const Exclusion& a, const Exclusion& b) { return a.candidate < b.candidate; });
  return r;
}

TransferOutcome Broker::access(const BrokerRequest& request, const SelectionResult& result,
                               TransferAgent& agent) const {
  if (result.ranked.empty()) throw AccessError("no matching replica", {});
  std::vector<std::pair<catalog::ReplicaLocation, std::string>> failures;
  for (std::size_t pos = 0; pos < result.ranked.size(); ++pos) {
    const auto& loc = result.candidates.at(result.ranked[pos].candidate).location;
    try {
      TransferResult t = agent.fetch(loc, request.logical);
      return {loc, pos, t, std::move(failures)};
    } catch (const std::exception& e) {
      failures.emplace_back(loc, e.what());
    }
    if (!options_.failover) break;
  }
  throw AccessError("every attempted replica failed", std::move(failures));
}

Selection Broker::select(const BrokerRequest& request, TransferAgent* agent) const {
  Selection s;
  auto t0 = Clock::now();
  auto candidates = search(request);
  const Millis search_time = elapsed_since(t0);

  t0 = Clock::now();
  s.result = match(request, std::move(candidates));
  s.result.timings.search = search_time;
  s.result.timings.match = elapsed_since(t0);

  if (agent != nullptr) {
    t0 = Clock::now();
    try {
      s.transfer = access(request, s.result, *agent);
    } catch (const AccessError& e) {
      s.transfer_error = e.what();
    }
    s.result.timings.access = elapsed_since(t0);
  }
  return s;
}

}  // namespace gridsel::broker
