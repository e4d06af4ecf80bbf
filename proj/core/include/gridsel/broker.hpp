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

#ifndef GRIDSEL_BROKER_HPP
#define GRIDSEL_BROKER_HPP

// Client-side replica selection. Each client runs its own broker:
//
//   search  look the logical file up in the catalog, then ask every replica's
//           information service for the attributes the request cares about
//   match   turn each answer into an ad, match it against the request, rank
//   access  fetch from the best replica, falling back down the ranking
//
// Nothing but the catalog, the listed information services and the chosen
// replica is contacted.

#include <chrono>
#include <cstddef>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "gridsel/catalog.hpp"
#include "gridsel/classad.hpp"
#include "gridsel/infosvc.hpp"
#include "gridsel/schema.hpp"

namespace gridsel::broker {

using Millis = std::chrono::milliseconds;

struct BrokerRequest {
  std::string logical;
  classad::ClassAd ad;
  Millis timeout{2000};
};

/// Throws classad::ParseError or std::invalid_argument (timeout <= 0).
BrokerRequest make_request(std::string logical, std::string_view ad_text,
                           Millis timeout = Millis{2000});

/// `other.` attributes reachable from the requester's requirement and rank,
/// as written. Empty means every attribute is needed.
std::vector<std::string> projection(const classad::ClassAd& requester);

/// The requester's `hostname` if it evaluates to text, else empty.
std::string requester_host(const classad::ClassAd& requester);

// ---------------------------------------------------------------------------
// Transports
// ---------------------------------------------------------------------------

/// Delivers one request line to an information service and returns the raw
/// response. Throws net::TimeoutError, net::UnreachableError or
/// net::NetError.
class NodeTransport {
 public:
  virtual ~NodeTransport() = default;
  virtual std::string query(const catalog::Endpoint& endpoint, const std::string& request,
                            Millis timeout) = 0;
};

/// TCP.
class WireTransport : public NodeTransport {
 public:
  std::string query(const catalog::Endpoint& endpoint, const std::string& request,
                    Millis timeout) override;
};

/// Direct calls into InfoService objects, with fault injection.
class InProcessTransport : public NodeTransport {
 public:
  enum class Fault {
    kNone,
    kTimeout,   // no answer; waits for the timeout only if delay_timeouts
    kRefused,   // connection refused
    kGarbage,   // unparseable reply
    kError,     // ERR reply
  };

  void add(const catalog::Endpoint& endpoint, infosvc::InfoService& service);
  void set_fault(const catalog::Endpoint& endpoint, Fault fault);
  void set_delay_timeouts(bool on) { delay_timeouts_ = on; }

  std::string query(const catalog::Endpoint& endpoint, const std::string& request,
                    Millis timeout) override;

 private:
  std::mutex mu_;
  std::map<catalog::Endpoint, infosvc::InfoService*> services_;
  std::map<catalog::Endpoint, Fault> faults_;
  bool delay_timeouts_ = false;
};

/// Forwards to another transport and remembers every request.
class RecordingTransport : public NodeTransport {
 public:
  explicit RecordingTransport(NodeTransport& inner) : inner_(inner) {}

  std::string query(const catalog::Endpoint& endpoint, const std::string& request,
                    Millis timeout) override;

  std::vector<std::pair<catalog::Endpoint, std::string>> requests() const;

 private:
  NodeTransport& inner_;
  mutable std::mutex mu_;
  std::vector<std::pair<catalog::Endpoint, std::string>> requests_;
};

// ---------------------------------------------------------------------------
// Results
// ---------------------------------------------------------------------------

enum class CandidateStatus { kOk, kTimeout, kUnreachable, kProtocolError, kInvalidRecord };

std::string_view to_string(CandidateStatus s);

struct CandidateInfo {
  catalog::ReplicaLocation location;
  CandidateStatus status = CandidateStatus::kOk;
  std::string detail;                       // failure description
  std::vector<std::string> requests;        // request lines sent, in order
  std::optional<schema::RecordSet> records;
  std::optional<classad::ClassAd> ad;       // present iff status is ok
};

struct RankedEntry {
  std::size_t candidate;  // index into SelectionResult::candidates
  classad::MatchResult match;
  double rank;
};

struct Exclusion {
  std::size_t candidate;
  std::string reason;
};

struct PhaseTimings {
  Millis search{0};
  Millis match{0};
  Millis access{0};
};

struct SelectionResult {
  std::string logical;
  std::vector<CandidateInfo> candidates;  // catalog order
  std::vector<RankedEntry> ranked;        // best first
  std::vector<Exclusion> excluded;        // catalog order
  PhaseTimings timings;

  /// Head of the ranking.
  std::optional<catalog::ReplicaLocation> chosen() const;
};

// ---------------------------------------------------------------------------
// Access
// ---------------------------------------------------------------------------

struct TransferResult {
  double bytes = 0;
  double seconds = 0;
};

/// Moves the file from a replica. Throws std::runtime_error on failure.
class TransferAgent {
 public:
  virtual ~TransferAgent() = default;
  virtual TransferResult fetch(const catalog::ReplicaLocation& replica,
                               std::string_view logical) = 0;
};

/// No data moves: reports `bytes` at the host's configured bandwidth.
class SimulatedTransfer : public TransferAgent {
 public:
  explicit SimulatedTransfer(double bytes = 1 << 20, double bandwidth = 76800)
      : bytes_(bytes), bandwidth_(bandwidth) {}

  void fail_host(std::string hostname);
  void set_bandwidth(std::string hostname, double bytes_per_second);

  TransferResult fetch(const catalog::ReplicaLocation& replica, std::string_view logical) override;

  std::vector<catalog::ReplicaLocation> attempts() const;

 private:
  double bytes_;
  double bandwidth_;
  mutable std::mutex mu_;
  std::set<std::string> failing_;
  std::map<std::string, double> bandwidths_;
  std::vector<catalog::ReplicaLocation> attempts_;
};

struct TransferOutcome {
  catalog::ReplicaLocation replica;
  std::size_t position = 0;  // index in the ranking
  TransferResult result;
  /// Earlier attempts that failed.
  std::vector<std::pair<catalog::ReplicaLocation, std::string>> failures;
};

/// No replica could be fetched; lists each attempt's cause.
class AccessError : public std::runtime_error {
 public:
  AccessError(std::string message,
              std::vector<std::pair<catalog::ReplicaLocation, std::string>> failures);
  const std::vector<std::pair<catalog::ReplicaLocation, std::string>>& failures() const {
    return failures_;
  }

 private:
  std::vector<std::pair<catalog::ReplicaLocation, std::string>> failures_;
};

// ---------------------------------------------------------------------------
// Broker
// ---------------------------------------------------------------------------

struct BrokerOptions {
  std::size_t fan_out = 16;
  bool failover = true;
};

struct Selection {
  SelectionResult result;
  std::optional<TransferOutcome> transfer;
  std::string transfer_error;  // set when access was attempted and failed
};

class Broker {
 public:
  Broker(const catalog::Catalog& catalog, NodeTransport& transport, BrokerOptions options = {});

  /// One entry per catalog replica, in catalog order. Failures are recorded
  /// per candidate.
  std::vector<CandidateInfo> search(const BrokerRequest& request) const;

  /// Deterministic given the candidates.
  SelectionResult match(const BrokerRequest& request, std::vector<CandidateInfo> candidates) const;

  /// Throws AccessError ("no matching replica" without a ranking).
  TransferOutcome access(const BrokerRequest& request, const SelectionResult& result,
                         TransferAgent& agent) const;

  /// All three phases; access is skipped without an agent.
  Selection select(const BrokerRequest& request, TransferAgent* agent = nullptr) const;

  /// Fetches and converts one replica's records.
  CandidateInfo fetch(const BrokerRequest& request, const catalog::ReplicaLocation& loc) const;

 private:
  const catalog::Catalog& catalog_;
  NodeTransport& transport_;
  BrokerOptions options_;
};

/// JSON rendering of a selection, field for field.
std::string to_json(const Selection& selection);

}  // namespace gridsel::broker

#endif  // GRIDSEL_BROKER_HPP
