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

#ifndef GRIDSEL_SIM_HPP
#define GRIDSEL_SIM_HPP

// Scenario harness: materializes storage nodes, runs broker selections
// against them and checks every choice against a brute-force oracle.
//
// Scenario file: `key = value` lines under section headers, `#` comment
// lines. `sample` (direction, peer, bytes/sec) and `ad` repeat; ad lines are
// joined with newlines. `fault` is none, timeout, refused or garbage;
// `expect` is a hostname or none. Timeouts are in seconds.
//
//   seed = 42
//   timeout = 2
//
//   [node]
//   hostname = hugo.mcs.anl.gov
//   volume = /dev/sandbox
//   totalSpace = 100G
//   availableSpace = 50G
//   policy = other.reqdSpace < 10G && other.reqdRDBandwidth < 75K/Sec
//   sample = read gsiftp://comet.xyz.com/data 76800
//   load = 0
//   fault = none
//
//   [replica]
//   logical = lfn://higgs
//   hostname = hugo.mcs.anl.gov
//   path = /dev/sandbox/higgs.dat
//
//   [request]
//   logical = lfn://higgs
//   expect = hugo.mcs.anl.gov
//   ad = hostname = "comet.xyz.com"; reqdSpace = 5G; reqdRDBandwidth = 50K/Sec;
//   ad = rank = other.availableSpace;
//   ad = requirement = other.availableSpace > 5G && other.MaxRDBandwidth > 50K/Sec;

#include <chrono>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "gridsel/classad.hpp"
#include "gridsel/history.hpp"

namespace gridsel::sim {

using Millis = std::chrono::milliseconds;

class ScenarioError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class NodeFault { kNone, kTimeout, kRefused, kGarbage };

std::string_view to_string(NodeFault f);

/// One seeded history entry: `bandwidth` bytes moved in one second.
struct Sample {
  history::Direction direction = history::Direction::kRead;
  std::string peer;
  double bandwidth = 0;

  friend bool operator==(const Sample&, const Sample&) = default;
};

struct NodeSpec {
  std::string hostname;
  std::string volume = "/dev/sandbox";
  // Quantity text as it would appear in a node config.
  std::string total_space = "100G";
  std::string available_space = "50G";
  std::string disk_transfer_rate = "40M";
  std::string drd_time = "0.008";
  std::string dwr_time = "0.009";
  std::string policy;  // empty: accepts everyone
  std::vector<Sample> samples;
  std::int64_t load = 0;
  NodeFault fault = NodeFault::kNone;

  friend bool operator==(const NodeSpec&, const NodeSpec&) = default;
};

struct ReplicaSpec {
  std::string logical;
  std::string hostname;
  std::string path;

  friend bool operator==(const ReplicaSpec&, const ReplicaSpec&) = default;
};

struct RequestSpec {
  std::string logical;
  std::string ad;                      // ClassAd text
  std::optional<std::string> expect;   // hostname, or "none"

  friend bool operator==(const RequestSpec&, const RequestSpec&) = default;
};

struct Scenario {
  std::uint64_t seed = 0;
  Millis timeout{2000};
  std::vector<NodeSpec> nodes;
  std::vector<ReplicaSpec> replicas;
  std::vector<RequestSpec> requests;

  /// Empty when the scenario can run: unique hostnames, replicas on known
  /// nodes, parseable ads and quantities, nodes whose records validate.
  std::vector<std::string> problems() const;

  friend bool operator==(const Scenario&, const Scenario&) = default;
};

/// Throws ScenarioError naming the line.
Scenario parse_scenario(std::string_view text);
Scenario load_scenario(const std::string& path);
std::string format_scenario(const Scenario& s);

struct RandomOptions {
  std::size_t nodes = 10;
  std::size_t requests = 100;
  std::size_t files = 5;
  double failure_rate = 0.1;
  Millis timeout{2000};
};

/// Same seed and options, same scenario.
Scenario random_scenario(std::uint64_t seed, const RandomOptions& options = {});

/// hugo publishing its volume, comet asking for a replica on it.
Scenario reference_scenario();

// ---------------------------------------------------------------------------
// Oracle
// ---------------------------------------------------------------------------

/// The ad a node's full record would produce for a requester, built
/// straight from the NodeSpec fields.
classad::ClassAd oracle_ad(const NodeSpec& node, std::string_view requester_host);

/// Index of the best candidate: both requirements true, highest rank, then
/// hostname (case-insensitive), then volume, then list position.
std::optional<std::size_t> oracle(const classad::ClassAd& request,
                                  std::span<const classad::ClassAd> candidates);

// ---------------------------------------------------------------------------
// Runs
// ---------------------------------------------------------------------------

struct RunOptions {
  bool wire = false;  // localhost TCP instead of direct calls
  bool access = true;
  std::size_t fan_out = 16;
};

struct RequestReport {
  std::size_t index = 0;
  std::string logical;
  std::optional<std::string> chosen;  // hostname:path
  std::optional<std::string> oracle;  // hostname:path
  bool agrees = false;
  bool expectation_met = true;
  Millis elapsed{0};
  std::optional<double> transfer_seconds;
  std::string transfer_error;
  std::vector<std::string> excluded;  // "host: reason"
};

struct Report {
  std::vector<RequestReport> requests;
  Millis elapsed{0};

  std::size_t mismatches() const;
  std::size_t expectation_failures() const;
  bool ok() const { return mismatches() == 0 && expectation_failures() == 0; }
};

/// Throws ScenarioError when problems() is nonempty, net::NetError when
/// wire mode cannot bind.
Report run(const Scenario& scenario, const RunOptions& options = {});

std::string format_report(const Report& report);

}  // namespace gridsel::sim

#endif  // GRIDSEL_SIM_HPP
