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

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <random>
#include <set>
#include <sstream>

#include "gridsel/catalog.hpp"
#include "gridsel/schema.hpp"
#include "gridsel/sim.hpp"
#include "gridsel/text.hpp"

namespace gridsel::sim {

namespace {

std::optional<NodeFault> parse_fault(std::string_view s) {
  const std::string f = to_lower(s);
  if (f == "none") return NodeFault::kNone;
  if (f == "timeout") return NodeFault::kTimeout;
  if (f == "refused") return NodeFault::kRefused;
  if (f == "garbage") return NodeFault::kGarbage;
  return std::nullopt;
}

std::optional<std::int64_t> parse_int(std::string_view s) {
  std::int64_t v = 0;
  const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size()) return std::nullopt;
  return v;
}

std::vector<std::string_view> words(std::string_view s) {
  std::vector<std::string_view> out;
  for (std::string_view w : split(s, ' ')) {
    if (!trim(w).empty()) out.push_back(trim(w));
  }
  return out;
}

}  // namespace

std::string_view to_string(NodeFault f) {
  switch (f) {
    case NodeFault::kNone: return "none";
    case NodeFault::kTimeout: return "timeout";
    case NodeFault::kRefused: return "refused";
    case NodeFault::kGarbage: return "garbage";
  }
  return "none";
}

// ---------------------------------------------------------------------------
// Validation
// ---------------------------------------------------------------------------

std::vector<std::string> Scenario::problems() const {
  std::vector<std::string> out;
  if (timeout <= Millis::zero()) out.push_back("timeout must be positive");
  std::set<std::string> hosts;
  for (const auto& n : nodes) {
    const std::string where = "node " + n.hostname + ": ";
    if (n.hostname.empty()) out.push_back("node without hostname");
    if (!hosts.insert(to_lower(n.hostname)).second) out.push_back(where + "listed twice");
    schema::VolumeRecord r;
    r.hostname = n.hostname;
    r.volume = n.volume;
    r.mount_point = n.volume;
    const auto q = [&](const std::string& text, const char* what) -> std::optional<double> {
      try {
        return classad::parse_quantity(text);
      } catch (const classad::ParseError& e) {
        out.push_back(where + what + ": " + e.what());
        return std::nullopt;
      }
    };
    r.total_space = q(n.total_space, "totalSpace");
    r.available_space = q(n.available_space, "availableSpace");
    r.disk_transfer_rate = q(n.disk_transfer_rate, "diskTransferRate");
    r.drd_time = q(n.drd_time, "drdTime");
    r.dwr_time = q(n.dwr_time, "dwrTime");
    if (!n.policy.empty()) r.requirements = n.policy;
    if (r.total_space && r.available_space && r.disk_transfer_rate && r.drd_time && r.dwr_time) {
      for (const auto& v : schema::validate(r)) out.push_back(where + v.attribute + ": " + v.reason);
    }
    for (const auto& s : n.samples) {
      if (auto why = history::check({s.direction, s.peer, s.bandwidth, 1, 1})) {
        out.push_back(where + "sample: " + *why);
      }
    }
    if (n.load < 0) out.push_back(where + "load must be nonnegative");
  }
  for (const auto& r : replicas) {
    if (!hosts.contains(to_lower(r.hostname))) {
      out.push_back("replica of " + r.logical + " on unknown node " + r.hostname);
    }
    if (auto why = catalog::check(r.logical, {r.hostname, {"127.0.0.1", 1}, r.path, ""})) {
      out.push_back("replica of " + r.logical + ": " + *why);
    }
  }
  for (std::size_t i = 0; i < requests.size(); ++i) {
    const std::string where = "request " + std::to_string(i + 1) + ": ";
    if (requests[i].logical.empty()) out.push_back(where + "no logical file");
    try {
      classad::parse_classad(requests[i].ad);
    } catch (const classad::ParseError& e) {
      out.push_back(where + e.what());
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Text form
// ---------------------------------------------------------------------------

Scenario parse_scenario(std::string_view text) {
  Scenario s;
  enum class Section { kTop, kNode, kReplica, kRequest } section = Section::kTop;
  std::set<std::string> seen;  // singular keys in the current section
  std::size_t line_no = 0;
  for (std::string_view line : split(text, '\n')) {
    ++line_no;
    const auto fail = [line_no](const std::string& what) {
      throw ScenarioError("scenario line " + std::to_string(line_no) + ": " + what);
    };
    line = trim(line);
    if (line.empty() || line.front() == '#') continue;
    if (line.front() == '[') {
      const std::string name = to_lower(line);
      if (name == "[node]") {
        section = Section::kNode;
        s.nodes.emplace_back();
      } else if (name == "[replica]") {
        section = Section::kReplica;
        s.replicas.emplace_back();
      } else if (name == "[request]") {
        section = Section::kRequest;
        s.requests.emplace_back();
      } else {
        fail("unknown section " + std::string(line));
      }
      seen.clear();
      continue;
    }
    const std::size_t eq = line.find('=');
    if (eq == std::string_view::npos) fail("expected 'key = value'");
    const std::string key = to_lower(trim(line.substr(0, eq)));
    const std::string value(trim(line.substr(eq + 1)));
    const bool repeatable = key == "sample" || key == "ad";
    if (!repeatable && !seen.insert(key).second) fail("'" + key + "' set twice");

    switch (section) {
      case Section::kTop:
        if (key == "seed") {
          const auto v = parse_int(value);
          if (!v || *v < 0) fail("seed must be a nonnegative integer");
          s.seed = static_cast<std::uint64_t>(*v);
        } else if (key == "timeout") {
          const auto v = parse_double(value);
          if (!v || !(*v > 0)) fail("timeout must be a positive number of seconds");
          s.timeout = Millis(std::llround(*v * 1000));
        } else {
          fail("unknown key '" + key + "'");
        }
        break;
      case Section::kNode: {
        NodeSpec& n = s.nodes.back();
        if (key == "hostname") n.hostname = value;
        else if (key == "volume") n.volume = value;
        else if (key == "totalspace") n.total_space = value;
        else if (key == "availablespace") n.available_space = value;
        else if (key == "disktransferrate") n.disk_transfer_rate = value;
        else if (key == "drdtime") n.drd_time = value;
        else if (key == "dwrtime") n.dwr_time = value;
        else if (key == "policy") n.policy = value;
        else if (key == "load") {
          const auto v = parse_int(value);
          if (!v) fail("load must be an integer");
          n.load = *v;
        } else if (key == "fault") {
          const auto f = parse_fault(value);
          if (!f) fail("fault must be none, timeout, refused or garbage");
          n.fault = *f;
        } else if (key == "sample") {
          const auto w = words(value);
          if (w.size() != 3) fail("sample must be '<read|write> <peer> <bytes/sec>'");
          const auto dir = history::parse_direction(w[0]);
          const auto bw = parse_double(w[2]);
          if (!dir || !bw) fail("sample must be '<read|write> <peer> <bytes/sec>'");
          n.samples.push_back({*dir, std::string(w[1]), *bw});
        } else {
          fail("unknown node key '" + key + "'");
        }
        break;
      }
      case Section::kReplica: {
        ReplicaSpec& r = s.replicas.back();
        if (key == "logical") r.logical = value;
        else if (key == "hostname") r.hostname = value;
        else if (key == "path") r.path = value;
        else fail("unknown replica key '" + key + "'");
        break;
      }
      case Section::kRequest: {
        RequestSpec& r = s.requests.back();
        if (key == "logical") {
          r.logical = value;
        } else if (key == "expect") {
          r.expect = value;
        } else if (key == "ad") {
          if (!r.ad.empty()) r.ad += '\n';
          r.ad += value;
        } else {
          fail("unknown request key '" + key + "'");
        }
        break;
      }
    }
  }
  return s;
}

Scenario load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ScenarioError("cannot open scenario '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_scenario(buf.str());
}

std::string format_scenario(const Scenario& s) {
  std::ostringstream out;
  out << "seed = " << s.seed << "\n";
  out << "timeout = " << format_shortest(static_cast<double>(s.timeout.count()) / 1000) << "\n";
  for (const auto& n : s.nodes) {
    out << "\n[node]\n"
        << "hostname = " << n.hostname << "\n"
        << "volume = " << n.volume << "\n"
        << "totalSpace = " << n.total_space << "\n"
        << "availableSpace = " << n.available_space << "\n"
        << "diskTransferRate = " << n.disk_transfer_rate << "\n"
        << "drdTime = " << n.drd_time << "\n"
        << "dwrTime = " << n.dwr_time << "\n";
    if (!n.policy.empty()) out << "policy = " << n.policy << "\n";
    for (const auto& smp : n.samples) {
      out << "sample = " << history::to_string(smp.direction) << " " << smp.peer << " "
          << format_shortest(smp.bandwidth) << "\n";
    }
    out << "load = " << n.load << "\n"
        << "fault = " << to_string(n.fault) << "\n";
  }
  for (const auto& r : s.replicas) {
    out << "\n[replica]\n"
        << "logical = " << r.logical << "\n"
        << "hostname = " << r.hostname << "\n"
        << "path = " << r.path << "\n";
  }
  for (const auto& r : s.requests) {
    out << "\n[request]\n"
        << "logical = " << r.logical << "\n";
    if (r.expect) out << "expect = " << *r.expect << "\n";
    for (std::string_view l : split(r.ad, '\n')) out << "ad = " << l << "\n";
  }
  return out.str();
}

// ---------------------------------------------------------------------------
// Generated scenarios
// ---------------------------------------------------------------------------

Scenario reference_scenario() {
  Scenario s;
  NodeSpec hugo;
  hugo.hostname = "hugo.mcs.anl.gov";
  hugo.volume = "/dev/sandbox";
  hugo.total_space = "100G";
  hugo.available_space = "50G";
  hugo.policy = "other.reqdSpace < 10G && other.reqdRDBandwidth < 75K/Sec";
  hugo.samples.push_back({history::Direction::kRead, "gsiftp://comet.xyz.com/data", 76800});
  s.nodes.push_back(hugo);
  s.replicas.push_back({"lfn://higgs", hugo.hostname, "/dev/sandbox/higgs.dat"});
  s.requests.push_back({"lfn://higgs",
                        "hostname = \"comet.xyz.com\";\n"
                        "reqdSpace = 5G;\n"
                        "reqdRDBandwidth = 50K/Sec;\n"
                        "rank = other.availableSpace;\n"
                        "requirement = other.availableSpace > 5G && other.MaxRDBandwidth > 50K/Sec;",
                        hugo.hostname});
  return s;
}

Scenario random_scenario(std::uint64_t seed, const RandomOptions& options) {
  std::mt19937_64 rng(seed);
  const auto uniform = [&rng](std::int64_t lo, std::int64_t hi) {
    return std::uniform_int_distribution<std::int64_t>(lo, hi)(rng);
  };
  const auto chance = [&rng](double p) { return std::bernoulli_distribution(p)(rng); };
  const auto pick = [&](const auto& list) { return list[uniform(0, std::size(list) - 1)]; };
  constexpr std::int64_t kGiB = std::int64_t{1} << 30;
  constexpr int kClients = 4;
  const auto client = [](std::int64_t k) { return "client" + std::to_string(k) + ".org"; };

  Scenario s;
  s.seed = seed;
  s.timeout = options.timeout;

  for (std::size_t i = 0; i < options.nodes; ++i) {
    NodeSpec n;
    n.hostname = "node" + std::to_string(i) + ".grid.org";
    const std::int64_t available = uniform(kGiB, 200 * kGiB);
    n.available_space = std::to_string(available);
    n.total_space = std::to_string(available + uniform(0, 100 * kGiB));
    switch (uniform(0, 5)) {
      case 0: break;
      case 1: n.policy = "other.reqdSpace < " + std::to_string(uniform(1, 60)) + "G"; break;
      case 2:
        n.policy = "other.reqdSpace < " + std::to_string(uniform(1, 60)) +
                   "G && other.reqdRDBandwidth < " + std::to_string(uniform(20, 160)) + "K/Sec";
        break;
      case 3: n.policy = "other.reqdSpace < availableSpace"; break;
      case 4: n.policy = "other.reqdRDBandwidth <= MaxRDBandwidth || totalSpace > 150G"; break;
      default: n.policy = "other.hostname != \"" + client(uniform(0, kClients - 1)) + "\""; break;
    }
    const std::int64_t samples = uniform(0, 6);
    for (std::int64_t k = 0; k < samples; ++k) {
      const auto dir = chance(0.8) ? history::Direction::kRead : history::Direction::kWrite;
      const std::string peer = chance(0.8) ? "gsiftp://" + client(uniform(0, kClients - 1)) + "/d"
                                           : "gsiftp://elsewhere.org/d";
      n.samples.push_back({dir, peer, static_cast<double>(uniform(10, 200) * 1024)});
    }
    n.load = uniform(0, 3);
    if (chance(options.failure_rate)) {
      n.fault = pick(std::array{NodeFault::kTimeout, NodeFault::kRefused, NodeFault::kGarbage});
    }
    s.nodes.push_back(std::move(n));
  }

  const std::size_t files = std::max<std::size_t>(options.files, 1);
  for (std::size_t f = 0; f < files; ++f) {
    const std::string logical = "lfn://file" + std::to_string(f);
    std::vector<std::size_t> holders;
    for (std::size_t i = 0; i < s.nodes.size(); ++i) {
      if (chance(0.5)) holders.push_back(i);
    }
    if (holders.empty() && !s.nodes.empty()) holders.push_back(uniform(0, s.nodes.size() - 1));
    for (std::size_t i : holders) {
      s.replicas.push_back({logical, s.nodes[i].hostname,
                            s.nodes[i].volume + "/file" + std::to_string(f) + ".dat"});
    }
  }

  constexpr const char* kRanks[] = {
      "other.availableSpace",
      "other.MaxRDBandwidth",
      "other.availableSpace * 100 / other.totalSpace",
      "other.lastRDBandwidth",
      "0",
      "other.availableSpace - reqdSpace * 1000",
      "other.AvgRDBandwidth - other.StdDevRDBandwidth",
  };
  constexpr const char* kRequirements[] = {
      "other.availableSpace > reqdSpace",
      "other.availableSpace > reqdSpace && other.MaxRDBandwidth > reqdRDBandwidth",
      "true",
      "other.totalSpace >= 2 * reqdSpace || other.lastRDBandwidth > 50K",
      "other.MinRDBandwidth > 20K || !(other.availableSpace < reqdSpace)",
  };
  for (std::size_t r = 0; r < options.requests; ++r) {
    RequestSpec req;
    req.logical = chance(0.05) ? "lfn://missing"
                               : "lfn://file" + std::to_string(uniform(0, files - 1));
    std::string ad = "hostname = \"" + client(uniform(0, kClients - 1)) + "\";\n";
    ad += "reqdSpace = " + std::to_string(uniform(1, 60)) + "G;\n";
    ad += "reqdRDBandwidth = " + std::to_string(uniform(10, 150)) + "K/Sec;\n";
    if (!chance(0.1)) ad += std::string("rank = ") + pick(kRanks) + ";\n";
    ad += std::string("requirement = ") + pick(kRequirements) + ";";
    req.ad = std::move(ad);
    s.requests.push_back(std::move(req));
  }
  return s;
}

}  // namespace gridsel::sim
