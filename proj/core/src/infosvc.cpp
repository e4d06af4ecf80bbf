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

#include "gridsel/infosvc.hpp"

#include <sys/wait.h>

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "gridsel/classad.hpp"
#include "gridsel/text.hpp"

namespace gridsel::infosvc {

namespace {

constexpr std::string_view kNumericAttributes[] = {
    "totalspace", "availablespace", "disktransferrate", "drdtime", "dwrtime"};
constexpr std::string_view kTextAttributes[] = {"mountpoint", "requirements"};
constexpr std::string_view kMandatory[] = {"totalspace", "availablespace", "mountpoint",
                                           "disktransferrate", "drdtime", "dwrtime"};
constexpr std::size_t kNodeScope = static_cast<std::size_t>(-1);

template <std::size_t N>
bool contains(const std::string_view (&list)[N], std::string_view s) {
  return std::find(std::begin(list), std::end(list), s) != std::end(list);
}

bool is_numeric(std::string_view attr) { return contains(kNumericAttributes, attr); }

bool is_attribute_name(std::string_view s) {
  if (s.empty() || !std::isalpha(static_cast<unsigned char>(s[0]))) return false;
  return std::all_of(s.begin(), s.end(), [](char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-';
  });
}

bool is_host_token(std::string_view s) {
  if (s.empty()) return false;
  return std::all_of(s.begin(), s.end(), [](char c) {
    return static_cast<unsigned char>(c) > 0x20 && c != 0x7f && c != ',';
  });
}

// Throws std::invalid_argument when `value` is not acceptable for `attr`.
void check_value(std::string_view attr, std::string_view value) {
  if (is_numeric(attr)) {
    double v = 0;
    try {
      v = classad::parse_quantity(value);
    } catch (const classad::ParseError& e) {
      throw std::invalid_argument("'" + std::string(value) + "' is not a quantity: " + e.what());
    }
    if (!std::isfinite(v)) throw std::invalid_argument("quantity out of range");
  } else if (attr == "requirements") {
    try {
      classad::parse_expression(value);
    } catch (const classad::ParseError& e) {
      throw std::invalid_argument(std::string("bad policy expression: ") + e.what());
    }
  } else if (value.empty()) {
    throw std::invalid_argument("empty value");
  }
}

std::string produce(const AttributeSource& src) {
  switch (src.kind) {
    case AttributeSource::Kind::kFixed: return src.text;
    case AttributeSource::Kind::kCommand: return run_command(src.text);
    case AttributeSource::Kind::kFunction: return std::string(trim(src.function()));
  }
  return src.text;
}

std::vector<std::string_view> words(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
    const std::size_t start = i;
    while (i < line.size() && line[i] != ' ' && line[i] != '\t') ++i;
    if (i > start) out.push_back(line.substr(start, i - start));
  }
  return out;
}

}  // namespace

// ---------------------------------------------------------------------------
// Attribute sources
// ---------------------------------------------------------------------------

AttributeSource AttributeSource::fixed(std::string value) {
  return {Kind::kFixed, std::move(value), {}};
}

AttributeSource AttributeSource::command(std::string command_line) {
  return {Kind::kCommand, std::move(command_line), {}};
}

AttributeSource AttributeSource::simulated(std::function<std::string()> fn) {
  return {Kind::kFunction, {}, std::move(fn)};
}

std::string run_command(const std::string& command_line) {
  std::FILE* pipe = ::popen(command_line.c_str(), "r");
  if (pipe == nullptr) throw std::runtime_error("cannot run '" + command_line + "'");
  std::string out;
  char buf[4096];
  std::size_t n = 0;
  while ((n = std::fread(buf, 1, sizeof(buf), pipe)) > 0) out.append(buf, n);
  const int status = ::pclose(pipe);
  if (status == -1 || !WIFEXITED(status) || WEXITSTATUS(status) != 0) {
    throw std::runtime_error("'" + command_line + "' failed");
  }
  const std::string_view first = trim(std::string_view(out).substr(0, out.find('\n')));
  if (first.empty()) throw std::runtime_error("'" + command_line + "' printed nothing");
  return std::string(first);
}

// ---------------------------------------------------------------------------
// Configuration
// ---------------------------------------------------------------------------

std::vector<std::string> NodeConfig::problems() const {
  std::vector<std::string> out;
  if (hostname.empty()) out.push_back("hostname not set");
  if (volumes.empty()) out.push_back("no volumes configured");
  for (const auto& v : volumes) {
    for (std::string_view attr : kMandatory) {
      const std::string key(attr);
      if (!v.attributes.contains(key) && !attributes.contains(key)) {
        out.push_back("volume " + v.volume + ": no value or provider for " + key);
      }
    }
  }
  return out;
}

NodeConfig parse_config(std::string_view text) {
  NodeConfig cfg;
  std::set<std::string> node_keys_seen;
  std::set<std::string> volume_keys_seen;
  std::size_t line_no = 0;
  for (std::string_view line : split(text, '\n')) {
    ++line_no;
    const auto fail = [line_no](const std::string& what) {
      throw ConfigError("config line " + std::to_string(line_no) + ": " + what);
    };
    line = trim(line);
    if (line.empty() || line.front() == '#') continue;
    const std::size_t eq = line.find('=');
    if (eq == std::string_view::npos) fail("expected 'key = value'");
    const std::string key = to_lower(trim(line.substr(0, eq)));
    const std::string value(trim(line.substr(eq + 1)));

    if (key == "volume") {
      if (value.empty()) fail("empty volume name");
      for (const auto& v : cfg.volumes) {
        if (v.volume == value) fail("volume " + value + " configured twice");
      }
      cfg.volumes.push_back({value, {}});
      volume_keys_seen.clear();
      continue;
    }
    if (key == "filesystem") {
      if (value.empty()) fail("empty filesystem");
      cfg.filesystem.push_back(value);
      continue;
    }
    const bool node_only = key == "hostname" || key == "listen" || key == "ou" || key == "o" ||
                           key == "staleness" || key == "history";
    const bool attribute = is_numeric(key) || contains(kTextAttributes, key);
    if (!node_only && !attribute) fail("unknown key '" + key + "'");

    const bool in_volume = attribute && !cfg.volumes.empty();
    auto& seen = in_volume ? volume_keys_seen : node_keys_seen;
    if (!seen.insert(key).second) fail("'" + key + "' set twice");

    if (key == "hostname") {
      if (!is_host_token(value)) fail("bad hostname");
      cfg.hostname = value;
    } else if (key == "listen") {
      const std::size_t colon = value.rfind(':');
      unsigned port = 0;
      const char* end = value.data() + value.size();
      if (colon == std::string::npos ||
          std::from_chars(value.data() + colon + 1, end, port).ptr != end || port > 65535) {
        fail("listen must be host:port");
      }
      cfg.listen_host = value.substr(0, colon);
      cfg.listen_port = static_cast<std::uint16_t>(port);
    } else if (key == "ou") {
      cfg.unit = value;
    } else if (key == "o") {
      cfg.organization = value;
    } else if (key == "staleness") {
      const auto s = parse_double(value);
      if (!s || *s < 0) fail("staleness must be a nonnegative number of seconds");
      cfg.staleness = std::chrono::milliseconds(static_cast<std::int64_t>(std::llround(*s * 1000)));
    } else if (key == "history") {
      if (value.empty()) fail("empty history path");
      cfg.history_log = value;
    } else {
      AttributeSource src;
      if (value.rfind("exec:", 0) == 0) {
        const std::string cmd(trim(std::string_view(value).substr(5)));
        if (cmd.empty()) fail("empty command for " + key);
        src = AttributeSource::command(cmd);
      } else {
        try {
          check_value(key, value);
        } catch (const std::invalid_argument& e) {
          fail(key + ": " + e.what());
        }
        src = AttributeSource::fixed(value);
      }
      (in_volume ? cfg.volumes.back().attributes : cfg.attributes)[key] = std::move(src);
    }
  }
  return cfg;
}

NodeConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

// ---------------------------------------------------------------------------
// Protocol
// ---------------------------------------------------------------------------

std::string format_request(const QueryRequest& q) {
  std::string out = "QUERY ";
  if (q.all) {
    out += '*';
  } else {
    if (q.attributes.empty()) throw std::invalid_argument("no attributes requested");
    for (std::size_t i = 0; i < q.attributes.size(); ++i) {
      if (!is_attribute_name(q.attributes[i])) {
        throw std::invalid_argument("bad attribute name '" + q.attributes[i] + "'");
      }
      if (i > 0) out += ',';
      out += q.attributes[i];
    }
  }
  if (!q.from.empty()) {
    if (!is_host_token(q.from)) throw std::invalid_argument("bad hostname '" + q.from + "'");
    out += " FROM ";
    out += q.from;
  }
  out += '\n';
  return out;
}

QueryRequest parse_request(std::string_view line) {
  if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
  const auto w = words(line);
  if (w.empty()) throw ProtocolError("empty request");
  if (w[0] != "QUERY") throw ProtocolError("unknown verb");
  if (w.size() < 2) throw ProtocolError("missing attribute list");
  QueryRequest q;
  if (w[1] == "*") {
    q.all = true;
  } else {
    for (std::string_view a : split(w[1], ',')) {
      if (!is_attribute_name(a)) throw ProtocolError("bad attribute name");
      q.attributes.emplace_back(a);
    }
  }
  if (w.size() == 2) return q;
  if (w.size() != 4 || w[2] != "FROM") throw ProtocolError("malformed request");
  if (!is_host_token(w[3])) throw ProtocolError("bad hostname");
  q.from = std::string(w[3]);
  return q;
}

std::string response_body(std::string_view response) {
  if (response.rfind("ERR", 0) == 0) {
    std::string_view reason = response.substr(3);
    reason = trim(reason.substr(0, reason.find('\n')));
    throw ProtocolError(reason.empty() ? "unspecified error" : std::string(reason));
  }
  constexpr std::string_view kOk = "OK\n";
  if (!response.ends_with(kOk)) throw ProtocolError("response not terminated by OK");
  const std::string_view body = response.substr(0, response.size() - kOk.size());
  if (!body.empty() && !body.ends_with("\n\n")) throw ProtocolError("garbled response");
  return std::string(body);
}

std::string filter_ldif(std::string_view ldif, const std::vector<std::string>& attributes) {
  std::set<std::string, std::less<>> wanted;
  for (const auto& a : attributes) wanted.insert(to_lower(a));
  std::string out;
  std::size_t pos = 0;
  while (pos < ldif.size()) {
    std::size_t nl = ldif.find('\n', pos);
    const bool terminated = nl != std::string_view::npos;
    if (!terminated) nl = ldif.size();
    const std::string_view line = ldif.substr(pos, nl - pos);
    pos = nl + 1;
    bool keep = line.empty();
    if (!keep) {
      const std::string name = to_lower(line.substr(0, line.find(':')));
      keep = name == "dn" || name == "objectclass" || wanted.contains(name);
    }
    if (keep) {
      out += line;
      if (terminated) out += '\n';
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Service
// ---------------------------------------------------------------------------

InfoService::InfoService(NodeConfig config, std::shared_ptr<history::HistoryStore> history,
                         std::function<Clock::time_point()> clock)
    : config_(std::move(config)),
      history_(history ? std::move(history) : std::make_shared<history::HistoryStore>()),
      clock_(std::move(clock)) {
  if (auto p = config_.problems(); !p.empty()) {
    std::string msg = "invalid node config";
    for (const auto& s : p) msg += "; " + s;
    throw ConfigError(msg);
  }
  if (config_.history_log) {
    try {
      history_->load_file(*config_.history_log);
    } catch (const std::invalid_argument& e) {
      throw ConfigError(std::string("history log: ") + e.what());
    }
  }
  for (const auto& [attr, src] : config_.attributes) {
    if (src.dynamic()) slots_[{kNodeScope, attr}] = std::make_unique<Slot>();
  }
  for (std::size_t i = 0; i < config_.volumes.size(); ++i) {
    for (const auto& [attr, src] : config_.volumes[i].attributes) {
      if (src.dynamic()) slots_[{i, attr}] = std::make_unique<Slot>();
    }
  }
}

std::optional<std::string> InfoService::value_of(std::size_t volume, const std::string& attr) {
  const auto& vol_attrs = config_.volumes[volume].attributes;
  std::size_t scope = volume;
  auto it = vol_attrs.find(attr);
  if (it == vol_attrs.end()) {
    it = config_.attributes.find(attr);
    if (it == config_.attributes.end()) return std::nullopt;
    scope = kNodeScope;
  }
  const AttributeSource& src = it->second;
  if (!src.dynamic()) return src.text;

  Slot& slot = *slots_.at({scope, attr});
  std::lock_guard lock(slot.mu);
  const auto now = clock_();
  if (!slot.value || now - slot.fetched > config_.staleness) {
    try {
      std::string v = produce(src);
      check_value(attr, v);
      slot.value = std::move(v);
      slot.fetched = now;
      slot.stale = false;
    } catch (const std::exception&) {
      slot.stale = slot.value.has_value();
    }
  }
  return slot.value;
}

std::vector<schema::RecordSet> InfoService::collect(std::string_view requester_host) {
  const auto bandwidth = history_->bandwidth_record();
  auto sources = history_->source_records();
  if (!requester_host.empty()) {
    std::erase_if(sources, [&](const schema::SourceBandwidthRecord& s) {
      return !iequals(host_of(s.source_url), requester_host);
    });
  }
  std::vector<schema::RecordSet> out;
  for (std::size_t i = 0; i < config_.volumes.size(); ++i) {
    schema::VolumeRecord r;
    r.hostname = config_.hostname;
    r.volume = config_.volumes[i].volume;
    const auto number = [&](const char* attr) -> std::optional<double> {
      auto v = value_of(i, attr);
      if (!v) return std::nullopt;
      return classad::parse_quantity(*v);
    };
    r.total_space = number("totalspace");
    r.available_space = number("availablespace");
    r.mount_point = value_of(i, "mountpoint");
    r.disk_transfer_rate = number("disktransferrate");
    r.drd_time = number("drdtime");
    r.dwr_time = number("dwrtime");
    r.requirements = value_of(i, "requirements");
    r.filesystem = config_.filesystem;
    out.push_back({schema::volume_dn(r.volume, r.hostname, config_.unit, config_.organization),
                   std::move(r), bandwidth, sources});
  }
  return out;
}

std::string InfoService::render(std::string_view requester_host) {
  std::string out;
  for (const auto& set : collect(requester_host)) {
    out += schema::render(schema::to_entry(set.volume, set.dn));
    const auto bw_dn = schema::bandwidth_dn(set.dn);
    if (set.bandwidth) out += schema::render(schema::to_entry(*set.bandwidth, bw_dn));
    for (const auto& s : set.sources) {
      out += schema::render(schema::to_entry(s, schema::source_dn(bw_dn, s.source_url)));
    }
  }
  return out;
}

std::string InfoService::handle_query(std::string_view request_line) {
  QueryRequest q;
  try {
    q = parse_request(request_line);
  } catch (const ProtocolError& e) {
    return std::string("ERR ") + e.what() + "\n";
  }
  try {
    std::string body = render(q.from);
    if (!q.all) body = filter_ldif(body, q.attributes);
    ++served_;
    return body + "OK\n";
  } catch (const std::exception& e) {
    std::string why = e.what();
    std::replace(why.begin(), why.end(), '\n', ' ');
    return "ERR internal error: " + why + "\n";
  }
}

std::vector<std::string> InfoService::stale_attributes() const {
  std::vector<std::string> out;
  for (const auto& [key, slot] : slots_) {
    std::lock_guard lock(slot->mu);
    if (!slot->stale) continue;
    const std::string scope = key.first == kNodeScope ? "*" : config_.volumes[key.first].volume;
    out.push_back(scope + "/" + key.second);
  }
  return out;
}

}  // namespace gridsel::infosvc
