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
#include <cctype>
#include <map>
#include <set>

#include "gridsel/schema.hpp"
#include "gridsel/text.hpp"
#include "schema_names.hpp"

namespace gridsel::schema {

namespace {

void add_number(LdifEntry& e, std::string_view name, const std::optional<double>& v) {
  if (v) e.attributes.emplace_back(std::string(name), format_shortest(*v));
}

void add_text(LdifEntry& e, std::string_view name, std::string_view v) {
  if (!v.empty()) e.attributes.emplace_back(std::string(name), std::string(v));
}

void add_extras(LdifEntry& e, const Extras& extras) {
  for (const auto& [name, values] : extras) {
    for (const auto& v : values) e.attributes.emplace_back(name, v);
  }
}

std::vector<std::string> lineage(std::size_t depth) {
  static constexpr std::string_view kChain[] = {
      kPhysicalResourceClass, kServerVolumeClass, kTransferBandwidthClass,
      kSourceTransferBandwidthClass};
  return {std::begin(kChain), std::begin(kChain) + depth};
}

template <typename Record>
std::string checked_render(const Record& r, const DirectoryName& dn) {
  auto violations = validate(r);
  if (!violations.empty()) throw InvalidRecord(std::move(violations));
  return render(to_entry(r, dn));
}

bool is_attribute_name(std::string_view s) {
  if (s.empty() || !std::isalpha(static_cast<unsigned char>(s[0]))) return false;
  return std::all_of(s.begin(), s.end(), [](char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_' || c == ';';
  });
}

// Collects attribute values for one entry and hands each to its field.
class Decoder {
 public:
  explicit Decoder(const LdifEntry& entry) : entry_(entry) {}

  std::optional<double> number(std::string_view name) {
    const std::string* v = single(name);
    if (v == nullptr) return std::nullopt;
    auto d = parse_double(*v);
    if (!d) {
      throw LdifError("attribute '" + std::string(name) + "': not a number: '" + *v + "'");
    }
    return d;
  }

  std::optional<std::string> text(std::string_view name) {
    const std::string* v = single(name);
    if (v == nullptr) return std::nullopt;
    return *v;
  }

  std::vector<std::string> list(std::string_view name) {
    std::vector<std::string> out;
    for (const auto& [key, value] : entry_.attributes) {
      if (normalize(key) == name) out.push_back(value);
    }
    claimed_.insert(std::string(name));
    return out;
  }

  Extras rest() const {
    Extras out;
    for (const auto& [key, value] : entry_.attributes) {
      std::string n = normalize(key);
      if (!claimed_.contains(n)) out[n].push_back(value);
    }
    return out;
  }

 private:
  static std::string normalize(std::string_view key) {
    std::string n = to_lower(key);
    // Accept a common historical misspelling.
    if (n == "lastrdbandwith") return "lastrdbandwidth";
    if (n == "lastwrbandwith") return "lastwrbandwidth";
    return n;
  }

  const std::string* single(std::string_view name) {
    claimed_.insert(std::string(name));
    const std::string* found = nullptr;
    for (const auto& [key, value] : entry_.attributes) {
      if (normalize(key) != name) continue;
      if (found != nullptr) {
        throw LdifError("attribute '" + std::string(name) + "' repeated in " +
                        entry_.dn.str());
      }
      found = &value;
    }
    return found;
  }

  const LdifEntry& entry_;
  std::set<std::string, std::less<>> claimed_;
};

bool has_class(const LdifEntry& e, std::string_view cls) {
  return std::any_of(e.object_classes.begin(), e.object_classes.end(),
                     [cls](const std::string& c) { return iequals(c, cls); });
}

}  // namespace

std::string render(const LdifEntry& entry) {
  std::string out = "dn: " + entry.dn.str() + "\n";
  for (const auto& c : entry.object_classes) out += "objectclass: " + c + "\n";
  for (const auto& [name, value] : entry.attributes) {
    out += name;
    out += ": ";
    out += value;
    out += '\n';
  }
  out += '\n';
  return out;
}

std::vector<LdifEntry> parse_ldif(std::string_view text) {
  std::vector<LdifEntry> entries;
  std::optional<LdifEntry> current;
  std::size_t line_no = 0;
  const auto fail = [&line_no](const std::string& what) {
    throw LdifError("line " + std::to_string(line_no) + ": " + what);
  };
  const auto finish = [&] {
    if (current) entries.push_back(std::move(*current));
    current.reset();
  };

  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t nl = text.find('\n', pos);
    if (nl == std::string_view::npos) nl = text.size();
    std::string_view line = text.substr(pos, nl - pos);
    pos = nl + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);

    if (line.empty()) {
      finish();
      continue;
    }
    if (line.front() == '#') continue;
    if (line.front() == ' ' || line.front() == '\t') fail("line continuation not supported");

    const std::size_t colon = line.find(':');
    if (colon == std::string_view::npos) fail("expected 'name: value'");
    const std::string_view name = line.substr(0, colon);
    std::string_view value = line.substr(colon + 1);
    if (!value.empty() && (value.front() == ':' || value.front() == '<')) {
      fail("base64 and URL values not supported");
    }
    while (!value.empty() && value.front() == ' ') value.remove_prefix(1);
    if (!is_attribute_name(name)) fail("invalid attribute name '" + std::string(name) + "'");

    if (!current) {
      if (iequals(name, "version") && entries.empty()) continue;
      if (!iequals(name, "dn")) fail("missing dn");
      try {
        current.emplace();
        current->dn = DirectoryName::parse(value);
      } catch (const std::invalid_argument& e) {
        fail(e.what());
      }
      continue;
    }
    if (iequals(name, "dn")) fail("dn inside an entry");
    if (iequals(name, "changetype")) fail("change records not supported");
    if (iequals(name, "objectclass")) {
      current->object_classes.emplace_back(value);
    } else {
      current->attributes.emplace_back(std::string(name), std::string(value));
    }
  }
  finish();
  return entries;
}

LdifEntry to_entry(const VolumeRecord& r, const DirectoryName& dn) {
  LdifEntry e{dn, lineage(2), {}};
  add_text(e, "hostname", r.hostname);
  add_text(e, "volume", r.volume);
  add_number(e, "totalspace", r.total_space);
  add_number(e, "availablespace", r.available_space);
  if (r.mount_point) e.attributes.emplace_back("mountpoint", *r.mount_point);
  add_number(e, "disktransferrate", r.disk_transfer_rate);
  add_number(e, "drdtime", r.drd_time);
  add_number(e, "dwrtime", r.dwr_time);
  if (r.requirements) e.attributes.emplace_back("requirements", *r.requirements);
  for (const auto& fs : r.filesystem) e.attributes.emplace_back("filesystem", fs);
  add_extras(e, r.extras);
  return e;
}

LdifEntry to_entry(const BandwidthRecord& r, const DirectoryName& dn) {
  LdifEntry e{dn, lineage(3), {}};
  add_number(e, "maxrdbandwidth", r.max_rd);
  add_number(e, "minrdbandwidth", r.min_rd);
  add_number(e, "avgrdbandwidth", r.avg_rd);
  add_number(e, "maxwrbandwidth", r.max_wr);
  add_number(e, "minwrbandwidth", r.min_wr);
  add_number(e, "avgwrbandwidth", r.avg_wr);
  add_number(e, "stddevrdbandwidth", r.stddev_rd);
  add_number(e, "stddevwrbandwidth", r.stddev_wr);
  add_extras(e, r.extras);
  return e;
}

LdifEntry to_entry(const SourceBandwidthRecord& r, const DirectoryName& dn) {
  LdifEntry e{dn, lineage(4), {}};
  add_text(e, "sourceurl", r.source_url);
  add_number(e, "lastrdbandwidth", r.last_rd_bandwidth);
  add_text(e, "lastrdurl", r.last_rd_url);
  add_number(e, "lastwrbandwidth", r.last_wr_bandwidth);
  add_text(e, "lastwrurl", r.last_wr_url);
  add_extras(e, r.extras);
  return e;
}

std::string to_ldif(const VolumeRecord& r, const DirectoryName& dn) {
  return checked_render(r, dn);
}
std::string to_ldif(const BandwidthRecord& r, const DirectoryName& dn) {
  return checked_render(r, dn);
}
std::string to_ldif(const SourceBandwidthRecord& r, const DirectoryName& dn) {
  return checked_render(r, dn);
}

LdifRecord decode(const LdifEntry& entry) {
  Decoder d(entry);
  if (has_class(entry, kSourceTransferBandwidthClass)) {
    SourceBandwidthRecord r;
    r.source_url = d.text("sourceurl").value_or("");
    r.last_rd_bandwidth = d.number("lastrdbandwidth");
    r.last_rd_url = d.text("lastrdurl").value_or("");
    r.last_wr_bandwidth = d.number("lastwrbandwidth");
    r.last_wr_url = d.text("lastwrurl").value_or("");
    r.extras = d.rest();
    return {std::move(r), entry.dn};
  }
  if (has_class(entry, kTransferBandwidthClass)) {
    BandwidthRecord r;
    r.max_rd = d.number("maxrdbandwidth");
    r.min_rd = d.number("minrdbandwidth");
    r.avg_rd = d.number("avgrdbandwidth");
    r.max_wr = d.number("maxwrbandwidth");
    r.min_wr = d.number("minwrbandwidth");
    r.avg_wr = d.number("avgwrbandwidth");
    r.stddev_rd = d.number("stddevrdbandwidth");
    r.stddev_wr = d.number("stddevwrbandwidth");
    r.extras = d.rest();
    return {std::move(r), entry.dn};
  }
  if (has_class(entry, kServerVolumeClass)) {
    VolumeRecord r;
    r.hostname = d.text("hostname").value_or("");
    r.volume = d.text("volume").value_or("");
    r.total_space = d.number("totalspace");
    r.available_space = d.number("availablespace");
    r.mount_point = d.text("mountpoint");
    r.disk_transfer_rate = d.number("disktransferrate");
    r.drd_time = d.number("drdtime");
    r.dwr_time = d.number("dwrtime");
    r.requirements = d.text("requirements");
    r.filesystem = d.list("filesystem");
    r.extras = d.rest();
    return {std::move(r), entry.dn};
  }
  throw LdifError("entry " + entry.dn.str() + " has no storage object class");
}

LdifRecord from_ldif(std::string_view text) {
  auto entries = parse_ldif(text);
  if (entries.empty()) throw LdifError("missing dn");
  if (entries.size() > 1) throw LdifError("expected one entry, found " +
                                          std::to_string(entries.size()));
  return decode(entries.front());
}

std::string to_ldif(const RecordSet& set) {
  auto violations = validate(set);
  if (!violations.empty()) throw InvalidRecord(std::move(violations));
  std::string out = render(to_entry(set.volume, set.dn));
  const DirectoryName bw = bandwidth_dn(set.dn);
  if (set.bandwidth) out += render(to_entry(*set.bandwidth, bw));
  for (const auto& s : set.sources) out += render(to_entry(s, source_dn(bw, s.source_url)));
  return out;
}

std::vector<RecordSet> group_record_sets(std::span<const LdifRecord> records) {
  std::vector<RecordSet> sets;
  std::map<std::string, std::size_t> by_volume;
  std::map<std::string, std::size_t> by_bandwidth;
  for (const auto& rec : records) {
    if (const auto* v = std::get_if<VolumeRecord>(&rec.record)) {
      const std::string key = rec.dn.str();
      if (by_volume.contains(key)) throw LdifError("duplicate entry " + key);
      by_volume[key] = sets.size();
      by_bandwidth[bandwidth_dn(rec.dn).str()] = sets.size();
      sets.push_back({rec.dn, *v, std::nullopt, {}});
    }
  }
  const auto owner = [](const std::map<std::string, std::size_t>& index,
                        const DirectoryName& dn) -> std::size_t {
    auto parent = dn.parent();
    const auto it = parent ? index.find(parent->str()) : index.end();
    if (it == index.end()) throw LdifError("entry " + dn.str() + " has no parent volume");
    return it->second;
  };
  for (const auto& rec : records) {
    if (const auto* b = std::get_if<BandwidthRecord>(&rec.record)) {
      auto& set = sets[owner(by_volume, rec.dn)];
      if (set.bandwidth) throw LdifError("duplicate entry " + rec.dn.str());
      set.bandwidth = *b;
    }
  }
  for (const auto& rec : records) {
    if (const auto* s = std::get_if<SourceBandwidthRecord>(&rec.record)) {
      sets[owner(by_bandwidth, rec.dn)].sources.push_back(*s);
    }
  }
  return sets;
}

std::vector<RecordSet> record_sets_from_ldif(std::string_view text) {
  std::vector<LdifRecord> records;
  for (const auto& e : parse_ldif(text)) records.push_back(decode(e));
  return group_record_sets(records);
}

}  // namespace gridsel::schema
