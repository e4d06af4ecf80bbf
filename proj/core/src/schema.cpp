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
#include <cmath>

#include "gridsel/schema.hpp"
#include "gridsel/text.hpp"
#include "schema_names.hpp"

namespace gridsel::schema {

namespace {

bool valid_dn_key(std::string_view key) {
  return key == "gss" || key == "ou" || key == "o";
}

std::string escape_dn_value(std::string_view v) {
  std::string out;
  for (char c : v) {
    if (c == '\\' || c == ',' || c == '=') out += '\\';
    out += c;
  }
  return out;
}

class Checker {
 public:
  void missing(std::string_view attr) {
    out_.push_back({std::string(attr), "mandatory attribute missing", true});
  }
  void invalid(std::string_view attr, std::string reason) {
    out_.push_back({std::string(attr), std::move(reason), false});
  }

  // Text must survive one LDIF line unchanged.
  void text(std::string_view attr, std::string_view v) {
    if (v.find_first_of("\r\n") != std::string_view::npos) {
      invalid(attr, "contains a line break");
    } else if (!v.empty() && (v.front() == ' ' || v.front() == '\t')) {
      invalid(attr, "begins with whitespace");
    }
  }

  void required_text(std::string_view attr, std::string_view v) {
    if (v.empty()) {
      missing(attr);
    } else {
      text(attr, v);
    }
  }

  // Returns false if the value is absent or already reported.
  bool number(std::string_view attr, const std::optional<double>& v,
              bool mandatory) {
    if (!v) {
      if (mandatory) missing(attr);
      return false;
    }
    if (!std::isfinite(*v)) {
      invalid(attr, "not a finite number");
      return false;
    }
    return true;
  }

  void nonnegative(std::string_view attr, const std::optional<double>& v,
                   bool mandatory) {
    if (number(attr, v, mandatory) && *v < 0) invalid(attr, "must be nonnegative");
  }

  // Extras must read back as extras: lowercase LDIF names that do not
  // shadow a schema attribute.
  template <std::size_t N>
  void extras(const Extras& extras, const std::array<std::string_view, N>& known) {
    for (const auto& [name, values] : extras) {
      const bool well_formed =
          !name.empty() && std::islower(static_cast<unsigned char>(name[0])) &&
          std::all_of(name.begin(), name.end(), [](char ch) {
            return std::islower(static_cast<unsigned char>(ch)) ||
                   std::isdigit(static_cast<unsigned char>(ch)) || ch == '-' || ch == '_';
          });
      const auto shadows = [&name](const auto& list) {
        return std::find(list.begin(), list.end(), name) != list.end();
      };
      if (!well_formed) {
        invalid(name, "invalid attribute name");
      } else if (shadows(known) || shadows(names::kStructural) ||
                 name == "lastrdbandwith" || name == "lastwrbandwith") {
        invalid(name, "shadows a schema attribute");
      }
      if (values.empty()) invalid(name, "no values");
      for (const auto& v : values) text(name, v);
    }
  }

  std::vector<Violation> take() { return std::move(out_); }

 private:
  std::vector<Violation> out_;
};

classad::ExprPtr number_literal(double v) {
  // Integral values become Integer literals so "50G" round-trips exactly.
  if (std::trunc(v) == v && std::fabs(v) < 9.2233720368547758e18) {
    return classad::Expr::literal(classad::Value::integer(static_cast<std::int64_t>(v)));
  }
  return classad::Expr::literal(classad::Value::real(v));
}

void put_number(classad::ClassAd& ad, std::string name, const std::optional<double>& v) {
  if (v) ad.set(std::move(name), number_literal(*v));
}

void put_text(classad::ClassAd& ad, std::string name, std::string_view v) {
  if (!v.empty()) {
    ad.set(std::move(name), classad::Expr::literal(classad::Value::text(std::string(v))));
  }
}

}  // namespace

// ---------------------------------------------------------------------------
// DirectoryName
// ---------------------------------------------------------------------------

DirectoryName::DirectoryName(std::vector<Component> components)
    : components_(std::move(components)) {
  if (components_.empty()) throw std::invalid_argument("empty directory name");
  for (auto& [key, value] : components_) {
    key = to_lower(key);
    if (!valid_dn_key(key)) {
      throw std::invalid_argument("invalid directory name key '" + key + "'");
    }
    if (value.empty()) {
      throw std::invalid_argument("empty value for directory name key '" + key + "'");
    }
  }
}

DirectoryName DirectoryName::parse(std::string_view text) {
  std::vector<Component> comps;
  std::string key;
  std::string value;
  bool in_value = false;
  const auto flush = [&] {
    if (!in_value) throw std::invalid_argument("directory name component without '='");
    comps.emplace_back(std::string(trim(key)), value);
    key.clear();
    value.clear();
    in_value = false;
  };
  for (std::size_t i = 0; i < text.size(); ++i) {
    char c = text[i];
    if (c == '\\') {
      if (++i == text.size()) throw std::invalid_argument("dangling escape in directory name");
      c = text[i];
      (in_value ? value : key) += c;
    } else if (c == ',') {
      flush();
    } else if (c == '=' && !in_value) {
      in_value = true;
    } else {
      (in_value ? value : key) += c;
    }
  }
  flush();
  return DirectoryName(std::move(comps));
}

std::string DirectoryName::str() const {
  std::string out;
  for (const auto& [key, value] : components_) {
    if (!out.empty()) out += ',';
    out += key;
    out += '=';
    out += escape_dn_value(value);
  }
  return out;
}

DirectoryName DirectoryName::child(std::string key, std::string value) const {
  std::vector<Component> comps;
  comps.reserve(components_.size() + 1);
  comps.emplace_back(std::move(key), std::move(value));
  comps.insert(comps.end(), components_.begin(), components_.end());
  return DirectoryName(std::move(comps));
}

std::optional<DirectoryName> DirectoryName::parent() const {
  if (components_.size() <= 1) return std::nullopt;
  return DirectoryName({components_.begin() + 1, components_.end()});
}

DirectoryName volume_dn(std::string_view volume, std::string_view hostname,
                        std::string_view unit, std::string_view organization) {
  std::vector<DirectoryName::Component> comps;
  comps.emplace_back("gss", std::string(volume));
  comps.emplace_back("ou", std::string(hostname));
  if (!unit.empty()) comps.emplace_back("ou", std::string(unit));
  if (!organization.empty()) comps.emplace_back("o", std::string(organization));
  return DirectoryName(std::move(comps));
}

DirectoryName bandwidth_dn(const DirectoryName& volume) {
  return volume.child("gss", "TransferBandwidth");
}

DirectoryName source_dn(const DirectoryName& bandwidth, std::string_view source_url) {
  return bandwidth.child("gss", std::string(source_url));
}

// ---------------------------------------------------------------------------
// Validation
// ---------------------------------------------------------------------------

std::vector<Violation> validate(const VolumeRecord& r) {
  Checker c;
  c.required_text("hostname", r.hostname);
  c.required_text("volume", r.volume);
  const bool total_ok = c.number("totalSpace", r.total_space, true);
  const bool avail_ok = c.number("availableSpace", r.available_space, true);
  if (total_ok && *r.total_space < 0) c.invalid("totalSpace", "must be nonnegative");
  if (avail_ok) {
    if (*r.available_space < 0) {
      c.invalid("availableSpace", "must be nonnegative");
    } else if (total_ok && *r.available_space > *r.total_space) {
      c.invalid("availableSpace", "exceeds totalSpace");
    }
  }
  if (!r.mount_point) {
    c.missing("mountPoint");
  } else {
    c.required_text("mountPoint", *r.mount_point);
  }
  if (c.number("diskTransferRate", r.disk_transfer_rate, true) &&
      *r.disk_transfer_rate <= 0) {
    c.invalid("diskTransferRate", "must be positive");
  }
  c.nonnegative("drdTime", r.drd_time, true);
  c.nonnegative("dwrTime", r.dwr_time, true);
  if (r.requirements) {
    c.text("requirements", *r.requirements);
    try {
      classad::parse_expression(*r.requirements);
    } catch (const classad::ParseError& e) {
      c.invalid("requirements", std::string("not a valid ad expression: ") + e.what());
    }
  }
  for (const auto& fs : r.filesystem) c.required_text("filesystem", fs);
  c.extras(r.extras, names::kVolume);
  return c.take();
}

std::vector<Violation> validate(const BandwidthRecord& r) {
  Checker c;
  struct Direction {
    const char* max_name;
    const char* min_name;
    const char* avg_name;
    const char* stddev_name;
    const std::optional<double>& max;
    const std::optional<double>& min;
    const std::optional<double>& avg;
    const std::optional<double>& stddev;
  };
  const Direction dirs[] = {
      {"MaxRDBandwidth", "MinRDBandwidth", "AvgRDBandwidth", "StdDevRDBandwidth",
       r.max_rd, r.min_rd, r.avg_rd, r.stddev_rd},
      {"MaxWRBandwidth", "MinWRBandwidth", "AvgWRBandwidth", "StdDevWRBandwidth",
       r.max_wr, r.min_wr, r.avg_wr, r.stddev_wr},
  };
  bool any = false;
  for (const auto& d : dirs) {
    const bool present = d.max || d.min || d.avg || d.stddev;
    if (!present) continue;
    any = true;
    const bool ok_max = c.number(d.max_name, d.max, true);
    const bool ok_min = c.number(d.min_name, d.min, true);
    const bool ok_avg = c.number(d.avg_name, d.avg, true);
    if (ok_min && *d.min < 0) c.invalid(d.min_name, "must be nonnegative");
    if (ok_min && ok_avg && *d.min > *d.avg) c.invalid(d.avg_name, "below minimum");
    if (ok_max && ok_avg && *d.avg > *d.max) c.invalid(d.avg_name, "above maximum");
    if (ok_min && ok_max && !ok_avg && *d.min > *d.max) {
      c.invalid(d.min_name, "exceeds maximum");
    }
    c.nonnegative(d.stddev_name, d.stddev, false);
  }
  if (!any) c.missing("MaxRDBandwidth");
  c.extras(r.extras, names::kBandwidth);
  return c.take();
}

std::vector<Violation> validate(const SourceBandwidthRecord& r) {
  Checker c;
  c.required_text("sourceUrl", r.source_url);
  if (!r.last_rd_bandwidth && !r.last_wr_bandwidth) c.missing("lastRDBandwidth");
  const auto pair = [&c](const char* bw_name, const char* url_name,
                         const std::optional<double>& bw, const std::string& url) {
    if (bw) {
      c.nonnegative(bw_name, bw, true);
      c.required_text(url_name, url);
    } else if (!url.empty()) {
      c.invalid(url_name, "present without its bandwidth");
    }
  };
  pair("lastRDBandwidth", "lastRDurl", r.last_rd_bandwidth, r.last_rd_url);
  pair("lastWRBandwidth", "lastWRurl", r.last_wr_bandwidth, r.last_wr_url);
  c.extras(r.extras, names::kSource);
  return c.take();
}

std::vector<Violation> validate(const RecordSet& set) {
  std::vector<Violation> out = validate(set.volume);
  if (set.bandwidth) {
    auto v = validate(*set.bandwidth);
    out.insert(out.end(), v.begin(), v.end());
  } else if (!set.sources.empty()) {
    out.push_back({"MaxRDBandwidth", "per-source records without a summary", true});
  }
  for (const auto& s : set.sources) {
    auto v = validate(s);
    out.insert(out.end(), v.begin(), v.end());
  }
  return out;
}

InvalidRecord::InvalidRecord(std::vector<Violation> violations)
    : std::invalid_argument([&] {
        std::string msg = "invalid record";
        for (const auto& v : violations) msg += "; " + v.attribute + ": " + v.reason;
        return msg;
      }()),
      violations_(std::move(violations)) {}

// ---------------------------------------------------------------------------
// ClassAd conversion
// ---------------------------------------------------------------------------

classad::ClassAd record_to_classad(const VolumeRecord& volume,
                                   const BandwidthRecord* bandwidth,
                                   std::span<const SourceBandwidthRecord> sources,
                                   std::string_view requester_host) {
  classad::ClassAd ad;
  put_text(ad, "hostname", volume.hostname);
  put_text(ad, "volume", volume.volume);
  put_number(ad, "totalSpace", volume.total_space);
  put_number(ad, "availableSpace", volume.available_space);
  if (volume.mount_point) put_text(ad, "mountPoint", *volume.mount_point);
  put_number(ad, "diskTransferRate", volume.disk_transfer_rate);
  put_number(ad, "drdTime", volume.drd_time);
  put_number(ad, "dwrTime", volume.dwr_time);
  if (volume.requirements) {
    ad.set("requirement", classad::parse_expression(*volume.requirements));
  }
  if (bandwidth != nullptr) {
    put_number(ad, "MaxRDBandwidth", bandwidth->max_rd);
    put_number(ad, "MinRDBandwidth", bandwidth->min_rd);
    put_number(ad, "AvgRDBandwidth", bandwidth->avg_rd);
    put_number(ad, "MaxWRBandwidth", bandwidth->max_wr);
    put_number(ad, "MinWRBandwidth", bandwidth->min_wr);
    put_number(ad, "AvgWRBandwidth", bandwidth->avg_wr);
    put_number(ad, "StdDevRDBandwidth", bandwidth->stddev_rd);
    put_number(ad, "StdDevWRBandwidth", bandwidth->stddev_wr);
  }
  for (std::size_t i = 0; i < sources.size(); ++i) {
    const auto& s = sources[i];
    const std::string suffix = "_from_" + std::to_string(i);
    put_number(ad, "lastRDBandwidth" + suffix, s.last_rd_bandwidth);
    put_number(ad, "lastWRBandwidth" + suffix, s.last_wr_bandwidth);
    if (!requester_host.empty() && iequals(host_of(s.source_url), requester_host)) {
      put_number(ad, "lastRDBandwidth", s.last_rd_bandwidth);
      put_number(ad, "lastWRBandwidth", s.last_wr_bandwidth);
    }
  }
  return ad;
}

}  // namespace gridsel::schema
