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

#ifndef GRIDSEL_SCHEMA_HPP
#define GRIDSEL_SCHEMA_HPP

// Storage metadata records (server volume, transfer bandwidth summary,
// per-source transfer bandwidth) and their LDIF publication format.
//
// The LDIF profile is a strict subset: no base64 values, no line folding,
// no change records. An entry is
//
//   dn: gss=/dev/sandbox,ou=hugo.mcs.anl.gov,ou=MCS,o=ANL
//   objectclass: GridPhysicalResource
//   objectclass: GridStorageServerVolume
//   hostname: hugo.mcs.anl.gov
//   ...
//   <blank line>
//
// Attribute names are case-insensitive and emitted in lowercase, in schema
// declaration order. Reals use the shortest decimal form that reads back
// bit-exactly.

#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "gridsel/classad.hpp"

namespace gridsel::schema {

inline constexpr std::string_view kPhysicalResourceClass = "GridPhysicalResource";
inline constexpr std::string_view kServerVolumeClass = "GridStorageServerVolume";
inline constexpr std::string_view kTransferBandwidthClass = "GridStorageTransferBandwidth";
inline constexpr std::string_view kSourceTransferBandwidthClass =
    "GridStorageSourceTransferBandwidth";

/// Unrecognized attributes, keyed by lowercase name, in line order.
using Extras = std::map<std::string, std::vector<std::string>>;

struct VolumeRecord {
  std::string hostname;
  std::string volume;
  std::optional<double> total_space;         // bytes
  std::optional<double> available_space;     // bytes
  std::optional<std::string> mount_point;
  std::optional<double> disk_transfer_rate;  // bytes/sec
  std::optional<double> drd_time;            // seconds
  std::optional<double> dwr_time;            // seconds
  std::optional<std::string> requirements;   // ad expression text
  std::vector<std::string> filesystem;
  Extras extras;

  friend bool operator==(const VolumeRecord&, const VolumeRecord&) = default;
};

/// Transfer bandwidth summary over all transfers, bytes/sec. The stddev
/// fields are population standard deviations.
struct BandwidthRecord {
  std::optional<double> max_rd;
  std::optional<double> min_rd;
  std::optional<double> avg_rd;
  std::optional<double> max_wr;
  std::optional<double> min_wr;
  std::optional<double> avg_wr;
  std::optional<double> stddev_rd;
  std::optional<double> stddev_wr;
  Extras extras;

  friend bool operator==(const BandwidthRecord&, const BandwidthRecord&) = default;
};

/// Most recent transfer with one peer.
struct SourceBandwidthRecord {
  std::string source_url;
  std::optional<double> last_rd_bandwidth;
  std::string last_rd_url;
  std::optional<double> last_wr_bandwidth;
  std::string last_wr_url;
  Extras extras;

  friend bool operator==(const SourceBandwidthRecord&,
                         const SourceBandwidthRecord&) = default;
};

// ---------------------------------------------------------------------------
// Directory names
// ---------------------------------------------------------------------------

/// Leaf-first (key, value) components; keys are gss, ou or o.
class DirectoryName {
 public:
  using Component = std::pair<std::string, std::string>;

  DirectoryName() = default;
  /// Throws std::invalid_argument on an empty list or unknown key.
  explicit DirectoryName(std::vector<Component> components);

  /// Parses `key=value,key=value`; `\` escapes `,`, `=` and `\` in values.
  static DirectoryName parse(std::string_view text);

  /// Canonical `key=value,...` form.
  std::string str() const;

  DirectoryName child(std::string key, std::string value) const;
  /// Drops the leaf component; empty for a single-component name.
  std::optional<DirectoryName> parent() const;

  const std::vector<Component>& components() const { return components_; }
  bool empty() const { return components_.empty(); }

  friend bool operator==(const DirectoryName&, const DirectoryName&) = default;

 private:
  std::vector<Component> components_;
};

/// Volume entry name: gss=<volume>,ou=<hostname>,ou=<unit>,o=<organization>.
DirectoryName volume_dn(std::string_view volume, std::string_view hostname,
                        std::string_view unit, std::string_view organization);
DirectoryName bandwidth_dn(const DirectoryName& volume);
DirectoryName source_dn(const DirectoryName& bandwidth, std::string_view source_url);

// ---------------------------------------------------------------------------
// Validation
// ---------------------------------------------------------------------------

struct Violation {
  std::string attribute;  // schema spelling, e.g. "diskTransferRate"
  std::string reason;
  bool missing = false;   // mandatory attribute absent

  friend bool operator==(const Violation&, const Violation&) = default;
};

std::vector<Violation> validate(const VolumeRecord& r);
std::vector<Violation> validate(const BandwidthRecord& r);
std::vector<Violation> validate(const SourceBandwidthRecord& r);

// ---------------------------------------------------------------------------
// LDIF
// ---------------------------------------------------------------------------

class LdifError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidRecord : public std::invalid_argument {
 public:
  explicit InvalidRecord(std::vector<Violation> violations);
  const std::vector<Violation>& violations() const { return violations_; }

 private:
  std::vector<Violation> violations_;
};

/// Untyped LDIF entry.
struct LdifEntry {
  DirectoryName dn;
  std::vector<std::string> object_classes;
  std::vector<std::pair<std::string, std::string>> attributes;
};

std::string render(const LdifEntry& entry);
/// Parses zero or more entries. Throws LdifError.
std::vector<LdifEntry> parse_ldif(std::string_view text);

/// Entry for a record, without validation.
LdifEntry to_entry(const VolumeRecord& r, const DirectoryName& dn);
LdifEntry to_entry(const BandwidthRecord& r, const DirectoryName& dn);
LdifEntry to_entry(const SourceBandwidthRecord& r, const DirectoryName& dn);

/// Validated, rendered record. Throws InvalidRecord.
std::string to_ldif(const VolumeRecord& r, const DirectoryName& dn);
std::string to_ldif(const BandwidthRecord& r, const DirectoryName& dn);
std::string to_ldif(const SourceBandwidthRecord& r, const DirectoryName& dn);

using AnyRecord = std::variant<VolumeRecord, BandwidthRecord, SourceBandwidthRecord>;

struct LdifRecord {
  AnyRecord record;
  DirectoryName dn;

  friend bool operator==(const LdifRecord&, const LdifRecord&) = default;
};

/// Decodes an entry by its most specific object class. Throws LdifError.
LdifRecord decode(const LdifEntry& entry);

/// Exactly one record. Throws LdifError.
LdifRecord from_ldif(std::string_view text);

/// One volume with its bandwidth summary and per-source children.
struct RecordSet {
  DirectoryName dn;  // of the volume entry
  VolumeRecord volume;
  std::optional<BandwidthRecord> bandwidth;
  std::vector<SourceBandwidthRecord> sources;

  friend bool operator==(const RecordSet&, const RecordSet&) = default;
};

std::vector<Violation> validate(const RecordSet& set);
/// Volume, bandwidth child, then source children. Throws InvalidRecord.
std::string to_ldif(const RecordSet& set);
/// Groups entries by DN ancestry. Children whose parent volume is absent are
/// an error. Throws LdifError.
std::vector<RecordSet> record_sets_from_ldif(std::string_view text);
std::vector<RecordSet> group_record_sets(std::span<const LdifRecord> records);

// ---------------------------------------------------------------------------
// ClassAd conversion
// ---------------------------------------------------------------------------

/// One ad holding every scalar attribute under its schema name. The
/// requirements text becomes the ad's `requirement`. Per-source records are
/// flattened as lastRDBandwidth_from_<i> / lastWRBandwidth_from_<i>, and the
/// entry whose source host equals `requester_host` is also exposed as
/// lastRDBandwidth / lastWRBandwidth. Throws classad::ParseError.
classad::ClassAd record_to_classad(
    const VolumeRecord& volume, const BandwidthRecord* bandwidth = nullptr,
    std::span<const SourceBandwidthRecord> sources = {},
    std::string_view requester_host = {});

}  // namespace gridsel::schema

#endif  // GRIDSEL_SCHEMA_HPP
