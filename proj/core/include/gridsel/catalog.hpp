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

#ifndef GRIDSEL_CATALOG_HPP
#define GRIDSEL_CATALOG_HPP

// Replica catalog: logical file name -> physical replica locations, each
// carrying the address of the information service that describes it.
//
// File format, one replica per line, sorted:
//   logical \t hostname \t host:port \t path \t protocol

#include <compare>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace gridsel::catalog {

class CatalogError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Endpoint {
  std::string host;
  std::uint16_t port = 0;

  /// `host:port`; a bracketed IPv6 host keeps its brackets.
  std::string str() const;
  /// Throws std::invalid_argument.
  static Endpoint parse(std::string_view text);

  friend auto operator<=>(const Endpoint&, const Endpoint&) = default;
};

struct ReplicaLocation {
  std::string hostname;
  Endpoint infoservice;
  std::string path;      // absolute
  std::string protocol;  // optional access protocol tag

  friend auto operator<=>(const ReplicaLocation&, const ReplicaLocation&) = default;
};

/// Empty when usable, else the reason.
std::optional<std::string> check(std::string_view logical, const ReplicaLocation& loc);

/// Thread-safe. Readers work on immutable snapshots, so they observe either
/// the state before a write or after it. With a backing file every write is
/// persisted (temp file + rename) before it becomes visible.
class Catalog {
 public:
  /// In-memory catalog.
  Catalog();
  /// Loads `file` if it exists; later writes persist to it. Throws
  /// CatalogError.
  explicit Catalog(std::filesystem::path file);

  Catalog(const Catalog&) = delete;
  Catalog& operator=(const Catalog&) = delete;

  /// Inserts the (logical, hostname, path) triple. Returns false if it was
  /// already present, leaving the stored location unchanged. Throws
  /// std::invalid_argument or CatalogError.
  bool add(std::string_view logical, const ReplicaLocation& loc);
  /// Removes the (logical, hostname, path) triple; false if absent.
  bool remove(std::string_view logical, const ReplicaLocation& loc);

  /// Sorted by (hostname, path). Unknown names give an empty list.
  std::vector<ReplicaLocation> lookup(std::string_view logical) const;
  std::vector<std::string> logical_names() const;
  std::size_t size() const;

  /// The file format above, sorted.
  std::string serialize() const;
  /// Replaces the contents with parsed text (not persisted). Throws
  /// CatalogError with the line number.
  void replace(std::string_view text);

  const std::optional<std::filesystem::path>& file() const { return file_; }

 private:
  using Key = std::pair<std::string, std::string>;  // hostname, path
  using Map = std::map<std::string, std::map<Key, ReplicaLocation>, std::less<>>;

  std::shared_ptr<const Map> snapshot() const;
  void publish(std::shared_ptr<const Map> next);
  static std::string serialize(const Map& m);
  static Map parse(std::string_view text);

  std::optional<std::filesystem::path> file_;
  std::mutex write_mu_;
  mutable std::mutex snap_mu_;
  std::shared_ptr<const Map> current_;
};

}  // namespace gridsel::catalog

#endif  // GRIDSEL_CATALOG_HPP
