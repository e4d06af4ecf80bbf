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

#ifndef GRIDSEL_INFOSVC_HPP
#define GRIDSEL_INFOSVC_HPP

// Per-node information service: gathers static and dynamic volume
// attributes plus transfer history, and answers one-line queries.
//
// Wire protocol, one exchange per connection:
//
//   client:  QUERY <attr>[,<attr>...] [FROM <hostname>]\n
//            QUERY * [FROM <hostname>]\n
//   server:  <LDIF entries>OK\n
//        or  ERR <reason>\n
//
// Config file: `key = value` lines, `#` comments. Keys before the first
// `volume = ...` line apply to every volume; later attribute keys apply to
// the volume opened most recently. A value `exec:<command>` is produced by
// running the command (no arguments) and reading its first output line.
//
//   hostname = hugo.mcs.anl.gov
//   listen = 127.0.0.1:7001
//   ou = MCS
//   o = ANL
//   staleness = 5
//   diskTransferRate = 40M
//   drdTime = 0.008
//   dwrTime = 0.009
//   requirements = other.reqdSpace < 10G
//   filesystem = ext4
//   history = /var/lib/gridsel/transfers.log
//   volume = /dev/sandbox
//   mountPoint = /sandbox
//   totalSpace = 100G
//   availableSpace = exec:/usr/local/bin/free-bytes

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <deque>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include "gridsel/history.hpp"
#include "gridsel/net.hpp"
#include "gridsel/schema.hpp"

namespace gridsel::infosvc {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// Attribute sources
// ---------------------------------------------------------------------------

/// Where an attribute value comes from. Producers return the value text and
/// throw on failure.
struct AttributeSource {
  enum class Kind { kFixed, kCommand, kFunction };

  Kind kind = Kind::kFixed;
  std::string text;  // fixed value or command line
  std::function<std::string()> function;

  static AttributeSource fixed(std::string value);
  static AttributeSource command(std::string command_line);
  static AttributeSource simulated(std::function<std::string()> fn);

  bool dynamic() const { return kind != Kind::kFixed; }
};

/// Runs a command through the shell; returns its first output line. Throws
/// std::runtime_error on spawn failure, nonzero exit or empty output.
std::string run_command(const std::string& command_line);

// ---------------------------------------------------------------------------
// Configuration
// ---------------------------------------------------------------------------

struct VolumeConfig {
  std::string volume;
  /// Lowercase attribute name -> source; overrides node-level entries.
  std::map<std::string, AttributeSource> attributes;
};

struct NodeConfig {
  std::string hostname;
  std::string listen_host = "127.0.0.1";
  std::uint16_t listen_port = 0;
  std::string unit;          // ou
  std::string organization;  // o
  std::chrono::milliseconds staleness{5000};
  std::optional<std::string> history_log;
  std::vector<std::string> filesystem;
  /// Lowercase attribute name -> source, shared by all volumes.
  std::map<std::string, AttributeSource> attributes;
  std::vector<VolumeConfig> volumes;

  /// Problems that make the node unusable: no hostname, no volumes, or a
  /// mandatory volume attribute with neither a value nor a provider.
  std::vector<std::string> problems() const;
};

/// Throws ConfigError naming the line.
NodeConfig parse_config(std::string_view text);
NodeConfig load_config(const std::string& path);

// ---------------------------------------------------------------------------
// Query protocol
// ---------------------------------------------------------------------------

/// Carries the `ERR` reason.
class ProtocolError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct QueryRequest {
  bool all = false;
  std::vector<std::string> attributes;  // as sent
  std::string from;                     // requester hostname, optional

  friend bool operator==(const QueryRequest&, const QueryRequest&) = default;
};

inline constexpr std::size_t kMaxRequestLine = 8192;

/// Request line including the trailing newline. Throws std::invalid_argument
/// for attribute names or hosts the grammar cannot carry.
std::string format_request(const QueryRequest& q);
/// Parses one line (no newline). Throws ProtocolError with the reason:
/// "empty request", "unknown verb", "missing attribute list",
/// "bad attribute name", "bad hostname", "malformed request".
QueryRequest parse_request(std::string_view line);

/// Splits a response into its LDIF body. Throws ProtocolError for `ERR`
/// replies (carrying the reason) and for unterminated or garbled replies.
std::string response_body(std::string_view response);

/// Keeps dn and objectclass lines plus the requested attributes
/// (case-insensitive). Entry boundaries are preserved.
std::string filter_ldif(std::string_view ldif, const std::vector<std::string>& attributes);

// ---------------------------------------------------------------------------
// Service
// ---------------------------------------------------------------------------

class InfoService {
 public:
  using Clock = std::chrono::steady_clock;

  /// Loads the history log named by the config, if any. Throws ConfigError
  /// when problems() is nonempty.
  explicit InfoService(NodeConfig config,
                       std::shared_ptr<history::HistoryStore> history = nullptr,
                       std::function<Clock::time_point()> clock = &Clock::now);

  InfoService(const InfoService&) = delete;
  InfoService& operator=(const InfoService&) = delete;

  /// One record set per volume. Dynamic attributes older than the staleness
  /// budget are refreshed first. Per-source records are limited to the
  /// requester's host when one is given.
  std::vector<schema::RecordSet> collect(std::string_view requester_host = {});

  /// LDIF for the record sets, unfiltered.
  std::string render(std::string_view requester_host = {});

  /// Full response text for one request line.
  std::string handle_query(std::string_view request_line);

  /// Dynamic attributes currently served from an outdated value, as
  /// "<volume>/<attribute>".
  std::vector<std::string> stale_attributes() const;

  const NodeConfig& config() const { return config_; }
  history::HistoryStore& history() { return *history_; }
  history::LoadGauge& load() { return load_; }
  std::uint64_t queries_served() const { return served_.load(); }

 private:
  struct Slot {
    std::mutex mu;  // held while producing, so one command never runs twice at once
    std::optional<std::string> value;
    Clock::time_point fetched{};
    bool stale = false;
  };

  std::optional<std::string> value_of(std::size_t volume, const std::string& attr);

  NodeConfig config_;
  std::shared_ptr<history::HistoryStore> history_;
  std::function<Clock::time_point()> clock_;
  history::LoadGauge load_;
  std::map<std::pair<std::size_t, std::string>, std::unique_ptr<Slot>> slots_;
  std::atomic<std::uint64_t> served_{0};
};

// ---------------------------------------------------------------------------
// Server
// ---------------------------------------------------------------------------

struct ServerOptions {
  std::size_t workers = 8;
  std::chrono::milliseconds io_timeout{5000};
};

/// TCP front end for an InfoService. One request per connection.
class Server {
 public:
  Server(InfoService& service, ServerOptions options = {});
  ~Server();

  Server(const Server&) = delete;
  Server& operator=(const Server&) = delete;

  /// Binds and starts serving. Port 0 picks a free port. Throws
  /// net::NetError.
  void start(const std::string& host, std::uint16_t port);
  /// Stops accepting; connections already accepted are answered first.
  void stop();

  bool running() const { return running_; }
  std::uint16_t port() const { return port_; }

 private:
  void accept_loop();
  void worker_loop();
  void serve_one(net::Socket s);

  InfoService& service_;
  ServerOptions options_;
  net::Socket listener_;
  std::uint16_t port_ = 0;
  std::atomic<bool> running_{false};
  std::atomic<bool> stopping_{false};
  std::thread acceptor_;
  std::vector<std::thread> workers_;
  std::mutex queue_mu_;
  std::condition_variable queue_cv_;
  std::deque<net::Socket> queue_;
};

}  // namespace gridsel::infosvc

#endif  // GRIDSEL_INFOSVC_HPP
