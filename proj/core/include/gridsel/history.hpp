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

#ifndef GRIDSEL_HISTORY_HPP
#define GRIDSEL_HISTORY_HPP

// Transfer history kept by a storage node, and the bandwidth figures it
// publishes: summary statistics, the latest transfer per peer, and a
// load-adjusted prediction.

#include <atomic>
#include <cstddef>
#include <cstdint>
#include <deque>
#include <iosfwd>
#include <map>
#include <optional>
#include <shared_mutex>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "gridsel/schema.hpp"

namespace gridsel::history {

/// Seen from the serving node: a read sends data to the peer.
enum class Direction { kRead, kWrite };

std::string_view to_string(Direction d);
std::optional<Direction> parse_direction(std::string_view s);

struct TransferSample {
  Direction direction = Direction::kRead;
  std::string peer;        // URL or bare hostname
  double bytes = 0;
  double duration = 1;     // seconds
  double timestamp = 0;    // seconds since the epoch

  double bandwidth() const { return bytes / duration; }

  friend bool operator==(const TransferSample&, const TransferSample&) = default;
};

/// Empty when the sample is usable, else the reason.
std::optional<std::string> check(const TransferSample& s);

/// `timestamp \t direction \t peer \t bytes \t duration`
std::string format_sample(const TransferSample& s);
/// Throws std::invalid_argument.
TransferSample parse_sample(std::string_view line);

/// Statistics over one direction's bandwidths (bytes/sec). Every optional
/// is set iff count >= 1. stddev is the population standard deviation.
struct BandwidthSummary {
  std::size_t count = 0;
  std::optional<double> max;
  std::optional<double> min;
  std::optional<double> mean;
  std::optional<double> stddev;

  friend bool operator==(const BandwidthSummary&, const BandwidthSummary&) = default;
};

/// Two-pass batch computation.
BandwidthSummary summarize(std::span<const double> bandwidths);

/// Active transfer count.
class LoadGauge {
 public:
  class Guard {
   public:
    explicit Guard(LoadGauge& g) : gauge_(&g) { gauge_->begin(); }
    Guard(Guard&& o) noexcept : gauge_(std::exchange(o.gauge_, nullptr)) {}
    Guard(const Guard&) = delete;
    Guard& operator=(const Guard&) = delete;
    Guard& operator=(Guard&&) = delete;
    ~Guard() {
      if (gauge_ != nullptr) gauge_->end();
    }

   private:
    LoadGauge* gauge_;
  };

  void begin() { active_.fetch_add(1, std::memory_order_relaxed); }
  /// Throws std::logic_error when nothing is active.
  void end();
  std::int64_t active() const { return active_.load(std::memory_order_relaxed); }
  Guard track() { return Guard(*this); }

 private:
  std::atomic<std::int64_t> active_{0};
};

struct LastTransfer {
  double bandwidth = 0;
  std::string url;
  double timestamp = 0;

  friend bool operator==(const LastTransfer&, const LastTransfer&) = default;
};

inline constexpr std::size_t kDefaultCapacity = 10000;

/// Thread-safe. Keeps the newest `capacity` samples per direction; the
/// per-peer latest transfer survives eviction.
class HistoryStore {
 public:
  explicit HistoryStore(std::size_t capacity = kDefaultCapacity);

  HistoryStore(const HistoryStore&) = delete;
  HistoryStore& operator=(const HistoryStore&) = delete;

  /// Throws std::invalid_argument for an unusable sample.
  void record(const TransferSample& s);

  BandwidthSummary summarize(Direction d) const;
  BandwidthSummary summarize(std::string_view peer, Direction d) const;

  /// Per-peer mean if the peer has samples, else the global mean, divided by
  /// 1 + load. nullopt without any history in that direction.
  std::optional<double> predict(std::string_view peer, Direction d, std::int64_t load) const;
  std::optional<double> predict(std::string_view peer, Direction d,
                                const LoadGauge& load) const {
    return predict(peer, d, load.active());
  }

  /// Latest transfer with the peer's host; ties go to the later record.
  std::optional<LastTransfer> last(std::string_view peer, Direction d) const;
  /// Hosts with at least one recorded transfer, sorted.
  std::vector<std::string> peers() const;

  /// Retained samples, oldest first.
  std::vector<TransferSample> samples(Direction d) const;
  std::size_t size(Direction d) const;
  std::size_t capacity() const { return capacity_; }

  /// Summary statistics as a publishable record; nullopt without samples.
  std::optional<schema::BandwidthRecord> bandwidth_record() const;
  /// One record per peer host, sorted by host.
  std::vector<schema::SourceBandwidthRecord> source_records() const;

  /// Records every sample line from a log; blank and `#` lines are skipped.
  /// Returns the number of samples. Throws std::invalid_argument with the
  /// line number.
  std::size_t load(std::istream& in);
  std::size_t load_file(const std::string& path);

 private:
  struct PeerState {
    std::optional<LastTransfer> last[2];
  };

  static std::size_t index(Direction d) { return d == Direction::kRead ? 0 : 1; }

  std::size_t capacity_;
  mutable std::shared_mutex mu_;
  std::deque<TransferSample> samples_[2];
  std::map<std::string, PeerState, std::less<>> peers_;
};

/// Appends one line to a log file. Throws std::runtime_error.
void append_sample(const std::string& path, const TransferSample& s);

}  // namespace gridsel::history

#endif  // GRIDSEL_HISTORY_HPP
