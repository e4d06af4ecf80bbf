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

#include "gridsel/history.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <mutex>
#include <stdexcept>

#include "gridsel/text.hpp"

namespace gridsel::history {

std::string_view to_string(Direction d) { return d == Direction::kRead ? "read" : "write"; }

std::optional<Direction> parse_direction(std::string_view s) {
  if (iequals(s, "read") || iequals(s, "rd")) return Direction::kRead;
  if (iequals(s, "write") || iequals(s, "wr")) return Direction::kWrite;
  return std::nullopt;
}

std::optional<std::string> check(const TransferSample& s) {
  if (host_of(s.peer).empty()) return "peer has no host";
  if (trim(s.peer) != s.peer) return "peer has surrounding whitespace";
  if (s.peer.find_first_of("\t\r\n") != std::string::npos) return "peer contains a control character";
  if (!std::isfinite(s.bytes) || s.bytes < 0) return "bytes must be a nonnegative number";
  if (!std::isfinite(s.duration) || s.duration <= 0) return "duration must be positive";
  if (!std::isfinite(s.timestamp)) return "timestamp must be finite";
  if (!std::isfinite(s.bandwidth())) return "bandwidth overflows";
  return std::nullopt;
}

std::string format_sample(const TransferSample& s) {
  std::string out = format_shortest(s.timestamp);
  out += '\t';
  out += to_string(s.direction);
  out += '\t';
  out += s.peer;
  out += '\t';
  out += format_shortest(s.bytes);
  out += '\t';
  out += format_shortest(s.duration);
  return out;
}

TransferSample parse_sample(std::string_view line) {
  const auto fields = split(line, '\t');
  if (fields.size() != 5) {
    throw std::invalid_argument("expected 5 tab-separated fields, found " +
                                std::to_string(fields.size()));
  }
  const auto number = [](std::string_view f, const char* what) {
    auto v = parse_double(trim(f));
    if (!v) throw std::invalid_argument(std::string("bad ") + what + " '" + std::string(f) + "'");
    return *v;
  };
  TransferSample s;
  s.timestamp = number(fields[0], "timestamp");
  auto d = parse_direction(trim(fields[1]));
  if (!d) throw std::invalid_argument("bad direction '" + std::string(fields[1]) + "'");
  s.direction = *d;
  s.peer = std::string(trim(fields[2]));
  s.bytes = number(fields[3], "bytes");
  s.duration = number(fields[4], "duration");
  if (auto why = check(s)) throw std::invalid_argument(*why);
  return s;
}

BandwidthSummary summarize(std::span<const double> xs) {
  BandwidthSummary s;
  s.count = xs.size();
  if (xs.empty()) return s;
  const auto [lo, hi] = std::minmax_element(xs.begin(), xs.end());
  double sum = 0;
  for (double x : xs) sum += x;
  const double n = static_cast<double>(xs.size());
  const double mean = std::clamp(sum / n, *lo, *hi);
  double sq = 0;
  for (double x : xs) sq += (x - mean) * (x - mean);
  s.min = *lo;
  s.max = *hi;
  s.mean = mean;
  s.stddev = std::sqrt(sq / n);
  return s;
}

void LoadGauge::end() {
  std::int64_t cur = active_.load(std::memory_order_relaxed);
  do {
    if (cur <= 0) throw std::logic_error("load gauge released more often than acquired");
  } while (!active_.compare_exchange_weak(cur, cur - 1, std::memory_order_relaxed));
}

HistoryStore::HistoryStore(std::size_t capacity) : capacity_(capacity) {
  if (capacity_ == 0) throw std::invalid_argument("history capacity must be positive");
}

void HistoryStore::record(const TransferSample& s) {
  if (auto why = check(s)) throw std::invalid_argument("invalid transfer sample: " + *why);
  std::unique_lock lock(mu_);
  auto& ring = samples_[index(s.direction)];
  ring.push_back(s);
  if (ring.size() > capacity_) ring.pop_front();
  auto& slot = peers_[host_of(s.peer)].last[index(s.direction)];
  if (!slot || s.timestamp >= slot->timestamp) {
    slot = LastTransfer{s.bandwidth(), s.peer, s.timestamp};
  }
}

BandwidthSummary HistoryStore::summarize(Direction d) const {
  std::vector<double> xs;
  {
    std::shared_lock lock(mu_);
    const auto& ring = samples_[index(d)];
    xs.reserve(ring.size());
    for (const auto& s : ring) xs.push_back(s.bandwidth());
  }
  return history::summarize(xs);
}

BandwidthSummary HistoryStore::summarize(std::string_view peer, Direction d) const {
  const std::string host = host_of(peer);
  std::vector<double> xs;
  {
    std::shared_lock lock(mu_);
    for (const auto& s : samples_[index(d)]) {
      if (host_of(s.peer) == host) xs.push_back(s.bandwidth());
    }
  }
  return history::summarize(xs);
}

std::optional<double> HistoryStore::predict(std::string_view peer, Direction d,
                                            std::int64_t load) const {
  if (load < 0) throw std::invalid_argument("negative load");
  std::optional<double> base = summarize(peer, d).mean;
  if (!base) base = summarize(d).mean;
  if (!base) return std::nullopt;
  return *base / (1.0 + static_cast<double>(load));
}

std::optional<LastTransfer> HistoryStore::last(std::string_view peer, Direction d) const {
  std::shared_lock lock(mu_);
  const auto it = peers_.find(host_of(peer));
  if (it == peers_.end()) return std::nullopt;
  return it->second.last[index(d)];
}

std::vector<std::string> HistoryStore::peers() const {
  std::shared_lock lock(mu_);
  std::vector<std::string> out;
  for (const auto& [host, state] : peers_) out.push_back(host);
  return out;
}

std::vector<TransferSample> HistoryStore::samples(Direction d) const {
  std::shared_lock lock(mu_);
  const auto& ring = samples_[index(d)];
  return {ring.begin(), ring.end()};
}

std::size_t HistoryStore::size(Direction d) const {
  std::shared_lock lock(mu_);
  return samples_[index(d)].size();
}

std::optional<schema::BandwidthRecord> HistoryStore::bandwidth_record() const {
  const BandwidthSummary rd = summarize(Direction::kRead);
  const BandwidthSummary wr = summarize(Direction::kWrite);
  if (rd.count == 0 && wr.count == 0) return std::nullopt;
  schema::BandwidthRecord r;
  r.max_rd = rd.max;
  r.min_rd = rd.min;
  r.avg_rd = rd.mean;
  r.stddev_rd = rd.stddev;
  r.max_wr = wr.max;
  r.min_wr = wr.min;
  r.avg_wr = wr.mean;
  r.stddev_wr = wr.stddev;
  return r;
}

std::vector<schema::SourceBandwidthRecord> HistoryStore::source_records() const {
  std::shared_lock lock(mu_);
  std::vector<schema::SourceBandwidthRecord> out;
  for (const auto& [host, state] : peers_) {
    schema::SourceBandwidthRecord r;
    r.source_url = host;
    if (const auto& rd = state.last[0]) {
      r.last_rd_bandwidth = rd->bandwidth;
      r.last_rd_url = rd->url;
    }
    if (const auto& wr = state.last[1]) {
      r.last_wr_bandwidth = wr->bandwidth;
      r.last_wr_url = wr->url;
    }
    out.push_back(std::move(r));
  }
  return out;
}

std::size_t HistoryStore::load(std::istream& in) {
  std::string line;
  std::size_t line_no = 0;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto t = trim(line);
    if (t.empty() || t.front() == '#') continue;
    try {
      record(parse_sample(line));
    } catch (const std::invalid_argument& e) {
      throw std::invalid_argument("line " + std::to_string(line_no) + ": " + e.what());
    }
    ++n;
  }
  return n;
}

std::size_t HistoryStore::load_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open history log '" + path + "'");
  return load(in);
}

void append_sample(const std::string& path, const TransferSample& s) {
  if (auto why = check(s)) throw std::invalid_argument("invalid transfer sample: " + *why);
  std::ofstream out(path, std::ios::app);
  out << format_sample(s) << '\n';
  out.flush();
  if (!out) throw std::runtime_error("cannot append to history log '" + path + "'");
}

}  // namespace gridsel::history
