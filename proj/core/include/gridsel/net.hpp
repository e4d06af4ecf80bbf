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

#ifndef GRIDSEL_NET_HPP
#define GRIDSEL_NET_HPP

// Minimal blocking TCP helpers with deadlines (POSIX sockets).

#include <chrono>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

namespace gridsel::net {

using Clock = std::chrono::steady_clock;
using Deadline = Clock::time_point;

class NetError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// The deadline passed before the operation finished.
class TimeoutError : public NetError {
 public:
  using NetError::NetError;
};

/// Connection refused, host unreachable or name not resolvable.
class UnreachableError : public NetError {
 public:
  using NetError::NetError;
};

class Socket {
 public:
  Socket() = default;
  explicit Socket(int fd) : fd_(fd) {}
  Socket(Socket&& o) noexcept;
  Socket& operator=(Socket&& o) noexcept;
  Socket(const Socket&) = delete;
  Socket& operator=(const Socket&) = delete;
  ~Socket() { close(); }

  int fd() const { return fd_; }
  bool valid() const { return fd_ >= 0; }
  void close();

 private:
  int fd_ = -1;
};

/// Bound, listening socket with SO_REUSEADDR. Port 0 picks a free port.
/// Throws NetError.
Socket listen_tcp(const std::string& host, std::uint16_t port, int backlog = 128);
std::uint16_t local_port(const Socket& s);

/// Connected socket. Throws TimeoutError or UnreachableError.
Socket connect_tcp(const std::string& host, std::uint16_t port, Deadline deadline);

/// Waits for a pending connection; invalid socket on timeout.
Socket accept_for(const Socket& listener, std::chrono::milliseconds wait);

void send_all(const Socket& s, std::string_view data, Deadline deadline);
void shutdown_write(const Socket& s);

/// Reads through the first '\n' (excluded, along with a preceding '\r').
/// A final line without a newline is returned when the peer closes.
/// Throws NetError if the peer closes first or the line exceeds max_len.
std::string read_line(const Socket& s, Deadline deadline, std::size_t max_len);

/// Reads until the peer closes. Throws NetError past max_len bytes.
std::string read_to_end(const Socket& s, Deadline deadline, std::size_t max_len);

/// Connect, send `request`, half-close, read the whole reply.
std::string exchange(const std::string& host, std::uint16_t port, std::string_view request,
                     std::chrono::milliseconds timeout,
                     std::size_t max_reply = 64 * 1024 * 1024);

}  // namespace gridsel::net

#endif  // GRIDSEL_NET_HPP
