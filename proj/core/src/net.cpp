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

#include "gridsel/net.hpp"

#include <arpa/inet.h>
#include <fcntl.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <memory>
#include <utility>

namespace gridsel::net {

namespace {

std::string errno_text(const char* what, int err) {
  return std::string(what) + ": " + std::strerror(err);
}

int remaining_ms(Deadline deadline) {
  const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - Clock::now());
  if (left.count() <= 0) return 0;
  return static_cast<int>(std::min<std::int64_t>(left.count(), 1 << 30));
}

// Waits for `events` on fd; false on deadline.
bool wait_for(int fd, short events, Deadline deadline) {
  for (;;) {
    pollfd p{fd, events, 0};
    const int rc = ::poll(&p, 1, remaining_ms(deadline));
    if (rc > 0) return true;
    if (rc == 0) return false;
    if (errno != EINTR) throw NetError(errno_text("poll", errno));
  }
}

void set_nonblocking(int fd, bool on) {
  const int flags = ::fcntl(fd, F_GETFL, 0);
  ::fcntl(fd, F_SETFL, on ? (flags | O_NONBLOCK) : (flags & ~O_NONBLOCK));
}

// Strips [brackets] from an IPv6 literal.
std::string bare_host(const std::string& host) {
  if (host.size() >= 2 && host.front() == '[' && host.back() == ']') {
    return host.substr(1, host.size() - 2);
  }
  return host;
}

struct AddrInfoDeleter {
  void operator()(addrinfo* a) const { ::freeaddrinfo(a); }
};
using AddrInfoPtr = std::unique_ptr<addrinfo, AddrInfoDeleter>;

AddrInfoPtr resolve(const std::string& host, std::uint16_t port, bool passive) {
  addrinfo hints{};
  hints.ai_family = AF_UNSPEC;
  hints.ai_socktype = SOCK_STREAM;
  if (passive) hints.ai_flags = AI_PASSIVE;
  addrinfo* res = nullptr;
  const std::string h = bare_host(host);
  const std::string service = std::to_string(port);
  const int rc = ::getaddrinfo(h.empty() ? nullptr : h.c_str(), service.c_str(), &hints, &res);
  if (rc != 0) throw UnreachableError("cannot resolve '" + host + "': " + ::gai_strerror(rc));
  return AddrInfoPtr(res);
}

}  // namespace

Socket::Socket(Socket&& o) noexcept : fd_(std::exchange(o.fd_, -1)) {}

Socket& Socket::operator=(Socket&& o) noexcept {
  if (this != &o) {
    close();
    fd_ = std::exchange(o.fd_, -1);
  }
  return *this;
}

void Socket::close() {
  if (fd_ >= 0) ::close(std::exchange(fd_, -1));
}

Socket listen_tcp(const std::string& host, std::uint16_t port, int backlog) {
  const auto addrs = resolve(host, port, true);
  int last_err = 0;
  for (addrinfo* a = addrs.get(); a != nullptr; a = a->ai_next) {
    Socket s(::socket(a->ai_family, a->ai_socktype | SOCK_CLOEXEC, a->ai_protocol));
    if (!s.valid()) {
      last_err = errno;
      continue;
    }
    const int one = 1;
    ::setsockopt(s.fd(), SOL_SOCKET, SO_REUSEADDR, &one, sizeof(one));
    if (::bind(s.fd(), a->ai_addr, a->ai_addrlen) != 0 || ::listen(s.fd(), backlog) != 0) {
      last_err = errno;
      continue;
    }
    return s;
  }
  throw NetError(errno_text(("cannot listen on " + host + ":" + std::to_string(port)).c_str(),
                            last_err));
}

std::uint16_t local_port(const Socket& s) {
  sockaddr_storage addr{};
  socklen_t len = sizeof(addr);
  if (::getsockname(s.fd(), reinterpret_cast<sockaddr*>(&addr), &len) != 0) {
    throw NetError(errno_text("getsockname", errno));
  }
  if (addr.ss_family == AF_INET6) {
    return ntohs(reinterpret_cast<const sockaddr_in6*>(&addr)->sin6_port);
  }
  return ntohs(reinterpret_cast<const sockaddr_in*>(&addr)->sin_port);
}

Socket connect_tcp(const std::string& host, std::uint16_t port, Deadline deadline) {
  const auto addrs = resolve(host, port, false);
  std::string failure = "no addresses for '" + host + "'";
  for (addrinfo* a = addrs.get(); a != nullptr; a = a->ai_next) {
    Socket s(::socket(a->ai_family, a->ai_socktype | SOCK_CLOEXEC, a->ai_protocol));
    if (!s.valid()) continue;
    set_nonblocking(s.fd(), true);
    if (::connect(s.fd(), a->ai_addr, a->ai_addrlen) != 0) {
      if (errno != EINPROGRESS) {
        failure = errno_text("connect", errno);
        continue;
      }
      if (!wait_for(s.fd(), POLLOUT, deadline)) {
        throw TimeoutError("connect to " + host + ":" + std::to_string(port) + " timed out");
      }
      int err = 0;
      socklen_t len = sizeof(err);
      ::getsockopt(s.fd(), SOL_SOCKET, SO_ERROR, &err, &len);
      if (err != 0) {
        failure = errno_text("connect", err);
        continue;
      }
    }
    set_nonblocking(s.fd(), false);
    const int one = 1;
    ::setsockopt(s.fd(), IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
    return s;
  }
  throw UnreachableError(host + ":" + std::to_string(port) + ": " + failure);
}

Socket accept_for(const Socket& listener, std::chrono::milliseconds wait) {
  if (!wait_for(listener.fd(), POLLIN, Clock::now() + wait)) return Socket();
  const int fd = ::accept4(listener.fd(), nullptr, nullptr, SOCK_CLOEXEC);
  if (fd < 0) {
    if (errno == EAGAIN || errno == EWOULDBLOCK || errno == EINTR || errno == ECONNABORTED) {
      return Socket();
    }
    throw NetError(errno_text("accept", errno));
  }
  return Socket(fd);
}

void send_all(const Socket& s, std::string_view data, Deadline deadline) {
  while (!data.empty()) {
    if (!wait_for(s.fd(), POLLOUT, deadline)) throw TimeoutError("send timed out");
    const ssize_t n = ::send(s.fd(), data.data(), data.size(), MSG_NOSIGNAL | MSG_DONTWAIT);
    if (n < 0) {
      if (errno == EAGAIN || errno == EWOULDBLOCK || errno == EINTR) continue;
      throw NetError(errno_text("send", errno));
    }
    data.remove_prefix(static_cast<std::size_t>(n));
  }
}

void shutdown_write(const Socket& s) { ::shutdown(s.fd(), SHUT_WR); }

namespace {

// One recv into `out`; returns false on orderly close.
bool recv_some(const Socket& s, std::string& out, Deadline deadline, std::size_t max_len) {
  char buf[16384];
  for (;;) {
    if (!wait_for(s.fd(), POLLIN, deadline)) throw TimeoutError("receive timed out");
    const ssize_t n = ::recv(s.fd(), buf, sizeof(buf), MSG_DONTWAIT);
    if (n < 0) {
      if (errno == EAGAIN || errno == EWOULDBLOCK || errno == EINTR) continue;
      throw NetError(errno_text("recv", errno));
    }
    if (n == 0) return false;
    out.append(buf, static_cast<std::size_t>(n));
    if (out.size() > max_len) throw NetError("message exceeds " + std::to_string(max_len) + " bytes");
    return true;
  }
}

}  // namespace

std::string read_line(const Socket& s, Deadline deadline, std::size_t max_len) {
  std::string out;
  std::size_t scanned = 0;
  for (;;) {
    const std::size_t nl = out.find('\n', scanned);
    if (nl != std::string::npos) {
      if (nl > max_len) throw NetError("line exceeds " + std::to_string(max_len) + " bytes");
      out.resize(nl);
      if (!out.empty() && out.back() == '\r') out.pop_back();
      return out;
    }
    scanned = out.size();
    if (!recv_some(s, out, deadline, max_len + 1)) {
      // A final unterminated line still counts.
      if (out.empty()) throw NetError("connection closed before end of line");
      if (out.back() == '\r') out.pop_back();
      return out;
    }
  }
}

std::string read_to_end(const Socket& s, Deadline deadline, std::size_t max_len) {
  std::string out;
  while (recv_some(s, out, deadline, max_len)) {
  }
  return out;
}

std::string exchange(const std::string& host, std::uint16_t port, std::string_view request,
                     std::chrono::milliseconds timeout, std::size_t max_reply) {
  const Deadline deadline = Clock::now() + timeout;
  Socket s = connect_tcp(host, port, deadline);
  send_all(s, request, deadline);
  shutdown_write(s);
  return read_to_end(s, deadline, max_reply);
}

}  // namespace gridsel::net
