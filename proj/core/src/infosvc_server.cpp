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

#include <string>

#include "gridsel/infosvc.hpp"

namespace gridsel::infosvc {

namespace {
constexpr std::chrono::milliseconds kAcceptPoll{50};
}

Server::Server(InfoService& service, ServerOptions options)
    : service_(service), options_(options) {
  if (options_.workers == 0) options_.workers = 1;
}

Server::~Server() { stop(); }

void Server::start(const std::string& host, std::uint16_t port) {
  if (running_) throw std::logic_error("server already running");
  listener_ = net::listen_tcp(host, port);
  port_ = net::local_port(listener_);
  stopping_ = false;
  running_ = true;
  for (std::size_t i = 0; i < options_.workers; ++i) workers_.emplace_back([this] { worker_loop(); });
  acceptor_ = std::thread([this] { accept_loop(); });
}

void Server::stop() {
  if (!running_) return;
  stopping_ = true;
  if (acceptor_.joinable()) acceptor_.join();
  listener_.close();
  queue_cv_.notify_all();
  for (auto& w : workers_) w.join();
  workers_.clear();
  running_ = false;
}

void Server::accept_loop() {
  while (!stopping_) {
    net::Socket s;
    try {
      s = net::accept_for(listener_, kAcceptPoll);
    } catch (const net::NetError&) {
      // Typically descriptor exhaustion; back off and keep serving.
      std::this_thread::sleep_for(kAcceptPoll);
      continue;
    }
    if (!s.valid()) continue;
    {
      std::lock_guard lock(queue_mu_);
      queue_.push_back(std::move(s));
    }
    queue_cv_.notify_one();
  }
}

void Server::worker_loop() {
  for (;;) {
    net::Socket s;
    {
      std::unique_lock lock(queue_mu_);
      queue_cv_.wait(lock, [this] { return !queue_.empty() || stopping_; });
      // Drain whatever was accepted before exiting.
      if (queue_.empty()) return;
      s = std::move(queue_.front());
      queue_.pop_front();
    }
    serve_one(std::move(s));
  }
}

void Server::serve_one(net::Socket s) {
  const auto deadline = net::Clock::now() + options_.io_timeout;
  std::string response;
  try {
    const std::string line = net::read_line(s, deadline, kMaxRequestLine);
    response = service_.handle_query(line);
  } catch (const net::TimeoutError&) {
    return;
  } catch (const net::NetError& e) {
    if (std::string_view(e.what()).find("exceeds") == std::string_view::npos) return;
    response = "ERR request too long\n";
  }
  try {
    net::send_all(s, response, deadline);
    net::shutdown_write(s);
  } catch (const net::NetError&) {
    // Client went away.
  }
}

}  // namespace gridsel::infosvc
