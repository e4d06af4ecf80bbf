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

#include "gridsel/catalog.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <system_error>

#include "gridsel/text.hpp"

namespace gridsel::catalog {

namespace {

bool has_control(std::string_view s) {
  for (char c : s) {
    if (static_cast<unsigned char>(c) < 0x20 || c == 0x7f) return true;
  }
  return false;
}

void write_file(const std::filesystem::path& path, const std::string& contents) {
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    out << contents;
    out.flush();
    if (!out) throw CatalogError("cannot write catalog file '" + tmp.string() + "'");
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    throw CatalogError("cannot replace catalog file '" + path.string() + "'");
  }
}

}  // namespace

std::string Endpoint::str() const { return host + ":" + std::to_string(port); }

Endpoint Endpoint::parse(std::string_view text) {
  const std::size_t colon = text.rfind(':');
  if (colon == std::string_view::npos || colon == 0) {
    throw std::invalid_argument("expected host:port, got '" + std::string(text) + "'");
  }
  const std::string_view host = text.substr(0, colon);
  const std::string_view port = text.substr(colon + 1);
  unsigned value = 0;
  const auto res = std::from_chars(port.data(), port.data() + port.size(), value);
  if (res.ec != std::errc() || res.ptr != port.data() + port.size() || value == 0 ||
      value > 65535) {
    throw std::invalid_argument("bad port in '" + std::string(text) + "'");
  }
  if (has_control(host) || host.find(' ') != std::string_view::npos) {
    throw std::invalid_argument("bad host in '" + std::string(text) + "'");
  }
  return {std::string(host), static_cast<std::uint16_t>(value)};
}

std::optional<std::string> check(std::string_view logical, const ReplicaLocation& loc) {
  if (logical.empty()) return "empty logical name";
  if (has_control(logical)) return "logical name contains a control character";
  if (loc.hostname.empty()) return "empty hostname";
  if (has_control(loc.hostname) || loc.hostname.find(' ') != std::string::npos) {
    return "bad hostname";
  }
  if (loc.path.empty() || loc.path.front() != '/') return "path is not absolute";
  if (has_control(loc.path)) return "path contains a control character";
  if (loc.infoservice.host.empty() || loc.infoservice.port == 0) {
    return "missing information service address";
  }
  if (has_control(loc.infoservice.host) || loc.infoservice.host.find(' ') != std::string::npos) {
    return "bad information service host";
  }
  if (has_control(loc.protocol)) return "protocol contains a control character";
  return std::nullopt;
}

Catalog::Catalog() : current_(std::make_shared<const Map>()) {}

Catalog::Catalog(std::filesystem::path file) : Catalog() {
  file_ = std::move(file);
  std::error_code ec;
  if (!std::filesystem::exists(*file_, ec)) return;
  std::ifstream in(*file_, std::ios::binary);
  if (!in) throw CatalogError("cannot read catalog file '" + file_->string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  current_ = std::make_shared<const Map>(parse(buf.str()));
}

std::shared_ptr<const Catalog::Map> Catalog::snapshot() const {
  std::lock_guard lock(snap_mu_);
  return current_;
}

void Catalog::publish(std::shared_ptr<const Map> next) {
  std::lock_guard lock(snap_mu_);
  current_ = std::move(next);
}

bool Catalog::add(std::string_view logical, const ReplicaLocation& loc) {
  if (auto why = check(logical, loc)) throw std::invalid_argument("invalid replica: " + *why);
  std::lock_guard lock(write_mu_);
  auto next = std::make_shared<Map>(*snapshot());
  auto& replicas = (*next)[std::string(logical)];
  if (!replicas.emplace(Key{loc.hostname, loc.path}, loc).second) return false;
  if (file_) write_file(*file_, serialize(*next));
  publish(std::move(next));
  return true;
}

bool Catalog::remove(std::string_view logical, const ReplicaLocation& loc) {
  std::lock_guard lock(write_mu_);
  const auto cur = snapshot();
  const auto it = cur->find(logical);
  if (it == cur->end() || !it->second.contains(Key{loc.hostname, loc.path})) return false;
  auto next = std::make_shared<Map>(*cur);
  auto& replicas = next->find(logical)->second;
  replicas.erase(Key{loc.hostname, loc.path});
  if (replicas.empty()) next->erase(next->find(logical));
  if (file_) write_file(*file_, serialize(*next));
  publish(std::move(next));
  return true;
}

std::vector<ReplicaLocation> Catalog::lookup(std::string_view logical) const {
  const auto cur = snapshot();
  std::vector<ReplicaLocation> out;
  if (const auto it = cur->find(logical); it != cur->end()) {
    for (const auto& [key, loc] : it->second) out.push_back(loc);
  }
  return out;
}

std::vector<std::string> Catalog::logical_names() const {
  const auto cur = snapshot();
  std::vector<std::string> out;
  for (const auto& [name, replicas] : *cur) out.push_back(name);
  return out;
}

std::size_t Catalog::size() const {
  const auto cur = snapshot();
  std::size_t n = 0;
  for (const auto& [name, replicas] : *cur) n += replicas.size();
  return n;
}

std::string Catalog::serialize() const { return serialize(*snapshot()); }

void Catalog::replace(std::string_view text) {
  auto next = std::make_shared<const Map>(parse(text));
  std::lock_guard lock(write_mu_);
  publish(std::move(next));
}

std::string Catalog::serialize(const Map& m) {
  std::string out;
  for (const auto& [logical, replicas] : m) {
    for (const auto& [key, loc] : replicas) {
      out += logical;
      out += '\t';
      out += loc.hostname;
      out += '\t';
      out += loc.infoservice.str();
      out += '\t';
      out += loc.path;
      out += '\t';
      out += loc.protocol;
      out += '\n';
    }
  }
  return out;
}

Catalog::Map Catalog::parse(std::string_view text) {
  Map m;
  std::size_t line_no = 0;
  for (std::string_view line : split(text, '\n')) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (trim(line).empty() || line.front() == '#') continue;
    const auto fail = [line_no](const std::string& what) {
      throw CatalogError("catalog line " + std::to_string(line_no) + ": " + what);
    };
    const auto fields = split(line, '\t');
    if (fields.size() != 4 && fields.size() != 5) {
      fail("expected 4 or 5 tab-separated fields");
    }
    ReplicaLocation loc;
    loc.hostname = std::string(fields[1]);
    try {
      loc.infoservice = Endpoint::parse(fields[2]);
    } catch (const std::invalid_argument& e) {
      fail(e.what());
    }
    loc.path = std::string(fields[3]);
    if (fields.size() == 5) loc.protocol = std::string(fields[4]);
    if (auto why = check(fields[0], loc)) fail(*why);
    m[std::string(fields[0])].emplace(Key{loc.hostname, loc.path}, std::move(loc));
  }
  return m;
}

}  // namespace gridsel::catalog
