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

#include <cmath>
#include <variant>

#include <json.hpp>

#include "gridsel/broker.hpp"

namespace gridsel::broker {

namespace {

using nlohmann::json;

json location(const catalog::ReplicaLocation& l) {
  return {{"hostname", l.hostname},
          {"infoservice", l.infoservice.str()},
          {"path", l.path},
          {"protocol", l.protocol}};
}

json value(const classad::Value& v) {
  if (v.is_boolean()) return v.as_boolean();
  if (v.is_integer()) return v.as_integer();
  if (v.is_real()) {
    const double d = v.as_real();
    if (std::isfinite(d)) return d;
  }
  if (v.is_text()) return v.as_text();
  return v.to_string();  // undefined, error, non-finite
}

json failures(const std::vector<std::pair<catalog::ReplicaLocation, std::string>>& fs) {
  json out = json::array();
  for (const auto& [loc, why] : fs) out.push_back({{"replica", location(loc)}, {"error", why}});
  return out;
}

}  // namespace

std::string to_json(const Selection& selection) {
  const SelectionResult& r = selection.result;
  json j;
  j["logical"] = r.logical;
  const auto chosen = r.chosen();
  j["chosen"] = chosen ? location(*chosen) : json(nullptr);

  json candidates = json::array();
  for (const auto& c : r.candidates) {
    json e = location(c.location);
    e["status"] = std::string(to_string(c.status));
    e["detail"] = c.detail;
    e["requests"] = c.requests;
    if (c.ad) {
      json attrs = json::object();
      const classad::ClassAd none;
      for (const auto& a : c.ad->attributes()) {
        // Expressions stay as text; they may only make sense against a requester.
        attrs[a.name] = std::holds_alternative<classad::Literal>(a.expr->node)
                            ? value(classad::evaluate_attribute(a.name, {*c.ad, none}))
                            : json(classad::to_string(*a.expr));
      }
      e["ad"] = std::move(attrs);
    } else {
      e["ad"] = nullptr;
    }
    candidates.push_back(std::move(e));
  }
  j["candidates"] = std::move(candidates);

  json ranked = json::array();
  for (const auto& e : r.ranked) {
    ranked.push_back({{"candidate", e.candidate},
                      {"hostname", r.candidates.at(e.candidate).location.hostname},
                      {"rank", e.rank},
                      {"requester_requirement", value(e.match.self_requirement)},
                      {"replica_requirement", value(e.match.other_requirement)}});
  }
  j["ranked"] = std::move(ranked);

  json excluded = json::array();
  for (const auto& x : r.excluded) {
    excluded.push_back({{"candidate", x.candidate},
                        {"hostname", r.candidates.at(x.candidate).location.hostname},
                        {"reason", x.reason}});
  }
  j["excluded"] = std::move(excluded);

  j["timings_ms"] = {{"search", r.timings.search.count()},
                     {"match", r.timings.match.count()},
                     {"access", r.timings.access.count()}};

  if (selection.transfer) {
    const auto& t = *selection.transfer;
    j["transfer"] = {{"ok", true},
                     {"replica", location(t.replica)},
                     {"position", t.position},
                     {"bytes", t.result.bytes},
                     {"seconds", t.result.seconds},
                     {"failures", failures(t.failures)}};
  } else if (!selection.transfer_error.empty()) {
    j["transfer"] = {{"ok", false}, {"error", selection.transfer_error}};
  } else {
    j["transfer"] = nullptr;
  }
  return j.dump(2);
}

}  // namespace gridsel::broker
