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

#include <algorithm>
#include <cmath>

#include "gridsel/classad.hpp"
#include "gridsel/text.hpp"

namespace gridsel::classad {

namespace {

Value requirement_of(const MatchContext& ctx) {
  if (!ctx.self.contains("requirement")) return Value::boolean(true);
  return evaluate_attribute("requirement", ctx);
}

std::string text_attribute(const ClassAd& ad, std::string_view name,
                           const ClassAd& other) {
  Value v = evaluate_attribute(name, MatchContext{ad, other});
  return v.is_text() ? v.as_text() : std::string();
}

template <typename Fn>
void walk(const Expr& e, Fn&& fn) {
  std::visit(
      [&](const auto& n) {
        using T = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<T, AttrRef>) {
          fn(n);
        } else if constexpr (std::is_same_v<T, Unary>) {
          walk(*n.operand, fn);
        } else if constexpr (std::is_same_v<T, Binary>) {
          walk(*n.lhs, fn);
          walk(*n.rhs, fn);
        }
      },
      e.node);
}

void add_unique(std::vector<std::string>& names, const std::string& name) {
  const auto same = [&](const std::string& n) { return iequals(n, name); };
  if (std::none_of(names.begin(), names.end(), same)) names.push_back(name);
}

}  // namespace

MatchResult match_ads(const ClassAd& a, const ClassAd& b) {
  MatchResult r;
  const MatchContext ab{a, b};
  r.self_requirement = requirement_of(ab);
  r.other_requirement = requirement_of(ab.swapped());
  r.matched = r.self_requirement.is_true() && r.other_requirement.is_true();
  r.rank = evaluate_attribute("rank", ab);
  return r;
}

double rank_key(const Value& rank) {
  const auto n = rank.number();
  if (!n || std::isnan(*n)) return 0.0;
  return *n;
}

std::vector<RankedCandidate> rank_candidates(const ClassAd& requester,
                                             std::span<const ClassAd> candidates) {
  struct Keyed {
    RankedCandidate c;
    std::string hostname;
    std::string volume;
  };
  std::vector<Keyed> keyed;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    MatchResult m = match_ads(requester, candidates[i]);
    if (!m.matched) continue;
    const double rank = rank_key(m.rank);
    keyed.push_back({RankedCandidate{i, std::move(m), rank},
                     text_attribute(candidates[i], "hostname", requester),
                     text_attribute(candidates[i], "volume", requester)});
  }
  std::stable_sort(keyed.begin(), keyed.end(), [](const Keyed& x, const Keyed& y) {
    if (x.c.rank != y.c.rank) return x.c.rank > y.c.rank;
    if (const int h = icompare(x.hostname, y.hostname); h != 0) return h < 0;
    return x.volume < y.volume;
  });
  std::vector<RankedCandidate> out;
  out.reserve(keyed.size());
  for (auto& k : keyed) out.push_back(std::move(k.c));
  return out;
}

std::vector<std::string> referenced_self_attributes(const Expr& expr) {
  std::vector<std::string> names;
  walk(expr, [&](const AttrRef& r) {
    if (r.scope == Scope::kSelf) add_unique(names, r.name);
  });
  return names;
}

std::vector<std::string> referenced_other_attributes(
    const ClassAd& ad, std::span<const std::string_view> roots) {
  std::vector<std::string> others;
  std::vector<std::string> visited;
  std::vector<std::string> pending(roots.rbegin(), roots.rend());
  while (!pending.empty()) {
    const std::string name = std::move(pending.back());
    pending.pop_back();
    const std::string key = canonical_name(name);
    if (std::find(visited.begin(), visited.end(), key) != visited.end()) continue;
    visited.push_back(key);
    const Expr* e = ad.find(name);
    if (e == nullptr) continue;
    // Collect in source order so the projection is deterministic.
    std::vector<std::string> local_self;
    walk(*e, [&](const AttrRef& r) {
      if (r.scope == Scope::kOther) {
        add_unique(others, r.name);
      } else {
        local_self.push_back(r.name);
      }
    });
    for (auto it = local_self.rbegin(); it != local_self.rend(); ++it) {
      pending.push_back(*it);
    }
  }
  return others;
}

}  // namespace gridsel::classad
