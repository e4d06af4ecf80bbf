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

#ifndef GRIDSEL_SRC_SCHEMA_NAMES_HPP
#define GRIDSEL_SRC_SCHEMA_NAMES_HPP

#include <array>
#include <string_view>

namespace gridsel::schema::names {

// Lowercase attribute names in declaration order.
inline constexpr std::array<std::string_view, 10> kVolume = {
    "hostname", "volume", "totalspace", "availablespace", "mountpoint",
    "disktransferrate", "drdtime", "dwrtime", "requirements", "filesystem"};

inline constexpr std::array<std::string_view, 8> kBandwidth = {
    "maxrdbandwidth", "minrdbandwidth", "avgrdbandwidth",
    "maxwrbandwidth", "minwrbandwidth", "avgwrbandwidth",
    "stddevrdbandwidth", "stddevwrbandwidth"};

inline constexpr std::array<std::string_view, 5> kSource = {
    "sourceurl", "lastrdbandwidth", "lastrdurl", "lastwrbandwidth", "lastwrurl"};

// Reserved on every entry.
inline constexpr std::array<std::string_view, 2> kStructural = {"dn", "objectclass"};

}  // namespace gridsel::schema::names

#endif  // GRIDSEL_SRC_SCHEMA_NAMES_HPP
