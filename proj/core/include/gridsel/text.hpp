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

#ifndef GRIDSEL_TEXT_HPP
#define GRIDSEL_TEXT_HPP

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace gridsel {

std::string to_lower(std::string_view s);
bool iequals(std::string_view a, std::string_view b);
/// Case-insensitive lexicographic three-way compare (<0, 0, >0).
int icompare(std::string_view a, std::string_view b);

std::string_view trim(std::string_view s);
std::vector<std::string_view> split(std::string_view s, char sep);

/// Shortest decimal form that parses back to exactly `v`.
std::string format_shortest(double v);

/// Strict full-string parse of a decimal or scientific number.
std::optional<double> parse_double(std::string_view s);

/// Host part of a URL or bare host[:port][/path] string.
std::string host_of(std::string_view url);

}  // namespace gridsel

#endif  // GRIDSEL_TEXT_HPP
