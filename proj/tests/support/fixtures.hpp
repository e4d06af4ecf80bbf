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

#ifndef GRIDSEL_TESTS_SUPPORT_FIXTURES_HPP
#define GRIDSEL_TESTS_SUPPORT_FIXTURES_HPP

namespace gridsel::fixtures {

// The storage volume ad on hugo and the application request from comet.
inline constexpr const char* kHugoStorageAd =
    "hostname = \"hugo.mcs.anl.gov\";\n"
    "volume = \"/dev/sandbox\";\n"
    "availableSpace = 50G;\n"
    "MaxRDBandwidth = 75K/Sec;\n"
    "requirement = other.reqdSpace < 10G\n"
    "    && other.reqdRDBandwidth < 75K/Sec;\n";

inline constexpr const char* kHugoPolicy =
    "other.reqdSpace < 10G && other.reqdRDBandwidth < 75K/Sec";

inline constexpr const char* kCometRequestAd =
    "hostname = \"comet.xyz.com\";\n"
    "reqdSpace = 5G;\n"
    "reqdRDBandwidth = 50K/Sec;\n"
    "rank = other.availableSpace;\n"
    "requirement = other.availableSpace > 5G\n"
    "    && other.MaxRDBandwidth > 50K/Sec;\n";

}  // namespace gridsel::fixtures

#endif  // GRIDSEL_TESTS_SUPPORT_FIXTURES_HPP
