// Copyright 2026 The mgsim2 Authors
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

#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace mgsim2::cli {

inline constexpr int kExitCompleted = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitDeadlock = 2;
inline constexpr int kExitFault = 3;
inline constexpr int kExitUsage = 64;

// Entry point of the driver; args exclude the program name.
int main(const std::vector<std::string>& args, std::ostream& out,
         std::ostream& err);

}  // namespace mgsim2::cli
