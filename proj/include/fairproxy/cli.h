//
// Copyright 2026 The Fairproxy Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
//

// Command-line front end. Every subcommand writes its outputs plus a JSON
// run manifest next to the primary output.

#ifndef FAIRPROXY_CLI_H_
#define FAIRPROXY_CLI_H_

#include <iosfwd>
#include <string>
#include <vector>

#include "json.hpp"

namespace fairproxy::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 1;
inline constexpr int kExitIo = 2;

inline constexpr const char* kVersion = "1.0.0";

// Environment variable consulted when --seed is absent.
inline constexpr const char* kSeedEnv = "FAIRPROXY_SEED";

// args excludes the program name.
int Run(const std::vector<std::string>& args, std::ostream& out,
        std::ostream& err);

// Tidy "figure,group,method,x,y,size" rows from estimate and diagnose
// reports. An empty list gives the header alone.
std::string FigureDataCsv(const std::vector<nlohmann::json>& reports);

}  // namespace fairproxy::cli

#endif  // FAIRPROXY_CLI_H_
