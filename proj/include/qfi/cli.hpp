// Copyright 2026 The qfilab Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef QFI_CLI_HPP
#define QFI_CLI_HPP

#include <iosfwd>
#include <string>
#include <vector>

#include "qfi/core.hpp"

namespace qfi {

constexpr int kExitOk = 0;
constexpr int kExitValidation = 2;
constexpr int kExitResource = 3;
constexpr int kExitNumerical = 4;

int exit_code_for(ErrorCode code);

/// Parses "start:stop:step" (inclusive) or a comma list.
std::vector<double> parse_grid(const std::string &spec);

/// Formats a double for CSV: shortest round-trip form, "nan"/"inf" spelled out.
std::string csv_number(double v);

/// Entry point shared by the executable and the tests; args excludes argv[0].
int run_cli(const std::vector<std::string> &args, std::ostream &out, std::ostream &err);

}  // namespace qfi

#endif
