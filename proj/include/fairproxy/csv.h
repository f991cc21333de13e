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

// Minimal comma-separated text helpers for the table formats used here.
// Fields never contain commas, so no quoting is written; double-quoted fields
// are accepted on input.

#ifndef FAIRPROXY_CSV_H_
#define FAIRPROXY_CSV_H_

#include <string>
#include <string_view>
#include <vector>

namespace fairproxy::csv {

using Row = std::vector<std::string>;

std::vector<std::string> SplitLine(std::string_view line);

// Reads every non-blank line. Throws Error(kIo) when the file can't be opened.
std::vector<Row> ReadFile(const std::string& path);
std::vector<Row> ParseText(std::string_view text);

std::string JoinRow(const std::vector<std::string>& fields);

void WriteFile(const std::string& path, std::string_view content);

// "%.*g" formatting with the given number of significant digits.
std::string FormatDouble(double value, int significant_digits);

// Integral values print without a decimal point; others use 17 digits.
std::string FormatCount(double value);

// Strict decimal parse of the whole field. Returns false on trailing junk,
// empty input or non-finite values.
bool ParseDouble(std::string_view field, double* out);

}  // namespace fairproxy::csv

#endif  // FAIRPROXY_CSV_H_
