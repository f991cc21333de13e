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

#include "fairproxy/domain.h"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <set>

namespace fairproxy {

std::string_view ErrorCodeName(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument:
      return "InvalidArgument";
    case ErrorCode::kAllZero:
      return "AllZero";
    case ErrorCode::kLengthMismatch:
      return "LengthMismatch";
    case ErrorCode::kMalformedRow:
      return "MalformedRow";
    case ErrorCode::kHeaderMismatch:
      return "HeaderMismatch";
    case ErrorCode::kDuplicateSurname:
      return "DuplicateSurname";
    case ErrorCode::kDuplicateGeo:
      return "DuplicateGeo";
    case ErrorCode::kZeroGeoRow:
      return "ZeroGeoRow";
    case ErrorCode::kInconsistentCovariateArity:
      return "InconsistentCovariateArity";
    case ErrorCode::kInvalidContext:
      return "InvalidContext";
    case ErrorCode::kUnknownRace:
      return "UnknownRace";
    case ErrorCode::kUnlabeledDataset:
      return "UnlabeledDataset";
    case ErrorCode::kUnknownGeo:
      return "UnknownGeo";
    case ErrorCode::kUnfittedContext:
      return "UnfittedContext";
    case ErrorCode::kNonFiniteFeature:
      return "NonFiniteFeature";
    case ErrorCode::kZeroMass:
      return "ZeroMass";
    case ErrorCode::kZeroDenominator:
      return "ZeroDenominator";
    case ErrorCode::kEmptyGroup:
      return "EmptyGroup";
    case ErrorCode::kEmptyContext:
      return "EmptyContext";
    case ErrorCode::kDegenerateBound:
      return "DegenerateBound";
    case ErrorCode::kInvalidConfig:
      return "InvalidConfig";
    case ErrorCode::kZeroMassEvent:
      return "ZeroMassEvent";
    case ErrorCode::kIo:
      return "Io";
  }
  return "Unknown";
}

Error::Error(ErrorCode code, const std::string& message)
    : std::runtime_error(std::string(ErrorCodeName(code)) + ": " + message),
      code_(code) {}

RaceSet::RaceSet(std::vector<std::string> labels) : labels_(std::move(labels)) {
  if (labels_.size() < 2) {
    throw Error(ErrorCode::kInvalidArgument,
                "a race set needs at least two categories");
  }
  std::set<std::string> seen;
  for (const auto& label : labels_) {
    if (label.empty()) {
      throw Error(ErrorCode::kInvalidArgument, "empty race label");
    }
    if (!seen.insert(label).second) {
      throw Error(ErrorCode::kInvalidArgument,
                  "duplicate race label '" + label + "'");
    }
  }
}

const std::string& RaceSet::label(std::size_t index) const {
  if (index >= labels_.size()) {
    throw Error(ErrorCode::kInvalidArgument, "race index out of range");
  }
  return labels_[index];
}

std::optional<std::size_t> RaceSet::IndexOf(std::string_view label) const {
  for (std::size_t i = 0; i < labels_.size(); ++i) {
    if (labels_[i] == label) return i;
  }
  return std::nullopt;
}

bool IsValidDistribution(std::span<const double> probs, double tolerance) {
  if (probs.empty()) return false;
  double total = 0.0;
  for (double p : probs) {
    if (!std::isfinite(p) || p < 0.0 || p > 1.0 + tolerance) return false;
    total += p;
  }
  return std::abs(total - 1.0) <= tolerance;
}

RaceDistribution::RaceDistribution(std::vector<double> probs)
    : probs_(std::move(probs)) {
  if (!IsValidDistribution(probs_)) {
    throw Error(ErrorCode::kInvalidArgument,
                "probability vector must have entries in [0,1] summing to 1");
  }
}

RaceDistribution RaceDistribution::Uniform(std::size_t num_races) {
  if (num_races == 0) {
    throw Error(ErrorCode::kInvalidArgument, "uniform over zero categories");
  }
  return RaceDistribution(
      std::vector<double>(num_races, 1.0 / static_cast<double>(num_races)));
}

RaceDistribution Normalize(std::span<const double> weights) {
  if (weights.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "cannot normalize empty vector");
  }
  double total = 0.0;
  for (double w : weights) {
    if (!std::isfinite(w) || w < 0.0) {
      throw Error(ErrorCode::kInvalidArgument,
                  "weights must be finite and nonnegative");
    }
    total += w;
  }
  if (total <= 0.0) {
    throw Error(ErrorCode::kAllZero, "every weight is zero");
  }
  std::vector<double> probs(weights.size());
  std::transform(weights.begin(), weights.end(), probs.begin(),
                 [total](double w) { return w / total; });
  return RaceDistribution(std::move(probs));
}

double L1Distance(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) {
    throw Error(ErrorCode::kLengthMismatch,
                "vectors of length " + std::to_string(a.size()) + " and " +
                    std::to_string(b.size()));
  }
  double distance = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) distance += std::abs(a[i] - b[i]);
  return distance;
}

double L1Distance(const RaceDistribution& a, const RaceDistribution& b) {
  return L1Distance(a.probs(), b.probs());
}

void CheckContext(int context) {
  if (context != 0 && context != 1) {
    throw Error(ErrorCode::kInvalidContext,
                "context must be 0 or 1, got " + std::to_string(context));
  }
}

std::string NormalizeName(std::string_view name) {
  std::size_t begin = 0;
  std::size_t end = name.size();
  while (begin < end && std::isspace(static_cast<unsigned char>(name[begin]))) {
    ++begin;
  }
  while (end > begin && std::isspace(static_cast<unsigned char>(name[end - 1]))) {
    --end;
  }
  std::string out(name.substr(begin, end - begin));
  for (char& c : out) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  return out;
}

}  // namespace fairproxy
