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

// Core value types shared by every proxy and estimator: the race category
// set, probability vectors over it, attributed records, and the contextual
// proxy contract.

#ifndef FAIRPROXY_DOMAIN_H_
#define FAIRPROXY_DOMAIN_H_

#include <cstddef>
#include <initializer_list>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace fairproxy {

enum class ErrorCode {
  kInvalidArgument,
  kAllZero,
  kLengthMismatch,
  kMalformedRow,
  kHeaderMismatch,
  kDuplicateSurname,
  kDuplicateGeo,
  kZeroGeoRow,
  kInconsistentCovariateArity,
  kInvalidContext,
  kUnknownRace,
  kUnlabeledDataset,
  kUnknownGeo,
  kUnfittedContext,
  kNonFiniteFeature,
  kZeroMass,
  kZeroDenominator,
  kEmptyGroup,
  kEmptyContext,
  kDegenerateBound,
  kInvalidConfig,
  kZeroMassEvent,
  kIo,
};

std::string_view ErrorCodeName(ErrorCode code);

// All library failures are reported through this exception type. The code
// lets callers (the CLI in particular) map failures to exit statuses.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message);

  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

// Sum-to-one tolerance for every probability vector in the system.
inline constexpr double kDistributionTolerance = 1e-9;

// Binary context / decision outcome y.
inline constexpr int kNumContexts = 2;

// Ordered, fixed set of K >= 2 distinct race labels. Every probability vector
// index-aligns with this order.
class RaceSet {
 public:
  explicit RaceSet(std::vector<std::string> labels);
  RaceSet(std::initializer_list<std::string> labels)
      : RaceSet(std::vector<std::string>(labels)) {}

  std::size_t size() const { return labels_.size(); }
  const std::string& label(std::size_t index) const;
  const std::vector<std::string>& labels() const { return labels_; }
  std::optional<std::size_t> IndexOf(std::string_view label) const;

  friend bool operator==(const RaceSet&, const RaceSet&) = default;

 private:
  std::vector<std::string> labels_;
};

// Probability vector over the K race categories. Construction validates
// entries in [0,1] and sum 1 within kDistributionTolerance.
class RaceDistribution {
 public:
  explicit RaceDistribution(std::vector<double> probs);

  static RaceDistribution Uniform(std::size_t num_races);

  std::size_t size() const { return probs_.size(); }
  double operator[](std::size_t index) const { return probs_[index]; }
  std::span<const double> probs() const { return probs_; }
  const std::vector<double>& vector() const { return probs_; }

  friend bool operator==(const RaceDistribution&,
                         const RaceDistribution&) = default;

 private:
  std::vector<double> probs_;
};

// Checks the RaceDistribution invariant without constructing one.
bool IsValidDistribution(std::span<const double> probs,
                         double tolerance = kDistributionTolerance);

// Rescales nonnegative weights to sum to one. Throws kAllZero when every
// entry is zero and kInvalidArgument on negative or non-finite entries.
RaceDistribution Normalize(std::span<const double> weights);

// Sum of absolute coordinate differences, in [0, 2] for distributions.
double L1Distance(std::span<const double> a, std::span<const double> b);
double L1Distance(const RaceDistribution& a, const RaceDistribution& b);

// One supplemental-data row. An empty surname means "surname unavailable".
struct AttributedRecord {
  std::string id;
  std::string surname;
  std::string geo;
  int context = 0;
  std::vector<double> covariates;
  std::optional<std::size_t> race;
};

// Evaluator for omega(x, y): the race distribution for a record queried at
// context y. Implementations answer both contexts for every record, are
// deterministic, and are safe to call concurrently.
class ContextualProxy {
 public:
  virtual ~ContextualProxy() = default;

  virtual std::size_t num_races() const = 0;
  virtual RaceDistribution Evaluate(const AttributedRecord& record,
                                    int context) const = 0;
};

// Throws kInvalidContext unless context is 0 or 1.
void CheckContext(int context);

// Uppercases ASCII and trims surrounding whitespace.
std::string NormalizeName(std::string_view name);

}  // namespace fairproxy

#endif  // FAIRPROXY_DOMAIN_H_
