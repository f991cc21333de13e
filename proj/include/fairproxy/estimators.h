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

// Group positive-rate estimators: the labeled ground truth, the
// proxy-weighted estimator and the Bayes estimator for contextual proxies.
//
// Every estimator accepts optional per-record weights. Unit weights give the
// usual finite-sample estimators; probability masses from an enumerated joint
// table give the population-level values.

#ifndef FAIRPROXY_ESTIMATORS_H_
#define FAIRPROXY_ESTIMATORS_H_

#include <array>
#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

#include "fairproxy/domain.h"

namespace fairproxy {

// How the Bayes estimator averages omega(., y) for each context y.
enum class ContextAveraging {
  // Mean over records observed at context y: estimates E[omega(X,y) | f=y].
  kObservedContext,
  // Mean over all records, including counterfactual queries at the context a
  // record was not observed in: estimates E_X[omega(X,y)].
  kAllRecords,
};

std::string_view ContextAveragingName(ContextAveraging averaging);
ContextAveraging ParseContextAveraging(std::string_view name);

// omega(x_i, y) at both contexts for every record, row-major n x K.
class ContextualPredictions {
 public:
  explicit ContextualPredictions(std::size_t num_races);

  void Add(std::span<const double> at_context0,
           std::span<const double> at_context1);

  std::size_t size() const { return values_[0].size() / num_races_; }
  std::size_t num_races() const { return num_races_; }
  double At(std::size_t record, int context, std::size_t race) const {
    return values_[context][record * num_races_ + race];
  }
  std::span<const double> Row(std::size_t record, int context) const {
    return std::span<const double>(values_[context])
        .subspan(record * num_races_, num_races_);
  }

 private:
  std::size_t num_races_;
  std::array<std::vector<double>, kNumContexts> values_;
};

ContextualPredictions EvaluateBothContexts(
    const ContextualProxy& proxy, std::span<const AttributedRecord> records);

std::vector<int> Outcomes(std::span<const AttributedRecord> records);

// #{i: y_i=1, r_i=r} / #{i: r_i=r}. Throws kUnlabeledDataset if any record
// lacks a race, kEmptyGroup if race r has no mass.
double TruePositiveRate(std::span<const AttributedRecord> records,
                        std::size_t race,
                        std::span<const double> weights = {});

// sum_i rho_r(x_i) f(x_i) / sum_i rho_r(x_i). Throws kZeroMass.
double WeightedEstimate(std::span<const double> race_weights,
                        std::span<const int> outcomes,
                        std::span<const double> weights = {});

// Weighted estimator using omega at each record's observed context.
double WeightedEstimate(const ContextualPredictions& predictions,
                        std::span<const int> outcomes, std::size_t race,
                        std::span<const double> weights = {});

// Per-context averages of omega_r and the outcome counts n_y.
struct ContextMeans {
  std::array<double, kNumContexts> omega_bar{};
  std::array<double, kNumContexts> count{};
};

ContextMeans ComputeContextMeans(const ContextualPredictions& predictions,
                                 std::span<const int> outcomes,
                                 std::size_t race, ContextAveraging averaging,
                                 std::span<const double> weights = {});

// omega_bar_1 n_1 / sum_y omega_bar_y n_y. Throws kZeroDenominator.
double BayesEstimate(const ContextualPredictions& predictions,
                     std::span<const int> outcomes, std::size_t race,
                     ContextAveraging averaging =
                         ContextAveraging::kObservedContext,
                     std::span<const double> weights = {});

enum class EstimatorKind { kTrue, kWeighted, kBayes };

std::string_view EstimatorKindName(EstimatorKind kind);
EstimatorKind ParseEstimatorKind(std::string_view name);

struct DisparityReport {
  EstimatorKind kind = EstimatorKind::kTrue;
  // mu-hat(r) per race; NaN where the estimator is undefined (empty group).
  std::vector<double> estimates;
  // |mu-hat(r) - mu-hat(r')|, symmetric with zero diagonal.
  std::vector<std::vector<double>> disparity;
  double n = 0.0;
  double n_positive = 0.0;
  double n_negative = 0.0;
  // Labeled group sizes; empty unless the data carried race labels.
  std::vector<double> group_sizes;
};

DisparityReport BuildReport(std::vector<double> estimates, EstimatorKind kind);

// Runs one estimator for every race. `predictions` may be null for kTrue.
DisparityReport EstimateRates(EstimatorKind kind,
                              const ContextualPredictions* predictions,
                              std::span<const AttributedRecord> records,
                              std::size_t num_races,
                              ContextAveraging averaging =
                                  ContextAveraging::kObservedContext,
                              std::span<const double> weights = {});

}  // namespace fairproxy

#endif  // FAIRPROXY_ESTIMATORS_H_
