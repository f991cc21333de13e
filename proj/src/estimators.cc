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

#include "fairproxy/estimators.h"

#include <cmath>
#include <limits>
#include <string>

namespace fairproxy {
namespace {

double WeightAt(std::span<const double> weights, std::size_t i) {
  return weights.empty() ? 1.0 : weights[i];
}

void CheckWeights(std::span<const double> weights, std::size_t n) {
  if (!weights.empty() && weights.size() != n) {
    throw Error(ErrorCode::kLengthMismatch,
                "weights length " + std::to_string(weights.size()) +
                    " vs " + std::to_string(n) + " records");
  }
}

void CheckOutcomes(std::span<const int> outcomes, std::size_t n) {
  if (outcomes.size() != n) {
    throw Error(ErrorCode::kLengthMismatch,
                "outcomes length " + std::to_string(outcomes.size()) +
                    " vs " + std::to_string(n) + " records");
  }
}

}  // namespace

std::string_view ContextAveragingName(ContextAveraging averaging) {
  return averaging == ContextAveraging::kObservedContext ? "observed"
                                                         : "all-records";
}

ContextAveraging ParseContextAveraging(std::string_view name) {
  if (name == "observed") return ContextAveraging::kObservedContext;
  if (name == "all-records") return ContextAveraging::kAllRecords;
  throw Error(ErrorCode::kInvalidArgument,
              "context averaging must be 'observed' or 'all-records'");
}

ContextualPredictions::ContextualPredictions(std::size_t num_races)
    : num_races_(num_races) {
  if (num_races_ == 0) {
    throw Error(ErrorCode::kInvalidArgument, "zero races");
  }
}

void ContextualPredictions::Add(std::span<const double> at_context0,
                                std::span<const double> at_context1) {
  if (at_context0.size() != num_races_ || at_context1.size() != num_races_) {
    throw Error(ErrorCode::kLengthMismatch, "prediction row length");
  }
  values_[0].insert(values_[0].end(), at_context0.begin(), at_context0.end());
  values_[1].insert(values_[1].end(), at_context1.begin(), at_context1.end());
}

ContextualPredictions EvaluateBothContexts(
    const ContextualProxy& proxy, std::span<const AttributedRecord> records) {
  ContextualPredictions predictions(proxy.num_races());
  for (const auto& record : records) {
    predictions.Add(proxy.Evaluate(record, 0).probs(),
                    proxy.Evaluate(record, 1).probs());
  }
  return predictions;
}

std::vector<int> Outcomes(std::span<const AttributedRecord> records) {
  std::vector<int> outcomes;
  outcomes.reserve(records.size());
  for (const auto& record : records) outcomes.push_back(record.context);
  return outcomes;
}

double TruePositiveRate(std::span<const AttributedRecord> records,
                        std::size_t race, std::span<const double> weights) {
  CheckWeights(weights, records.size());
  double group = 0.0;
  double positive = 0.0;
  for (std::size_t i = 0; i < records.size(); ++i) {
    if (!records[i].race) {
      throw Error(ErrorCode::kUnlabeledDataset,
                  "record '" + records[i].id + "' has no race label");
    }
    if (*records[i].race != race) continue;
    const double w = WeightAt(weights, i);
    group += w;
    if (records[i].context == 1) positive += w;
  }
  if (group <= 0.0) {
    throw Error(ErrorCode::kEmptyGroup,
                "no records for race index " + std::to_string(race));
  }
  return positive / group;
}

double WeightedEstimate(std::span<const double> race_weights,
                        std::span<const int> outcomes,
                        std::span<const double> weights) {
  CheckOutcomes(outcomes, race_weights.size());
  CheckWeights(weights, race_weights.size());
  double mass = 0.0;
  double positive = 0.0;
  for (std::size_t i = 0; i < race_weights.size(); ++i) {
    const double m = race_weights[i] * WeightAt(weights, i);
    mass += m;
    if (outcomes[i] == 1) positive += m;
  }
  if (mass <= 0.0) {
    throw Error(ErrorCode::kZeroMass, "proxy assigns no mass to the race");
  }
  return positive / mass;
}

double WeightedEstimate(const ContextualPredictions& predictions,
                        std::span<const int> outcomes, std::size_t race,
                        std::span<const double> weights) {
  CheckOutcomes(outcomes, predictions.size());
  std::vector<double> race_weights(predictions.size());
  for (std::size_t i = 0; i < race_weights.size(); ++i) {
    CheckContext(outcomes[i]);
    race_weights[i] = predictions.At(i, outcomes[i], race);
  }
  return WeightedEstimate(race_weights, outcomes, weights);
}

ContextMeans ComputeContextMeans(const ContextualPredictions& predictions,
                                 std::span<const int> outcomes,
                                 std::size_t race, ContextAveraging averaging,
                                 std::span<const double> weights) {
  const std::size_t n = predictions.size();
  CheckOutcomes(outcomes, n);
  CheckWeights(weights, n);
  if (race >= predictions.num_races()) {
    throw Error(ErrorCode::kInvalidArgument, "race index out of range");
  }
  ContextMeans means;
  std::array<double, kNumContexts> sums{};
  std::array<double, kNumContexts> denominators{};
  for (std::size_t i = 0; i < n; ++i) {
    CheckContext(outcomes[i]);
    const double w = WeightAt(weights, i);
    means.count[outcomes[i]] += w;
    for (int y = 0; y < kNumContexts; ++y) {
      if (averaging == ContextAveraging::kObservedContext && outcomes[i] != y) {
        continue;
      }
      sums[y] += w * predictions.At(i, y, race);
      denominators[y] += w;
    }
  }
  for (int y = 0; y < kNumContexts; ++y) {
    means.omega_bar[y] = denominators[y] > 0.0 ? sums[y] / denominators[y] : 0.0;
  }
  return means;
}

double BayesEstimate(const ContextualPredictions& predictions,
                     std::span<const int> outcomes, std::size_t race,
                     ContextAveraging averaging,
                     std::span<const double> weights) {
  const ContextMeans means =
      ComputeContextMeans(predictions, outcomes, race, averaging, weights);
  const double numerator = means.omega_bar[1] * means.count[1];
  const double denominator = numerator + means.omega_bar[0] * means.count[0];
  if (!(denominator > 0.0)) {
    throw Error(ErrorCode::kZeroDenominator,
                "proxy assigns no mass to race index " + std::to_string(race));
  }
  return numerator / denominator;
}

std::string_view EstimatorKindName(EstimatorKind kind) {
  switch (kind) {
    case EstimatorKind::kTrue:
      return "true";
    case EstimatorKind::kWeighted:
      return "weighted";
    case EstimatorKind::kBayes:
      return "bayes";
  }
  return "unknown";
}

EstimatorKind ParseEstimatorKind(std::string_view name) {
  if (name == "true") return EstimatorKind::kTrue;
  if (name == "weighted") return EstimatorKind::kWeighted;
  if (name == "bayes") return EstimatorKind::kBayes;
  throw Error(ErrorCode::kInvalidArgument,
              "estimator must be one of true|weighted|bayes");
}

DisparityReport BuildReport(std::vector<double> estimates, EstimatorKind kind) {
  DisparityReport report;
  report.kind = kind;
  const std::size_t k = estimates.size();
  report.disparity.assign(k, std::vector<double>(k, 0.0));
  for (std::size_t a = 0; a < k; ++a) {
    for (std::size_t b = a + 1; b < k; ++b) {
      const double gap = std::abs(estimates[a] - estimates[b]);
      report.disparity[a][b] = gap;
      report.disparity[b][a] = gap;
    }
  }
  report.estimates = std::move(estimates);
  return report;
}

DisparityReport EstimateRates(EstimatorKind kind,
                              const ContextualPredictions* predictions,
                              std::span<const AttributedRecord> records,
                              std::size_t num_races, ContextAveraging averaging,
                              std::span<const double> weights) {
  if (kind != EstimatorKind::kTrue &&
      (predictions == nullptr || predictions->size() != records.size())) {
    throw Error(ErrorCode::kInvalidArgument,
                "proxy predictions required for every record");
  }
  const std::vector<int> outcomes = Outcomes(records);
  std::vector<double> estimates(num_races,
                                std::numeric_limits<double>::quiet_NaN());
  for (std::size_t r = 0; r < num_races; ++r) {
    try {
      switch (kind) {
        case EstimatorKind::kTrue:
          estimates[r] = TruePositiveRate(records, r, weights);
          break;
        case EstimatorKind::kWeighted:
          estimates[r] = WeightedEstimate(*predictions, outcomes, r, weights);
          break;
        case EstimatorKind::kBayes:
          estimates[r] =
              BayesEstimate(*predictions, outcomes, r, averaging, weights);
          break;
      }
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kEmptyGroup &&
          e.code() != ErrorCode::kZeroMass &&
          e.code() != ErrorCode::kZeroDenominator) {
        throw;
      }
    }
  }
  DisparityReport report = BuildReport(std::move(estimates), kind);
  bool labeled = !records.empty();
  for (std::size_t i = 0; i < records.size(); ++i) {
    const double w = weights.empty() ? 1.0 : weights[i];
    report.n += w;
    (records[i].context == 1 ? report.n_positive : report.n_negative) += w;
    labeled = labeled && records[i].race.has_value();
  }
  if (labeled) {
    report.group_sizes.assign(num_races, 0.0);
    for (std::size_t i = 0; i < records.size(); ++i) {
      report.group_sizes[*records[i].race] += weights.empty() ? 1.0 : weights[i];
    }
  }
  return report;
}

}  // namespace fairproxy
