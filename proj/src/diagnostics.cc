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

#include "fairproxy/diagnostics.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <random>

#include "fairproxy/cbisg.h"

namespace fairproxy {
namespace {

// Slack for floating-point evaluation of exact population identities.
constexpr double kNumericSlack = 1e-12;

double WeightAt(std::span<const double> weights, std::size_t i) {
  return weights.empty() ? 1.0 : weights[i];
}

void CheckLabeled(std::span<const AttributedRecord> records) {
  for (const auto& record : records) {
    if (!record.race) {
      throw Error(ErrorCode::kUnlabeledDataset,
                  "record '" + record.id + "' has no race label");
    }
  }
}

void CheckSizes(const ContextualPredictions& predictions,
                std::span<const AttributedRecord> records,
                std::span<const double> weights) {
  if (predictions.size() != records.size() ||
      (!weights.empty() && weights.size() != records.size())) {
    throw Error(ErrorCode::kLengthMismatch,
                "predictions, records and weights must align");
  }
}

}  // namespace

double ConsistencyViolation(const ContextualPredictions& predictions,
                            std::span<const AttributedRecord> records,
                            std::size_t race, int context,
                            ContextAveraging averaging,
                            std::span<const double> weights) {
  CheckContext(context);
  CheckSizes(predictions, records, weights);
  CheckLabeled(records);
  const std::vector<int> outcomes = Outcomes(records);
  const ContextMeans means =
      ComputeContextMeans(predictions, outcomes, race, averaging, weights);
  if (!(means.count[context] > 0.0)) {
    throw Error(ErrorCode::kEmptyContext,
                "no records at context " + std::to_string(context));
  }
  double in_group = 0.0;
  for (std::size_t i = 0; i < records.size(); ++i) {
    if (records[i].context == context && *records[i].race == race) {
      in_group += WeightAt(weights, i);
    }
  }
  return std::abs(means.omega_bar[context] - in_group / means.count[context]);
}

ConsistencyReport MeasureConsistency(const ContextualPredictions& predictions,
                                     std::span<const AttributedRecord> records,
                                     std::size_t num_races,
                                     ContextAveraging averaging,
                                     std::span<const double> weights) {
  CheckSizes(predictions, records, weights);
  CheckLabeled(records);
  if (predictions.num_races() != num_races) {
    throw Error(ErrorCode::kLengthMismatch, "prediction width vs race count");
  }
  const std::vector<int> outcomes = Outcomes(records);
  ConsistencyReport report;
  report.averaging = averaging;
  std::array<double, kNumContexts> count{};
  std::vector<std::array<double, 2>> joint(num_races, {0.0, 0.0});
  for (std::size_t i = 0; i < records.size(); ++i) {
    const double w = WeightAt(weights, i);
    count[records[i].context] += w;
    joint[*records[i].race][records[i].context] += w;
  }
  for (int y = 0; y < kNumContexts; ++y) {
    if (!(count[y] > 0.0)) {
      throw Error(ErrorCode::kEmptyContext,
                  "no records at context " + std::to_string(y));
    }
  }
  report.n = count[0] + count[1];
  report.nu = count[1] / report.n;
  for (std::size_t r = 0; r < num_races; ++r) {
    const ContextMeans means =
        ComputeContextMeans(predictions, outcomes, r, averaging, weights);
    std::array<double, 2> phi{};
    std::array<double, 2> violation{};
    for (int y = 0; y < kNumContexts; ++y) {
      phi[y] = joint[r][y] / count[y];
      violation[y] = std::abs(means.omega_bar[y] - phi[y]);
    }
    const double theta = (joint[r][0] + joint[r][1]) / report.n;
    const double rho = (1.0 - report.nu) * means.omega_bar[0] +
                       report.nu * means.omega_bar[1];
    report.theta.push_back(theta);
    report.rho.push_back(rho);
    report.gamma.push_back(std::abs(rho - theta));
    report.omega_bar.push_back(means.omega_bar);
    report.phi.push_back(phi);
    report.violation.push_back(violation);
  }
  return report;
}

std::vector<ViolationBin> BinnedViolationProfile(
    const ContextualPredictions& predictions,
    std::span<const AttributedRecord> records, std::size_t race, int context,
    int bins, std::span<const double> weights) {
  CheckContext(context);
  if (bins < 2) {
    throw Error(ErrorCode::kInvalidArgument, "need at least 2 bins");
  }
  CheckSizes(predictions, records, weights);
  CheckLabeled(records);
  if (race >= predictions.num_races()) {
    throw Error(ErrorCode::kInvalidArgument, "race index out of range");
  }
  struct GeoSums {
    double total = 0.0;
    double in_group = 0.0;
    double proxy = 0.0;
  };
  std::map<std::string, GeoSums> geos;
  for (std::size_t i = 0; i < records.size(); ++i) {
    if (records[i].context != context) continue;
    const double w = WeightAt(weights, i);
    if (!(w > 0.0)) continue;
    GeoSums& sums = geos[records[i].geo];
    sums.total += w;
    if (*records[i].race == race) sums.in_group += w;
    sums.proxy += w * predictions.At(i, context, race);
  }
  if (geos.empty()) {
    throw Error(ErrorCode::kEmptyContext,
                "no records at context " + std::to_string(context));
  }
  std::vector<ViolationBin> profile(bins);
  std::vector<GeoSums> pooled(bins);
  const double width = 1.0 / bins;
  for (int b = 0; b < bins; ++b) {
    profile[b].lower = b * width;
    profile[b].upper = (b + 1) * width;
    profile[b].center = (b + 0.5) * width;
  }
  for (const auto& [geo, sums] : geos) {
    const double rate = sums.in_group / sums.total;
    const int b = std::min(bins - 1, static_cast<int>(std::floor(rate * bins)));
    profile[b].num_geos += 1;
    pooled[b].total += sums.total;
    pooled[b].in_group += sums.in_group;
    pooled[b].proxy += sums.proxy;
  }
  for (int b = 0; b < bins; ++b) {
    profile[b].num_records = pooled[b].total;
    if (pooled[b].total > 0.0) {
      profile[b].violation =
          std::abs(pooled[b].proxy - pooled[b].in_group) / pooled[b].total;
    }
  }
  return profile;
}

double SufficientConsistencyBound(double epsilon, double theta, double nu,
                                  double gamma, double omega_bar) {
  if (!(nu > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "nu must be positive");
  }
  if (!(theta > gamma)) {
    throw Error(ErrorCode::kDegenerateBound, "theta <= gamma");
  }
  const double bound =
      epsilon * theta / nu - omega_bar * gamma / (theta - gamma);
  if (bound < 0.0) {
    throw Error(ErrorCode::kDegenerateBound, "negative consistency bound");
  }
  return bound;
}

double NecessaryConsistencyBound(double epsilon, double theta, double nu,
                                 double gamma, double mu_bayes) {
  if (!(nu > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "nu must be positive");
  }
  return epsilon * theta / nu + gamma * mu_bayes / nu;
}

double WeightedBiasOracle(const JointTable& table, std::size_t race) {
  if (race >= table.num_races()) {
    throw Error(ErrorCode::kInvalidArgument, "race index out of range");
  }
  const std::size_t k = table.num_races();
  double expected_cov = 0.0;
  for (std::size_t g = 0; g < table.num_geos(); ++g) {
    for (std::size_t s = 0; s < table.num_surnames(); ++s) {
      double cell = 0.0;
      double positive = 0.0;
      for (std::size_t r = 0; r < k; ++r) {
        cell += table.mass(r, g, s, 0) + table.mass(r, g, s, 1);
        positive += table.mass(r, g, s, 1);
      }
      if (!(cell > 0.0)) continue;
      const double group =
          table.mass(race, g, s, 0) + table.mass(race, g, s, 1);
      const double group_positive = table.mass(race, g, s, 1);
      // Pr[x] * (Pr[r, y=1 | x] - Pr[r | x] Pr[y=1 | x]).
      expected_cov += group_positive - group * positive / cell;
    }
  }
  return expected_cov / RaceMarginal(table)[race];
}

double WeightedEstimatorGap(const JointTable& table, std::size_t race) {
  auto shared = std::make_shared<const JointTable>(table);
  const OracleProxy proxy(shared);
  const WeightedPopulation population = PopulationRecords(table);
  const ContextualPredictions predictions =
      EvaluateBothContexts(proxy, population.records);
  const std::vector<int> outcomes = Outcomes(population.records);
  return WeightedEstimate(predictions, outcomes, race, population.weights) -
         TruePositiveRate(population.records, race, population.weights);
}

MixtureProxy::MixtureProxy(std::shared_ptr<const ContextualProxy> base,
                           RaceDistribution target, double lambda)
    : base_(std::move(base)), target_(std::move(target)), lambda_(lambda) {
  if (base_ == nullptr || base_->num_races() != target_.size()) {
    throw Error(ErrorCode::kLengthMismatch, "mixture target width");
  }
  if (!(lambda_ >= 0.0 && lambda_ <= 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "lambda must lie in [0, 1]");
  }
}

RaceDistribution MixtureProxy::Evaluate(const AttributedRecord& record,
                                        int context) const {
  const RaceDistribution base = base_->Evaluate(record, context);
  std::vector<double> mixed(base.size());
  for (std::size_t r = 0; r < mixed.size(); ++r) {
    mixed[r] = (1.0 - lambda_) * base[r] + lambda_ * target_[r];
  }
  return Normalize(mixed);
}

TheoremSweepResult VerifyTheorems(const TheoremSweepConfig& config) {
  if (config.epsilons.empty() ||
      !(config.max_lambda >= 0.0 && config.max_lambda <= 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "invalid sweep configuration");
  }
  TheoremSweepResult result;
  std::mt19937_64 seeds(config.seed);
  for (std::size_t instance = 0; instance < config.instances; ++instance) {
    const std::uint64_t instance_seed = seeds();
    auto table = std::make_shared<const JointTable>(
        BuildJoint(RandomDgp(config.dgp, instance_seed)));
    const std::size_t k = table->num_races();
    std::mt19937_64 rng(instance_seed ^ 0x9e3779b97f4a7c15ULL);
    const double lambda =
        std::uniform_real_distribution<double>(0.0, config.max_lambda)(rng);
    const RaceDistribution target =
        SamplePosterior(DirichletParams{std::vector<double>(k, 1.0)}, rng);
    const MixtureProxy proxy(std::make_shared<OracleContextualProxy>(table),
                             target, lambda);

    const WeightedPopulation population = PopulationRecords(*table);
    const ContextualPredictions predictions =
        EvaluateBothContexts(proxy, population.records);
    const std::vector<int> outcomes = Outcomes(population.records);
    const ConsistencyReport report =
        MeasureConsistency(predictions, population.records, k,
                           config.averaging, population.weights);
    for (std::size_t r = 0; r < k; ++r) {
      const double mu = PositiveRate(*table, r);
      const double mu_bayes = BayesEstimate(predictions, outcomes, r,
                                            config.averaging,
                                            population.weights);
      for (double epsilon : config.epsilons) {
        TheoremCheck check;
        check.instance_seed = instance_seed;
        check.race = r;
        check.lambda = lambda;
        check.epsilon = epsilon;
        check.theta = report.theta[r];
        check.nu = report.nu;
        check.rho = report.rho[r];
        check.gamma = report.gamma[r];
        check.omega_bar = report.omega_bar[r][1];
        check.phi = report.phi[r][1];
        check.violation = report.violation[r][1];
        check.mu = mu;
        check.mu_bayes = mu_bayes;
        check.error = std::abs(mu_bayes - mu);
        try {
          check.sufficient_bound = SufficientConsistencyBound(
              epsilon, check.theta, check.nu, check.gamma, check.omega_bar);
        } catch (const Error& e) {
          if (e.code() != ErrorCode::kDegenerateBound) throw;
          check.degenerate = true;
          check.sufficient_bound = std::numeric_limits<double>::quiet_NaN();
          ++result.degenerate;
        }
        check.necessary_bound = NecessaryConsistencyBound(
            epsilon, check.theta, check.nu, check.gamma, check.mu_bayes);
        if (!check.degenerate && check.violation <= check.sufficient_bound) {
          ++result.sufficient_premises;
          check.sufficient_ok = check.error <= epsilon + kNumericSlack;
        }
        if (check.error <= epsilon) {
          ++result.necessary_premises;
          check.necessary_ok =
              check.violation <= check.necessary_bound + kNumericSlack;
        }
        if (!check.sufficient_ok || !check.necessary_ok) {
          ++result.counterexamples;
        }
        result.checks.push_back(check);
      }
    }
  }
  return result;
}

}  // namespace fairproxy
