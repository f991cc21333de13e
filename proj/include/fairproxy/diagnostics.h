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

// Mean-consistency measurement and the bounds linking it to Bayes-estimator
// error. For race r and context y:
//
//   omega_bar = mean proxy output for r at y,   phi = Pr[R=r | f=y],
//   violation = |omega_bar - phi|,
//   rho = sum_y nu_y omega_bar_y,               gamma = |rho - theta|.

#ifndef FAIRPROXY_DIAGNOSTICS_H_
#define FAIRPROXY_DIAGNOSTICS_H_

#include <array>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "fairproxy/domain.h"
#include "fairproxy/estimators.h"
#include "fairproxy/simulator.h"

namespace fairproxy {

// |omega_bar_r(y) - phi_r(y)|. Throws kEmptyContext when no record (or no
// weight) sits at context y, kUnlabeledDataset without race labels.
double ConsistencyViolation(const ContextualPredictions& predictions,
                            std::span<const AttributedRecord> records,
                            std::size_t race, int context,
                            ContextAveraging averaging =
                                ContextAveraging::kObservedContext,
                            std::span<const double> weights = {});

struct ConsistencyReport {
  ContextAveraging averaging = ContextAveraging::kObservedContext;
  double n = 0.0;
  double nu = 0.0;                                 // Pr[f = 1]
  std::vector<double> theta;                       // Pr[R = r]
  std::vector<double> rho;                         // marginal proxy mass
  std::vector<double> gamma;                       // |rho - theta|
  std::vector<std::array<double, 2>> omega_bar;    // [race][context]
  std::vector<std::array<double, 2>> phi;          // [race][context]
  std::vector<std::array<double, 2>> violation;    // [race][context]
};

// Requires records at both contexts.
ConsistencyReport MeasureConsistency(const ContextualPredictions& predictions,
                                     std::span<const AttributedRecord> records,
                                     std::size_t num_races,
                                     ContextAveraging averaging =
                                         ContextAveraging::kObservedContext,
                                     std::span<const double> weights = {});

struct ViolationBin {
  double lower = 0.0;
  double upper = 0.0;
  double center = 0.0;
  // Pooled violation over records at the context in member geographies;
  // 0 for an empty bin.
  double violation = 0.0;
  std::size_t num_geos = 0;
  double num_records = 0.0;
};

// Bins geographies by their within-geo share of race r among records at
// context y, over `bins` equal-width bins on [0, 1]. All bins are returned.
// Throws kInvalidArgument for bins < 2 and kEmptyContext.
std::vector<ViolationBin> BinnedViolationProfile(
    const ContextualPredictions& predictions,
    std::span<const AttributedRecord> records, std::size_t race, int context,
    int bins = 8, std::span<const double> weights = {});

// Violation level sufficient for |mu_B - mu| <= epsilon:
//   epsilon theta / nu - omega_bar gamma / (theta - gamma).
// Throws kDegenerateBound when theta <= gamma or the bound is negative, and
// kInvalidArgument unless nu > 0.
double SufficientConsistencyBound(double epsilon, double theta, double nu,
                                  double gamma, double omega_bar);

// Violation level implied by |mu_B - mu| <= epsilon:
//   epsilon theta / nu + gamma mu_B / nu.
// Throws kInvalidArgument unless nu > 0.
double NecessaryConsistencyBound(double epsilon, double theta, double nu,
                                 double gamma, double mu_bayes);

// E[Cov(1[R=r], Y | X)] / Pr[R=r] with X = (G, S), by summation over the table.
double WeightedBiasOracle(const JointTable& table, std::size_t race);

// Population value of mu_W(r) - mu(r) for the calibrated proxy Pr[R | G, S].
double WeightedEstimatorGap(const JointTable& table, std::size_t race);

// (1 - lambda) base + lambda q at every query: a proxy with controlled
// consistency violation.
class MixtureProxy : public ContextualProxy {
 public:
  MixtureProxy(std::shared_ptr<const ContextualProxy> base,
               RaceDistribution target, double lambda);

  std::size_t num_races() const override { return base_->num_races(); }
  RaceDistribution Evaluate(const AttributedRecord& record,
                            int context) const override;

 private:
  std::shared_ptr<const ContextualProxy> base_;
  RaceDistribution target_;
  double lambda_;
};

struct TheoremSweepConfig {
  std::size_t instances = 100;
  std::uint64_t seed = 0;
  RandomDgpOptions dgp;
  std::vector<double> epsilons = {0.0025, 0.005, 0.01, 0.02, 0.05, 0.1};
  // Mixing weight toward a random distribution, uniform on [0, max_lambda].
  double max_lambda = 0.5;
  ContextAveraging averaging = ContextAveraging::kObservedContext;
};

// One (instance, race, epsilon) check at population level, context y = 1.
struct TheoremCheck {
  std::uint64_t instance_seed = 0;
  std::size_t race = 0;
  double lambda = 0.0;
  double epsilon = 0.0;
  double theta = 0.0;
  double nu = 0.0;
  double rho = 0.0;
  double gamma = 0.0;
  double omega_bar = 0.0;
  double phi = 0.0;
  double violation = 0.0;
  double mu = 0.0;
  double mu_bayes = 0.0;
  double error = 0.0;
  bool degenerate = false;
  double sufficient_bound = 0.0;  // NaN when degenerate
  double necessary_bound = 0.0;
  // Implication results; true when the premise fails.
  bool sufficient_ok = true;
  bool necessary_ok = true;
};

struct TheoremSweepResult {
  std::vector<TheoremCheck> checks;
  std::size_t degenerate = 0;
  std::size_t sufficient_premises = 0;
  std::size_t necessary_premises = 0;
  std::size_t counterexamples = 0;
};

// Builds `instances` random tables with per-instance seeds drawn from
// `seed`, mixes the oracle contextual proxy toward a random distribution,
// and checks both bound implications for every race and epsilon.
TheoremSweepResult VerifyTheorems(const TheoremSweepConfig& config);

}  // namespace fairproxy

#endif  // FAIRPROXY_DIAGNOSTICS_H_
