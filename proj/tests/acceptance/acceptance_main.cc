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

// Acceptance suite: one PASS/FAIL line per criterion. Exits nonzero when any
// criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <map>
#include <memory>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "fairproxy/bisg.h"
#include "fairproxy/cbisg.h"
#include "fairproxy/cli.h"
#include "fairproxy/diagnostics.h"
#include "fairproxy/domain.h"
#include "fairproxy/estimators.h"
#include "fairproxy/learner.h"
#include "fairproxy/micsg.h"
#include "fairproxy/simulator.h"
#include "fairproxy/tables.h"

namespace fairproxy {
namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string Fmt(double value, int digits = 4) {
  std::ostringstream out;
  out << std::setprecision(digits) << value;
  return out.str();
}

double Median(std::vector<double> values) {
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  return n % 2 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

std::vector<double> OnesLike(std::size_t n) { return std::vector<double>(n, 1.0); }

// K = 3, 50 geos, 200 surnames.
std::shared_ptr<const JointTable> StandardTable(std::uint64_t seed,
                                                double race_effect = 0.3) {
  RandomDgpOptions options;
  options.race_effect = race_effect;
  return std::make_shared<const JointTable>(
      BuildJoint(RandomDgp(options, seed)));
}

Outcome DirichletArithmetic() {
  const std::vector<double> prior = {5, 3, 2};
  const std::vector<double> observed = {2, 3, 1};
  const DirichletParams tuned = FitPosterior(prior, observed, 0.25);
  const DirichletParams flat = FitPosterior(prior, observed, 0.0);
  const bool pass = tuned.alpha == std::vector<double>{3.25, 3.75, 1.5} &&
                    flat.alpha == observed;
  return {pass, "eta=0.25 -> Dir(" + Fmt(tuned.alpha[0]) + ", " +
                    Fmt(tuned.alpha[1]) + ", " + Fmt(tuned.alpha[2]) +
                    "), eta=0 -> Dir(" + Fmt(flat.alpha[0]) + ", " +
                    Fmt(flat.alpha[1]) + ", " + Fmt(flat.alpha[2]) + ")"};
}

Outcome BayesPopulationExact() {
  double worst = 0.0;
  for (std::uint64_t i = 0; i < 50; ++i) {
    const auto table = StandardTable(1000 + i);
    const WeightedPopulation population = PopulationRecords(*table);
    const ContextualPredictions predictions = EvaluateBothContexts(
        OracleContextualProxy(table), population.records);
    const std::vector<int> outcomes = Outcomes(population.records);
    for (std::size_t r = 0; r < table->num_races(); ++r) {
      const double bayes = BayesEstimate(predictions, outcomes, r,
                                         ContextAveraging::kObservedContext,
                                         population.weights);
      worst = std::max(worst, std::abs(bayes - PositiveRate(*table, r)));
    }
  }
  return {worst <= 1e-10, "max |mu_B - mu| over 50 tables = " + Fmt(worst)};
}

Outcome BayesSampledConvergence() {
  const std::vector<std::size_t> sizes = {1000, 10000, 100000};
  std::vector<double> medians;
  for (std::size_t n : sizes) {
    std::vector<double> errors;
    for (std::uint64_t i = 0; i < 50; ++i) {
      const auto table = StandardTable(1000 + i);
      const SupplementalDataset sample =
          SamplePopulation(*table, n, HashId("convergence", 1000 + i) + n);
      const ContextualPredictions predictions = EvaluateBothContexts(
          OracleContextualProxy(table), sample.records);
      const std::vector<int> outcomes = Outcomes(sample.records);
      for (std::size_t r = 0; r < table->num_races(); ++r) {
        double error = std::numeric_limits<double>::infinity();
        try {
          error = std::abs(BayesEstimate(predictions, outcomes, r) -
                           PositiveRate(*table, r));
        } catch (const Error&) {
          // Undefined estimate counts as an unbounded error.
        }
        errors.push_back(error);
      }
    }
    medians.push_back(Median(errors));
  }
  const bool pass = medians[0] > medians[1] && medians[1] > medians[2] &&
                    medians[2] <= 0.01;
  return {pass, "median |mu_B - mu| at n=1e3,1e4,1e5: " + Fmt(medians[0]) +
                    ", " + Fmt(medians[1]) + ", " + Fmt(medians[2])};
}

struct GapStats {
  double max_vs_oracle = 0.0;   // max |gap - oracle|
  double max_vs_negated = 0.0;  // max |gap + oracle|
  double max_abs_gap = 0.0;
  double max_abs_oracle = 0.0;
  std::size_t sign_checks = 0;
  std::size_t sign_agree = 0;
};

GapStats WeightedGaps(const RandomDgpOptions& options, std::uint64_t seed0) {
  GapStats stats;
  for (std::uint64_t i = 0; i < 20; ++i) {
    const auto table = std::make_shared<const JointTable>(
        BuildJoint(RandomDgp(options, seed0 + i)));
    const SupplementalDataset sample =
        SamplePopulation(*table, 100000, HashId("weighted-gap", seed0 + i));
    const ContextualPredictions predictions =
        EvaluateBothContexts(OracleProxy(table), sample.records);
    const std::vector<int> outcomes = Outcomes(sample.records);
    for (std::size_t r = 0; r < table->num_races(); ++r) {
      const double gap = WeightedEstimate(predictions, outcomes, r) -
                         TruePositiveRate(sample.records, r);
      const double oracle = WeightedBiasOracle(*table, r);
      stats.max_vs_oracle = std::max(stats.max_vs_oracle, std::abs(gap - oracle));
      stats.max_vs_negated =
          std::max(stats.max_vs_negated, std::abs(gap + oracle));
      stats.max_abs_gap = std::max(stats.max_abs_gap, std::abs(gap));
      stats.max_abs_oracle = std::max(stats.max_abs_oracle, std::abs(oracle));
      if (std::abs(oracle) > 0.01) {
        ++stats.sign_checks;
        stats.sign_agree += (gap > 0) == (oracle > 0);
      }
    }
  }
  return stats;
}

Outcome WeightedBias() {
  RandomDgpOptions correlated;
  correlated.race_effect = 0.3;
  correlated.geo_concentration = 2.0;
  correlated.surname_concentration = 2.0;
  const GapStats dependent = WeightedGaps(correlated, 2000);
  RandomDgpOptions independent = correlated;
  independent.race_shift = {0.0, 0.0, 0.0};
  const GapStats null_case = WeightedGaps(independent, 3000);
  const bool pass = dependent.max_vs_oracle <= 0.01 &&
                    dependent.sign_agree == dependent.sign_checks &&
                    null_case.max_abs_oracle <= 0.005 &&
                    null_case.max_abs_gap <= 0.005;
  return {pass,
          "max |gap - oracle| = " + Fmt(dependent.max_vs_oracle) +
              ", sign agreement " + std::to_string(dependent.sign_agree) + "/" +
              std::to_string(dependent.sign_checks) +
              " (max |gap + oracle| = " + Fmt(dependent.max_vs_negated) +
              "); independence: max |oracle| = " +
              Fmt(null_case.max_abs_oracle) +
              ", max |gap| = " + Fmt(null_case.max_abs_gap)};
}

Outcome BoundSweep() {
  TheoremSweepConfig config;
  config.instances = 100;
  config.seed = 4000;
  config.dgp.race_effect = 0.2;
  const TheoremSweepResult result = VerifyTheorems(config);
  return {result.counterexamples == 0,
          std::to_string(result.checks.size()) + " checks, " +
              std::to_string(result.degenerate) + " degenerate excluded, " +
              std::to_string(result.sufficient_premises) +
              " sufficient premises, " +
              std::to_string(result.necessary_premises) +
              " necessary premises, " +
              std::to_string(result.counterexamples) + " counterexamples"};
}

double MaxBisgDiscrepancy(const JointTable& table) {
  const CensusTables census = ExactCensusTables(table, 1e6);
  const BisgModel bisg(census.surnames, census.geos);
  double worst = 0.0;
  for (std::size_t g = 0; g < table.num_geos(); ++g) {
    for (std::size_t s = 0; s < table.num_surnames(); ++s) {
      double mass = 0.0;
      for (std::size_t r = 0; r < table.num_races(); ++r) {
        mass += table.mass(r, g, s, 0) + table.mass(r, g, s, 1);
      }
      if (mass <= 0.0) continue;
      worst = std::max(
          worst, L1Distance(bisg.Predict(table.surname_names()[s],
                                         table.geo_names()[g]),
                            RaceGivenGeoSurname(table, g, s)));
    }
  }
  return worst;
}

Outcome BisgOracle() {
  double worst = 0.0;
  for (std::uint64_t i = 0; i < 10; ++i) {
    worst = std::max(worst, MaxBisgDiscrepancy(*StandardTable(5000 + i)));
  }
  RandomDgpOptions violated;
  violated.assumption1_violation = 0.5;
  const double guard =
      MaxBisgDiscrepancy(BuildJoint(RandomDgp(violated, 5100)));
  return {worst <= 1e-10 && guard > 0.01,
          "max L1 under independence = " + Fmt(worst) +
              ", under violation 0.5 = " + Fmt(guard)};
}

Outcome CbisgRecovery() {
  std::vector<double> means;
  bool pass = true;
  for (std::uint64_t i = 0; i < 5; ++i) {
    const auto table = StandardTable(6000 + i);
    const CensusTables census = ExactCensusTables(*table, 1e6);
    std::mt19937_64 rng(HashId("recovery", 6000 + i));
    SupplementalDataset train;
    for (std::size_t g = 0; g < table->num_geos(); ++g) {
      for (int y = 0; y < kNumContexts; ++y) {
        const RaceDistribution cell = RaceGivenGeoContext(*table, g, y);
        std::discrete_distribution<std::size_t> draw(cell.probs().begin(),
                                                     cell.probs().end());
        for (int j = 0; j < 1000; ++j) {
          AttributedRecord record;
          record.id = std::to_string(train.records.size());
          record.geo = table->geo_names()[g];
          record.context = y;
          record.race = draw(rng);
          train.records.push_back(std::move(record));
        }
      }
    }
    CbisgFitConfig config;
    config.eta = 0.0;
    const CbisgModel model =
        FitCbisg(census.geos, census.surnames, train, config);
    double total = 0.0;
    std::size_t cells = 0;
    for (std::size_t g = 0; g < table->num_geos(); ++g) {
      for (int y = 0; y < kNumContexts; ++y) {
        total += L1Distance(
            model.RaceGivenGeoContext(table->geo_names()[g], y),
            RaceGivenGeoContext(*table, g, y));
        ++cells;
      }
    }
    means.push_back(total / cells);
    pass = pass && means.back() <= 0.02;
  }
  std::string detail = "mean per-cell L1 over 5 DGPs:";
  for (double m : means) detail += " " + Fmt(m);
  return {pass, detail};
}

double MeanL1ToOracle(const ContextualProxy& proxy,
                      const ContextualProxy& oracle,
                      const SupplementalDataset& test) {
  double total = 0.0;
  for (const auto& record : test.records) {
    total += L1Distance(proxy.Evaluate(record, record.context),
                        oracle.Evaluate(record, record.context));
  }
  return total / test.size();
}

std::pair<double, double> MicsgVersusBase(std::vector<double> race_shift,
                                          std::uint64_t seed) {
  RandomDgpOptions options;
  options.num_geos = 20;
  options.num_surnames = 60;
  options.race_shift = std::move(race_shift);
  const auto table =
      std::make_shared<const JointTable>(BuildJoint(RandomDgp(options, seed)));
  const CensusTables census = ExactCensusTables(*table, 1e6);
  const auto bisg = std::make_shared<const BisgModel>(census.surnames,
                                                      census.geos);
  const SupplementalDataset train = SamplePopulation(*table, 20000, seed + 1);
  const SupplementalDataset test = SamplePopulation(*table, 5000, seed + 2);
  const MicsgModel micsg =
      FitMicsg(bisg, "bisg", table->races(), train, MicsgConfig{});
  const OracleContextualProxy oracle(table);
  return {MeanL1ToOracle(micsg, oracle, test),
          MeanL1ToOracle(*bisg, oracle, test)};
}

Outcome MicsgImprovement() {
  // Shifts of +/-0.35 keep Pr[Y=1|R,G] at least 0.3 apart after clamping.
  const auto [informative, base] = MicsgVersusBase({0.35, 0.0, -0.35}, 7000);
  const auto [flat, flat_base] = MicsgVersusBase({0.0, 0.0, 0.0}, 7100);
  const bool pass =
      informative < base && std::abs(flat - flat_base) <= 0.02;
  return {pass, "race-dependent outcome: MICSG " + Fmt(informative) +
                    " vs BISG " + Fmt(base) + "; independent: MICSG " +
                    Fmt(flat) + " vs BISG " + Fmt(flat_base)};
}

TrainingProblem RandomProblem(std::size_t n, std::size_t k, std::size_t d,
                              std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  std::uniform_int_distribution<std::size_t> label(0, k - 1);
  TrainingProblem problem;
  problem.features = Eigen::MatrixXd(n, d);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < d; ++j) problem.features(i, j) = normal(rng);
    problem.labels.push_back(label(rng));
  }
  problem.num_classes = k;
  return problem;
}

Outcome LearnerNumerics() {
  double worst = 0.0;
  for (std::uint64_t i = 0; i < 10; ++i) {
    const std::size_t k = 2 + i % 4;
    const std::size_t d = 2 + i % 5;
    const TrainingProblem problem = RandomProblem(40 + 10 * i, k, d, 8000 + i);
    std::mt19937_64 rng(8100 + i);
    std::normal_distribution<double> normal;
    Eigen::MatrixXd weights(k, d + 1);
    for (Eigen::Index j = 0; j < weights.size(); ++j) {
      weights.data()[j] = normal(rng);
    }
    worst = std::max(worst, GradientCheck(weights, problem, 0.1, 1e-6));
  }
  const TrainingProblem fixture = RandomProblem(300, 3, 4, 8200);
  LearnerConfig first;
  first.seed = 1;
  LearnerConfig second;
  second.seed = 2;
  const double a = Objective(FitSoftmax(fixture, first).weights(), fixture,
                             first.l2_lambda);
  const double b = Objective(FitSoftmax(fixture, second).weights(), fixture,
                             second.l2_lambda);
  return {worst <= 1e-5 && std::abs(a - b) <= 1e-8,
          "max gradient relative error " + Fmt(worst) +
              ", objective difference " + Fmt(std::abs(a - b))};
}

std::string Slurp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

Outcome PipelineDeterminism() {
  namespace fs = std::filesystem;
  const fs::path dir = fs::temp_directory_path() / "fairproxy_acceptance";
  const auto p = [&](const std::string& name) { return (dir / name).string(); };
  const std::vector<std::vector<std::string>> steps = {
      {"simulate", "--n", "20000", "--seed", "42", "--out-dir", p("sim")},
      {"fit-cbisg", "--surnames", p("sim/surnames.csv"), "--geo",
       p("sim/geo.csv"), "--train", p("sim/supplemental.csv"), "--eta", "tune",
       "--split", "0.5", "--seed", "42", "--model-out", p("cbisg.csv")},
      {"fit-micsg", "--base", "bisg", "--surnames", p("sim/surnames.csv"),
       "--geo", p("sim/geo.csv"), "--train", p("sim/supplemental.csv"),
       "--split", "0.5", "--seed", "42", "--model-out", p("micsg.json")},
      {"estimate", "--method", "bayes", "--proxy", "cbisg:" + p("cbisg.csv"),
       "--surnames", p("sim/surnames.csv"), "--input",
       p("sim/supplemental.csv"), "--split", "0.5", "--seed", "42", "--out",
       p("estimate_cbisg.json")},
      {"estimate", "--method", "weighted", "--proxy", "bisg", "--surnames",
       p("sim/surnames.csv"), "--geo", p("sim/geo.csv"), "--input",
       p("sim/supplemental.csv"), "--out", p("estimate_bisg.json")},
      {"diagnose", "--proxy", "micsg:" + p("micsg.json"), "--input",
       p("sim/supplemental.csv"), "--split", "0.5", "--seed", "42", "--out",
       p("diagnose.json")},
  };
  const std::vector<std::string> reports = {
      "cbisg.csv", "micsg.json", "estimate_cbisg.json", "estimate_bisg.json",
      "diagnose.json"};
  std::vector<std::map<std::string, std::string>> runs;
  for (int run = 0; run < 2; ++run) {
    fs::remove_all(dir);
    fs::create_directories(dir);
    for (const auto& step : steps) {
      std::ostringstream out;
      std::ostringstream err;
      if (cli::Run(step, out, err) != cli::kExitOk) {
        return {false, step[0] + " failed: " + err.str()};
      }
    }
    std::map<std::string, std::string> contents;
    for (const auto& name : reports) contents[name] = Slurp(dir / name);
    runs.push_back(std::move(contents));
  }
  fs::remove_all(dir);
  std::size_t identical = 0;
  for (const auto& name : reports) {
    identical += !runs[0][name].empty() && runs[0][name] == runs[1][name];
  }
  return {identical == reports.size(),
          std::to_string(identical) + "/" + std::to_string(reports.size()) +
              " outputs byte-identical across two runs"};
}

// Party-membership world: one large, one mid-sized and one small group, the
// small group joining the party far more often than either of the others.
Outcome PartyComposition() {
  RandomDgpOptions options;
  options.theta = {0.65, 0.25, 0.10};
  options.race_shift = {-0.1, -0.1, 0.45};
  options.base_rate_low = 0.3;
  options.base_rate_high = 0.5;
  const auto table =
      std::make_shared<const JointTable>(BuildJoint(RandomDgp(options, 9000)));
  const CensusTables census = ExactCensusTables(*table, 1e6);
  const SupplementalDataset train = SamplePopulation(*table, 20000, 9001);
  const SupplementalDataset test = SamplePopulation(*table, 100000, 9002);
  const std::vector<int> outcomes = Outcomes(test.records);

  CbisgFitConfig config;
  config.eta = std::nullopt;
  const CbisgModel cbisg =
      FitCbisg(census.geos, census.surnames, train, config);
  const BisgModel bisg(census.surnames, census.geos);
  const ContextualPredictions contextual =
      EvaluateBothContexts(cbisg, test.records);
  const ContextualPredictions plain = EvaluateBothContexts(bisg, test.records);
  const RaceDistribution truth = RaceGivenContext(*table, 1);

  std::vector<double> cbisg_error;
  std::vector<double> bisg_error;
  bool better = true;
  std::string detail = "composition error cBISG+Bayes vs BISG+weighted:";
  for (std::size_t r = 0; r < table->num_races(); ++r) {
    const double c = ComputeContextMeans(contextual, outcomes, r,
                                         ContextAveraging::kObservedContext)
                         .omega_bar[1];
    const double b = ComputeContextMeans(plain, outcomes, r,
                                         ContextAveraging::kObservedContext)
                         .omega_bar[1];
    cbisg_error.push_back(std::abs(c - truth[r]));
    bisg_error.push_back(std::abs(b - truth[r]));
    better = better && cbisg_error[r] < bisg_error[r];
    detail += " " + table->races().label(r) + " (theta " +
              Fmt(RaceMarginal(*table)[r], 3) + ") " + Fmt(cbisg_error[r]) +
              " vs " + Fmt(bisg_error[r]) + ";";
  }
  const std::vector<double> theta = RaceMarginal(*table);
  const std::size_t smallest =
      std::min_element(theta.begin(), theta.end()) - theta.begin();
  const std::size_t worst =
      std::max_element(bisg_error.begin(), bisg_error.end()) -
      bisg_error.begin();
  return {better && worst == smallest, detail};
}

}  // namespace
}  // namespace fairproxy

int main() {
  using fairproxy::Outcome;
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria =
      {
          {"Dirichlet posterior arithmetic", fairproxy::DirichletArithmetic},
          {"Bayes estimator exact on population",
           fairproxy::BayesPopulationExact},
          {"Bayes estimator sampled convergence",
           fairproxy::BayesSampledConvergence},
          {"weighted estimator bias matches covariance oracle",
           fairproxy::WeightedBias},
          {"consistency bound sweep", fairproxy::BoundSweep},
          {"BISG oracle equivalence", fairproxy::BisgOracle},
          {"cBISG recovery of Pr[R|G,Y]", fairproxy::CbisgRecovery},
          {"MICSG improvement direction", fairproxy::MicsgImprovement},
          {"learner numerics", fairproxy::LearnerNumerics},
          {"end-to-end determinism", fairproxy::PipelineDeterminism},
          {"party composition: cBISG+Bayes beats BISG+weighted",
           fairproxy::PartyComposition},
      };
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const auto start = std::chrono::steady_clock::now();
    Outcome outcome;
    try {
      outcome = criteria[i].second();
    } catch (const std::exception& e) {
      outcome = {false, std::string("exception: ") + e.what()};
    }
    const double seconds = std::chrono::duration<double>(
                               std::chrono::steady_clock::now() - start)
                               .count();
    failures += !outcome.pass;
    std::cout << "criterion " << std::setw(2) << i + 1 << ": "
              << (outcome.pass ? "PASS" : "FAIL") << "  " << criteria[i].first
              << "  [" << outcome.detail << "] (" << std::fixed
              << std::setprecision(1) << seconds << " s)" << std::defaultfloat
              << std::endl;
  }
  std::cout << criteria.size() - failures << "/" << criteria.size()
            << " criteria passed" << std::endl;
  return failures == 0 ? 0 : 1;
}
