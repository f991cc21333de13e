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

// Contextual BISG. For every (geography g, context y) cell the race
// proportions get a Dirichlet prior built from eta-scaled census counts,
//
//   p ~ Dir(eta * C^(g)),   n ~ Multinomial(N, p),
//   p | n ~ Dir(eta * C^(g) + n),
//
// and predictions combine the cell estimate with census surname likelihoods:
//
//   Pr[R|G,S,Y] ∝ Pr[R|G,Y] Pr[S|R].

#ifndef FAIRPROXY_CBISG_H_
#define FAIRPROXY_CBISG_H_

#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "fairproxy/domain.h"
#include "fairproxy/estimators.h"
#include "fairproxy/tables.h"

namespace fairproxy {

// Pseudo-count floor keeping every posterior proper when eta = 0 and a cell
// has no observations.
inline constexpr double kAlphaFloor = 1e-3;

struct DirichletParams {
  std::vector<double> alpha;
};

// alpha = max(eta * census + observed, kAlphaFloor), entrywise.
// Throws kInvalidArgument unless eta in [0, 1] and counts are nonnegative;
// kLengthMismatch on differing lengths.
DirichletParams FitPosterior(std::span<const double> census,
                             std::span<const double> observed, double eta);

// Conjugate update with further observations: alpha + counts.
DirichletParams UpdatePosterior(const DirichletParams& params,
                                std::span<const double> observed);

RaceDistribution PosteriorMean(const DirichletParams& params);

// One draw from Dir(alpha). Gamma variates are drawn in log space so tiny
// alphas (down to the floor) don't underflow to an all-zero vector.
RaceDistribution SamplePosterior(const DirichletParams& params,
                                 std::mt19937_64& rng);

// {0, 0.1, ..., 1.0}.
std::vector<double> DefaultEtaGrid();

// "start:stop:step", inclusive of stop. Throws kInvalidArgument.
std::vector<double> ParseEtaGrid(std::string_view spec);

enum class PointEstimate { kPosteriorMean, kPosteriorSample };

class CbisgModel : public ContextualProxy {
 public:
  // `etas` maps each geography to the eta used for its cells. In sample
  // mode each cell draws once from its posterior with a generator seeded
  // from (seed, geo, context), so estimates don't depend on fitting order.
  CbisgModel(SurnameTable surnames, std::map<CellKey, DirichletParams> cells,
             std::map<std::string, double> etas,
             PointEstimate mode = PointEstimate::kPosteriorMean,
             std::uint64_t seed = 0);

  const RaceSet& races() const { return surnames_.races(); }
  const SurnameTable& surname_table() const { return surnames_; }
  PointEstimate mode() const { return mode_; }

  // Throws kUnknownGeo for a geography without any fitted cell and
  // kUnfittedContext when only the other context was fitted.
  const DirichletParams& Posterior(std::string_view geo, int context) const;
  const RaceDistribution& RaceGivenGeoContext(std::string_view geo,
                                              int context) const;
  double eta(std::string_view geo) const;
  const std::map<std::string, double>& etas() const { return etas_; }
  std::vector<CellKey> cells() const;

  RaceDistribution Predict(std::string_view surname, std::string_view geo,
                           int context) const;

  std::size_t num_races() const override { return races().size(); }
  RaceDistribution Evaluate(const AttributedRecord& record,
                            int context) const override;

 private:
  struct Cell {
    DirichletParams posterior;
    RaceDistribution estimate;
  };

  const Cell& FindCell(std::string_view geo, int context) const;

  SurnameTable surnames_;
  std::map<CellKey, Cell> cells_;
  std::map<std::string, double> etas_;
  PointEstimate mode_;
};

struct EtaTuningConfig {
  std::vector<double> candidates = DefaultEtaGrid();
  EstimatorKind estimator = EstimatorKind::kBayes;
  ContextAveraging averaging = ContextAveraging::kObservedContext;
  // Used when the geography has no labeled training records.
  double default_eta = 0.0;
};

struct EtaTuningResult {
  double eta = 0.0;
  bool used_default = false;
  // Estimation error per candidate, aligned with config.candidates.
  std::vector<double> errors;
};

// Picks the candidate eta minimizing the mean absolute positive-rate error,
// over races present among training records in `geo`, of the chosen
// estimator applied to cBISG predictions for those records. Ties go to the
// smaller eta.
EtaTuningResult TuneEta(const GeoTable& geos, const SurnameTable& surnames,
                        std::string_view geo, const SupplementalDataset& train,
                        const EtaTuningConfig& config);

struct CbisgFitConfig {
  // Fixed eta for every geography; nullopt tunes eta per geography.
  std::optional<double> eta = 0.0;
  EtaTuningConfig tuning;
  PointEstimate mode = PointEstimate::kPosteriorMean;
  std::uint64_t seed = 0;
};

// Fits one posterior per (g, y) for every g in the geo table. Throws
// kUnlabeledDataset and kUnknownGeo for training records outside the table.
CbisgModel FitCbisg(const GeoTable& geos, const SurnameTable& surnames,
                    const SupplementalDataset& train,
                    const CbisgFitConfig& config);

// Rows "geo,y,<alpha_1>,...,<alpha_K>,eta" under a header naming the races.
std::string SerializeCbisg(const CbisgModel& model);
CbisgModel ParseCbisg(std::string_view text, const SurnameTable& surnames,
                      PointEstimate mode = PointEstimate::kPosteriorMean,
                      std::uint64_t seed = 0);
CbisgModel LoadCbisg(const std::string& path, const SurnameTable& surnames,
                     PointEstimate mode = PointEstimate::kPosteriorMean,
                     std::uint64_t seed = 0);

}  // namespace fairproxy

#endif  // FAIRPROXY_CBISG_H_
