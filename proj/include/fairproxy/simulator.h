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

// Synthetic populations over (race R, geography G, surname S, outcome Y)
// with an exactly enumerated joint table. Cell masses are
//
//   Pr[r, g, s, y] = theta_r Pr[g|r] Pr[s|r,g] Pr[y|r,g],
//   Pr[s|r,g] = (1 - v) Pr[s|r] + v Pr_g[s|r],
//
// so v = 0 gives surname independent of geography given race. Covariates are
// noisy functions of geography and are not part of the table.

#ifndef FAIRPROXY_SIMULATOR_H_
#define FAIRPROXY_SIMULATOR_H_

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "fairproxy/domain.h"
#include "fairproxy/tables.h"

namespace fairproxy {

struct DgpConfig {
  RaceSet races{"r1", "r2", "r3"};
  // Generated as g000, ... and SURNAME000, ... when empty.
  std::vector<std::string> geo_names;
  std::vector<std::string> surname_names;
  std::vector<double> theta;                            // K
  std::vector<std::vector<double>> geo_given_race;      // K x G
  std::vector<std::vector<double>> surname_given_race;  // K x S
  // K x G x S; required only when assumption1_violation > 0.
  std::vector<std::vector<std::vector<double>>> surname_given_race_geo;
  double assumption1_violation = 0.0;
  std::vector<std::vector<double>> outcome_rate;  // K x G, Pr[Y=1|R,G]
  std::vector<std::vector<double>> covariate_means;  // G x p, may be empty
  double covariate_noise = 1.0;
};

// Throws kInvalidConfig naming the first offending field.
void ValidateConfig(const DgpConfig& config);

struct RandomDgpOptions {
  std::size_t num_races = 3;
  std::size_t num_geos = 50;
  std::size_t num_surnames = 200;
  // Empty draws theta from Dirichlet(2, ..., 2).
  std::vector<double> theta;
  // Dirichlet concentrations for Pr[g|r] and Pr[s|r] rows.
  double geo_concentration = 0.5;
  double surname_concentration = 0.3;
  double assumption1_violation = 0.0;
  // Pr[Y=1|r,g] = clamp(base_g + shift_r, 0.01, 0.99), base_g uniform.
  double base_rate_low = 0.2;
  double base_rate_high = 0.8;
  // Explicit per-race shifts; when empty each is uniform on
  // [-race_effect, race_effect].
  std::vector<double> race_shift;
  double race_effect = 0.0;
  std::size_t num_covariates = 0;
  double covariate_noise = 1.0;
};

DgpConfig RandomDgp(const RandomDgpOptions& options, std::uint64_t seed);

class JointTable {
 public:
  // `mass` is indexed by Index(r, g, s, y). Throws kInvalidConfig on shape
  // errors, negative masses, or a total off 1 by more than 1e-9.
  JointTable(RaceSet races, std::vector<std::string> geo_names,
             std::vector<std::string> surname_names, std::vector<double> mass);

  const RaceSet& races() const { return races_; }
  std::size_t num_races() const { return races_.size(); }
  std::size_t num_geos() const { return geo_names_.size(); }
  std::size_t num_surnames() const { return surname_names_.size(); }
  const std::vector<std::string>& geo_names() const { return geo_names_; }
  const std::vector<std::string>& surname_names() const {
    return surname_names_;
  }
  std::optional<std::size_t> GeoIndex(std::string_view name) const;
  std::optional<std::size_t> SurnameIndex(std::string_view name) const;

  std::size_t Index(std::size_t r, std::size_t g, std::size_t s, int y) const {
    return ((r * num_geos() + g) * num_surnames() + s) * 2 +
           static_cast<std::size_t>(y);
  }
  double mass(std::size_t r, std::size_t g, std::size_t s, int y) const {
    return mass_[Index(r, g, s, y)];
  }
  std::span<const double> masses() const { return mass_; }

  // Covariate model carried along for sampling; not part of the oracle.
  const std::vector<std::vector<double>>& covariate_means() const {
    return covariate_means_;
  }
  double covariate_noise() const { return covariate_noise_; }
  void set_covariate_model(std::vector<std::vector<double>> means,
                           double noise);

 private:
  RaceSet races_;
  std::vector<std::string> geo_names_;
  std::vector<std::string> surname_names_;
  std::vector<double> mass_;
  std::unordered_map<std::string, std::size_t> geo_index_;
  std::unordered_map<std::string, std::size_t> surname_index_;
  std::vector<std::vector<double>> covariate_means_;
  double covariate_noise_ = 1.0;
};

JointTable BuildJoint(const DgpConfig& config);

// n i.i.d. labeled draws; ids are "p0000001", ... Covariates follow the
// table's covariate model. Throws kInvalidArgument for n = 0.
SupplementalDataset SamplePopulation(const JointTable& table, std::size_t n,
                                     std::uint64_t seed);

// Exact oracle quantities by table summation. Conditionals throw
// kZeroMassEvent when the conditioning event has zero mass.
std::vector<double> RaceMarginal(const JointTable& table);          // theta
double OutcomeRate(const JointTable& table);                        // nu
double PositiveRate(const JointTable& table, std::size_t race);     // mu
RaceDistribution RaceGivenContext(const JointTable& table, int y);  // phi
RaceDistribution RaceGivenGeo(const JointTable& table, std::size_t g);
RaceDistribution RaceGivenGeoContext(const JointTable& table, std::size_t g,
                                     int y);
RaceDistribution RaceGivenGeoSurname(const JointTable& table, std::size_t g,
                                     std::size_t s);
RaceDistribution RaceGivenGeoSurnameContext(const JointTable& table,
                                            std::size_t g, std::size_t s,
                                            int y);

// Precomputed Pr[R | G, S, Y] keyed by record geo and surname names. Zero-mass
// (g, s, y) cells fall back to Pr[R | Y = y]. Throws kUnknownGeo for a geo
// outside the table; an unknown surname is treated like a zero-mass cell.
class OracleContextualProxy : public ContextualProxy {
 public:
  explicit OracleContextualProxy(std::shared_ptr<const JointTable> table);

  std::size_t num_races() const override { return table_->num_races(); }
  RaceDistribution Evaluate(const AttributedRecord& record,
                            int context) const override;

 private:
  std::shared_ptr<const JointTable> table_;
  std::vector<double> conditional_;  // (g, s, y) -> K block
  std::vector<bool> positive_;
  std::vector<RaceDistribution> fallback_;  // per context
};

// Calibrated non-contextual proxy Pr[R | G, S]; zero-mass (g, s) falls back
// to Pr[R | G].
class OracleProxy : public ContextualProxy {
 public:
  explicit OracleProxy(std::shared_ptr<const JointTable> table);

  std::size_t num_races() const override { return table_->num_races(); }
  RaceDistribution Evaluate(const AttributedRecord& record,
                            int context) const override;

 private:
  std::shared_ptr<const JointTable> table_;
  std::vector<double> conditional_;  // (g, s) -> K block
  std::vector<bool> positive_;
};

// Census-style tables implied by the population: counts =
// population * Pr[R=r, S=s] and population * Pr[R=r, G=g], optionally
// rounded to integers. Zero-count geos are skipped.
struct CensusTables {
  SurnameTable surnames;
  GeoTable geos;
};
CensusTables ExactCensusTables(const JointTable& table, double population,
                               bool round_counts = false);

// Every positive-mass (r, g, s, y) cell as one labeled record with its mass as
// weight. Estimators run on this view give population-level values.
struct WeightedPopulation {
  std::vector<AttributedRecord> records;
  std::vector<double> weights;
};
WeightedPopulation PopulationRecords(const JointTable& table);

// "r,g,s,y,mass" with race, geo and surname names, masses at 17 digits.
std::string SerializeJointTable(const JointTable& table);
JointTable ParseJointTable(std::string_view text);
JointTable LoadJointTable(const std::string& path);

}  // namespace fairproxy

#endif  // FAIRPROXY_SIMULATOR_H_
