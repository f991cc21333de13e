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

#include "fairproxy/simulator.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <random>

#include "fairproxy/cbisg.h"
#include "fairproxy/csv.h"

namespace fairproxy {
namespace {

std::string Numbered(const char* prefix, std::size_t i) {
  char buffer[32];
  std::snprintf(buffer, sizeof(buffer), "%s%03zu", prefix, i);
  return buffer;
}

void CheckRow(std::span<const double> row, std::size_t width,
              const std::string& what) {
  if (row.size() != width) {
    throw Error(ErrorCode::kInvalidConfig,
                what + " has length " + std::to_string(row.size()) +
                    ", expected " + std::to_string(width));
  }
  if (!IsValidDistribution(row)) {
    throw Error(ErrorCode::kInvalidConfig, what + " is not a distribution");
  }
}

std::vector<double> DirichletDraw(std::size_t size, double concentration,
                                  std::mt19937_64& rng) {
  DirichletParams params{std::vector<double>(size, concentration)};
  return SamplePosterior(params, rng).vector();
}

RaceDistribution NormalizeOrZeroMass(std::span<const double> weights,
                                     const std::string& event) {
  try {
    return Normalize(weights);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::kAllZero) throw;
    throw Error(ErrorCode::kZeroMassEvent, event + " has zero mass");
  }
}

void CheckGeo(const JointTable& table, std::size_t g) {
  if (g >= table.num_geos()) {
    throw Error(ErrorCode::kInvalidArgument, "geo index out of range");
  }
}

void CheckSurname(const JointTable& table, std::size_t s) {
  if (s >= table.num_surnames()) {
    throw Error(ErrorCode::kInvalidArgument, "surname index out of range");
  }
}

}  // namespace

void ValidateConfig(const DgpConfig& config) {
  const std::size_t k = config.races.size();
  const std::size_t g_count = config.geo_given_race.empty()
                                  ? 0
                                  : config.geo_given_race.front().size();
  const std::size_t s_count = config.surname_given_race.empty()
                                  ? 0
                                  : config.surname_given_race.front().size();
  if (g_count == 0 || s_count == 0) {
    throw Error(ErrorCode::kInvalidConfig, "need at least one geo and surname");
  }
  CheckRow(config.theta, k, "theta");
  if (config.geo_given_race.size() != k ||
      config.surname_given_race.size() != k || config.outcome_rate.size() != k) {
    throw Error(ErrorCode::kInvalidConfig,
                "per-race tables must have one row per race");
  }
  if (!config.geo_names.empty() && config.geo_names.size() != g_count) {
    throw Error(ErrorCode::kInvalidConfig, "geo_names length");
  }
  if (!config.surname_names.empty() && config.surname_names.size() != s_count) {
    throw Error(ErrorCode::kInvalidConfig, "surname_names length");
  }
  const double v = config.assumption1_violation;
  if (!(v >= 0.0 && v <= 1.0)) {
    throw Error(ErrorCode::kInvalidConfig,
                "assumption1_violation must lie in [0, 1]");
  }
  for (std::size_t r = 0; r < k; ++r) {
    const std::string race = config.races.label(r);
    CheckRow(config.geo_given_race[r], g_count, "geo_given_race[" + race + "]");
    CheckRow(config.surname_given_race[r], s_count,
             "surname_given_race[" + race + "]");
    if (config.outcome_rate[r].size() != g_count) {
      throw Error(ErrorCode::kInvalidConfig, "outcome_rate[" + race + "] length");
    }
    for (double rate : config.outcome_rate[r]) {
      if (!(rate >= 0.0 && rate <= 1.0)) {
        throw Error(ErrorCode::kInvalidConfig, "outcome rate outside [0, 1]");
      }
    }
  }
  if (v > 0.0) {
    if (config.surname_given_race_geo.size() != k) {
      throw Error(ErrorCode::kInvalidConfig,
                  "surname_given_race_geo required when violation > 0");
    }
    for (std::size_t r = 0; r < k; ++r) {
      if (config.surname_given_race_geo[r].size() != g_count) {
        throw Error(ErrorCode::kInvalidConfig,
                    "surname_given_race_geo needs one row per geo");
      }
      for (const auto& row : config.surname_given_race_geo[r]) {
        CheckRow(row, s_count, "surname_given_race_geo row");
      }
    }
  }
  for (const auto& row : config.covariate_means) {
    if (config.covariate_means.size() != g_count ||
        row.size() != config.covariate_means.front().size()) {
      throw Error(ErrorCode::kInvalidConfig, "covariate_means shape");
    }
  }
  if (!(config.covariate_noise >= 0.0)) {
    throw Error(ErrorCode::kInvalidConfig, "covariate_noise must be >= 0");
  }
}

DgpConfig RandomDgp(const RandomDgpOptions& options, std::uint64_t seed) {
  const std::size_t k = options.num_races;
  const std::size_t g_count = options.num_geos;
  const std::size_t s_count = options.num_surnames;
  if (k < 2 || g_count == 0 || s_count == 0) {
    throw Error(ErrorCode::kInvalidConfig,
                "need K >= 2 and at least one geo and surname");
  }
  if (!(options.geo_concentration > 0.0) ||
      !(options.surname_concentration > 0.0) ||
      !(options.base_rate_low >= 0.0) ||
      !(options.base_rate_high <= 1.0) ||
      options.base_rate_low > options.base_rate_high ||
      !(options.race_effect >= 0.0)) {
    throw Error(ErrorCode::kInvalidConfig, "invalid random DGP options");
  }
  if (!options.race_shift.empty() && options.race_shift.size() != k) {
    throw Error(ErrorCode::kInvalidConfig, "race_shift needs K entries");
  }
  std::mt19937_64 rng(seed);
  DgpConfig config;
  std::vector<std::string> labels;
  for (std::size_t r = 0; r < k; ++r) labels.push_back("r" + std::to_string(r + 1));
  config.races = RaceSet(labels);
  for (std::size_t g = 0; g < g_count; ++g) {
    config.geo_names.push_back(Numbered("g", g));
  }
  for (std::size_t s = 0; s < s_count; ++s) {
    config.surname_names.push_back(Numbered("SURNAME", s));
  }
  config.theta = options.theta.empty() ? DirichletDraw(k, 2.0, rng)
                                       : options.theta;
  for (std::size_t r = 0; r < k; ++r) {
    config.geo_given_race.push_back(
        DirichletDraw(g_count, options.geo_concentration, rng));
  }
  for (std::size_t r = 0; r < k; ++r) {
    config.surname_given_race.push_back(
        DirichletDraw(s_count, options.surname_concentration, rng));
  }
  config.assumption1_violation = options.assumption1_violation;
  if (options.assumption1_violation > 0.0) {
    config.surname_given_race_geo.resize(k);
    for (std::size_t r = 0; r < k; ++r) {
      for (std::size_t g = 0; g < g_count; ++g) {
        config.surname_given_race_geo[r].push_back(
            DirichletDraw(s_count, options.surname_concentration, rng));
      }
    }
  }
  std::uniform_real_distribution<double> base_rate(options.base_rate_low,
                                                   options.base_rate_high);
  std::vector<double> base(g_count);
  for (double& b : base) b = base_rate(rng);
  std::vector<double> shift = options.race_shift;
  if (shift.empty()) {
    std::uniform_real_distribution<double> effect(-options.race_effect,
                                                  options.race_effect);
    for (std::size_t r = 0; r < k; ++r) {
      shift.push_back(options.race_effect > 0.0 ? effect(rng) : 0.0);
    }
  }
  config.outcome_rate.assign(k, std::vector<double>(g_count));
  for (std::size_t r = 0; r < k; ++r) {
    for (std::size_t g = 0; g < g_count; ++g) {
      config.outcome_rate[r][g] = std::clamp(base[g] + shift[r], 0.01, 0.99);
    }
  }
  if (options.num_covariates > 0) {
    std::normal_distribution<double> normal(0.0, 1.0);
    config.covariate_means.assign(g_count,
                                  std::vector<double>(options.num_covariates));
    for (auto& row : config.covariate_means) {
      for (double& m : row) m = normal(rng);
    }
  }
  config.covariate_noise = options.covariate_noise;
  return config;
}

JointTable::JointTable(RaceSet races, std::vector<std::string> geo_names,
                       std::vector<std::string> surname_names,
                       std::vector<double> mass)
    : races_(std::move(races)),
      geo_names_(std::move(geo_names)),
      surname_names_(std::move(surname_names)),
      mass_(std::move(mass)) {
  if (geo_names_.empty() || surname_names_.empty() ||
      mass_.size() != races_.size() * geo_names_.size() *
                          surname_names_.size() * kNumContexts) {
    throw Error(ErrorCode::kInvalidConfig, "joint table shape");
  }
  double total = 0.0;
  for (double m : mass_) {
    if (!(m >= 0.0) || !std::isfinite(m)) {
      throw Error(ErrorCode::kInvalidConfig, "negative or non-finite mass");
    }
    total += m;
  }
  if (std::abs(total - 1.0) > 1e-9) {
    throw Error(ErrorCode::kInvalidConfig,
                "joint masses sum to " + csv::FormatDouble(total, 17));
  }
  for (std::size_t g = 0; g < geo_names_.size(); ++g) {
    if (!geo_index_.emplace(geo_names_[g], g).second) {
      throw Error(ErrorCode::kDuplicateGeo, "geo '" + geo_names_[g] + "'");
    }
  }
  for (std::size_t s = 0; s < surname_names_.size(); ++s) {
    if (!surname_index_.emplace(surname_names_[s], s).second) {
      throw Error(ErrorCode::kDuplicateSurname,
                  "surname '" + surname_names_[s] + "'");
    }
  }
}

std::optional<std::size_t> JointTable::GeoIndex(std::string_view name) const {
  auto it = geo_index_.find(std::string(name));
  if (it == geo_index_.end()) return std::nullopt;
  return it->second;
}

std::optional<std::size_t> JointTable::SurnameIndex(
    std::string_view name) const {
  auto it = surname_index_.find(std::string(name));
  if (it == surname_index_.end()) return std::nullopt;
  return it->second;
}

void JointTable::set_covariate_model(std::vector<std::vector<double>> means,
                                     double noise) {
  if (!means.empty() && means.size() != num_geos()) {
    throw Error(ErrorCode::kInvalidConfig, "covariate_means shape");
  }
  covariate_means_ = std::move(means);
  covariate_noise_ = noise;
}

JointTable BuildJoint(const DgpConfig& config) {
  ValidateConfig(config);
  const std::size_t k = config.races.size();
  const std::size_t g_count = config.geo_given_race.front().size();
  const std::size_t s_count = config.surname_given_race.front().size();
  std::vector<std::string> geo_names = config.geo_names;
  std::vector<std::string> surname_names = config.surname_names;
  if (geo_names.empty()) {
    for (std::size_t g = 0; g < g_count; ++g) {
      geo_names.push_back(Numbered("g", g));
    }
  }
  if (surname_names.empty()) {
    for (std::size_t s = 0; s < s_count; ++s) {
      surname_names.push_back(Numbered("SURNAME", s));
    }
  }
  const double v = config.assumption1_violation;
  std::vector<double> mass(k * g_count * s_count * kNumContexts, 0.0);
  double total = 0.0;
  std::size_t index = 0;
  for (std::size_t r = 0; r < k; ++r) {
    for (std::size_t g = 0; g < g_count; ++g) {
      const double race_geo = config.theta[r] * config.geo_given_race[r][g];
      const double rate = config.outcome_rate[r][g];
      for (std::size_t s = 0; s < s_count; ++s) {
        double surname = config.surname_given_race[r][s];
        if (v > 0.0) {
          surname = (1.0 - v) * surname +
                    v * config.surname_given_race_geo[r][g][s];
        }
        const double cell = race_geo * surname;
        mass[index++] = cell * (1.0 - rate);
        mass[index++] = cell * rate;
        total += cell;
      }
    }
  }
  for (double& m : mass) m /= total;
  JointTable table(config.races, std::move(geo_names), std::move(surname_names),
                   std::move(mass));
  table.set_covariate_model(config.covariate_means, config.covariate_noise);
  return table;
}

SupplementalDataset SamplePopulation(const JointTable& table, std::size_t n,
                                     std::uint64_t seed) {
  if (n == 0) {
    throw Error(ErrorCode::kInvalidArgument, "population size must be >= 1");
  }
  std::mt19937_64 rng(seed);
  const auto masses = table.masses();
  std::discrete_distribution<std::size_t> cell(masses.begin(), masses.end());
  std::normal_distribution<double> noise(0.0, 1.0);
  const std::size_t s_count = table.num_surnames();
  const std::size_t g_count = table.num_geos();
  const auto& covariate_means = table.covariate_means();
  const std::size_t p =
      covariate_means.empty() ? 0 : covariate_means.front().size();

  SupplementalDataset dataset;
  for (std::size_t j = 0; j < p; ++j) {
    dataset.covariates.sources.push_back({"z" + std::to_string(j + 1), false, {}});
  }
  dataset.records.reserve(n);
  char id[32];
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t index = cell(rng);
    const int y = static_cast<int>(index % 2);
    index /= 2;
    const std::size_t s = index % s_count;
    index /= s_count;
    const std::size_t g = index % g_count;
    const std::size_t r = index / g_count;
    AttributedRecord record;
    std::snprintf(id, sizeof(id), "p%07zu", i + 1);
    record.id = id;
    record.surname = table.surname_names()[s];
    record.geo = table.geo_names()[g];
    record.context = y;
    record.race = r;
    record.covariates.resize(p);
    for (std::size_t j = 0; j < p; ++j) {
      record.covariates[j] =
          covariate_means[g][j] + table.covariate_noise() * noise(rng);
    }
    dataset.records.push_back(std::move(record));
  }
  return dataset;
}

std::vector<double> RaceMarginal(const JointTable& table) {
  std::vector<double> theta(table.num_races(), 0.0);
  const std::size_t block =
      table.num_geos() * table.num_surnames() * kNumContexts;
  const auto masses = table.masses();
  for (std::size_t r = 0; r < theta.size(); ++r) {
    for (std::size_t i = 0; i < block; ++i) theta[r] += masses[r * block + i];
  }
  return theta;
}

double OutcomeRate(const JointTable& table) {
  double positive = 0.0;
  const auto masses = table.masses();
  for (std::size_t i = 1; i < masses.size(); i += 2) positive += masses[i];
  return positive;
}

double PositiveRate(const JointTable& table, std::size_t race) {
  if (race >= table.num_races()) {
    throw Error(ErrorCode::kInvalidArgument, "race index out of range");
  }
  double group = 0.0;
  double positive = 0.0;
  for (std::size_t g = 0; g < table.num_geos(); ++g) {
    for (std::size_t s = 0; s < table.num_surnames(); ++s) {
      group += table.mass(race, g, s, 0) + table.mass(race, g, s, 1);
      positive += table.mass(race, g, s, 1);
    }
  }
  if (!(group > 0.0)) {
    throw Error(ErrorCode::kZeroMassEvent,
                "race " + table.races().label(race) + " has zero mass");
  }
  return positive / group;
}

RaceDistribution RaceGivenContext(const JointTable& table, int y) {
  CheckContext(y);
  std::vector<double> weights(table.num_races(), 0.0);
  for (std::size_t r = 0; r < weights.size(); ++r) {
    for (std::size_t g = 0; g < table.num_geos(); ++g) {
      for (std::size_t s = 0; s < table.num_surnames(); ++s) {
        weights[r] += table.mass(r, g, s, y);
      }
    }
  }
  return NormalizeOrZeroMass(weights, "Y=" + std::to_string(y));
}

RaceDistribution RaceGivenGeo(const JointTable& table, std::size_t g) {
  CheckGeo(table, g);
  std::vector<double> weights(table.num_races(), 0.0);
  for (std::size_t r = 0; r < weights.size(); ++r) {
    for (std::size_t s = 0; s < table.num_surnames(); ++s) {
      weights[r] += table.mass(r, g, s, 0) + table.mass(r, g, s, 1);
    }
  }
  return NormalizeOrZeroMass(weights, "G=" + table.geo_names()[g]);
}

RaceDistribution RaceGivenGeoContext(const JointTable& table, std::size_t g,
                                     int y) {
  CheckGeo(table, g);
  CheckContext(y);
  std::vector<double> weights(table.num_races(), 0.0);
  for (std::size_t r = 0; r < weights.size(); ++r) {
    for (std::size_t s = 0; s < table.num_surnames(); ++s) {
      weights[r] += table.mass(r, g, s, y);
    }
  }
  return NormalizeOrZeroMass(
      weights, "G=" + table.geo_names()[g] + ", Y=" + std::to_string(y));
}

RaceDistribution RaceGivenGeoSurname(const JointTable& table, std::size_t g,
                                     std::size_t s) {
  CheckGeo(table, g);
  CheckSurname(table, s);
  std::vector<double> weights(table.num_races());
  for (std::size_t r = 0; r < weights.size(); ++r) {
    weights[r] = table.mass(r, g, s, 0) + table.mass(r, g, s, 1);
  }
  return NormalizeOrZeroMass(weights, "G=" + table.geo_names()[g] +
                                          ", S=" + table.surname_names()[s]);
}

RaceDistribution RaceGivenGeoSurnameContext(const JointTable& table,
                                            std::size_t g, std::size_t s,
                                            int y) {
  CheckGeo(table, g);
  CheckSurname(table, s);
  CheckContext(y);
  std::vector<double> weights(table.num_races());
  for (std::size_t r = 0; r < weights.size(); ++r) {
    weights[r] = table.mass(r, g, s, y);
  }
  return NormalizeOrZeroMass(weights, "G=" + table.geo_names()[g] +
                                          ", S=" + table.surname_names()[s] +
                                          ", Y=" + std::to_string(y));
}

OracleContextualProxy::OracleContextualProxy(
    std::shared_ptr<const JointTable> table)
    : table_(std::move(table)) {
  const std::size_t k = table_->num_races();
  const std::size_t cells = table_->num_geos() * table_->num_surnames() * 2;
  conditional_.assign(cells * k, 0.0);
  positive_.assign(cells, false);
  for (std::size_t cell = 0; cell < cells; ++cell) {
    const int y = static_cast<int>(cell % 2);
    const std::size_t s = (cell / 2) % table_->num_surnames();
    const std::size_t g = cell / 2 / table_->num_surnames();
    double total = 0.0;
    for (std::size_t r = 0; r < k; ++r) total += table_->mass(r, g, s, y);
    if (!(total > 0.0)) continue;
    positive_[cell] = true;
    for (std::size_t r = 0; r < k; ++r) {
      conditional_[cell * k + r] = table_->mass(r, g, s, y) / total;
    }
  }
  for (int y = 0; y < kNumContexts; ++y) {
    fallback_.push_back(RaceGivenContext(*table_, y));
  }
}

RaceDistribution OracleContextualProxy::Evaluate(const AttributedRecord& record,
                                                 int context) const {
  CheckContext(context);
  const auto g = table_->GeoIndex(record.geo);
  if (!g) {
    throw Error(ErrorCode::kUnknownGeo, "geo '" + record.geo + "'");
  }
  const auto s = table_->SurnameIndex(NormalizeName(record.surname));
  if (!s) return fallback_[context];
  const std::size_t cell = (*g * table_->num_surnames() + *s) * 2 + context;
  if (!positive_[cell]) return fallback_[context];
  const std::size_t k = table_->num_races();
  return Normalize(std::span<const double>(conditional_).subspan(cell * k, k));
}

OracleProxy::OracleProxy(std::shared_ptr<const JointTable> table)
    : table_(std::move(table)) {
  const std::size_t k = table_->num_races();
  const std::size_t cells = table_->num_geos() * table_->num_surnames();
  conditional_.assign(cells * k, 0.0);
  positive_.assign(cells, false);
  for (std::size_t cell = 0; cell < cells; ++cell) {
    const std::size_t s = cell % table_->num_surnames();
    const std::size_t g = cell / table_->num_surnames();
    double total = 0.0;
    for (std::size_t r = 0; r < k; ++r) {
      total += table_->mass(r, g, s, 0) + table_->mass(r, g, s, 1);
    }
    if (!(total > 0.0)) continue;
    positive_[cell] = true;
    for (std::size_t r = 0; r < k; ++r) {
      conditional_[cell * k + r] =
          (table_->mass(r, g, s, 0) + table_->mass(r, g, s, 1)) / total;
    }
  }
}

RaceDistribution OracleProxy::Evaluate(const AttributedRecord& record,
                                       int context) const {
  CheckContext(context);
  const auto g = table_->GeoIndex(record.geo);
  if (!g) {
    throw Error(ErrorCode::kUnknownGeo, "geo '" + record.geo + "'");
  }
  const auto s = table_->SurnameIndex(NormalizeName(record.surname));
  if (!s || !positive_[*g * table_->num_surnames() + *s]) {
    return RaceGivenGeo(*table_, *g);
  }
  const std::size_t k = table_->num_races();
  return Normalize(std::span<const double>(conditional_)
                       .subspan((*g * table_->num_surnames() + *s) * k, k));
}

CensusTables ExactCensusTables(const JointTable& table, double population,
                               bool round_counts) {
  if (!(population > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "population must be positive");
  }
  const std::size_t k = table.num_races();
  auto scale = [&](double mass) {
    const double count = population * mass;
    return round_counts ? std::round(count) : count;
  };
  CensusTables census{SurnameTable(table.races()), GeoTable(table.races())};
  for (std::size_t s = 0; s < table.num_surnames(); ++s) {
    std::vector<double> counts(k, 0.0);
    for (std::size_t r = 0; r < k; ++r) {
      double mass = 0.0;
      for (std::size_t g = 0; g < table.num_geos(); ++g) {
        mass += table.mass(r, g, s, 0) + table.mass(r, g, s, 1);
      }
      counts[r] = scale(mass);
    }
    census.surnames.Add(table.surname_names()[s], std::move(counts));
  }
  for (std::size_t g = 0; g < table.num_geos(); ++g) {
    std::vector<double> counts(k, 0.0);
    for (std::size_t r = 0; r < k; ++r) {
      double mass = 0.0;
      for (std::size_t s = 0; s < table.num_surnames(); ++s) {
        mass += table.mass(r, g, s, 0) + table.mass(r, g, s, 1);
      }
      counts[r] = scale(mass);
    }
    if (std::all_of(counts.begin(), counts.end(),
                    [](double c) { return c == 0.0; })) {
      continue;
    }
    census.geos.Add(table.geo_names()[g], std::move(counts));
  }
  return census;
}

WeightedPopulation PopulationRecords(const JointTable& table) {
  WeightedPopulation population;
  for (std::size_t r = 0; r < table.num_races(); ++r) {
    for (std::size_t g = 0; g < table.num_geos(); ++g) {
      for (std::size_t s = 0; s < table.num_surnames(); ++s) {
        for (int y = 0; y < kNumContexts; ++y) {
          const double m = table.mass(r, g, s, y);
          if (!(m > 0.0)) continue;
          AttributedRecord record;
          record.id = std::to_string(table.Index(r, g, s, y));
          record.surname = table.surname_names()[s];
          record.geo = table.geo_names()[g];
          record.context = y;
          record.race = r;
          population.records.push_back(std::move(record));
          population.weights.push_back(m);
        }
      }
    }
  }
  return population;
}

std::string SerializeJointTable(const JointTable& table) {
  std::string out = "r,g,s,y,mass\n";
  for (std::size_t r = 0; r < table.num_races(); ++r) {
    for (std::size_t g = 0; g < table.num_geos(); ++g) {
      for (std::size_t s = 0; s < table.num_surnames(); ++s) {
        for (int y = 0; y < kNumContexts; ++y) {
          out += table.races().label(r) + "," + table.geo_names()[g] + "," +
                 table.surname_names()[s] + "," + std::to_string(y) + "," +
                 csv::FormatDouble(table.mass(r, g, s, y), 17) + "\n";
        }
      }
    }
  }
  return out;
}

namespace {

JointTable JointTableFromRows(const std::vector<csv::Row>& rows) {
  if (rows.empty() ||
      rows.front() != csv::Row{"r", "g", "s", "y", "mass"}) {
    throw Error(ErrorCode::kHeaderMismatch, "expected header 'r,g,s,y,mass'");
  }
  std::vector<std::string> races, geos, surnames;
  std::map<std::string, std::size_t> race_index, geo_index, surname_index;
  auto intern = [](std::map<std::string, std::size_t>& index,
                   std::vector<std::string>& names, const std::string& name) {
    auto [it, inserted] = index.emplace(name, names.size());
    if (inserted) names.push_back(name);
    return it->second;
  };
  struct Entry {
    std::size_t r, g, s;
    int y;
    double mass;
  };
  std::vector<Entry> entries;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const auto& row = rows[i];
    const std::string where = "line " + std::to_string(i + 1);
    if (row.size() != 5) {
      throw Error(ErrorCode::kMalformedRow, where + ": wrong column count");
    }
    if (row[3] != "0" && row[3] != "1") {
      throw Error(ErrorCode::kInvalidContext, where + ": y must be 0 or 1");
    }
    double mass = 0.0;
    if (!csv::ParseDouble(row[4], &mass) || mass < 0.0) {
      throw Error(ErrorCode::kMalformedRow, where + ": bad mass");
    }
    entries.push_back({intern(race_index, races, row[0]),
                       intern(geo_index, geos, row[1]),
                       intern(surname_index, surnames, NormalizeName(row[2])),
                       row[3] == "1" ? 1 : 0, mass});
  }
  if (races.size() < 2) {
    throw Error(ErrorCode::kInvalidConfig, "joint table needs >= 2 races");
  }
  const std::size_t size = races.size() * geos.size() * surnames.size() * 2;
  std::vector<double> mass(size, 0.0);
  std::vector<bool> seen(size, false);
  for (const auto& e : entries) {
    const std::size_t index =
        ((e.r * geos.size() + e.g) * surnames.size() + e.s) * 2 + e.y;
    if (seen[index]) {
      throw Error(ErrorCode::kMalformedRow, "duplicate joint table cell");
    }
    seen[index] = true;
    mass[index] = e.mass;
  }
  return JointTable(RaceSet(races), std::move(geos), std::move(surnames),
                    std::move(mass));
}

}  // namespace

JointTable ParseJointTable(std::string_view text) {
  return JointTableFromRows(csv::ParseText(text));
}

JointTable LoadJointTable(const std::string& path) {
  return JointTableFromRows(csv::ReadFile(path));
}

}  // namespace fairproxy
