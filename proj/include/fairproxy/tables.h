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

// Census-style count tables and supplemental attributed datasets.
//
//   surnames.csv      surname,<race_1>,...,<race_K>
//   geo.csv           geo_id,<race_1>,...,<race_K>
//   supplemental.csv  id,surname,geo,y,race[,cov_1,...,cov_p]
//
// Surname tables store counts; Pr[S=s|R=r] is derived as count / race total.
// A reserved row named "ALL OTHER NAMES" holds the population of surnames the
// census omits, so derived surname probabilities sum to at most one per race.
// Supplemental covariate columns named "cat:<name>" are categorical and are
// one-hot expanded at load time.

#ifndef FAIRPROXY_TABLES_H_
#define FAIRPROXY_TABLES_H_

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "fairproxy/domain.h"

namespace fairproxy {

inline constexpr std::string_view kResidualSurname = "ALL OTHER NAMES";

class SurnameTable {
 public:
  explicit SurnameTable(RaceSet races);

  // Surname is normalized (trimmed, uppercased). Throws kDuplicateSurname,
  // kMalformedRow (negative/non-finite count) or kLengthMismatch.
  void Add(std::string_view surname, std::vector<double> counts);
  void SetResidual(std::vector<double> counts);

  const RaceSet& races() const { return races_; }
  std::size_t size() const { return surnames_.size(); }
  bool Contains(std::string_view surname) const;

  // Surnames in insertion order.
  const std::vector<std::string>& surnames() const { return surnames_; }
  const std::vector<double>& counts(std::string_view surname) const;
  const std::vector<double>& residual() const { return residual_; }

  // Per-race totals over listed surnames plus the residual row.
  const std::vector<double>& race_totals() const { return race_totals_; }

  // Pr[S=s|R=r] for every r; nullopt when s is empty or not listed. A race
  // with zero total yields probability 0.
  std::optional<std::vector<double>> SurnameGivenRace(
      std::string_view surname) const;

 private:
  RaceSet races_;
  std::vector<std::string> surnames_;
  std::unordered_map<std::string, std::vector<double>> counts_;
  std::vector<double> residual_;
  std::vector<double> race_totals_;
};

class GeoTable {
 public:
  explicit GeoTable(RaceSet races);

  // Throws kDuplicateGeo, kZeroGeoRow, kMalformedRow or kLengthMismatch.
  void Add(std::string_view geo, std::vector<double> counts);

  const RaceSet& races() const { return races_; }
  std::size_t size() const { return geos_.size(); }
  bool Contains(std::string_view geo) const;
  const std::vector<std::string>& geos() const { return geos_; }

  // Census counts C^(g). Throws kUnknownGeo.
  const std::vector<double>& counts(std::string_view geo) const;

  // Pr[R|G=g] = C^(g) / sum C^(g). Throws kUnknownGeo.
  RaceDistribution RaceGivenGeo(std::string_view geo) const;

 private:
  RaceSet races_;
  std::vector<std::string> geos_;
  std::unordered_map<std::string, std::vector<double>> counts_;
};

SurnameTable LoadSurnameTable(const std::string& path, const RaceSet& races);
SurnameTable ParseSurnameTable(std::string_view text, const RaceSet& races);
GeoTable LoadGeoTable(const std::string& path, const RaceSet& races);
GeoTable ParseGeoTable(std::string_view text, const RaceSet& races);

// Canonical CSV (counts as integers where integral, insertion order).
std::string SerializeSurnameTable(const SurnameTable& table);
std::string SerializeGeoTable(const GeoTable& table);

// Derived conditional tables, 12 significant digits.
std::string ExportSurnameProbabilities(const SurnameTable& table);
std::string ExportGeoProbabilities(const GeoTable& table);

// Reads the race labels from a count-table header (all columns after the
// first). Used when the race set is not given explicitly.
RaceSet RaceSetFromHeader(const std::string& path);

struct CovariateSource {
  std::string name;
  bool categorical = false;
  std::vector<std::string> levels;  // sorted; only for categorical sources
};

// Declared covariate layout: sources in file order, categorical sources
// expanded into one indicator column per level.
struct CovariateLayout {
  std::vector<CovariateSource> sources;

  std::size_t width() const;
  std::vector<std::string> ExpandedNames() const;
  std::vector<bool> IndicatorMask() const;
};

struct SupplementalDataset {
  std::vector<AttributedRecord> records;
  CovariateLayout covariates;

  std::size_t size() const { return records.size(); }
  // True when the dataset is nonempty and every record carries a race.
  bool labeled() const;
};

// When `layout` is given, categorical levels are taken from it (unseen levels
// encode as all-zero indicators) and the header must declare the same
// sources. Throws kHeaderMismatch, kMalformedRow, kInvalidContext,
// kUnknownRace or kInconsistentCovariateArity.
SupplementalDataset LoadSupplemental(const std::string& path,
                                     const RaceSet& races,
                                     const CovariateLayout* layout = nullptr);
SupplementalDataset ParseSupplemental(std::string_view text,
                                      const RaceSet& races,
                                      const CovariateLayout* layout = nullptr);
std::string SerializeSupplemental(const SupplementalDataset& dataset,
                                  const RaceSet& races);

// Per-column affine transform. Indicator columns keep mean 0 / std 1; a
// zero-variance numeric column stores std 0 and is only mean-centered.
struct CovariateTransform {
  std::vector<double> means;
  std::vector<double> stds;

  std::vector<double> Apply(std::span<const double> covariates) const;
  SupplementalDataset Apply(const SupplementalDataset& dataset) const;
};

struct StandardizeResult {
  SupplementalDataset dataset;
  CovariateTransform transform;
  std::vector<std::size_t> zero_variance_columns;
};

// Fits population mean / standard deviation per numeric covariate column.
// Throws kInvalidArgument on an empty dataset.
StandardizeResult StandardizeCovariates(const SupplementalDataset& dataset);

// n^(g) for the (geo, context) cell. Throws kUnlabeledDataset.
std::vector<double> GroupCounts(const SupplementalDataset& dataset,
                                std::size_t num_races, std::string_view geo,
                                int context);

// All nonempty (geo, context) cells at once.
using CellKey = std::pair<std::string, int>;
std::map<CellKey, std::vector<double>> CountCells(
    const SupplementalDataset& dataset, std::size_t num_races);

// Stable 64-bit hash of a record id mixed with a seed.
std::uint64_t HashId(std::string_view id, std::uint64_t seed);

// Seed-deterministic split by hashed record id: stable under row reordering.
// Throws kInvalidArgument unless 0 < train_fraction < 1.
std::pair<SupplementalDataset, SupplementalDataset> SplitByIdHash(
    const SupplementalDataset& dataset, double train_fraction,
    std::uint64_t seed);

}  // namespace fairproxy

#endif  // FAIRPROXY_TABLES_H_
