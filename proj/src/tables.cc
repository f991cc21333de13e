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

#include "fairproxy/tables.h"

#include <algorithm>
#include <cmath>
#include <set>

#include "fairproxy/csv.h"

namespace fairproxy {
namespace {

std::string Trim(std::string_view text) {
  const auto first = text.find_first_not_of(" \t");
  if (first == std::string_view::npos) return "";
  const auto last = text.find_last_not_of(" \t");
  return std::string(text.substr(first, last - first + 1));
}

void ValidateCounts(const std::vector<double>& counts, std::size_t k,
                    std::string_view what) {
  if (counts.size() != k) {
    throw Error(ErrorCode::kLengthMismatch,
                std::string(what) + ": expected " + std::to_string(k) +
                    " counts, got " + std::to_string(counts.size()));
  }
  for (double c : counts) {
    if (!std::isfinite(c) || c < 0.0) {
      throw Error(ErrorCode::kMalformedRow,
                  std::string(what) + ": counts must be finite and >= 0");
    }
  }
}

std::string RowContext(std::size_t line) {
  return "line " + std::to_string(line);
}

// Parses "key,c_1,...,c_K" rows after checking the header against the races.
template <typename AddFn>
void ParseCountTable(const std::vector<csv::Row>& rows, const RaceSet& races,
                     std::string_view key_column, AddFn add) {
  if (rows.empty()) {
    throw Error(ErrorCode::kHeaderMismatch, "missing header row");
  }
  const auto& header = rows.front();
  const std::size_t k = races.size();
  bool header_ok = header.size() == k + 1 && Trim(header[0]) == key_column;
  for (std::size_t r = 0; header_ok && r < k; ++r) {
    header_ok = Trim(header[r + 1]) == races.label(r);
  }
  if (!header_ok) {
    std::string expected(key_column);
    for (const auto& label : races.labels()) expected += "," + label;
    throw Error(ErrorCode::kHeaderMismatch,
                "expected header '" + expected + "'");
  }
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const auto& row = rows[i];
    if (row.size() != k + 1) {
      throw Error(ErrorCode::kMalformedRow,
                  RowContext(i + 1) + ": expected " + std::to_string(k + 1) +
                      " columns, got " + std::to_string(row.size()));
    }
    std::vector<double> counts(k);
    for (std::size_t r = 0; r < k; ++r) {
      if (!csv::ParseDouble(row[r + 1], &counts[r]) || counts[r] < 0.0) {
        throw Error(ErrorCode::kMalformedRow,
                    RowContext(i + 1) + ": invalid count '" + row[r + 1] + "'");
      }
    }
    add(Trim(row[0]), std::move(counts), i + 1);
  }
}

template <typename Table>
std::string SerializeCounts(const Table& table, std::string_view key_column,
                            const std::vector<std::string>& keys) {
  std::string out(key_column);
  for (const auto& label : table.races().labels()) out += "," + label;
  out += "\n";
  for (const auto& key : keys) {
    out += key;
    for (double c : table.counts(key)) out += "," + csv::FormatCount(c);
    out += "\n";
  }
  return out;
}

}  // namespace

SurnameTable::SurnameTable(RaceSet races)
    : races_(std::move(races)),
      residual_(races_.size(), 0.0),
      race_totals_(races_.size(), 0.0) {}

void SurnameTable::Add(std::string_view surname, std::vector<double> counts) {
  ValidateCounts(counts, races_.size(), "surname row");
  std::string key = NormalizeName(surname);
  if (key.empty()) {
    throw Error(ErrorCode::kMalformedRow, "empty surname");
  }
  if (key == kResidualSurname) {
    SetResidual(std::move(counts));
    return;
  }
  if (counts_.contains(key)) {
    throw Error(ErrorCode::kDuplicateSurname, "surname '" + key + "'");
  }
  for (std::size_t r = 0; r < counts.size(); ++r) race_totals_[r] += counts[r];
  surnames_.push_back(key);
  counts_.emplace(std::move(key), std::move(counts));
}

void SurnameTable::SetResidual(std::vector<double> counts) {
  ValidateCounts(counts, races_.size(), "residual row");
  for (std::size_t r = 0; r < counts.size(); ++r) {
    race_totals_[r] += counts[r] - residual_[r];
  }
  residual_ = std::move(counts);
}

bool SurnameTable::Contains(std::string_view surname) const {
  return counts_.contains(NormalizeName(surname));
}

const std::vector<double>& SurnameTable::counts(std::string_view surname) const {
  const std::string key = NormalizeName(surname);
  if (key == kResidualSurname) return residual_;
  auto it = counts_.find(key);
  if (it == counts_.end()) {
    throw Error(ErrorCode::kInvalidArgument, "surname '" + key + "' not listed");
  }
  return it->second;
}

std::optional<std::vector<double>> SurnameTable::SurnameGivenRace(
    std::string_view surname) const {
  if (surname.empty()) return std::nullopt;
  auto it = counts_.find(NormalizeName(surname));
  if (it == counts_.end()) return std::nullopt;
  std::vector<double> probs(races_.size(), 0.0);
  for (std::size_t r = 0; r < probs.size(); ++r) {
    if (race_totals_[r] > 0.0) probs[r] = it->second[r] / race_totals_[r];
  }
  return probs;
}

GeoTable::GeoTable(RaceSet races) : races_(std::move(races)) {}

void GeoTable::Add(std::string_view geo, std::vector<double> counts) {
  ValidateCounts(counts, races_.size(), "geo row");
  std::string key = Trim(geo);
  if (key.empty()) throw Error(ErrorCode::kMalformedRow, "empty geo id");
  if (counts_.contains(key)) {
    throw Error(ErrorCode::kDuplicateGeo, "geo '" + key + "'");
  }
  if (std::all_of(counts.begin(), counts.end(),
                  [](double c) { return c == 0.0; })) {
    throw Error(ErrorCode::kZeroGeoRow, "geo '" + key + "' has no population");
  }
  geos_.push_back(key);
  counts_.emplace(std::move(key), std::move(counts));
}

bool GeoTable::Contains(std::string_view geo) const {
  return counts_.contains(std::string(geo));
}

const std::vector<double>& GeoTable::counts(std::string_view geo) const {
  auto it = counts_.find(std::string(geo));
  if (it == counts_.end()) {
    throw Error(ErrorCode::kUnknownGeo, "geo '" + std::string(geo) + "'");
  }
  return it->second;
}

RaceDistribution GeoTable::RaceGivenGeo(std::string_view geo) const {
  return Normalize(counts(geo));
}

SurnameTable ParseSurnameTable(std::string_view text, const RaceSet& races) {
  SurnameTable table(races);
  ParseCountTable(csv::ParseText(text), races, "surname",
                  [&](std::string key, std::vector<double> counts,
                      std::size_t line) {
                    try {
                      table.Add(key, std::move(counts));
                    } catch (const Error& e) {
                      throw Error(e.code(), RowContext(line) + ": " + e.what());
                    }
                  });
  return table;
}

SurnameTable LoadSurnameTable(const std::string& path, const RaceSet& races) {
  SurnameTable table(races);
  ParseCountTable(csv::ReadFile(path), races, "surname",
                  [&](std::string key, std::vector<double> counts,
                      std::size_t line) {
                    try {
                      table.Add(key, std::move(counts));
                    } catch (const Error& e) {
                      throw Error(e.code(), path + " " + RowContext(line) +
                                                ": " + e.what());
                    }
                  });
  return table;
}

GeoTable ParseGeoTable(std::string_view text, const RaceSet& races) {
  GeoTable table(races);
  ParseCountTable(csv::ParseText(text), races, "geo_id",
                  [&](std::string key, std::vector<double> counts,
                      std::size_t line) {
                    try {
                      table.Add(key, std::move(counts));
                    } catch (const Error& e) {
                      throw Error(e.code(), RowContext(line) + ": " + e.what());
                    }
                  });
  return table;
}

GeoTable LoadGeoTable(const std::string& path, const RaceSet& races) {
  GeoTable table(races);
  ParseCountTable(csv::ReadFile(path), races, "geo_id",
                  [&](std::string key, std::vector<double> counts,
                      std::size_t line) {
                    try {
                      table.Add(key, std::move(counts));
                    } catch (const Error& e) {
                      throw Error(e.code(), path + " " + RowContext(line) +
                                                ": " + e.what());
                    }
                  });
  return table;
}

std::string SerializeSurnameTable(const SurnameTable& table) {
  std::vector<std::string> keys = table.surnames();
  const auto& residual = table.residual();
  if (std::any_of(residual.begin(), residual.end(),
                  [](double c) { return c != 0.0; })) {
    keys.emplace_back(kResidualSurname);
  }
  return SerializeCounts(table, "surname", keys);
}

std::string SerializeGeoTable(const GeoTable& table) {
  return SerializeCounts(table, "geo_id", table.geos());
}

std::string ExportSurnameProbabilities(const SurnameTable& table) {
  std::string out = "surname";
  for (const auto& label : table.races().labels()) out += "," + label;
  out += "\n";
  for (const auto& surname : table.surnames()) {
    out += surname;
    for (double p : *table.SurnameGivenRace(surname)) {
      out += "," + csv::FormatDouble(p, 12);
    }
    out += "\n";
  }
  return out;
}

std::string ExportGeoProbabilities(const GeoTable& table) {
  std::string out = "geo_id";
  for (const auto& label : table.races().labels()) out += "," + label;
  out += "\n";
  for (const auto& geo : table.geos()) {
    out += geo;
    for (double p : table.RaceGivenGeo(geo).probs()) {
      out += "," + csv::FormatDouble(p, 12);
    }
    out += "\n";
  }
  return out;
}

RaceSet RaceSetFromHeader(const std::string& path) {
  const auto rows = csv::ReadFile(path);
  if (rows.empty() || rows.front().size() < 3) {
    throw Error(ErrorCode::kHeaderMismatch,
                "'" + path + "' has no usable header row");
  }
  std::vector<std::string> labels;
  for (std::size_t i = 1; i < rows.front().size(); ++i) {
    labels.push_back(Trim(rows.front()[i]));
  }
  return RaceSet(std::move(labels));
}

std::size_t CovariateLayout::width() const {
  std::size_t width = 0;
  for (const auto& source : sources) {
    width += source.categorical ? source.levels.size() : 1;
  }
  return width;
}

std::vector<std::string> CovariateLayout::ExpandedNames() const {
  std::vector<std::string> names;
  for (const auto& source : sources) {
    if (!source.categorical) {
      names.push_back(source.name);
      continue;
    }
    for (const auto& level : source.levels) {
      names.push_back(source.name + "=" + level);
    }
  }
  return names;
}

std::vector<bool> CovariateLayout::IndicatorMask() const {
  std::vector<bool> mask;
  for (const auto& source : sources) {
    if (source.categorical) {
      mask.insert(mask.end(), source.levels.size(), true);
    } else {
      mask.push_back(false);
    }
  }
  return mask;
}

bool SupplementalDataset::labeled() const {
  return !records.empty() &&
         std::all_of(records.begin(), records.end(),
                     [](const AttributedRecord& r) { return r.race.has_value(); });
}

namespace {

constexpr std::string_view kCategoricalPrefix = "cat:";
constexpr std::size_t kFixedColumns = 5;

SupplementalDataset ParseSupplementalRows(const std::vector<csv::Row>& rows,
                                          const RaceSet& races,
                                          const CovariateLayout* layout) {
  if (rows.empty()) {
    throw Error(ErrorCode::kHeaderMismatch, "missing header row");
  }
  const auto& header = rows.front();
  static const char* kExpected[kFixedColumns] = {"id", "surname", "geo", "y",
                                                 "race"};
  if (header.size() < kFixedColumns) {
    throw Error(ErrorCode::kHeaderMismatch,
                "expected header 'id,surname,geo,y,race[,covariates...]'");
  }
  for (std::size_t c = 0; c < kFixedColumns; ++c) {
    if (Trim(header[c]) != kExpected[c]) {
      throw Error(ErrorCode::kHeaderMismatch,
                  "column " + std::to_string(c + 1) + " must be '" +
                      kExpected[c] + "'");
    }
  }

  SupplementalDataset dataset;
  for (std::size_t c = kFixedColumns; c < header.size(); ++c) {
    std::string name = Trim(header[c]);
    CovariateSource source;
    if (name.rfind(kCategoricalPrefix, 0) == 0) {
      source.categorical = true;
      source.name = name.substr(kCategoricalPrefix.size());
    } else {
      source.name = name;
    }
    if (source.name.empty()) {
      throw Error(ErrorCode::kHeaderMismatch, "empty covariate column name");
    }
    dataset.covariates.sources.push_back(std::move(source));
  }
  const std::size_t num_sources = dataset.covariates.sources.size();
  if (layout != nullptr) {
    bool same = layout->sources.size() == num_sources;
    for (std::size_t s = 0; same && s < num_sources; ++s) {
      same = layout->sources[s].name == dataset.covariates.sources[s].name &&
             layout->sources[s].categorical ==
                 dataset.covariates.sources[s].categorical;
    }
    if (!same) {
      throw Error(ErrorCode::kHeaderMismatch,
                  "covariate columns differ from the fitted layout");
    }
    dataset.covariates = *layout;
  } else {
    // Collect categorical levels first so the expansion is file-order free.
    for (std::size_t s = 0; s < num_sources; ++s) {
      auto& source = dataset.covariates.sources[s];
      if (!source.categorical) continue;
      std::set<std::string> levels;
      for (std::size_t i = 1; i < rows.size(); ++i) {
        if (rows[i].size() == header.size()) {
          levels.insert(Trim(rows[i][kFixedColumns + s]));
        }
      }
      source.levels.assign(levels.begin(), levels.end());
    }
  }

  dataset.records.reserve(rows.size() - 1);
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const auto& row = rows[i];
    const std::string where = RowContext(i + 1);
    if (row.size() != header.size()) {
      throw Error(ErrorCode::kInconsistentCovariateArity,
                  where + ": expected " + std::to_string(header.size()) +
                      " columns, got " + std::to_string(row.size()));
    }
    AttributedRecord record;
    record.id = Trim(row[0]);
    record.surname = NormalizeName(row[1]);
    record.geo = Trim(row[2]);
    const std::string y = Trim(row[3]);
    if (y == "0") {
      record.context = 0;
    } else if (y == "1") {
      record.context = 1;
    } else {
      throw Error(ErrorCode::kInvalidContext,
                  where + ": y must be 0 or 1, got '" + y + "'");
    }
    const std::string race = Trim(row[4]);
    if (!race.empty()) {
      record.race = races.IndexOf(race);
      if (!record.race) {
        throw Error(ErrorCode::kUnknownRace,
                    where + ": unknown race '" + race + "'");
      }
    }
    record.covariates.reserve(dataset.covariates.width());
    for (std::size_t s = 0; s < num_sources; ++s) {
      const auto& source = dataset.covariates.sources[s];
      const std::string& field = row[kFixedColumns + s];
      if (source.categorical) {
        const std::string level = Trim(field);
        for (const auto& candidate : source.levels) {
          record.covariates.push_back(candidate == level ? 1.0 : 0.0);
        }
      } else {
        double value = 0.0;
        if (!csv::ParseDouble(field, &value)) {
          throw Error(ErrorCode::kMalformedRow,
                      where + ": covariate '" + source.name +
                          "' is not numeric: '" + field + "'");
        }
        record.covariates.push_back(value);
      }
    }
    dataset.records.push_back(std::move(record));
  }
  return dataset;
}

}  // namespace

SupplementalDataset ParseSupplemental(std::string_view text,
                                      const RaceSet& races,
                                      const CovariateLayout* layout) {
  return ParseSupplementalRows(csv::ParseText(text), races, layout);
}

SupplementalDataset LoadSupplemental(const std::string& path,
                                     const RaceSet& races,
                                     const CovariateLayout* layout) {
  try {
    return ParseSupplementalRows(csv::ReadFile(path), races, layout);
  } catch (const Error& e) {
    if (e.code() == ErrorCode::kIo) throw;
    throw Error(e.code(), path + ": " + e.what());
  }
}

std::string SerializeSupplemental(const SupplementalDataset& dataset,
                                  const RaceSet& races) {
  std::string out = "id,surname,geo,y,race";
  for (const auto& source : dataset.covariates.sources) {
    out += ",";
    if (source.categorical) out += kCategoricalPrefix;
    out += source.name;
  }
  out += "\n";
  for (const auto& record : dataset.records) {
    out += record.id + "," + record.surname + "," + record.geo + "," +
           std::to_string(record.context) + ",";
    if (record.race) out += races.label(*record.race);
    std::size_t column = 0;
    for (const auto& source : dataset.covariates.sources) {
      out += ",";
      if (source.categorical) {
        for (const auto& level : source.levels) {
          if (record.covariates.at(column++) == 1.0) out += level;
        }
      } else {
        out += csv::FormatDouble(record.covariates.at(column++), 17);
      }
    }
    out += "\n";
  }
  return out;
}

std::vector<double> CovariateTransform::Apply(
    std::span<const double> covariates) const {
  if (covariates.size() != means.size()) {
    throw Error(ErrorCode::kLengthMismatch, "covariate vector length " +
                                                std::to_string(covariates.size()) +
                                                " vs transform width " +
                                                std::to_string(means.size()));
  }
  std::vector<double> out(covariates.size());
  for (std::size_t j = 0; j < out.size(); ++j) {
    const double centered = covariates[j] - means[j];
    out[j] = stds[j] > 0.0 ? centered / stds[j] : centered;
  }
  return out;
}

SupplementalDataset CovariateTransform::Apply(
    const SupplementalDataset& dataset) const {
  SupplementalDataset out = dataset;
  for (auto& record : out.records) record.covariates = Apply(record.covariates);
  return out;
}

StandardizeResult StandardizeCovariates(const SupplementalDataset& dataset) {
  if (dataset.records.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "cannot standardize empty dataset");
  }
  const std::size_t width = dataset.covariates.width();
  const auto indicator = dataset.covariates.IndicatorMask();
  const double n = static_cast<double>(dataset.records.size());

  StandardizeResult result;
  result.transform.means.assign(width, 0.0);
  result.transform.stds.assign(width, 1.0);
  for (std::size_t j = 0; j < width; ++j) {
    if (indicator[j]) continue;
    double mean = 0.0;
    for (const auto& record : dataset.records) mean += record.covariates.at(j);
    mean /= n;
    double variance = 0.0;
    for (const auto& record : dataset.records) {
      const double d = record.covariates[j] - mean;
      variance += d * d;
    }
    variance /= n;
    result.transform.means[j] = mean;
    result.transform.stds[j] = std::sqrt(variance);
    if (!(result.transform.stds[j] > 0.0)) {
      result.transform.stds[j] = 0.0;
      result.zero_variance_columns.push_back(j);
    }
  }
  result.dataset = result.transform.Apply(dataset);
  return result;
}

std::vector<double> GroupCounts(const SupplementalDataset& dataset,
                                std::size_t num_races, std::string_view geo,
                                int context) {
  CheckContext(context);
  if (!dataset.labeled()) {
    throw Error(ErrorCode::kUnlabeledDataset,
                "group counts need race labels on every record");
  }
  std::vector<double> counts(num_races, 0.0);
  for (const auto& record : dataset.records) {
    if (record.geo == geo && record.context == context) {
      counts.at(*record.race) += 1.0;
    }
  }
  return counts;
}

std::map<CellKey, std::vector<double>> CountCells(
    const SupplementalDataset& dataset, std::size_t num_races) {
  if (!dataset.labeled()) {
    throw Error(ErrorCode::kUnlabeledDataset,
                "cell counts need race labels on every record");
  }
  std::map<CellKey, std::vector<double>> cells;
  for (const auto& record : dataset.records) {
    auto [it, inserted] = cells.try_emplace(
        CellKey{record.geo, record.context}, num_races, 0.0);
    it->second.at(*record.race) += 1.0;
  }
  return cells;
}

std::uint64_t HashId(std::string_view id, std::uint64_t seed) {
  // FNV-1a, then a splitmix64 finalizer over the seed-mixed value.
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : id) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  std::uint64_t z = h ^ (seed + 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::pair<SupplementalDataset, SupplementalDataset> SplitByIdHash(
    const SupplementalDataset& dataset, double train_fraction,
    std::uint64_t seed) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
    throw Error(ErrorCode::kInvalidArgument,
                "train fraction must lie in (0, 1)");
  }
  SupplementalDataset train;
  SupplementalDataset test;
  train.covariates = dataset.covariates;
  test.covariates = dataset.covariates;
  for (const auto& record : dataset.records) {
    // Top 53 bits as a uniform double in [0, 1).
    const double u =
        static_cast<double>(HashId(record.id, seed) >> 11) * 0x1.0p-53;
    (u < train_fraction ? train : test).records.push_back(record);
  }
  return {std::move(train), std::move(test)};
}

}  // namespace fairproxy
