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

#include "fairproxy/cbisg.h"

#include <algorithm>
#include <cmath>
#include <limits>

#include "fairproxy/bisg.h"
#include "fairproxy/csv.h"

namespace fairproxy {
namespace {

void CheckEta(double eta) {
  if (!(eta >= 0.0 && eta <= 1.0)) {
    throw Error(ErrorCode::kInvalidArgument,
                "eta must lie in [0, 1], got " + std::to_string(eta));
  }
}

std::vector<double> Zeros(std::size_t k) { return std::vector<double>(k, 0.0); }

// Records of one geography, tuned as a block.
EtaTuningResult TuneEtaForRecords(const std::vector<double>& census,
                                  const SurnameTable& surnames,
                                  std::span<const AttributedRecord> records,
                                  const EtaTuningConfig& config) {
  if (config.candidates.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "empty eta candidate list");
  }
  for (double eta : config.candidates) CheckEta(eta);
  if (config.estimator == EstimatorKind::kTrue) {
    throw Error(ErrorCode::kInvalidArgument,
                "eta tuning needs a proxy-based estimator");
  }
  EtaTuningResult result;
  result.eta = config.default_eta;
  const std::size_t k = census.size();
  const bool labeled =
      !records.empty() &&
      std::all_of(records.begin(), records.end(),
                  [](const AttributedRecord& r) { return r.race.has_value(); });
  if (!labeled) {
    result.used_default = true;
    return result;
  }

  std::array<std::vector<double>, kNumContexts> observed = {Zeros(k), Zeros(k)};
  std::vector<double> group(k, 0.0);
  for (const auto& record : records) {
    observed[record.context].at(*record.race) += 1.0;
    group[*record.race] += 1.0;
  }
  std::vector<double> truth(k, 0.0);
  std::vector<std::size_t> present;
  for (std::size_t r = 0; r < k; ++r) {
    if (group[r] > 0.0) {
      present.push_back(r);
      truth[r] = TruePositiveRate(records, r);
    }
  }
  const std::vector<int> outcomes = Outcomes(records);

  double best_error = std::numeric_limits<double>::infinity();
  for (double eta : config.candidates) {
    std::array<RaceDistribution, kNumContexts> cell = {
        PosteriorMean(FitPosterior(census, observed[0], eta)),
        PosteriorMean(FitPosterior(census, observed[1], eta))};
    ContextualPredictions predictions(k);
    for (const auto& record : records) {
      predictions.Add(
          CombineWithSurname(surnames, record.surname, cell[0]).distribution.probs(),
          CombineWithSurname(surnames, record.surname, cell[1]).distribution.probs());
    }
    double error = 0.0;
    for (std::size_t r : present) {
      try {
        const double estimate =
            config.estimator == EstimatorKind::kBayes
                ? BayesEstimate(predictions, outcomes, r, config.averaging)
                : WeightedEstimate(predictions, outcomes, r);
        error += std::abs(estimate - truth[r]);
      } catch (const Error& e) {
        if (e.code() != ErrorCode::kZeroDenominator &&
            e.code() != ErrorCode::kZeroMass) {
          throw;
        }
        error += 1.0;
      }
    }
    error /= static_cast<double>(present.size());
    result.errors.push_back(error);
    // Candidates are visited in list order; only a strict improvement moves
    // the choice, then ties resolve toward the smaller eta below.
    if (error < best_error - 1e-12 ||
        (std::abs(error - best_error) <= 1e-12 && eta < result.eta)) {
      best_error = std::min(best_error, error);
      result.eta = eta;
    }
  }
  return result;
}

}  // namespace

DirichletParams FitPosterior(std::span<const double> census,
                             std::span<const double> observed, double eta) {
  CheckEta(eta);
  if (census.size() != observed.size()) {
    throw Error(ErrorCode::kLengthMismatch, "census and observed counts");
  }
  DirichletParams params;
  params.alpha.resize(census.size());
  for (std::size_t r = 0; r < census.size(); ++r) {
    if (!(census[r] >= 0.0) || !(observed[r] >= 0.0) ||
        !std::isfinite(census[r]) || !std::isfinite(observed[r])) {
      throw Error(ErrorCode::kInvalidArgument,
                  "counts must be finite and nonnegative");
    }
    params.alpha[r] = std::max(eta * census[r] + observed[r], kAlphaFloor);
  }
  return params;
}

DirichletParams UpdatePosterior(const DirichletParams& params,
                                std::span<const double> observed) {
  if (params.alpha.size() != observed.size()) {
    throw Error(ErrorCode::kLengthMismatch, "posterior and observed counts");
  }
  DirichletParams updated = params;
  for (std::size_t r = 0; r < observed.size(); ++r) {
    if (!(observed[r] >= 0.0)) {
      throw Error(ErrorCode::kInvalidArgument, "negative observed count");
    }
    updated.alpha[r] += observed[r];
  }
  return updated;
}

RaceDistribution PosteriorMean(const DirichletParams& params) {
  return Normalize(params.alpha);
}

RaceDistribution SamplePosterior(const DirichletParams& params,
                                 std::mt19937_64& rng) {
  // G ~ Gamma(a) is drawn as Gamma(a + 1) * U^(1/a), kept as a logarithm.
  std::vector<double> log_gamma(params.alpha.size());
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  for (std::size_t r = 0; r < log_gamma.size(); ++r) {
    const double a = params.alpha[r];
    if (!(a > 0.0)) {
      throw Error(ErrorCode::kInvalidArgument, "alpha must be positive");
    }
    std::gamma_distribution<double> gamma(a + 1.0, 1.0);
    double u = uniform(rng);
    while (u <= 0.0) u = uniform(rng);
    log_gamma[r] = std::log(gamma(rng)) + std::log(u) / a;
  }
  const double top = *std::max_element(log_gamma.begin(), log_gamma.end());
  for (double& v : log_gamma) v = std::exp(v - top);
  return Normalize(log_gamma);
}

std::vector<double> DefaultEtaGrid() {
  std::vector<double> grid;
  for (int i = 0; i <= 10; ++i) grid.push_back(i / 10.0);
  return grid;
}

std::vector<double> ParseEtaGrid(std::string_view spec) {
  std::vector<std::string> fields;
  {
    std::string text(spec);
    std::size_t start = 0;
    while (true) {
      const auto colon = text.find(':', start);
      fields.push_back(text.substr(start, colon - start));
      if (colon == std::string::npos) break;
      start = colon + 1;
    }
  }
  double start = 0.0;
  double stop = 0.0;
  double step = 0.0;
  if (fields.size() != 3 || !csv::ParseDouble(fields[0], &start) ||
      !csv::ParseDouble(fields[1], &stop) ||
      !csv::ParseDouble(fields[2], &step) || !(step > 0.0) || stop < start) {
    throw Error(ErrorCode::kInvalidArgument,
                "eta grid must look like start:stop:step, got '" +
                    std::string(spec) + "'");
  }
  const auto count =
      static_cast<long>(std::floor((stop - start) / step + 1e-9));
  std::vector<double> grid;
  for (long i = 0; i <= count; ++i) {
    // Snap to 12 decimals so 0.1 * 3 prints and compares as 0.3.
    const double eta = std::round((start + i * step) * 1e12) / 1e12;
    CheckEta(eta);
    grid.push_back(eta);
  }
  return grid;
}

CbisgModel::CbisgModel(SurnameTable surnames,
                       std::map<CellKey, DirichletParams> cells,
                       std::map<std::string, double> etas, PointEstimate mode,
                       std::uint64_t seed)
    : surnames_(std::move(surnames)), etas_(std::move(etas)), mode_(mode) {
  const std::size_t k = surnames_.races().size();
  for (auto& [key, posterior] : cells) {
    CheckContext(key.second);
    if (posterior.alpha.size() != k) {
      throw Error(ErrorCode::kLengthMismatch,
                  "posterior for geo '" + key.first + "' has wrong length");
    }
    RaceDistribution estimate = PosteriorMean(posterior);
    if (mode_ == PointEstimate::kPosteriorSample) {
      std::mt19937_64 rng(
          HashId(key.first + "|" + std::to_string(key.second), seed));
      estimate = SamplePosterior(posterior, rng);
    }
    cells_.emplace(key, Cell{std::move(posterior), std::move(estimate)});
  }
}

const CbisgModel::Cell& CbisgModel::FindCell(std::string_view geo,
                                             int context) const {
  CheckContext(context);
  auto it = cells_.find(CellKey{std::string(geo), context});
  if (it != cells_.end()) return it->second;
  if (cells_.contains(CellKey{std::string(geo), 1 - context})) {
    throw Error(ErrorCode::kUnfittedContext,
                "geo '" + std::string(geo) + "' has no fitted cell for y=" +
                    std::to_string(context));
  }
  throw Error(ErrorCode::kUnknownGeo, "geo '" + std::string(geo) + "'");
}

const DirichletParams& CbisgModel::Posterior(std::string_view geo,
                                             int context) const {
  return FindCell(geo, context).posterior;
}

const RaceDistribution& CbisgModel::RaceGivenGeoContext(std::string_view geo,
                                                        int context) const {
  return FindCell(geo, context).estimate;
}

double CbisgModel::eta(std::string_view geo) const {
  auto it = etas_.find(std::string(geo));
  if (it == etas_.end()) {
    throw Error(ErrorCode::kUnknownGeo, "geo '" + std::string(geo) + "'");
  }
  return it->second;
}

std::vector<CellKey> CbisgModel::cells() const {
  std::vector<CellKey> keys;
  for (const auto& [key, cell] : cells_) keys.push_back(key);
  return keys;
}

RaceDistribution CbisgModel::Predict(std::string_view surname,
                                     std::string_view geo, int context) const {
  return CombineWithSurname(surnames_, surname,
                            RaceGivenGeoContext(geo, context))
      .distribution;
}

RaceDistribution CbisgModel::Evaluate(const AttributedRecord& record,
                                      int context) const {
  return Predict(record.surname, record.geo, context);
}

EtaTuningResult TuneEta(const GeoTable& geos, const SurnameTable& surnames,
                        std::string_view geo, const SupplementalDataset& train,
                        const EtaTuningConfig& config) {
  std::vector<AttributedRecord> records;
  for (const auto& record : train.records) {
    if (record.geo == geo) records.push_back(record);
  }
  return TuneEtaForRecords(geos.counts(geo), surnames, records, config);
}

CbisgModel FitCbisg(const GeoTable& geos, const SurnameTable& surnames,
                    const SupplementalDataset& train,
                    const CbisgFitConfig& config) {
  if (!(geos.races() == surnames.races())) {
    throw Error(ErrorCode::kInvalidArgument,
                "surname and geo tables use different race sets");
  }
  if (config.eta) CheckEta(*config.eta);
  const std::size_t k = geos.races().size();
  std::map<std::string, std::vector<AttributedRecord>> by_geo;
  for (const auto& record : train.records) {
    if (!record.race) {
      throw Error(ErrorCode::kUnlabeledDataset,
                  "record '" + record.id + "' has no race label");
    }
    if (!geos.Contains(record.geo)) {
      throw Error(ErrorCode::kUnknownGeo, "training record '" + record.id +
                                              "' has geo '" + record.geo +
                                              "' outside the geo table");
    }
    by_geo[record.geo].push_back(record);
  }

  std::map<CellKey, DirichletParams> cells;
  std::map<std::string, double> etas;
  static const std::vector<AttributedRecord> kNoRecords;
  for (const auto& geo : geos.geos()) {
    const auto it = by_geo.find(geo);
    const auto& records = it == by_geo.end() ? kNoRecords : it->second;
    const auto& census = geos.counts(geo);
    const double eta =
        config.eta ? *config.eta
                   : TuneEtaForRecords(census, surnames, records, config.tuning)
                         .eta;
    std::array<std::vector<double>, kNumContexts> observed = {Zeros(k),
                                                              Zeros(k)};
    for (const auto& record : records) {
      observed[record.context][*record.race] += 1.0;
    }
    for (int y = 0; y < kNumContexts; ++y) {
      cells.emplace(CellKey{geo, y}, FitPosterior(census, observed[y], eta));
    }
    etas.emplace(geo, eta);
  }
  return CbisgModel(surnames, std::move(cells), std::move(etas), config.mode,
                    config.seed);
}

std::string SerializeCbisg(const CbisgModel& model) {
  std::string out = "geo,y";
  for (const auto& label : model.races().labels()) out += "," + label;
  out += ",eta\n";
  for (const auto& key : model.cells()) {
    out += key.first + "," + std::to_string(key.second);
    for (double a : model.Posterior(key.first, key.second).alpha) {
      out += "," + csv::FormatDouble(a, 17);
    }
    out += "," + csv::FormatDouble(model.eta(key.first), 17) + "\n";
  }
  return out;
}

namespace {

CbisgModel ParseCbisgRows(const std::vector<csv::Row>& rows,
                          const SurnameTable& surnames, PointEstimate mode,
                          std::uint64_t seed) {
  const RaceSet& races = surnames.races();
  const std::size_t k = races.size();
  if (rows.empty() || rows.front().size() != k + 3 ||
      rows.front()[0] != "geo" || rows.front()[1] != "y" ||
      rows.front()[k + 2] != "eta") {
    throw Error(ErrorCode::kHeaderMismatch, "expected header 'geo,y,<races>,eta'");
  }
  for (std::size_t r = 0; r < k; ++r) {
    if (rows.front()[r + 2] != races.label(r)) {
      throw Error(ErrorCode::kHeaderMismatch,
                  "model races differ from the surname table");
    }
  }
  std::map<CellKey, DirichletParams> cells;
  std::map<std::string, double> etas;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const auto& row = rows[i];
    const std::string where = "line " + std::to_string(i + 1);
    if (row.size() != k + 3) {
      throw Error(ErrorCode::kMalformedRow, where + ": wrong column count");
    }
    int context = -1;
    if (row[1] == "0") context = 0;
    if (row[1] == "1") context = 1;
    if (context < 0) {
      throw Error(ErrorCode::kInvalidContext, where + ": y must be 0 or 1");
    }
    DirichletParams params;
    params.alpha.resize(k);
    for (std::size_t r = 0; r < k; ++r) {
      if (!csv::ParseDouble(row[r + 2], &params.alpha[r]) ||
          !(params.alpha[r] > 0.0)) {
        throw Error(ErrorCode::kMalformedRow, where + ": alpha must be > 0");
      }
    }
    double eta = 0.0;
    if (!csv::ParseDouble(row[k + 2], &eta) || eta < 0.0 || eta > 1.0) {
      throw Error(ErrorCode::kMalformedRow, where + ": eta must lie in [0,1]");
    }
    if (!cells.emplace(CellKey{row[0], context}, std::move(params)).second) {
      throw Error(ErrorCode::kMalformedRow, where + ": duplicate cell");
    }
    etas.emplace(row[0], eta);
  }
  return CbisgModel(surnames, std::move(cells), std::move(etas), mode, seed);
}

}  // namespace

CbisgModel ParseCbisg(std::string_view text, const SurnameTable& surnames,
                      PointEstimate mode, std::uint64_t seed) {
  return ParseCbisgRows(csv::ParseText(text), surnames, mode, seed);
}

CbisgModel LoadCbisg(const std::string& path, const SurnameTable& surnames,
                     PointEstimate mode, std::uint64_t seed) {
  return ParseCbisgRows(csv::ReadFile(path), surnames, mode, seed);
}

}  // namespace fairproxy
