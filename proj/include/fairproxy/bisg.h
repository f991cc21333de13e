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

#ifndef FAIRPROXY_BISG_H_
#define FAIRPROXY_BISG_H_

#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "fairproxy/domain.h"
#include "fairproxy/tables.h"

namespace fairproxy {

// Where a surname-based prediction came from.
enum class PredictionSource {
  kSurnameAndPrior,
  // Surname empty or not listed: Pr[S|R] treated as uniform.
  kMissingSurname,
  // Listed surname but Pr[s|r] * prior_r == 0 for every r.
  kZeroProduct,
};

struct DetailedPrediction {
  RaceDistribution distribution;
  PredictionSource source;
};

// Combines a race prior with the surname likelihood:
//   out_r ∝ Pr[s|r] * prior_r.
// A missing surname skips the likelihood (the uniform constant cancels); an
// all-zero product falls back to the prior.
DetailedPrediction CombineWithSurname(const SurnameTable& surnames,
                                      std::string_view surname,
                                      const RaceDistribution& prior);

// Bayesian Improved Surname Geocoding: Pr[R|S=s,G=g] ∝ Pr[s|R] Pr[R|g].
// Non-contextual; as a ContextualProxy it ignores the queried context.
class BisgModel : public ContextualProxy {
 public:
  // Throws kInvalidArgument when the tables disagree on the race set.
  BisgModel(SurnameTable surnames, GeoTable geos);

  const RaceSet& races() const { return geos_.races(); }
  const SurnameTable& surname_table() const { return surnames_; }
  const GeoTable& geo_table() const { return geos_; }

  // Throws kUnknownGeo.
  RaceDistribution Predict(std::string_view surname, std::string_view geo) const;
  DetailedPrediction PredictDetailed(std::string_view surname,
                                     std::string_view geo) const;
  RaceDistribution PredictGeoOnly(std::string_view geo) const;

  std::size_t num_races() const override { return races().size(); }
  RaceDistribution Evaluate(const AttributedRecord& record,
                            int context) const override;

 private:
  SurnameTable surnames_;
  GeoTable geos_;
};

// Geography-only variant (no surname information available), e.g. for
// anonymized lending data.
class GeoOnlyProxy : public ContextualProxy {
 public:
  explicit GeoOnlyProxy(GeoTable geos) : geos_(std::move(geos)) {}

  std::size_t num_races() const override { return geos_.races().size(); }
  RaceDistribution Evaluate(const AttributedRecord& record,
                            int context) const override;

 private:
  GeoTable geos_;
};

}  // namespace fairproxy

#endif  // FAIRPROXY_BISG_H_
