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

#include "fairproxy/bisg.h"

namespace fairproxy {

DetailedPrediction CombineWithSurname(const SurnameTable& surnames,
                                      std::string_view surname,
                                      const RaceDistribution& prior) {
  const auto likelihood = surnames.SurnameGivenRace(surname);
  if (!likelihood) return {prior, PredictionSource::kMissingSurname};
  std::vector<double> weights(prior.size());
  double total = 0.0;
  for (std::size_t r = 0; r < weights.size(); ++r) {
    weights[r] = (*likelihood)[r] * prior[r];
    total += weights[r];
  }
  if (total <= 0.0) return {prior, PredictionSource::kZeroProduct};
  return {Normalize(weights), PredictionSource::kSurnameAndPrior};
}

BisgModel::BisgModel(SurnameTable surnames, GeoTable geos)
    : surnames_(std::move(surnames)), geos_(std::move(geos)) {
  if (!(surnames_.races() == geos_.races())) {
    throw Error(ErrorCode::kInvalidArgument,
                "surname and geo tables use different race sets");
  }
}

DetailedPrediction BisgModel::PredictDetailed(std::string_view surname,
                                              std::string_view geo) const {
  return CombineWithSurname(surnames_, surname, geos_.RaceGivenGeo(geo));
}

RaceDistribution BisgModel::Predict(std::string_view surname,
                                    std::string_view geo) const {
  return PredictDetailed(surname, geo).distribution;
}

RaceDistribution BisgModel::PredictGeoOnly(std::string_view geo) const {
  return geos_.RaceGivenGeo(geo);
}

RaceDistribution BisgModel::Evaluate(const AttributedRecord& record,
                                     int context) const {
  CheckContext(context);
  return Predict(record.surname, record.geo);
}

RaceDistribution GeoOnlyProxy::Evaluate(const AttributedRecord& record,
                                        int context) const {
  CheckContext(context);
  return geos_.RaceGivenGeo(record.geo);
}

}  // namespace fairproxy
