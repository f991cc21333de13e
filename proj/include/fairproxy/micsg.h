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

// Supervised contextual proxy stacked on any base proxy. Each record becomes
//
//   x* = (encode(rho_1(x)), ..., encode(rho_K(x)), standardized z, y)
//
// and a softmax learner maps x* to a race distribution. The base proxy is
// only ever queried through ContextualProxy::Evaluate.

#ifndef FAIRPROXY_MICSG_H_
#define FAIRPROXY_MICSG_H_

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "fairproxy/domain.h"
#include "fairproxy/learner.h"
#include "fairproxy/tables.h"

namespace fairproxy {

// Floor applied before taking logs of base probabilities.
inline constexpr double kLogProbabilityFloor = 1e-6;

enum class BaseEncoding {
  // log(max(rho_r, kLogProbabilityFloor)). Lets the log-linear learner
  // reproduce the base proxy exactly.
  kLogProbability,
  // rho_r as is.
  kProbability,
};

std::string_view BaseEncodingName(BaseEncoding encoding);
BaseEncoding ParseBaseEncoding(std::string_view name);

// Feature row for `record` queried at `context`: encoded base output at that
// context, transformed covariates, then the context as raw 0/1. A null
// transform leaves covariates unchanged.
std::vector<double> AssembleFeatures(const ContextualProxy& base,
                                     const AttributedRecord& record,
                                     int context, BaseEncoding encoding,
                                     const CovariateTransform* transform);

struct MicsgConfig {
  LearnerConfig learner;
  BaseEncoding encoding = BaseEncoding::kLogProbability;
};

class MicsgModel : public ContextualProxy {
 public:
  // `base_spec` is an opaque description of the base proxy, kept so a saved
  // model can be reconnected to it.
  MicsgModel(std::shared_ptr<const ContextualProxy> base, std::string base_spec,
             RaceSet races, CovariateLayout layout, CovariateTransform transform,
             BaseEncoding encoding, SoftmaxModel learner);

  const RaceSet& races() const { return races_; }
  const std::string& base_spec() const { return base_spec_; }
  const CovariateLayout& layout() const { return layout_; }
  const CovariateTransform& transform() const { return transform_; }
  BaseEncoding encoding() const { return encoding_; }
  const SoftmaxModel& learner() const { return learner_; }
  std::vector<std::string> FeatureNames() const;

  // Uses the record's own context unless overridden. Throws
  // kInconsistentCovariateArity when the covariates don't match the layout.
  std::vector<double> AssembleFeatures(
      const AttributedRecord& record,
      std::optional<int> context_override = std::nullopt) const;

  std::size_t num_races() const override { return races_.size(); }
  RaceDistribution Evaluate(const AttributedRecord& record,
                            int context) const override;

 private:
  std::shared_ptr<const ContextualProxy> base_;
  std::string base_spec_;
  RaceSet races_;
  CovariateLayout layout_;
  CovariateTransform transform_;
  BaseEncoding encoding_;
  SoftmaxModel learner_;
};

// Standardizes covariates on `train` and fits the learner on every record at
// its observed context. Throws kUnlabeledDataset.
MicsgModel FitMicsg(std::shared_ptr<const ContextualProxy> base,
                    std::string base_spec, const RaceSet& races,
                    const SupplementalDataset& train,
                    const MicsgConfig& config);

using BaseProxyResolver =
    std::function<std::shared_ptr<const ContextualProxy>(const std::string&)>;

// JSON document holding the layout, transform, encoding, base spec and the
// learner weights in their CSV form.
std::string SerializeMicsg(const MicsgModel& model);
MicsgModel ParseMicsg(std::string_view text, const BaseProxyResolver& resolve);

}  // namespace fairproxy

#endif  // FAIRPROXY_MICSG_H_
