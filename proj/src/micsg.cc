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

#include "fairproxy/micsg.h"

#include <algorithm>
#include <cmath>

#include "json.hpp"

namespace fairproxy {

using nlohmann::json;

std::string_view BaseEncodingName(BaseEncoding encoding) {
  return encoding == BaseEncoding::kLogProbability ? "log-probability"
                                                   : "probability";
}

BaseEncoding ParseBaseEncoding(std::string_view name) {
  if (name == "log-probability") return BaseEncoding::kLogProbability;
  if (name == "probability") return BaseEncoding::kProbability;
  throw Error(ErrorCode::kInvalidArgument,
              "encoding must be 'log-probability' or 'probability'");
}

std::vector<double> AssembleFeatures(const ContextualProxy& base,
                                     const AttributedRecord& record,
                                     int context, BaseEncoding encoding,
                                     const CovariateTransform* transform) {
  CheckContext(context);
  const RaceDistribution rho = base.Evaluate(record, context);
  std::vector<double> row;
  row.reserve(rho.size() + record.covariates.size() + 1);
  for (double p : rho.probs()) {
    row.push_back(encoding == BaseEncoding::kLogProbability
                      ? std::log(std::max(p, kLogProbabilityFloor))
                      : p);
  }
  if (transform != nullptr) {
    const auto z = transform->Apply(record.covariates);
    row.insert(row.end(), z.begin(), z.end());
  } else {
    row.insert(row.end(), record.covariates.begin(), record.covariates.end());
  }
  row.push_back(static_cast<double>(context));
  return row;
}

MicsgModel::MicsgModel(std::shared_ptr<const ContextualProxy> base,
                       std::string base_spec, RaceSet races,
                       CovariateLayout layout, CovariateTransform transform,
                       BaseEncoding encoding, SoftmaxModel learner)
    : base_(std::move(base)),
      base_spec_(std::move(base_spec)),
      races_(std::move(races)),
      layout_(std::move(layout)),
      transform_(std::move(transform)),
      encoding_(encoding),
      learner_(std::move(learner)) {
  if (base_ == nullptr) {
    throw Error(ErrorCode::kInvalidArgument, "missing base proxy");
  }
  const std::size_t k = races_.size();
  if (base_->num_races() != k || learner_.num_classes() != k) {
    throw Error(ErrorCode::kLengthMismatch,
                "base proxy, learner and race set disagree on K");
  }
  const std::size_t width = layout_.width();
  if (transform_.means.size() != width || transform_.stds.size() != width) {
    throw Error(ErrorCode::kLengthMismatch,
                "covariate transform does not match the layout");
  }
  if (learner_.num_features() != k + width + 1) {
    throw Error(ErrorCode::kLengthMismatch,
                "learner width does not match the feature layout");
  }
}

std::vector<std::string> MicsgModel::FeatureNames() const {
  std::vector<std::string> names;
  const char* prefix =
      encoding_ == BaseEncoding::kLogProbability ? "log_rho_" : "rho_";
  for (const auto& label : races_.labels()) names.push_back(prefix + label);
  for (const auto& name : layout_.ExpandedNames()) names.push_back(name);
  names.push_back("y");
  return names;
}

std::vector<double> MicsgModel::AssembleFeatures(
    const AttributedRecord& record, std::optional<int> context_override) const {
  if (record.covariates.size() != layout_.width()) {
    throw Error(ErrorCode::kInconsistentCovariateArity,
                "record '" + record.id + "' has " +
                    std::to_string(record.covariates.size()) +
                    " covariates, model expects " +
                    std::to_string(layout_.width()));
  }
  return fairproxy::AssembleFeatures(*base_, record,
                                     context_override.value_or(record.context),
                                     encoding_, &transform_);
}

RaceDistribution MicsgModel::Evaluate(const AttributedRecord& record,
                                      int context) const {
  return learner_.PredictProba(AssembleFeatures(record, context));
}

MicsgModel FitMicsg(std::shared_ptr<const ContextualProxy> base,
                    std::string base_spec, const RaceSet& races,
                    const SupplementalDataset& train,
                    const MicsgConfig& config) {
  if (!train.labeled()) {
    throw Error(ErrorCode::kUnlabeledDataset,
                "MICSG training data needs race labels");
  }
  if (base == nullptr) {
    throw Error(ErrorCode::kInvalidArgument, "missing base proxy");
  }
  const std::size_t width = train.covariates.width();
  for (const auto& record : train.records) {
    if (record.covariates.size() != width) {
      throw Error(ErrorCode::kInconsistentCovariateArity,
                  "record '" + record.id + "' covariate count");
    }
  }
  const CovariateTransform transform = StandardizeCovariates(train).transform;
  const std::size_t k = races.size();
  TrainingProblem problem;
  problem.num_classes = k;
  problem.features.resize(static_cast<Eigen::Index>(train.size()),
                          static_cast<Eigen::Index>(k + width + 1));
  problem.labels.reserve(train.size());
  for (std::size_t i = 0; i < train.size(); ++i) {
    const auto& record = train.records[i];
    const auto row = AssembleFeatures(*base, record, record.context,
                                      config.encoding, &transform);
    for (std::size_t j = 0; j < row.size(); ++j) {
      problem.features(static_cast<Eigen::Index>(i),
                       static_cast<Eigen::Index>(j)) = row[j];
    }
    problem.labels.push_back(*record.race);
  }
  SoftmaxModel learner = FitSoftmax(problem, config.learner);
  return MicsgModel(std::move(base), std::move(base_spec), races,
                    train.covariates, transform, config.encoding,
                    std::move(learner));
}

std::string SerializeMicsg(const MicsgModel& model) {
  json covariates = json::array();
  for (const auto& source : model.layout().sources) {
    covariates.push_back({{"name", source.name},
                          {"categorical", source.categorical},
                          {"levels", source.levels}});
  }
  const auto& fit = model.learner().diagnostics();
  json doc = {
      {"schema", 1},
      {"kind", "micsg"},
      {"base", model.base_spec()},
      {"races", model.races().labels()},
      {"encoding", BaseEncodingName(model.encoding())},
      {"covariates", covariates},
      {"transform",
       {{"means", model.transform().means}, {"stds", model.transform().stds}}},
      {"features", model.FeatureNames()},
      {"l2_lambda", model.learner().l2_lambda()},
      {"fit",
       {{"status", FitStatusName(fit.status)},
        {"iterations", fit.iterations},
        {"gradient_norm", fit.gradient_norm},
        {"objective", fit.objective}}},
      {"weights_csv", SerializeSoftmax(model.learner())},
  };
  return doc.dump(2) + "\n";
}

MicsgModel ParseMicsg(std::string_view text, const BaseProxyResolver& resolve) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kMalformedRow,
                std::string("MICSG model is not valid JSON: ") + e.what());
  }
  try {
    if (doc.at("schema").get<int>() != 1 ||
        doc.at("kind").get<std::string>() != "micsg") {
      throw Error(ErrorCode::kHeaderMismatch, "not a schema-1 MICSG model");
    }
    RaceSet races(doc.at("races").get<std::vector<std::string>>());
    CovariateLayout layout;
    for (const auto& source : doc.at("covariates")) {
      layout.sources.push_back(
          {source.at("name").get<std::string>(),
           source.at("categorical").get<bool>(),
           source.at("levels").get<std::vector<std::string>>()});
    }
    CovariateTransform transform;
    transform.means = doc.at("transform").at("means").get<std::vector<double>>();
    transform.stds = doc.at("transform").at("stds").get<std::vector<double>>();
    const std::string base_spec = doc.at("base").get<std::string>();
    SoftmaxModel learner =
        ParseSoftmax(doc.at("weights_csv").get<std::string>(),
                     doc.at("l2_lambda").get<double>());
    if (doc.contains("fit")) {
      const json& fit = doc.at("fit");
      FitDiagnostics diagnostics;
      const std::string status = fit.at("status").get<std::string>();
      for (FitStatus s : {FitStatus::kNotFitted, FitStatus::kConverged,
                          FitStatus::kDidNotConverge}) {
        if (FitStatusName(s) == status) diagnostics.status = s;
      }
      diagnostics.iterations = fit.at("iterations").get<int>();
      diagnostics.gradient_norm = fit.at("gradient_norm").get<double>();
      diagnostics.objective = fit.at("objective").get<double>();
      learner.set_diagnostics(std::move(diagnostics));
    }
    return MicsgModel(resolve(base_spec), base_spec, std::move(races),
                      std::move(layout), std::move(transform),
                      ParseBaseEncoding(doc.at("encoding").get<std::string>()),
                      std::move(learner));
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kMalformedRow,
                std::string("MICSG model field: ") + e.what());
  }
}

}  // namespace fairproxy
