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

#include "fairproxy/learner.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "fairproxy/csv.h"

namespace fairproxy {
namespace {

constexpr double kArmijo = 1e-4;
constexpr double kMinStep = 1e-30;

// Row-wise softmax of W [X 1]^T, shifted by the row max.
Eigen::MatrixXd Probabilities(const Eigen::MatrixXd& weights,
                              const Eigen::MatrixXd& features,
                              Eigen::VectorXd* log_normalizer) {
  const Eigen::Index d = features.cols();
  Eigen::MatrixXd logits = features * weights.leftCols(d).transpose();
  logits.rowwise() += weights.col(d).transpose();
  const Eigen::VectorXd top = logits.rowwise().maxCoeff();
  logits.colwise() -= top;
  Eigen::MatrixXd probs = logits.array().exp().matrix();
  const Eigen::VectorXd sums = probs.rowwise().sum();
  probs.array().colwise() /= sums.array();
  if (log_normalizer != nullptr) {
    *log_normalizer = top.array() + sums.array().log();
  }
  return probs;
}

double Penalty(const Eigen::MatrixXd& weights, double l2_lambda) {
  const Eigen::Index d = weights.cols() - 1;
  return 0.5 * l2_lambda * weights.leftCols(d).squaredNorm();
}

double ObjectiveUnchecked(const Eigen::MatrixXd& weights,
                          const TrainingProblem& problem, double l2_lambda) {
  const Eigen::Index n = problem.features.rows();
  const Eigen::Index d = problem.features.cols();
  Eigen::VectorXd log_normalizer;
  Probabilities(weights, problem.features, &log_normalizer);
  double loss = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto c = static_cast<Eigen::Index>(problem.labels[i]);
    const double logit =
        problem.features.row(i).dot(weights.row(c).head(d)) + weights(c, d);
    loss += log_normalizer(i) - logit;
  }
  return loss / static_cast<double>(n) + Penalty(weights, l2_lambda);
}

Eigen::MatrixXd GradientUnchecked(const Eigen::MatrixXd& weights,
                                  const TrainingProblem& problem,
                                  double l2_lambda) {
  const Eigen::Index n = problem.features.rows();
  const Eigen::Index d = problem.features.cols();
  Eigen::MatrixXd residual = Probabilities(weights, problem.features, nullptr);
  for (Eigen::Index i = 0; i < n; ++i) {
    residual(i, static_cast<Eigen::Index>(problem.labels[i])) -= 1.0;
  }
  Eigen::MatrixXd gradient(weights.rows(), weights.cols());
  gradient.leftCols(d) = residual.transpose() * problem.features;
  gradient.col(d) = residual.colwise().sum().transpose();
  gradient /= static_cast<double>(n);
  gradient.leftCols(d) += l2_lambda * weights.leftCols(d);
  return gradient;
}

void CheckWeights(const Eigen::MatrixXd& weights,
                  const TrainingProblem& problem) {
  if (weights.rows() != static_cast<Eigen::Index>(problem.num_classes) ||
      weights.cols() != problem.features.cols() + 1) {
    throw Error(ErrorCode::kLengthMismatch, "weight matrix shape");
  }
}

}  // namespace

std::string_view FitStatusName(FitStatus status) {
  switch (status) {
    case FitStatus::kNotFitted:
      return "not-fitted";
    case FitStatus::kConverged:
      return "converged";
    case FitStatus::kDidNotConverge:
      return "did-not-converge";
  }
  return "unknown";
}

SoftmaxModel::SoftmaxModel(std::size_t num_classes, std::size_t num_features,
                           double l2_lambda)
    : SoftmaxModel(Eigen::MatrixXd::Zero(num_classes, num_features + 1),
                   l2_lambda) {}

SoftmaxModel::SoftmaxModel(Eigen::MatrixXd weights, double l2_lambda)
    : weights_(std::move(weights)), l2_lambda_(l2_lambda) {
  if (weights_.rows() < 2 || weights_.cols() < 1) {
    throw Error(ErrorCode::kInvalidArgument,
                "softmax model needs at least 2 classes");
  }
  if (!weights_.allFinite()) {
    throw Error(ErrorCode::kInvalidArgument, "non-finite weights");
  }
  if (!(l2_lambda_ >= 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "l2_lambda must be >= 0");
  }
}

RaceDistribution SoftmaxModel::PredictProba(std::span<const double> row) const {
  const Eigen::Index d = weights_.cols() - 1;
  if (static_cast<Eigen::Index>(row.size()) != d) {
    throw Error(ErrorCode::kLengthMismatch,
                "feature row has " + std::to_string(row.size()) +
                    " entries, model expects " + std::to_string(d));
  }
  for (double v : row) {
    if (!std::isfinite(v)) {
      throw Error(ErrorCode::kNonFiniteFeature, "non-finite feature value");
    }
  }
  const Eigen::Map<const Eigen::VectorXd> x(row.data(), d);
  Eigen::VectorXd logits = weights_.leftCols(d) * x + weights_.col(d);
  logits.array() -= logits.maxCoeff();
  Eigen::VectorXd probs = logits.array().exp();
  probs /= probs.sum();
  return RaceDistribution(std::vector<double>(probs.data(),
                                              probs.data() + probs.size()));
}

void CheckProblem(const TrainingProblem& problem) {
  if (problem.num_classes < 2) {
    throw Error(ErrorCode::kInvalidArgument, "need at least 2 classes");
  }
  if (problem.features.rows() < 1) {
    throw Error(ErrorCode::kInvalidArgument, "need at least one row");
  }
  if (static_cast<Eigen::Index>(problem.labels.size()) !=
      problem.features.rows()) {
    throw Error(ErrorCode::kLengthMismatch, "labels vs feature rows");
  }
  for (std::size_t label : problem.labels) {
    if (label >= problem.num_classes) {
      throw Error(ErrorCode::kInvalidArgument,
                  "label " + std::to_string(label) + " out of range");
    }
  }
  if (!problem.features.allFinite()) {
    throw Error(ErrorCode::kNonFiniteFeature, "non-finite feature value");
  }
}

double Objective(const Eigen::MatrixXd& weights, const TrainingProblem& problem,
                 double l2_lambda) {
  CheckProblem(problem);
  CheckWeights(weights, problem);
  return ObjectiveUnchecked(weights, problem, l2_lambda);
}

Eigen::MatrixXd Gradient(const Eigen::MatrixXd& weights,
                         const TrainingProblem& problem, double l2_lambda) {
  CheckProblem(problem);
  CheckWeights(weights, problem);
  return GradientUnchecked(weights, problem, l2_lambda);
}

double GradientCheck(const Eigen::MatrixXd& weights,
                     const TrainingProblem& problem, double l2_lambda,
                     double epsilon) {
  if (!(epsilon > 0.0 && epsilon <= 1e-3)) {
    throw Error(ErrorCode::kInvalidArgument, "epsilon must lie in (0, 1e-3]");
  }
  const Eigen::MatrixXd analytic = Gradient(weights, problem, l2_lambda);
  double worst = 0.0;
  Eigen::MatrixXd probe = weights;
  for (Eigen::Index r = 0; r < weights.rows(); ++r) {
    for (Eigen::Index c = 0; c < weights.cols(); ++c) {
      probe(r, c) = weights(r, c) + epsilon;
      const double up = ObjectiveUnchecked(probe, problem, l2_lambda);
      probe(r, c) = weights(r, c) - epsilon;
      const double down = ObjectiveUnchecked(probe, problem, l2_lambda);
      probe(r, c) = weights(r, c);
      const double numeric = (up - down) / (2.0 * epsilon);
      const double scale =
          std::max({std::abs(analytic(r, c)), std::abs(numeric), 1e-3});
      worst = std::max(worst, std::abs(analytic(r, c) - numeric) / scale);
    }
  }
  return worst;
}

SoftmaxModel FitSoftmax(const TrainingProblem& input,
                        const LearnerConfig& config) {
  CheckProblem(input);
  if (!(config.l2_lambda >= 0.0) || !(config.tolerance > 0.0) ||
      config.max_iters < 0) {
    throw Error(ErrorCode::kInvalidArgument, "invalid learner configuration");
  }
  const std::size_t n = input.labels.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(config.seed);
  std::shuffle(order.begin(), order.end(), rng);
  TrainingProblem problem;
  problem.num_classes = input.num_classes;
  problem.features.resize(input.features.rows(), input.features.cols());
  problem.labels.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    problem.features.row(i) = input.features.row(order[i]);
    problem.labels[i] = input.labels[order[i]];
  }

  const double lambda = config.l2_lambda;
  Eigen::MatrixXd weights =
      Eigen::MatrixXd::Zero(problem.num_classes, problem.features.cols() + 1);
  double objective = ObjectiveUnchecked(weights, problem, lambda);
  Eigen::MatrixXd gradient = GradientUnchecked(weights, problem, lambda);
  FitDiagnostics diagnostics;
  diagnostics.objective_trace.push_back(objective);
  diagnostics.status = FitStatus::kDidNotConverge;
  double trial_step = 1.0;
  int iteration = 0;
  for (; iteration <= config.max_iters; ++iteration) {
    if (gradient.cwiseAbs().maxCoeff() <= config.tolerance) {
      diagnostics.status = FitStatus::kConverged;
      break;
    }
    if (iteration == config.max_iters) break;
    const double slope = gradient.squaredNorm();
    double step = trial_step;
    Eigen::MatrixXd candidate;
    double candidate_objective = 0.0;
    bool accepted = false;
    while (step >= kMinStep) {
      candidate = weights - step * gradient;
      candidate_objective = ObjectiveUnchecked(candidate, problem, lambda);
      if (candidate_objective <= objective - kArmijo * step * slope) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) break;
    Eigen::MatrixXd next_gradient =
        GradientUnchecked(candidate, problem, lambda);
    // Barzilai-Borwein guess for the next trial step.
    const double sy = (candidate - weights).cwiseProduct(next_gradient - gradient).sum();
    const double ss = (candidate - weights).squaredNorm();
    trial_step = sy > 0.0 ? ss / sy : 2.0 * step;
    weights = std::move(candidate);
    objective = candidate_objective;
    gradient = std::move(next_gradient);
    diagnostics.objective_trace.push_back(objective);
  }
  diagnostics.iterations = iteration;
  diagnostics.gradient_norm = gradient.cwiseAbs().maxCoeff();
  diagnostics.objective = objective;
  SoftmaxModel model(std::move(weights), lambda);
  model.set_diagnostics(std::move(diagnostics));
  return model;
}

std::string SerializeSoftmax(const SoftmaxModel& model) {
  const auto& w = model.weights();
  const Eigen::Index d = w.cols() - 1;
  std::vector<std::string> header = {"class"};
  for (Eigen::Index j = 0; j < d; ++j) {
    header.push_back("w" + std::to_string(j + 1));
  }
  header.push_back("intercept");
  std::string out = csv::JoinRow(header) + "\n";
  for (Eigen::Index r = 0; r < w.rows(); ++r) {
    std::vector<std::string> row = {std::to_string(r)};
    for (Eigen::Index c = 0; c < w.cols(); ++c) {
      row.push_back(csv::FormatDouble(w(r, c), 17));
    }
    out += csv::JoinRow(row) + "\n";
  }
  return out;
}

SoftmaxModel ParseSoftmax(std::string_view text, double l2_lambda) {
  const auto rows = csv::ParseText(text);
  if (rows.size() < 3 || rows[0].size() < 2 || rows[0][0] != "class" ||
      rows[0].back() != "intercept") {
    throw Error(ErrorCode::kHeaderMismatch,
                "expected header 'class,w1,...,intercept' and >= 2 rows");
  }
  const std::size_t cols = rows[0].size() - 1;
  Eigen::MatrixXd weights(rows.size() - 1, cols);
  for (std::size_t r = 1; r < rows.size(); ++r) {
    if (rows[r].size() != cols + 1 || rows[r][0] != std::to_string(r - 1)) {
      throw Error(ErrorCode::kMalformedRow,
                  "weight row " + std::to_string(r) + " is malformed");
    }
    for (std::size_t c = 0; c < cols; ++c) {
      if (!csv::ParseDouble(rows[r][c + 1], &weights(r - 1, c))) {
        throw Error(ErrorCode::kMalformedRow,
                    "weight row " + std::to_string(r) + " has a bad number");
      }
    }
  }
  return SoftmaxModel(std::move(weights), l2_lambda);
}

}  // namespace fairproxy
