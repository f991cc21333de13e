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

// Multiclass softmax regression. The objective is
//
//   L(W) = (1/n) sum_i -log softmax(W [x_i; 1])_{c_i} + (lambda/2) |W'|^2,
//
// where W is K x (d+1) with the intercept in the last column and W' drops
// that column.

#ifndef FAIRPROXY_LEARNER_H_
#define FAIRPROXY_LEARNER_H_

#include <Eigen/Dense>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "fairproxy/domain.h"

namespace fairproxy {

// Slot for alternative supervised learners.
class ProbabilisticClassifier {
 public:
  virtual ~ProbabilisticClassifier() = default;

  virtual std::size_t num_classes() const = 0;
  virtual std::size_t num_features() const = 0;
  virtual RaceDistribution PredictProba(std::span<const double> row) const = 0;
};

struct LearnerConfig {
  double l2_lambda = 1e-4;
  // Stop once the gradient infinity-norm is at most this.
  double tolerance = 1e-6;
  int max_iters = 5000;
  // Shuffles row order before fitting.
  std::uint64_t seed = 0;
};

enum class FitStatus { kNotFitted, kConverged, kDidNotConverge };

std::string_view FitStatusName(FitStatus status);

struct FitDiagnostics {
  FitStatus status = FitStatus::kNotFitted;
  int iterations = 0;
  double gradient_norm = 0.0;
  double objective = 0.0;
  // Objective after every accepted step, starting with the initial value.
  std::vector<double> objective_trace;
};

class SoftmaxModel : public ProbabilisticClassifier {
 public:
  // All-zero weights.
  SoftmaxModel(std::size_t num_classes, std::size_t num_features,
               double l2_lambda = 0.0);
  SoftmaxModel(Eigen::MatrixXd weights, double l2_lambda);

  std::size_t num_classes() const override { return weights_.rows(); }
  std::size_t num_features() const override { return weights_.cols() - 1; }
  const Eigen::MatrixXd& weights() const { return weights_; }
  double l2_lambda() const { return l2_lambda_; }
  const FitDiagnostics& diagnostics() const { return diagnostics_; }
  void set_diagnostics(FitDiagnostics diagnostics) {
    diagnostics_ = std::move(diagnostics);
  }

  // softmax(W [row; 1]). Throws kLengthMismatch and kNonFiniteFeature.
  RaceDistribution PredictProba(std::span<const double> row) const override;

 private:
  Eigen::MatrixXd weights_;
  double l2_lambda_;
  FitDiagnostics diagnostics_;
};

// A design matrix paired with class labels.
struct TrainingProblem {
  Eigen::MatrixXd features;  // n x d
  std::vector<std::size_t> labels;
  std::size_t num_classes = 0;
};

// Validates shapes, labels and finiteness. Throws kInvalidArgument,
// kLengthMismatch or kNonFiniteFeature.
void CheckProblem(const TrainingProblem& problem);

double Objective(const Eigen::MatrixXd& weights, const TrainingProblem& problem,
                 double l2_lambda);
Eigen::MatrixXd Gradient(const Eigen::MatrixXd& weights,
                         const TrainingProblem& problem, double l2_lambda);

// Max over coordinates of |analytic - central difference| /
// max(|analytic|, |central difference|, 1e-3). Throws kInvalidArgument
// unless 0 < epsilon <= 1e-3.
double GradientCheck(const Eigen::MatrixXd& weights,
                     const TrainingProblem& problem, double l2_lambda,
                     double epsilon);

// Gradient descent from zero weights with backtracking (Armijo) line search.
// Non-convergence within max_iters is reported in the diagnostics.
SoftmaxModel FitSoftmax(const TrainingProblem& problem,
                        const LearnerConfig& config);

// One row per class, "class,w_1,...,w_d,intercept", 17 significant digits.
std::string SerializeSoftmax(const SoftmaxModel& model);
SoftmaxModel ParseSoftmax(std::string_view text, double l2_lambda = 0.0);

}  // namespace fairproxy

#endif  // FAIRPROXY_LEARNER_H_
