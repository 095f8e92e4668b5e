// Copyright 2026 The Survey DP Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef SURVEY_DP_IMPUTE_H_
#define SURVEY_DP_IMPUTE_H_

#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "absl/status/statusor.h"
#include "absl/types/span.h"
#include "survey_dp/dp_core.h"
#include "survey_dp/random.h"

namespace survey_dp {

using Record = std::vector<std::optional<double>>;

// Rectangular data with item nonresponse; a missing entry is nullopt.
struct ImputationData {
  std::vector<std::string> variables;
  std::vector<Record> rows;
};

// missing[i][v] is true when variable v of row i is missing.
using MissingnessMask = std::vector<std::vector<bool>>;
MissingnessMask Mask(const ImputationData& data);

struct VariableBounds {
  double lower = 0.0;
  double upper = 1.0;

  double Range() const { return upper - lower; }
};

// Which rows feed the model fit.
enum class FitRows { kCompleteCases, kAllObserved };

struct FitOptions {
  FitRows rows = FitRows::kCompleteCases;
  // Also estimate a residual spread so that imputations are stochastic. The
  // per-variable budget is then split evenly between location and spread.
  bool stochastic = false;
};

// Per-variable location and Laplace residual scale.
struct MeanModel {
  std::vector<double> means;
  std::vector<double> residual_scales;
};

// target ~ intercept + predictors, from perturbed sufficient statistics.
struct RegressionModel {
  size_t target = 0;
  std::vector<size_t> predictors;
  // Intercept first, then one coefficient per predictor.
  std::vector<double> coefficients;
  double residual_scale = 0.0;
  double ridge = 0.0;
  // Epsilon given to each perturbed sufficient-statistic entry.
  std::vector<double> entry_epsilons;
};

struct ImputationParams {
  std::variant<MeanModel, RegressionModel> model;
  PrivacyLoss epsilon_spent;
  std::vector<VariableBounds> bounds;
};

// DP mean per variable with sensitivity R_v / n_obs and epsilon split evenly
// across variables; results are clamped to the bounds. One ledger charge of
// `epsilon` covers the fit.
absl::StatusOr<ImputationParams> FitDpMeanModel(
    const ImputationData& data, absl::Span<const VariableBounds> bounds,
    PrivacyLoss epsilon, Rng& rng, PrivacyLedger& ledger,
    const FitOptions& options = {});

struct RegressionSpec {
  size_t target = 0;
  std::vector<size_t> predictors;
};

// Linear regression from Laplace-perturbed X'X, X'y and y'y built on clipped
// complete cases. The budget is split evenly over the released entries and
// the ridge-regularised normal equations are always solvable. Predictors
// with zero-width bounds carry no information and are dropped; with none
// left the fit falls back to the DP mean of the target.
absl::StatusOr<ImputationParams> FitDpRegression(
    const ImputationData& data, const RegressionSpec& spec,
    absl::Span<const VariableBounds> bounds, PrivacyLoss epsilon, Rng& rng,
    PrivacyLedger& ledger, const FitOptions& options = {});

// Fills the missing entries of one record from the model. Only the record,
// the fitted parameters and the random source are consulted.
absl::StatusOr<std::vector<double>> ImputeParametric(
    absl::Span<const std::optional<double>> record,
    const ImputationParams& params, Rng& rng);

struct HotDeckResult {
  ImputationData filled;
  // Donor row for each imputed row; nullopt for rows that were complete.
  std::vector<std::optional<size_t>> donor;
};

// Each incomplete row copies its missing entries from a uniformly drawn
// fully observed donor row.
absl::StatusOr<HotDeckResult> HotDeck(const ImputationData& data, Rng& rng);

// epsilon_1 + epsilon_2 for a DP fit followed by a DP analysis.
absl::StatusOr<PrivacyLoss> ImputationPrivacyLoss(double epsilon_fit,
                                                  double epsilon_analysis);

}  // namespace survey_dp

#endif  // SURVEY_DP_IMPUTE_H_
