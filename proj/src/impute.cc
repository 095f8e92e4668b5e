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

#include "survey_dp/impute.h"

#include <algorithm>
#include <cmath>
#include <set>

#include "Eigen/Dense"
#include "absl/status/status.h"
#include "absl/strings/str_cat.h"

namespace survey_dp {
namespace {

absl::Status CheckBounds(absl::Span<const VariableBounds> bounds,
                         size_t variables) {
  if (bounds.size() != variables) {
    return absl::InvalidArgumentError(absl::StrCat(
        "expected bounds for ", variables, " variables, got ", bounds.size()));
  }
  for (size_t v = 0; v < bounds.size(); ++v) {
    if (!std::isfinite(bounds[v].lower) || !std::isfinite(bounds[v].upper) ||
        bounds[v].upper < bounds[v].lower) {
      return absl::InvalidArgumentError(absl::StrCat(
          "variable ", v, " needs finite bounds with lower <= upper"));
    }
  }
  return absl::OkStatus();
}

bool IsComplete(const Record& row, absl::Span<const size_t> columns) {
  for (size_t c : columns) {
    if (!row[c].has_value()) return false;
  }
  return true;
}

std::vector<size_t> AllColumns(size_t n) {
  std::vector<size_t> all(n);
  for (size_t i = 0; i < n; ++i) all[i] = i;
  return all;
}

absl::StatusOr<double> DrawResidual(double scale, Rng& rng) {
  absl::StatusOr<LaplaceNoise> noise = LaplaceNoise::WithScale(scale);
  if (!noise.ok()) return noise.status();
  return noise->Sample(rng);
}

// Largest minus smallest value of a * b over the box a in A, b in B (or of
// a^2 when both factors are the same variable).
double ProductRange(const VariableBounds& a, const VariableBounds& b,
                    bool same) {
  if (same) {
    const double lo_sq = a.lower * a.lower;
    const double hi_sq = a.upper * a.upper;
    const double low =
        (a.lower <= 0.0 && a.upper >= 0.0) ? 0.0 : std::min(lo_sq, hi_sq);
    return std::max(lo_sq, hi_sq) - low;
  }
  const double corners[] = {a.lower * b.lower, a.lower * b.upper,
                            a.upper * b.lower, a.upper * b.upper};
  return *std::max_element(std::begin(corners), std::end(corners)) -
         *std::min_element(std::begin(corners), std::end(corners));
}

}  // namespace

MissingnessMask Mask(const ImputationData& data) {
  MissingnessMask mask(data.rows.size());
  for (size_t i = 0; i < data.rows.size(); ++i) {
    for (const auto& entry : data.rows[i]) {
      mask[i].push_back(!entry.has_value());
    }
  }
  return mask;
}

absl::StatusOr<ImputationParams> FitDpMeanModel(
    const ImputationData& data, absl::Span<const VariableBounds> bounds,
    PrivacyLoss epsilon, Rng& rng, PrivacyLedger& ledger,
    const FitOptions& options) {
  const size_t k = data.variables.size();
  if (k == 0) return absl::InvalidArgumentError("no variables to model");
  if (absl::Status s = CheckBounds(bounds, k); !s.ok()) return s;
  const std::vector<size_t> all = AllColumns(k);

  absl::StatusOr<PrivacyLoss> per_variable =
      PrivacyLoss::Create(epsilon.epsilon() / static_cast<double>(k));
  if (!per_variable.ok()) return per_variable.status();
  absl::StatusOr<PrivacyLoss> per_release =
      options.stochastic ? PrivacyLoss::Create(per_variable->epsilon() / 2)
                         : per_variable;
  if (!per_release.ok()) return per_release.status();

  MeanModel model;
  for (size_t v = 0; v < k; ++v) {
    std::vector<double> values;
    for (const Record& row : data.rows) {
      if (row.size() != k) {
        return absl::InvalidArgumentError("ragged imputation data");
      }
      const bool use = options.rows == FitRows::kCompleteCases
                           ? IsComplete(row, all)
                           : row[v].has_value();
      if (use) {
        values.push_back(std::clamp(*row[v], bounds[v].lower, bounds[v].upper));
      }
    }
    if (values.empty()) {
      return absl::FailedPreconditionError(absl::StrCat(
          "no observed values for variable '", data.variables[v], "'"));
    }
    const double n = static_cast<double>(values.size());
    double sum = 0.0;
    for (double y : values) sum += y;
    absl::StatusOr<Sensitivity> sensitivity =
        Sensitivity::Create(bounds[v].Range() / n);
    if (!sensitivity.ok()) return sensitivity.status();
    const double mean =
        std::clamp(ReleaseLaplace(sum / n, *sensitivity, *per_release, rng),
                   bounds[v].lower, bounds[v].upper);
    double spread = 0.0;
    if (options.stochastic) {
      double deviation = 0.0;
      for (double y : values) deviation += std::abs(y - mean);
      spread = std::clamp(
          ReleaseLaplace(deviation / n, *sensitivity, *per_release, rng), 0.0,
          bounds[v].Range());
    }
    model.means.push_back(mean);
    // The mean absolute deviation of a Laplace law equals its scale.
    model.residual_scales.push_back(spread);
  }
  ledger.Charge("imputation_fit", epsilon);
  return ImputationParams{
      std::move(model), epsilon, {bounds.begin(), bounds.end()}};
}

absl::StatusOr<ImputationParams> FitDpRegression(
    const ImputationData& data, const RegressionSpec& spec,
    absl::Span<const VariableBounds> bounds, PrivacyLoss epsilon, Rng& rng,
    PrivacyLedger& ledger, const FitOptions& options) {
  const size_t k = data.variables.size();
  if (absl::Status s = CheckBounds(bounds, k); !s.ok()) return s;
  std::set<size_t> seen = {spec.target};
  if (spec.target >= k) {
    return absl::InvalidArgumentError("regression target out of range");
  }
  for (size_t p : spec.predictors) {
    if (p >= k || !seen.insert(p).second) {
      return absl::InvalidArgumentError(
          "predictors must be distinct, in range and differ from the target");
    }
  }
  std::vector<size_t> used_columns = spec.predictors;
  used_columns.push_back(spec.target);

  std::vector<size_t> predictors;
  for (size_t p : spec.predictors) {
    if (bounds[p].Range() > 0.0) predictors.push_back(p);
  }

  std::vector<const Record*> rows;
  for (const Record& row : data.rows) {
    if (row.size() != k) {
      return absl::InvalidArgumentError("ragged imputation data");
    }
    if (IsComplete(row, used_columns)) rows.push_back(&row);
  }

  if (predictors.empty()) {
    ImputationData target_only;
    target_only.variables = {data.variables[spec.target]};
    for (const Record* row : rows)
      target_only.rows.push_back({(*row)[spec.target]});
    absl::StatusOr<ImputationParams> mean = FitDpMeanModel(
        target_only, {bounds[spec.target]}, epsilon, rng, ledger, options);
    if (!mean.ok()) return mean.status();
    const MeanModel& m = std::get<MeanModel>(mean->model);
    RegressionModel model;
    model.target = spec.target;
    model.coefficients = {m.means[0]};
    model.residual_scale = m.residual_scales[0];
    model.entry_epsilons = {epsilon.epsilon()};
    return ImputationParams{
        std::move(model), epsilon, {bounds.begin(), bounds.end()}};
  }

  const size_t q = predictors.size() + 1;
  if (rows.size() < q) {
    return absl::FailedPreconditionError(absl::StrCat(
        "regression needs at least ", q, " complete cases, got ", rows.size()));
  }

  // Column 0 is the intercept; columns 1..q-1 the predictors.
  std::vector<VariableBounds> column_bounds = {{1.0, 1.0}};
  for (size_t p : predictors) column_bounds.push_back(bounds[p]);
  const VariableBounds& target_bounds = bounds[spec.target];

  Eigen::MatrixXd xtx = Eigen::MatrixXd::Zero(q, q);
  Eigen::VectorXd xty = Eigen::VectorXd::Zero(q);
  double yty = 0.0;
  Eigen::VectorXd z(q);
  for (const Record* row : rows) {
    z(0) = 1.0;
    for (size_t j = 0; j < predictors.size(); ++j) {
      z(j + 1) = std::clamp(*(*row)[predictors[j]], column_bounds[j + 1].lower,
                            column_bounds[j + 1].upper);
    }
    const double y = std::clamp(*(*row)[spec.target], target_bounds.lower,
                                target_bounds.upper);
    xtx += z * z.transpose();
    xty += z * y;
    yty += y * y;
  }

  const size_t entries = q * (q + 1) / 2 + q + 1;
  absl::StatusOr<PrivacyLoss> per_entry =
      PrivacyLoss::Create(epsilon.epsilon() / static_cast<double>(entries));
  if (!per_entry.ok()) return per_entry.status();
  auto perturb = [&](double value, double range) -> absl::StatusOr<double> {
    absl::StatusOr<Sensitivity> s = Sensitivity::Create(range);
    if (!s.ok()) return s.status();
    return ReleaseLaplace(value, *s, *per_entry, rng);
  };
  for (size_t a = 0; a < q; ++a) {
    for (size_t b = a; b < q; ++b) {
      absl::StatusOr<double> noisy = perturb(
          xtx(a, b), ProductRange(column_bounds[a], column_bounds[b], a == b));
      if (!noisy.ok()) return noisy.status();
      xtx(a, b) = xtx(b, a) = *noisy;
    }
  }
  for (size_t a = 0; a < q; ++a) {
    absl::StatusOr<double> noisy =
        perturb(xty(a), ProductRange(column_bounds[a], target_bounds, false));
    if (!noisy.ok()) return noisy.status();
    xty(a) = *noisy;
  }
  absl::StatusOr<double> noisy_yty =
      perturb(yty, ProductRange(target_bounds, target_bounds, true));
  if (!noisy_yty.ok()) return noisy_yty.status();

  double trace = 0.0;
  for (size_t j = 1; j < q; ++j) trace += xtx(j, j);
  double ridge = 1e-3 * trace / static_cast<double>(q - 1);
  if (!(ridge > 0.0) || !std::isfinite(ridge)) ridge = 1e-3;
  Eigen::MatrixXd regularized = xtx;
  for (size_t j = 1; j < q; ++j) regularized(j, j) += ridge;
  const Eigen::VectorXd beta =
      regularized.completeOrthogonalDecomposition().solve(xty);

  RegressionModel model;
  model.target = spec.target;
  model.predictors = predictors;
  model.coefficients.assign(beta.data(), beta.data() + q);
  model.ridge = ridge;
  model.entry_epsilons.assign(entries, per_entry->epsilon());
  if (options.stochastic) {
    const double rss = *noisy_yty - 2.0 * beta.dot(xty) + beta.dot(xtx * beta);
    const double variance =
        std::max(rss, 0.0) / static_cast<double>(rows.size());
    // Laplace variance is 2 b^2.
    model.residual_scale = std::sqrt(variance / 2.0);
  }
  for (double c : model.coefficients) {
    if (!std::isfinite(c)) {
      return absl::InternalError("regression produced non-finite coefficients");
    }
  }
  ledger.Charge("imputation_fit", epsilon);
  return ImputationParams{
      std::move(model), epsilon, {bounds.begin(), bounds.end()}};
}

absl::StatusOr<std::vector<double>> ImputeParametric(
    absl::Span<const std::optional<double>> record,
    const ImputationParams& params, Rng& rng) {
  if (record.size() != params.bounds.size()) {
    return absl::InvalidArgumentError(
        "record width does not match the fitted model");
  }
  std::vector<double> filled(record.size());
  for (size_t v = 0; v < record.size(); ++v) {
    if (record[v].has_value()) filled[v] = *record[v];
  }
  if (const auto* mean = std::get_if<MeanModel>(&params.model)) {
    for (size_t v = 0; v < record.size(); ++v) {
      if (record[v].has_value()) continue;
      absl::StatusOr<double> residual =
          DrawResidual(mean->residual_scales[v], rng);
      if (!residual.ok()) return residual.status();
      filled[v] = std::clamp(mean->means[v] + *residual, params.bounds[v].lower,
                             params.bounds[v].upper);
    }
    return filled;
  }
  const auto& reg = std::get<RegressionModel>(params.model);
  for (size_t v = 0; v < record.size(); ++v) {
    if (record[v].has_value()) continue;
    if (v != reg.target) {
      return absl::FailedPreconditionError(absl::StrCat(
          "variable ", v, " is missing but the model only imputes variable ",
          reg.target));
    }
    double prediction = reg.coefficients[0];
    for (size_t j = 0; j < reg.predictors.size(); ++j) {
      const auto& x = record[reg.predictors[j]];
      if (!x.has_value()) {
        return absl::FailedPreconditionError(
            absl::StrCat("predictor ", reg.predictors[j],
                         " is missing; no model component applies"));
      }
      const VariableBounds& b = params.bounds[reg.predictors[j]];
      prediction += reg.coefficients[j + 1] * std::clamp(*x, b.lower, b.upper);
    }
    absl::StatusOr<double> residual = DrawResidual(reg.residual_scale, rng);
    if (!residual.ok()) return residual.status();
    filled[v] = std::clamp(prediction + *residual, params.bounds[v].lower,
                           params.bounds[v].upper);
  }
  return filled;
}

absl::StatusOr<HotDeckResult> HotDeck(const ImputationData& data, Rng& rng) {
  std::vector<size_t> donors;
  std::vector<size_t> recipients;
  for (size_t i = 0; i < data.rows.size(); ++i) {
    const bool complete =
        std::all_of(data.rows[i].begin(), data.rows[i].end(),
                    [](const auto& e) { return e.has_value(); });
    (complete ? donors : recipients).push_back(i);
  }
  HotDeckResult result{data,
                       std::vector<std::optional<size_t>>(data.rows.size())};
  if (recipients.empty()) return result;
  if (donors.empty()) {
    return absl::FailedPreconditionError(
        "hot-deck imputation needs at least one fully observed donor");
  }
  for (size_t i : recipients) {
    const size_t donor = donors[UniformIndex(rng, donors.size())];
    result.donor[i] = donor;
    Record& row = result.filled.rows[i];
    for (size_t v = 0; v < row.size(); ++v) {
      if (!row[v].has_value()) row[v] = data.rows[donor][v];
    }
  }
  return result;
}

absl::StatusOr<PrivacyLoss> ImputationPrivacyLoss(double epsilon_fit,
                                                  double epsilon_analysis) {
  absl::StatusOr<PrivacyLoss> fit = PrivacyLoss::Create(epsilon_fit);
  if (!fit.ok()) return fit.status();
  absl::StatusOr<PrivacyLoss> analysis = PrivacyLoss::Create(epsilon_analysis);
  if (!analysis.ok()) return analysis.status();
  PrivacyLedger ledger;
  ledger.Charge("imputation_fit", *fit);
  ledger.Charge("analysis", *analysis);
  return ComposeSequential(ledger);
}

}  // namespace survey_dp
