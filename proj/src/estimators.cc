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

#include "survey_dp/estimators.h"

#include <algorithm>
#include <cmath>

#include "absl/status/status.h"
#include "absl/strings/str_cat.h"

namespace survey_dp {
namespace {

absl::Status CheckPaired(absl::Span<const double> weights,
                         absl::Span<const double> y) {
  if (y.empty()) {
    return absl::FailedPreconditionError(
        "empty sample: the estimate is undefined");
  }
  if (weights.size() != y.size()) {
    return absl::InvalidArgumentError("weights and y differ in length");
  }
  for (double w : weights) {
    if (!(w > 0.0) || !std::isfinite(w)) {
      return absl::InvalidArgumentError("weights must be positive and finite");
    }
  }
  return absl::OkStatus();
}

// Shared path of the weighted releases. `scale` turns max(w) * R into the
// sensitivity of the estimator (1/N for the mean, 1 for the total).
absl::StatusOr<DpRelease> ReleaseWeighted(double estimate,
                                          absl::Span<const double> weights,
                                          const ValueUniverse& universe,
                                          const NeighborRelation& relation,
                                          double scale, PrivacyLoss epsilon,
                                          Rng& rng, PrivacyLedger& ledger,
                                          const DpHtOptions& options) {
  DpRelease release;
  if (options.audited.has_value()) {
    release.sensitivity = options.audited->value();
    release.source = SensitivitySource::kAudited;
  } else if (relation.invariant == Invariant::kFrame ||
             options.weights_data_independent) {
    const double observed_max =
        *std::max_element(weights.begin(), weights.end());
    if (options.max_weight < observed_max) {
      return absl::InvalidArgumentError(absl::StrCat(
          "max_weight ", options.max_weight,
          " is below the largest weight in the sample (", observed_max, ")"));
    }
    release.sensitivity = options.max_weight * universe.Range() * scale;
    release.source = SensitivitySource::kFixedWeights;
  } else {
    return absl::FailedPreconditionError(absl::StrCat(
        options.label,
        ": weights depend on the data under this neighbour relation and no "
        "audited sensitivity was supplied; supply an audited sensitivity or "
        "treat the frame as invariant"));
  }
  absl::StatusOr<Sensitivity> sensitivity =
      Sensitivity::Create(release.sensitivity);
  if (!sensitivity.ok()) return sensitivity.status();
  release.noise_scale = LaplaceScale(*sensitivity, epsilon).scale();
  release.value = ReleaseLaplace(estimate, *sensitivity, epsilon, rng);
  ledger.Charge(options.label, epsilon, *sensitivity);
  return release;
}

}  // namespace

std::string EstimatorName(EstimatorKind kind) {
  switch (kind) {
    case EstimatorKind::kHtMean:
      return "ht_mean";
    case EstimatorKind::kHtTotal:
      return "ht_total";
    case EstimatorKind::kUnweightedMean:
      return "unweighted_mean";
  }
  return "unknown";
}

absl::StatusOr<EstimatorKind> ParseEstimator(const std::string& name) {
  if (name == "ht_mean") return EstimatorKind::kHtMean;
  if (name == "ht_total") return EstimatorKind::kHtTotal;
  if (name == "unweighted_mean") return EstimatorKind::kUnweightedMean;
  return absl::InvalidArgumentError(
      absl::StrCat("unknown statistic '", name, "'"));
}

std::string SensitivitySourceName(SensitivitySource source) {
  switch (source) {
    case SensitivitySource::kFixedWeights:
      return "fixed_weights";
    case SensitivitySource::kAudited:
      return "audited";
    case SensitivitySource::kUnweighted:
      return "unweighted";
  }
  return "unknown";
}

absl::StatusOr<HtEstimate> HtMean(absl::Span<const double> weights,
                                  absl::Span<const double> y,
                                  int64_t population_size) {
  if (population_size < 1) {
    return absl::InvalidArgumentError("population size must be positive");
  }
  if (absl::Status s = CheckPaired(weights, y); !s.ok()) return s;
  double total = 0.0;
  for (size_t i = 0; i < y.size(); ++i) total += weights[i] * y[i];
  return HtEstimate{total / static_cast<double>(population_size),
                    EstimatorKind::kHtMean, population_size};
}

absl::StatusOr<HtEstimate> HtTotal(absl::Span<const double> weights,
                                   absl::Span<const double> y) {
  if (absl::Status s = CheckPaired(weights, y); !s.ok()) return s;
  double total = 0.0;
  for (size_t i = 0; i < y.size(); ++i) total += weights[i] * y[i];
  return HtEstimate{total, EstimatorKind::kHtTotal, 0};
}

absl::StatusOr<HtEstimate> UnweightedMean(absl::Span<const double> y) {
  if (y.empty()) {
    return absl::FailedPreconditionError("mean of an empty sample");
  }
  double total = 0.0;
  for (double v : y) total += v;
  return HtEstimate{total / static_cast<double>(y.size()),
                    EstimatorKind::kUnweightedMean, 0};
}

absl::StatusOr<std::vector<double>> SampleY(const WeightedSample& sample,
                                            const Frame& frame) {
  std::vector<double> y;
  y.reserve(sample.size());
  for (const SampledUnit& u : sample.units) {
    const FrameRecord& r = frame[u.index];
    if (!r.y.has_value()) {
      return absl::FailedPreconditionError(
          absl::StrCat("unit ", r.id, " has no y value"));
    }
    y.push_back(*r.y);
  }
  return y;
}

std::vector<double> SampleWeights(const WeightedSample& sample) {
  std::vector<double> w;
  w.reserve(sample.size());
  for (const SampledUnit& u : sample.units) w.push_back(u.weight);
  return w;
}

absl::StatusOr<DpRelease> DpHtMean(
    absl::Span<const double> weights, absl::Span<const double> y,
    int64_t population_size, const ValueUniverse& universe,
    const NeighborRelation& relation, PrivacyLoss epsilon, Rng& rng,
    PrivacyLedger& ledger, const DpHtOptions& options) {
  absl::StatusOr<HtEstimate> estimate = HtMean(weights, y, population_size);
  if (!estimate.ok()) return estimate.status();
  return ReleaseWeighted(estimate->value, weights, universe, relation,
                         1.0 / static_cast<double>(population_size), epsilon,
                         rng, ledger, options);
}

absl::StatusOr<DpRelease> DpHtTotal(absl::Span<const double> weights,
                                    absl::Span<const double> y,
                                    const ValueUniverse& universe,
                                    const NeighborRelation& relation,
                                    PrivacyLoss epsilon, Rng& rng,
                                    PrivacyLedger& ledger,
                                    const DpHtOptions& options) {
  absl::StatusOr<HtEstimate> estimate = HtTotal(weights, y);
  if (!estimate.ok()) return estimate.status();
  return ReleaseWeighted(estimate->value, weights, universe, relation, 1.0,
                         epsilon, rng, ledger, options);
}

absl::StatusOr<DpRelease> DpUnweightedMean(absl::Span<const double> y,
                                           const ValueUniverse& universe,
                                           PrivacyLoss epsilon, Rng& rng,
                                           PrivacyLedger& ledger,
                                           const std::string& label) {
  absl::StatusOr<HtEstimate> estimate = UnweightedMean(y);
  if (!estimate.ok()) return estimate.status();
  absl::StatusOr<Sensitivity> sensitivity = AnalyticSensitivity(
      MeanStatistic{universe.Range(), static_cast<int64_t>(y.size())});
  if (!sensitivity.ok()) return sensitivity.status();
  DpRelease release;
  release.sensitivity = sensitivity->value();
  release.source = SensitivitySource::kUnweighted;
  release.noise_scale = LaplaceScale(*sensitivity, epsilon).scale();
  release.value = ReleaseLaplace(estimate->value, *sensitivity, epsilon, rng);
  ledger.Charge(label, epsilon, *sensitivity);
  return release;
}

}  // namespace survey_dp
