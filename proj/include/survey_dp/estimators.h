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

#ifndef SURVEY_DP_ESTIMATORS_H_
#define SURVEY_DP_ESTIMATORS_H_

#include <cstdint>
#include <optional>
#include <string>

#include "absl/status/statusor.h"
#include "absl/types/span.h"
#include "survey_dp/designs.h"
#include "survey_dp/dp_core.h"
#include "survey_dp/frame.h"
#include "survey_dp/neighbor_relation.h"

namespace survey_dp {

enum class EstimatorKind { kHtMean, kHtTotal, kUnweightedMean };

std::string EstimatorName(EstimatorKind kind);
absl::StatusOr<EstimatorKind> ParseEstimator(const std::string& name);

struct HtEstimate {
  double value = 0.0;
  EstimatorKind estimator = EstimatorKind::kHtMean;
  int64_t population_size = 0;
};

// sum(w_i * y_i) / N. The population size is public.
absl::StatusOr<HtEstimate> HtMean(absl::Span<const double> weights,
                                  absl::Span<const double> y,
                                  int64_t population_size);
// sum(w_i * y_i).
absl::StatusOr<HtEstimate> HtTotal(absl::Span<const double> weights,
                                   absl::Span<const double> y);
absl::StatusOr<HtEstimate> UnweightedMean(absl::Span<const double> y);

// y values of the sampled units, one entry per distinct unit.
absl::StatusOr<std::vector<double>> SampleY(const WeightedSample& sample,
                                            const Frame& frame);
std::vector<double> SampleWeights(const WeightedSample& sample);

// Where a release took its sensitivity from.
enum class SensitivitySource { kFixedWeights, kAudited, kUnweighted };
std::string SensitivitySourceName(SensitivitySource source);

struct DpRelease {
  double value = 0.0;
  double sensitivity = 0.0;
  double noise_scale = 0.0;
  SensitivitySource source = SensitivitySource::kFixedWeights;
};

struct DpHtOptions {
  std::string label = "ht_mean";
  // Upper bound on any weight a neighbouring dataset can carry (frame-wide or
  // universe-wide maximum); must dominate the weights passed in.
  double max_weight = 0.0;
  // Set when the caller has established that the weights cannot change
  // between neighbours even without frame invariance.
  bool weights_data_independent = false;
  // Sensitivity computed by the audit oracle for data-dependent weights.
  std::optional<Sensitivity> audited;
};

// Laplace release of the HT mean. Without frame invariance (or established
// data-independent weights) the fixed-weight bound under-protects, so an
// audited sensitivity is required and the call fails otherwise.
absl::StatusOr<DpRelease> DpHtMean(
    absl::Span<const double> weights, absl::Span<const double> y,
    int64_t population_size, const ValueUniverse& universe,
    const NeighborRelation& relation, PrivacyLoss epsilon, Rng& rng,
    PrivacyLedger& ledger, const DpHtOptions& options);

// As DpHtMean for the total; fixed-weight sensitivity max(w) * R.
absl::StatusOr<DpRelease> DpHtTotal(absl::Span<const double> weights,
                                    absl::Span<const double> y,
                                    const ValueUniverse& universe,
                                    const NeighborRelation& relation,
                                    PrivacyLoss epsilon, Rng& rng,
                                    PrivacyLedger& ledger,
                                    const DpHtOptions& options);

// Laplace release of the plain mean with sensitivity R / n.
absl::StatusOr<DpRelease> DpUnweightedMean(absl::Span<const double> y,
                                           const ValueUniverse& universe,
                                           PrivacyLoss epsilon, Rng& rng,
                                           PrivacyLedger& ledger,
                                           const std::string& label);

}  // namespace survey_dp

#endif  // SURVEY_DP_ESTIMATORS_H_
