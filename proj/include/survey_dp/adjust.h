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

#ifndef SURVEY_DP_ADJUST_H_
#define SURVEY_DP_ADJUST_H_

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "absl/status/statusor.h"
#include "absl/types/span.h"
#include "survey_dp/dp_core.h"
#include "survey_dp/random.h"

namespace survey_dp {

// A sampled unit's weighting class and response outcome.
struct ResponseUnit {
  int64_t id = 0;
  std::string cell;
  bool responded = false;
};

// Estimated response propensity per weighting class. Classes without
// respondents are merged into a neighbour; `effective_cell` maps each
// original label to the class it was merged into (itself if untouched).
struct CellPropensities {
  std::map<std::string, double> propensity;
  std::map<std::string, std::string> effective_cell;

  absl::StatusOr<double> For(const std::string& cell) const;
};

// p_c = respondents / sampled within each class. A class with no
// respondents is merged into the next class in label order (the previous
// one for the last label) until every class has a respondent.
absl::StatusOr<CellPropensities> EstimatePropensitiesCells(
    absl::Span<const ResponseUnit> units);

// Experimental: sampled and responding counts per class are released with
// Laplace noise (epsilon split evenly, L1 sensitivity 2 per histogram) and
// turned into propensities by post-processing. Charges `epsilon` to the
// ledger.
absl::StatusOr<CellPropensities> EstimatePropensitiesCellsDp(
    absl::Span<const ResponseUnit> units, PrivacyLoss epsilon, Rng& rng,
    PrivacyLedger& ledger);

// w_i / p_{cell(i)}.
absl::StatusOr<std::vector<double>> NonresponseAdjust(
    absl::Span<const double> weights, absl::Span<const std::string> cells,
    const CellPropensities& propensities);

// Within each benchmarked cell, scales weights so that they sum to the
// benchmark. Cells already matching their benchmark (to rounding) are left
// untouched, which makes the operation idempotent. Cells without a
// benchmark keep their weights.
absl::StatusOr<std::vector<double>> Poststratify(
    absl::Span<const double> weights, absl::Span<const std::string> cells,
    const std::map<std::string, double>& benchmarks);

// Clamps every weight into [lower, upper]; lower == upper gives equal
// weights.
absl::StatusOr<std::vector<double>> RegularizeWeights(
    absl::Span<const double> weights, double lower, double upper);

// Weights through each adjustment step, for reporting and audits.
struct AdjustedWeights {
  std::vector<double> base;
  std::vector<double> nonresponse;
  std::vector<double> calibrated;
  std::vector<std::string> steps;

  const std::vector<double>& Final() const { return calibrated; }
};

}  // namespace survey_dp

#endif  // SURVEY_DP_ADJUST_H_
