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

#include "survey_dp/adjust.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

#include "absl/status/status.h"
#include "absl/strings/str_cat.h"

namespace survey_dp {
namespace {

struct CellCounts {
  double sampled = 0.0;
  double responded = 0.0;
};

// Merges classes with no respondents and turns counts into propensities.
absl::StatusOr<CellPropensities> CollapseAndRate(
    std::map<std::string, CellCounts> counts) {
  CellPropensities out;
  for (const auto& [label, unused] : counts) out.effective_cell[label] = label;
  while (true) {
    auto empty = std::find_if(counts.begin(), counts.end(), [](const auto& c) {
      return !(c.second.responded > 0.0);
    });
    if (empty == counts.end()) break;
    if (counts.size() == 1) {
      return absl::FailedPreconditionError(
          "no respondents in any weighting class");
    }
    auto target = std::next(empty);
    if (target == counts.end()) target = std::prev(empty);
    target->second.sampled += empty->second.sampled;
    target->second.responded += empty->second.responded;
    for (auto& [label, effective] : out.effective_cell) {
      if (effective == empty->first) effective = target->first;
    }
    counts.erase(empty);
  }
  for (const auto& [label, c] : counts) {
    out.propensity[label] = std::min(1.0, c.responded / c.sampled);
  }
  return out;
}

}  // namespace

absl::StatusOr<double> CellPropensities::For(const std::string& cell) const {
  auto it = effective_cell.find(cell);
  if (it == effective_cell.end()) {
    return absl::NotFoundError(
        absl::StrCat("no propensity for weighting class '", cell, "'"));
  }
  return propensity.at(it->second);
}

absl::StatusOr<CellPropensities> EstimatePropensitiesCells(
    absl::Span<const ResponseUnit> units) {
  if (units.empty()) {
    return absl::InvalidArgumentError("no sampled units to model response");
  }
  std::map<std::string, CellCounts> counts;
  for (const ResponseUnit& u : units) {
    counts[u.cell].sampled += 1.0;
    if (u.responded) counts[u.cell].responded += 1.0;
  }
  return CollapseAndRate(std::move(counts));
}

absl::StatusOr<CellPropensities> EstimatePropensitiesCellsDp(
    absl::Span<const ResponseUnit> units, PrivacyLoss epsilon, Rng& rng,
    PrivacyLedger& ledger) {
  if (units.empty()) {
    return absl::InvalidArgumentError("no sampled units to model response");
  }
  std::map<std::string, CellCounts> counts;
  for (const ResponseUnit& u : units) {
    counts[u.cell].sampled += 1.0;
    if (u.responded) counts[u.cell].responded += 1.0;
  }
  absl::StatusOr<PrivacyLoss> half = PrivacyLoss::Create(epsilon.epsilon() / 2);
  if (!half.ok()) return half.status();
  // Replacing one unit moves one count between two classes.
  absl::StatusOr<Sensitivity> histogram = Sensitivity::Create(2.0);
  if (!histogram.ok()) return histogram.status();
  for (auto& [label, c] : counts) {
    const double sampled = ReleaseLaplace(c.sampled, *histogram, *half, rng);
    const double responded =
        ReleaseLaplace(c.responded, *histogram, *half, rng);
    c.sampled = std::max(sampled, 1.0);
    c.responded = std::clamp(responded, 0.0, c.sampled);
  }
  ledger.Charge("nonresponse_propensity", epsilon);
  return CollapseAndRate(std::move(counts));
}

absl::StatusOr<std::vector<double>> NonresponseAdjust(
    absl::Span<const double> weights, absl::Span<const std::string> cells,
    const CellPropensities& propensities) {
  if (weights.size() != cells.size()) {
    return absl::InvalidArgumentError("weights and cells differ in length");
  }
  std::vector<double> out(weights.size());
  for (size_t i = 0; i < weights.size(); ++i) {
    absl::StatusOr<double> p = propensities.For(cells[i]);
    if (!p.ok()) return p.status();
    if (!(*p > 0.0 && *p <= 1.0)) {
      return absl::InvalidArgumentError(absl::StrCat(
          "propensity for class '", cells[i], "' must lie in (0, 1]"));
    }
    out[i] = weights[i] / *p;
  }
  return out;
}

absl::StatusOr<std::vector<double>> Poststratify(
    absl::Span<const double> weights, absl::Span<const std::string> cells,
    const std::map<std::string, double>& benchmarks) {
  if (weights.size() != cells.size()) {
    return absl::InvalidArgumentError("weights and cells differ in length");
  }
  std::map<std::string, double> totals;
  std::map<std::string, size_t> members;
  for (size_t i = 0; i < weights.size(); ++i) {
    totals[cells[i]] += weights[i];
    ++members[cells[i]];
  }
  std::map<std::string, double> factor;
  for (const auto& [label, benchmark] : benchmarks) {
    if (!(benchmark > 0.0) || !std::isfinite(benchmark)) {
      return absl::InvalidArgumentError(
          absl::StrCat("benchmark for '", label, "' must be positive"));
    }
    auto it = totals.find(label);
    if (it == totals.end() || !(it->second > 0.0)) {
      return absl::FailedPreconditionError(
          absl::StrCat("calibration failure: benchmarked cell '", label,
                       "' has no weighted respondents"));
    }
    const double tolerance = 4.0 * std::numeric_limits<double>::epsilon() *
                             static_cast<double>(members[label]) * benchmark;
    factor[label] = std::abs(it->second - benchmark) <= tolerance
                        ? 1.0
                        : benchmark / it->second;
  }
  std::vector<double> out(weights.begin(), weights.end());
  for (size_t i = 0; i < out.size(); ++i) {
    auto it = factor.find(cells[i]);
    if (it != factor.end()) out[i] *= it->second;
  }
  return out;
}

absl::StatusOr<std::vector<double>> RegularizeWeights(
    absl::Span<const double> weights, double lower, double upper) {
  if (!(lower > 0.0) || !(upper >= lower) || !std::isfinite(upper)) {
    return absl::InvalidArgumentError(
        absl::StrCat("weight bounds must satisfy 0 < lower <= upper, got [",
                     lower, ", ", upper, "]"));
  }
  std::vector<double> out(weights.size());
  for (size_t i = 0; i < weights.size(); ++i) {
    out[i] = std::clamp(weights[i], lower, upper);
  }
  return out;
}

}  // namespace survey_dp
