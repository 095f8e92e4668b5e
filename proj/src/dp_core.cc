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

#include "survey_dp/dp_core.h"

#include <algorithm>
#include <cmath>
#include <utility>

#include "absl/status/status.h"
#include "absl/strings/str_cat.h"

namespace survey_dp {

absl::StatusOr<PrivacyLoss> PrivacyLoss::Create(double epsilon) {
  if (!std::isfinite(epsilon) || epsilon <= 0.0) {
    return absl::InvalidArgumentError(
        absl::StrCat("epsilon must be positive and finite, got ", epsilon));
  }
  return PrivacyLoss(epsilon);
}

absl::StatusOr<Sensitivity> Sensitivity::Create(double delta_f) {
  if (!std::isfinite(delta_f) || delta_f < 0.0) {
    return absl::InvalidArgumentError(absl::StrCat(
        "sensitivity must be non-negative and finite, got ", delta_f));
  }
  return Sensitivity(delta_f);
}

absl::StatusOr<LaplaceNoise> LaplaceNoise::WithScale(double scale) {
  if (!std::isfinite(scale) || scale < 0.0) {
    return absl::InvalidArgumentError(
        absl::StrCat("Laplace scale must be non-negative, got ", scale));
  }
  return LaplaceNoise(scale);
}

double LaplaceNoise::Sample(Rng& rng) const {
  const double u = UniformOpen01(rng) - 0.5;
  if (scale_ == 0.0) return 0.0;
  return u < 0.0 ? scale_ * std::log1p(2.0 * u)
                 : -scale_ * std::log1p(-2.0 * u);
}

LaplaceNoise LaplaceScale(Sensitivity delta_f, PrivacyLoss epsilon) {
  return LaplaceNoise(delta_f.value() / epsilon.epsilon());
}

absl::StatusOr<LaplaceNoise> LaplaceScale(double delta_f, double epsilon) {
  absl::StatusOr<Sensitivity> sensitivity = Sensitivity::Create(delta_f);
  if (!sensitivity.ok()) return sensitivity.status();
  absl::StatusOr<PrivacyLoss> loss = PrivacyLoss::Create(epsilon);
  if (!loss.ok()) return loss.status();
  return LaplaceScale(*sensitivity, *loss);
}

double ReleaseLaplace(double value, Sensitivity delta_f, PrivacyLoss epsilon,
                      Rng& rng) {
  return value + LaplaceScale(delta_f, epsilon).Sample(rng);
}

absl::StatusOr<double> ReleaseLaplace(double value, double delta_f,
                                      double epsilon, Rng& rng) {
  absl::StatusOr<LaplaceNoise> noise = LaplaceScale(delta_f, epsilon);
  if (!noise.ok()) return noise.status();
  if (!std::isfinite(value)) {
    return absl::InvalidArgumentError("released value must be finite");
  }
  return value + noise->Sample(rng);
}

namespace {

struct SensitivityVisitor {
  absl::StatusOr<Sensitivity> operator()(const ProportionStatistic& s) const {
    if (s.n < 1) return absl::InvalidArgumentError("n must be at least 1");
    return Sensitivity::Create(1.0 / static_cast<double>(s.n));
  }
  absl::StatusOr<Sensitivity> operator()(const MeanStatistic& s) const {
    if (s.n < 1) return absl::InvalidArgumentError("n must be at least 1");
    if (!(s.range >= 0.0)) {
      return absl::InvalidArgumentError("range must be non-negative");
    }
    return Sensitivity::Create(s.range / static_cast<double>(s.n));
  }
  absl::StatusOr<Sensitivity> operator()(
      const HtMeanFixedWeightsStatistic& s) const {
    if (s.population_size < 1) {
      return absl::InvalidArgumentError("population size must be at least 1");
    }
    if (!(s.max_weight > 0.0)) {
      return absl::InvalidArgumentError("max weight must be positive");
    }
    if (!(s.range >= 0.0)) {
      return absl::InvalidArgumentError("range must be non-negative");
    }
    return Sensitivity::Create(s.max_weight * s.range /
                               static_cast<double>(s.population_size));
  }
};

}  // namespace

absl::StatusOr<Sensitivity> AnalyticSensitivity(
    const CanonicalStatistic& statistic) {
  return std::visit(SensitivityVisitor{}, statistic);
}

void PrivacyLedger::Charge(std::string label, PrivacyLoss epsilon,
                           std::optional<Sensitivity> sensitivity) {
  charges_.push_back(LedgerCharge{std::move(label), epsilon, sensitivity});
}

void PrivacyLedger::Append(const PrivacyLedger& other) {
  charges_.insert(charges_.end(), other.charges_.begin(), other.charges_.end());
}

absl::StatusOr<PrivacyLoss> ComposeSequential(const PrivacyLedger& ledger) {
  if (ledger.empty()) {
    return absl::FailedPreconditionError(
        "ledger is empty: no releases, no privacy loss to compose");
  }
  std::vector<double> epsilons;
  epsilons.reserve(ledger.charges().size());
  for (const LedgerCharge& charge : ledger.charges()) {
    epsilons.push_back(charge.epsilon.epsilon());
  }
  std::sort(epsilons.begin(), epsilons.end());
  // Neumaier summation.
  double sum = 0.0;
  double compensation = 0.0;
  for (double e : epsilons) {
    const double t = sum + e;
    if (std::abs(sum) >= std::abs(e)) {
      compensation += (sum - t) + e;
    } else {
      compensation += (e - t) + sum;
    }
    sum = t;
  }
  return PrivacyLoss::Create(sum + compensation);
}

}  // namespace survey_dp
