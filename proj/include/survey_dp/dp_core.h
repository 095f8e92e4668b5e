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

#ifndef SURVEY_DP_DP_CORE_H_
#define SURVEY_DP_DP_CORE_H_

#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "absl/status/statusor.h"
#include "absl/types/span.h"
#include "survey_dp/random.h"

namespace survey_dp {

// Privacy-loss parameter epsilon of a pure epsilon-DP mechanism. Always
// positive and finite.
class PrivacyLoss {
 public:
  static absl::StatusOr<PrivacyLoss> Create(double epsilon);

  double epsilon() const { return epsilon_; }

 private:
  explicit PrivacyLoss(double epsilon) : epsilon_(epsilon) {}
  double epsilon_;
};

// L1 sensitivity of a statistic, in the statistic's units. Zero is allowed:
// a zero-sensitivity statistic is released exactly.
class Sensitivity {
 public:
  static absl::StatusOr<Sensitivity> Create(double delta_f);
  static Sensitivity Zero() { return Sensitivity(0.0); }

  double value() const { return delta_f_; }

 private:
  explicit Sensitivity(double delta_f) : delta_f_(delta_f) {}
  double delta_f_;
};

// Scale b of a zero-centred Laplace distribution.
class LaplaceNoise {
 public:
  // For callers that already hold a scale, e.g. a residual spread.
  static absl::StatusOr<LaplaceNoise> WithScale(double scale);

  double scale() const { return scale_; }

  // Inverse-CDF draw from one uniform variate.
  double Sample(Rng& rng) const;

 private:
  friend LaplaceNoise LaplaceScale(Sensitivity, PrivacyLoss);
  explicit LaplaceNoise(double scale) : scale_(scale) {}
  double scale_;
};

// b = delta_f / epsilon.
LaplaceNoise LaplaceScale(Sensitivity delta_f, PrivacyLoss epsilon);
absl::StatusOr<LaplaceNoise> LaplaceScale(double delta_f, double epsilon);

// value + Laplace(0, delta_f / epsilon).
double ReleaseLaplace(double value, Sensitivity delta_f, PrivacyLoss epsilon,
                      Rng& rng);
absl::StatusOr<double> ReleaseLaplace(double value, double delta_f,
                                      double epsilon, Rng& rng);

// Closed-form sensitivities of the canonical statistics under bounded
// (replace-one) neighbours.
struct ProportionStatistic {
  int64_t n;
};
struct MeanStatistic {
  double range;
  int64_t n;
};
struct HtMeanFixedWeightsStatistic {
  double max_weight;
  double range;
  int64_t population_size;
};
using CanonicalStatistic = std::variant<ProportionStatistic, MeanStatistic,
                                        HtMeanFixedWeightsStatistic>;

absl::StatusOr<Sensitivity> AnalyticSensitivity(
    const CanonicalStatistic& statistic);

struct LedgerCharge {
  std::string label;
  PrivacyLoss epsilon;
  // Sensitivity the charge was calibrated to, when it is a single release.
  std::optional<Sensitivity> sensitivity;
};

// Append-only record of the epsilon charges made during one run.
class PrivacyLedger {
 public:
  void Charge(std::string label, PrivacyLoss epsilon,
              std::optional<Sensitivity> sensitivity = std::nullopt);

  // Appends every charge of `other`, in order.
  void Append(const PrivacyLedger& other);

  absl::Span<const LedgerCharge> charges() const { return charges_; }
  bool empty() const { return charges_.empty(); }

 private:
  std::vector<LedgerCharge> charges_;
};

// Sequential composition: the sum of all charged epsilons. The sum is
// taken in ascending order so the result does not depend on charge order.
absl::StatusOr<PrivacyLoss> ComposeSequential(const PrivacyLedger& ledger);

}  // namespace survey_dp

#endif  // SURVEY_DP_DP_CORE_H_
