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

#ifndef SURVEY_DP_AMPLIFICATION_H_
#define SURVEY_DP_AMPLIFICATION_H_

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "absl/status/statusor.h"
#include "survey_dp/audit.h"
#include "survey_dp/designs.h"
#include "survey_dp/neighbor_relation.h"

namespace survey_dp {

// An epsilon-DP mechanism with finitely many output events, applied to a
// scalar statistic whose neighbouring values differ by at most the declared
// sensitivity.
class DiscreteMechanism {
 public:
  virtual ~DiscreteMechanism() = default;

  virtual std::string Name() const = 0;
  virtual double epsilon() const = 0;
  virtual size_t OutputSize() const = 0;
  virtual absl::StatusOr<std::vector<double>> Distribution(
      double value) const = 0;
};

// Discretised Laplace surrogate: two-sided geometric noise on the grid
// lo, lo + step, ..., hi, extended by `margin` steps on each side, with the
// remaining tail mass lumped into one event per side.
class GeometricMechanism : public DiscreteMechanism {
 public:
  static absl::StatusOr<GeometricMechanism> Create(double epsilon,
                                                   double sensitivity,
                                                   double lo, double hi,
                                                   double step, int margin = 2);

  std::string Name() const override { return "geometric"; }
  double epsilon() const override { return epsilon_; }
  size_t OutputSize() const override { return points_ + 2 * margin_ + 2; }
  absl::StatusOr<std::vector<double>> Distribution(double value) const override;
  double alpha() const { return alpha_; }
  // Grid value of an interior event; -inf and +inf for the two tails.
  double EventValue(size_t event) const;

 private:
  GeometricMechanism() = default;

  double epsilon_ = 0.0;
  double alpha_ = 0.0;
  double lo_ = 0.0;
  double step_ = 1.0;
  size_t points_ = 0;
  size_t margin_ = 0;
};

// Randomized response over a finite domain: the true value with probability
// e^eps / (e^eps + K - 1), each other value with probability
// 1 / (e^eps + K - 1).
class RandomizedResponse : public DiscreteMechanism {
 public:
  static absl::StatusOr<RandomizedResponse> Create(double epsilon,
                                                   std::vector<double> domain);

  std::string Name() const override { return "randomized_response"; }
  double epsilon() const override { return epsilon_; }
  size_t OutputSize() const override { return domain_.size(); }
  absl::StatusOr<std::vector<double>> Distribution(double value) const override;

 private:
  RandomizedResponse() = default;

  double epsilon_ = 0.0;
  std::vector<double> domain_;
};

enum class BaseMechanismKind { kGeometric, kRandomizedResponse };

std::string BaseMechanismName(BaseMechanismKind kind);
absl::StatusOr<BaseMechanismKind> ParseBaseMechanism(const std::string& name);

// Base mechanism for the sample sum of y on `instance`: sensitivity is the
// y-grid range and the output domain covers every reachable sum.
absl::StatusOr<std::shared_ptr<const DiscreteMechanism>> MakeSumMechanism(
    BaseMechanismKind kind, double epsilon, const AuditInstance& instance);

struct SampledMechanismOptions {
  // Without a design the base mechanism sees the whole dataset.
  std::optional<SamplingDesign> design;
  // Models an attacker who knows this record was sampled: the sample space
  // is conditioned on its inclusion.
  std::optional<size_t> known_member;
};

// Output distribution of "draw a sample, release base(sum of y over the
// distinct sampled units)".
// The design is re-evaluated on every dataset, so data-dependent designs
// (PPS with mutable x, Neyman allocation) are audited faithfully.
OutputDistribution SampledSumMechanism(
    const AuditInstance& instance,
    std::shared_ptr<const DiscreteMechanism> base,
    SampledMechanismOptions options = {});

// End-to-end effective epsilon of a sampled mechanism. With a known member
// only pairs changing that record are compared.
absl::StatusOr<EffectiveEpsilonReport> AuditAmplification(
    const AuditInstance& instance, const NeighborRelation& relation,
    BaseMechanismKind kind, double epsilon,
    const SampledMechanismOptions& mechanism, const AuditOptions& options = {});

// DP mean imputation composed with a DP release: the mean of the observed y
// is released by a geometric mechanism with eps1, the missing records
// (`instance.fixed_records`) are filled with the clamped noisy mean, and the
// sum of the completed data is released with eps2. The joint output is the
// pair of events.
absl::StatusOr<OutputDistribution> ComposedImputationMechanism(
    const AuditInstance& instance, double eps1, double eps2);

struct SweepCell {
  std::string label;
  SamplingDesign design;
  AuditInstance instance;
};

struct SweepRow {
  std::string design;
  double epsilon = 0.0;
  double rate_or_maxpi = 0.0;
  double eps_effective = 0.0;
  // "ok", "infinite", or the error message of a failed cell.
  std::string status;
};

// Effective epsilon for every (cell, epsilon). Cell failures are recorded in
// the row status and the sweep continues.
std::vector<SweepRow> AmplificationSweep(const std::vector<SweepCell>& cells,
                                         const std::vector<double>& eps_grid,
                                         BaseMechanismKind kind,
                                         const NeighborRelation& relation,
                                         const AuditOptions& options = {});

// CSV with header `design,epsilon,rate_or_maxpi,eps_effective,status`.
std::string FormatSweepCsv(const std::vector<SweepRow>& rows);

}  // namespace survey_dp

#endif  // SURVEY_DP_AMPLIFICATION_H_
