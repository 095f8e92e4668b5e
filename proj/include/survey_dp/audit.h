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

#ifndef SURVEY_DP_AUDIT_H_
#define SURVEY_DP_AUDIT_H_

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "absl/functional/function_ref.h"
#include "absl/status/statusor.h"
#include "absl/types/span.h"
#include "survey_dp/designs.h"
#include "survey_dp/dp_core.h"
#include "survey_dp/frame.h"
#include "survey_dp/neighbor_relation.h"

namespace survey_dp {

// Finite per-record value grids the oracle enumerates.
struct AuditUniverse {
  std::vector<double> y_grid = {0.0, 1.0};
  std::vector<double> x_grid = {1.0};

  double Range() const;
};

// A desk-scale instance: the frame supplies labels, order and the values of
// records that are never mutated.
struct AuditInstance {
  std::string name;
  Frame frame;
  AuditUniverse universe;
  // Positions whose values are held fixed in every dataset (for example
  // records with a missing item).
  std::vector<size_t> fixed_records;
  size_t cap = DefaultEnumerationCap();
};

struct AuditDataset {
  std::vector<double> y;
  std::vector<double> x;

  bool operator==(const AuditDataset&) const = default;
};

// All datasets reachable under a relation, indexed in mixed radix (record 0
// is the least significant digit).
class DatasetSpace {
 public:
  static absl::StatusOr<DatasetSpace> Create(const AuditInstance& instance,
                                             const NeighborRelation& relation);

  size_t size() const { return size_; }
  AuditDataset At(size_t index) const;
  absl::StatusOr<size_t> IndexOf(const AuditDataset& dataset) const;

  // Neighbours per dataset: mutable records times (options - 1).
  size_t NeighborsPerDataset() const { return neighbors_per_dataset_; }
  size_t Neighbor(size_t base, size_t j) const;
  // Record changed by the j-th neighbour move.
  size_t ChangedRecord(size_t j) const { return move_record_[j]; }
  // Total ordered neighbour pairs.
  double PairCount() const;

 private:
  DatasetSpace() = default;

  std::vector<double> base_y_;
  std::vector<double> base_x_;
  std::vector<double> y_grid_;
  std::vector<double> x_grid_;
  std::vector<size_t> options_;
  std::vector<size_t> stride_;
  std::vector<bool> x_mutable_;
  std::vector<size_t> move_record_;
  std::vector<size_t> move_option_;
  size_t size_ = 0;
  size_t neighbors_per_dataset_ = 0;
};

// Calls `visit` for every ordered neighbour pair. Fails if the pair count
// exceeds the instance cap.
absl::Status ForEachNeighborPair(
    const AuditInstance& instance, const NeighborRelation& relation,
    absl::FunctionRef<void(const AuditDataset&, const AuditDataset&)> visit);

// Neighbours of one dataset.
absl::StatusOr<std::vector<AuditDataset>> NeighborsOf(
    const AuditInstance& instance, const NeighborRelation& relation,
    const AuditDataset& base);

// Dataset built from the instance frame's own values.
AuditDataset BaseDataset(const AuditInstance& instance);
Frame FrameFor(const AuditInstance& instance, const AuditDataset& dataset);

struct NeighborWitness {
  AuditDataset base;
  AuditDataset neighbor;
  size_t changed_record = 0;
  // Coupled outcome (sensitivity) or output event (effective epsilon).
  size_t outcome = 0;
};

struct SensitivityReport {
  double sensitivity = 0.0;
  std::optional<NeighborWitness> witness;
};

// Vector statistics use the L1 distance.
using AuditStatistic =
    std::function<absl::StatusOr<std::vector<double>>(const AuditDataset&)>;
// Statistic with internal randomness held fixed across the pair.
using CoupledStatistic = std::function<absl::StatusOr<std::vector<double>>(
    const AuditDataset&, size_t outcome)>;

// max over neighbour pairs of |f(D) - f(D')|.
absl::StatusOr<SensitivityReport> ExactSensitivityReport(
    const AuditInstance& instance, const NeighborRelation& relation,
    const AuditStatistic& statistic);
absl::StatusOr<Sensitivity> ExactSensitivity(const AuditInstance& instance,
                                             const NeighborRelation& relation,
                                             const AuditStatistic& statistic);

// max over pairs and coupled outcomes of |f(D, o) - f(D', o)|.
absl::StatusOr<SensitivityReport> ExactCoupledSensitivity(
    const AuditInstance& instance, const NeighborRelation& relation,
    size_t outcomes, const CoupledStatistic& statistic);

// Canonical statistics over all records.
AuditStatistic MeanOfY();
// Share of records with y at the top of the grid.
AuditStatistic ProportionAtTop(double top);
AuditStatistic FixedWeightHtMean(std::vector<double> weights,
                                 int64_t population_size);

// Final weights of the sampled units given the frame the design ran on.
using SampleWeightFn = std::function<absl::StatusOr<std::vector<double>>(
    const Frame& frame, absl::Span<const size_t> sample)>;
// 1 / pi_i under `design` evaluated on that frame.
SampleWeightFn DesignWeightFn(SamplingDesign design);

// Sensitivity of the HT mean with the realised sample held fixed across the
// pair. Samples range over every sample any enumerated dataset can produce;
// an empty sample estimates 0.
absl::StatusOr<SensitivityReport> SampleCoupledHtMeanSensitivity(
    const AuditInstance& instance, const NeighborRelation& relation,
    const SamplingDesign& design, const SampleWeightFn& weights);

// Hot-deck imputation of the records in `instance.fixed_records` (treated as
// missing y) followed by the mean over all records, coupled over every donor
// assignment.
absl::StatusOr<SensitivityReport> HotDeckMeanSensitivity(
    const AuditInstance& instance, const NeighborRelation& relation);

struct AuditOptions {
  size_t threads = 1;
  // Only pairs that change this record are compared.
  std::optional<size_t> target_record;
};

// Output distribution of a mechanism with enumerable randomness.
using OutputDistribution =
    std::function<absl::StatusOr<std::vector<double>>(const AuditDataset&)>;

struct EffectiveEpsilonReport {
  double eps_nominal = 0.0;
  double eps_effective = 0.0;
  // Some event has positive probability under one dataset and zero under its
  // neighbour.
  bool infinite = false;
  std::optional<NeighborWitness> worst;
};

// |ln(p[event] / q[event])| with 0/0 read as 0 and p/0 as +infinity.
double EventPrivacyLoss(absl::Span<const double> p, absl::Span<const double> q,
                        size_t event);

// max over neighbour pairs and output events of the event privacy loss. The
// witness is the lexicographically smallest (dataset, move, event) among
// maximisers, whatever the thread count.
absl::StatusOr<EffectiveEpsilonReport> EffectiveEpsilon(
    const AuditInstance& instance, const NeighborRelation& relation,
    double eps_nominal, const OutputDistribution& mechanism,
    const AuditOptions& options = {});

// Recomputes the privacy loss at a reported witness.
absl::StatusOr<double> EvaluateWitness(const OutputDistribution& mechanism,
                                       const NeighborWitness& witness);

}  // namespace survey_dp

#endif  // SURVEY_DP_AUDIT_H_
