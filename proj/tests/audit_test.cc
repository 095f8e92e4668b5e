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

#include "survey_dp/audit.h"

#include <algorithm>
#include <cmath>
#include <set>
#include <string>
#include <vector>

#include "gtest/gtest.h"
#include "survey_dp/amplification.h"
#include "survey_dp/audit_instances.h"
#include "test_util.h"

namespace survey_dp {
namespace {

constexpr NeighborRelation kNoneY{Invariant::kNone, MutableFields::kYOnly};
constexpr NeighborRelation kNoneFull{Invariant::kNone,
                                     MutableFields::kFullRecord};
constexpr NeighborRelation kFrameY{Invariant::kFrame, MutableFields::kYOnly};
constexpr NeighborRelation kFrameFull{Invariant::kFrame,
                                      MutableFields::kFullRecord};

TEST(DatasetSpaceTest, CountsForBinaryGrid) {
  const AuditInstance instance = UniformInstance(3);
  ASSERT_OK_AND_ASSIGN(DatasetSpace space,
                       DatasetSpace::Create(instance, kNoneY));
  EXPECT_EQ(space.size(), 8u);
  EXPECT_EQ(space.NeighborsPerDataset(), 3u);
  EXPECT_EQ(space.PairCount(), 24.0);
}

TEST(DatasetSpaceTest, FullRecordAddsSizeOptionsUnlessFrameFixed) {
  const AuditInstance instance = PpsReferenceInstance();
  ASSERT_OK_AND_ASSIGN(DatasetSpace full,
                       DatasetSpace::Create(instance, kNoneFull));
  EXPECT_EQ(full.size(), 64u);
  EXPECT_EQ(full.NeighborsPerDataset(), 9u);
  ASSERT_OK_AND_ASSIGN(DatasetSpace frame,
                       DatasetSpace::Create(instance, kFrameFull));
  EXPECT_EQ(frame.size(), 8u);
  EXPECT_EQ(frame.NeighborsPerDataset(), 3u);
}

TEST(DatasetSpaceTest, FixedRecordsNeverMove) {
  const AuditInstance instance = HotDeckInstance(2);
  ASSERT_OK_AND_ASSIGN(DatasetSpace space,
                       DatasetSpace::Create(instance, kNoneY));
  EXPECT_EQ(space.size(), 4u);
  EXPECT_EQ(space.NeighborsPerDataset(), 2u);
  for (size_t b = 0; b < space.size(); ++b) {
    EXPECT_TRUE(std::isnan(space.At(b).y[2]));
    EXPECT_TRUE(std::isnan(space.At(b).y[3]));
  }
}

// Every neighbour differs from its base in exactly one record, the move is
// reversible and IndexOf inverts At.
TEST(DatasetSpacePropertyTest, NeighboursDifferInOneRecord) {
  for (const AuditInstance& instance : BundledInstances()) {
    for (const NeighborRelation& relation :
         {kNoneY, kNoneFull, kFrameY, kFrameFull}) {
      ASSERT_OK_AND_ASSIGN(DatasetSpace space,
                           DatasetSpace::Create(instance, relation));
      for (size_t b = 0; b < space.size(); ++b) {
        const AuditDataset base = space.At(b);
        ASSERT_OK_AND_ASSIGN(size_t index, space.IndexOf(base));
        EXPECT_EQ(index, b);
        std::set<size_t> seen;
        for (size_t j = 0; j < space.NeighborsPerDataset(); ++j) {
          const size_t nb = space.Neighbor(b, j);
          EXPECT_NE(nb, b);
          EXPECT_TRUE(seen.insert(nb).second);
          const AuditDataset other = space.At(nb);
          size_t differing = 0;
          for (size_t r = 0; r < base.y.size(); ++r) {
            if (base.y[r] != other.y[r] || base.x[r] != other.x[r]) {
              ++differing;
              EXPECT_EQ(r, space.ChangedRecord(j));
            }
            if (!relation.XMutable()) {
              EXPECT_EQ(base.x[r], other.x[r]);
            }
          }
          EXPECT_EQ(differing, 1u);
        }
      }
    }
  }
}

TEST(ForEachNeighborPairTest, RespectsCap) {
  AuditInstance instance = UniformInstance(4);
  instance.cap = 10;
  absl::Status status = ForEachNeighborPair(
      instance, kNoneY, [](const AuditDataset&, const AuditDataset&) {});
  EXPECT_EQ(status.code(), absl::StatusCode::kResourceExhausted);
}

TEST(ExactSensitivityTest, Examples) {
  const AuditInstance instance = UniformInstance(4);
  ASSERT_OK_AND_ASSIGN(Sensitivity mean,
                       ExactSensitivity(instance, kNoneY, MeanOfY()));
  EXPECT_DOUBLE_EQ(mean.value(), 0.25);
  ASSERT_OK_AND_ASSIGN(
      SensitivityReport report,
      ExactSensitivityReport(instance, kNoneY, ProportionAtTop(1.0)));
  EXPECT_DOUBLE_EQ(report.sensitivity, 0.25);
  ASSERT_TRUE(report.witness.has_value());
  EXPECT_EQ(report.witness->changed_record, 0u);
}

// Criterion-style agreement between the oracle and the closed forms.
TEST(ExactSensitivityPropertyTest, OracleMatchesAnalyticOnBundledInstances) {
  for (const AuditInstance& instance : BundledInstances()) {
    SCOPED_TRACE(instance.name);
    const int64_t n = static_cast<int64_t>(instance.frame.size());
    const double range = instance.universe.Range();
    std::vector<double> weights(instance.frame.size());
    for (size_t i = 0; i < weights.size(); ++i) weights[i] = 1.0 + 0.5 * i;
    const double max_w = *std::max_element(weights.begin(), weights.end());
    for (const NeighborRelation& relation : {kNoneY, kFrameY, kNoneFull}) {
      ASSERT_OK_AND_ASSIGN(
          Sensitivity proportion,
          ExactSensitivity(instance, relation, ProportionAtTop(1.0)));
      ASSERT_OK_AND_ASSIGN(Sensitivity mean,
                           ExactSensitivity(instance, relation, MeanOfY()));
      ASSERT_OK_AND_ASSIGN(Sensitivity ht,
                           ExactSensitivity(instance, relation,
                                            FixedWeightHtMean(weights, 2 * n)));
      EXPECT_NEAR(proportion.value(),
                  AnalyticSensitivity(ProportionStatistic{n})->value(), 1e-12);
      EXPECT_NEAR(mean.value(),
                  AnalyticSensitivity(MeanStatistic{range, n})->value(), 1e-12);
      EXPECT_NEAR(
          ht.value(),
          AnalyticSensitivity(HtMeanFixedWeightsStatistic{max_w, range, 2 * n})
              ->value(),
          1e-12);
    }
  }
}

// Frame invariance restricts the neighbour set, so it can never raise the
// sensitivity.
TEST(InvariantPropertyTest, FrameInvariantNeverExceedsNoInvariant) {
  for (const AuditInstance& instance : BundledInstances()) {
    ASSERT_OK_AND_ASSIGN(Sensitivity frame_mean,
                         ExactSensitivity(instance, kFrameY, MeanOfY()));
    ASSERT_OK_AND_ASSIGN(Sensitivity none_mean,
                         ExactSensitivity(instance, kNoneFull, MeanOfY()));
    EXPECT_LE(frame_mean.value(), none_mean.value()) << instance.name;
    for (const LabelledDesign& d : BundledDesigns(instance)) {
      SCOPED_TRACE(instance.name + " " + d.label);
      absl::StatusOr<SensitivityReport> frame = SampleCoupledHtMeanSensitivity(
          instance, kFrameY, d.design, DesignWeightFn(d.design));
      absl::StatusOr<SensitivityReport> none = SampleCoupledHtMeanSensitivity(
          instance, kNoneFull, d.design, DesignWeightFn(d.design));
      if (!frame.ok() || !none.ok()) {
        // Some full-record datasets make the design infeasible (PPS
        // certainty); those cells are outside the comparison.
        continue;
      }
      EXPECT_LE(frame->sensitivity, none->sensitivity);
    }
  }
}

TEST(SampleCoupledTest, PpsFullRecordExceedsFrameInvariant) {
  const AuditInstance instance = PpsReferenceInstance();
  const SamplingDesign design = Pps{1};
  ASSERT_OK_AND_ASSIGN(SensitivityReport frame,
                       SampleCoupledHtMeanSensitivity(instance, kFrameY, design,
                                                      DesignWeightFn(design)));
  ASSERT_OK_AND_ASSIGN(SensitivityReport full, SampleCoupledHtMeanSensitivity(
                                                   instance, kNoneFull, design,
                                                   DesignWeightFn(design)));
  // Frame-invariant weights are 1/pi on the fixed frame: max weight 4 over
  // N = 3 with R = 1.
  EXPECT_NEAR(frame.sensitivity, 4.0 / 3.0, 1e-12);
  EXPECT_GT(full.sensitivity, frame.sensitivity);
  // The excess comes from datasets whose size measures differ from the
  // observed frame.
  ASSERT_TRUE(full.witness.has_value());
  const AuditDataset observed = BaseDataset(instance);
  EXPECT_TRUE(full.witness->base.x != observed.x ||
              full.witness->neighbor.x != observed.x);
}

TEST(SampleCoupledTest, EqualWeightsMatchFixedWeightBound) {
  const AuditInstance instance = UniformInstance(4);
  const SamplingDesign design = Srswor{2};
  ASSERT_OK_AND_ASSIGN(SensitivityReport report,
                       SampleCoupledHtMeanSensitivity(instance, kNoneY, design,
                                                      DesignWeightFn(design)));
  EXPECT_NEAR(report.sensitivity, 2.0 / 4.0, 1e-12);
}

// The Neyman allocation reads y, so a y-only change can move the allocation
// itself.
TEST(NeymanAuditTest, AllocationHasPositiveSensitivity) {
  const AuditInstance instance = NeymanReferenceInstance();
  const AuditStatistic allocation =
      [&](const AuditDataset& d) -> absl::StatusOr<std::vector<double>> {
    absl::StatusOr<std::vector<StratumAllocation>> alloc =
        AllocateStrata(Allocation::kNeyman, FrameFor(instance, d), 3);
    if (!alloc.ok()) return alloc.status();
    std::vector<double> sizes;
    for (const StratumAllocation& a : *alloc) {
      sizes.push_back(static_cast<double>(a.size));
    }
    return sizes;
  };
  ASSERT_OK_AND_ASSIGN(Sensitivity s,
                       ExactSensitivity(instance, kFrameY, allocation));
  EXPECT_GT(s.value(), 0.0);

  const SamplingDesign neyman = StratifiedSrswor{3, Allocation::kNeyman};
  const SamplingDesign proportional =
      StratifiedSrswor{3, Allocation::kProportional};
  ASSERT_OK_AND_ASSIGN(SensitivityReport neyman_ht,
                       SampleCoupledHtMeanSensitivity(instance, kFrameY, neyman,
                                                      DesignWeightFn(neyman)));
  ASSERT_OK_AND_ASSIGN(
      SensitivityReport proportional_ht,
      SampleCoupledHtMeanSensitivity(instance, kFrameY, proportional,
                                     DesignWeightFn(proportional)));
  EXPECT_GE(neyman_ht.sensitivity, proportional_ht.sensitivity);
}

// Mean after hot deck: the changed donor can be copied into every missing
// record.
TEST(HotDeckAuditTest, SensitivityGrowsLinearlyInMissing) {
  for (size_t k = 0; k <= 3; ++k) {
    const AuditInstance instance = HotDeckInstance(k);
    ASSERT_OK_AND_ASSIGN(SensitivityReport report,
                         HotDeckMeanSensitivity(instance, kNoneY));
    EXPECT_NEAR(
        report.sensitivity,
        (1.0 + static_cast<double>(k)) / 4.0 * instance.universe.Range(), 1e-12)
        << "k=" << k;
  }
}

TEST(EventPrivacyLossTest, Conventions) {
  const std::vector<double> p = {0.0, 0.5, 0.5};
  const std::vector<double> q = {0.0, 0.25, 0.75};
  const std::vector<double> r = {0.5, 0.5, 0.0};
  EXPECT_EQ(EventPrivacyLoss(p, q, 0), 0.0);
  EXPECT_DOUBLE_EQ(EventPrivacyLoss(p, q, 1), std::log(2.0));
  EXPECT_DOUBLE_EQ(EventPrivacyLoss(q, p, 1), std::log(2.0));
  EXPECT_TRUE(std::isinf(EventPrivacyLoss(p, r, 0)));
  EXPECT_TRUE(std::isinf(EventPrivacyLoss(p, r, 2)));
}

OutputDistribution SampledGeometric(const AuditInstance& instance,
                                    const SamplingDesign& design, double eps) {
  std::shared_ptr<const DiscreteMechanism> base =
      *MakeSumMechanism(BaseMechanismKind::kGeometric, eps, instance);
  return SampledSumMechanism(instance, base,
                             {.design = design, .known_member = std::nullopt});
}

TEST(EffectiveEpsilonTest, WitnessReevaluatesToReportedLoss) {
  for (const AuditInstance& instance :
       {UniformInstance(3), TwoClusterInstance(), PpsReferenceInstance()}) {
    for (const SamplingDesign& design :
         std::vector<SamplingDesign>{Srswor{1}, PoissonSampling{0.5}}) {
      const OutputDistribution mechanism =
          SampledGeometric(instance, design, 0.5);
      ASSERT_OK_AND_ASSIGN(EffectiveEpsilonReport report,
                           EffectiveEpsilon(instance, kNoneY, 0.5, mechanism));
      ASSERT_TRUE(report.worst.has_value());
      ASSERT_OK_AND_ASSIGN(double loss,
                           EvaluateWitness(mechanism, *report.worst));
      EXPECT_NEAR(loss, report.eps_effective, 1e-12) << instance.name;
      EXPECT_FALSE(report.infinite);
      EXPECT_EQ(report.eps_nominal, 0.5);
    }
  }
}

TEST(EffectiveEpsilonTest, ThreadCountDoesNotChangeResult) {
  const AuditInstance instance = PeriodicInstance();
  const OutputDistribution mechanism =
      SampledGeometric(instance, Srswor{2}, 0.3);
  ASSERT_OK_AND_ASSIGN(
      EffectiveEpsilonReport single,
      EffectiveEpsilon(instance, kNoneFull, 0.3, mechanism,
                       {.threads = 1, .target_record = std::nullopt}));
  for (size_t threads : {2u, 3u, 8u}) {
    ASSERT_OK_AND_ASSIGN(
        EffectiveEpsilonReport multi,
        EffectiveEpsilon(instance, kNoneFull, 0.3, mechanism,
                         {.threads = threads, .target_record = std::nullopt}));
    EXPECT_EQ(multi.eps_effective, single.eps_effective);
    ASSERT_TRUE(multi.worst.has_value());
    EXPECT_EQ(multi.worst->base, single.worst->base);
    EXPECT_EQ(multi.worst->neighbor, single.worst->neighbor);
    EXPECT_EQ(multi.worst->outcome, single.worst->outcome);
  }
}

TEST(EffectiveEpsilonTest, RejectsInvalidDistributions) {
  const AuditInstance instance = UniformInstance(2);
  const OutputDistribution bad =
      [](const AuditDataset&) -> absl::StatusOr<std::vector<double>> {
    return std::vector<double>{0.5, 0.4};
  };
  EXPECT_FALSE(EffectiveEpsilon(instance, kNoneY, 1.0, bad).ok());
}

TEST(EffectiveEpsilonTest, DisjointSupportIsInfinite) {
  const AuditInstance instance = UniformInstance(2);
  const OutputDistribution exact =
      [](const AuditDataset& d) -> absl::StatusOr<std::vector<double>> {
    std::vector<double> out(3, 0.0);
    out[static_cast<size_t>(d.y[0] + d.y[1])] = 1.0;
    return out;
  };
  ASSERT_OK_AND_ASSIGN(EffectiveEpsilonReport report,
                       EffectiveEpsilon(instance, kNoneY, 1.0, exact));
  EXPECT_TRUE(report.infinite);
  EXPECT_TRUE(std::isinf(report.eps_effective));
}

TEST(RelationNamesTest, RoundTrip) {
  for (Invariant inv :
       {Invariant::kNone, Invariant::kPopulation, Invariant::kFrame}) {
    ASSERT_OK_AND_ASSIGN(Invariant parsed, ParseInvariant(InvariantName(inv)));
    EXPECT_EQ(parsed, inv);
  }
  for (MutableFields f : {MutableFields::kYOnly, MutableFields::kFullRecord}) {
    ASSERT_OK_AND_ASSIGN(MutableFields parsed,
                         ParseMutableFields(MutableFieldsName(f)));
    EXPECT_EQ(parsed, f);
  }
  EXPECT_FALSE(ParseInvariant("sample").ok());
  EXPECT_FALSE(ParseMutableFields("x").ok());
}

}  // namespace
}  // namespace survey_dp
