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
#include <random>
#include <string>
#include <vector>

#include "gtest/gtest.h"
#include "survey_dp/audit.h"
#include "survey_dp/audit_instances.h"
#include "test_util.h"

namespace survey_dp {
namespace {

constexpr NeighborRelation kFrameInvariant{Invariant::kFrame,
                                           MutableFields::kYOnly};
constexpr NeighborRelation kNoInvariantFull{Invariant::kNone,
                                            MutableFields::kFullRecord};

PrivacyLoss Eps(double e) { return *PrivacyLoss::Create(e); }

TEST(HtMeanTest, Examples) {
  ASSERT_OK_AND_ASSIGN(HtEstimate mean, HtMean({2.0, 2.0}, {1.0, 0.0}, 4));
  EXPECT_DOUBLE_EQ(mean.value, 0.5);
  EXPECT_EQ(mean.population_size, 4);
  ASSERT_OK_AND_ASSIGN(HtEstimate total, HtTotal({2.0, 3.0}, {1.0, 2.0}));
  EXPECT_DOUBLE_EQ(total.value, 8.0);
  ASSERT_OK_AND_ASSIGN(HtEstimate plain, UnweightedMean({1.0, 2.0, 6.0}));
  EXPECT_DOUBLE_EQ(plain.value, 3.0);
}

TEST(HtMeanTest, Errors) {
  EXPECT_EQ(HtMean({}, {}, 4).status().code(),
            absl::StatusCode::kFailedPrecondition);
  EXPECT_EQ(HtMean({1.0}, {1.0, 2.0}, 4).status().code(),
            absl::StatusCode::kInvalidArgument);
  EXPECT_FALSE(HtMean({0.0}, {1.0}, 4).ok());
  EXPECT_FALSE(HtMean({1.0}, {1.0}, 0).ok());
  EXPECT_FALSE(UnweightedMean({}).ok());
}

TEST(EstimatorNameTest, RoundTrips) {
  for (EstimatorKind kind : {EstimatorKind::kHtMean, EstimatorKind::kHtTotal,
                             EstimatorKind::kUnweightedMean}) {
    ASSERT_OK_AND_ASSIGN(EstimatorKind parsed,
                         ParseEstimator(EstimatorName(kind)));
    EXPECT_EQ(parsed, kind);
  }
  EXPECT_FALSE(ParseEstimator("median").ok());
}

// Sum over the sample space of p(s) * ht_mean(s) must equal the frame mean.
TEST(HtMeanPropertyTest, DesignUnbiasedOnBundledDesigns) {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> value(-3.0, 5.0);
  for (const AuditInstance& instance : BundledInstances()) {
    std::vector<double> y(instance.frame.size());
    std::vector<double> x(instance.frame.size());
    double frame_mean = 0.0;
    for (size_t i = 0; i < y.size(); ++i) {
      y[i] = value(rng);
      x[i] = instance.frame[i].x;
      frame_mean += y[i];
    }
    frame_mean /= static_cast<double>(y.size());
    const Frame frame = instance.frame.WithValues(y, x);
    const int64_t n_pop = static_cast<int64_t>(frame.size());
    for (const LabelledDesign& d : BundledDesigns(instance)) {
      if (!FixedSampleSize(d.design, frame).has_value()) continue;
      SCOPED_TRACE(instance.name + " " + d.label);
      ASSERT_OK_AND_ASSIGN(auto space, SampleSpace(d.design, frame));
      ASSERT_OK_AND_ASSIGN(auto pi, InclusionProbs(d.design, frame));
      double expectation = 0.0;
      for (const SampleOutcome& o : space) {
        std::vector<double> w;
        std::vector<double> ys;
        for (size_t k = 0; k < o.units.size(); ++k) {
          if (k > 0 && o.units[k] == o.units[k - 1]) continue;
          w.push_back(1.0 / pi[o.units[k]]);
          ys.push_back(y[o.units[k]]);
        }
        ASSERT_OK_AND_ASSIGN(HtEstimate est, HtMean(w, ys, n_pop));
        expectation += o.probability * est.value;
      }
      EXPECT_NEAR(expectation, frame_mean, 1e-10);
    }
  }
}

TEST(DpHtMeanTest, LargeEpsilonApproachesEstimate) {
  const ValueUniverse universe = *ValueUniverse::Create(0.0, 1.0, {1.0});
  Rng rng(5);
  PrivacyLedger ledger;
  DpHtOptions options;
  options.max_weight = 2.0;
  ASSERT_OK_AND_ASSIGN(
      DpRelease release,
      DpHtMean({2.0, 2.0}, {1.0, 0.0}, 4, universe, kFrameInvariant, Eps(1e6),
               rng, ledger, options));
  EXPECT_NEAR(release.value, 0.5, 1e-4);
  EXPECT_DOUBLE_EQ(release.sensitivity, 0.5);
  EXPECT_DOUBLE_EQ(release.noise_scale, 0.5e-6);
  EXPECT_EQ(release.source, SensitivitySource::kFixedWeights);
  ASSERT_EQ(ledger.charges().size(), 1u);
  EXPECT_EQ(ledger.charges()[0].epsilon.epsilon(), 1e6);
}

TEST(DpHtMeanTest, TotalSensitivityIsMaxWeightTimesRange) {
  const ValueUniverse universe = *ValueUniverse::Create(-1.0, 3.0, {1.0});
  Rng rng(5);
  PrivacyLedger ledger;
  DpHtOptions options;
  options.label = "total";
  options.max_weight = 5.0;
  ASSERT_OK_AND_ASSIGN(
      DpRelease release,
      DpHtTotal({2.0, 5.0}, {1.0, 0.0}, universe, kFrameInvariant, Eps(0.5),
                rng, ledger, options));
  EXPECT_DOUBLE_EQ(release.sensitivity, 20.0);
  EXPECT_DOUBLE_EQ(release.noise_scale, 40.0);
  EXPECT_EQ(ledger.charges()[0].label, "total");
}

TEST(DpHtMeanTest, RefusesDataDependentWeightsWithoutAudit) {
  const ValueUniverse universe = *ValueUniverse::Create(0.0, 1.0, {1.0, 2.0});
  Rng rng(5);
  PrivacyLedger ledger;
  DpHtOptions options;
  options.max_weight = 4.0;
  absl::StatusOr<DpRelease> release =
      DpHtMean({2.0, 4.0}, {1.0, 0.0}, 4, universe, kNoInvariantFull, Eps(1.0),
               rng, ledger, options);
  ASSERT_FALSE(release.ok());
  EXPECT_EQ(release.status().code(), absl::StatusCode::kFailedPrecondition);
  EXPECT_NE(release.status().message().find("audited sensitivity"),
            std::string::npos);
  EXPECT_TRUE(ledger.empty());

  options.weights_data_independent = true;
  ASSERT_OK_AND_ASSIGN(
      DpRelease fixed,
      DpHtMean({2.0, 4.0}, {1.0, 0.0}, 4, universe, kNoInvariantFull, Eps(1.0),
               rng, ledger, options));
  EXPECT_EQ(fixed.source, SensitivitySource::kFixedWeights);
}

TEST(DpHtMeanTest, UsesAuditedSensitivityOnPpsReference) {
  const AuditInstance instance = PpsReferenceInstance();
  const SamplingDesign design = Pps{1};
  ASSERT_OK_AND_ASSIGN(
      SensitivityReport audited,
      SampleCoupledHtMeanSensitivity(instance, kNoInvariantFull, design,
                                     DesignWeightFn(design)));
  ASSERT_GT(audited.sensitivity, 0.0);

  const ValueUniverse universe = *ValueUniverse::Create(0.0, 1.0, {1.0, 2.0});
  Rng rng(9);
  PrivacyLedger ledger;
  DpHtOptions options;
  options.audited = *Sensitivity::Create(audited.sensitivity);
  ASSERT_OK_AND_ASSIGN(DpRelease release,
                       DpHtMean({4.0}, {1.0}, 3, universe, kNoInvariantFull,
                                Eps(1.0), rng, ledger, options));
  EXPECT_EQ(release.source, SensitivitySource::kAudited);
  EXPECT_EQ(release.sensitivity, audited.sensitivity);
  ASSERT_TRUE(ledger.charges()[0].sensitivity.has_value());
  EXPECT_EQ(ledger.charges()[0].sensitivity->value(), audited.sensitivity);
}

TEST(DpHtMeanTest, MaxWeightMustDominateSample) {
  const ValueUniverse universe = *ValueUniverse::Create(0.0, 1.0, {1.0});
  Rng rng(1);
  PrivacyLedger ledger;
  DpHtOptions options;
  options.max_weight = 1.5;
  EXPECT_EQ(DpHtMean({2.0}, {1.0}, 2, universe, kFrameInvariant, Eps(1.0), rng,
                     ledger, options)
                .status()
                .code(),
            absl::StatusCode::kInvalidArgument);
}

// With weights summing to N, max(w) >= N / n, so the fixed-weight bound is
// never below the unweighted mean's R / n.
TEST(DpHtMeanPropertyTest, FixedWeightBoundDominatesMeanBound) {
  std::mt19937_64 rng(23);
  std::uniform_real_distribution<double> raw(0.1, 4.0);
  for (int trial = 0; trial < 500; ++trial) {
    const int64_t n = 1 + trial % 9;
    const int64_t population = n + static_cast<int64_t>(rng() % 50);
    std::vector<double> w(n);
    double sum = 0.0;
    for (double& v : w) sum += (v = raw(rng));
    for (double& v : w) v *= static_cast<double>(population) / sum;
    const double range = 0.5 + static_cast<double>(trial % 4);
    const double max_w = *std::max_element(w.begin(), w.end());
    ASSERT_OK_AND_ASSIGN(Sensitivity fixed,
                         AnalyticSensitivity(HtMeanFixedWeightsStatistic{
                             max_w, range, population}));
    ASSERT_OK_AND_ASSIGN(Sensitivity mean,
                         AnalyticSensitivity(MeanStatistic{range, n}));
    EXPECT_GE(fixed.value() * (1.0 + 1e-12), mean.value());
  }
}

TEST(DpUnweightedMeanTest, RangeOverN) {
  const ValueUniverse universe = *ValueUniverse::Create(0.0, 10.0, {1.0});
  Rng rng(2);
  PrivacyLedger ledger;
  ASSERT_OK_AND_ASSIGN(DpRelease release,
                       DpUnweightedMean({1.0, 2.0, 3.0, 4.0}, universe,
                                        Eps(2.0), rng, ledger, "plain"));
  EXPECT_DOUBLE_EQ(release.sensitivity, 2.5);
  EXPECT_DOUBLE_EQ(release.noise_scale, 1.25);
  EXPECT_EQ(release.source, SensitivitySource::kUnweighted);
  EXPECT_EQ(ledger.charges()[0].label, "plain");
}

TEST(SampleYTest, RejectsMissingY) {
  FrameRecord a;
  a.id = 1;
  a.y = 1.0;
  FrameRecord b;
  b.id = 2;
  const Frame frame = *Frame::Create({a, b});
  WeightedSample sample;
  sample.units.push_back({2, 1, 0.5, 2.0, 1});
  absl::StatusOr<std::vector<double>> y = SampleY(sample, frame);
  ASSERT_FALSE(y.ok());
  EXPECT_NE(y.status().message().find("unit 2"), std::string::npos);
}

}  // namespace
}  // namespace survey_dp
