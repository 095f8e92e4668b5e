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

#include "survey_dp/amplification.h"

#include <cmath>
#include <memory>
#include <string>
#include <vector>

#include "gtest/gtest.h"
#include "survey_dp/audit_instances.h"
#include "test_util.h"

namespace survey_dp {
namespace {

constexpr NeighborRelation kNoneY{Invariant::kNone, MutableFields::kYOnly};

double Effective(const AuditInstance& instance, const SamplingDesign& design,
                 double eps,
                 BaseMechanismKind kind = BaseMechanismKind::kGeometric) {
  absl::StatusOr<EffectiveEpsilonReport> report =
      AuditAmplification(instance, kNoneY, kind, eps,
                         {.design = design, .known_member = std::nullopt});
  EXPECT_TRUE(report.ok()) << report.status();
  return report.ok() ? report->eps_effective : NAN;
}

TEST(GeometricMechanismTest, DistributionIsNormalisedAndEpsilonDp) {
  ASSERT_OK_AND_ASSIGN(GeometricMechanism m,
                       GeometricMechanism::Create(0.7, 1.0, 0.0, 4.0, 1.0));
  EXPECT_EQ(m.OutputSize(), 5u + 4u + 2u);
  EXPECT_DOUBLE_EQ(m.alpha(), std::exp(-0.7));
  std::vector<std::vector<double>> dists;
  for (double v = 0.0; v <= 4.0; v += 1.0) {
    ASSERT_OK_AND_ASSIGN(std::vector<double> p, m.Distribution(v));
    double total = 0.0;
    for (double q : p) total += q;
    EXPECT_NEAR(total, 1.0, 1e-12);
    dists.push_back(p);
  }
  for (size_t a = 0; a + 1 < dists.size(); ++a) {
    for (size_t e = 0; e < dists[a].size(); ++e) {
      EXPECT_LE(std::abs(std::log(dists[a][e] / dists[a + 1][e])), 0.7 + 1e-12);
    }
  }
  EXPECT_TRUE(std::isinf(m.EventValue(0)));
  EXPECT_EQ(m.EventValue(1), -2.0);
  EXPECT_EQ(m.EventValue(m.OutputSize() - 2), 6.0);
  EXPECT_FALSE(m.Distribution(0.5).ok());
  EXPECT_FALSE(GeometricMechanism::Create(0.0, 1.0, 0.0, 1.0, 1.0).ok());
}

TEST(RandomizedResponseTest, LogThreeForBinaryDomain) {
  const double eps = std::log(3.0);
  ASSERT_OK_AND_ASSIGN(RandomizedResponse rr,
                       RandomizedResponse::Create(eps, {0.0, 1.0}));
  ASSERT_OK_AND_ASSIGN(std::vector<double> p, rr.Distribution(1.0));
  EXPECT_NEAR(p[0], 0.25, 1e-15);
  EXPECT_NEAR(p[1], 0.75, 1e-15);

  const AuditInstance single = UniformInstance(1);
  ASSERT_OK_AND_ASSIGN(
      EffectiveEpsilonReport report,
      AuditAmplification(
          single, kNoneY, BaseMechanismKind::kRandomizedResponse, eps,
          {.design = std::nullopt, .known_member = std::nullopt}));
  EXPECT_NEAR(report.eps_effective, std::log(3.0), 1e-12);
}

TEST(BaseMechanismNameTest, RoundTrip) {
  for (BaseMechanismKind kind : {BaseMechanismKind::kGeometric,
                                 BaseMechanismKind::kRandomizedResponse}) {
    ASSERT_OK_AND_ASSIGN(BaseMechanismKind parsed,
                         ParseBaseMechanism(BaseMechanismName(kind)));
    EXPECT_EQ(parsed, kind);
  }
  EXPECT_FALSE(ParseBaseMechanism("gaussian").ok());
}

TEST(AmplificationTest, PoissonAndSrsworNearRateTimesEpsilon) {
  for (double eps : {0.05, 0.1}) {
    for (double r : {0.1, 0.25}) {
      const double poisson =
          Effective(UniformInstance(4), PoissonSampling{r}, eps);
      EXPECT_NEAR(poisson / (r * eps), 1.0, 0.1) << "poisson r=" << r;
      // An SRSWOR rate of 0.1 needs ten units.
      const AuditInstance frame = UniformInstance(r == 0.1 ? 10 : 4);
      const double srswor = Effective(frame, Srswor{1}, eps);
      EXPECT_NEAR(srswor / (r * eps), 1.0, 0.1) << "srswor r=" << r;
    }
  }
}

TEST(AmplificationTest, SimpleDesignsNeverExceedNominal) {
  for (const AuditInstance& instance : BundledInstances()) {
    for (const LabelledDesign& d : BundledDesigns(instance)) {
      if (!std::holds_alternative<Srswr>(d.design) &&
          !std::holds_alternative<Srswor>(d.design) &&
          !std::holds_alternative<PoissonSampling>(d.design)) {
        continue;
      }
      EXPECT_LE(Effective(instance, d.design, 0.5), 0.5 + 1e-9)
          << instance.name << " " << d.label;
    }
    EXPECT_LE(Effective(instance, PoissonSampling{0.4}, 0.5), 0.5 + 1e-9);
  }
}

// Cluster sampling versus Poisson at the same expected rate, and frame-order
// systematic versus SRSWOR of the same size.
TEST(AmplificationTest, ComplexDesignsAmplifyLess) {
  bool strict = false;
  for (const AuditInstance& instance :
       {TwoClusterInstance(), PeriodicInstance()}) {
    const double clusters =
        static_cast<double>(instance.frame.ClusterLabels().size());
    for (double eps : {0.1, 0.5}) {
      const double cluster = Effective(instance, ClusterSrswor{1}, eps);
      const double poisson =
          Effective(instance, PoissonSampling{1.0 / clusters}, eps);
      EXPECT_GE(cluster, poisson) << instance.name;
      const int64_t n = static_cast<int64_t>(instance.frame.size()) / 2;
      const double systematic = Effective(
          instance, Systematic{n, SystematicOrdering::kFrameOrder}, eps);
      const double srswor = Effective(instance, Srswor{n}, eps);
      EXPECT_GE(systematic, srswor) << instance.name;
      strict = strict || cluster > poisson || systematic > srswor;
    }
  }
  EXPECT_TRUE(strict);
}

TEST(AmplificationTest, PpsTracksMaxInclusionProbability) {
  for (double max_pi : {0.2, 0.4, 0.6}) {
    ASSERT_OK_AND_ASSIGN(AuditInstance instance, PpsMaxPiInstance(max_pi));
    ASSERT_OK_AND_ASSIGN(std::vector<double> pi,
                         InclusionProbs(Pps{1}, instance.frame));
    EXPECT_NEAR(*std::max_element(pi.begin(), pi.end()), max_pi, 1e-12);
    const double eps_effective = Effective(instance, Pps{1}, 0.05);
    EXPECT_NEAR(eps_effective / (max_pi * 0.05), 1.0, 0.15)
        << "max pi " << max_pi;
  }
}

TEST(AmplificationTest, KnownMemberGetsNoAmplification) {
  for (const SamplingDesign& design : std::vector<SamplingDesign>{
           Srswor{2}, PoissonSampling{0.25}, Srswor{1}}) {
    ASSERT_OK_AND_ASSIGN(
        EffectiveEpsilonReport report,
        AuditAmplification(UniformInstance(4), kNoneY,
                           BaseMechanismKind::kGeometric, 0.3,
                           {.design = design, .known_member = 0}));
    EXPECT_NEAR(report.eps_effective, 0.3, 1e-9);
    ASSERT_TRUE(report.worst.has_value());
    EXPECT_EQ(report.worst->changed_record, 0u);
  }
}

TEST(SweepTest, MonotoneInRateAndEpsilon) {
  std::vector<SweepCell> cells;
  for (double rate : {0.1, 0.25, 0.5, 0.75, 1.0}) {
    cells.push_back({"poisson", PoissonSampling{rate}, UniformInstance(4)});
  }
  const std::vector<double> eps_grid = {0.05, 0.1, 0.5, 1.0};
  const std::vector<SweepRow> rows = AmplificationSweep(
      cells, eps_grid, BaseMechanismKind::kGeometric, kNoneY);
  ASSERT_EQ(rows.size(), cells.size() * eps_grid.size());
  for (size_t c = 0; c < cells.size(); ++c) {
    for (size_t e = 0; e < eps_grid.size(); ++e) {
      const SweepRow& row = rows[c * eps_grid.size() + e];
      EXPECT_EQ(row.status, "ok");
      EXPECT_EQ(row.epsilon, eps_grid[e]);
      if (e > 0) {
        EXPECT_GE(row.eps_effective,
                  rows[c * eps_grid.size() + e - 1].eps_effective);
      }
      if (c > 0) {
        EXPECT_GE(row.eps_effective,
                  rows[(c - 1) * eps_grid.size() + e].eps_effective);
      }
    }
  }
  // Full sampling is the base mechanism itself.
  EXPECT_NEAR(rows.back().eps_effective, 1.0, 1e-9);
  EXPECT_EQ(rows.back().rate_or_maxpi, 1.0);
}

TEST(SweepTest, FailedCellsAreRecorded) {
  const std::vector<SweepRow> rows =
      AmplificationSweep({{"too_big", Srswor{9}, UniformInstance(4)},
                          {"ok", Srswor{1}, UniformInstance(2)}},
                         {0.1}, BaseMechanismKind::kGeometric, kNoneY);
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_NE(rows[0].status, "ok");
  EXPECT_FALSE(rows[0].status.empty());
  EXPECT_EQ(rows[1].status, "ok");
}

TEST(SweepTest, CsvFormat) {
  std::vector<SweepRow> rows = {{"srswor(n=1)", 0.1, 0.25, 0.0259, "ok"},
                                {"a,b", 1.0, 0.5, 0.0, "bad, cell"}};
  EXPECT_EQ(FormatSweepCsv(rows),
            "design,epsilon,rate_or_maxpi,eps_effective,status\n"
            "srswor(n=1),0.1,0.25,0.0259,ok\n"
            "a;b,1,0.5,0,bad; cell\n");
}

TEST(ComposedImputationTest, BoundedBySumOfBudgets) {
  const AuditInstance instance = ImputationInstance();
  for (auto [eps1, eps2] :
       {std::pair{0.5, 0.5}, std::pair{0.2, 1.0}, std::pair{1.0, 0.3}}) {
    ASSERT_OK_AND_ASSIGN(OutputDistribution mechanism,
                         ComposedImputationMechanism(instance, eps1, eps2));
    ASSERT_OK_AND_ASSIGN(
        EffectiveEpsilonReport report,
        EffectiveEpsilon(instance, kNoneY, eps1 + eps2, mechanism));
    EXPECT_FALSE(report.infinite);
    EXPECT_LE(report.eps_effective, eps1 + eps2 + 1e-6);
    EXPECT_GT(report.eps_effective, 0.0);
  }
}

}  // namespace
}  // namespace survey_dp
