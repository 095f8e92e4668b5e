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

#include "survey_dp/designs.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <string>
#include <vector>

#include "gtest/gtest.h"
#include "survey_dp/audit_instances.h"
#include "test_util.h"

namespace survey_dp {
namespace {

Frame MakeFrame(const std::vector<double>& x,
                const std::vector<std::string>& strata = {},
                const std::vector<double>& y = {}) {
  std::vector<FrameRecord> records;
  for (size_t i = 0; i < x.size(); ++i) {
    FrameRecord r;
    r.id = static_cast<int64_t>(i + 1);
    r.x = x[i];
    r.y = y.empty() ? 0.0 : y[i];
    r.stratum = strata.empty() ? "s" : strata[i];
    r.cluster = "c" + std::to_string(i);
    records.push_back(r);
  }
  return *Frame::Create(std::move(records));
}

Frame Uniform(size_t n) { return MakeFrame(std::vector<double>(n, 1.0)); }

TEST(InclusionProbsTest, PpsFormula) {
  ASSERT_OK_AND_ASSIGN(std::vector<double> pi,
                       InclusionProbs(Pps{1}, MakeFrame({1, 2, 3})));
  EXPECT_DOUBLE_EQ(pi[0], 1.0 / 6.0);
  EXPECT_DOUBLE_EQ(pi[1], 1.0 / 3.0);
  EXPECT_DOUBLE_EQ(pi[2], 1.0 / 2.0);
}

TEST(InclusionProbsTest, EqualProbabilityDesigns) {
  ASSERT_OK_AND_ASSIGN(std::vector<double> srs,
                       InclusionProbs(Srswor{2}, Uniform(4)));
  EXPECT_EQ(srs, std::vector<double>(4, 0.5));
  ASSERT_OK_AND_ASSIGN(std::vector<double> poisson,
                       InclusionProbs(PoissonSampling{0.3}, Uniform(5)));
  EXPECT_EQ(poisson, std::vector<double>(5, 0.3));
}

TEST(InclusionProbsTest, PpsCertaintyViolationNamesUnit) {
  absl::StatusOr<std::vector<double>> pi =
      InclusionProbs(Pps{2}, MakeFrame({1, 1, 6}));
  ASSERT_FALSE(pi.ok());
  EXPECT_NE(pi.status().message().find("unit 3"), std::string::npos)
      << pi.status();
}

TEST(InclusionProbsTest, RejectsInvalidDesigns) {
  EXPECT_FALSE(InclusionProbs(Srswor{5}, Uniform(4)).ok());
  EXPECT_FALSE(InclusionProbs(PoissonSampling{0.0}, Uniform(4)).ok());
  EXPECT_FALSE(InclusionProbs(PoissonSampling{1.5}, Uniform(4)).ok());
  EXPECT_FALSE(InclusionProbs(ClusterSrswor{5}, Uniform(4)).ok());
  EXPECT_FALSE(Frame::Create({}).ok());
}

TEST(InclusionProbsTest, PpsInvariantToRescaling) {
  // Power-of-two factors keep every product exact, so equality is exact.
  const std::vector<double> x = {1.0, 2.5, 3.0, 0.75, 4.0};
  ASSERT_OK_AND_ASSIGN(std::vector<double> base,
                       InclusionProbs(Pps{2}, MakeFrame(x)));
  for (double c : {2.0, 0.25, 1024.0}) {
    std::vector<double> scaled = x;
    for (double& v : scaled) v *= c;
    ASSERT_OK_AND_ASSIGN(std::vector<double> pi,
                         InclusionProbs(Pps{2}, MakeFrame(scaled)));
    EXPECT_EQ(pi, base) << "c=" << c;
  }
}

TEST(DesignWeightsTest, Reciprocal) {
  ASSERT_OK_AND_ASSIGN(std::vector<double> w, DesignWeights({0.5, 0.25}));
  EXPECT_EQ(w, (std::vector<double>{2.0, 4.0}));
  ASSERT_OK_AND_ASSIGN(std::vector<double> certainty, DesignWeights({1.0}));
  EXPECT_EQ(certainty, std::vector<double>{1.0});
  ASSERT_OK_AND_ASSIGN(std::vector<double> pi,
                       InclusionProbs(Srswor{2}, Uniform(10)));
  ASSERT_OK_AND_ASSIGN(std::vector<double> equal, DesignWeights(pi));
  for (double v : equal) EXPECT_DOUBLE_EQ(v, 5.0);
}

TEST(DesignWeightsTest, RejectsNonPositive) {
  EXPECT_FALSE(DesignWeights({0.5, 0.0}).ok());
  EXPECT_FALSE(DesignWeights({-0.1}).ok());
  EXPECT_FALSE(DesignWeights({1.5}).ok());
}

std::vector<int64_t> Sizes(const std::vector<StratumAllocation>& a) {
  std::vector<int64_t> out;
  for (const StratumAllocation& s : a) out.push_back(s.size);
  return out;
}

TEST(AllocateStrataTest, Proportional) {
  std::vector<std::string> strata(100, "A");
  std::fill(strata.begin() + 60, strata.end(), "B");
  const Frame frame = MakeFrame(std::vector<double>(100, 1.0), strata);
  ASSERT_OK_AND_ASSIGN(auto alloc,
                       AllocateStrata(Allocation::kProportional, frame, 10));
  EXPECT_EQ(Sizes(alloc), (std::vector<int64_t>{6, 4}));

  ASSERT_OK_AND_ASSIGN(
      auto single, AllocateStrata(Allocation::kProportional, Uniform(8), 5));
  EXPECT_EQ(Sizes(single), std::vector<int64_t>{5});
}

// Neyman allocation minimises sum_h N_h^2 S_h^2 / n_h; the oracle searches all
// integer allocations directly.
TEST(AllocateStrataTest, NeymanMatchesBruteForceMinimum) {
  std::vector<std::string> strata;
  std::vector<double> y;
  for (int i = 0; i < 50; ++i) {
    strata.push_back("A");
    y.push_back(i % 2 == 0 ? 0.0 : 2.0);  // population SD 1
  }
  for (int i = 0; i < 50; ++i) {
    strata.push_back("B");
    y.push_back(i % 2 == 0 ? 0.0 : 6.0);  // population SD 3
  }
  const Frame frame = MakeFrame(std::vector<double>(100, 1.0), strata, y);
  ASSERT_OK_AND_ASSIGN(auto alloc,
                       AllocateStrata(Allocation::kNeyman, frame, 8));
  EXPECT_EQ(Sizes(alloc), (std::vector<int64_t>{2, 6}));

  const double nh_sh[2] = {50.0 * 1.0, 50.0 * 3.0};
  double best = std::numeric_limits<double>::infinity();
  int64_t best_a = 0;
  for (int64_t a = 1; a <= 7; ++a) {
    const double variance =
        nh_sh[0] * nh_sh[0] / a + nh_sh[1] * nh_sh[1] / (8 - a);
    if (variance < best) {
      best = variance;
      best_a = a;
    }
  }
  EXPECT_EQ(alloc[0].size, best_a);
}

TEST(AllocateStrataTest, RejectsTooFewUnits) {
  const Frame frame = MakeFrame({1, 1, 1}, {"A", "B", "C"});
  EXPECT_FALSE(AllocateStrata(Allocation::kProportional, frame, 2).ok());
}

TEST(AllocateIntegersTest, SumsExactlyAndRespectsBounds) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> score(0.0, 5.0);
  for (int trial = 0; trial < 200; ++trial) {
    const size_t strata = 2 + trial % 5;
    std::vector<double> scores(strata);
    std::vector<int64_t> caps(strata);
    int64_t total_cap = 0;
    for (size_t h = 0; h < strata; ++h) {
      scores[h] = score(rng);
      caps[h] = 1 + static_cast<int64_t>(rng() % 6);
      total_cap += caps[h];
    }
    const int64_t n = static_cast<int64_t>(strata) +
                      static_cast<int64_t>(rng() % (total_cap - strata + 1));
    ASSERT_OK_AND_ASSIGN(std::vector<int64_t> sizes,
                         AllocateIntegers(scores, caps, n));
    EXPECT_EQ(std::accumulate(sizes.begin(), sizes.end(), int64_t{0}), n);
    for (size_t h = 0; h < strata; ++h) {
      EXPECT_GE(sizes[h], 1);
      EXPECT_LE(sizes[h], caps[h]);
    }
  }
}

TEST(DrawTest, ExhaustiveDesignsTakeTheWholeFrame) {
  const Frame frame = Uniform(5);
  for (uint64_t seed = 0; seed < 10; ++seed) {
    Rng rng(seed);
    ASSERT_OK_AND_ASSIGN(WeightedSample all, Draw(Srswor{5}, frame, rng));
    EXPECT_EQ(all.size(), 5u);
    ASSERT_OK_AND_ASSIGN(WeightedSample poisson,
                         Draw(PoissonSampling{1.0}, frame, rng));
    EXPECT_EQ(poisson.size(), 5u);
  }
}

TEST(DrawTest, SrsworInclusionFrequencies) {
  const Frame frame = Uniform(5);
  Rng rng(2024);
  constexpr int kDraws = 100000;
  std::vector<int> hits(5, 0);
  for (int i = 0; i < kDraws; ++i) {
    WeightedSample s = *Draw(Srswor{2}, frame, rng);
    for (const SampledUnit& u : s.units) ++hits[u.index];
  }
  for (int h : hits) EXPECT_NEAR(static_cast<double>(h) / kDraws, 0.4, 0.01);
}

TEST(DrawTest, WeightsAreReciprocalProbabilities) {
  const Frame frame = MakeFrame({1, 2, 3, 4, 2, 1});
  Rng rng(8);
  for (const SamplingDesign& design : std::vector<SamplingDesign>{
           Pps{2}, Srswor{3}, PoissonSampling{0.4}, Srswr{3}}) {
    WeightedSample s = *Draw(design, frame, rng);
    for (const SampledUnit& u : s.units) {
      EXPECT_GT(u.pi, 0.0);
      EXPECT_LE(u.pi, 1.0);
      EXPECT_EQ(u.weight, 1.0 / u.pi);
    }
  }
}

TEST(DrawTest, DeterministicGivenSeed) {
  const Frame frame = MakeFrame({1, 2, 3, 4, 2, 1});
  for (const SamplingDesign& design : std::vector<SamplingDesign>{
           Pps{2}, Srswor{3},
           Systematic{4, SystematicOrdering::kRandomOrder}}) {
    Rng a(77);
    Rng b(77);
    WeightedSample sa = *Draw(design, frame, a);
    WeightedSample sb = *Draw(design, frame, b);
    ASSERT_EQ(sa.size(), sb.size());
    for (size_t i = 0; i < sa.size(); ++i) {
      EXPECT_EQ(sa.units[i].id, sb.units[i].id);
    }
  }
}

TEST(DrawTest, PpsFrequenciesMatchInclusionProbs) {
  const Frame frame = MakeFrame({1, 2, 3, 4});
  const std::vector<double> pi = *InclusionProbs(Pps{2}, frame);
  Rng rng(31);
  constexpr int kDraws = 100000;
  std::vector<int> hits(4, 0);
  for (int i = 0; i < kDraws; ++i) {
    const WeightedSample s = *Draw(Pps{2}, frame, rng);
    for (const SampledUnit& u : s.units) ++hits[u.index];
  }
  for (size_t i = 0; i < 4; ++i) {
    EXPECT_NEAR(static_cast<double>(hits[i]) / kDraws, pi[i], 0.01);
  }
}

TEST(SampleSpaceTest, Examples) {
  ASSERT_OK_AND_ASSIGN(auto srs, SampleSpace(Srswor{2}, Uniform(3)));
  ASSERT_EQ(srs.size(), 3u);
  for (const SampleOutcome& o : srs) EXPECT_DOUBLE_EQ(o.probability, 1.0 / 3.0);

  ASSERT_OK_AND_ASSIGN(auto poisson,
                       SampleSpace(PoissonSampling{0.5}, Uniform(2)));
  ASSERT_EQ(poisson.size(), 4u);
  for (const SampleOutcome& o : poisson) EXPECT_DOUBLE_EQ(o.probability, 0.25);

  ASSERT_OK_AND_ASSIGN(
      auto systematic,
      SampleSpace(Systematic{2, SystematicOrdering::kFrameOrder}, Uniform(4)));
  ASSERT_EQ(systematic.size(), 2u);
  EXPECT_EQ(systematic[0].units, (std::vector<size_t>{0, 2}));
  EXPECT_EQ(systematic[1].units, (std::vector<size_t>{1, 3}));
  EXPECT_DOUBLE_EQ(systematic[0].probability, 0.5);
  EXPECT_DOUBLE_EQ(systematic[1].probability, 0.5);
}

TEST(SampleSpaceTest, CapNamesTheCount) {
  absl::StatusOr<std::vector<SampleOutcome>> space =
      SampleSpace(Srswor{3}, Uniform(10), 100);
  ASSERT_FALSE(space.ok());
  EXPECT_EQ(space.status().code(), absl::StatusCode::kResourceExhausted);
  EXPECT_NE(space.status().message().find("intractable enumeration"),
            std::string::npos);
  EXPECT_NE(space.status().message().find("120"), std::string::npos);
}

// Library of desk-scale frames for the quantified properties.
std::vector<Frame> FrameLibrary() {
  std::vector<Frame> out;
  for (const AuditInstance& instance : BundledInstances()) {
    if (instance.frame.size() >= 3) out.push_back(instance.frame);
  }
  return out;
}

TEST(SampleSpacePropertyTest, ProbabilitiesAndMarginals) {
  const std::vector<Frame> frames = FrameLibrary();
  ASSERT_GE(frames.size(), 5u);
  for (const Frame& frame : frames) {
    std::vector<LabelledDesign> designs = BundledDesigns(AuditInstance{
        "f", frame, AuditUniverse{}, {}, DefaultEnumerationCap()});
    designs.push_back({"poisson", PoissonSampling{0.35}});
    for (const LabelledDesign& d : designs) {
      SCOPED_TRACE(d.label);
      ASSERT_OK_AND_ASSIGN(auto space, SampleSpace(d.design, frame));
      ASSERT_OK_AND_ASSIGN(auto pi, InclusionProbs(d.design, frame));
      double total = 0.0;
      double expected_size = 0.0;
      std::vector<double> marginal(frame.size(), 0.0);
      for (const SampleOutcome& o : space) {
        EXPECT_GT(o.probability, 0.0);
        total += o.probability;
        expected_size += o.probability * static_cast<double>(o.units.size());
        std::vector<size_t> distinct = o.units;
        distinct.erase(std::unique(distinct.begin(), distinct.end()),
                       distinct.end());
        for (size_t u : distinct) marginal[u] += o.probability;
      }
      EXPECT_NEAR(total, 1.0, 1e-12);
      for (size_t i = 0; i < frame.size(); ++i) {
        EXPECT_NEAR(marginal[i], pi[i], 1e-12) << "unit " << i;
      }
      if (std::optional<int64_t> n = FixedSampleSize(d.design, frame)) {
        EXPECT_NEAR(expected_size, static_cast<double>(*n), 1e-12);
        for (const SampleOutcome& o : space) {
          EXPECT_EQ(o.units.size(), static_cast<size_t>(*n));
        }
      }
    }
  }
}

TEST(SystematicTest, FrameOrderHasNOverNOutcomesWhenIntegral) {
  for (size_t n_units : {4u, 6u, 8u, 9u}) {
    for (int64_t n = 1; n <= static_cast<int64_t>(n_units); ++n) {
      if (n_units % n != 0) continue;
      ASSERT_OK_AND_ASSIGN(
          auto space,
          SampleSpace(Systematic{n, SystematicOrdering::kFrameOrder},
                      Uniform(n_units)));
      EXPECT_EQ(space.size(), n_units / n) << "N=" << n_units << " n=" << n;
    }
  }
}

TEST(SystematicTest, FractionalIntervalAlwaysGivesNUnits) {
  ASSERT_OK_AND_ASSIGN(
      auto space,
      SampleSpace(Systematic{3, SystematicOrdering::kFrameOrder}, Uniform(7)));
  for (const SampleOutcome& o : space) EXPECT_EQ(o.units.size(), 3u);
}

// Oracle: enumerate every ordering of the frame and every random start, and
// tally the subsets systematic sampling would select.
TEST(SystematicTest, RandomOrderEnumerationMatchesSrswor) {
  constexpr size_t kUnits = 5;
  for (int64_t n : {2, 3}) {
    std::vector<size_t> perm(kUnits);
    std::iota(perm.begin(), perm.end(), 0);
    std::map<std::vector<size_t>, double> tally;
    double outcomes = 0.0;
    do {
      for (size_t a = 0; a < kUnits; ++a) {
        std::vector<size_t> s;
        for (int64_t j = 0; j < n; ++j) {
          s.push_back(perm[(a + j * kUnits) / n]);
        }
        std::sort(s.begin(), s.end());
        tally[s] += 1.0;
        outcomes += 1.0;
      }
    } while (std::next_permutation(perm.begin(), perm.end()));
    ASSERT_OK_AND_ASSIGN(auto srs, SampleSpace(Srswor{n}, Uniform(kUnits)));
    ASSERT_EQ(tally.size(), srs.size());
    for (const SampleOutcome& o : srs) {
      EXPECT_NEAR(tally[o.units] / outcomes, o.probability, 1e-12);
    }
    ASSERT_OK_AND_ASSIGN(
        auto random_order,
        SampleSpace(Systematic{n, SystematicOrdering::kRandomOrder},
                    Uniform(kUnits)));
    ASSERT_EQ(random_order.size(), srs.size());
    for (size_t i = 0; i < srs.size(); ++i) {
      EXPECT_EQ(random_order[i].units, srs[i].units);
      EXPECT_NEAR(random_order[i].probability, srs[i].probability, 1e-12);
    }
  }
}

TEST(SystematicTest, RandomOrderDrawsMatchSrsworMarginals) {
  const Frame frame = Uniform(6);
  Rng rng(4);
  constexpr int kDraws = 60000;
  std::vector<int> hits(6, 0);
  for (int i = 0; i < kDraws; ++i) {
    const WeightedSample s =
        *Draw(Systematic{2, SystematicOrdering::kRandomOrder}, frame, rng);
    for (const SampledUnit& u : s.units) ++hits[u.index];
  }
  for (int h : hits)
    EXPECT_NEAR(static_cast<double>(h) / kDraws, 1.0 / 3.0, 0.01);
}

TEST(SrswrTest, MultisetProbabilities) {
  ASSERT_OK_AND_ASSIGN(auto space, SampleSpace(Srswr{2}, Uniform(2)));
  ASSERT_EQ(space.size(), 3u);
  std::map<std::vector<size_t>, double> p;
  for (const SampleOutcome& o : space) p[o.units] = o.probability;
  EXPECT_DOUBLE_EQ((p[{0, 0}]), 0.25);
  EXPECT_DOUBLE_EQ((p[{0, 1}]), 0.5);
  EXPECT_DOUBLE_EQ((p[{1, 1}]), 0.25);
}

}  // namespace
}  // namespace survey_dp
