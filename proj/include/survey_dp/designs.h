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

#ifndef SURVEY_DP_DESIGNS_H_
#define SURVEY_DP_DESIGNS_H_

#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "absl/status/statusor.h"
#include "absl/types/span.h"
#include "survey_dp/frame.h"
#include "survey_dp/random.h"

namespace survey_dp {

enum class Allocation { kProportional, kNeyman };
enum class SystematicOrdering { kFrameOrder, kRandomOrder };

// Simple random sampling with replacement: n independent uniform draws.
struct Srswr {
  int64_t n;
};
// Simple random sampling without replacement.
struct Srswor {
  int64_t n;
};
// Independent Bernoulli(rate) inclusion per unit.
struct PoissonSampling {
  double rate;
};
// SRSWOR within each stratum after allocating n across strata.
struct StratifiedSrswor {
  int64_t n;
  Allocation allocation;
};
// SRSWOR of whole clusters; every unit of a selected cluster is observed.
struct ClusterSrswor {
  int64_t clusters;
};
// Fixed-size proportional-to-size sampling without replacement, realised as
// conditional Poisson sampling whose inclusion probabilities equal
// n * x_i / sum(x).
struct Pps {
  int64_t n;
};
// Fractional-interval systematic sampling over the frame order, or over a
// uniformly random permutation of it.
struct Systematic {
  int64_t n;
  SystematicOrdering ordering;
};

using SamplingDesign =
    std::variant<Srswr, Srswor, PoissonSampling, StratifiedSrswor,
                 ClusterSrswor, Pps, Systematic>;

std::string DesignName(const SamplingDesign& design);

absl::Status ValidateDesign(const SamplingDesign& design, const Frame& frame);

// Number of (possibly repeated) units every sample contains, when constant.
std::optional<int64_t> FixedSampleSize(const SamplingDesign& design,
                                       const Frame& frame);

// True when the inclusion probabilities depend only on frame structure
// (size and labels), not on y or x.
bool HasDataIndependentWeights(const SamplingDesign& design);

// Marginal probability that each frame unit appears in the sample.
absl::StatusOr<std::vector<double>> InclusionProbs(const SamplingDesign& design,
                                                   const Frame& frame);

// w_i = 1 / pi_i.
absl::StatusOr<std::vector<double>> DesignWeights(absl::Span<const double> pi);

struct StratumAllocation {
  std::string label;
  int64_t population = 0;
  int64_t size = 0;
};

// Integer allocation of n across strata (sorted by label). Neyman uses the
// population standard deviation of y within each stratum.
absl::StatusOr<std::vector<StratumAllocation>> AllocateStrata(
    Allocation allocation, const Frame& frame, int64_t n);

// Largest-remainder rounding of n * score_h / sum(score) with every stratum
// receiving between 1 and its capacity. Ties go to the lower index.
absl::StatusOr<std::vector<int64_t>> AllocateIntegers(
    absl::Span<const double> scores, absl::Span<const int64_t> capacities,
    int64_t n);

struct SampledUnit {
  int64_t id = 0;
  size_t index = 0;  // position in the frame
  double pi = 0.0;
  double weight = 0.0;
  int64_t multiplicity = 1;
};

struct WeightedSample {
  std::vector<SampledUnit> units;

  size_t size() const { return units.size(); }
  bool empty() const { return units.empty(); }
};

absl::StatusOr<WeightedSample> Draw(const SamplingDesign& design,
                                    const Frame& frame, Rng& rng);

// One outcome of the design: sorted frame positions (repeated for draws with
// replacement) and its probability.
struct SampleOutcome {
  std::vector<size_t> units;
  double probability = 0.0;
};

// Default cap on enumerated outcomes; overridable through the
// SURVEY_DP_ENUM_CAP environment variable.
size_t DefaultEnumerationCap();

absl::StatusOr<std::vector<SampleOutcome>> SampleSpace(
    const SamplingDesign& design, const Frame& frame,
    size_t cap = DefaultEnumerationCap());

// Attaches pi and weights to a set of frame positions (repeats collapse into
// multiplicity).
absl::StatusOr<WeightedSample> MakeWeightedSample(
    const Frame& frame, absl::Span<const size_t> positions,
    absl::Span<const double> pi);

}  // namespace survey_dp

#endif  // SURVEY_DP_DESIGNS_H_
