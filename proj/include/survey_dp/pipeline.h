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

#ifndef SURVEY_DP_PIPELINE_H_
#define SURVEY_DP_PIPELINE_H_

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "absl/status/statusor.h"
#include "absl/strings/string_view.h"
#include "survey_dp/amplification.h"
#include "survey_dp/designs.h"
#include "survey_dp/estimators.h"
#include "survey_dp/frame.h"
#include "survey_dp/impute.h"
#include "survey_dp/neighbor_relation.h"
#include "survey_dp/report.h"

namespace survey_dp {

// Stage at which the DP mechanism begins; every later stage runs inside it.
enum class MechanismStart { kFrame, kRespondingSample, kProcessedData };

std::string MechanismStartName(MechanismStart start);
absl::StatusOr<MechanismStart> ParseMechanismStart(const std::string& name);

// A single-stage design, or a two-stage design: `design` selects clusters
// (it must be ClusterSrswor) and `within` is applied inside each selected
// cluster.
struct DesignSpec {
  SamplingDesign design = Srswor{1};
  std::optional<SamplingDesign> within;
};

enum class ResponseModel { kFull, kPropensity };
enum class CellVariable { kStratum, kCluster };

struct WeightBounds {
  double lower = 0.0;
  double upper = 0.0;
};

struct AdjustmentSpec {
  CellVariable cells = CellVariable::kStratum;
  // Applies only when the response model produces nonrespondents.
  bool nonresponse = true;
  // Experimental DP propensities from noisy cell counts.
  std::optional<double> dp_epsilon;
  std::map<std::string, double> benchmarks;
  std::optional<WeightBounds> regularize;
};

enum class ImputationMethod { kNone, kMean, kRegression, kHotDeck };

struct ImputationSpec {
  ImputationMethod method = ImputationMethod::kNone;
  // Fit budget for the parametric methods.
  double epsilon = 0.0;
  bool stochastic = false;
  FitRows fit_rows = FitRows::kCompleteCases;
};

// Which units the maximum weight in the fixed-weight bound ranges over.
enum class WeightMaxScope { kFrame, kUniverse };

struct ReleaseSpec {
  std::string label;
  EstimatorKind statistic = EstimatorKind::kHtMean;
  double epsilon = 0.0;
  // Externally audited sensitivity.
  std::optional<double> sensitivity;
  // Compute the sensitivity with the audit oracle on the configured frame.
  bool audit_sensitivity = false;
  WeightMaxScope weight_max = WeightMaxScope::kFrame;
};

struct AuditSpec {
  bool design_stage = false;
  size_t threads = 1;
  BaseMechanismKind base = BaseMechanismKind::kGeometric;
};

struct PipelineConfig {
  std::string frame_path;
  ValueUniverse universe;
  std::optional<int64_t> population_size;
  DesignSpec design;
  ResponseModel response = ResponseModel::kFull;
  std::optional<AdjustmentSpec> adjustment;
  ImputationSpec imputation;
  std::vector<ReleaseSpec> releases;
  MechanismStart start = MechanismStart::kFrame;
  Invariant invariant = Invariant::kPopulation;
  double total_budget = 0.0;
  uint64_t seed = 0;
  AuditSpec audit;
};

// The neighbour relation of each supported (start, invariant) pair:
// (processed-data, none), (frame, population) and (responding-sample, frame).
absl::StatusOr<NeighborRelation> SupportedRelation(MechanismStart start,
                                                   Invariant invariant);

// Strict JSON parsing: unknown keys are errors that name the key path. A
// relative frame path is resolved against `base_dir`.
absl::StatusOr<PipelineConfig> ParseConfig(absl::string_view text,
                                           const std::string& base_dir = "");
absl::StatusOr<PipelineConfig> ReadConfig(const std::string& path);

// Parses one design object, e.g. {"type": "srswor", "n": 2}.
absl::StatusOr<DesignSpec> ParseDesignJson(absl::string_view text);

absl::StatusOr<std::vector<double>> DesignInclusionProbs(const DesignSpec& spec,
                                                         const Frame& frame);
absl::StatusOr<WeightedSample> DrawDesign(const DesignSpec& spec,
                                          const Frame& frame, Rng& rng);

// Runs every stage on `frame`; deterministic given the seed.
absl::StatusOr<RunReport> RunPipeline(const PipelineConfig& config,
                                      const Frame& frame, uint64_t seed);
// Reads the frame named in the config.
absl::StatusOr<RunReport> RunPipeline(const PipelineConfig& config,
                                      uint64_t seed);

}  // namespace survey_dp

#endif  // SURVEY_DP_PIPELINE_H_
