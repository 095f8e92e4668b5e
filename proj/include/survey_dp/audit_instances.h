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

#ifndef SURVEY_DP_AUDIT_INSTANCES_H_
#define SURVEY_DP_AUDIT_INSTANCES_H_

#include <string>
#include <vector>

#include "absl/status/statusor.h"
#include "survey_dp/audit.h"
#include "survey_dp/designs.h"

namespace survey_dp {

// Desk-scale library: N <= 6, binary y grid, at most two size measures.
std::vector<AuditInstance> BundledInstances();

// Looks up a bundled or named reference instance.
absl::StatusOr<AuditInstance> FindInstance(const std::string& name);

// Every fixed-size design from the designs module that is valid on the
// instance's frame, labelled for reporting.
struct LabelledDesign {
  std::string label;
  SamplingDesign design;
};
std::vector<LabelledDesign> BundledDesigns(const AuditInstance& instance);

// N units with x = 1, one stratum, one cluster per unit.
AuditInstance UniformInstance(size_t n);

// N = 3, x = (1, 1, 2), x grid {1, 2}, binary y. Under PPS with n = 1 the
// weights depend on x.
AuditInstance PpsReferenceInstance();

// N = 4 in two clusters of two ({0, 1} and {2, 3}).
AuditInstance TwoClusterInstance();

// N = 6 with two strata, three clusters and two size measures.
AuditInstance PeriodicInstance();

// n = 1 PPS frames whose largest inclusion probability is 0.2, 0.4 or 0.6.
absl::StatusOr<AuditInstance> PpsMaxPiInstance(double max_pi);

// N = 4 with the last `missing` records lacking y.
AuditInstance HotDeckInstance(size_t missing);

// N = 3 with the last record lacking y.
AuditInstance ImputationInstance();

// N = 4 in strata {A, A, B, B}; a change to one y changes the stratum
// spread and with it the Neyman allocation.
AuditInstance NeymanReferenceInstance();

}  // namespace survey_dp

#endif  // SURVEY_DP_AUDIT_INSTANCES_H_
